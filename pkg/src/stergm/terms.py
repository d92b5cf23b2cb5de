"""Sufficient-statistic term catalog.

Each term evaluates on a phase network (the formation network y⁺ or the
dissolution network y⁻) and provides an exact change score: the difference
in the statistic caused by toggling a single dyad.  Change scores drive
both Metropolis-Hastings acceptance and the logistic initialization of the
fitter, so they are tested against full re-evaluation.

Terms marked implicitly dynamic ignore y_prev; `isolate_from_multiple`
is explicitly dynamic and reads the pre-transition network directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .network import DyadCovariate, Network, NodeCovariate, canonical_dyad

__all__ = ["TermSpec", "Term", "TermError", "build_terms", "TERM_KINDS"]


class TermError(ValueError):
    """Invalid term specification or term/network mismatch."""


@dataclass(frozen=True)
class TermSpec:
    """A term name plus its term-specific arguments."""

    kind: str
    args: tuple = ()

    @property
    def label(self) -> str:
        if not self.args:
            return self.kind
        return f"{self.kind}({', '.join(str(a) for a in self.args)})"


@dataclass
class ModelContext:
    """Everything a term may reference when bound to a node set."""

    n: int
    directed: bool
    node_attrs: dict[str, NodeCovariate] = field(default_factory=dict)
    dyad_covs: dict[str, DyadCovariate] = field(default_factory=dict)


class Term:
    """One scalar statistic with exact single-toggle change scores."""

    #: None = usable in either phase; "dissolution" = dissolution only.
    phase_restriction: str | None = None

    def __init__(self, spec: TermSpec):
        self.spec = spec

    @property
    def label(self) -> str:
        return self.spec.label

    def evaluate(self, y, y_prev) -> float:
        raise NotImplementedError

    def change(self, y, y_prev, i: int, j: int, add: bool) -> float:
        """Statistic after toggling (i,j) in y, minus the current value.

        `add` must reflect the dyad's current absence/presence in y.
        """
        raise NotImplementedError


class EdgesTerm(Term):
    def evaluate(self, y, y_prev):
        return float(y.edge_count)

    def change(self, y, y_prev, i, j, add):
        return 1.0 if add else -1.0


class MixingTerm(Term):
    """Count of ties from group g1 to group g2 (between, when undirected)."""

    def __init__(self, spec, ctx: ModelContext):
        super().__init__(spec)
        attr, g1, g2 = spec.args
        if attr not in ctx.node_attrs:
            raise TermError(f"mixing term references unknown attribute {attr!r}")
        cov = ctx.node_attrs[attr]
        self.g1, self.g2 = str(g1), str(g2)
        self.groups = tuple(str(cov.value(i)) for i in range(1, ctx.n + 1))
        present = set(self.groups)
        for g in (self.g1, self.g2):
            if g not in present:
                raise TermError(f"attribute {attr!r} has no group {g!r}")
        self.directed = ctx.directed

    def _indicator(self, i, j) -> float:
        gi, gj = self.groups[i - 1], self.groups[j - 1]
        if self.directed:
            return 1.0 if (gi == self.g1 and gj == self.g2) else 0.0
        return 1.0 if {gi, gj} == {self.g1, self.g2} else 0.0

    def evaluate(self, y, y_prev):
        return sum(self._indicator(i, j) for (i, j) in y.ties)

    def change(self, y, y_prev, i, j, add):
        s = self._indicator(i, j)
        return s if add else -s


class DegreeTerm(Term):
    """Number of actors with degree exactly d (undirected)."""

    def __init__(self, spec, ctx: ModelContext):
        super().__init__(spec)
        if ctx.directed:
            raise TermError("degree(d) is defined for undirected networks")
        (d,) = spec.args
        self.d = int(d)
        if self.d < 0:
            raise TermError(f"degree level must be >= 0, got {self.d}")

    def evaluate(self, y, y_prev):
        return float(sum(1 for i in range(1, y.n + 1) if len(y.neighbors(i)) == self.d))

    def change(self, y, y_prev, i, j, add):
        step = 1 if add else -1
        delta = 0.0
        for w in (i, j):
            before = len(y.neighbors(w))
            after = before + step
            delta += (after == self.d) - (before == self.d)
        return delta


class ReciprocityTerm(Term):
    def __init__(self, spec, ctx: ModelContext):
        super().__init__(spec)
        if not ctx.directed:
            raise TermError("reciprocity requires a directed network")

    def evaluate(self, y, y_prev):
        return float(sum(1 for (i, j) in y.ties if i < j and y.has(j, i)))

    def change(self, y, y_prev, i, j, add):
        rec = 1.0 if y.has(j, i) else 0.0
        return rec if add else -rec


def _two_path(y, a, b, excl=None) -> bool:
    """Does a directed two-path a→k→b exist (with k != excl)?"""
    ks = y.out_neighbors(a) & y.in_neighbors(b)
    if excl is not None:
        return bool(ks - {excl})
    return bool(ks)


def _cycle_path(y, a, b, excl=None) -> bool:
    """Does a k with k→a and b→k exist (with k != excl)?"""
    ks = y.in_neighbors(a) & y.out_neighbors(b)
    if excl is not None:
        return bool(ks - {excl})
    return bool(ks)


class TransitiveTiesTerm(Term):
    """Ties (i,j) with at least one two-path i→k→j."""

    def __init__(self, spec, ctx: ModelContext):
        super().__init__(spec)
        if not ctx.directed:
            raise TermError("transitive_ties requires a directed network")

    def evaluate(self, y, y_prev):
        return float(sum(1 for (i, j) in y.ties if _two_path(y, i, j)))

    def change(self, y, y_prev, u, v, add):
        delta = 0.0
        if add:
            if _two_path(y, u, v):
                delta += 1.0
            # new two-paths u→v→l and k→u→v may switch other ties' indicators on
            for l in y.out_neighbors(v):
                if l != u and y.has(u, l) and not _two_path(y, u, l):
                    delta += 1.0
            for k in y.in_neighbors(u):
                if k != v and y.has(k, v) and not _two_path(y, k, v):
                    delta += 1.0
        else:
            if _two_path(y, u, v):
                delta -= 1.0
            for l in y.out_neighbors(v):
                if l != u and y.has(u, l) and not _two_path(y, u, l, excl=v):
                    delta -= 1.0
            for k in y.in_neighbors(u):
                if k != v and y.has(k, v) and not _two_path(y, k, v, excl=u):
                    delta -= 1.0
        return delta


class CyclicalTiesTerm(Term):
    """Ties (i,j) closing at least one three-cycle i→j→k→i."""

    def __init__(self, spec, ctx: ModelContext):
        super().__init__(spec)
        if not ctx.directed:
            raise TermError("cyclical_ties requires a directed network")

    def evaluate(self, y, y_prev):
        return float(sum(1 for (i, j) in y.ties if _cycle_path(y, i, j)))

    def change(self, y, y_prev, u, v, add):
        delta = 0.0
        if add:
            if _cycle_path(y, u, v):
                delta += 1.0
            # the new edge u→v participates in other ties' cycles two ways:
            # as k→a for ties (v,b) with b→u, and as b→k for ties (a,u) with v→a
            for b in y.out_neighbors(v):
                if b != u and y.has(b, u) and not _cycle_path(y, v, b):
                    delta += 1.0
            for a in y.out_neighbors(v):
                if a != u and y.has(a, u) and not _cycle_path(y, a, u):
                    delta += 1.0
        else:
            if _cycle_path(y, u, v):
                delta -= 1.0
            for b in y.out_neighbors(v):
                if b != u and y.has(b, u) and not _cycle_path(y, v, b, excl=u):
                    delta -= 1.0
            for a in y.out_neighbors(v):
                if a != u and y.has(a, u) and not _cycle_path(y, a, u, excl=v):
                    delta -= 1.0
        return delta


class OutdegPopularitySqrtTerm(Term):
    """Sum over ties (i,j) of sqrt(in-degree of j); equals Σ_j indeg(j)^{3/2}."""

    def __init__(self, spec, ctx: ModelContext):
        super().__init__(spec)
        if not ctx.directed:
            raise TermError("odeg_pop_sqrt requires a directed network")

    def evaluate(self, y, y_prev):
        return float(sum(len(y.in_neighbors(j)) ** 1.5 for j in range(1, y.n + 1)))

    def change(self, y, y_prev, i, j, add):
        d = len(y.in_neighbors(j))
        if add:
            return (d + 1) ** 1.5 - d**1.5
        return (d - 1) ** 1.5 - d**1.5


class EdgeCovTerm(Term):
    def __init__(self, spec, ctx: ModelContext):
        super().__init__(spec)
        (name,) = spec.args
        if name not in ctx.dyad_covs:
            raise TermError(f"edge_cov references unknown dyad covariate {name!r}")
        self.cov = ctx.dyad_covs[str(name)]

    def evaluate(self, y, y_prev):
        return float(sum(self.cov.value(i, j) for (i, j) in y.ties))

    def change(self, y, y_prev, i, j, add):
        v = self.cov.value(i, j)
        return v if add else -v


class IsolateFromMultipleTerm(Term):
    """Actors with no partners in y⁻ among those with >= 2 partners before.

    Explicitly dynamic; dissolution phase only.  Partners are undirected
    neighbors; for directed networks, the union of in- and out-neighbors.
    """

    phase_restriction = "dissolution"

    def _eligible(self, y_prev, w) -> bool:
        return len(y_prev.neighbors(w)) >= 2

    def evaluate(self, y, y_prev):
        return float(
            sum(
                1
                for w in range(1, y.n + 1)
                if self._eligible(y_prev, w) and len(y.neighbors(w)) == 0
            )
        )

    def change(self, y, y_prev, i, j, add):
        # on removal, a reverse tie (j,i) keeps the partnership alive
        keep = y.directed and y.has(j, i)
        delta = 0.0
        for w, other in ((i, j), (j, i)):
            if not self._eligible(y_prev, w):
                continue
            before = len(y.neighbors(w)) == 0
            if add:
                after = False
            else:
                remaining = y.neighbors(w) if keep else y.neighbors(w) - {other}
                after = len(remaining) == 0
            delta += float(after) - float(before)
        return delta


TERM_KINDS = {
    "edges": (EdgesTerm, 0),
    "mixing": (MixingTerm, 3),
    "degree": (DegreeTerm, 1),
    "reciprocity": (ReciprocityTerm, 0),
    "transitive_ties": (TransitiveTiesTerm, 0),
    "cyclical_ties": (CyclicalTiesTerm, 0),
    "odeg_pop_sqrt": (OutdegPopularitySqrtTerm, 0),
    "edge_cov": (EdgeCovTerm, 1),
    "isolate_from_multiple": (IsolateFromMultipleTerm, 0),
}


def build_term(spec: TermSpec, ctx: ModelContext) -> Term:
    if spec.kind not in TERM_KINDS:
        raise TermError(f"unknown term kind {spec.kind!r}")
    cls, nargs = TERM_KINDS[spec.kind]
    if len(spec.args) != nargs:
        raise TermError(
            f"term {spec.kind!r} takes {nargs} argument(s), got {len(spec.args)}"
        )
    if cls is EdgesTerm or cls is IsolateFromMultipleTerm:
        return cls(spec)
    return cls(spec, ctx)


def build_terms(specs: list[TermSpec], ctx: ModelContext, phase: str) -> list[Term]:
    """Bind term specs to a node context, enforcing phase restrictions."""
    terms = []
    for spec in specs:
        term = build_term(spec, ctx)
        if term.phase_restriction is not None and term.phase_restriction != phase:
            raise TermError(
                f"term {spec.label!r} is restricted to the {term.phase_restriction} phase"
            )
        terms.append(term)
    return terms
