"""Network representation and formation/dissolution set algebra.

Networks are fixed-size node sets (labeled 1..n) with a set of ties.
Undirected ties are canonicalized to (min, max) at construction so that
set operations and equality work directly on the tie sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Network",
    "NodeCovariate",
    "DyadCovariate",
    "TransitionDecomposition",
    "decompose_transition",
    "apply_transition",
    "all_dyads",
    "n_dyads",
]


class NetworkError(ValueError):
    """Invalid network construction or incompatible operands."""


def canonical_dyad(i: int, j: int, directed: bool) -> tuple[int, int]:
    if directed or i < j:
        return (i, j)
    return (j, i)


def all_dyads(n: int, directed: bool) -> Iterator[tuple[int, int]]:
    """Iterate the full dyad set (no self-loops), in a fixed order."""
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            if not directed and i > j:
                continue
            yield (i, j)


def n_dyads(n: int, directed: bool) -> int:
    return n * (n - 1) if directed else n * (n - 1) // 2


@dataclass(frozen=True)
class Network:
    """An immutable network: node count, directedness, and tie set."""

    n: int
    directed: bool
    ties: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise NetworkError(f"node count must be >= 1, got {self.n}")
        for (i, j) in self.ties:
            if i == j:
                raise NetworkError(f"self-loop ({i},{j}) not allowed")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise NetworkError(f"tie ({i},{j}) out of node range 1..{self.n}")
            if not self.directed and i > j:
                raise NetworkError(
                    f"undirected tie ({i},{j}) not in canonical (min,max) order"
                )

    @classmethod
    def from_edges(
        cls, n: int, directed: bool, edges: Iterable[tuple[int, int]]
    ) -> "Network":
        """Build a network, canonicalizing undirected pairs and rejecting duplicates."""
        ties = set()
        for (i, j) in edges:
            if i == j:
                raise NetworkError(f"self-loop ({i},{j}) not allowed")
            d = canonical_dyad(i, j, directed)
            if d in ties:
                raise NetworkError(f"duplicate edge {d}")
            ties.add(d)
        return cls(n=n, directed=directed, ties=frozenset(ties))

    @classmethod
    def empty(cls, n: int, directed: bool) -> "Network":
        return cls(n=n, directed=directed, ties=frozenset())

    @classmethod
    def complete(cls, n: int, directed: bool) -> "Network":
        return cls(n=n, directed=directed, ties=frozenset(all_dyads(n, directed)))

    # -- basic queries ------------------------------------------------

    @property
    def edge_count(self) -> int:
        return len(self.ties)

    def has(self, i: int, j: int) -> bool:
        return canonical_dyad(i, j, self.directed) in self.ties

    @cached_property
    def _adjacency(self) -> tuple[dict, dict]:
        out: dict[int, set[int]] = {i: set() for i in range(1, self.n + 1)}
        inn: dict[int, set[int]] = {i: set() for i in range(1, self.n + 1)}
        for (i, j) in self.ties:
            out[i].add(j)
            inn[j].add(i)
            if not self.directed:
                out[j].add(i)
                inn[i].add(j)
        return out, inn

    def out_neighbors(self, i: int) -> set[int]:
        return self._adjacency[0][i]

    def in_neighbors(self, j: int) -> set[int]:
        return self._adjacency[1][j]

    def neighbors(self, i: int) -> set[int]:
        """Undirected neighbor set; for directed networks, out∪in."""
        if self.directed:
            return self._adjacency[0][i] | self._adjacency[1][i]
        return self._adjacency[0][i]

    def degree(self, i: int) -> int:
        return len(self.out_neighbors(i))

    # -- set algebra ----------------------------------------------------

    def _check_compatible(self, other: "Network") -> None:
        if self.n != other.n or self.directed != other.directed:
            raise NetworkError(
                f"incompatible networks: (n={self.n}, directed={self.directed}) "
                f"vs (n={other.n}, directed={other.directed})"
            )

    def union(self, other: "Network") -> "Network":
        self._check_compatible(other)
        return Network(self.n, self.directed, self.ties | other.ties)

    def intersection(self, other: "Network") -> "Network":
        self._check_compatible(other)
        return Network(self.n, self.directed, self.ties & other.ties)

    def difference(self, other: "Network") -> "Network":
        self._check_compatible(other)
        return Network(self.n, self.directed, self.ties - other.ties)

    def issubset(self, other: "Network") -> bool:
        self._check_compatible(other)
        return self.ties <= other.ties

    def relabel(self, perm: dict[int, int]) -> "Network":
        """Apply a node permutation {old: new}."""
        edges = [(perm[i], perm[j]) for (i, j) in self.ties]
        return Network.from_edges(self.n, self.directed, edges)


@dataclass(frozen=True)
class NodeCovariate:
    """One value per node; categorical (group labels) or numeric."""

    name: str
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise NetworkError(f"covariate {self.name!r} has no values")

    def check_length(self, n: int) -> None:
        if len(self.values) != n:
            raise NetworkError(
                f"covariate {self.name!r} has {len(self.values)} values, expected {n}"
            )

    def value(self, i: int):
        return self.values[i - 1]


@dataclass(frozen=True)
class DyadCovariate:
    """A dense n-by-n real matrix of dyad-level covariates."""

    name: str
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise NetworkError(f"dyad covariate {self.name!r} must be square")
        if not np.all(np.isfinite(x)):
            raise NetworkError(f"dyad covariate {self.name!r} has non-finite entries")
        object.__setattr__(self, "x", x)

    def check(self, n: int, directed: bool) -> None:
        if self.x.shape[0] != n:
            raise NetworkError(
                f"dyad covariate {self.name!r} is {self.x.shape[0]}x{self.x.shape[1]}, "
                f"expected {n}x{n}"
            )
        if not directed and not np.allclose(self.x, self.x.T):
            raise NetworkError(
                f"dyad covariate {self.name!r} must be symmetric for undirected networks"
            )

    def value(self, i: int, j: int) -> float:
        return float(self.x[i - 1, j - 1])


@dataclass(frozen=True)
class TransitionDecomposition:
    """The latent (formation, dissolution) pair recovered from consecutive panels."""

    y_plus: Network
    y_minus: Network

    def __post_init__(self):
        if not self.y_minus.issubset(self.y_plus):
            raise NetworkError("dissolution network must be a subset of formation network")


def decompose_transition(y_prev: Network, y_next: Network) -> TransitionDecomposition:
    """Recover the formation network (union) and dissolution network (intersection)."""
    return TransitionDecomposition(
        y_plus=y_prev.union(y_next),
        y_minus=y_prev.intersection(y_next),
    )


def apply_transition(y_prev: Network, d: TransitionDecomposition) -> Network:
    """Recombine phase networks into the next panel: y⁻ ∪ (y⁺ \\ y_prev)."""
    if not (y_prev.issubset(d.y_plus) and d.y_minus.issubset(y_prev)):
        raise NetworkError(
            "containment violated: need y_plus ⊇ y_prev ⊇ y_minus"
        )
    return d.y_minus.union(d.y_plus.difference(y_prev))
