"""Metropolis-Hastings sampling of formation/dissolution networks.

Each phase is sampled conditional on the pre-transition network (the
anchor): formation chains move through supersets of the anchor by toggling
empty dyads, dissolution chains through subsets by toggling extant ties.
Containment therefore holds by construction.  Forward simulation draws one
network per phase and recombines them with the set-operation identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import ModelSpec
from .network import Network, TransitionDecomposition, all_dyads, apply_transition, canonical_dyad
from .series import NetworkSeries
from .terms import ModelContext, Term, build_terms

__all__ = [
    "SamplerConfig",
    "PhaseSpace",
    "PhaseSample",
    "SamplerError",
    "InfeasibleConstraintError",
    "sample_phase",
    "simulate_step",
    "simulate_series",
]

FORMATION = "formation"
DISSOLUTION = "dissolution"

_RNG_BLOCK = 4096


class SamplerError(RuntimeError):
    pass


class InfeasibleConstraintError(SamplerError):
    """The anchor network itself violates the sample-space constraint."""


@dataclass(frozen=True)
class SamplerConfig:
    """MCMC controls.  burn_in/interval default to 10x / 1x the free-dyad count."""

    burn_in: int | None = None
    interval: int | None = None
    n_draws: int = 100
    proposal: str = "uniform_free_dyad"
    seed: int = 0
    max_out_degree: int | None = None

    def __post_init__(self):
        if self.burn_in is not None and self.burn_in <= 0:
            raise ValueError("burn_in must be positive")
        if self.interval is not None and self.interval <= 0:
            raise ValueError("interval must be positive")
        if self.n_draws <= 0:
            raise ValueError("n_draws must be positive")
        if self.proposal not in ("uniform_free_dyad", "tnt"):
            raise ValueError(f"unknown proposal {self.proposal!r}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def resolved(self, n_free: int) -> tuple[int, int]:
        burn = self.burn_in if self.burn_in is not None else max(1, 10 * n_free)
        interval = self.interval if self.interval is not None else max(1, n_free)
        return burn, interval


@dataclass(frozen=True)
class PhaseSpace:
    """One phase's sample space: the anchor plus its toggleable dyads."""

    phase: str
    anchor: Network
    free_dyads: tuple[tuple[int, int], ...]

    @classmethod
    def for_phase(cls, phase: str, anchor: Network) -> "PhaseSpace":
        if phase == FORMATION:
            free = tuple(d for d in all_dyads(anchor.n, anchor.directed) if d not in anchor.ties)
        elif phase == DISSOLUTION:
            free = tuple(sorted(anchor.ties))
        else:
            raise ValueError(f"unknown phase {phase!r}")
        return cls(phase=phase, anchor=anchor, free_dyads=free)


@dataclass
class PhaseSample:
    """Retained draws: statistic vectors, optional tie sets, and the final state."""

    stats: np.ndarray
    networks: list[frozenset] | None
    final: Network
    accept_rate: float


class MutableGraph:
    """Mutable working state for one chain; mirrors the Network query API."""

    __slots__ = ("n", "directed", "ties", "_out", "_in")

    def __init__(self, net: Network):
        self.n = net.n
        self.directed = net.directed
        self.ties = set(net.ties)
        self._out = {i: set() for i in range(1, net.n + 1)}
        self._in = {i: set() for i in range(1, net.n + 1)}
        for (i, j) in net.ties:
            self._link(i, j)

    def _link(self, i, j):
        self._out[i].add(j)
        self._in[j].add(i)
        if not self.directed:
            self._out[j].add(i)
            self._in[i].add(j)

    def _unlink(self, i, j):
        self._out[i].discard(j)
        self._in[j].discard(i)
        if not self.directed:
            self._out[j].discard(i)
            self._in[i].discard(j)

    def add(self, i, j):
        self.ties.add(canonical_dyad(i, j, self.directed))
        self._link(i, j)

    def remove(self, i, j):
        self.ties.discard(canonical_dyad(i, j, self.directed))
        self._unlink(i, j)

    def has(self, i, j) -> bool:
        return canonical_dyad(i, j, self.directed) in self.ties

    def out_neighbors(self, i) -> set:
        return self._out[i]

    def in_neighbors(self, j) -> set:
        return self._in[j]

    def neighbors(self, i) -> set:
        if self.directed:
            return self._out[i] | self._in[i]
        return self._out[i]

    @property
    def edge_count(self) -> int:
        return len(self.ties)

    def to_network(self) -> Network:
        return Network(self.n, self.directed, frozenset(self.ties))


class _IndexedSet:
    """Uniform O(1) sampling and removal over a dynamic set of dyads."""

    __slots__ = ("items", "pos")

    def __init__(self, items=()):
        self.items = list(items)
        self.pos = {d: k for k, d in enumerate(self.items)}

    def __len__(self):
        return len(self.items)

    def __contains__(self, d):
        return d in self.pos

    def add(self, d):
        self.pos[d] = len(self.items)
        self.items.append(d)

    def discard(self, d):
        k = self.pos.pop(d)
        last = self.items.pop()
        if k < len(self.items):
            self.items[k] = last
            self.pos[last] = k

    def pick(self, u: float):
        return self.items[int(u * len(self.items))]


def _check_out_degree_feasible(anchor: Network, c: int) -> None:
    for i in range(1, anchor.n + 1):
        if len(anchor.out_neighbors(i)) > c:
            raise InfeasibleConstraintError(
                f"anchor out-degree {len(anchor.out_neighbors(i))} of node {i} "
                f"exceeds max_out_degree={c}"
            )


def sample_phase(
    space: PhaseSpace,
    terms: list[Term],
    eta: np.ndarray,
    cfg: SamplerConfig,
    rng: np.random.Generator | None = None,
    keep_networks: bool = False,
) -> PhaseSample:
    """Run one MH chain over a phase space; returns retained draws.

    Every retained draw's statistic vector g(y, anchor) is recorded; tie
    sets are kept only when `keep_networks` to bound memory.
    """
    eta = np.asarray(eta, dtype=float)
    if len(terms) != eta.size:
        raise ValueError(f"{len(terms)} terms but {eta.size} coefficients")
    if not np.all(np.isfinite(eta)):
        raise ValueError("coefficients must be finite")
    anchor = space.anchor
    if cfg.max_out_degree is not None and space.phase == FORMATION:
        _check_out_degree_feasible(anchor, cfg.max_out_degree)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))

    state = MutableGraph(anchor)
    g = np.array([t.evaluate(state, anchor) for t in terms], dtype=float)

    if not space.free_dyads:
        stats = np.tile(g, (cfg.n_draws, 1))
        nets = [frozenset(anchor.ties)] * cfg.n_draws if keep_networks else None
        return PhaseSample(stats=stats, networks=nets, final=anchor, accept_rate=0.0)

    burn, interval = cfg.resolved(len(space.free_dyads))
    total = burn + interval * cfg.n_draws
    free = space.free_dyads
    n_free = len(free)
    tnt = cfg.proposal == "tnt"
    if tnt:
        on = _IndexedSet(d for d in free if d in state.ties)
        off = _IndexedSet(d for d in free if d not in state.ties)
    maxdeg = cfg.max_out_degree

    stats = np.empty((cfg.n_draws, eta.size))
    nets: list[frozenset] | None = [] if keep_networks else None
    accepted = 0
    retained = 0
    next_retain = burn + interval

    u_pick = u_branch = u_acc = None
    block_at = _RNG_BLOCK
    for step in range(1, total + 1):
        if block_at >= _RNG_BLOCK:
            u_pick = rng.random(_RNG_BLOCK)
            u_branch = rng.random(_RNG_BLOCK)
            u_acc = rng.random(_RNG_BLOCK)
            block_at = 0
        up, ub, ua = u_pick[block_at], u_branch[block_at], u_acc[block_at]
        block_at += 1

        log_hastings = 0.0
        if tnt:
            n_on, n_off = len(on), len(off)
            if n_on and (ub < 0.5 or not n_off):
                dyad = on.pick(up)
            else:
                dyad = off.pick(up)
            add = dyad not in state.ties
            # forward/reverse proposal probabilities around the toggle
            log_hastings = _tnt_log_ratio(n_on, n_off, add)
        else:
            dyad = free[int(up * n_free)]
            add = dyad not in state.ties
        i, j = dyad

        if add and maxdeg is not None and len(state.out_neighbors(i)) >= maxdeg:
            continue

        delta = np.array([t.change(state, anchor, i, j, add) for t in terms])
        log_alpha = float(eta @ delta) + log_hastings
        if log_alpha >= 0.0 or ua < math.exp(log_alpha):
            if add:
                state.add(i, j)
                if tnt:
                    off.discard(dyad)
                    on.add(dyad)
            else:
                state.remove(i, j)
                if tnt:
                    on.discard(dyad)
                    off.add(dyad)
            g += delta
            accepted += 1

        if step == next_retain:
            stats[retained] = g
            if keep_networks:
                nets.append(frozenset(state.ties))
            retained += 1
            next_retain += interval

    return PhaseSample(
        stats=stats,
        networks=nets,
        final=state.to_network(),
        accept_rate=accepted / total,
    )


def _tnt_log_ratio(n_on: int, n_off: int, add: bool) -> float:
    """log q(reverse)/q(forward) for the tie/no-tie proposal."""

    def log_q(n_on, n_off, removal):
        if n_on and n_off:
            return math.log(0.5 / (n_on if removal else n_off))
        return math.log(1.0 / (n_on if removal else n_off))

    if add:
        fwd = log_q(n_on, n_off, removal=False)
        rev = log_q(n_on + 1, n_off - 1, removal=True)
    else:
        fwd = log_q(n_on, n_off, removal=True)
        rev = log_q(n_on - 1, n_off + 1, removal=False)
    return rev - fwd


def phase_rng(seed: int, t: int, phase: str, chain: int = 0) -> np.random.Generator:
    """Reproducible per-(transition, phase, chain) generator."""
    phase_code = 0 if phase == FORMATION else 1
    return np.random.default_rng(np.random.SeedSequence([seed, t, phase_code, chain]))


def _bound_phase(model: ModelSpec, ctx: ModelContext, phase: str) -> tuple[list[Term], np.ndarray]:
    theta = model.phase_theta(phase)
    if theta is None:
        raise SamplerError(f"model has no coefficients for the {phase} block")
    model.require_identity_eta()
    terms = build_terms(model.phase_terms(phase), ctx, phase)
    return terms, theta


def simulate_step(
    y_prev: Network,
    model: ModelSpec,
    cfg: SamplerConfig,
    ctx: ModelContext | None = None,
    t: int = 1,
) -> Network:
    """One transition: draw y⁺ and y⁻ independently given y_prev, recombine."""
    if ctx is None:
        ctx = ModelContext(n=y_prev.n, directed=y_prev.directed)
    # a single draw needs burn-in only; skip the thinning interval
    draw_cfg = replace(cfg, n_draws=1, interval=cfg.interval or 1)
    phase_nets = {}
    for phase in (FORMATION, DISSOLUTION):
        terms, theta = _bound_phase(model, ctx, phase)
        space = PhaseSpace.for_phase(phase, y_prev)
        rng = phase_rng(cfg.seed, t, phase)
        sample = sample_phase(space, terms, theta, draw_cfg, rng=rng, keep_networks=True)
        phase_nets[phase] = Network(y_prev.n, y_prev.directed, sample.networks[0])
    d = TransitionDecomposition(
        y_plus=phase_nets[FORMATION], y_minus=phase_nets[DISSOLUTION]
    )
    return apply_transition(y_prev, d)


def simulate_series(
    y0: Network,
    model: ModelSpec,
    T: int,
    cfg: SamplerConfig,
    ctx: ModelContext | None = None,
    node_attrs: dict | None = None,
    dyad_covs: dict | None = None,
) -> NetworkSeries:
    """Iterate simulate_step T times; deterministic given cfg.seed."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if ctx is None:
        ctx = ModelContext(
            n=y0.n,
            directed=y0.directed,
            node_attrs=node_attrs or {},
            dyad_covs=dyad_covs or {},
        )
    networks = [y0]
    for t in range(1, T + 1):
        networks.append(simulate_step(networks[-1], model, cfg, ctx=ctx, t=t))
    return NetworkSeries(
        networks=networks,
        node_attrs=ctx.node_attrs,
        dyad_covs=ctx.dyad_covs,
    )
