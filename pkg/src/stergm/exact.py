"""Exact small-instance oracle by full enumeration of phase spaces.

Feasible when a phase has at most ~20 free dyads.  Every state of a phase
space is materialized and its statistics evaluated from scratch, so this
module is independent of the change-score machinery it is used to check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import ModelSpec
from .network import Network
from .sampler import DISSOLUTION, FORMATION, PhaseSpace
from .series import NetworkSeries
from .terms import ModelContext, Term, build_terms

__all__ = [
    "PhaseEnumeration",
    "enumerate_phase",
    "exact_loglik",
    "exact_summed_stats",
    "exact_expected_summed_stats",
    "SpaceTooLargeError",
    "MAX_FREE_DYADS",
]

MAX_FREE_DYADS = 20


class SpaceTooLargeError(ValueError):
    pass


@dataclass
class PhaseEnumeration:
    """All states of one phase space with their statistic vectors."""

    space: PhaseSpace
    states: list[frozenset]
    stats: np.ndarray  # (n_states, p)

    def log_weights(self, eta: np.ndarray) -> np.ndarray:
        return self.stats @ np.asarray(eta, dtype=float)

    def log_normalizer(self, eta: np.ndarray) -> float:
        return float(logsumexp(self.log_weights(eta)))

    def probabilities(self, eta: np.ndarray) -> np.ndarray:
        lw = self.log_weights(eta)
        lw = lw - logsumexp(lw)
        return np.exp(lw)

    def expected_stats(self, eta: np.ndarray) -> np.ndarray:
        return self.probabilities(eta) @ self.stats

    def state_index(self, ties: frozenset) -> int:
        return self.states.index(ties)


def enumerate_phase(space: PhaseSpace, terms: list[Term]) -> PhaseEnumeration:
    """Materialize all 2^f states of a phase space, evaluating stats directly."""
    free = space.free_dyads
    if len(free) > MAX_FREE_DYADS:
        raise SpaceTooLargeError(
            f"{len(free)} free dyads; enumeration is limited to {MAX_FREE_DYADS}"
        )
    anchor = space.anchor
    base = anchor.ties if space.phase == FORMATION else frozenset()
    kept = anchor.ties - set(free) if space.phase == DISSOLUTION else frozenset()
    states = []
    rows = []
    for mask in range(2 ** len(free)):
        chosen = frozenset(d for k, d in enumerate(free) if mask >> k & 1)
        ties = (base | chosen) if space.phase == FORMATION else (kept | chosen)
        net = Network(anchor.n, anchor.directed, ties)
        states.append(ties)
        rows.append([t.evaluate(net, anchor) for t in terms])
    return PhaseEnumeration(space=space, states=states, stats=np.array(rows, dtype=float))


def _phase_pieces(series: NetworkSeries, model: ModelSpec, ctx: ModelContext):
    model.require_identity_eta()
    pieces = {}
    for phase in (FORMATION, DISSOLUTION):
        terms = build_terms(model.phase_terms(phase), ctx, phase)
        per_transition = []
        for (y_prev, _y_next, d) in series.transitions():
            y_phase = d.y_plus if phase == FORMATION else d.y_minus
            space = PhaseSpace.for_phase(phase, y_prev)
            per_transition.append((space, y_phase))
        pieces[phase] = (terms, per_transition)
    return pieces


def exact_summed_stats(series: NetworkSeries, model: ModelSpec) -> dict[str, np.ndarray]:
    """Observed summed sufficient statistics per phase."""
    ctx = series.context()
    out = {}
    for phase, (terms, per_transition) in _phase_pieces(series, model, ctx).items():
        total = np.zeros(len(terms))
        for (space, y_phase) in per_transition:
            net = Network(series.n, series.directed, y_phase.ties)
            total += np.array([t.evaluate(net, space.anchor) for t in terms])
        out[phase] = total
    return out


def exact_loglik(
    series: NetworkSeries,
    model: ModelSpec,
    theta_plus: np.ndarray,
    theta_minus: np.ndarray,
) -> float:
    """Exact conditional log-likelihood by enumerating both phase spaces."""
    ctx = series.context()
    thetas = {FORMATION: np.asarray(theta_plus, float), DISSOLUTION: np.asarray(theta_minus, float)}
    total = 0.0
    for phase, (terms, per_transition) in _phase_pieces(series, model, ctx).items():
        eta = thetas[phase]
        if eta.size != len(terms):
            raise ValueError(f"{phase}: {len(terms)} terms but {eta.size} coefficients")
        for (space, y_phase) in per_transition:
            net = Network(series.n, series.directed, y_phase.ties)
            g_obs = np.array([t.evaluate(net, space.anchor) for t in terms])
            enum = enumerate_phase(space, terms)
            total += float(eta @ g_obs) - enum.log_normalizer(eta)
    return total


def exact_expected_summed_stats(
    series: NetworkSeries,
    model: ModelSpec,
    theta_plus: np.ndarray,
    theta_minus: np.ndarray,
) -> dict[str, np.ndarray]:
    """Per-phase expected summed statistics under the model, by enumeration."""
    ctx = series.context()
    thetas = {FORMATION: np.asarray(theta_plus, float), DISSOLUTION: np.asarray(theta_minus, float)}
    out = {}
    for phase, (terms, per_transition) in _phase_pieces(series, model, ctx).items():
        eta = thetas[phase]
        total = np.zeros(len(terms))
        for (space, _y_phase) in per_transition:
            enum = enumerate_phase(space, terms)
            total += enum.expected_stats(eta)
        out[phase] = total
    return out
