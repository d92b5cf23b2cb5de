import json
import math

import numpy as np
import pytest
from scipy.optimize import minimize

from stergm.estimation import (
    DegenerateModelError,
    FitConfig,
    NonConvergenceError,
    bridge_deviance,
    cmle_fit,
    deviance_analysis,
    fit_time_heterogeneous,
    format_deviance,
    format_estimates,
)
from stergm.exact import exact_loglik
from stergm.model import ModelSpec
from stergm.network import Network, n_dyads
from stergm.sampler import DISSOLUTION, FORMATION, PhaseSpace, SamplerConfig, simulate_series
from stergm.series import NetworkSeries
from stergm.terms import TermSpec

from conftest import random_network


def logit(p):
    return math.log(p / (1.0 - p))


def edges_model(theta_plus=None, theta_minus=None):
    return ModelSpec(
        formation_terms=[TermSpec("edges")],
        dissolution_terms=[TermSpec("edges")],
        theta_plus=None if theta_plus is None else np.array([theta_plus]),
        theta_minus=None if theta_minus is None else np.array([theta_minus]),
    )


def phase_counts(series):
    """(formed, free_formation, retained, prev_ties) over all transitions."""
    formed = free_f = retained = prev = 0
    for (y_prev, _y_next, d) in series.transitions():
        free_f += len(PhaseSpace.for_phase(FORMATION, y_prev).free_dyads)
        formed += len(d.y_plus.ties) - len(y_prev.ties)
        retained += len(d.y_minus.ties)
        prev += len(y_prev.ties)
    return formed, free_f, retained, prev


@pytest.fixture(scope="module")
def edges_series():
    y0 = random_network(15, True, np.random.default_rng(4), density=0.25)
    return simulate_series(
        y0, edges_model(-1.3, 0.9), T=5, cfg=SamplerConfig(seed=101)
    )


@pytest.fixture(scope="module")
def edges_fit(edges_series):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=500, interval=5, burn_in=2000, seed=7),
        step_tolerance=0.02,
    )
    return cmle_fit(edges_series, edges_model(), cfg)


def test_closed_form_logit_recovery(edges_series, edges_fit):
    formed, free_f, retained, prev = phase_counts(edges_series)
    assert abs(edges_fit.theta_plus[0] - logit(formed / free_f)) < 0.05
    assert abs(edges_fit.theta_minus[0] - logit(retained / prev)) < 0.05


def test_se_binomial_oracle(edges_series, edges_fit):
    # with an edges-only model each free dyad is an independent Bernoulli,
    # so Var(theta_hat) ~ 1 / (F p (1-p))
    formed, free_f, retained, prev = phase_counts(edges_series)
    for phase, k, m in [(FORMATION, formed, free_f), (DISSOLUTION, retained, prev)]:
        p = k / m
        oracle = 1.0 / math.sqrt(m * p * (1.0 - p))
        got = math.sqrt(edges_fit.phases[phase].covariance[0, 0])
        assert abs(got - oracle) < 0.2 * oracle, (phase, got, oracle)


def test_covariance_psd_and_pvalues(edges_fit):
    for pf in edges_fit.phases.values():
        eig = np.linalg.eigvalsh(pf.covariance)
        assert (eig > 0).all()
        assert ((pf.p_values >= 0) & (pf.p_values <= 1)).all()
        assert (pf.mcmc_se >= 0).all()
    json.dumps(edges_fit.to_dict())  # must be serializable
    assert "Formation" in format_estimates(edges_fit)


@pytest.fixture(scope="module")
def small_series():
    rng = np.random.default_rng(12)
    nets = [random_network(4, True, rng, density=0.4) for _ in range(4)]
    return NetworkSeries(networks=nets)


SMALL_MODEL = ModelSpec(
    formation_terms=[TermSpec("edges"), TermSpec("reciprocity")],
    dissolution_terms=[TermSpec("edges")],
)


def exact_mle(series, model):
    pf = len(model.formation_terms)

    def neg(theta):
        return -exact_loglik(series, model, theta[:pf], theta[pf:])

    res = minimize(neg, np.zeros(pf + 1), method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-12})
    return res.x


@pytest.fixture(scope="module")
def small_fit(small_series):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=600, interval=4, burn_in=500, seed=19),
        step_tolerance=0.02,
    )
    return cmle_fit(small_series, SMALL_MODEL, cfg)


def test_mcmle_matches_exact_mle(small_series, small_fit):
    ref = exact_mle(small_series, SMALL_MODEL)
    got = np.concatenate([small_fit.theta_plus, small_fit.theta_minus])
    assert np.max(np.abs(got - ref)) < 0.05, (got, ref)


def test_separability(small_series):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=200, interval=4, burn_in=500, seed=19),
        step_tolerance=0.02,
    )
    joint = cmle_fit(small_series, SMALL_MODEL, cfg)
    form_only = ModelSpec(formation_terms=SMALL_MODEL.formation_terms, dissolution_terms=[])
    diss_only = ModelSpec(formation_terms=[], dissolution_terms=SMALL_MODEL.dissolution_terms)
    f = cmle_fit(small_series, form_only, cfg)
    d = cmle_fit(small_series, diss_only, cfg)
    assert np.array_equal(joint.theta_plus, f.theta_plus)
    assert np.array_equal(joint.theta_minus, d.theta_minus)


def test_bridge_deviance_matches_exact(small_series, small_fit):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=600, interval=4, burn_in=500, seed=19),
        bridge_points=16,
    )
    dev = bridge_deviance(small_series, SMALL_MODEL, small_fit, cfg)
    tp, tm = small_fit.theta_plus, small_fit.theta_minus
    exact_explained = {
        FORMATION: 2.0
        * (
            exact_loglik(small_series, SMALL_MODEL, tp, np.zeros(1))
            - exact_loglik(small_series, SMALL_MODEL, np.zeros(2), np.zeros(1))
        ),
        DISSOLUTION: 2.0
        * (
            exact_loglik(small_series, SMALL_MODEL, np.zeros(2), tm)
            - exact_loglik(small_series, SMALL_MODEL, np.zeros(2), np.zeros(1))
        ),
    }
    for phase in (FORMATION, DISSOLUTION):
        got = dev[phase]["explained_deviance"]
        ref = exact_explained[phase]
        assert abs(got - ref) < 0.01 * max(1.0, abs(ref)) + 0.05, (phase, got, ref)
        assert dev[phase]["aic"] == pytest.approx(
            dev[phase]["residual_deviance"] + 2 * dev[phase]["q"]
        )
        assert dev[phase]["null_deviance"] == pytest.approx(
            dev[phase]["explained_deviance"] + dev[phase]["residual_deviance"]
        )


def test_heterogeneous_shapes(edges_series):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=300, interval=5, burn_in=500, seed=23),
        step_tolerance=0.1,
    )
    T = edges_series.n_transitions
    het_e = fit_time_heterogeneous(edges_series, edges_model(), cfg, scheme="edges")
    pf = het_e.phases[FORMATION]
    assert len(pf.labels) == T
    assert all("[t=" in lab for lab in pf.labels)
    het_f = fit_time_heterogeneous(edges_series, edges_model(), cfg, scheme="full")
    assert het_f.phases[FORMATION].theta.size == T
    assert het_f.phases[DISSOLUTION].theta.size == T
    # per-transition edges fit reproduces the per-transition logit exactly
    for t_idx, (y_prev, _y_next, d) in enumerate(edges_series.transitions()):
        free = len(PhaseSpace.for_phase(FORMATION, y_prev).free_dyads)
        formed = len(d.y_plus.ties) - len(y_prev.ties)
        assert abs(het_f.phases[FORMATION].theta[t_idx] - logit(formed / free)) < 0.15


def test_scheme_none_equals_cmle(small_series):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=150, interval=4, burn_in=500, seed=23),
        step_tolerance=0.05,
    )
    a = cmle_fit(small_series, SMALL_MODEL, cfg)
    b = fit_time_heterogeneous(small_series, SMALL_MODEL, cfg, scheme="none")
    assert np.array_equal(a.theta_plus, b.theta_plus)
    assert np.array_equal(a.theta_minus, b.theta_minus)


def test_degenerate_dissolution():
    # nothing ever dissolves: observed dissolution stats sit on the boundary
    rng = np.random.default_rng(3)
    nets = [random_network(6, True, rng, density=0.3)]
    for _ in range(3):
        extra = random_network(6, True, rng, density=0.2)
        nets.append(nets[-1].union(extra))
    series = NetworkSeries(networks=nets)
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=200, interval=4, burn_in=500, seed=29),
        step_tolerance=1e-6,
        max_iterations=10,
    )
    with pytest.raises(DegenerateModelError):
        cmle_fit(
            series,
            ModelSpec(formation_terms=[], dissolution_terms=[TermSpec("edges")]),
            cfg,
        )


def test_nonconvergence_error(small_series):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=100, interval=4, burn_in=200, seed=31),
        step_tolerance=1e-12,
        max_iterations=1,
    )
    with pytest.raises(NonConvergenceError):
        cmle_fit(small_series, SMALL_MODEL, cfg)


def test_deviance_analysis_table(small_series):
    cfg = FitConfig(
        sampler=SamplerConfig(n_draws=200, interval=4, burn_in=500, seed=37),
        step_tolerance=0.05,
        bridge_points=8,
    )
    fit, table = deviance_analysis(small_series, SMALL_MODEL, cfg)
    assert fit.loglik is not None and fit.deviance_table is table
    for phase in (FORMATION, DISSOLUTION):
        rows = table[phase]
        assert rows[0]["model"] == "Null"
        assert rows[-1]["model"] == "Full (hom.)"
        null_dev = rows[0]["residual_deviance"]
        assert rows[0]["aic"] == pytest.approx(null_dev)
        # telescoping: null deviance = residual + sum of explained increments
        explained = sum(r["explained_deviance"] or 0.0 for r in rows)
        assert null_dev == pytest.approx(rows[-1]["residual_deviance"] + explained)
        for r in rows[1:]:
            q = rows[0]["residual_df"] - r["residual_df"]
            assert r["aic"] == pytest.approx(r["residual_deviance"] + 2 * q)
    # formation ladder includes the intermediate edges-only model
    assert [r["model"] for r in table[FORMATION]] == ["Null", "Edges (hom.)", "Full (hom.)"]
    out = format_deviance(table)
    assert "Null" in out and "AIC" in out


def test_null_deviance_value(small_series):
    _fit, table = deviance_analysis(
        small_series,
        edges_model(),
        FitConfig(
            sampler=SamplerConfig(n_draws=150, interval=4, burn_in=300, seed=41),
            step_tolerance=0.05,
            bridge_points=8,
        ),
    )
    total_free = sum(
        len(PhaseSpace.for_phase(FORMATION, y_prev).free_dyads)
        for (y_prev, _n, _d) in small_series.transitions()
    )
    assert table[FORMATION][0]["residual_deviance"] == pytest.approx(
        2.0 * total_free * math.log(2.0)
    )
    # edges-only request: ladder skips the redundant intermediate row
    assert [r["model"] for r in table[FORMATION]] == ["Null", "Full (hom.)"]
