"""Command-line front end: simulate panels, fit models, validate inputs.

Exit codes: 0 success, 2 configuration error (bad flags, malformed files),
3 runtime error (sampler/estimation failure).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .estimation import (
    EstimationError,
    FitConfig,
    deviance_analysis,
    format_deviance,
    format_estimates,
)
from .model import ModelFileError, ModelSpec, parse_model_file
from .network import Network, NetworkError, all_dyads, decompose_transition
from .sampler import SamplerConfig, SamplerError, simulate_series
from .series import NetworkSeries, SeriesFormatError, load_series, save_series, _read_edge_list, _read_node_attrs
from .terms import ModelContext, TermError, build_terms
from .network import DyadCovariate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class _CliConfigError(Exception):
    pass


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="RNG seed (non-negative)")
    p.add_argument("--burn-in", type=int, default=None, help="proposals before retaining")
    p.add_argument("--interval", type=int, default=None, help="proposals between draws")
    p.add_argument("--proposal", choices=["uniform_free_dyad", "tnt"], default="tnt")
    p.add_argument("--max-out-degree", type=int, default=None)


def _sampler_config(args, n_draws: int | None = None) -> SamplerConfig:
    kwargs = dict(
        burn_in=args.burn_in,
        interval=args.interval,
        proposal=args.proposal,
        seed=args.seed,
        max_out_degree=args.max_out_degree,
    )
    if n_draws is not None:
        kwargs["n_draws"] = n_draws
    try:
        return SamplerConfig(**kwargs)
    except ValueError as e:
        raise _CliConfigError(str(e)) from e


def _load_context_files(args, n: int, directed: bool) -> ModelContext:
    node_attrs = {}
    if getattr(args, "attrs", None):
        path = Path(args.attrs)
        if not path.exists():
            raise _CliConfigError(f"attribute file not found: {path}")
        node_attrs = _read_node_attrs(path, n)
    dyad_covs = {}
    for item in getattr(args, "dyad_cov", None) or []:
        if "=" not in item:
            raise _CliConfigError(f"--dyad-cov expects name=path, got {item!r}")
        name, rel = item.split("=", 1)
        path = Path(rel)
        if not path.exists():
            raise _CliConfigError(f"dyad covariate file not found: {path}")
        x = np.loadtxt(path, delimiter=",", ndmin=2)
        dyad_covs[name] = DyadCovariate(name=name, x=x)
    return ModelContext(n=n, directed=directed, node_attrs=node_attrs, dyad_covs=dyad_covs)


def cmd_simulate(args) -> int:
    try:
        model = parse_model_file(args.model)
    except ModelFileError as e:
        raise _CliConfigError(str(e))
    if model.theta_plus is None or model.theta_minus is None:
        raise _CliConfigError(
            "simulation needs coefficients on every term in both sections "
            "(append '= <coef>' to each term line)"
        )
    if args.init_network:
        if args.n is None or args.directed is None:
            raise _CliConfigError("--init-network also needs --n and --directed/--undirected")
        path = Path(args.init_network)
        if not path.exists():
            raise _CliConfigError(f"initial network file not found: {path}")
        try:
            y0 = _read_edge_list(path, args.n, args.directed)
        except SeriesFormatError as e:
            raise _CliConfigError(str(e))
    else:
        if args.n is None or args.directed is None:
            raise _CliConfigError("need either --init-network or --n with --directed/--undirected")
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0xD0]))
        edges = [d for d in all_dyads(args.n, args.directed) if rng.random() < args.density]
        y0 = Network.from_edges(args.n, args.directed, edges)
    ctx = _load_context_files(args, y0.n, y0.directed)
    cfg = _sampler_config(args)
    try:
        # validate the terms up front so errors name the offending term
        build_terms(model.formation_terms, ctx, "formation")
        build_terms(model.dissolution_terms, ctx, "dissolution")
    except TermError as e:
        raise _CliConfigError(str(e))
    series = simulate_series(
        y0, model, args.steps, cfg, node_attrs=ctx.node_attrs, dyad_covs=ctx.dyad_covs
    )
    manifest = save_series(series, args.out)
    if not args.quiet:
        f_terms = build_terms(model.formation_terms, ctx, "formation")
        d_terms = build_terms(model.dissolution_terms, ctx, "dissolution")
        print(f"wrote {len(series.networks)} snapshots to {manifest}")
        print("step  formed  dissolved  " + "  ".join(
            f"g+[{t.label}]" for t in f_terms) + "  " + "  ".join(f"g-[{t.label}]" for t in d_terms))
        for t_idx, (y_prev, y_next, d) in enumerate(series.transitions(), start=1):
            formed = d.y_plus.edge_count - y_prev.edge_count
            dissolved = y_prev.edge_count - d.y_minus.edge_count
            gplus = [term.evaluate(d.y_plus, y_prev) for term in f_terms]
            gminus = [term.evaluate(d.y_minus, y_prev) for term in d_terms]
            print(
                f"{t_idx:4d}  {formed:6d}  {dissolved:9d}  "
                + "  ".join(f"{v:.6g}" for v in gplus + gminus)
            )
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        series = load_series(args.series)
    except SeriesFormatError as e:
        raise _CliConfigError(str(e))
    try:
        model = parse_model_file(args.model)
    except ModelFileError as e:
        raise _CliConfigError(str(e))
    sampler = _sampler_config(args, n_draws=args.draws)
    threads = args.threads or int(os.environ.get("STERGM_THREADS", "1"))
    try:
        cfg = FitConfig(
            sampler=sampler,
            max_iterations=args.max_iterations,
            step_tolerance=args.tolerance,
            bridge_points=args.bridge_points,
            n_chains=args.chains,
            threads=threads,
        )
    except ValueError as e:
        raise _CliConfigError(str(e))
    fit, table = deviance_analysis(series, model, cfg, heterogeneous=args.heterogeneous)
    report = fit.to_dict()
    report["heterogeneous"] = args.heterogeneous
    report["seed"] = args.seed
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not args.quiet:
        print(format_estimates(fit))
        print(format_deviance(table))
        if args.out:
            print(f"report written to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    violations: list[str] = []
    try:
        series = load_series(args.series)
    except SeriesFormatError as e:
        print(f"violation: {e}")
        return EXIT_RUNTIME
    if not args.quiet:
        print(
            f"series: n={series.n}, directed={series.directed}, "
            f"{len(series.networks)} snapshots"
        )
        print("transition  formed  dissolved  preserved")
    for t_idx, (y_prev, y_next, d) in enumerate(series.transitions(), start=1):
        formed = d.y_plus.edge_count - y_prev.edge_count
        dissolved = y_prev.edge_count - d.y_minus.edge_count
        preserved = d.y_minus.edge_count
        if not args.quiet:
            print(f"{t_idx:10d}  {formed:6d}  {dissolved:9d}  {preserved:9d}")
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_RUNTIME
    if not args.quiet:
        print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stergm",
        description="Simulate and fit separable temporal exponential-family "
        "random graph models on network panels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a network panel from a model")
    p_sim.add_argument("--model", required=True, help="model file with coefficients")
    p_sim.add_argument("--init-network", help="edge-list CSV for the starting network")
    p_sim.add_argument("--n", type=int, help="node count")
    grp = p_sim.add_mutually_exclusive_group()
    grp.add_argument("--directed", dest="directed", action="store_true", default=None)
    grp.add_argument("--undirected", dest="directed", action="store_false")
    p_sim.add_argument("--density", type=float, default=0.0, help="random start density")
    p_sim.add_argument("--steps", type=int, required=True, help="number of transitions")
    p_sim.add_argument("--out", required=True, help="output directory for the series")
    p_sim.add_argument("--attrs", help="node attribute CSV (header node,<name>...)")
    p_sim.add_argument("--dyad-cov", action="append", help="name=path dense CSV matrix")
    _add_sampler_flags(p_sim)
    p_sim.add_argument("--quiet", action="store_true")
    p_sim.add_argument("--verbose", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="conditional MLE fit to a series")
    p_fit.add_argument("--series", required=True, help="series manifest path")
    p_fit.add_argument("--model", required=True, help="model file")
    p_fit.add_argument(
        "--heterogeneous", choices=["none", "edges", "full"], default="none",
        help="per-transition coefficient scheme",
    )
    p_fit.add_argument("--out", help="JSON report path")
    p_fit.add_argument("--draws", type=int, default=256, help="retained draws per chain")
    p_fit.add_argument("--chains", type=int, default=4)
    p_fit.add_argument("--max-iterations", type=int, default=30)
    p_fit.add_argument("--tolerance", type=float, default=0.01)
    p_fit.add_argument("--bridge-points", type=int, default=16)
    p_fit.add_argument("--threads", type=int, default=None,
                       help="worker cap (default: STERGM_THREADS or 1)")
    _add_sampler_flags(p_fit)
    p_fit.add_argument("--quiet", action="store_true")
    p_fit.add_argument("--verbose", action="store_true")
    p_fit.set_defaults(func=cmd_fit)

    p_val = sub.add_parser("validate", help="check a series and summarize transitions")
    p_val.add_argument("--series", required=True, help="series manifest path")
    p_val.add_argument("--quiet", action="store_true")
    p_val.add_argument("--verbose", action="store_true")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelFileError, SeriesFormatError, TermError, NetworkError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationError, SamplerError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
