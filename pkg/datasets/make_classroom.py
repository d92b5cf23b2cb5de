"""Regenerate the bundled synthetic classroom panel.

26 pupils (17 girls, 9 boys) observed at 4 time points. Friendship
nominations are directed. Pupils arrived from one of three primary
schools; the `primary` dyad covariate flags pairs from the same one.
The panel is simulated from a fixed-seed model with sex homophily in
both phases, so the fitting workflow in the README has a known answer.

Run from the repository root:

    python3 datasets/make_classroom.py
"""

from pathlib import Path

import numpy as np

from stergm.model import ModelSpec
from stergm.network import DyadCovariate, Network, NodeCovariate
from stergm.sampler import SamplerConfig, simulate_series
from stergm.series import NetworkSeries, save_series
from stergm.terms import TermSpec

N = 26
SEED = 2024
OUT = Path(__file__).parent / "classroom"

# 17 girls and 9 boys, interleaved
SEX = tuple("M" if i % 3 == 0 or i == N else "F" for i in range(1, N + 1))
assert SEX.count("F") == 17 and SEX.count("M") == 9

# three primary schools of sizes 10 / 9 / 7
SCHOOL = [0] * 10 + [1] * 9 + [2] * 7

MODEL = ModelSpec(
    formation_terms=[
        TermSpec("edges"),
        TermSpec("mixing", ("sex", "F", "F")),
        TermSpec("mixing", ("sex", "M", "M")),
        TermSpec("edge_cov", ("primary",)),
    ],
    dissolution_terms=[
        TermSpec("edges"),
        TermSpec("mixing", ("sex", "F", "F")),
        TermSpec("mixing", ("sex", "M", "M")),
    ],
    theta_plus=np.array([-3.6, 0.9, 0.9, 0.8]),
    theta_minus=np.array([1.0, 0.7, 0.7]),
)


def main() -> None:
    primary = np.array(
        [[1.0 if SCHOOL[i] == SCHOOL[j] and i != j else 0.0 for j in range(N)] for i in range(N)]
    )
    node_attrs = {"sex": NodeCovariate("sex", SEX)}
    dyad_covs = {"primary": DyadCovariate("primary", primary)}
    # seed the panel with a handful of same-school nominations
    rng = np.random.default_rng(SEED)
    ties = [
        (i + 1, j + 1)
        for i in range(N)
        for j in range(N)
        if i != j and SCHOOL[i] == SCHOOL[j] and rng.random() < 0.08
    ]
    y0 = Network.from_edges(N, True, ties)
    # run the chain to quasi-equilibrium and keep the last four waves
    long = simulate_series(
        y0,
        MODEL,
        T=12,
        cfg=SamplerConfig(seed=SEED),
        node_attrs=node_attrs,
        dyad_covs=dyad_covs,
    )
    series = NetworkSeries(
        networks=long.networks[-4:], node_attrs=node_attrs, dyad_covs=dyad_covs
    )
    manifest = save_series(series, OUT)
    counts = ", ".join(str(net.edge_count) for net in series.networks)
    print(f"wrote {manifest} (tie counts per wave: {counts})")


if __name__ == "__main__":
    main()
