"""Fit the bundled classroom panel and print the full analysis.

Reproduces the command-line workflow in Python:

    stergm fit --series datasets/classroom/manifest.json \
               --model datasets/classroom/model.cfg --seed 7

The panel was simulated from a known model (see datasets/make_classroom.py),
so the estimates can be compared against the generating coefficients:
formation (-3.6, 0.9, 0.9, 0.8), dissolution (1.0, 0.7, 0.7).
Takes a minute or two.
"""

from pathlib import Path

from stergm import (
    FitConfig,
    SamplerConfig,
    deviance_analysis,
    format_deviance,
    format_estimates,
    load_series,
    parse_model_file,
)

root = Path(__file__).resolve().parent.parent / "datasets" / "classroom"
series = load_series(root / "manifest.json")
model = parse_model_file(root / "model.cfg")

cfg = FitConfig(
    sampler=SamplerConfig(n_draws=128, seed=7),
    step_tolerance=0.05,
    bridge_points=8,
)
fit, table = deviance_analysis(series, model, cfg)

print(format_estimates(fit))
print(format_deviance(table))
