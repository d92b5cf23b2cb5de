import json

import numpy as np
import pytest

from stergm.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from stergm.model import ModelFileError, parse_model_file, parse_term
from stergm.series import load_series
from stergm.terms import TermSpec

MODEL = """\
# toy model
[formation]
edges = -1.2

[dissolution]
edges = 0.8
"""


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "model.cfg"
    p.write_text(MODEL)
    return p


def simulate(tmp_path, model_file, capsys, seed=5):
    out = tmp_path / f"series{seed}"
    rc = main(
        [
            "simulate",
            "--model", str(model_file),
            "--n", "8",
            "--directed",
            "--density", "0.3",
            "--steps", "3",
            "--seed", str(seed),
            "--out", str(out),
        ]
    )
    captured = capsys.readouterr()
    assert rc == EXIT_OK, captured.err
    return out / "manifest.json", captured.out


def test_simulate_validate_roundtrip(tmp_path, model_file, capsys):
    manifest, out = simulate(tmp_path, model_file, capsys)
    assert "wrote 4 snapshots" in out
    series = load_series(manifest)
    assert len(series.networks) == 4

    rc = main(["validate", "--series", str(manifest)])
    vout = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "ok" in vout
    lines = [l for l in vout.splitlines() if l.strip() and l.strip()[0].isdigit()]
    assert len(lines) == 3
    # formed/dissolved/preserved columns must match the decomposition
    for line, (y_prev, y_next, d) in zip(lines, series.transitions()):
        _t, formed, dissolved, preserved = (int(v) for v in line.split())
        assert formed == len(d.y_plus.ties) - len(y_prev.ties)
        assert dissolved == len(y_prev.ties) - len(d.y_minus.ties)
        assert preserved == len(d.y_minus.ties)


def test_simulate_deterministic(tmp_path, model_file, capsys):
    m1, out1 = simulate(tmp_path / "a", model_file, capsys, seed=9)
    m2, out2 = simulate(tmp_path / "b", model_file, capsys, seed=9)
    s1, s2 = load_series(m1), load_series(m2)
    assert [x.ties for x in s1.networks] == [x.ties for x in s2.networks]
    m3, _ = simulate(tmp_path / "c", model_file, capsys, seed=10)
    assert [x.ties for x in load_series(m3).networks] != [x.ties for x in s1.networks]


def test_fit_writes_report(tmp_path, model_file, capsys):
    manifest, _ = simulate(tmp_path, model_file, capsys)
    report1 = tmp_path / "r1.json"
    report2 = tmp_path / "r2.json"
    argv = [
        "fit",
        "--series", str(manifest),
        "--model", str(model_file),
        "--draws", "150",
        "--tolerance", "0.05",
        "--bridge-points", "8",
        "--seed", "3",
    ]
    assert main(argv + ["--out", str(report1)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Formation" in out and "Null" in out
    assert main(argv + ["--out", str(report2), "--quiet"]) == EXIT_OK
    assert capsys.readouterr().out == ""
    # same seed, same inputs: byte-identical reports
    assert report1.read_bytes() == report2.read_bytes()
    body = json.loads(report1.read_text())
    theta = body["phases"]["formation"]["theta"]
    assert len(theta) == 1 and np.isfinite(theta[0])
    assert body["seed"] == 3


def test_missing_files_exit_config(tmp_path, model_file, capsys):
    assert main(["fit", "--series", str(tmp_path / "no.json"), "--model", str(model_file)]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err.lower()
    assert main(["simulate", "--model", str(tmp_path / "no.cfg"), "--n", "4",
                 "--directed", "--steps", "1", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_bad_model_file_exit_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[formation]\nedges = -1\nnot_a_term = 2\n[dissolution]\nedges = 1\n")
    assert main(["simulate", "--model", str(bad), "--n", "4", "--directed",
                 "--steps", "1", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_term_mismatch_exit_config(tmp_path, capsys):
    # degree() is undirected-only; requesting it on a directed simulation
    # is a configuration error
    bad = tmp_path / "deg.cfg"
    bad.write_text("[formation]\nedges = -1\ndegree(1) = 0.5\n[dissolution]\nedges = 1\n")
    assert main(["simulate", "--model", str(bad), "--n", "4", "--directed",
                 "--steps", "1", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_degenerate_fit_exit_runtime(tmp_path, model_file, capsys):
    # a panel where nothing ever dissolves cannot be fit: runtime failure
    d = tmp_path / "frozen"
    d.mkdir()
    (d / "t0.csv").write_text("tail,head\n1,2\n")
    (d / "t1.csv").write_text("tail,head\n1,2\n1,3\n")
    (d / "t2.csv").write_text("tail,head\n1,2\n1,3\n2,3\n")
    (d / "manifest.json").write_text(json.dumps(
        {"n": 3, "directed": True, "snapshots": ["t0.csv", "t1.csv", "t2.csv"]}
    ))
    rc = main(["fit", "--series", str(d / "manifest.json"), "--model", str(model_file),
               "--draws", "100", "--seed", "1"])
    assert rc == EXIT_RUNTIME
    assert "boundary" in capsys.readouterr().err


def test_validate_bad_series_exit_runtime(tmp_path, capsys):
    d = tmp_path / "bad"
    d.mkdir()
    (d / "t0.csv").write_text("tail,head\n1,5\n")
    (d / "t1.csv").write_text("tail,head\n")
    (d / "manifest.json").write_text(json.dumps(
        {"n": 3, "directed": True, "snapshots": ["t0.csv", "t1.csv"]}
    ))
    assert main(["validate", "--series", str(d / "manifest.json")]) == EXIT_RUNTIME
    assert "violation" in capsys.readouterr().out


def test_model_file_parsing(tmp_path):
    p = tmp_path / "m.cfg"
    p.write_text(
        "[formation]\n"
        "edges = -2.0\n"
        "homophily(sex, F) = 0.5  # comment\n"
        "[dissolution]\n"
        "edges\n"
    )
    m = parse_model_file(p)
    assert m.formation_terms == [TermSpec("edges"), TermSpec("mixing", ("sex", "F", "F"))]
    assert m.theta_plus is not None and m.theta_plus[1] == 0.5
    assert m.theta_minus is None  # coefficient-free spec is fine for fitting
    assert parse_term("degree(2)") == TermSpec("degree", (2,))
    assert parse_term("edge_cov(dist)") == TermSpec("edge_cov", ("dist",))
    with pytest.raises(ModelFileError):
        parse_model_file(tmp_path / "missing.cfg")
    bad = tmp_path / "b.cfg"
    bad.write_text("edges = 1\n")  # term before any section header
    with pytest.raises(ModelFileError):
        parse_model_file(bad)
