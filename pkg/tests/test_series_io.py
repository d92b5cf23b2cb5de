import json

import numpy as np
import pytest

from stergm.network import DyadCovariate, Network, NetworkError, NodeCovariate
from stergm.series import NetworkSeries, SeriesFormatError, load_series, save_series

from conftest import random_network


def make_series(rng, n=6, directed=True, T=3, with_covs=True):
    nets = [random_network(n, directed, rng) for _ in range(T + 1)]
    node_attrs = {}
    dyad_covs = {}
    if with_covs:
        node_attrs["grp"] = NodeCovariate(
            "grp", tuple("A" if i % 2 else "B" for i in range(n))
        )
        x = rng.normal(size=(n, n))
        if not directed:
            x = (x + x.T) / 2
        dyad_covs["w"] = DyadCovariate("w", x)
    return NetworkSeries(networks=nets, node_attrs=node_attrs, dyad_covs=dyad_covs)


def test_series_invariants():
    a = Network.empty(3, True)
    with pytest.raises(NetworkError):
        NetworkSeries(networks=[a])  # too short
    with pytest.raises(NetworkError):
        NetworkSeries(networks=[a, Network.empty(4, True)])
    with pytest.raises(NetworkError):
        NetworkSeries(networks=[a, Network.empty(3, False)])


def test_roundtrip(tmp_path, rng):
    for directed in (True, False):
        series = make_series(rng, directed=directed)
        manifest = save_series(series, tmp_path / ("d" if directed else "u"))
        loaded = load_series(manifest)
        assert [s.ties for s in loaded.networks] == [s.ties for s in series.networks]
        assert loaded.node_attrs["grp"].values == series.node_attrs["grp"].values
        assert np.allclose(loaded.dyad_covs["w"].x, series.dyad_covs["w"].x)


def test_two_snapshot_manifest(tmp_path):
    (tmp_path / "t0.csv").write_text("tail,head\n1,2\n")
    (tmp_path / "t1.csv").write_text("tail,head\n1,2\n2,3\n")
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps({"n": 3, "directed": True, "snapshots": ["t0.csv", "t1.csv"]}))
    series = load_series(m)
    assert len(series.networks) == 2
    assert series.networks[1].ties == {(1, 2), (2, 3)}


def test_self_loop_rejected(tmp_path):
    (tmp_path / "t0.csv").write_text("tail,head\n5,5\n")
    (tmp_path / "t1.csv").write_text("tail,head\n")
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps({"n": 6, "directed": True, "snapshots": ["t0.csv", "t1.csv"]}))
    with pytest.raises(SeriesFormatError, match="self-loop"):
        load_series(m)


def test_bad_files(tmp_path):
    with pytest.raises(SeriesFormatError, match="not found"):
        load_series(tmp_path / "missing.json")
    m = tmp_path / "manifest.json"
    m.write_text("{not json")
    with pytest.raises(SeriesFormatError, match="JSON"):
        load_series(m)
    (tmp_path / "t0.csv").write_text("tail,head\n1,2\n1,2\n")
    (tmp_path / "t1.csv").write_text("tail,head\n")
    m.write_text(json.dumps({"n": 3, "directed": True, "snapshots": ["t0.csv", "t1.csv"]}))
    with pytest.raises(SeriesFormatError, match="duplicate"):
        load_series(m)


def test_out_of_range_node(tmp_path):
    (tmp_path / "t0.csv").write_text("tail,head\n1,9\n")
    (tmp_path / "t1.csv").write_text("tail,head\n")
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps({"n": 3, "directed": True, "snapshots": ["t0.csv", "t1.csv"]}))
    with pytest.raises(SeriesFormatError, match="out of range"):
        load_series(m)


def test_undirected_ordering_enforced(tmp_path):
    (tmp_path / "t0.csv").write_text("tail,head\n2,1\n")
    (tmp_path / "t1.csv").write_text("tail,head\n")
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps({"n": 3, "directed": False, "snapshots": ["t0.csv", "t1.csv"]}))
    with pytest.raises(SeriesFormatError, match="tail < head"):
        load_series(m)
