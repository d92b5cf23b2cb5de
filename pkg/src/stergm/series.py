"""Network panel (series) container and file I/O.

On disk a series is a JSON manifest naming per-snapshot edge-list CSVs,
an optional node-attribute CSV, and optional dense dyad-covariate CSVs.
Edge lists have a `tail,head` header; undirected files must satisfy
tail < head on every row.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import (
    DyadCovariate,
    Network,
    NetworkError,
    NodeCovariate,
    TransitionDecomposition,
    decompose_transition,
)

__all__ = ["NetworkSeries", "load_series", "save_series", "SeriesFormatError"]


class SeriesFormatError(ValueError):
    """Malformed manifest or data file."""


@dataclass
class NetworkSeries:
    """A time-ordered panel of networks over one node set."""

    networks: list[Network]
    node_attrs: dict[str, NodeCovariate] = field(default_factory=dict)
    dyad_covs: dict[str, DyadCovariate] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.networks) < 2:
            raise NetworkError("a series needs at least two snapshots")
        first = self.networks[0]
        for k, net in enumerate(self.networks):
            if net.n != first.n or net.directed != first.directed:
                raise NetworkError(
                    f"snapshot {k} has (n={net.n}, directed={net.directed}), "
                    f"expected (n={first.n}, directed={first.directed})"
                )
        for cov in self.node_attrs.values():
            cov.check_length(first.n)
        for cov in self.dyad_covs.values():
            cov.check(first.n, first.directed)

    @property
    def n(self) -> int:
        return self.networks[0].n

    @property
    def directed(self) -> bool:
        return self.networks[0].directed

    @property
    def n_transitions(self) -> int:
        return len(self.networks) - 1

    def context(self):
        """Term-binding context (node count, directedness, covariates)."""
        from .terms import ModelContext

        return ModelContext(
            n=self.n,
            directed=self.directed,
            node_attrs=self.node_attrs,
            dyad_covs=self.dyad_covs,
        )

    def transitions(self) -> list[tuple[Network, Network, TransitionDecomposition]]:
        """(y_prev, y_next, decomposition) for every consecutive pair."""
        out = []
        for t in range(1, len(self.networks)):
            prev, nxt = self.networks[t - 1], self.networks[t]
            out.append((prev, nxt, decompose_transition(prev, nxt)))
        return out


def _read_edge_list(path: Path, n: int, directed: bool) -> Network:
    edges = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["tail", "head"]:
            raise SeriesFormatError(f"{path}: expected header 'tail,head'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                i, j = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                raise SeriesFormatError(f"{path}:{lineno}: bad edge row {row!r}")
            if i == j:
                raise SeriesFormatError(f"{path}:{lineno}: self-loop ({i},{j})")
            if not (1 <= i <= n and 1 <= j <= n):
                raise SeriesFormatError(
                    f"{path}:{lineno}: node index out of range 1..{n} in ({i},{j})"
                )
            if not directed and not i < j:
                raise SeriesFormatError(
                    f"{path}:{lineno}: undirected edge must have tail < head, got ({i},{j})"
                )
            edges.append((i, j))
    try:
        return Network.from_edges(n, directed, edges)
    except NetworkError as e:
        raise SeriesFormatError(f"{path}: {e}") from e


def _write_edge_list(path: Path, net: Network) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["tail", "head"])
        for (i, j) in sorted(net.ties):
            w.writerow([i, j])


def _read_node_attrs(path: Path, n: int) -> dict[str, NodeCovariate]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[0].strip() != "node":
            raise SeriesFormatError(f"{path}: expected header 'node,<name>...'")
        names = [h.strip() for h in header[1:]]
        values: dict[int, list] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                node = int(row[0])
            except ValueError:
                raise SeriesFormatError(f"{path}:{lineno}: bad node id {row[0]!r}")
            if not (1 <= node <= n):
                raise SeriesFormatError(f"{path}:{lineno}: node {node} out of range 1..{n}")
            if node in values:
                raise SeriesFormatError(f"{path}:{lineno}: duplicate node {node}")
            values[node] = row[1 : 1 + len(names)]
    if len(values) != n:
        raise SeriesFormatError(f"{path}: expected one row per node (n={n}), got {len(values)}")
    out = {}
    for k, name in enumerate(names):
        col = [values[i][k] for i in range(1, n + 1)]
        # numeric columns become floats, anything else stays a label
        try:
            col = [float(v) for v in col]
        except ValueError:
            col = [str(v) for v in col]
        out[name] = NodeCovariate(name=name, values=tuple(col))
    return out


def load_series(manifest_path: str | Path) -> NetworkSeries:
    """Load a series from a JSON manifest; paths are resolved relative to it."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise SeriesFormatError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise SeriesFormatError(f"{manifest_path}: invalid JSON ({e})") from e
    base = manifest_path.parent
    for key in ("n", "directed", "snapshots"):
        if key not in manifest:
            raise SeriesFormatError(f"{manifest_path}: missing field {key!r}")
    n = int(manifest["n"])
    directed = bool(manifest["directed"])
    snapshots = manifest["snapshots"]
    if not isinstance(snapshots, list) or len(snapshots) < 2:
        raise SeriesFormatError(f"{manifest_path}: 'snapshots' must list >= 2 files")
    networks = []
    for rel in snapshots:
        path = base / rel
        if not path.exists():
            raise SeriesFormatError(f"snapshot file not found: {path}")
        networks.append(_read_edge_list(path, n, directed))
    node_attrs: dict[str, NodeCovariate] = {}
    if manifest.get("node_attrs"):
        node_attrs = _read_node_attrs(base / manifest["node_attrs"], n)
    dyad_covs: dict[str, DyadCovariate] = {}
    for name, rel in (manifest.get("dyad_covs") or {}).items():
        path = base / rel
        if not path.exists():
            raise SeriesFormatError(f"dyad covariate file not found: {path}")
        x = np.loadtxt(path, delimiter=",", ndmin=2)
        try:
            cov = DyadCovariate(name=name, x=x)
            cov.check(n, directed)
        except NetworkError as e:
            raise SeriesFormatError(f"{path}: {e}") from e
        dyad_covs[name] = cov
    try:
        return NetworkSeries(networks=networks, node_attrs=node_attrs, dyad_covs=dyad_covs)
    except NetworkError as e:
        raise SeriesFormatError(str(e)) from e


def save_series(series: NetworkSeries, out_dir: str | Path) -> Path:
    """Write snapshots + covariates + manifest into out_dir; returns manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "n": series.n,
        "directed": series.directed,
        "snapshots": [],
    }
    for t, net in enumerate(series.networks):
        rel = f"t{t}.csv"
        _write_edge_list(out_dir / rel, net)
        manifest["snapshots"].append(rel)
    if series.node_attrs:
        rel = "node_attrs.csv"
        names = sorted(series.node_attrs)
        with open(out_dir / rel, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["node"] + names)
            for i in range(1, series.n + 1):
                w.writerow([i] + [series.node_attrs[name].value(i) for name in names])
        manifest["node_attrs"] = rel
    if series.dyad_covs:
        manifest["dyad_covs"] = {}
        for name in sorted(series.dyad_covs):
            rel = f"dyadcov_{name}.csv"
            np.savetxt(out_dir / rel, series.dyad_covs[name].x, delimiter=",")
            manifest["dyad_covs"][name] = rel
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
