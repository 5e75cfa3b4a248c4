"""Text formats for signals, graphs and fitted-model bundles.

Byte-level layouts are documented in ``docs/formats.md``. Every float is
written with 17 significant digits, which round-trips IEEE doubles exactly.
"""
from __future__ import annotations

import csv
import json
from math import isfinite
from pathlib import Path

import numpy as np

from graphheat.em import FitResult
from graphheat.errors import (
    DuplicateEdge,
    IndexOutOfRange,
    MissingFile,
    ParseError,
    RaggedRows,
    SchemaVersionMismatch,
)
from graphheat.model import HeatMixtureModel, ResponsibilityMatrix, SignalSet, WeightedGraph

SCHEMA_VERSION = 1
MODEL_FILE = "model.json"
RESPONSIBILITIES_FILE = "responsibilities.csv"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, row: int, col: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"non-numeric cell {text!r}", row=row, col=col) from None
    if not isfinite(v):
        raise ParseError(f"non-finite cell {text!r}", row=row, col=col)
    return v


# --- signals -----------------------------------------------------------------

def read_signals(path, has_timestamps: bool = False) -> SignalSet:
    """Read a signals-as-rows CSV into an ``N x M`` :class:`SignalSet`.

    Row and column numbers in errors are 1-based and count the header row.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError("empty signal file", row=1)
    header = rows[0]
    first = 1 if has_timestamps else 0
    names = header[first:]
    if not names:
        raise ParseError("header has no node columns", row=1)
    values, stamps = [], []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise RaggedRows(f"expected {len(header)} cells, found {len(r)}", row=i)
        if has_timestamps:
            stamps.append(r[0])
        values.append([_parse_float(c, i, j) for j, c in enumerate(r[first:], start=first + 1)])
    if not values:
        raise ParseError("no signal rows", row=2)
    return SignalSet(
        np.asarray(values, dtype=float).T,
        node_names=tuple(names),
        timestamps=tuple(stamps) if has_timestamps else None,
    )


def write_signals(path, signals: SignalSet) -> None:
    names = signals.node_names or tuple(f"node{i}" for i in range(signals.n_nodes))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        ts = signals.timestamps
        w.writerow((["timestamp"] if ts is not None else []) + list(names))
        for m in range(signals.n_signals):
            row = [fmt(v) for v in signals.data[:, m]]
            w.writerow(([ts[m]] if ts is not None else []) + row)


def write_labels(path, labels, timestamps=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal", "label"] if timestamps is None else ["signal", "timestamp", "label"])
        for m, lab in enumerate(labels):
            w.writerow([m, int(lab)] if timestamps is None else [m, timestamps[m], int(lab)])


def read_labels(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "label" not in header:
            raise ParseError("labels file lacks a 'label' column", row=1)
        col = header.index("label")
        out = []
        for i, r in enumerate(reader, start=2):
            try:
                out.append(int(r[col]))
            except (ValueError, IndexError):
                raise ParseError("bad label", row=i, col=col + 1) from None
    return np.asarray(out, dtype=np.int64)


# --- graphs ------------------------------------------------------------------

def write_graph(path, graph: WeightedGraph) -> None:
    lines = [f"# nodes {graph.n_nodes}"]
    lines += [f"{i} {j} {fmt(w)}" for i, j, w in graph.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> WeightedGraph:
    """Parse an edge list; rejects self-loops, duplicates and bad indices."""
    lines = Path(path).read_text().splitlines()
    n = None
    W = None
    seen = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes" and n is None:
                try:
                    n = int(parts[1])
                except ValueError:
                    raise ParseError("bad node count", row=lineno) from None
                if n < 1:
                    raise ParseError("node count must be >= 1", row=lineno)
                W = np.zeros((n, n))
            continue
        if W is None:
            raise ParseError("edge before '# nodes N' header", row=lineno)
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("expected 'i j w'", row=lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError("non-integer node index", row=lineno) from None
        w = _parse_float(parts[2], lineno, 3)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(f"line {lineno}: node index out of range for N={n}")
        if i == j:
            raise IndexOutOfRange(f"line {lineno}: self-loop {i} {j}")
        if w <= 0:
            raise ParseError("edge weight must be > 0", row=lineno, col=3)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"line {lineno}: duplicate edge {key}")
        seen.add(key)
        W[i, j] = W[j, i] = w
    if W is None:
        raise ParseError("missing '# nodes N' header", row=1)
    return WeightedGraph(W)


# --- bundles -----------------------------------------------------------------

def graph_file(k: int) -> str:
    return f"graph_{k}.edges"


def save_result(directory, result: FitResult) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    m = result.model
    meta = {
        "schema_version": SCHEMA_VERSION,
        "method": result.method,
        "K": m.n_components,
        "n_nodes": m.n_nodes,
        "tau": m.tau,
        "alphas": [float(a) for a in m.alphas],
        "means": [[float(v) for v in row] for row in m.means],
        "graph_files": [graph_file(k) for k in range(m.n_components)],
        "log_likelihood_history": [float(v) for v in result.log_likelihood_history],
        "n_iterations": int(result.n_iterations),
        "converged": bool(result.converged),
        "restart_index": int(result.restart_index),
        "restart_log_likelihoods": [float(v) for v in result.restart_log_likelihoods],
    }
    (d / MODEL_FILE).write_text(json.dumps(meta, indent=2) + "\n")
    for k, g in enumerate(m.graphs):
        write_graph(d / graph_file(k), g)
    G = result.responsibilities.values
    with open(d / RESPONSIBILITIES_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"k{k}" for k in range(G.shape[1])])
        for row in G:
            w.writerow([fmt(v) for v in row])
    return d


def load_result(directory) -> FitResult:
    d = Path(directory)
    path = d / MODEL_FILE
    if not path.is_file():
        raise MissingFile(f"{path} not found")
    try:
        meta = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: {err.msg}", row=err.lineno, col=err.colno) from None
    version = meta.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"bundle schema {version!r}, expected {SCHEMA_VERSION}")
    K = int(meta["K"])
    files = meta.get("graph_files") or [graph_file(k) for k in range(K)]
    if len(files) != K:
        raise SchemaVersionMismatch(f"bundle lists {len(files)} graphs for K={K}")
    graphs = []
    for name in files:
        gp = d / name
        if not gp.is_file():
            raise MissingFile(f"{gp} not found")
        graphs.append(read_graph(gp))
    rp = d / RESPONSIBILITIES_FILE
    if not rp.is_file():
        raise MissingFile(f"{rp} not found")
    with open(rp, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r][1:]
    G = np.asarray([[_parse_float(c, i + 2, j + 1) for j, c in enumerate(r)] for i, r in enumerate(rows)])
    G = G.reshape(len(rows), K)
    model = HeatMixtureModel(np.asarray(meta["alphas"]), np.asarray(meta["means"]), tuple(graphs), meta["tau"])
    return FitResult(
        model=model,
        responsibilities=ResponsibilityMatrix(G),
        log_likelihood_history=np.asarray(meta.get("log_likelihood_history", []), dtype=float),
        n_iterations=int(meta.get("n_iterations", 0)),
        converged=bool(meta.get("converged", False)),
        restart_index=int(meta.get("restart_index", 0)),
        restart_log_likelihoods=tuple(meta.get("restart_log_likelihoods", [])),
        method=meta.get("method", "ghmm"),
    )
