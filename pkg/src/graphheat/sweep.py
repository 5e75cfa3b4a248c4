"""Synthetic-benchmark trials and the long-format sweep driver."""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from graphheat.baselines import gmm_fit, kmeans_then_graphs
from graphheat.em import fit
from graphheat.metrics import DEFAULT_EDGE_THRESHOLD, evaluate
from graphheat.model import FistaConfig, FitConfig
from graphheat.synth import SynthSpec, generate

logger = logging.getLogger(__name__)

METHODS = ("ghmm", "gmm", "kmeans-gl")
FIELDS = ("method", "vary", "value", "repeat", "nmse", "f_measure", "wall_time")
DEFAULT_VALUES = {
    "m": tuple(range(50, 601, 50)),
    "tau": tuple(round(0.1 * i, 10) for i in range(1, 9)),
}


@dataclass(frozen=True)
class SweepConfig:
    vary: str = "m"
    values: tuple = DEFAULT_VALUES["m"]
    repeats: int = 20
    methods: tuple = METHODS
    M: int = 200
    tau: float = 0.5
    n_nodes: int = 20
    edge_prob: float = 0.7
    K: int = 2
    n_restarts: int = 5
    seed: int = 0
    fista: FistaConfig = field(default_factory=FistaConfig)
    em_max_iters: int = 200
    em_tol: float = 1e-6
    eig_floor: float | None = None
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD

    def __post_init__(self):
        if self.vary not in DEFAULT_VALUES:
            raise ValueError(f"vary must be one of {sorted(DEFAULT_VALUES)}")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


def fit_method(method: str, X, cfg: FitConfig, edge_threshold: float = DEFAULT_EDGE_THRESHOLD):
    """Dispatch to GHMM or a baseline; returns a FitResult."""
    if method == "ghmm":
        return fit(X, cfg)
    if method == "gmm":
        return gmm_fit(X, cfg.K, cfg, edge_threshold).to_fit_result(cfg.tau)
    if method == "kmeans-gl":
        return kmeans_then_graphs(X, cfg.K, cfg).to_fit_result(cfg.tau)
    raise ValueError(f"unknown method {method!r}")


def trial_seeds(seed: int, repeat: int) -> tuple:
    """(data seed, fit seed) for one repeat; independent of the swept value."""
    data = (int(seed), int(repeat))
    fit_seed = int(np.random.SeedSequence([int(seed), int(repeat), 1]).generate_state(1)[0])
    return data, fit_seed


def run_trial(cfg: SweepConfig, method: str, value, repeat: int) -> dict:
    """One (method, value, repeat) cell: generate, fit, evaluate.

    The data stream depends on ``(seed, repeat)`` only, so every swept
    value and every method sees the same ground-truth graphs and means.
    """
    M = int(value) if cfg.vary == "m" else cfg.M
    tau = float(value) if cfg.vary == "tau" else cfg.tau
    data_seed, fit_seed = trial_seeds(cfg.seed, repeat)
    spec = SynthSpec(tau=tau, M=M, n_nodes=cfg.n_nodes, edge_prob=cfg.edge_prob, K=cfg.K, seed=data_seed)
    X, truth = generate(spec)
    fcfg = FitConfig(
        K=cfg.K,
        tau=tau,
        n_restarts=cfg.n_restarts,
        seed=fit_seed,
        fista=cfg.fista,
        em_max_iters=cfg.em_max_iters,
        em_tol=cfg.em_tol,
        eig_floor=cfg.eig_floor,
    )
    t0 = time.perf_counter()
    res = fit_method(method, X, fcfg, cfg.edge_threshold)
    wall = time.perf_counter() - t0
    report = evaluate(X.labels, res.labels(), truth.graphs, res.model.graphs, cfg.edge_threshold)
    return {
        "method": method,
        "vary": cfg.vary,
        "value": value,
        "repeat": repeat,
        "nmse": report.clustering_nmse_percent,
        "f_measure": report.mean_f_measure,
        "wall_time": wall,
    }


def _cell_key(method, value, repeat) -> tuple:
    return (str(method), float(value), int(repeat))


def read_results(path) -> list:
    path = Path(path)
    if not path.is_file():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _format_row(row: dict) -> list:
    out = []
    for f in FIELDS:
        v = row[f]
        out.append(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v))
    return out


def run_sweep(cfg: SweepConfig, out, resume: bool = False, jobs: int = 1) -> int:
    """Run every (method, value, repeat) cell, appending rows to ``out``.

    Rows are flushed as trials finish, so an interrupted sweep keeps its
    partial results; ``resume=True`` skips cells already present. Returns
    the number of rows written by this call.
    """
    out = Path(out)
    done = set()
    if resume:
        for r in read_results(out):
            done.add(_cell_key(r["method"], r["value"], r["repeat"]))
    cells = [
        (method, value, rep)
        for rep in range(cfg.repeats)
        for value in cfg.values
        for method in cfg.methods
        if _cell_key(method, value, rep) not in done
    ]
    fresh = not (resume and out.is_file() and out.stat().st_size > 0)
    written = 0
    with open(out, "w" if fresh else "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(FIELDS)
            fh.flush()
        if jobs <= 1:
            for cell in cells:
                w.writerow(_format_row(run_trial(cfg, *cell)))
                fh.flush()
                written += 1
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_trial, cfg, *cell) for cell in cells]
                for fut in as_completed(futures):
                    w.writerow(_format_row(fut.result()))
                    fh.flush()
                    written += 1
    return written


def summarize(rows) -> dict:
    """Mean nmse / f_measure per (method, value)."""
    acc = {}
    for r in rows:
        key = (r["method"], float(r["value"]))
        acc.setdefault(key, []).append((float(r["nmse"]), float(r["f_measure"])))
    return {k: tuple(np.mean(v, axis=0)) for k, v in acc.items()}
