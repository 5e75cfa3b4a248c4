"""Synthetic benchmark data: connected ER graphs and heat-diffusion mixtures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from graphheat.errors import MaxResamples
from graphheat.model import HeatMixtureModel, SignalSet, WeightedGraph, laplacian
from graphheat.spectral import sym_expm

MAX_RESAMPLES = 1000


@dataclass(frozen=True)
class SynthSpec:
    tau: float = 0.5
    M: int = 200
    n_nodes: int = 20
    edge_prob: float = 0.7
    K: int = 2
    alpha: Optional[tuple] = None  # None -> uniform
    mean_std: float = float(np.sqrt(0.1))
    seed: int = 0
    exact_counts: bool = True

    def __post_init__(self):
        if not 0 < self.edge_prob <= 1:
            raise ValueError("edge_prob must be in (0, 1]")
        if self.M < self.K:
            raise ValueError("M must be >= K")
        if self.alpha is not None and len(self.alpha) != self.K:
            raise ValueError("alpha must have K entries")

    @property
    def alphas(self) -> np.ndarray:
        if self.alpha is None:
            return np.full(self.K, 1.0 / self.K)
        a = np.asarray(self.alpha, dtype=float)
        return a / a.sum()


def is_connected(W: np.ndarray, tol: float = 1e-9) -> bool:
    if W.shape[0] == 1:
        return True
    lam = np.linalg.eigvalsh(laplacian(W))
    return bool(lam[1] > tol)


def random_connected_er_graph(n: int, p: float, rng: np.random.Generator) -> WeightedGraph:
    """Unit-weight Erdos-Renyi graph G(n, p), redrawn until connected."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    iu = np.triu_indices(n, k=1)
    for _ in range(MAX_RESAMPLES):
        W = np.zeros((n, n))
        W[iu] = (rng.random(iu[0].size) < p).astype(float)
        W = W + W.T
        if is_connected(W):
            return WeightedGraph(W)
    raise MaxResamples(f"no connected G({n}, {p}) graph in {MAX_RESAMPLES} draws")


def component_counts(alphas, M: int) -> np.ndarray:
    """Deterministic per-component counts summing to M (largest remainder)."""
    raw = np.asarray(alphas) * M
    counts = np.floor(raw).astype(int)
    short = M - counts.sum()
    counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
    return counts


def sample_signals(model: HeatMixtureModel, M: int, rng: np.random.Generator, exact_counts: bool = False):
    """Draw ``M`` signals ``mu_k + exp(-tau L_k) w`` with standard normal ``w``.

    With ``exact_counts`` the cluster sizes are fixed to ``alpha * M``
    (rounded, in component order) instead of drawn from the categorical.
    Returns ``(signals, model)``; the signals carry the true labels.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    K, n = model.n_components, model.n_nodes
    if exact_counts:
        labels = np.repeat(np.arange(K), component_counts(model.alphas, M))
    else:
        labels = rng.choice(K, size=M, p=model.alphas)
    noise = rng.standard_normal((n, M))
    X = np.empty((n, M))
    for k in range(K):
        cols = labels == k
        if not np.any(cols):
            continue
        kernel = sym_expm(model.graphs[k].laplacian(), -model.tau)
        X[:, cols] = model.means[k][:, None] + kernel @ noise[:, cols]
    return SignalSet(X, labels=labels), model


def random_model(spec: SynthSpec, rng: np.random.Generator) -> HeatMixtureModel:
    graphs = tuple(random_connected_er_graph(spec.n_nodes, spec.edge_prob, rng) for _ in range(spec.K))
    means = spec.mean_std * rng.standard_normal((spec.K, spec.n_nodes))
    return HeatMixtureModel(spec.alphas, means, graphs, spec.tau)


def generate(spec: SynthSpec):
    """Model and signals for one synthetic trial.

    Graphs and means come from one child stream of ``spec.seed`` and the
    signals from another, so changing ``tau`` or ``M`` keeps the graphs.
    """
    model_ss, signal_ss = np.random.SeedSequence(spec.seed).spawn(2)
    model = random_model(spec, np.random.default_rng(model_ss))
    return sample_signals(model, spec.M, np.random.default_rng(signal_ss), exact_counts=spec.exact_counts)
