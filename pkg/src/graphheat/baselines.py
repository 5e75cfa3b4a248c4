"""Comparison methods: a full-covariance GMM and K-means followed by graph learning."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from graphheat.em import (
    FitResult,
    as_matrix,
    kmeans_pp_indices,
    m_step_covariances,
    m_step_graphs,
    m_step_means,
    m_step_weights,
)
from graphheat.errors import AllRestartsFailed, EmptyCluster, NonFinite
from graphheat.metrics import DEFAULT_EDGE_THRESHOLD
from graphheat.model import FitConfig, HeatMixtureModel, ResponsibilityMatrix, WeightedGraph, log_likelihood

logger = logging.getLogger(__name__)

RIDGE = 1e-6


@dataclass(frozen=True, eq=False)
class BaselineResult:
    predicted_labels: np.ndarray
    graphs: tuple
    method: str
    means: Optional[np.ndarray] = None
    alphas: Optional[np.ndarray] = None
    responsibilities: Optional[np.ndarray] = None
    score: float = float("nan")

    def to_fit_result(self, tau: float) -> FitResult:
        """Wrap as a :class:`FitResult` so baselines share the bundle format."""
        K = len(self.graphs)
        G = self.responsibilities
        if G is None:
            G = ResponsibilityMatrix.from_labels(self.predicted_labels, K).values
        model = HeatMixtureModel(self.alphas, self.means, self.graphs, tau)
        return FitResult(
            model=model,
            responsibilities=ResponsibilityMatrix(G),
            log_likelihood_history=np.asarray([self.score]),
            n_iterations=1,
            converged=True,
            method=self.method,
        )


def _ridge(S: np.ndarray) -> np.ndarray:
    n = S.shape[0]
    return S + (RIDGE * max(np.trace(S), 1e-300) / n) * np.eye(n)


def _gauss_logpdf(data: np.ndarray, mu: np.ndarray, S: np.ndarray) -> np.ndarray:
    n = data.shape[0]
    chol = np.linalg.cholesky(S)
    z = np.linalg.solve(chol, data - mu[:, None])
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (n * np.log(2 * np.pi) + logdet + np.sum(z * z, axis=0))


def precision_graph(cov: np.ndarray, edge_threshold: float = DEFAULT_EDGE_THRESHOLD) -> WeightedGraph:
    """Graph from the ridge-regularized precision matrix of ``cov``.

    Off-diagonal ``|P_ij|`` become weights; entries at or below
    ``edge_threshold * max|P|`` are dropped (for a PD matrix the maximum
    sits on the diagonal).
    """
    P = np.linalg.inv(_ridge(cov))
    P = 0.5 * (P + P.T)
    A = np.abs(P)
    cut = edge_threshold * A.max()
    np.fill_diagonal(A, 0.0)
    A[A <= cut] = 0.0
    return WeightedGraph(A)


def _gmm_run(data, K, cfg: FitConfig, rng):
    M = data.shape[1]
    idx = kmeans_pp_indices(data, K, rng)
    means = data[:, idx].T.copy()
    glob = np.cov(data, bias=True).reshape(data.shape[0], data.shape[0])
    covs = [glob.copy() for _ in range(K)]
    alphas = np.full(K, 1.0 / K)
    prev = None
    ll = -np.inf
    for it in range(cfg.em_max_iters):
        logp = np.stack(
            [np.log(alphas[k]) + _gauss_logpdf(data, means[k], _ridge(covs[k])) for k in range(K)], axis=1
        )
        norm = logsumexp(logp, axis=1)
        ll = float(norm.sum())
        if not np.isfinite(ll):
            raise NonFinite("GMM log-likelihood is not finite")
        G = np.exp(logp - norm[:, None])
        G /= G.sum(axis=1, keepdims=True)
        if prev is not None and abs(ll - prev) <= cfg.em_tol * abs(prev):
            break
        prev = ll
        alphas = m_step_weights(G)
        means = m_step_means(G, data)
        covs = m_step_covariances(G, data, means)
    return ll, G, alphas, means, covs


def gmm_fit(X, K: int, cfg: FitConfig, edge_threshold: float = DEFAULT_EDGE_THRESHOLD) -> BaselineResult:
    """Full-covariance Gaussian mixture; graphs are thresholded precisions."""
    data = as_matrix(X)
    best, failures = None, []
    for r in range(cfg.n_restarts):
        rng = np.random.default_rng([cfg.seed, r])
        try:
            run = _gmm_run(data, K, cfg, rng)
        except (NonFinite, EmptyCluster, np.linalg.LinAlgError) as err:
            failures.append((r, err))
            continue
        if best is None or run[0] > best[0]:
            best = run
    if best is None:
        raise AllRestartsFailed(failures)
    ll, G, alphas, means, covs = best
    graphs = tuple(precision_graph(S, edge_threshold) for S in covs)
    return BaselineResult(
        predicted_labels=np.argmax(G, axis=1),
        graphs=graphs,
        method="gmm",
        means=np.asarray(means),
        alphas=np.asarray(alphas),
        responsibilities=G,
        score=ll,
    )


def assign(data: np.ndarray, centroids: np.ndarray) -> tuple:
    """Nearest-centroid labels (ties -> lowest index) and squared distances."""
    d2 = np.sum((data.T[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2


def lloyd(data: np.ndarray, K: int, rng, max_iters: int = 300):
    """One k-means run with k-means++ seeding; returns ``(inertia, labels, centroids)``."""
    centroids = data[:, kmeans_pp_indices(data, K, rng)].T.copy()
    labels = None
    for _ in range(max_iters):
        new, d2 = assign(data, centroids)
        for k in range(K):
            members = new == k
            if not np.any(members):
                # re-seed at the point farthest from its own centroid, taken
                # from a cluster that keeps at least one other member
                sizes = np.bincount(new, minlength=K)
                dist = np.where(sizes[new] > 1, d2[np.arange(new.size), new], -1.0)
                far = int(np.argmax(dist))
                centroids[k] = data[:, far]
                new[far] = k
                d2[far] = 0.0
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(K):
            centroids[k] = data[:, labels == k].mean(axis=1)
    labels, d2 = assign(data, centroids)
    inertia = float(d2[np.arange(labels.size), labels].sum())
    return inertia, labels, centroids


def kmeans(X, K: int, n_restarts: int = 5, seed: int = 0):
    data = as_matrix(X)
    best = None
    for r in range(n_restarts):
        run = lloyd(data, K, np.random.default_rng([seed, r]))
        if best is None or run[0] < best[0]:
            best = run
    return best


def graphs_from_labels(X, labels, K: int, cfg: FitConfig, warm_starts=None) -> list:
    """Per-cluster graph learning from hard labels, through the EM M-step code."""
    data = as_matrix(X)
    G = ResponsibilityMatrix.from_labels(labels, K).values
    means = m_step_means(G, data)
    covs = m_step_covariances(G, data, means)
    return m_step_graphs(covs, cfg.tau, cfg.fista, warm_starts, cfg.eig_floor)


def kmeans_then_graphs(X, K: int, cfg: FitConfig) -> BaselineResult:
    """K-means on the signal columns, then the heat-kernel learner on each cluster."""
    data = as_matrix(X)
    if data.shape[1] < K:
        raise ValueError(f"need at least K={K} signals")
    inertia, labels, _ = kmeans(data, K, cfg.n_restarts, cfg.seed)
    G = ResponsibilityMatrix.from_labels(labels, K).values
    graphs = tuple(graphs_from_labels(data, labels, K, cfg))
    means = m_step_means(G, data)
    alphas = m_step_weights(G)
    model = HeatMixtureModel(alphas, means, graphs, cfg.tau)
    return BaselineResult(
        predicted_labels=labels,
        graphs=graphs,
        method="kmeans-gl",
        means=means,
        alphas=alphas,
        responsibilities=G,
        score=log_likelihood(model, data),
    )
