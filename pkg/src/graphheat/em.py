"""Expectation-maximisation for the graph heat mixture model."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from graphheat import graphlearn
from graphheat.errors import AllRestartsFailed, EmptyCluster, NonFinite
from graphheat.model import (
    FistaConfig,
    FitConfig,
    HeatMixtureModel,
    ResponsibilityMatrix,
    SignalSet,
    WeightedGraph,
    log_likelihood,
)
from graphheat.spectral import sym_logm_psd

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FitResult:
    model: HeatMixtureModel
    responsibilities: ResponsibilityMatrix
    log_likelihood_history: np.ndarray
    n_iterations: int
    converged: bool
    restart_index: int = 0
    restart_log_likelihoods: tuple = ()
    method: str = "ghmm"
    # iterations where the graph step lowered the log-likelihood
    monotonicity_violations: tuple = field(default=())

    @property
    def final_log_likelihood(self) -> float:
        h = self.log_likelihood_history
        return float(h[-1]) if len(h) else float("nan")

    def labels(self) -> np.ndarray:
        return self.responsibilities.hard_labels()


def as_matrix(X) -> np.ndarray:
    """Raw ``N x M`` array of a SignalSet or array-like."""
    return X.data if isinstance(X, SignalSet) else np.asarray(X, dtype=float)


def e_step(model: HeatMixtureModel, X) -> ResponsibilityMatrix:
    """Posterior cluster probabilities, computed in log space."""
    logp = model.component_log_densities(X)
    norm = logsumexp(logp, axis=1)
    bad = np.flatnonzero(~np.isfinite(norm))
    if bad.size:
        raise NonFinite(f"signal {int(bad[0])} has zero likelihood under every component")
    G = np.exp(logp - norm[:, None])
    G /= G.sum(axis=1, keepdims=True)
    return ResponsibilityMatrix(G)


def _gamma(gamma) -> np.ndarray:
    return gamma.values if isinstance(gamma, ResponsibilityMatrix) else np.asarray(gamma, dtype=float)


def _masses(G: np.ndarray) -> np.ndarray:
    mass = G.sum(axis=0)
    empty = np.flatnonzero(mass < 1e-10 * G.shape[0])
    if empty.size:
        raise EmptyCluster(empty)
    return mass


def m_step_weights(gamma) -> np.ndarray:
    G = _gamma(gamma)
    a = G.sum(axis=0) / G.shape[0]
    return a / a.sum()


def m_step_means(gamma, X) -> np.ndarray:
    """``K x N`` responsibility-weighted means."""
    G = _gamma(gamma)
    mass = _masses(G)
    return (as_matrix(X) @ G).T / mass[:, None]


def m_step_covariances(gamma, X, means) -> list:
    """Responsibility-weighted (biased) sample covariances, one per component."""
    G = _gamma(gamma)
    mass = _masses(G)
    data = as_matrix(X)
    covs = []
    for k in range(G.shape[1]):
        D = data - np.asarray(means[k])[:, None]
        S = (D * G[:, k]) @ D.T / mass[k]
        covs.append(0.5 * (S + S.T))
    return covs


def m_step_graphs(
    covariances: Sequence[np.ndarray],
    tau: float,
    fista: FistaConfig,
    warm_starts: Optional[Sequence] = None,
    eig_floor: Optional[float] = None,
) -> list:
    """Recover one graph per covariance from its matrix logarithm."""
    graphs = []
    for k, S in enumerate(covariances):
        problem = graphlearn.GraphLearnProblem(sym_logm_psd(S, eig_floor), tau, fista.beta_for(tau))
        init = np.zeros_like(S) if warm_starts is None else warm_starts[k]
        graphs.append(graphlearn.solve(problem, init, fista))
    return graphs


def random_feasible_weights(n: int, rng: np.random.Generator, edge_prob: float = 0.5) -> np.ndarray:
    U = rng.random((n, n)) * (rng.random((n, n)) < edge_prob)
    W = np.triu(U, k=1)
    return W + W.T


def kmeans_pp_indices(data: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding over the columns of ``data``; returns K distinct indices."""
    M = data.shape[1]
    chosen = [int(rng.integers(M))]
    with np.errstate(over="ignore"):
        d2 = np.sum((data - data[:, [chosen[0]]]) ** 2, axis=0)
    for _ in range(1, K):
        d2[chosen] = 0.0
        total = d2.sum()
        if not np.isfinite(total):
            raise NonFinite("squared distances overflow during seeding")
        if total > 0:
            nxt = int(rng.choice(M, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(M), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        with np.errstate(over="ignore"):
            d2 = np.minimum(d2, np.sum((data - data[:, [nxt]]) ** 2, axis=0))
    return np.asarray(chosen)


def initialize(X, cfg: FitConfig, rng: np.random.Generator) -> HeatMixtureModel:
    data = as_matrix(X)
    n, K = data.shape[0], cfg.K
    idx = kmeans_pp_indices(data, K, rng)
    graphs = tuple(WeightedGraph(random_feasible_weights(n, rng, cfg.init_edge_prob)) for _ in range(K))
    return HeatMixtureModel(np.full(K, 1.0 / K), data[:, idx].T, graphs, cfg.tau)


def _reseed(model: HeatMixtureModel, gamma: np.ndarray, data: np.ndarray, dead) -> HeatMixtureModel:
    K = model.n_components
    means = np.array(model.means)
    alphas = np.array(model.alphas)
    order = np.argsort(gamma.max(axis=1), kind="stable")
    for j, k in enumerate(dead):
        means[k] = data[:, order[j % order.size]]
        alphas[k] = 1.0 / K
    return HeatMixtureModel(alphas / alphas.sum(), means, model.graphs, model.tau)


def run_em(X, init: HeatMixtureModel, cfg: FitConfig, restart_index: int = 0) -> FitResult:
    """Run EM from a given initial model until convergence or ``em_max_iters``."""
    data = as_matrix(X)
    model = init
    history = []
    violations = []
    converged = False
    reseeds = 0
    prev = None
    while len(history) < cfg.em_max_iters:
        G = e_step(model, data).values
        try:
            alphas = m_step_weights(G)
            means = m_step_means(G, data)
            covs = m_step_covariances(G, data, means)
        except EmptyCluster as err:
            reseeds += 1
            if reseeds > cfg.max_reseeds:
                raise
            logger.debug("reseeding components %s", err.components)
            model = _reseed(model, G, data, err.components)
            continue
        if cfg.update_graphs:
            graphs = tuple(m_step_graphs(covs, cfg.tau, cfg.fista, model.graphs, cfg.eig_floor))
        else:
            graphs = model.graphs
        if cfg.update_graphs:
            before = log_likelihood(HeatMixtureModel(alphas, means, model.graphs, cfg.tau), data)
        model = HeatMixtureModel(alphas, means, graphs, cfg.tau)
        ll = log_likelihood(model, data)
        if not np.isfinite(ll):
            raise NonFinite("log-likelihood is not finite")
        if cfg.update_graphs and ll < before - 1e-9 * max(1.0, abs(before)):
            violations.append(len(history))
        history.append(ll)
        if prev is not None and abs(ll - prev) <= cfg.em_tol * abs(prev):
            converged = True
            break
        prev = ll
    if violations:
        logger.info("graph step lowered the log-likelihood at %d iteration(s)", len(violations))
    return FitResult(
        model=model,
        responsibilities=e_step(model, data),
        log_likelihood_history=np.asarray(history),
        n_iterations=len(history),
        converged=converged,
        restart_index=restart_index,
        monotonicity_violations=tuple(violations),
    )


def canonical_order(data: np.ndarray) -> np.ndarray:
    """Column order that depends only on the multiset of columns."""
    return np.lexsort(data[::-1])


def fit(X, cfg: FitConfig) -> FitResult:
    """Best-of-``n_restarts`` EM fit.

    Restart ``r`` draws its initialization from ``default_rng([seed, r])``.
    Columns are processed in a canonical (lexicographic) order, so the
    fitted model does not depend on the order of the input signals; the
    returned responsibilities follow the caller's order.
    """
    data = as_matrix(X)
    M = data.shape[1]
    if M < cfg.K:
        raise ValueError(f"need at least K={cfg.K} signals, got {M}")
    order = canonical_order(data)
    sorted_data = data[:, order]

    best = None
    lls, failures = [], []
    for r in range(cfg.n_restarts):
        rng = np.random.default_rng([cfg.seed, r])
        try:
            res = run_em(sorted_data, initialize(sorted_data, cfg, rng), cfg, restart_index=r)
        except (NonFinite, EmptyCluster) as err:
            logger.warning("restart %d failed: %s", r, err)
            failures.append((r, err))
            lls.append(float("nan"))
            continue
        lls.append(res.final_log_likelihood)
        if best is None or res.final_log_likelihood > best.final_log_likelihood:
            best = res
    if best is None:
        raise AllRestartsFailed(failures)

    G = np.empty_like(best.responsibilities.values)
    G[order] = best.responsibilities.values
    return FitResult(
        model=best.model,
        responsibilities=ResponsibilityMatrix(G),
        log_likelihood_history=best.log_likelihood_history,
        n_iterations=best.n_iterations,
        converged=best.converged,
        restart_index=best.restart_index,
        restart_log_likelihoods=tuple(lls),
        monotonicity_violations=best.monotonicity_violations,
    )
