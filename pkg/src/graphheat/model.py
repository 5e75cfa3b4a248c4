"""Domain types: graphs, signal sets, mixture parameters and configs.

All array-holding types freeze their arrays (``writeable = False``) after
validation so instances can be shared without defensive copies.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from graphheat.spectral import heat_log_density_many

_SYM_TOL = 1e-10


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected weighted graph on ``n_nodes`` vertices.

    ``weights`` must be symmetric (within 1e-10, then symmetrized exactly),
    nonnegative and zero on the diagonal.
    """

    weights: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 1:
            raise ValueError(f"weights must be a non-empty square matrix, got {W.shape}")
        if not np.all(np.isfinite(W)):
            raise ValueError("weights contain NaN or Inf")
        scale = max(1.0, float(np.max(np.abs(W))) if W.size else 1.0)
        if np.max(np.abs(W - W.T)) > _SYM_TOL * scale:
            raise ValueError("weights are not symmetric")
        W = 0.5 * (W + W.T)
        if np.any(np.diag(W) != 0):
            raise ValueError("weights must have a zero diagonal")
        if np.any(W < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "weights", _frozen(W))

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def empty(cls, n_nodes: int) -> "WeightedGraph":
        return cls(np.zeros((n_nodes, n_nodes)))

    def laplacian(self) -> np.ndarray:
        return laplacian(self)

    def edges(self, threshold: float = 0.0):
        """Upper-triangular edge list ``[(i, j, w), ...]`` with ``w > threshold``."""
        iu, ju = np.triu_indices(self.n_nodes, k=1)
        w = self.weights[iu, ju]
        keep = w > threshold
        return [(int(i), int(j), float(x)) for i, j, x in zip(iu[keep], ju[keep], w[keep])]

    def n_edges(self, threshold: float = 0.0) -> int:
        return int(np.count_nonzero(np.triu(self.weights, k=1) > threshold))

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None


def laplacian(g) -> np.ndarray:
    """Combinatorial Laplacian ``D - W`` of a graph or raw weight matrix."""
    W = g.weights if isinstance(g, WeightedGraph) else np.asarray(g, dtype=float)
    L = -W
    L[np.diag_indices_from(L)] = W.sum(axis=1)
    return L


@dataclass(frozen=True, eq=False)
class SignalSet:
    """Observed signals as an ``N x M`` matrix, one signal per column.

    ``labels`` (0-based cluster indices) are carried only for evaluation;
    ``node_names`` and ``timestamps`` are carried through I/O untouched.
    """

    data: np.ndarray
    labels: Optional[np.ndarray] = None
    node_names: Optional[tuple] = None
    timestamps: Optional[tuple] = None

    def __post_init__(self):
        X = np.asarray(self.data, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"signal data must be 2-D (N x M), got shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("need at least one node and one signal")
        if not np.all(np.isfinite(X)):
            raise ValueError("signal data contain NaN or Inf")
        object.__setattr__(self, "data", _frozen(X))
        if self.labels is not None:
            lab = _frozen(self.labels, dtype=np.int64)
            if lab.shape != (X.shape[1],):
                raise ValueError("labels must have one entry per signal")
            object.__setattr__(self, "labels", lab)
        if self.node_names is not None:
            names = tuple(str(n) for n in self.node_names)
            if len(names) != X.shape[0]:
                raise ValueError("node_names must have one entry per node")
            object.__setattr__(self, "node_names", names)
        if self.timestamps is not None:
            ts = tuple(str(t) for t in self.timestamps)
            if len(ts) != X.shape[1]:
                raise ValueError("timestamps must have one entry per signal")
            object.__setattr__(self, "timestamps", ts)

    @property
    def n_nodes(self) -> int:
        return self.data.shape[0]

    @property
    def n_signals(self) -> int:
        return self.data.shape[1]

    def take(self, columns) -> "SignalSet":
        columns = np.asarray(columns, dtype=np.int64)
        return SignalSet(
            self.data[:, columns],
            labels=None if self.labels is None else self.labels[columns],
            node_names=self.node_names,
            timestamps=None if self.timestamps is None else tuple(self.timestamps[i] for i in columns),
        )


@dataclass(frozen=True, eq=False)
class HeatMixtureModel:
    """``K`` heat-diffusion components sharing one diffusion time ``tau``.

    Component ``k`` is ``N(means[k], exp(-2 tau L_k))`` with prior weight
    ``alphas[k]`` and ``L_k = graphs[k].laplacian()``.
    """

    alphas: np.ndarray
    means: np.ndarray  # K x N
    graphs: tuple
    tau: float

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float).reshape(-1)
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        graphs = tuple(self.graphs)
        K = a.size
        if K < 1:
            raise ValueError("need at least one component")
        if mu.shape[0] != K or len(graphs) != K:
            raise ValueError("alphas, means and graphs must have K entries each")
        if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-12:
            raise ValueError(f"alphas must be nonnegative and sum to 1, got {a}")
        if not all(isinstance(g, WeightedGraph) for g in graphs):
            raise TypeError("graphs must be WeightedGraph instances")
        n = mu.shape[1]
        if any(g.n_nodes != n for g in graphs):
            raise ValueError("all graphs and means must share n_nodes")
        if not np.all(np.isfinite(mu)):
            raise ValueError("means contain NaN or Inf")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be > 0, got {self.tau!r}")
        object.__setattr__(self, "alphas", _frozen(a))
        object.__setattr__(self, "means", _frozen(mu))
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def n_components(self) -> int:
        return self.alphas.size

    @property
    def n_nodes(self) -> int:
        return self.means.shape[1]

    def permuted(self, order: Sequence[int]) -> "HeatMixtureModel":
        order = list(order)
        return HeatMixtureModel(
            self.alphas[order], self.means[order], tuple(self.graphs[k] for k in order), self.tau
        )

    def component_log_densities(self, X) -> np.ndarray:
        """``M x K`` matrix of ``log alpha_k + log N(x_m | mu_k, exp(-2 tau L_k))``."""
        data = X.data if isinstance(X, SignalSet) else np.asarray(X, dtype=float)
        if data.shape[0] != self.n_nodes:
            raise ValueError(f"signals have {data.shape[0]} nodes, model has {self.n_nodes}")
        cols = []
        with np.errstate(divide="ignore"):
            log_alpha = np.log(self.alphas)
        for k, g in enumerate(self.graphs):
            cols.append(log_alpha[k] + heat_log_density_many(data, self.means[k], g.laplacian(), self.tau))
        return np.stack(cols, axis=1)


def log_likelihood(model: HeatMixtureModel, X) -> float:
    """Observed-data log-likelihood ``sum_m log sum_k alpha_k N(x_m | ...)``."""
    return float(np.sum(logsumexp(model.component_log_densities(X), axis=1)))


@dataclass(frozen=True, eq=False)
class ResponsibilityMatrix:
    """``M x K`` posterior cluster probabilities; rows sum to one."""

    values: np.ndarray

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(G)):
            raise ValueError("responsibilities contain NaN or Inf")
        if np.any(G < 0) or np.any(G > 1):
            raise ValueError("responsibilities must lie in [0, 1]")
        if np.max(np.abs(G.sum(axis=1) - 1.0)) > 1e-10:
            raise ValueError("responsibility rows must sum to 1")
        object.__setattr__(self, "values", _frozen(G))

    @property
    def n_signals(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    def hard_labels(self) -> np.ndarray:
        return np.argmax(self.values, axis=1)

    @classmethod
    def from_labels(cls, labels, K: int) -> "ResponsibilityMatrix":
        labels = np.asarray(labels, dtype=np.int64)
        G = np.zeros((labels.size, K))
        G[np.arange(labels.size), labels] = 1.0
        return cls(G)


BETA_PER_TAU2 = 32.0


@dataclass(frozen=True)
class FistaConfig:
    """Settings of the graph-learning solver.

    ``beta=None`` selects ``BETA_PER_TAU2 * tau**2``. Data diffused for time
    ``tau`` has a log-covariance proportional to ``tau``, and rescaling both
    by ``c`` leaves the minimizer unchanged only if ``beta`` scales by
    ``c**2``, so this default gives comparable sparsity at every ``tau``.
    An explicit ``beta`` is used as is.
    """

    beta: Optional[float] = None
    max_iters: int = 2000
    tol: float = 1e-8
    step_rule: str = "power"  # "power" or "backtracking"
    window: int = 10

    def __post_init__(self):
        if self.beta is not None and not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        if self.max_iters < 1 or self.window < 1:
            raise ValueError("max_iters and window must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.step_rule not in ("power", "backtracking"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")

    def beta_for(self, tau: float) -> float:
        return BETA_PER_TAU2 * tau * tau if self.beta is None else self.beta


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters for :func:`graphheat.em.fit`.

    ``tau`` is a fixed input: it only sets the scale of the learned
    Laplacians and is never optimized. ``eig_floor=None`` selects the
    relative default of :func:`graphheat.spectral.sym_logm_psd`.
    """

    K: int
    tau: float
    em_max_iters: int = 200
    em_tol: float = 1e-6
    n_restarts: int = 5
    seed: int = 0
    fista: FistaConfig = field(default_factory=FistaConfig)
    eig_floor: Optional[float] = None
    update_graphs: bool = True
    init_edge_prob: float = 0.5
    max_reseeds: int = 20

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.n_restarts < 1 or self.em_max_iters < 1:
            raise ValueError("n_restarts and em_max_iters must be >= 1")
        if not self.em_tol > 0:
            raise ValueError("em_tol must be > 0")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if self.eig_floor is not None and not self.eig_floor > 0:
            raise ValueError("eig_floor must be > 0")

    def with_(self, **changes) -> "FitConfig":
        return replace(self, **changes)
