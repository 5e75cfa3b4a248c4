"""Sparse graph recovery from a (log) covariance matrix with FISTA.

Minimizes

    F(W) = ||log_cov + 2 tau L(W)||_F^2 + beta * sum_ij W_ij

over symmetric, nonnegative, zero-diagonal weight matrices ``W``. The
smooth term is a convex quadratic in ``W``, so the problem is convex and,
because ``W -> L(W)`` is injective on that set, strongly convex.

Gradients are taken in the Frobenius geometry of symmetric matrices: the
returned ``G`` satisfies ``dF = sum_ij G_ij dW_ij`` for symmetric
perturbations. For a single edge variable ``w = W_ij = W_ji`` the ordinary
derivative is therefore ``2 * G_ij``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from graphheat.errors import NonFinite
from graphheat.model import FistaConfig, WeightedGraph, laplacian

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GraphLearnProblem:
    log_cov: np.ndarray
    tau: float
    beta: float = 0.0

    def __post_init__(self):
        C = np.asarray(self.log_cov, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("log_cov must be square")
        if not np.all(np.isfinite(C)):
            raise NonFinite("log_cov contains NaN or Inf")
        scale = max(1.0, float(np.max(np.abs(C))))
        if np.max(np.abs(C - C.T)) > 1e-10 * scale:
            raise ValueError("log_cov is not symmetric")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        C = 0.5 * (C + C.T)
        C.setflags(write=False)
        object.__setattr__(self, "log_cov", C)

    @property
    def n_nodes(self) -> int:
        return self.log_cov.shape[0]

    def scaled(self, c: float) -> "GraphLearnProblem":
        """``tau -> c tau``, ``log_cov -> c log_cov``, ``beta -> c^2 beta``.

        The residual at any ``W`` is multiplied by ``c``, so the objective is
        multiplied by ``c^2`` and the minimizer is unchanged.
        """
        return GraphLearnProblem(c * self.log_cov, c * self.tau, c * c * self.beta)

    def with_tau_scaled(self, c: float) -> "GraphLearnProblem":
        """``tau -> c tau``, ``beta -> c beta`` with ``log_cov`` fixed.

        Only the product ``tau * L`` enters the residual: the objective at
        ``W / c`` equals this problem's at ``W``, and the minimizer shrinks
        by ``c``.
        """
        return GraphLearnProblem(self.log_cov, c * self.tau, c * self.beta)


@dataclass
class FistaState:
    """Solver state. ``W`` is always feasible; ``Y`` is symmetric with zero diagonal."""

    W: np.ndarray
    Y: np.ndarray
    t: float = 1.0
    iteration: int = 0
    objective_history: list = field(default_factory=list)
    n_restarts: int = 0
    step: float = float("nan")
    converged: bool = False
    hit_max_iters: bool = False


def _weights(W) -> np.ndarray:
    return W.weights if isinstance(W, WeightedGraph) else np.asarray(W, dtype=float)


def _residual(p: GraphLearnProblem, W: np.ndarray) -> np.ndarray:
    return p.log_cov + (2.0 * p.tau) * laplacian(W)


def objective(p: GraphLearnProblem, W) -> float:
    W = _weights(W)
    R = _residual(p, W)
    return float(np.sum(R * R) + p.beta * np.sum(W))


def smooth_objective(p: GraphLearnProblem, W) -> float:
    R = _residual(p, _weights(W))
    return float(np.sum(R * R))


def _edge_adjoint(R: np.ndarray) -> np.ndarray:
    # (d_i + d_j - R_ij - R_ji) with zero diagonal
    d = np.diag(R)
    G = d[:, None] + d[None, :] - R - R.T
    np.fill_diagonal(G, 0.0)
    return G


def smooth_gradient(p: GraphLearnProblem, W) -> np.ndarray:
    """Gradient of ``||log_cov + 2 tau L(W)||_F^2`` (see module docstring)."""
    R = _residual(p, _weights(W))
    return (2.0 * p.tau) * _edge_adjoint(R)


def _hessian_apply(tau: float, V: np.ndarray) -> np.ndarray:
    return (4.0 * tau * tau) * _edge_adjoint(laplacian(V))


def lipschitz_constant(tau: float, n: int, n_iter: int = 50, seed: int = 0) -> float:
    """Power-iteration estimate of the gradient's Lipschitz constant.

    The smooth gradient is affine in ``W`` with linear part
    ``V -> 4 tau^2 adj(L(V))``; its top eigenvalue is ``8 tau^2 n``.
    """
    if n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    V = rng.random((n, n))
    V = V + V.T
    np.fill_diagonal(V, 0.0)
    lam = 0.0
    for _ in range(n_iter):
        norm = np.linalg.norm(V)
        if not norm > 0:
            return float("nan")
        V = V / norm
        HV = _hessian_apply(tau, V)
        lam = float(np.sum(V * HV))
        V = HV
    return lam


def prox_l1_feasible(W, threshold: float) -> np.ndarray:
    """Prox of ``threshold * sum(W)`` plus the indicator of the valid set.

    Symmetrizes, zeros the diagonal, then applies ``max(0, w - threshold)``.
    """
    W = np.asarray(W, dtype=float)
    S = 0.5 * (W + W.T)
    np.fill_diagonal(S, 0.0)
    return np.maximum(S - threshold, 0.0)


def _converged(history, window: int, tol: float, floor: float) -> bool:
    if len(history) <= window:
        return False
    old, new = history[-1 - window], history[-1]
    return abs(old - new) <= tol * max(abs(new), floor)


def solve_with_state(p: GraphLearnProblem, init, cfg: FistaConfig | None = None):
    """Run FISTA with function-value restarts; return ``(graph, state)``.

    Whenever an accelerated step would increase the objective the momentum
    is reset (``t = 1``) and a plain proximal-gradient step is taken from
    the current iterate instead, so the recorded objective never increases.
    Stops when the objective changes by less than ``cfg.tol`` (relative)
    over ``cfg.window`` iterations. If ``cfg.max_iters`` is reached the
    best iterate is returned and ``state.hit_max_iters`` is set.
    """
    cfg = cfg or FistaConfig(beta=p.beta)
    n = p.n_nodes
    W = prox_l1_feasible(_weights(init), 0.0)
    if W.shape != (n, n):
        raise ValueError(f"init has shape {W.shape}, problem has {n} nodes")
    beta = p.beta

    def F(V):
        R = _residual(p, V)
        return float(np.sum(R * R) + beta * np.sum(V))

    backtracking = cfg.step_rule == "backtracking"
    lip = float("nan") if backtracking else lipschitz_constant(p.tau, n)
    if not backtracking and not (np.isfinite(lip) and lip > 0):
        logger.debug("power iteration failed (%r); falling back to backtracking", lip)
        backtracking = True
    lip_bt = 8.0 * p.tau * p.tau  # optimistic start, doubled as needed
    if not backtracking:
        lip *= 1.0 + 1e-6

    f_W = F(W)
    state = FistaState(W=W, Y=W.copy(), objective_history=[f_W])
    # objective changes below this are treated as float noise
    floor = 1e-14 * (float(np.sum(p.log_cov**2)) + 1.0)

    def prox_step(point, g, f_point_smooth):
        nonlocal lip_bt
        if not backtracking:
            s = 1.0 / lip
            return prox_l1_feasible(point - s * g, s * beta), s
        while True:
            s = 1.0 / lip_bt
            cand = prox_l1_feasible(point - s * g, s * beta)
            D = cand - point
            R = _residual(p, cand)
            if np.sum(R * R) <= f_point_smooth + np.sum(g * D) + 0.5 * lip_bt * np.sum(D * D) + 1e-12 * abs(f_point_smooth):
                return cand, s
            lip_bt *= 2.0
            if lip_bt > 1e300:
                raise NonFinite("backtracking step size underflow")

    Y, t = state.Y, 1.0
    for it in range(1, cfg.max_iters + 1):
        R_Y = _residual(p, Y)
        g = (2.0 * p.tau) * _edge_adjoint(R_Y)
        W_new, s = prox_step(Y, g, float(np.sum(R_Y * R_Y)))
        f_new = F(W_new)
        if not np.isfinite(f_new):
            raise NonFinite(f"objective became non-finite at iteration {it}")
        if f_new > f_W:
            state.n_restarts += 1
            t = 1.0
            R_W = _residual(p, W)
            W_new, s = prox_step(W, (2.0 * p.tau) * _edge_adjoint(R_W), float(np.sum(R_W * R_W)))
            f_new = F(W_new)
            if f_new > f_W:
                # numerically stalled at the float floor
                f_new, W_new = f_W, W
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        Y = W_new + ((t - 1.0) / t_new) * (W_new - W)
        W, f_W, t = W_new, f_new, t_new
        state.objective_history.append(f_W)
        state.iteration = it
        state.step = s
        if _converged(state.objective_history, cfg.window, cfg.tol, floor):
            state.converged = True
            break
    else:
        state.hit_max_iters = True
        logger.debug("FISTA hit max_iters=%d (objective %.6g)", cfg.max_iters, f_W)

    state.W, state.Y, state.t = W, Y, t
    return WeightedGraph(W), state


def solve(p: GraphLearnProblem, init, cfg: FistaConfig | None = None) -> WeightedGraph:
    return solve_with_state(p, init, cfg)[0]
