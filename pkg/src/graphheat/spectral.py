"""Matrix functions of symmetric matrices via a single eigendecomposition.

Every function here is pure; nothing is cached.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from graphheat.errors import InvalidFloor, NonFinite

_EXP_LIMIT = 700.0
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class SymmetricEig:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    def apply(self, fn) -> np.ndarray:
        """Return ``V diag(fn(eigenvalues)) V^T`` (symmetrized exactly)."""
        V = self.eigenvectors
        out = (V * fn(self.eigenvalues)) @ V.T
        return 0.5 * (out + out.T)


def _check_finite(A: np.ndarray, what: str = "matrix") -> None:
    if not np.all(np.isfinite(A)):
        raise NonFinite(f"{what} contains NaN or Inf")


def sym_eig(A) -> SymmetricEig:
    """Eigendecomposition of a real symmetric matrix.

    The input is symmetrized as ``(A + A^T) / 2`` before decomposition, so
    tiny asymmetries from floating point arithmetic are harmless.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    _check_finite(A)
    lam, V = np.linalg.eigh(0.5 * (A + A.T))
    return SymmetricEig(lam, V)


def sym_expm(A, scale: float = 1.0) -> np.ndarray:
    """``exp(scale * A)`` for symmetric ``A``."""
    eig = sym_eig(A)
    z = scale * eig.eigenvalues
    if z.size and np.max(z) > _EXP_LIMIT:
        raise NonFinite(f"exp overflow: scale*lambda_max = {np.max(z):.3g}")
    return eig.apply(lambda lam: np.exp(scale * lam))


def default_eig_floor(lam_max: float) -> float:
    return 1e-14 * max(float(lam_max), 1.0)


def sym_logm_psd(S, eig_floor: float | None = None) -> np.ndarray:
    """Matrix logarithm of a PSD matrix with eigenvalues clamped from below.

    Parameters
    ----------
    S : (N, N) array
        Symmetric positive-semidefinite matrix, e.g. a sample covariance.
    eig_floor : float, optional
        Eigenvalues are replaced by ``max(lambda, eig_floor)`` before the
        log. Defaults to ``1e-14 * max(lambda_max, 1)``, which keeps the
        result finite when ``S`` is rank deficient.
    """
    eig = sym_eig(S)
    lam = eig.eigenvalues
    if eig_floor is None:
        eig_floor = default_eig_floor(lam[-1] if lam.size else 1.0)
    if not eig_floor > 0:
        raise InvalidFloor(f"eig_floor must be > 0, got {eig_floor!r}")
    return eig.apply(lambda v: np.log(np.maximum(v, eig_floor)))


def heat_log_density_many(X, mu, L, tau: float) -> np.ndarray:
    """Log-density of each column of ``X`` under ``N(mu, exp(-2 tau L))``.

    Uses ``det(exp(-2 tau L)) = exp(-2 tau tr L)`` and
    ``exp(-2 tau L)^{-1} = exp(2 tau L)``, so no covariance is ever
    inverted and no raw density is formed.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    mu = np.asarray(mu, dtype=float).reshape(-1, 1)
    n = X.shape[0]
    eig = sym_eig(L)
    z = 2.0 * tau * eig.eigenvalues
    if z.size and np.max(z) > _EXP_LIMIT:
        raise NonFinite(f"exp(2 tau L) overflows: 2*tau*lambda_max = {np.max(z):.3g}")
    proj = eig.eigenvectors.T @ (X - mu)
    with np.errstate(over="ignore"):
        # an overflowing quadratic form yields -inf, handled by callers
        quad = np.exp(z) @ (proj * proj)
    # tr(L) from the eigenvalues keeps the log-det consistent with the quadratic form
    return -0.5 * n * _LOG_2PI + tau * np.sum(eig.eigenvalues) - 0.5 * quad


def heat_log_density(x, mu, L, tau: float) -> float:
    return float(heat_log_density_many(np.asarray(x, dtype=float).reshape(-1, 1), mu, L, tau)[0])
