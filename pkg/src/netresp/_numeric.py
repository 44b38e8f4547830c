"""Shared numerical primitives: guarded Cholesky, truncated normals, inverse-Wishart."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr, ndtri

# Escalating diagonal jitter tried before declaring a matrix numerically singular.
JITTER_SCALES = (0.0, 1e-10, 1e-8, 1e-6)

# Smallest argument passed to ndtri; keeps inverse-CDF draws finite.
_TINY = 1e-300


class NumericalError(RuntimeError):
    """A conditional precision or covariance is numerically degenerate."""


def chol_lower(mat: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor with jitter escalation before giving up.

    Jitter is scaled by the mean diagonal so the guard is dimensionless.
    Raises :class:`NumericalError` if the matrix stays non-positive-definite
    at the largest jitter.
    """
    scale = float(np.mean(np.diag(mat)))
    if not np.isfinite(scale):
        raise NumericalError(f"{what} has non-finite diagonal")
    scale = abs(scale) if scale != 0.0 else 1.0
    for eps in JITTER_SCALES:
        try:
            if eps == 0.0:
                return np.linalg.cholesky(mat)
            return np.linalg.cholesky(mat + (eps * scale) * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(f"{what} is not positive definite (jitter up to 1e-6 failed)")


def spd_inverse(mat: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    L = chol_lower(mat, what)
    inv_l = solve_triangular(L, np.eye(mat.shape[0]), lower=True, check_finite=False)
    return inv_l.T @ inv_l


def trunc_std_normal_left(alpha: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Standard normal conditioned on z > alpha, via the survival-function inverse.

    Working on the upper tail keeps the draw accurate when alpha is far in
    the right tail, where Phi(alpha) is indistinguishable from 1.
    """
    p = u * ndtr(-alpha)
    return -ndtri(np.maximum(p, _TINY))


def trunc_std_normal_right(alpha: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Standard normal conditioned on z <= alpha."""
    p = u * ndtr(alpha)
    return ndtri(np.maximum(p, _TINY))


def sample_trunc_normal(mean, sd, positive: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw N(mean, sd^2) truncated to (0, inf) where ``positive`` else (-inf, 0]."""
    mean = np.asarray(mean, dtype=float)
    u = rng.random(mean.shape)
    out = np.empty_like(mean)
    pos = np.asarray(positive, dtype=bool)
    neg = ~pos
    if pos.any():
        out[pos] = trunc_std_normal_left(-mean[pos] / sd, u[pos])
    if neg.any():
        out[neg] = trunc_std_normal_right(-mean[neg] / sd, u[neg])
    return mean + sd * out


def sample_inverse_wishart(scale: np.ndarray, df: float, rng: np.random.Generator) -> np.ndarray:
    """Draw from the inverse-Wishart with the given scale matrix and degrees of freedom.

    Uses the Bartlett factorization of a Wishart(df, I) draw; requires
    df > p - 1.  The result is exactly symmetric by construction.
    """
    p = scale.shape[0]
    if df <= p - 1:
        raise ValueError(f"inverse-Wishart needs df > p - 1, got df={df}, p={p}")
    L = chol_lower(scale, "inverse-Wishart scale")
    bart = np.zeros((p, p))
    np.fill_diagonal(bart, np.sqrt(rng.chisquare(df - np.arange(p))))
    idx = np.tril_indices(p, -1)
    bart[idx] = rng.standard_normal(idx[0].shape[0])
    # Sigma = (L A^-T)(L A^-T)^T where A A^T ~ Wishart(df, I)
    B = solve_triangular(bart, L.T, lower=True, check_finite=False)
    return B.T @ B


def batch_means_se(trace: np.ndarray, n_batches: int = 50) -> float:
    """Monte Carlo standard error of a correlated trace via batch means."""
    n = trace.shape[0]
    if n < 2 * n_batches:
        n_batches = max(2, n // 2)
    m = n // n_batches
    means = trace[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(n_batches))
