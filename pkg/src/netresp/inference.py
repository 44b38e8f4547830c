"""Dependence analysis between the network and item latent variables.

Given the identified per-person network coordinates (the 2K columns of
(U, V)) and the item latents (D columns of Theta), these routines test
whether the two sets are independent and, when they are not, locate the
dependence with canonical correlations and their sequential tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = [
    "DependenceReport",
    "independence_test",
    "cca",
    "sequential_tests",
]


@dataclass(frozen=True)
class DependenceReport:
    """Wilks' lambda test plus the full canonical correlation analysis.

    ``std_coefficients_network`` is 2K x I and ``std_coefficients_items``
    D x I, with I = min(2K, D) canonical pairs; coefficients are standardized
    (weights scaled by each variable's sample standard deviation).
    ``sequential_pvalues[k]`` tests that all correlations beyond the first k
    are zero, so entry 0 reproduces the overall independence test.
    """

    wilks_lambda: float
    wilks_pvalue: float
    canonical_correlations: np.ndarray
    std_coefficients_network: np.ndarray
    std_coefficients_items: np.ndarray
    sequential_pvalues: np.ndarray

    def to_dict(self) -> dict:
        return {
            "wilks_lambda": self.wilks_lambda,
            "wilks_pvalue": self.wilks_pvalue,
            "canonical_correlations": self.canonical_correlations.tolist(),
            "std_coefficients_network": self.std_coefficients_network.tolist(),
            "std_coefficients_items": self.std_coefficients_items.tolist(),
            "sequential_pvalues": self.sequential_pvalues.tolist(),
        }


def _validate_blocks(uv_block, theta_block):
    x = np.asarray(uv_block, dtype=float)
    y = np.asarray(theta_block, dtype=float)
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("blocks must be matrices (rows = persons)")
    if x.shape[0] != y.shape[0]:
        raise ValueError("blocks must have the same number of rows")
    n, p = x.shape
    q = y.shape[1]
    if n <= p + q + 1:
        raise ValueError(f"need N > p + q + 1 = {p + q + 1}, got N = {n}")
    return x, y, n, p, q


def _centered_svd(block, tol=1e-12):
    c = block - block.mean(axis=0)
    u, s, vt = np.linalg.svd(c, full_matrices=False)
    if s[-1] <= tol * max(s[0], 1.0):
        raise ValueError("block covariance is singular (collinear columns)")
    return c, u, s, vt


def _bartlett_pvalue(lam: float, n: int, p: int, q: int, k: int = 0) -> float:
    """Chi-square p-value for the hypothesis that canonical correlations
    beyond the first k vanish."""
    if lam <= 0.0:
        return 0.0
    factor = n - 1 - (p + q + 1) / 2.0
    statistic = -factor * np.log(lam)
    df = (p - k) * (q - k)
    return float(stats.chi2.sf(statistic, df))


def _rao_pvalue(lam: float, n: int, p: int, q: int) -> float:
    """Rao's F approximation of the overall Wilks test, for small N."""
    if lam <= 0.0:
        return 0.0
    pq = p * q
    t = n - 1 - (p + q + 1) / 2.0
    s = np.sqrt((pq**2 - 4) / (p**2 + q**2 - 5)) if p**2 + q**2 - 5 > 0 else 1.0
    df2 = t * s - pq / 2.0 + 1.0
    lam_s = lam ** (1.0 / s)
    f_stat = (1.0 - lam_s) / lam_s * df2 / pq
    return float(stats.f.sf(f_stat, pq, df2))


def independence_test(uv_block: np.ndarray, theta_block: np.ndarray, method: str = "bartlett"):
    """Classical multivariate test that the cross-covariance block is zero.

    The statistic is |pooled covariance| over the product of the within-set
    determinants, computed from the sample covariance (divisor N) of the
    concatenated blocks; it is invariant to nonsingular transformations of
    either block.  Returns (lambda, p-value).
    """
    x, y, n, p, q = _validate_blocks(uv_block, theta_block)
    corrs = _canonical_correlations(x, y)
    lam = float(np.prod(1.0 - corrs**2))
    if method == "bartlett":
        pvalue = _bartlett_pvalue(lam, n, p, q)
    elif method == "rao":
        pvalue = _rao_pvalue(lam, n, p, q)
    else:
        raise ValueError("method must be 'bartlett' or 'rao'")
    return lam, pvalue


def _canonical_correlations(x, y):
    _, ux, sx, _ = _centered_svd(x)
    _, uy, sy, _ = _centered_svd(y)
    s = np.linalg.svd(ux.T @ uy, compute_uv=False)
    i = min(x.shape[1], y.shape[1])
    return np.clip(s[:i], 0.0, 1.0)


def cca(uv_block: np.ndarray, theta_block: np.ndarray) -> DependenceReport:
    """Full canonical correlation analysis of the two latent blocks.

    Correlations and weights come from the SVD of the whitened cross block;
    successive canonical variates are uncorrelated within and across sets.
    Weight signs are fixed so each network coefficient column has a positive
    largest-magnitude entry.
    """
    x, y, n, p, q = _validate_blocks(uv_block, theta_block)
    i = min(p, q)
    cx, ux, sx, vxt = _centered_svd(x)
    cy, uy, sy, vyt = _centered_svd(y)
    u, s, vt = np.linalg.svd(ux.T @ uy, full_matrices=False)
    corrs = np.clip(s[:i], 0.0, 1.0)
    # raw weights: columns w with corr(x @ wx, y @ wy) maximized
    wx = vxt.T @ (u[:, :i] / sx[:, None])
    wy = vyt.T @ (vt.T[:, :i] / sy[:, None])
    # unit-variance canonical variates under the divisor-N convention
    wx *= np.sqrt(n)
    wy *= np.sqrt(n)
    sd_x = x.std(axis=0)
    sd_y = y.std(axis=0)
    std_x = wx * sd_x[:, None]
    std_y = wy * sd_y[:, None]
    flip = np.sign(std_x[np.argmax(np.abs(std_x), axis=0), np.arange(i)])
    flip[flip == 0] = 1.0
    std_x = std_x * flip[None, :]
    std_y = std_y * flip[None, :]
    lam = float(np.prod(1.0 - corrs**2))
    seq = sequential_tests(corrs, n, p, q)
    return DependenceReport(
        wilks_lambda=lam,
        wilks_pvalue=_bartlett_pvalue(lam, n, p, q),
        canonical_correlations=corrs,
        std_coefficients_network=std_x,
        std_coefficients_items=std_y,
        sequential_pvalues=seq,
    )


def sequential_tests(correlations: np.ndarray, N: int, p: int, q: int) -> np.ndarray:
    """P-values of the hierarchical tests on the canonical correlations.

    Entry k tests that the correlations after the first k are all zero,
    using the chi-square approximation on the partial Wilks' lambda
    prod_{i>k} (1 - R_i^2).
    """
    corrs = np.asarray(correlations, dtype=float)
    i = corrs.shape[0]
    out = np.empty(i)
    for k in range(i):
        lam_k = float(np.prod(1.0 - corrs[k:] ** 2))
        if lam_k >= 1.0:
            out[k] = 1.0
        else:
            out[k] = _bartlett_pvalue(lam_k, N, p, q, k)
    return out
