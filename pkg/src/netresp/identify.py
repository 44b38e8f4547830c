"""Post-hoc identification of latent factors.

Latent positions and item slopes are only identified up to a nonsingular
transformation, but their products are identified directly.  The estimators
here factor a posterior-mean product by truncated SVD, rotate item slopes to
a partially specified target pattern, and quantify factor similarity through
congruence coefficients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "FactorEstimate",
    "RotationResult",
    "svd_identify",
    "target_rotate",
    "congruence",
    "variance_explained",
    "subscale_target",
]


@dataclass(frozen=True)
class FactorEstimate:
    """Rank-r factorization left @ right.T of a posterior-mean product."""

    left: np.ndarray
    right: np.ndarray
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    def reconstruction(self) -> np.ndarray:
        return self.left @ self.right.T


@dataclass(frozen=True)
class RotationResult:
    """Loadings rotated toward a target pattern.

    ``rotated_loadings = loadings @ rotation_matrix``; the columns of the
    inverse of ``rotation_matrix`` have unit length.  ``criterion`` is the sum
    of squared rotated loadings over the target's zero cells, and
    ``criterion_path`` its per-iteration trace for the accepted solve.
    """

    rotated_loadings: np.ndarray
    rotation_matrix: np.ndarray
    target: np.ndarray
    zero_mask: np.ndarray
    criterion: float
    criterion_path: np.ndarray
    converged: bool


def svd_identify(mean_product: np.ndarray, rank: int) -> FactorEstimate:
    """Identify latent factors from a posterior-mean product matrix.

    Takes the first ``rank`` left and right singular vectors, splitting each
    singular value symmetrically (sqrt to each side).  Column signs follow the
    largest-magnitude entry of each left column.  Warns when the retained and
    first discarded singular values nearly tie, since the subspace is then
    ill-determined.
    """
    mat = np.asarray(mean_product, dtype=float)
    if mat.ndim != 2:
        raise ValueError("mean_product must be a matrix")
    if not 1 <= rank <= min(mat.shape):
        raise ValueError(f"rank must be in [1, {min(mat.shape)}]")
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    if s[rank - 1] <= 0:
        raise ValueError(f"singular value {rank} is zero; requested rank unsupported")
    if rank < s.shape[0] and s[rank - 1] - s[rank] < 1e-10:
        warnings.warn(
            f"singular values {rank} and {rank + 1} nearly tie; factor subspace is ill-determined",
            RuntimeWarning,
        )
    u = u[:, :rank]
    v = vt[:rank].T
    root = np.sqrt(s[:rank])
    flip = np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(rank)])
    flip[flip == 0] = 1.0
    left = u * root[None, :] * flip[None, :]
    right = v * root[None, :] * flip[None, :]
    return FactorEstimate(left=left, right=right, singular_values=s[:rank].copy())


def subscale_target(assignments, n_factors: Optional[int] = None, high: float = 2.0) -> np.ndarray:
    """Target matrix from item-to-subscale assignments (0-based labels).

    Cells off an item's own subscale are zero; on-subscale cells get ``high``
    (the value itself does not change the rotation, only which cells are
    free).
    """
    labels = np.asarray(assignments, dtype=int)
    d = int(labels.max()) + 1 if n_factors is None else n_factors
    target = np.zeros((labels.shape[0], d))
    target[np.arange(labels.shape[0]), labels] = high
    return target


def _criterion(loadings: np.ndarray, zero_mask: np.ndarray) -> float:
    return float((loadings[zero_mask] ** 2).sum())


def _gpa_oblique(loadings, zero_mask, t0, max_iter, tol):
    """Gradient projection on the unit-column manifold of T, where the
    rotated loadings are loadings @ inv(T)."""
    t = t0 / np.linalg.norm(t0, axis=0, keepdims=True)
    ti = np.linalg.inv(t)
    lam = loadings @ ti
    f = _criterion(lam, zero_mask)
    path = [f]
    step = 1.0
    converged = False
    for _ in range(max_iter):
        gq = 2.0 * np.where(zero_mask, lam, 0.0)
        grad = -(lam.T @ gq @ ti.T)
        gp = grad - t * (t * grad).sum(axis=0, keepdims=True)
        if np.linalg.norm(gp) < tol:
            converged = True
            break
        step = 2.0 * step
        improved = False
        for _ in range(20):
            cand = t - step * gp
            cand /= np.linalg.norm(cand, axis=0, keepdims=True)
            try:
                cand_i = np.linalg.inv(cand)
            except np.linalg.LinAlgError:
                step *= 0.5
                continue
            lam_c = loadings @ cand_i
            f_c = _criterion(lam_c, zero_mask)
            if f_c < f - 0.5 * step * (gp**2).sum():
                improved = True
                break
            step *= 0.5
        if not improved:
            converged = True
            break
        t, ti, lam, f = cand, cand_i, lam_c, f_c
        path.append(f)
    return t, f, np.array(path), converged


def _column_minimizer_start(loadings: np.ndarray, zero_mask: np.ndarray) -> Optional[np.ndarray]:
    """Per-column smallest-eigenvector directions, returned as a T candidate.

    Each rotation column minimizes its own zero-cell criterion independently;
    the free per-column scales are then chosen so the columns of T = W^-1
    come out unit length, which keeps the candidate on the constraint
    manifold without disturbing the directions.
    """
    m, d = loadings.shape
    w = np.zeros((d, d))
    for j in range(d):
        rows = loadings[zero_mask[:, j]]
        if rows.shape[0] < d:
            return None
        h = rows.T @ rows
        vals, vecs = np.linalg.eigh(h)
        w[:, j] = vecs[:, 0]
    try:
        w_inv = np.linalg.inv(w)
    except np.linalg.LinAlgError:
        return None
    # scale columns of W by 1/s so that sum_i s_i^2 (W^-1)_{ij}^2 = 1 per j
    try:
        x = np.linalg.solve((w_inv**2).T, np.ones(d))
    except np.linalg.LinAlgError:
        return w_inv
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        return w_inv
    return np.sqrt(x)[:, None] * w_inv


def target_rotate(
    loadings: np.ndarray,
    target: np.ndarray,
    mask: Optional[np.ndarray] = None,
    max_iter: int = 1000,
    tol: float = 1e-12,
    orthogonal: bool = False,
) -> RotationResult:
    """Rotate loadings so the target's zero cells come out near zero.

    The criterion is the sum of squared rotated loadings over the zero cells
    of the target; targeted (nonzero) cells are unconstrained, which makes the
    result invariant to the magnitude used for the high cells.  ``mask``, when
    given, marks the zero cells explicitly (True = should be zero); otherwise
    zero cells of ``target`` are used.  The default rotation is oblique; set
    ``orthogonal`` for an orthonormal rotation matrix.

    Column signs are chosen so each column's targeted cells sum positive.
    Non-convergence within ``max_iter`` returns the best iterate with
    ``converged=False``.
    """
    lam = np.asarray(loadings, dtype=float)
    target = np.asarray(target, dtype=float)
    if lam.shape != target.shape:
        raise ValueError("loadings and target must have the same shape")
    m, d = lam.shape
    if d < 2:
        raise ValueError("rotation needs at least two factors")
    zero_mask = (target == 0.0) if mask is None else np.asarray(mask, dtype=bool)
    if zero_mask.shape != lam.shape:
        raise ValueError("mask shape must match loadings")

    if orthogonal:
        t, f, path, conv = _gpa_orthogonal(lam, zero_mask, np.eye(d), max_iter, tol)
        rotation = t
    else:
        best = None
        starts = [np.eye(d)]
        warm = _column_minimizer_start(lam, zero_mask)
        if warm is not None and np.isfinite(warm).all():
            starts.append(warm)
        for t0 in starts:
            t, f, path, conv = _gpa_oblique(lam, zero_mask, t0, max_iter, tol)
            if best is None or f < best[1]:
                best = (t, f, path, conv)
        t, f, path, conv = best
        rotation = np.linalg.inv(t)

    rotated = lam @ rotation
    # sign convention: targeted cells of each column sum positive
    signs = np.ones(d)
    for j in range(d):
        tgt = ~zero_mask[:, j]
        total = rotated[tgt, j].sum() if tgt.any() else rotated[:, j].sum()
        if total < 0:
            signs[j] = -1.0
    rotated = rotated * signs[None, :]
    rotation = rotation * signs[None, :]
    return RotationResult(
        rotated_loadings=rotated,
        rotation_matrix=rotation,
        target=target,
        zero_mask=zero_mask,
        criterion=_criterion(rotated, zero_mask),
        criterion_path=path,
        converged=conv,
    )


def _gpa_orthogonal(loadings, zero_mask, t0, max_iter, tol):
    t = t0.copy()
    lam = loadings @ t
    f = _criterion(lam, zero_mask)
    path = [f]
    step = 1.0
    converged = False
    for _ in range(max_iter):
        gq = 2.0 * np.where(zero_mask, lam, 0.0)
        grad = loadings.T @ gq
        sym = (t.T @ grad + grad.T @ t) / 2.0
        gp = grad - t @ sym
        if np.linalg.norm(gp) < tol:
            converged = True
            break
        step = 2.0 * step
        improved = False
        for _ in range(20):
            cand = t - step * gp
            u, _, vt = np.linalg.svd(cand, full_matrices=False)
            cand = u @ vt
            lam_c = loadings @ cand
            f_c = _criterion(lam_c, zero_mask)
            if f_c < f - 0.5 * step * (gp**2).sum():
                improved = True
                break
            step *= 0.5
        if not improved:
            converged = True
            break
        t, lam, f = cand, lam_c, f_c
        path.append(f)
    return t, f, np.array(path), converged


def congruence(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of cosines between the columns of A and the columns of B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[0] != B.shape[0]:
        raise ValueError("A and B must have the same number of rows")
    na = np.linalg.norm(A, axis=0)
    nb = np.linalg.norm(B, axis=0)
    if (na == 0).any() or (nb == 0).any():
        raise ValueError("congruence undefined for a zero-norm column")
    return (A.T @ B) / np.outer(na, nb)


def variance_explained(mean_product: np.ndarray, max_rank: int) -> np.ndarray:
    """Proportion of squared variation carried by each leading dimension.

    Entry k is sigma_k^2 over the total sum of squared singular values of the
    product matrix, for k up to ``max_rank``.
    """
    mat = np.asarray(mean_product, dtype=float)
    if not 1 <= max_rank <= min(mat.shape):
        raise ValueError(f"max_rank must be in [1, {min(mat.shape)}]")
    s = np.linalg.svd(mat, compute_uv=False)
    total = float((s**2).sum())
    if total == 0.0:
        raise ValueError("variance proportions undefined for a zero matrix")
    return (s[:max_rank] ** 2) / total
