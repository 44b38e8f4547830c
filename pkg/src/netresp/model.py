"""Domain types and the deterministic expected-value maps shared by all components.

The model couples two latent-variable components through one joint covariance.
Per person p there is a sender position u_p and a receiver position v_p (each
K-dimensional) driving directed edges, and an item latent theta_p
(D-dimensional) driving questionnaire responses.  The stacked vector
(u_p, v_p, theta_p) is multivariate normal with covariance ``Sigma_utheta``;
its cross block is what ties the network to the responses.

Expected values are bilinear:

* edge (a, b):       delta + <u_a, v_b>
* response (p, i):   beta_i + <alpha_i, theta_p>
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from ._numeric import chol_lower

NetworkKind = Literal["binary", "continuous"]
ItemKind = Literal["continuous", "binary"]
Mode = Literal["joint", "network_only", "item_only"]

MODES = ("joint", "network_only", "item_only")


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def _check_spd(mat: np.ndarray, name: str) -> None:
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    chol_lower(mat, name)


@dataclass(frozen=True)
class NetworkData:
    """Directed N x N network with an observation mask.

    The diagonal is structurally unobserved: stored edge values on the
    diagonal are forced to zero and the mask is forced False there.  A
    False mask entry elsewhere marks a missing dyad (e.g. a held-out row).
    Binary networks must store 0/1 at every observed cell.
    """

    edges: np.ndarray
    kind: NetworkKind = "binary"
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        edges = _as_matrix(self.edges, "edges")
        n = edges.shape[0]
        if edges.shape[1] != n:
            raise ValueError(f"adjacency matrix must be square, got {edges.shape}")
        if self.kind not in ("binary", "continuous"):
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.mask is None:
            mask = np.ones((n, n), dtype=bool)
        else:
            mask = np.asarray(self.mask, dtype=bool).copy()
            if mask.shape != (n, n):
                raise ValueError("mask shape must match edges")
        np.fill_diagonal(mask, False)
        edges = edges.copy()
        edges[~mask] = np.where(np.isnan(edges[~mask]), 0.0, edges[~mask])
        np.fill_diagonal(edges, 0.0)
        if np.isnan(edges[mask]).any():
            raise ValueError("NaN at an observed cell; mask it instead")
        if self.kind == "binary":
            obs = edges[mask]
            if not np.isin(obs, (0.0, 1.0)).all():
                raise ValueError("binary network has observed entries outside {0, 1}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "mask", mask)

    @property
    def n_nodes(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class ItemResponses:
    """N x M response matrix; rows are the same persons as the network nodes."""

    values: np.ndarray
    kind: ItemKind = "continuous"
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        values = _as_matrix(self.values, "values")
        if self.mask is None:
            mask = ~np.isnan(values)
        else:
            mask = np.asarray(self.mask, dtype=bool).copy()
            if mask.shape != values.shape:
                raise ValueError("mask shape must match values")
            mask &= ~np.isnan(values)
        if self.kind not in ("continuous", "binary"):
            raise ValueError(f"unknown item kind {self.kind!r}")
        values = values.copy()
        values[~mask] = 0.0
        if self.kind == "binary" and not np.isin(values[mask], (0.0, 1.0)).all():
            raise ValueError("binary items have observed entries outside {0, 1}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def n_persons(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ModelConfig:
    """Sampler configuration.

    ``k`` and ``d`` are the network and item latent ranks.  ``mode`` selects
    which component is fitted: "network_only" drops the item component and
    the theta block of the joint covariance, "item_only" the reverse.

    Prior hyperparameters default to: N(0, 1/prior_delta_precision) for the
    intercept, MVN((1,...,1,0), I) for each item's (slopes, intercept) vector,
    and an inverse-Wishart with identity scale and 2K+D+2 degrees of freedom
    for the joint latent covariance.
    """

    k: int
    d: int
    mode: Mode = "joint"
    iterations: int = 10000
    burn_in: int = 1000
    thin: int = 10
    prior_delta_precision: float = 0.01
    prior_xi_mean: Optional[np.ndarray] = None
    prior_xi_cov: Optional[np.ndarray] = None
    wishart_df: Optional[float] = None
    wishart_scale: Optional[np.ndarray] = None
    rho_proposal_sd: float = 0.05
    seed: int = 0
    center_latents: bool = True
    # Keep the error-precision gamma shape at (N^2+1)/2, counting the N
    # structural self-pair pseudo-entries whose residuals are pinned to zero.
    include_self_pairs: bool = True
    adapt_rho: bool = True
    replicate_stride: int = 0
    # Testing aid: zero the network-item cross block of every covariance draw.
    force_zero_cross: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.k < 1 or self.d < 1:
            raise ValueError("latent ranks k and d must be >= 1")
        if self.iterations <= self.burn_in:
            raise ValueError("iterations must exceed burn_in (post-burn-in sample is empty)")
        if self.burn_in < 0 or self.thin < 1:
            raise ValueError("burn_in must be >= 0 and thin >= 1")
        if self.prior_delta_precision <= 0:
            raise ValueError("prior_delta_precision must be positive")
        if self.rho_proposal_sd <= 0:
            raise ValueError("rho_proposal_sd must be positive")
        if self.prior_xi_mean is not None:
            mean = np.asarray(self.prior_xi_mean, dtype=float)
            if mean.shape != (self.d + 1,):
                raise ValueError(f"prior_xi_mean must have length d+1 = {self.d + 1}")
            object.__setattr__(self, "prior_xi_mean", mean)
        if self.prior_xi_cov is not None:
            cov = _as_matrix(self.prior_xi_cov, "prior_xi_cov")
            if cov.shape != (self.d + 1, self.d + 1):
                raise ValueError("prior_xi_cov must be (d+1) x (d+1)")
            _check_spd(cov, "prior_xi_cov")
            object.__setattr__(self, "prior_xi_cov", cov)
        p = self.latent_dim
        if self.wishart_df is not None and self.wishart_df <= p - 1:
            raise ValueError(f"wishart_df must exceed 2K+D-1 = {p - 1}")
        if self.wishart_scale is not None:
            sc = _as_matrix(self.wishart_scale, "wishart_scale")
            if sc.shape != (p, p):
                raise ValueError(f"wishart_scale must be {p} x {p} for this mode")
            _check_spd(sc, "wishart_scale")
            object.__setattr__(self, "wishart_scale", sc)

    @property
    def k_eff(self) -> int:
        return 0 if self.mode == "item_only" else self.k

    @property
    def d_eff(self) -> int:
        return 0 if self.mode == "network_only" else self.d

    @property
    def latent_dim(self) -> int:
        return 2 * self.k_eff + self.d_eff

    def resolved_wishart_df(self) -> float:
        # the default follows the configured ranks in every mode; dropping a
        # block from the covariance keeps the prior degrees of freedom
        if self.wishart_df is not None:
            return float(self.wishart_df)
        return 2.0 * self.k + self.d + 2.0

    def resolved_wishart_scale(self) -> np.ndarray:
        if self.wishart_scale is not None:
            return self.wishart_scale
        return np.eye(self.latent_dim)

    def resolved_xi_mean(self) -> np.ndarray:
        if self.prior_xi_mean is not None:
            return self.prior_xi_mean
        mean = np.ones(self.d + 1)
        mean[-1] = 0.0
        return mean

    def resolved_xi_cov(self) -> np.ndarray:
        if self.prior_xi_cov is not None:
            return self.prior_xi_cov
        return np.eye(self.d + 1)

    @property
    def n_kept(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class LatentState:
    """All sampler unknowns at one iteration.

    ``Phi`` holds the latent continuous edges for a binary network (sign
    consistent with the data at observed cells); for a continuous network the
    completed data matrix lives in the sampler, not here.  ``Eta`` plays the
    same role for binary items.  Fields that a mode does not use are None.
    """

    U: Optional[np.ndarray]
    V: Optional[np.ndarray]
    Theta: Optional[np.ndarray]
    Sigma_utheta: np.ndarray
    delta: float
    rho: float
    sigma2_e: float
    sigma2_eps: float
    Beta: Optional[np.ndarray]
    A: Optional[np.ndarray]
    Phi: Optional[np.ndarray] = None
    Eta: Optional[np.ndarray] = None


@dataclass
class ChainOutput:
    """Posterior summaries accumulated over the post-burn-in iterations.

    ``mean_UVt`` and ``mean_ThetaAt`` are running means of the latent
    products U V' and Theta A'; scalar traces are thinned.  ``replicate_stats``
    is populated when the sampler was run with a replicate stride, one
    replicated-data summary per retained draw.
    """

    mean_UVt: Optional[np.ndarray]
    mean_ThetaAt: Optional[np.ndarray]
    scalar_traces: dict = field(default_factory=dict)
    replicate_stats: Optional[object] = None
    accept_rate_rho: float = 0.0
    n_kept: int = 0
    seed: Optional[int] = None

    def trace_mean(self, name: str) -> float:
        return float(np.mean(self.scalar_traces[name]))


def expected_network(delta: float, U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Expected directed edge values delta + U V'.

    The diagonal is computed like any other cell but corresponds to
    self-edges, which the data never observe.
    """
    U = _as_matrix(U, "U")
    V = _as_matrix(V, "V")
    if U.shape != V.shape:
        raise ValueError(f"U and V must conform, got {U.shape} vs {V.shape}")
    return delta + U @ V.T


def expected_responses(Beta: np.ndarray, A: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    """Expected item responses: entry (p, i) is beta_i + <alpha_i, theta_p>."""
    Beta = np.asarray(Beta, dtype=float)
    A = _as_matrix(A, "A")
    Theta = _as_matrix(Theta, "Theta")
    if Beta.ndim != 1 or Beta.shape[0] != A.shape[0]:
        raise ValueError("Beta must be a vector with one entry per row of A")
    if A.shape[1] != Theta.shape[1]:
        raise ValueError(f"A and Theta must agree on rank, got {A.shape} vs {Theta.shape}")
    return Beta[None, :] + Theta @ A.T


def covariance_blocks(Sigma_utheta: np.ndarray, K: int, D: int):
    """Split the joint latent covariance into its three blocks.

    Layout is (u, v, theta): the 2K x 2K network block sits top-left, the
    D x D item block bottom-right, and the returned cross block is the
    D x 2K bottom-left rectangle.
    """
    Sigma = _as_matrix(Sigma_utheta, "Sigma_utheta")
    p = 2 * K + D
    if Sigma.shape != (p, p):
        raise ValueError(f"Sigma_utheta must be {p} x {p}, got {Sigma.shape}")
    _check_spd(Sigma, "Sigma_utheta")
    lam_u = Sigma[: 2 * K, : 2 * K].copy()
    lam_theta = Sigma[2 * K :, 2 * K :].copy()
    lam_utheta = Sigma[2 * K :, : 2 * K].copy()
    return lam_u, lam_theta, lam_utheta


def assemble_covariance(lam_u: np.ndarray, lam_theta: np.ndarray, lam_utheta: np.ndarray) -> np.ndarray:
    """Inverse of :func:`covariance_blocks`."""
    two_k = lam_u.shape[0]
    d = lam_theta.shape[0]
    out = np.zeros((two_k + d, two_k + d))
    out[:two_k, :two_k] = lam_u
    out[two_k:, two_k:] = lam_theta
    out[two_k:, :two_k] = lam_utheta
    out[:two_k, two_k:] = lam_utheta.T
    return out
