"""Gibbs sampler for the joint network and item-response model.

One sweep updates, in order: the latent data augmentations (truncated-normal
redraws for binary cells, plain imputation for missing cells), each sender and
receiver dimension, each item-latent dimension, the joint latent covariance,
the network error precision / dyad correlation / intercept, the item error
precision, and the per-item slope-intercept vectors.  Binary outcomes fix the
corresponding error variance at one.

Self-edges never exist in the data.  Their residuals are pinned to zero and
every likelihood sum skips the diagonal; the error-precision gamma shape can
still count them (``ModelConfig.include_self_pairs``) so that the update
matches the printed complete-matrix form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import log_ndtr, ndtri

from ._numeric import (
    NumericalError,
    chol_lower,
    sample_inverse_wishart,
    sample_trunc_normal,
    spd_inverse,
)
from .model import (
    ChainOutput,
    ItemResponses,
    LatentState,
    ModelConfig,
    NetworkData,
)

__all__ = [
    "DecorrelationCoeffs",
    "ConditionalBlock",
    "decorrelate",
    "conditional_block",
    "augment_probit",
    "update_latent_dimension",
    "update_theta_dimension",
    "update_sigma_utheta",
    "update_sigma_e",
    "update_rho",
    "update_delta",
    "update_item_params",
    "update_sigma_eps",
    "GibbsSampler",
    "run_chain",
]


@dataclass(frozen=True)
class DecorrelationCoeffs:
    """Coefficients (c, d) that whiten the dyad errors.

    Applying R -> c R + d R' turns errors with within-dyad correlation rho
    and variance sigma_e^2 into unit-variance uncorrelated ones.
    """

    c: float
    d: float

    @classmethod
    def from_params(cls, rho: float, sigma_e: float) -> "DecorrelationCoeffs":
        if not abs(rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {rho}")
        if sigma_e <= 0:
            raise ValueError("sigma_e must be positive")
        sp = (1.0 + rho) ** -0.5
        sm = (1.0 - rho) ** -0.5
        return cls(c=(sp + sm) / (2.0 * sigma_e), d=(sp - sm) / (2.0 * sigma_e))


def decorrelate(R: np.ndarray, rho: float, sigma_e: float) -> np.ndarray:
    """Whiten a residual matrix: returns c R + d R'."""
    cd = DecorrelationCoeffs.from_params(rho, sigma_e)
    return cd.c * R + cd.d * R.T


@dataclass(frozen=True)
class ConditionalBlock:
    """Precision blocks of (one network coordinate, all theta) given the rest.

    ``q_u`` is the precision of the updated coordinate, ``q_theta`` the theta
    block, and ``q_theta_u`` / ``q_u_theta`` the cross blocks (transposes of
    each other).  ``s_u`` maps the conditioned coordinate values to the linear
    shift of the updated coordinate: shift = s_u @ z_context.
    """

    q_u: float
    q_theta_u: np.ndarray
    q_u_theta: np.ndarray
    q_theta: np.ndarray
    s_u: np.ndarray
    context: np.ndarray

    def assembled_precision(self) -> np.ndarray:
        d = self.q_theta.shape[0]
        out = np.zeros((1 + d, 1 + d))
        out[0, 0] = self.q_u
        out[0, 1:] = self.q_theta_u
        out[1:, 0] = self.q_u_theta
        out[1:, 1:] = self.q_theta
        return out


def conditional_block(Sigma_utheta: np.ndarray, target_coord: int, K: int, D: int) -> ConditionalBlock:
    """Conditional-precision blocks for one network coordinate.

    The block covers (target, theta_1..theta_D) conditional on the remaining
    2K-1 network coordinates; the assembled precision equals the inverse of
    that conditional covariance, and the shift operator satisfies
    S = assembled precision @ conditional mean.
    """
    Sigma = np.asarray(Sigma_utheta, dtype=float)
    p = 2 * K + D
    if Sigma.shape != (p, p):
        raise ValueError(f"Sigma_utheta must be {p} x {p}")
    if not 0 <= target_coord < 2 * K:
        raise ValueError("target_coord must index a U or V coordinate")
    block = np.r_[target_coord, np.arange(2 * K, p)]
    context = np.array([i for i in range(2 * K) if i != target_coord])
    s_bb = Sigma[np.ix_(block, block)]
    if context.size:
        s_bc = Sigma[np.ix_(block, context)]
        s_cc = Sigma[np.ix_(context, context)]
        coef = np.linalg.solve(s_cc, s_bc.T).T
        cond_cov = s_bb - coef @ s_bc.T
    else:
        coef = np.zeros((1 + D, 0))
        cond_cov = s_bb
    q = spd_inverse(cond_cov, "conditional covariance")
    shift = q @ coef
    return ConditionalBlock(
        q_u=float(q[0, 0]),
        q_theta_u=q[0, 1:].copy(),
        q_u_theta=q[1:, 0].copy(),
        q_theta=q[1:, 1:].copy(),
        s_u=shift[0].copy(),
        context=context,
    )


def _prior_terms(Q: np.ndarray, Z: np.ndarray, coord: int):
    """Per-person prior precision and linear term for one latent coordinate.

    Q is the full latent precision; the conditional of coordinate j given all
    other coordinates of the same person has precision Q[j, j] and linear
    term -sum_{l != j} Q[j, l] z_l.
    """
    q = Q[coord, coord]
    lin = -(Z @ Q[:, coord]) + q * Z[:, coord]
    return float(q), lin


def _column_system(resid, partner, c, d, prior_prec, prior_lin):
    """Linear system of one latent-column conditional, in diag + rank-1 form.

    Returns (diag, beta, b): the conditional precision is
    diag(diag) + beta * partner partner' and the conditional mean solves
    precision @ mean = b.  Diagonal data cells are excluded throughout.
    """
    rt = c * resid + d * resid.T
    b = c * (rt @ partner) + d * (rt.T @ partner) - (c + d) * np.diag(rt) * partner
    b = b + prior_lin
    v_sq = partner * partner
    ssq = float(v_sq.sum())
    beta = 2.0 * c * d
    diag = (c * c + d * d) * (ssq - v_sq) + prior_prec - beta * v_sq
    return diag, beta, b


def _draw_network_column(resid, partner, c, d, prior_prec, prior_lin, rng):
    """Draw one latent network column from its multivariate normal conditional.

    ``resid`` is the N x N data residual with the target dimension's product
    excluded; ``partner`` the matching column of the other side.  Diagonal
    cells carry no information and are excluded from both the precision and
    the linear term.

    The conditional precision is diagonal plus rank one,
    diag(m) + 2cd vv', which admits an O(N) sampler via Sherman-Morrison and
    a rank-one square-root update; a dense Cholesky covers the rare case
    where the diagonal split is not positive.
    """
    n = partner.shape[0]
    diag, beta, b = _column_system(resid, partner, c, d, prior_prec, prior_lin)
    v_sq = partner * partner
    z = rng.standard_normal(n)
    if diag.min() > 1e-10 * max(diag.max(), 1.0):
        dinv = 1.0 / diag
        dv = dinv * partner
        s_p = float(partner @ dv)
        denom = 1.0 + beta * s_p
        if denom > 1e-10:
            db = dinv * b
            mean = db - (beta * float(partner @ db) / denom) * dv
            shrink = 1.0 - 1.0 / denom
            root_dinv = np.sqrt(dinv)
            w = root_dinv * partner
            a = (np.sqrt(1.0 - shrink) - 1.0) / s_p if s_p > 0 else 0.0
            return mean + root_dinv * (z + (a * float(w @ z)) * w)
    prec = beta * np.outer(partner, partner)
    prec[np.diag_indices(n)] = diag + beta * v_sq
    L = chol_lower(prec, "latent-column conditional precision")
    mean = cho_solve((L, True), b, check_finite=False)
    return mean + solve_triangular(L.T, z, lower=False, check_finite=False)


def _stack_latents(state: LatentState) -> np.ndarray:
    parts = [m for m in (state.U, state.V, state.Theta) if m is not None]
    return np.hstack(parts)


def update_latent_dimension(
    state: LatentState,
    data_residual: np.ndarray,
    dim_index: int,
    side: str,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one sender or receiver dimension given everything else.

    ``data_residual`` must already exclude the intercept and all other
    dimensions' products.  The design-matrix products are applied through
    their row structure, never materialized.
    """
    if side not in ("sender", "receiver"):
        raise ValueError("side must be 'sender' or 'receiver'")
    K = state.U.shape[1]
    Z = _stack_latents(state)
    coord = dim_index if side == "sender" else K + dim_index
    Q = spd_inverse(state.Sigma_utheta, "Sigma_utheta")
    q, lin = _prior_terms(Q, Z, coord)
    cd = DecorrelationCoeffs.from_params(state.rho, np.sqrt(state.sigma2_e))
    if side == "sender":
        return _draw_network_column(data_residual, state.V[:, dim_index], cd.c, cd.d, q, lin, rng)
    return _draw_network_column(data_residual.T, state.U[:, dim_index], cd.c, cd.d, q, lin, rng)


def update_theta_dimension(
    state: LatentState,
    item_residual: np.ndarray,
    dim_index: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one item-latent dimension; persons are conditionally independent."""
    two_k = 0 if state.U is None else 2 * state.U.shape[1]
    Z = _stack_latents(state)
    Q = spd_inverse(state.Sigma_utheta, "Sigma_utheta")
    q, lin = _prior_terms(Q, Z, two_k + dim_index)
    alpha = state.A[:, dim_index]
    prec = q + (alpha @ alpha) / state.sigma2_eps
    lin = lin + (item_residual @ alpha) / state.sigma2_eps
    return lin / prec + rng.standard_normal(Z.shape[0]) / np.sqrt(prec)


def update_sigma_utheta(
    U: Optional[np.ndarray],
    V: Optional[np.ndarray],
    Theta: Optional[np.ndarray],
    config: ModelConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Inverse-Wishart draw for the joint latent covariance.

    Posterior scale is the prior scale plus the latent cross-product matrix;
    posterior degrees of freedom are N plus the prior degrees of freedom.
    """
    parts = [m for m in (U, V, Theta) if m is not None]
    F = np.hstack(parts) if parts else np.zeros((0, config.latent_dim))
    n = F.shape[0]
    scale = config.resolved_wishart_scale() + F.T @ F
    draw = sample_inverse_wishart(scale, n + config.resolved_wishart_df(), rng)
    if config.force_zero_cross and config.mode == "joint":
        two_k = 2 * config.k
        draw = draw.copy()
        draw[two_k:, :two_k] = 0.0
        draw[:two_k, two_k:] = 0.0
    return draw


def _dyad_quadform(residual: np.ndarray, rho: float):
    """Sum over dyads of e' C(rho)^-1 e plus the self-pair term.

    The diagonal of ``residual`` is pinned to zero upstream, so the self-pair
    term contributes nothing; it is kept for exactness against the printed
    complete-matrix form.
    """
    off_sq = float((residual**2).sum()) - float((np.diag(residual) ** 2).sum())
    cross = (float((residual * residual.T).sum()) - float((np.diag(residual) ** 2).sum())) / 2.0
    quad = (off_sq - 2.0 * rho * cross) / (1.0 - rho**2)
    quad += float((np.diag(residual) ** 2).sum()) / (1.0 + rho)
    return quad, off_sq, cross


def update_sigma_e(
    residual_E: np.ndarray,
    rho: float,
    rng: np.random.Generator,
    include_self_pairs: bool = True,
) -> float:
    """Gamma draw for the network error precision; returns the variance.

    With ``include_self_pairs`` the shape is (N^2+1)/2, counting the N
    structural zero-residual diagonal cells; otherwise only the N(N-1)
    observed off-diagonal cells are counted.
    """
    n = residual_E.shape[0]
    quad, _, _ = _dyad_quadform(residual_E, rho)
    shape = (n * n + 1) / 2.0 if include_self_pairs else (n * (n - 1) + 1) / 2.0
    rate = 0.5 * (1.0 + quad)
    precision = rng.gamma(shape, 1.0 / rate)
    return 1.0 / precision


def _rho_loglik(off_sq: float, cross: float, n_dyads: int, sigma2_e: float, rho: float) -> float:
    return -0.5 * n_dyads * np.log1p(-(rho**2)) - (off_sq - 2.0 * rho * cross) / (
        2.0 * sigma2_e * (1.0 - rho**2)
    )


def update_rho(
    residual_E: np.ndarray,
    sigma2_e: float,
    current_rho: float,
    proposal_sd: float,
    rng: np.random.Generator,
):
    """Random-walk Metropolis step for the within-dyad correlation.

    The prior is uniform on (-1, 1); proposals outside the support are
    rejected outright.  Returns (rho, accepted).
    """
    n = residual_E.shape[0]
    n_dyads = n * (n - 1) // 2
    _, off_sq, cross = _dyad_quadform(residual_E, 0.0)
    proposal = current_rho + proposal_sd * rng.standard_normal()
    if not -1.0 < proposal < 1.0:
        return current_rho, False
    log_ratio = _rho_loglik(off_sq, cross, n_dyads, sigma2_e, proposal) - _rho_loglik(
        off_sq, cross, n_dyads, sigma2_e, current_rho
    )
    if np.log(rng.random()) < log_ratio:
        return float(proposal), True
    return current_rho, False


def update_delta(
    X_or_Phi: np.ndarray,
    U: np.ndarray,
    V: np.ndarray,
    sigma2_e: float,
    rho: float,
    prior_precision: float,
    rng: np.random.Generator,
) -> float:
    """Conjugate normal draw for the network intercept under the whitened metric."""
    n = X_or_Phi.shape[0]
    W = X_or_Phi - U @ V.T
    s_w = float(W.sum()) - float(np.trace(W))
    cd = 1.0 / (np.sqrt(sigma2_e) * np.sqrt(1.0 + rho))
    prec = prior_precision + cd * cd * n * (n - 1)
    mean = cd * cd * s_w / prec
    return float(mean + rng.standard_normal() / np.sqrt(prec))


def update_item_params(
    Y_or_Eta: np.ndarray,
    Theta: np.ndarray,
    sigma2_eps: float,
    config: ModelConfig,
    rng: np.random.Generator,
):
    """Per-item conjugate normal draw of (slopes, intercept); returns (Beta, A)."""
    n, m = Y_or_Eta.shape
    G = np.hstack([Theta, np.ones((n, 1))])
    prior_cov = config.resolved_xi_cov()
    prior_prec = spd_inverse(prior_cov, "prior_xi_cov")
    prior_lin = prior_prec @ config.resolved_xi_mean()
    post_prec = G.T @ G / sigma2_eps + prior_prec
    L = chol_lower(post_prec, "item-parameter precision")
    rhs = G.T @ Y_or_Eta / sigma2_eps + prior_lin[:, None]
    mean = cho_solve((L, True), rhs)
    noise = solve_triangular(L.T, rng.standard_normal(mean.shape), lower=False)
    xi = mean + noise
    d = Theta.shape[1]
    return xi[d].copy(), xi[:d].T.copy()


def update_sigma_eps(residual_Psi: np.ndarray, rng: np.random.Generator) -> float:
    """Gamma draw for the item error precision; returns the variance."""
    n, m = residual_Psi.shape
    shape = (n * m + 1) / 2.0
    rate = 0.5 * (1.0 + float((residual_Psi**2).sum()))
    return 1.0 / rng.gamma(shape, 1.0 / rate)


def _dyad_plan(data: NetworkData):
    """Index plan for the two alternating dyad passes of a binary network."""
    n = data.n_nodes
    iu, ju = np.triu_indices(n, 1)
    plan = []
    for rows, cols in ((iu, ju), (ju, iu)):
        obs = data.mask[rows, cols]
        pos = data.edges[rows, cols][obs] > 0
        plan.append((rows, cols, obs, pos))
    return plan


def _dyad_truncated_passes(latent, expected, rho, sd, plan, rng):
    """Alternating per-cell truncated draws given the dyad partner."""
    for rows, cols, obs, pos in plan:
        cond = expected[rows, cols] + rho * (latent[cols, rows] - expected[cols, rows])
        vals = np.empty(rows.shape[0])
        vals[obs] = sample_trunc_normal(cond[obs], sd, pos, rng)
        n_mis = rows.shape[0] - int(obs.sum())
        if n_mis:
            vals[~obs] = cond[~obs] + sd * rng.standard_normal(n_mis)
        latent[rows, cols] = vals
    np.fill_diagonal(latent, np.diag(expected))
    return latent


def augment_probit(
    observed,
    expected: np.ndarray,
    rho_or_none,
    rng: np.random.Generator,
    current: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Redraw the latent continuous matrix behind binary observations.

    Observed ones get a positive truncated normal, observed zeros a
    non-positive one, unobserved cells an untruncated draw.  For network data
    (``rho_or_none`` given) the two cells of a dyad are updated by alternating
    univariate conditionals through the dyad correlation, starting from
    ``current`` (the previous latent matrix; required for a proper transition
    whenever rho != 0).  The diagonal is set to its expected value so its
    residual is exactly zero.
    """
    if isinstance(observed, NetworkData):
        if observed.kind != "binary":
            raise ValueError("probit augmentation needs a binary network")
        rho = 0.0 if rho_or_none is None else float(rho_or_none)
        latent = expected.copy() if current is None else current.copy()
        sd = np.sqrt(1.0 - rho**2)
        return _dyad_truncated_passes(latent, expected, rho, sd, _dyad_plan(observed), rng)
    if isinstance(observed, ItemResponses):
        if observed.kind != "binary":
            raise ValueError("probit augmentation needs binary items")
        obs = observed.mask
        vals = np.empty_like(expected)
        vals[obs] = sample_trunc_normal(expected[obs], 1.0, observed.values[obs] > 0, rng)
        n_mis = int((~obs).sum())
        vals[~obs] = expected[~obs] + rng.standard_normal(n_mis)
        return vals
    raise TypeError("observed must be NetworkData or ItemResponses")


class GibbsSampler:
    """Owns the latent state and runs the sweep loop for one chain."""

    def __init__(self, data: Optional[NetworkData], items: Optional[ItemResponses], config: ModelConfig):
        if config.mode in ("joint", "network_only") and data is None:
            raise ValueError(f"mode {config.mode!r} requires network data")
        if config.mode in ("joint", "item_only") and items is None:
            raise ValueError(f"mode {config.mode!r} requires item responses")
        if config.mode == "network_only":
            items = None
        if config.mode == "item_only":
            data = None
        if data is not None and items is not None and data.n_nodes != items.n_persons:
            raise ValueError(
                f"network has {data.n_nodes} nodes but items have {items.n_persons} persons"
            )
        self.data = data
        self.items = items
        self.config = config
        self.n = data.n_nodes if data is not None else items.n_persons
        self.state: Optional[LatentState] = None
        self._rho_accepts = 0
        self._rho_proposals = 0
        if data is not None:
            self._set_network_indices()
        if items is not None:
            self._item_obs = items.mask
            self._item_has_missing = bool((~items.mask).any())

    # -- data plumbing ------------------------------------------------------

    def _set_network_indices(self):
        n = self.n
        self._iu, self._ju = np.triu_indices(n, 1)
        self._net_missing = ~self.data.mask
        self._plan = _dyad_plan(self.data) if self.data.kind == "binary" else None

    def replace_network_data(self, data: NetworkData):
        """Swap in a new observed network of the same shape (validation harness)."""
        if data.n_nodes != self.n:
            raise ValueError("replacement network has wrong size")
        self.data = data
        self._set_network_indices()

    def replace_item_data(self, items: ItemResponses):
        if items.n_persons != self.n:
            raise ValueError("replacement items have wrong size")
        self.items = items
        self._item_obs = items.mask
        self._item_has_missing = bool((~items.mask).any())

    def install_state(
        self,
        Sigma_utheta: np.ndarray,
        delta: float = 0.0,
        rho: float = 0.0,
        sigma2_e: float = 1.0,
        sigma2_eps: float = 1.0,
        U: Optional[np.ndarray] = None,
        V: Optional[np.ndarray] = None,
        Theta: Optional[np.ndarray] = None,
        Beta: Optional[np.ndarray] = None,
        A: Optional[np.ndarray] = None,
        net_latent: Optional[np.ndarray] = None,
        item_latent: Optional[np.ndarray] = None,
    ):
        """Place the sampler at an exact state, rebuilding internal buffers.

        Supports validation harnesses that alternate data simulation with
        sweeps.  ``net_latent`` / ``item_latent`` are the completed data
        matrices (latent edges for a binary network, completed responses for
        items); they default to the expected values.
        """
        k, d = self.config.k_eff, self.config.d_eff
        parts = [m for m in (U, V, Theta) if m is not None]
        self._Z = np.ascontiguousarray(np.hstack(parts), dtype=float)
        u_view = self._Z[:, :k] if k else None
        v_view = self._Z[:, k : 2 * k] if k else None
        t_view = self._Z[:, 2 * k :] if d else None
        self.state = LatentState(
            U=u_view,
            V=v_view,
            Theta=t_view,
            Sigma_utheta=np.asarray(Sigma_utheta, dtype=float).copy(),
            delta=float(delta),
            rho=float(rho),
            sigma2_e=float(sigma2_e),
            sigma2_eps=float(sigma2_eps),
            Beta=None if Beta is None else np.asarray(Beta, dtype=float).copy(),
            A=None if A is None else np.asarray(A, dtype=float).copy(),
        )
        self._rho_sd = self.config.rho_proposal_sd
        if self.data is not None:
            self._uvt = u_view @ v_view.T
            mean = self.state.delta + self._uvt
            self._net = mean.copy() if net_latent is None else np.asarray(net_latent, float).copy()
            np.fill_diagonal(self._net, np.diag(mean))
            if self.data.kind == "binary":
                self.state.Phi = self._net
        if self.items is not None:
            self._theta_at = t_view @ self.state.A.T
            mean = self.state.Beta[None, :] + self._theta_at
            self._items_work = (
                mean.copy() if item_latent is None else np.asarray(item_latent, float).copy()
            )
            if self.items.kind == "binary":
                self.state.Eta = self._items_work

    # -- initialization -----------------------------------------------------

    def init_state(self, rng: np.random.Generator) -> LatentState:
        cfg = self.config
        n = self.n
        k, d = cfg.k_eff, cfg.d_eff
        self._Z = 0.1 * rng.standard_normal((n, 2 * k + d))
        U = self._Z[:, :k] if k else None
        V = self._Z[:, k : 2 * k] if k else None
        Theta = self._Z[:, 2 * k :] if d else None

        delta, rho, sigma2_e = 0.0, 0.0, 1.0
        Beta = A = None
        sigma2_eps = 1.0
        if self.data is not None:
            obs = self.data.edges[self.data.mask]
            if self.data.kind == "binary":
                dens = float(obs.mean()) if obs.size else 0.5
                dens = min(max(dens, 1.0 / (obs.size + 2.0)), 1.0 - 1.0 / (obs.size + 2.0))
                delta = float(ndtri(dens))
            else:
                delta = float(obs.mean()) if obs.size else 0.0
        if self.items is not None:
            m = self.items.n_items
            Beta = np.zeros(m)
            for i in range(m):
                col = self.items.values[self.items.mask[:, i], i]
                mean_i = float(col.mean()) if col.size else 0.0
                if self.items.kind == "binary":
                    p = min(max(mean_i, 1.0 / (n + 2.0)), 1.0 - 1.0 / (n + 2.0))
                    Beta[i] = float(ndtri(p))
                else:
                    Beta[i] = mean_i
            A = np.full((m, d), 0.1)

        self.state = LatentState(
            U=U,
            V=V,
            Theta=Theta,
            Sigma_utheta=np.eye(2 * k + d),
            delta=delta,
            rho=rho,
            sigma2_e=sigma2_e,
            sigma2_eps=sigma2_eps,
            Beta=Beta,
            A=A,
        )
        self._rho_sd = cfg.rho_proposal_sd
        if self.data is not None:
            self._uvt = U @ V.T
            mean = self.state.delta + self._uvt
            if self.data.kind == "binary":
                self._net = augment_probit(self.data, mean, rho, rng)
                self.state.Phi = self._net
            else:
                self._net = self.data.edges.copy()
                self._net[self._net_missing] = mean[self._net_missing]
                np.fill_diagonal(self._net, np.diag(mean))
        if self.items is not None:
            self._theta_at = Theta @ A.T
            mean = Beta[None, :] + self._theta_at
            if self.items.kind == "binary":
                self._items_work = augment_probit(self.items, mean, None, rng)
                self.state.Eta = self._items_work
            else:
                self._items_work = self.items.values.copy()
                self._items_work[~self._item_obs] = mean[~self._item_obs]
        return self.state

    # -- sweep steps --------------------------------------------------------

    def _augment_network(self, rng):
        st = self.state
        mean = st.delta + self._uvt
        if self.data.kind == "binary":
            sd = np.sqrt(1.0 - st.rho**2)
            self._net = _dyad_truncated_passes(self._net, mean, st.rho, sd, self._plan, rng)
            st.Phi = self._net
            return
        miss = self._net_missing
        if not miss.any():
            np.fill_diagonal(self._net, np.diag(mean))
            return
        # Alternate the two cells of each dyad so double-missing dyads get a
        # proper correlated draw through the conditional on the partner.
        sd = np.sqrt(st.sigma2_e * (1.0 - st.rho**2))
        iu, ju = self._iu, self._ju
        for rows, cols in ((iu, ju), (ju, iu)):
            sel = miss[rows, cols]
            if not sel.any():
                continue
            r, c = rows[sel], cols[sel]
            cond = mean[r, c] + st.rho * (self._net[c, r] - mean[c, r])
            self._net[r, c] = cond + sd * rng.standard_normal(r.shape[0])
        np.fill_diagonal(self._net, np.diag(mean))

    def _augment_items(self, rng):
        st = self.state
        mean = st.Beta[None, :] + self._theta_at
        if self.items.kind == "binary":
            self._items_work = augment_probit(self.items, mean, None, rng)
            st.Eta = self._items_work
        elif self._item_has_missing:
            miss = ~self._item_obs
            self._items_work[miss] = mean[miss] + np.sqrt(st.sigma2_eps) * rng.standard_normal(
                int(miss.sum())
            )

    def _update_network_latents(self, Q, rng):
        st = self.state
        k = self.config.k_eff
        cd = DecorrelationCoeffs.from_params(st.rho, np.sqrt(st.sigma2_e))
        base = self._net - st.delta - self._uvt
        for side, offset in (("sender", 0), ("receiver", k)):
            for j in range(k):
                coord = offset + j
                u_col = st.U[:, j].copy()
                v_col = st.V[:, j].copy()
                resid = base + u_col[:, None] * v_col[None, :]
                q, lin = _prior_terms(Q, self._Z, coord)
                if side == "sender":
                    new = _draw_network_column(resid, v_col, cd.c, cd.d, q, lin, rng)
                    delta_uvt = (new - u_col)[:, None] * v_col[None, :]
                    st.U[:, j] = new
                else:
                    new = _draw_network_column(resid.T, u_col, cd.c, cd.d, q, lin, rng)
                    delta_uvt = u_col[:, None] * (new - v_col)[None, :]
                    st.V[:, j] = new
                self._uvt += delta_uvt
                base -= delta_uvt

    def _update_theta_latents(self, Q, rng):
        st = self.state
        two_k = 2 * self.config.k_eff
        base = self._items_work - st.Beta[None, :] - self._theta_at
        for j in range(self.config.d_eff):
            alpha = st.A[:, j]
            theta_col = st.Theta[:, j].copy()
            resid = base + theta_col[:, None] * alpha[None, :]
            q, lin = _prior_terms(Q, self._Z, two_k + j)
            prec = q + (alpha @ alpha) / st.sigma2_eps
            lin = lin + (resid @ alpha) / st.sigma2_eps
            new = lin / prec + rng.standard_normal(self.n) / np.sqrt(prec)
            delta_ta = (new - theta_col)[:, None] * alpha[None, :]
            st.Theta[:, j] = new
            self._theta_at += delta_ta
            base -= delta_ta

    def _update_items(self, rng):
        st = self.state
        st.Beta, st.A = update_item_params(
            self._items_work, st.Theta, st.sigma2_eps, self.config, rng
        )
        self._theta_at = st.Theta @ st.A.T

    def _center(self):
        st = self.state
        if st.Theta is not None and st.Theta.size:
            shift = st.Theta.mean(axis=0)
            if np.abs(shift).max() > 1e-8:
                st.Theta -= shift[None, :]
                st.Beta += st.A @ shift
                self._theta_at = st.Theta @ st.A.T
        if st.U is not None and st.U.size:
            shift = st.U.mean(axis=0)
            if np.abs(shift).max() > 1e-8:
                st.U -= shift[None, :]
                st.delta += float(shift @ st.V.mean(axis=0))
                self._uvt = st.U @ st.V.T

    def sweep(self, rng: np.random.Generator, adapt: bool = False):
        """One full Gibbs sweep over every unknown."""
        st = self.state
        cfg = self.config
        if self.data is not None:
            self._augment_network(rng)
        if self.items is not None:
            self._augment_items(rng)
        Q = spd_inverse(st.Sigma_utheta, "Sigma_utheta")
        if self.data is not None:
            self._update_network_latents(Q, rng)
        if self.items is not None:
            self._update_theta_latents(Q, rng)
        st.Sigma_utheta = update_sigma_utheta(st.U, st.V, st.Theta, cfg, rng)
        if self.data is not None:
            resid = self._net - st.delta - self._uvt
            np.fill_diagonal(resid, 0.0)
            if self.data.kind == "continuous":
                st.sigma2_e = update_sigma_e(resid, st.rho, rng, cfg.include_self_pairs)
            st.rho, accepted = update_rho(resid, st.sigma2_e, st.rho, self._rho_sd, rng)
            self._rho_accepts += int(accepted)
            self._rho_proposals += 1
            if adapt and cfg.adapt_rho and self._rho_proposals % 100 == 0:
                rate = self._rho_accepts / self._rho_proposals
                if rate < 0.30:
                    self._rho_sd = max(self._rho_sd * 0.7, 1e-4)
                elif rate > 0.45:
                    self._rho_sd = min(self._rho_sd * 1.3, 1.0)
            st.delta = update_delta(
                self._net, st.U, st.V, st.sigma2_e, st.rho, cfg.prior_delta_precision, rng
            )
        if self.items is not None:
            if self.items.kind == "continuous":
                resid_items = self._items_work - st.Beta[None, :] - self._theta_at
                st.sigma2_eps = update_sigma_eps(resid_items, rng)
            self._update_items(rng)
        if cfg.center_latents:
            self._center()

    # -- replicate generation -----------------------------------------------

    def _replicate_summaries(self, rng):
        from . import diagnostics, simulate

        st = self.state
        out = {}
        if self.data is not None and self.data.kind == "binary":
            edges = simulate.simulate_network_edges(
                st.delta, st.U, st.V, st.rho, st.sigma2_e, "binary", rng
            )
            rep = NetworkData(edges, kind="binary")
            out["network"] = diagnostics.network_stats(rep)
        if self.items is not None:
            vals = simulate.simulate_item_values(
                st.Beta, st.A, st.Theta, st.sigma2_eps, self.items.kind, rng
            )
            out["item_means"] = vals.mean(axis=0)
            out["item_cov"] = np.cov(vals, rowvar=False, ddof=1)
            out["item_values"] = vals
        return out

    # -- chain loop ----------------------------------------------------------

    def observed_loglik(self) -> float:
        """Log-likelihood of the observed cells at the current parameters."""
        st = self.state
        total = 0.0
        if self.data is not None:
            mean = st.delta + self._uvt
            mask = self.data.mask
            if self.data.kind == "binary":
                m = mean[mask]
                x = self.data.edges[mask]
                total += float(np.sum(np.where(x > 0, log_ndtr(m), log_ndtr(-m))))
            else:
                resid = self.data.edges - mean
                resid[~mask] = 0.0
                quad, _, _ = _dyad_quadform(resid, st.rho)
                n_obs = int(mask.sum())
                total += -0.5 * (
                    quad / st.sigma2_e
                    + n_obs * np.log(2 * np.pi * st.sigma2_e)
                    + (n_obs / 2) * np.log1p(-st.rho**2)
                )
        if self.items is not None:
            mean = st.Beta[None, :] + self._theta_at
            mask = self.items.mask
            if self.items.kind == "binary":
                m = mean[mask]
                y = self.items.values[mask]
                total += float(np.sum(np.where(y > 0, log_ndtr(m), log_ndtr(-m))))
            else:
                r = (self.items.values - mean)[mask]
                total += float(
                    -0.5 * np.sum(r**2) / st.sigma2_eps
                    - 0.5 * r.size * np.log(2 * np.pi * st.sigma2_eps)
                )
        return total

    def run(
        self,
        rng: np.random.Generator,
        progress: Optional[Callable[[int, float, float], None]] = None,
        progress_every: int = 0,
    ) -> ChainOutput:
        cfg = self.config
        self.init_state(rng)
        n_kept_target = cfg.iterations - cfg.burn_in
        mean_uvt = np.zeros((self.n, self.n)) if self.data is not None else None
        mean_ta = (
            np.zeros((self.n, self.items.n_items)) if self.items is not None else None
        )
        traces = {"delta": [], "rho": [], "sigma2_e": [], "sigma2_eps": [], "beta": []}
        replicates = []
        kept = 0
        self._rho_accepts = 0
        self._rho_proposals = 0
        post_accepts = 0
        post_props = 0
        for t in range(cfg.iterations):
            in_burn = t < cfg.burn_in
            before = (self._rho_accepts, self._rho_proposals)
            try:
                self.sweep(rng, adapt=in_burn)
            except NumericalError as err:
                raise NumericalError(f"iteration {t}: {err}") from err
            if not in_burn:
                post_accepts += self._rho_accepts - before[0]
                post_props += self._rho_proposals - before[1]
                if mean_uvt is not None:
                    mean_uvt += self._uvt
                if mean_ta is not None:
                    mean_ta += self._theta_at
                kept += 1
                if (t - cfg.burn_in) % cfg.thin == 0:
                    st = self.state
                    traces["delta"].append(st.delta)
                    traces["rho"].append(st.rho)
                    traces["sigma2_e"].append(st.sigma2_e)
                    traces["sigma2_eps"].append(st.sigma2_eps)
                    if st.Beta is not None:
                        traces["beta"].append(st.Beta.copy())
                    stride = cfg.replicate_stride
                    if stride > 0 and (len(traces["delta"]) - 1) % stride == 0:
                        replicates.append(self._replicate_summaries(rng))
            if progress is not None and progress_every and (t + 1) % progress_every == 0:
                rate = post_accepts / post_props if post_props else 0.0
                progress(t + 1, self.observed_loglik(), rate)
        assert kept == n_kept_target
        scalar_traces = {
            "delta": np.array(traces["delta"]),
            "rho": np.array(traces["rho"]),
            "sigma2_e": np.array(traces["sigma2_e"]),
            "sigma2_eps": np.array(traces["sigma2_eps"]),
        }
        if traces["beta"]:
            scalar_traces["beta"] = np.array(traces["beta"])
        if self.data is None:
            for key in ("delta", "rho", "sigma2_e"):
                del scalar_traces[key]
        if self.items is None:
            scalar_traces.pop("sigma2_eps", None)
        return ChainOutput(
            mean_UVt=mean_uvt / kept if mean_uvt is not None else None,
            mean_ThetaAt=mean_ta / kept if mean_ta is not None else None,
            scalar_traces=scalar_traces,
            replicate_stats=replicates if replicates else None,
            accept_rate_rho=post_accepts / post_props if post_props else 0.0,
            n_kept=kept,
            seed=cfg.seed,
        )


def run_chain(
    data: Optional[NetworkData],
    items: Optional[ItemResponses],
    config: ModelConfig,
    rng_seed: Optional[int] = None,
    progress: Optional[Callable[[int, float, float], None]] = None,
    progress_every: int = 0,
) -> ChainOutput:
    """Run one chain and return its accumulated output.

    The random stream is fully determined by ``rng_seed`` (falling back to
    ``config.seed``), so identical seeds give bitwise-identical output.
    """
    seed = config.seed if rng_seed is None else rng_seed
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sampler = GibbsSampler(data, items, config)
    out = sampler.run(rng, progress=progress, progress_every=progress_every)
    out.seed = seed
    return out
