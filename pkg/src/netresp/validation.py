"""Sampler self-validation by joint-distribution (successive-conditional) testing.

Forward simulation draws parameters from their priors and data from the
model; the successive-conditional chain alternates one Gibbs sweep with a
fresh data simulation at the current parameters.  Both target the same joint
distribution, so marginal moments of the parameters must agree up to Monte
Carlo error.  Monitored functionals are chosen to have finite prior variance:
the intercept and dyad correlation with their squares, the error precisions
(the raw error variances have no prior mean), and the bounded transform
s/(1+s) of each latent-covariance diagonal (whose prior variance is not
finite either).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numeric import batch_means_se, sample_inverse_wishart
from .model import ItemResponses, ModelConfig, NetworkData
from .sampler import GibbsSampler
from .simulate import simulate_item_values, simulate_network_edges

__all__ = ["GewekeResult", "geweke_test"]


@dataclass
class GewekeResult:
    names: list
    forward_means: np.ndarray
    successive_means: np.ndarray
    zscores: np.ndarray

    @property
    def max_abs_z(self) -> float:
        return float(np.nanmax(np.abs(self.zscores)))

    def passed(self, threshold: float = 4.0) -> bool:
        return self.max_abs_z < threshold


def _default_config(network_kind: str) -> ModelConfig:
    return ModelConfig(
        k=1,
        d=1,
        iterations=10,
        burn_in=5,
        thin=1,
        prior_delta_precision=1.0,
        rho_proposal_sd=0.5,
        center_latents=False,
        adapt_rho=False,
        # the complete-matrix gamma shape is not an exact conditional for the
        # off-diagonal-only likelihood, so the exactness check runs without it
        include_self_pairs=False,
        seed=0,
    )


def _draw_prior(config, n_nodes, n_items, network_kind, rng):
    p = config.latent_dim
    k, d = config.k, config.d
    sigma = sample_inverse_wishart(
        config.resolved_wishart_scale(), config.resolved_wishart_df(), rng
    )
    state = {
        "Sigma": sigma,
        "delta": rng.standard_normal() / np.sqrt(config.prior_delta_precision),
        "rho": rng.uniform(-1.0, 1.0),
        "sigma2_e": 1.0 if network_kind == "binary" else 1.0 / rng.gamma(0.5, 2.0),
        "sigma2_eps": 1.0 / rng.gamma(0.5, 2.0),
    }
    chol_xi = np.linalg.cholesky(config.resolved_xi_cov())
    xi = config.resolved_xi_mean()[None, :] + rng.standard_normal((n_items, d + 1)) @ chol_xi.T
    state["A"] = xi[:, :d].copy()
    state["Beta"] = xi[:, d].copy()
    lat = rng.multivariate_normal(np.zeros(p), sigma, size=n_nodes, method="cholesky")
    state["U"] = lat[:, :k]
    state["V"] = lat[:, k : 2 * k]
    state["Theta"] = lat[:, 2 * k :]
    return state


def _simulate(state, network_kind, rng):
    x, phi = simulate_network_edges(
        state["delta"],
        state["U"],
        state["V"],
        state["rho"],
        state["sigma2_e"],
        network_kind,
        rng,
        return_latent=True,
    )
    y = simulate_item_values(
        state["Beta"], state["A"], state["Theta"], state["sigma2_eps"], "continuous", rng
    )
    return x, phi, y


def _monitor(state, p):
    delta, rho = state["delta"], state["rho"]
    prec = 1.0 / state["sigma2_eps"]
    e_prec = 1.0 / state["sigma2_e"]
    bounded = state["sigma_diag"] / (1.0 + state["sigma_diag"])
    return np.concatenate([[delta, delta**2, rho, rho**2, prec, prec**2, e_prec, e_prec**2], bounded])


def _names(p, network_kind):
    names = ["delta", "delta^2", "rho", "rho^2", "eps_prec", "eps_prec^2", "e_prec", "e_prec^2"]
    names += [f"sigma_{i}{i}_bounded" for i in range(p)]
    if network_kind == "binary":
        names = [n for n in names if not n.startswith("e_prec")]
    return names


def geweke_test(
    n_forward: int = 60000,
    n_successive: int = 30000,
    thin: int = 2,
    seed: int = 20240817,
    n_nodes: int = 6,
    n_items: int = 4,
    network_kind: str = "binary",
    config: ModelConfig | None = None,
) -> GewekeResult:
    """Run the joint-distribution check and return per-moment z-scores."""
    config = config or _default_config(network_kind)
    p = config.latent_dim
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    monitored = []
    for _ in range(n_forward):
        st = _draw_prior(config, n_nodes, n_items, network_kind, rng)
        st["sigma_diag"] = np.diag(st["Sigma"])
        monitored.append(_monitor(st, p))
    fwd = np.asarray(monitored)

    st = _draw_prior(config, n_nodes, n_items, network_kind, rng)
    x, phi, y = _simulate(st, network_kind, rng)
    sampler = GibbsSampler(NetworkData(x, kind=network_kind), ItemResponses(y), config)
    sampler.install_state(
        Sigma_utheta=st["Sigma"],
        delta=st["delta"],
        rho=st["rho"],
        sigma2_e=st["sigma2_e"],
        sigma2_eps=st["sigma2_eps"],
        U=st["U"],
        V=st["V"],
        Theta=st["Theta"],
        Beta=st["Beta"],
        A=st["A"],
        net_latent=phi,
        item_latent=y,
    )
    rows = np.empty((n_successive, fwd.shape[1]))
    for t in range(n_successive):
        for _ in range(thin):
            s = sampler.state
            cur = {
                "delta": s.delta,
                "rho": s.rho,
                "sigma2_e": s.sigma2_e,
                "sigma2_eps": s.sigma2_eps,
                "Beta": s.Beta,
                "A": s.A,
                "U": s.U,
                "V": s.V,
                "Theta": s.Theta,
            }
            x, phi, y = _simulate(cur, network_kind, rng)
            sampler.replace_network_data(NetworkData(x, kind=network_kind))
            sampler.replace_item_data(ItemResponses(y))
            sampler._net = phi
            np.fill_diagonal(sampler._net, np.diag(s.delta + sampler._uvt))
            if network_kind == "binary":
                sampler.state.Phi = sampler._net
            sampler._items_work = y.copy()
            sampler.sweep(rng)
        s = sampler.state
        rows[t] = _monitor(
            {
                "delta": s.delta,
                "rho": s.rho,
                "sigma2_e": s.sigma2_e,
                "sigma2_eps": s.sigma2_eps,
                "sigma_diag": np.diag(s.Sigma_utheta),
            },
            p,
        )

    full_names = ["delta", "delta^2", "rho", "rho^2", "eps_prec", "eps_prec^2", "e_prec", "e_prec^2"]
    full_names += [f"sigma_{i}{i}_bounded" for i in range(p)]
    keep = [
        j
        for j, name in enumerate(full_names)
        if network_kind == "continuous" or not name.startswith("e_prec")
    ]
    z = np.empty(len(keep))
    for out_idx, j in enumerate(keep):
        se_f = fwd[:, j].std(ddof=1) / np.sqrt(fwd.shape[0])
        se_s = batch_means_se(rows[:, j], n_batches=100)
        z[out_idx] = (fwd[:, j].mean() - rows[:, j].mean()) / np.sqrt(se_f**2 + se_s**2)
    return GewekeResult(
        names=[full_names[j] for j in keep],
        forward_means=fwd[:, keep].mean(axis=0),
        successive_means=rows[:, keep].mean(axis=0),
        zscores=z,
    )
