"""Model-fit assessment: summary statistics, posterior predictive checks,
predictive AUC with row-holdout cross-validation, and convergence checks."""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sp_stats
from scipy.special import ndtr

from .model import ChainOutput, ItemResponses, ModelConfig, NetworkData

__all__ = [
    "NetworkStats",
    "PPCResult",
    "network_stats",
    "posterior_predictive",
    "auc",
    "row_holdout_cv",
    "gelman_rubin",
    "item_ppc_stats",
    "compare_joint_separate",
]


@dataclass(frozen=True)
class NetworkStats:
    """Degree, density, reciprocity and triadic summaries of a binary network.

    ``dyadic_dependence`` is the sample correlation of the two edge values
    over unordered dyads; ``transitivity`` the share of ordered two-paths
    that close; ``balance`` the share of mutual dyads among connected dyads.
    ``dyadic_dependence_defined`` is False when the correlation is undefined
    (no variation), in which case 0 is reported.
    """

    sender_degrees: np.ndarray
    receiver_degrees: np.ndarray
    density: float
    dyadic_dependence: float
    transitivity: float
    balance: float
    dyadic_dependence_defined: bool = True

    def scalar_dict(self) -> dict:
        return {
            "density": self.density,
            "dyadic_dependence": self.dyadic_dependence,
            "transitivity": self.transitivity,
            "balance": self.balance,
        }


@dataclass
class PPCResult:
    """Observed statistics against their replicated distributions.

    ``replicated`` maps each statistic name to the vector of replicate
    values; ``coverage_flags`` records whether the observed value lies inside
    the central 95% band of the replicates.
    """

    observed: dict
    replicated: dict
    coverage_flags: dict
    n_replicates: int


def network_stats(net: NetworkData) -> NetworkStats:
    """Summary statistics of an observed binary network, mask-aware."""
    if net.kind != "binary":
        raise ValueError("network statistics are defined for binary networks")
    x = np.where(net.mask, net.edges, 0.0)
    obs = net.mask
    n_obs = int(obs.sum())
    density = float(x.sum() / n_obs) if n_obs else 0.0
    sender = x.sum(axis=1)
    receiver = x.sum(axis=0)

    iu, ju = np.triu_indices(net.n_nodes, 1)
    both = obs[iu, ju] & obs[ju, iu]
    a = x[iu, ju][both]
    b = x[ju, iu][both]
    defined = a.size > 1 and a.std() > 0 and b.std() > 0
    dyad_corr = float(np.corrcoef(a, b)[0, 1]) if defined else 0.0

    # Two-paths a->b->c (both edges observed since x zeroes unobserved cells);
    # the triple counts as potentially transitive only if the closing cell
    # (a, c) is observed, and the observed mask excludes a = c by its diagonal.
    x2 = x @ x
    w = obs.astype(float)
    potential = float((x2 * w).sum())
    closed = float((x2 * x).sum())
    transitivity = closed / potential if potential > 0 else 0.0

    connected = (a + b) > 0
    mutual = (a * b) > 0
    balance = float(mutual.sum() / connected.sum()) if connected.any() else 0.0
    return NetworkStats(
        sender_degrees=sender,
        receiver_degrees=receiver,
        density=density,
        dyadic_dependence=dyad_corr,
        transitivity=transitivity,
        balance=balance,
        dyadic_dependence_defined=bool(defined),
    )


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve via the rank (Mann-Whitney) formulation.

    Ties between a positive and a negative score count one half.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    pos = labels > 0
    n1 = int(pos.sum())
    n0 = labels.shape[0] - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes present")
    ranks = sp_stats.rankdata(scores)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def gelman_rubin(chains: Sequence[np.ndarray]) -> float:
    """Split potential-scale-reduction factor over two or more scalar traces."""
    if len(chains) < 2:
        raise ValueError("need at least two chains")
    length = len(chains[0])
    if any(len(c) != length for c in chains):
        raise ValueError("chains must have equal length")
    half = length // 2
    if half < 2:
        raise ValueError("chains too short to split")
    split = []
    for c in chains:
        arr = np.asarray(c, dtype=float)
        split.append(arr[:half])
        split.append(arr[half : 2 * half])
    split = np.asarray(split)
    w = split.var(axis=1, ddof=1).mean()
    if w == 0:
        raise ValueError("zero within-chain variance")
    b = half * split.mean(axis=1).var(ddof=1)
    var_hat = (half - 1) / half * w + b / half
    return float(np.sqrt(var_hat / w))


def _central_band(values: np.ndarray, level: float = 0.95):
    lo = np.quantile(values, (1 - level) / 2)
    hi = np.quantile(values, 1 - (1 - level) / 2)
    return lo, hi


def posterior_predictive(
    chain: ChainOutput,
    data: Optional[NetworkData],
    items: Optional[ItemResponses] = None,
    n_replicates: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> PPCResult:
    """Compare observed statistics with their replicated-data distributions.

    Requires a chain run with replicate generation enabled.  Replicates are
    subsampled (without replacement, uniformly) down to ``n_replicates`` when
    that is fewer than the stored draws.
    """
    reps = chain.replicate_stats
    if not reps:
        raise ValueError("chain was run without replicate generation")
    if n_replicates is not None and n_replicates < len(reps):
        rng = rng or np.random.default_rng(0)
        idx = np.sort(rng.choice(len(reps), size=n_replicates, replace=False))
        reps = [reps[i] for i in idx]

    observed: dict = {}
    replicated: dict = {}
    if data is not None and data.kind == "binary" and "network" in reps[0]:
        obs_stats = network_stats(data).scalar_dict()
        for key, val in obs_stats.items():
            observed[key] = val
            replicated[key] = np.array([r["network"].scalar_dict()[key] for r in reps])
        observed["mean_sender_degree"] = float(network_stats(data).sender_degrees.mean())
        replicated["mean_sender_degree"] = np.array(
            [r["network"].sender_degrees.mean() for r in reps]
        )
    if items is not None and "item_means" in reps[0]:
        obs_means = np.array(
            [
                items.values[items.mask[:, i], i].mean() if items.mask[:, i].any() else 0.0
                for i in range(items.n_items)
            ]
        )
        rep_means = np.stack([r["item_means"] for r in reps])
        for i in range(items.n_items):
            observed[f"item_mean_{i}"] = float(obs_means[i])
            replicated[f"item_mean_{i}"] = rep_means[:, i]

    coverage = {}
    for key, rep_vals in replicated.items():
        lo, hi = _central_band(rep_vals)
        coverage[key] = bool(lo <= observed[key] <= hi)
    return PPCResult(
        observed=observed,
        replicated=replicated,
        coverage_flags=coverage,
        n_replicates=len(reps),
    )


def item_ppc_stats(items: ItemResponses, replicate_stats: Sequence[dict]) -> dict:
    """Item-level predictive summaries and covariance recovery.

    Returns per-item observed and replicated means, per-category frequencies
    (replicated continuous values are binned to the nearest observed
    category), and the Pearson correlation between the off-diagonal entries
    of the observed and replicate-mean item covariance matrices.
    """
    if items.n_items < 2:
        raise ValueError("item covariance needs at least two items")
    reps = [r for r in replicate_stats if "item_cov" in r]
    if not reps:
        raise ValueError("no item replicates stored")
    obs_vals = np.where(items.mask, items.values, np.nan)
    obs_means = np.nanmean(obs_vals, axis=0)
    obs_cov = np.ma.cov(np.ma.masked_invalid(obs_vals), rowvar=False, ddof=1).filled(np.nan)
    mean_rep_cov = np.mean([r["item_cov"] for r in reps], axis=0)
    off = ~np.eye(items.n_items, dtype=bool)
    valid = off & ~np.isnan(obs_cov)
    recovery = float(np.corrcoef(obs_cov[valid], mean_rep_cov[valid])[0, 1])

    categories = np.unique(items.values[items.mask])
    cat_freq = None
    rep_cat_freq = None
    if categories.size <= 12:
        cat_freq = np.zeros((items.n_items, categories.size))
        for i in range(items.n_items):
            col = items.values[items.mask[:, i], i]
            for c, cat in enumerate(categories):
                cat_freq[i, c] = float((col == cat).mean()) if col.size else 0.0
        rep_counts = np.zeros_like(cat_freq)
        n_with_values = 0
        for r in reps:
            if "item_values" not in r:
                continue
            n_with_values += 1
            binned = categories[
                np.argmin(np.abs(r["item_values"][:, :, None] - categories[None, None, :]), axis=2)
            ]
            for c, cat in enumerate(categories):
                rep_counts[:, c] += (binned == cat).mean(axis=0)
        rep_cat_freq = rep_counts / n_with_values if n_with_values else None

    rep_means = np.stack([r["item_means"] for r in reps])
    return {
        "observed_means": obs_means,
        "replicated_means": rep_means,
        "observed_category_freq": cat_freq,
        "replicated_category_freq": rep_cat_freq,
        "categories": categories if categories.size <= 12 else None,
        "covariance_recovery_correlation": recovery,
        "observed_cov": obs_cov,
        "replicated_mean_cov": mean_rep_cov,
    }


def _holdout_config(config: ModelConfig, scale: int = 5) -> ModelConfig:
    iters = max(200, config.iterations // scale)
    burn = min(max(50, config.burn_in // scale), iters - 50)
    thin = min(config.thin, max(1, (iters - burn) // 50))
    return dc_replace(
        config, iterations=iters, burn_in=burn, thin=thin, replicate_stride=0
    )


def _holdout_row_task(args):
    from .sampler import run_chain

    data, items, short, row, seed, metric = args
    mask = data.mask.copy()
    mask[row, :] = False
    held = NetworkData(data.edges, kind=data.kind, mask=mask)
    out = run_chain(held, items, short, rng_seed=seed)
    mean_delta = out.trace_mean("delta")
    cells = data.mask[row]
    predictor = mean_delta + out.mean_UVt[row][cells]
    truth = data.edges[row][cells]
    if metric == "auc":
        return auc(ndtr(predictor), truth)
    return float(np.sqrt(np.mean((predictor - truth) ** 2)))


def row_holdout_cv(
    data: NetworkData,
    items: Optional[ItemResponses],
    config: ModelConfig,
    rng_seed: Optional[int] = None,
    rows: Optional[Sequence[int]] = None,
    refit_config: Optional[ModelConfig] = None,
    n_jobs: int = 1,
    metric: Optional[str] = None,
) -> dict:
    """Out-of-sample prediction quality per held-out network row.

    Each node's outgoing row is masked in turn and the model refitted with a
    shortened chain (iterations/5 by default); the held-out cells are scored
    by the posterior-mean edge value built from the node's receiving column
    and its item responses, which stay observed.  Binary networks report AUC
    and skip (with a flag) rows whose held-out cells are all one class;
    continuous networks fall back to the root-mean-square prediction error.
    """
    if metric is None:
        metric = "auc" if data.kind == "binary" else "rmse"
    if metric == "auc" and data.kind != "binary":
        raise ValueError("row holdout AUC is defined for binary networks")
    n = data.n_nodes
    if n < 3:
        raise ValueError("network too small to hold out a row")
    seed_root = config.seed if rng_seed is None else rng_seed
    seeds = np.random.SeedSequence(seed_root).spawn(n)
    short = refit_config or _holdout_config(config)
    node_score = np.full(n, np.nan)
    skipped = []
    tasks = []
    task_rows = []
    row_list = range(n) if rows is None else rows
    for a in row_list:
        labels = data.edges[a][data.mask[a]]
        if labels.size == 0 or (metric == "auc" and labels.min() == labels.max()):
            skipped.append(a)
            continue
        tasks.append((data, items, short, a, int(seeds[a].generate_state(1)[0]), metric))
        task_rows.append(a)
    from ._parallel import parallel_map

    for a, score in zip(task_rows, parallel_map(_holdout_row_task, tasks, n_jobs)):
        node_score[a] = score
    finite = np.isfinite(node_score)
    return {
        "metric": metric,
        "auc": node_score if metric == "auc" else None,
        "scores": node_score,
        "skipped_rows": skipped,
        "median_auc": float(np.nanmedian(node_score)) if metric == "auc" and finite.any() else np.nan,
        "median_score": float(np.nanmedian(node_score)) if finite.any() else np.nan,
        "refit_iterations": short.iterations,
    }


def compare_joint_separate(
    data: NetworkData,
    items: ItemResponses,
    config: ModelConfig,
    rng_seed: Optional[int] = None,
    holdout_rows: Optional[Sequence[int]] = None,
    n_jobs: int = 1,
) -> dict:
    """Joint fit against separate network-only / item-only fits on one dataset.

    Reports the median row-holdout AUC under the joint and network-only
    models, and the item-covariance recovery correlation under the joint and
    item-only models.
    """
    from dataclasses import replace

    seed = config.seed if rng_seed is None else rng_seed
    joint_cfg = replace(config, mode="joint")
    net_cfg = replace(config, mode="network_only")
    item_cfg = replace(config, mode="item_only")

    cv_joint = row_holdout_cv(data, items, joint_cfg, rng_seed=seed, rows=holdout_rows, n_jobs=n_jobs)
    cv_net = row_holdout_cv(data, None, net_cfg, rng_seed=seed, rows=holdout_rows, n_jobs=n_jobs)

    from .sampler import run_chain

    stride_cfg = replace(joint_cfg, replicate_stride=max(1, joint_cfg.replicate_stride or 1))
    out_joint = run_chain(data, items, stride_cfg, rng_seed=seed + 1)
    stride_item = replace(item_cfg, replicate_stride=max(1, item_cfg.replicate_stride or 1))
    out_item = run_chain(None, items, stride_item, rng_seed=seed + 1)
    cov_joint = item_ppc_stats(items, out_joint.replicate_stats)["covariance_recovery_correlation"]
    cov_item = item_ppc_stats(items, out_item.replicate_stats)["covariance_recovery_correlation"]
    return {
        "auc_joint": cv_joint["median_auc"],
        "auc_network_only": cv_net["median_auc"],
        "auc_per_row_joint": cv_joint["auc"],
        "auc_per_row_network_only": cv_net["auc"],
        "cov_recovery_joint": cov_joint,
        "cov_recovery_item_only": cov_item,
    }
