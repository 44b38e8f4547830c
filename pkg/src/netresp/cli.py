"""Command-line interface tying the library into reproducible runs.

Subcommands: fit, test, cca, select-dim, simulate, ppc,
study {recovery|density-table|sparsity-bias}, compare.  Every command writes
a ``run_manifest.json`` recording the resolved configuration, input digests,
seed, software version and timings; given the same seed, inputs and
configuration, all numeric outputs are byte-identical across runs.

Options may come from a key=value config file (``--config``); explicit flags
override the file, which overrides defaults.  Exit codes: 0 success, 1 usage
error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import secrets
import sys
import time
from dataclasses import replace as dc_replace
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, identify, inference, simulate
from ._numeric import NumericalError
from ._parallel import available_parallelism
from .io import (
    DataError,
    read_items_csv,
    read_matrix_csv,
    read_network_csv,
    write_json,
    write_matrix_csv,
)
from .model import ModelConfig
from .sampler import run_chain


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Reproducibility record written next to every command's outputs."""

    def __init__(self, command: str, options: dict):
        self.command = command
        self.options = {k: v for k, v in options.items() if k not in ("func",)}
        self.inputs = {}
        self.timings = {}
        self._start = time.perf_counter()
        self._stage_start = self._start

    def add_input(self, name, path):
        if path is not None:
            self.inputs[name] = {"path": str(path), "sha256": _sha256(path)}

    def stage(self, name):
        now = time.perf_counter()
        self.timings[name] = round(now - self._stage_start, 6)
        self._stage_start = now

    def write(self, out_dir):
        payload = {
            "command": self.command,
            "options": {k: _plain(v) for k, v in sorted(self.options.items())},
            "inputs": self.inputs,
            "seed": self.options.get("seed"),
            "version": __version__,
            "wall_clock_s": round(time.perf_counter() - self._start, 6),
            "stage_timings_s": self.timings,
        }
        write_json(Path(out_dir) / "run_manifest.json", payload)


def _plain(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _load_config_file(path) -> dict:
    """key=value lines; '#' starts a comment; keys use the option names."""
    values = {}
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _resolve_options(args, parser_defaults: dict) -> dict:
    """Merge defaults, config file and explicit flags (flags win)."""
    merged = dict(parser_defaults)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        file_vals = _load_config_file(cfg_path)
        for key, val in file_vals.items():
            if key not in merged:
                raise UsageError(f"unknown config key {key!r}")
            merged[key] = _coerce(val, merged[key]) if merged[key] is not None else val
    for key, val in vars(args).items():
        if key in ("func", "config"):
            continue
        if val is not None:
            merged[key] = val
    if merged.get("seed") is None:
        merged["seed"] = secrets.randbits(31)
        merged["seed_generated"] = True
    return merged


def _out_dir(opts) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_config(opts, mode=None) -> ModelConfig:
    return ModelConfig(
        k=int(opts["k"]),
        d=int(opts["d"]),
        mode=(mode or opts.get("mode", "joint")).replace("-", "_"),
        iterations=int(opts["iters"]),
        burn_in=int(opts["burn"]),
        thin=int(opts["thin"]),
        seed=int(opts["seed"]),
        rho_proposal_sd=float(opts.get("rho_proposal_sd") or 0.05),
        prior_delta_precision=float(opts.get("delta_prior_precision") or 0.01),
        replicate_stride=int(opts.get("replicate_stride") or 0),
    )


def _dim_headers(prefix, count):
    return [f"{prefix}{i + 1}" for i in range(count)]


def _subscale_labels(spec_str: str) -> np.ndarray:
    counts = [int(tok) for tok in spec_str.split(",") if tok.strip()]
    return np.repeat(np.arange(len(counts)), counts)


def _save_replicates(out, replicate_stats):
    arrays = {}
    first = replicate_stats[0]
    if "network" in first:
        for key in ("density", "dyadic_dependence", "transitivity", "balance"):
            arrays[f"net_{key}"] = np.array(
                [r["network"].scalar_dict()[key] for r in replicate_stats]
            )
        arrays["net_sender_degrees"] = np.stack(
            [r["network"].sender_degrees for r in replicate_stats]
        )
        arrays["net_receiver_degrees"] = np.stack(
            [r["network"].receiver_degrees for r in replicate_stats]
        )
    if "item_means" in first:
        arrays["item_means"] = np.stack([r["item_means"] for r in replicate_stats])
        arrays["item_cov"] = np.stack([r["item_cov"] for r in replicate_stats])
    np.savez(out / "replicates.npz", **arrays)


# -- subcommands -------------------------------------------------------------


def cmd_fit(opts) -> int:
    out = _out_dir(opts)
    manifest = Manifest("fit", opts)
    mode = (opts.get("mode") or "joint").replace("-", "_")
    net = items = None
    if mode != "item_only":
        if not opts.get("network"):
            raise UsageError("fit needs --network unless --mode item-only")
        net = read_network_csv(opts["network"], kind=opts.get("network_kind"))
        manifest.add_input("network", opts["network"])
    if mode != "network_only":
        if not opts.get("items"):
            raise UsageError("fit needs --items unless --mode network-only")
        items = read_items_csv(
            opts["items"], kind="binary" if opts.get("binary_items") else "continuous"
        )
        manifest.add_input("items", opts["items"])
    if net is not None and items is not None and net.n_nodes != items.n_persons:
        raise DataError(
            f"network has {net.n_nodes} nodes but items have {items.n_persons} rows"
        )
    manifest.stage("load")

    config = _model_config(opts, mode)
    if opts.get("replicate_stride") is None:
        config = dc_replace(config, replicate_stride=1)
    chain = run_chain(net, items, config, rng_seed=config.seed)
    manifest.stage("sample")

    summary = {
        "mode": mode,
        "n_kept": chain.n_kept,
        "accept_rate_rho": chain.accept_rate_rho,
        "posterior_means": {},
    }
    trace_cols = []
    trace_data = []
    for name in ("delta", "rho", "sigma2_e", "sigma2_eps"):
        if name in chain.scalar_traces:
            trace_cols.append(name)
            trace_data.append(chain.scalar_traces[name])
            summary["posterior_means"][name] = float(np.mean(chain.scalar_traces[name]))
    if "beta" in chain.scalar_traces:
        beta = chain.scalar_traces["beta"]
        for i in range(beta.shape[1]):
            trace_cols.append(f"beta_{i + 1}")
            trace_data.append(beta[:, i])
        summary["posterior_means"]["beta"] = beta.mean(axis=0).tolist()
    write_matrix_csv(out / "traces.csv", np.column_stack(trace_data), header=trace_cols)

    if chain.mean_UVt is not None:
        write_matrix_csv(
            out / "mean_UVt.csv", chain.mean_UVt, header=_dim_headers("node_", chain.mean_UVt.shape[1])
        )
        k = config.k
        est = identify.svd_identify(chain.mean_UVt, k)
        write_matrix_csv(out / "U_hat.csv", est.left, header=_dim_headers("u", k))
        write_matrix_csv(out / "V_hat.csv", est.right, header=_dim_headers("v", k))
        write_matrix_csv(
            out / "network_singular_values.csv", est.singular_values[None, :],
            header=_dim_headers("sv", k),
        )
        scree = identify.variance_explained(chain.mean_UVt, min(chain.mean_UVt.shape))
        write_matrix_csv(out / "scree.csv", scree[:, None], header=["proportion"])
    if chain.mean_ThetaAt is not None:
        write_matrix_csv(
            out / "mean_ThetaAt.csv",
            chain.mean_ThetaAt,
            header=_dim_headers("item_", chain.mean_ThetaAt.shape[1]),
        )
        d = config.d
        est_i = identify.svd_identify(chain.mean_ThetaAt, d)
        write_matrix_csv(out / "Theta_hat.csv", est_i.left, header=_dim_headers("theta", d))
        write_matrix_csv(out / "A_hat.csv", est_i.right, header=_dim_headers("a", d))
        target = None
        if opts.get("target"):
            target_mat, _ = read_matrix_csv(opts["target"])
            manifest.add_input("target", opts["target"])
            target = np.asarray(target_mat)
        elif opts.get("subscales"):
            labels = _subscale_labels(opts["subscales"])
            if labels.shape[0] != est_i.right.shape[0]:
                raise DataError("subscale counts do not sum to the number of items")
            target = identify.subscale_target(labels, n_factors=d)
        if target is not None:
            rot = identify.target_rotate(est_i.right, target)
            write_matrix_csv(
                out / "rotated_loadings.csv", rot.rotated_loadings, header=_dim_headers("f", d)
            )
            cong = identify.congruence(rot.rotated_loadings, target)
            write_matrix_csv(out / "congruence.csv", cong, header=_dim_headers("target", d))
    if chain.replicate_stats:
        _save_replicates(out, chain.replicate_stats)
    manifest.stage("outputs")
    write_json(out / "summary.json", summary)
    manifest.write(out)
    return 0


def _load_factors(run_dir):
    run_dir = Path(run_dir)
    needed = ["U_hat.csv", "V_hat.csv", "Theta_hat.csv"]
    for name in needed:
        if not (run_dir / name).exists():
            raise DataError(f"{run_dir} lacks {name}; run a joint fit first")
    u, _ = read_matrix_csv(run_dir / "U_hat.csv", has_header=True)
    v, _ = read_matrix_csv(run_dir / "V_hat.csv", has_header=True)
    theta, _ = read_matrix_csv(run_dir / "Theta_hat.csv", has_header=True)
    if u.shape[0] != theta.shape[0]:
        raise DataError("factor files have mismatched row counts")
    return np.hstack([u, v]), theta


def _dependence_report(opts):
    uv, theta = _load_factors(opts["run"])
    return inference.cca(uv, theta), uv.shape[1], theta.shape[1]


def cmd_test(opts) -> int:
    out = _out_dir(opts)
    manifest = Manifest("test", opts)
    report, p, q = _dependence_report(opts)
    manifest.stage("test")
    write_json(out / "dependence_report.json", report.to_dict())
    _write_coefficient_tables(out, report, p, q)
    manifest.write(out)
    return 0


def cmd_cca(opts) -> int:
    out = _out_dir(opts)
    manifest = Manifest("cca", opts)
    report, p, q = _dependence_report(opts)
    manifest.stage("cca")
    _write_coefficient_tables(out, report, p, q)
    write_matrix_csv(
        out / "canonical_correlations.csv",
        report.canonical_correlations[None, :],
        header=[f"R{i + 1}" for i in range(report.canonical_correlations.shape[0])],
    )
    manifest.write(out)
    return 0


def _write_coefficient_tables(out, report, p, q):
    k = p // 2
    names = [f"sender_{i + 1}" for i in range(k)] + [f"receiver_{i + 1}" for i in range(k)]
    names += [f"item_dim_{j + 1}" for j in range(q)]
    coef = np.vstack([report.std_coefficients_network, report.std_coefficients_items])
    n_fun = coef.shape[1]
    with open(out / "standardized_coefficients.csv", "w") as fh:
        fh.write("latent_variable," + ",".join(f"function_{i + 1}" for i in range(n_fun)) + "\n")
        for name, row in zip(names, coef):
            fh.write(name + "," + ",".join(repr(float(v)) for v in row) + "\n")


def cmd_select_dim(opts) -> int:
    out = _out_dir(opts)
    manifest = Manifest("select-dim", opts)
    net = read_network_csv(opts["network"], kind=opts.get("network_kind"))
    manifest.add_input("network", opts["network"])
    items = None
    if opts.get("items"):
        items = read_items_csv(opts["items"])
        manifest.add_input("items", opts["items"])
    k_min, k_max = int(opts["k_min"]), int(opts["k_max"])
    if not 1 <= k_min <= k_max:
        raise UsageError("need 1 <= k-min <= k-max")
    if k_max >= net.n_nodes:
        raise DataError("k-max must be below the node count")
    manifest.stage("load")

    mode = "joint" if items is not None else "network_only"
    rows = []
    for k in range(k_min, k_max + 1):
        cfg = dc_replace(_model_config({**opts, "k": k}, mode), seed=int(opts["seed"]) + k)
        cv = diagnostics.row_holdout_cv(net, items, cfg, rng_seed=cfg.seed,
                                        n_jobs=int(opts["threads"]))
        rows.append((k, cv["median_score"]))
    manifest.stage("holdout")

    cfg_full = _model_config({**opts, "k": k_max}, mode)
    chain = run_chain(net, items, cfg_full, rng_seed=cfg_full.seed)
    scree = identify.variance_explained(chain.mean_UVt, k_max)
    manifest.stage("scree")

    metric = "median_auc" if net.kind == "binary" else "median_rmse"
    with open(out / "holdout_by_rank.csv", "w") as fh:
        fh.write(f"k,{metric}\n")
        for k, score in rows:
            fh.write(f"{k},{repr(float(score))}\n")
    write_matrix_csv(out / "scree.csv", scree[:, None], header=["proportion"])
    manifest.write(out)
    return 0


def cmd_simulate(opts) -> int:
    out = _out_dir(opts)
    manifest = Manifest("simulate", opts)
    preset = opts.get("params") or "recovery"
    n = int(opts["n"])
    if preset == "recovery":
        params = simulate.recovery_reference_params(n)
    elif preset == "comparison":
        params = simulate.comparison_reference_params(n)
    else:
        raise UsageError("params preset must be 'recovery' or 'comparison'")
    rng = np.random.default_rng(np.random.SeedSequence(int(opts["seed"])))
    net, items, truth = simulate.simulate_joint(params, rng)
    node_hdr = _dim_headers("node_", params.n)
    write_matrix_csv(out / "network.csv", net.edges, header=node_hdr)
    if items is not None:
        item_hdr = _dim_headers("item_", items.n_items)
        write_matrix_csv(out / "items.csv", items.values, header=item_hdr)
        write_matrix_csv(out / "expected_items.csv", truth["expected_items"], header=item_hdr)
    write_matrix_csv(out / "expected_network.csv", truth["expected_network"], header=node_hdr)
    manifest.stage("simulate")
    manifest.write(out)
    return 0


def cmd_ppc(opts) -> int:
    out = _out_dir(opts)
    manifest = Manifest("ppc", opts)
    run_dir = Path(opts["run"])
    rep_path = run_dir / "replicates.npz"
    if not rep_path.exists():
        raise DataError(f"{run_dir} has no replicates.npz (fit with a replicate stride)")
    reps = np.load(rep_path)
    observed = {}
    replicated = {}
    if opts.get("network"):
        net = read_network_csv(opts["network"], kind=opts.get("network_kind"))
        manifest.add_input("network", opts["network"])
        obs_stats = diagnostics.network_stats(net).scalar_dict()
        for key, val in obs_stats.items():
            arr_key = f"net_{key}"
            if arr_key in reps:
                observed[key] = val
                replicated[key] = reps[arr_key]
    if opts.get("items"):
        items = read_items_csv(opts["items"])
        manifest.add_input("items", opts["items"])
        if "item_means" in reps:
            obs_means = np.array(
                [
                    items.values[items.mask[:, i], i].mean() if items.mask[:, i].any() else 0.0
                    for i in range(items.n_items)
                ]
            )
            for i in range(items.n_items):
                observed[f"item_mean_{i + 1}"] = float(obs_means[i])
                replicated[f"item_mean_{i + 1}"] = reps["item_means"][:, i]
    if not observed:
        raise UsageError("ppc needs --network and/or --items matching the fitted run")
    n_rep = int(opts.get("replicates") or 0)
    coverage = {}
    bands = {}
    for key, vals in replicated.items():
        if n_rep and n_rep < vals.shape[0]:
            vals = vals[np.linspace(0, vals.shape[0] - 1, n_rep).astype(int)]
        lo, hi = np.quantile(vals, 0.025), np.quantile(vals, 0.975)
        coverage[key] = bool(lo <= observed[key] <= hi)
        bands[key] = [float(lo), float(hi)]
    manifest.stage("ppc")
    write_json(
        out / "ppc_report.json",
        {
            "observed": observed,
            "bands_95": bands,
            "coverage": coverage,
            "n_replicates_stored": int(next(iter(replicated.values())).shape[0]),
        },
    )
    keys = sorted(replicated)
    write_matrix_csv(
        out / "ppc_replicates.csv", np.column_stack([replicated[k] for k in keys]), header=keys
    )
    manifest.write(out)
    return 0


def cmd_study(opts) -> int:
    out = _out_dir(opts)
    which = opts["study"]
    manifest = Manifest(f"study {which}", opts)
    seed = int(opts["seed"])
    threads = int(opts["threads"])
    if which == "density-table":
        intercepts = [float(t) for t in str(opts["intercepts"]).split(",")]
        variances = [float(t) for t in str(opts["variances"]).split(",")]
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        table = simulate.density_table(intercepts, variances, N=int(opts["n"]), rng=rng)
        with open(out / "density_table.csv", "w") as fh:
            fh.write("intercept," + ",".join(f"variance_{v}" for v in variances) + "\n")
            for inter, row in zip(intercepts, table):
                fh.write(repr(float(inter)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
        manifest.stage("table")
    elif which == "recovery":
        params = simulate.recovery_reference_params(int(opts["n"]))
        cfg = _model_config({**opts, "k": params.k, "d": params.d}, "joint")
        report = simulate.recovery_study(params, int(opts["reps"]), cfg, rng_seed=seed,
                                         n_jobs=threads)
        with open(out / "recovery.csv", "w") as fh:
            fh.write("parameter,true_value,bias,variance,mse\n")
            for name, tv, b, v, m in report.as_rows():
                fh.write(f"{name},{tv!r},{b!r},{v!r},{m!r}\n")
        write_json(
            out / "recovery_summary.json",
            {
                "n_replications": report.n_replications,
                "n_failures": report.n_failures,
                "network_cell_rmse": float(np.sqrt(np.mean(report.network_cell_errors**2))),
                "item_cell_rmse": float(np.sqrt(np.mean(report.item_cell_errors**2))),
            },
        )
        manifest.stage("study")
    elif which == "sparsity-bias":
        intercepts = [float(t) for t in str(opts["intercepts"]).split(",")]
        n_values = [int(t) for t in str(opts["n_values"]).split(",")]
        cfg = _model_config(opts, "network_only")
        rows = simulate.sparsity_bias_study(
            intercepts, n_values, cfg, rng_seed=seed, n_replications=int(opts["reps"]),
            n_jobs=threads,
        )
        k = int(opts["k"])
        with open(out / "sparsity_bias.csv", "w") as fh:
            header = ["N", "intercept", "bias_intercept"]
            header += [f"bias_var_u_d{j + 1}" for j in range(k)]
            header += [f"bias_var_v_d{j + 1}" for j in range(k)]
            header += [f"kurtosis_u_d{j + 1}" for j in range(k)]
            header += [f"kurtosis_v_d{j + 1}" for j in range(k)]
            fh.write(",".join(header) + "\n")
            for row in rows:
                cells = [str(row["N"]), repr(row["intercept"]), repr(row["bias_delta"])]
                cells += [repr(float(v)) for v in row["bias_var_u"]]
                cells += [repr(float(v)) for v in row["bias_var_v"]]
                cells += [repr(float(v)) for v in row["kurtosis_u"]]
                cells += [repr(float(v)) for v in row["kurtosis_v"]]
                fh.write(",".join(cells) + "\n")
        manifest.stage("study")
    else:
        raise UsageError(f"unknown study {which!r}")
    manifest.write(out)
    return 0


def cmd_compare(opts) -> int:
    out = _out_dir(opts)
    manifest = Manifest("compare", opts)
    net = read_network_csv(opts["network"], kind=opts.get("network_kind"))
    items = read_items_csv(opts["items"])
    manifest.add_input("network", opts["network"])
    manifest.add_input("items", opts["items"])
    if net.n_nodes != items.n_persons:
        raise DataError("network and items disagree on the number of persons")
    cfg = _model_config(opts, "joint")
    result = diagnostics.compare_joint_separate(
        net, items, cfg, rng_seed=cfg.seed, n_jobs=int(opts["threads"])
    )
    manifest.stage("compare")
    write_json(
        out / "comparison.json",
        {
            "median_holdout_auc_joint": result["auc_joint"],
            "median_holdout_auc_network_only": result["auc_network_only"],
            "item_cov_recovery_joint": result["cov_recovery_joint"],
            "item_cov_recovery_item_only": result["cov_recovery_item_only"],
            "per_row_auc_joint": result["auc_per_row_joint"],
            "per_row_auc_network_only": result["auc_per_row_network_only"],
        },
    )
    write_matrix_csv(
        out / "holdout_auc.csv",
        np.column_stack([result["auc_per_row_joint"], result["auc_per_row_network_only"]]),
        header=["auc_joint", "auc_network_only"],
    )
    manifest.write(out)
    return 0


# -- argument plumbing --------------------------------------------------------


def _add_common(sp, chain=True):
    sp.add_argument("--config", help="key=value config file; flags override it")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--threads", type=int, help="worker processes for studies/CV")
    if chain:
        sp.add_argument("--k", type=int)
        sp.add_argument("--d", type=int)
        sp.add_argument("--iters", type=int)
        sp.add_argument("--burn", type=int)
        sp.add_argument("--thin", type=int)
        sp.add_argument("--rho-proposal-sd", dest="rho_proposal_sd", type=float)
        sp.add_argument("--delta-prior-precision", dest="delta_prior_precision", type=float)


_CHAIN_DEFAULTS = {
    "k": 2,
    "d": 3,
    "iters": 5000,
    "burn": 500,
    "thin": 10,
    "seed": None,
    "threads": None,
    "rho_proposal_sd": 0.05,
    "delta_prior_precision": 0.01,
    "out": None,
    "config": None,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="netresp", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("fit", help="run the sampler and write identified factors")
    _add_common(p)
    p.add_argument("--network")
    p.add_argument("--items")
    p.add_argument("--mode", choices=["joint", "network-only", "item-only"])
    p.add_argument("--network-kind", dest="network_kind", choices=["binary", "continuous"])
    p.add_argument("--binary-items", dest="binary_items", action="store_const", const=True)
    p.add_argument("--subscales", help="comma counts of items per subscale, e.g. 5,7,4")
    p.add_argument("--target", help="CSV target matrix for loading rotation")
    p.add_argument("--replicate-stride", dest="replicate_stride", type=int)
    p.set_defaults(func=cmd_fit, defaults={**_CHAIN_DEFAULTS, "network": None, "items": None,
                                           "mode": "joint", "network_kind": None,
                                           "binary_items": False, "subscales": None,
                                           "target": None, "replicate_stride": None})

    for name, fn in (("test", cmd_test), ("cca", cmd_cca)):
        p = sub.add_parser(name, help=f"{name} on factors from a fit directory")
        _add_common(p, chain=False)
        p.add_argument("--run", required=True, help="fit output directory")
        p.set_defaults(func=fn, defaults={"seed": None, "threads": None, "out": None,
                                          "config": None, "run": None})

    p = sub.add_parser("select-dim", help="scree and holdout AUC across network ranks")
    _add_common(p)
    p.add_argument("--network", required=True)
    p.add_argument("--items")
    p.add_argument("--network-kind", dest="network_kind", choices=["binary", "continuous"])
    p.add_argument("--k-min", dest="k_min", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.set_defaults(func=cmd_select_dim, defaults={**_CHAIN_DEFAULTS, "network": None,
                                                  "items": None, "network_kind": None,
                                                  "k_min": 1, "k_max": 4})

    p = sub.add_parser("simulate", help="generate a dataset from a reference parameter set")
    _add_common(p, chain=False)
    p.add_argument("--params", choices=["recovery", "comparison"])
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_simulate, defaults={"seed": None, "threads": None, "out": None,
                                                "config": None, "params": "recovery", "n": 100})

    p = sub.add_parser("ppc", help="posterior predictive coverage from stored replicates")
    _add_common(p, chain=False)
    p.add_argument("--run", required=True)
    p.add_argument("--network")
    p.add_argument("--items")
    p.add_argument("--network-kind", dest="network_kind", choices=["binary", "continuous"])
    p.add_argument("--replicates", type=int)
    p.set_defaults(func=cmd_ppc, defaults={"seed": None, "threads": None, "out": None,
                                           "config": None, "run": None, "network": None,
                                           "items": None, "network_kind": None,
                                           "replicates": None})

    p = sub.add_parser("study", help="replication studies with table outputs")
    p.add_argument("study", choices=["recovery", "density-table", "sparsity-bias"])
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--intercepts")
    p.add_argument("--variances")
    p.add_argument("--n-values", dest="n_values")
    p.set_defaults(func=cmd_study, defaults={**_CHAIN_DEFAULTS, "n": 1000, "reps": 1,
                                             "intercepts": "0,-1,-2,-3,-4",
                                             "variances": "0.2,1",
                                             "n_values": "100", "study": None})

    p = sub.add_parser("compare", help="joint versus separate fits on the same data")
    _add_common(p)
    p.add_argument("--network", required=True)
    p.add_argument("--items", required=True)
    p.add_argument("--network-kind", dest="network_kind", choices=["binary", "continuous"])
    p.set_defaults(func=cmd_compare, defaults={**_CHAIN_DEFAULTS, "network": None,
                                               "items": None, "network_kind": None})
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = _resolve_options(args, dict(args.defaults))
        if opts.get("threads") is None:
            opts["threads"] = available_parallelism()
        if "study" in vars(args):
            opts["study"] = args.study
        code = args.func(opts)
        return code
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
