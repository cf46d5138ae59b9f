"""Command-line interface: generate, estimate, weights, simulate.

Exit codes: 0 success; 1 configuration or input error; 2 file I/O error;
3 degenerate numerics (no usable spectral gap, or the weighted subspaces
left no margin).
"""

import argparse
import glob as globmod
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .config import ConfigError, cell_seed, config_hash, load_config
from .estimators import equal_weights, heterojive, stack_svd
from .exceptions import DegenerateAggregation, InvalidInput, JiveError
from .harness import run_simulation, write_results_csv, write_summary_csv
from .metrics import subspace_error
from .model import MultiViewData, RankSpec, build_ground_truth, realized_theta, synthesize_views
from .validation import check_views, check_weights
from .weighting import data_driven_weights, theta_of_w


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems as config errors."""

    def error(self, message):
        raise ConfigError(message)


def _natural_key(path):
    """Sort key that orders embedded integers numerically (view_10 after view_9)."""
    tokens = re.split(r"(\d+)", os.path.basename(path))
    return tuple(
        (0, int(tok)) if tok.isdigit() else (1, tok) for tok in tokens if tok
    ) + ((1, path),)


def _save_matrix(path, arr):
    np.savetxt(path, np.asarray(arr, dtype=float), delimiter=",", fmt="%.17g")


def _load_matrix(path):
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"could not parse matrix file {path}: {exc}") from exc


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_seed(cfg):
    """Config seed, unless the JIVE_SEED environment variable overrides it."""
    raw = os.environ.get("JIVE_SEED")
    if raw is None:
        return cfg.seed
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"JIVE_SEED must be an integer, got {raw!r}") from exc


def _load_views(pattern):
    paths = sorted(globmod.glob(pattern), key=_natural_key)
    if not paths:
        raise ConfigError(f"no files match --views pattern {pattern!r}")
    views = [_load_matrix(p) for p in paths]
    try:
        data = MultiViewData(views=check_views(views))
    except InvalidInput as exc:
        raise ConfigError(f"loaded views are inconsistent: {exc}") from exc
    return data, paths


def _parse_ranks(text, n_views):
    """Parse --ranks: either 'r' (individual ranks default to r) or 'r,r1,..,rK'."""
    try:
        parts = [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--ranks must be comma-separated integers, got {text!r}") from exc
    if len(parts) == 1:
        return RankSpec.homogeneous(parts[0], parts[0], n_views)
    if len(parts) != n_views + 1:
        raise ConfigError(
            f"--ranks needs 1 or {n_views + 1} integers for {n_views} views, "
            f"got {len(parts)}"
        )
    return RankSpec(parts[0], tuple(parts[1:]))


def _parse_weight_list(text, n_views):
    try:
        values = np.array([float(tok) for tok in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"--weights must be comma-separated numbers, got {text!r}") from exc
    try:
        return check_weights(values, k=n_views)
    except InvalidInput as exc:
        raise ConfigError(f"--weights: {exc}") from exc


def _diagnostics_payload(fit, weights):
    """JSON-ready diagnostics for a two-stage fit."""
    payload = {
        "spectral_gap": float(fit.spectral_gap),
        "aggregation_values": [float(x) for x in fit.aggregation_values],
        "theta_at_weights": float(
            theta_of_w([b for b in fit.u_k_hat], weights)
        ),
    }
    diag = fit.diagnostics
    if diag is None:
        payload["noise"] = None
    else:
        payload["noise"] = {
            "sigma_hat": [float(x) for x in diag.sigma_hat],
            "lambda_min_hat": [float(x) for x in diag.lambda_min_hat],
            "snr_hat": [float(x) for x in diag.snr_hat],
            "eps_hat": [float(x) for x in diag.eps_hat],
            "kappa_hat": [float(x) for x in diag.kappa_hat],
        }
    return payload


def cmd_generate(args):
    """Synthesize one dataset to disk: views, ground truth, manifest."""
    cfg = load_config(args.config)
    n_views = cfg.single_k
    seed = _resolve_seed(cfg)
    rng = np.random.default_rng(seed)
    r_k = cfg.r_k if isinstance(cfg.r_k, tuple) else tuple([cfg.r_k] * n_views)
    if len(r_k) != n_views:
        raise ConfigError(f"r_k has {len(r_k)} entries but K = {n_views}")
    ranks = RankSpec(cfg.r, r_k)
    if cfg.sigma_lo is not None:
        sigma = rng.uniform(cfg.sigma_lo, cfg.sigma_hi, n_views).tolist()
    else:
        sigma = cfg.sigma
    truth = build_ground_truth(
        rng, cfg.n, cfg.d, ranks, cfg.scheme,
        s=cfg.s, gamma=cfg.gamma, theta=cfg.theta, sigma=sigma,
    )
    data = synthesize_views(rng, truth)

    os.makedirs(args.out, exist_ok=True)
    truth_dir = os.path.join(args.out, "truth")
    os.makedirs(truth_dir, exist_ok=True)
    for k, view in enumerate(data.views):
        _save_matrix(os.path.join(args.out, f"view_{k + 1}.csv"), view)
    _save_matrix(os.path.join(truth_dir, "U.csv"), truth.u)
    for k in range(n_views):
        if truth.u_k[k].shape[1]:
            _save_matrix(os.path.join(truth_dir, f"U_{k + 1}.csv"), truth.u_k[k])
            _save_matrix(os.path.join(truth_dir, f"W_{k + 1}.csv"), truth.w_k[k])
        _save_matrix(os.path.join(truth_dir, f"V_{k + 1}.csv"), truth.v_k[k])
    manifest = {
        "seed": seed,
        "config_hash": config_hash(cfg),
        "config": cfg.to_canonical_dict(),
        "n": truth.n,
        "K": n_views,
        "d_k": [int(v.shape[0]) for v in truth.v_k],
        "sigma_k": [float(x) for x in truth.sigma_k],
        "theta_realized": realized_theta(truth),
    }
    _write_json(os.path.join(args.out, "manifest.json"), manifest)
    print(f"wrote {n_views} views ({truth.n} rows) and truth/ to {args.out}")
    return 0


def _estimate_heterojive(args, data, ranks):
    """Shared fitting logic for the estimate and weights commands."""
    trace = None
    if args.weights is not None:
        w = _parse_weight_list(args.weights, data.n_views)
        source = "fixed"
    else:
        w, trace = data_driven_weights(
            data, ranks, t_max=args.t_max, tol=args.tol
        )
        source = "data_driven"
    fit = heterojive(data, ranks, w)
    return fit, w, source, trace


def cmd_estimate(args):
    """Fit one method on view files and write the estimate plus reports."""
    data, paths = _load_views(args.views)
    ranks = _parse_ranks(args.ranks, data.n_views)
    os.makedirs(args.out, exist_ok=True)

    if args.method == "stacksvd":
        if args.weights is not None:
            w = _parse_weight_list(args.weights, data.n_views)
            source = "fixed"
        else:
            w = equal_weights(data.n_views)
            source = "equal"
        result = stack_svd(data, ranks.r, weights=w)
        u_hat = result.basis
        trace = None
        diagnostics = {
            "spectral_gap": float(result.gap),
            "aggregation_values": [float(x) for x in result.values],
            "degenerate": bool(result.degenerate),
        }
    else:
        if args.method == "ajive":
            if args.weights is not None:
                raise ConfigError(
                    "--weights cannot be combined with method 'ajive'; "
                    "use method 'heterojive' with explicit weights"
                )
            w = equal_weights(data.n_views)
            source = "equal"
            trace = None
            fit = heterojive(data, ranks, w)
        else:
            fit, w, source, trace = _estimate_heterojive(args, data, ranks)
        u_hat = fit.u_hat
        diagnostics = _diagnostics_payload(fit, w)

    _save_matrix(os.path.join(args.out, "U_hat.csv"), u_hat)
    _write_json(
        os.path.join(args.out, "weights.json"),
        {
            "method": args.method,
            "source": source,
            "weights": [float(x) for x in w],
            "trace": None if trace is None else trace.to_jsonable(),
        },
    )
    _write_json(os.path.join(args.out, "diagnostics.json"), diagnostics)
    print(f"views: {', '.join(os.path.basename(p) for p in paths)}")
    print(f"weights: {' '.join(format(float(x), '.6g') for x in w)}")
    if args.truth is not None:
        truth_u = _load_matrix(os.path.join(args.truth, "U.csv"))
        err = subspace_error(u_hat, truth_u)
        print(f"subspace_error: {err:.17g}")
    return 0


def cmd_weights(args):
    """Learn data-driven weights for view files and write weights.json."""
    data, paths = _load_views(args.views)
    ranks = _parse_ranks(args.ranks, data.n_views)
    os.makedirs(args.out, exist_ok=True)
    w, trace = data_driven_weights(data, ranks, t_max=args.t_max, tol=args.tol)
    _write_json(
        os.path.join(args.out, "weights.json"),
        {
            "method": "heterojive",
            "source": "data_driven",
            "weights": [float(x) for x in w],
            "trace": trace.to_jsonable(),
        },
    )
    print(f"views: {', '.join(os.path.basename(p) for p in paths)}")
    print(f"weights: {' '.join(format(float(x), '.6g') for x in w)}")
    if not trace.converged:
        detail = trace.abort_reason or f"iteration cap {args.t_max} reached"
        print(f"note: weight iteration did not converge ({detail})")
    return 0


def cmd_simulate(args):
    """Run the replicated grid of a config and write results and summary."""
    cfg = load_config(args.config)
    seed = _resolve_seed(cfg)
    if seed != cfg.seed:
        from dataclasses import replace

        cfg = replace(cfg, seed=seed)
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    rows, summary = run_simulation(cfg, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    results_path = os.path.join(args.out, "results.csv")
    summary_path = os.path.join(args.out, "summary.csv")
    write_results_csv(rows, results_path)
    write_summary_csv(summary, summary_path)
    n_failed = sum(1 for row in rows if row.reason)
    print(f"wrote {len(rows)} rows to {results_path} ({n_failed} failed)")
    print(f"wrote {len(summary)} summary cells to {summary_path}")
    for cell in summary:
        print(
            f"  {cell.method:11s} K={cell.n_views:<4d} "
            f"mean_error={cell.mean_error:.6g} (se {cell.stderr_error:.2g}, "
            f"{cell.n_replicates - cell.n_failed}/{cell.n_replicates} ok)"
        )
    return 0


def build_parser():
    parser = _Parser(
        prog="jive",
        description="Weighted two-stage joint-subspace estimation for multi-view data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="synthesize a dataset from a config")
    p_gen.add_argument("--config", required=True, help="YAML experiment config")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_generate)

    p_est = sub.add_parser("estimate", help="fit an estimator on view files")
    p_est.add_argument("--views", required=True, help="glob matching the view CSV files")
    p_est.add_argument(
        "--ranks",
        required=True,
        help="joint and individual ranks: 'r' or 'r,r1,..,rK'",
    )
    p_est.add_argument(
        "--method",
        choices=("heterojive", "ajive", "stacksvd"),
        default="heterojive",
    )
    p_est.add_argument("--weights", help="fixed simplex weights 'w1,..,wK'")
    p_est.add_argument("--truth", help="directory holding U.csv to score against")
    p_est.add_argument("--out", default=".", help="output directory")
    p_est.add_argument("--t-max", type=int, default=20, dest="t_max")
    p_est.add_argument("--tol", type=float, default=1e-8)
    p_est.set_defaults(func=cmd_estimate)

    p_w = sub.add_parser("weights", help="learn data-driven weights for view files")
    p_w.add_argument("--views", required=True, help="glob matching the view CSV files")
    p_w.add_argument(
        "--ranks",
        required=True,
        help="joint and individual ranks: 'r' or 'r,r1,..,rK'",
    )
    p_w.add_argument("--out", default=".", help="output directory")
    p_w.add_argument("--t-max", type=int, default=20, dest="t_max")
    p_w.add_argument("--tol", type=float, default=1e-8)
    p_w.set_defaults(func=cmd_weights)

    p_sim = sub.add_parser("simulate", help="run a replicated simulation grid")
    p_sim.add_argument("--config", required=True, help="YAML experiment config")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--jobs", type=int, default=1, help="worker processes")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse --help / --version
        code = exc.code
        return 0 if code is None else int(code)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DegenerateAggregation as exc:
        gap = "unknown" if exc.gap is None else format(exc.gap, ".3e")
        print(f"error: {exc} (gap: {gap})", file=sys.stderr)
        return 3
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except JiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
