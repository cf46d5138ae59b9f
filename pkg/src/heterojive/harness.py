"""Replicated simulation runs over a grid of view counts and methods."""

import csv
import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .config import ConfigError, cell_seed
from .estimators import equal_weights, heterojive, stack_svd
from .exceptions import JiveError
from .metrics import subspace_error
from .model import RankSpec, build_ground_truth, realized_theta, synthesize_views
from .validation import check_weights
from .weighting import (
    SNR_CEILING,
    SNR_FLOOR,
    DiagnosticMaps,
    data_driven_weights,
    epsilon_k,
    oracle_iterate,
)


@dataclass(frozen=True)
class ResultRow:
    """One (method, view count, replicate) cell of a simulation."""

    method: str
    n_views: int
    replicate: int
    seed: int
    error: float
    theta_realized: float
    spectral_gap: float
    weights: tuple
    wallclock_ms: float
    reason: str = ""


@dataclass(frozen=True)
class SummaryRow:
    """Aggregate over the replicates of one (method, view count) cell."""

    method: str
    n_views: int
    sqrt_n_views: float
    mean_error: float
    stderr_error: float
    n_replicates: int
    n_failed: int


def _per_view(value, n_views, name):
    """Broadcast a config scalar, or check a tuple's length against K."""
    if isinstance(value, tuple):
        if len(value) != n_views:
            raise ConfigError(
                f"{name} has {len(value)} entries but the cell uses {n_views} views"
            )
        return list(value)
    return [value] * n_views


def oracle_inputs(truth):
    """Exact weighting inputs computed from a ground truth.

    Effective noise scales come from each view's true noise level and the
    smallest retained singular value of its noiseless signal; the maps come
    from the true joint and individual bases. The signal-to-noise ratio is
    clamped into [1e-8, 1e8], so noiseless views get a finite tiny scale.

    Returns
    -------
    (numpy.ndarray, DiagnosticMaps)
    """
    ranks = truth.ranks
    eps = np.empty(truth.n_views)
    for k in range(truth.n_views):
        signal = truth.signal(k)
        svals = np.linalg.svd(signal, compute_uv=False)
        lam = float(svals[ranks.combined(k) - 1])
        sigma = truth.sigma_k[k]
        if sigma > 0:
            snr = min(max(lam / sigma, SNR_FLOOR), SNR_CEILING)
        else:
            snr = SNR_CEILING
        eps[k] = epsilon_k(truth.n, truth.v_k[k].shape[0], snr)
    maps = DiagnosticMaps(
        ubar_k=tuple(
            np.hstack([truth.u, truth.u_k[k]]) for k in range(truth.n_views)
        ),
        r=ranks.r,
    )
    return eps, maps


def _fit_method(cfg, method, data, ranks, truth):
    """Dispatch one method; returns (joint basis, spectral gap, weights)."""
    kk = data.n_views
    if method == "ajive":
        w = equal_weights(kk)
        fit = heterojive(data, ranks, w, compute_diagnostics=False)
        return fit.u_hat, fit.spectral_gap, w
    if method == "stacksvd":
        result = stack_svd(data, ranks.r)
        return result.basis, result.gap, equal_weights(kk)
    source = cfg.weight_source
    if source == "equal":
        w = equal_weights(kk)
    elif source == "fixed":
        w = check_weights(np.asarray(cfg.weights, dtype=float), k=kk)
    elif source == "oracle":
        eps, maps = oracle_inputs(truth)
        trace = oracle_iterate(eps, maps, t_max=cfg.t_max, tol=cfg.tol)
        w = trace.final_weights
    else:
        w, _ = data_driven_weights(
            data,
            ranks,
            t_max=cfg.t_max,
            tol=cfg.tol,
            refresh_each_iter=cfg.refresh_each_iter,
        )
    fit = heterojive(data, ranks, w, compute_diagnostics=False)
    return fit.u_hat, fit.spectral_gap, w


def run_cell(cfg, method, n_views, replicate):
    """Run one replicate of one method at one view count.

    The random stream is derived solely from (master seed, method, view
    count, replicate), so any cell can be reproduced in isolation. Failures
    raised as package errors are recorded in the row (NaN error, reason
    set) rather than propagated.
    """
    seed = cell_seed(cfg.seed, method, n_views, replicate)
    rng = np.random.default_rng(seed)
    theta_realized = float("nan")
    start = time.perf_counter()
    try:
        d = _per_view(cfg.d, n_views, "d") if isinstance(cfg.d, tuple) else cfg.d
        r_k = _per_view(cfg.r_k, n_views, "r_k")
        ranks = RankSpec(cfg.r, tuple(r_k))
        s = _per_view(cfg.s, n_views, "s")
        if cfg.sigma_lo is not None:
            sigma = rng.uniform(cfg.sigma_lo, cfg.sigma_hi, n_views).tolist()
        else:
            sigma = cfg.sigma
        truth = build_ground_truth(
            rng,
            cfg.n,
            d,
            ranks,
            cfg.scheme,
            s=s,
            gamma=cfg.gamma,
            theta=cfg.theta,
            sigma=sigma,
        )
        data = synthesize_views(rng, truth)
        theta_realized = realized_theta(truth)
        u_hat, gap, w = _fit_method(cfg, method, data, ranks, truth)
        error = subspace_error(u_hat, truth.u)
        wall = (time.perf_counter() - start) * 1000.0
        return ResultRow(
            method=method,
            n_views=n_views,
            replicate=replicate,
            seed=seed,
            error=error,
            theta_realized=theta_realized,
            spectral_gap=gap,
            weights=tuple(float(x) for x in w),
            wallclock_ms=wall,
        )
    except JiveError as exc:
        wall = (time.perf_counter() - start) * 1000.0
        return ResultRow(
            method=method,
            n_views=n_views,
            replicate=replicate,
            seed=seed,
            error=float("nan"),
            theta_realized=theta_realized,
            spectral_gap=float("nan"),
            weights=(),
            wallclock_ms=wall,
            reason=f"{type(exc).__name__}: {exc}",
        )


def summarize(rows, methods, k_grid):
    """Aggregate result rows into one summary row per (method, K) cell.

    The mean and standard error are taken over the replicates that
    succeeded; failures are counted separately.
    """
    summary = []
    for method in methods:
        for n_views in k_grid:
            errors = [
                row.error
                for row in rows
                if row.method == method
                and row.n_views == n_views
                and not np.isnan(row.error)
            ]
            n_total = sum(
                1 for row in rows if row.method == method and row.n_views == n_views
            )
            n_failed = n_total - len(errors)
            if errors:
                mean = float(np.mean(errors))
                if len(errors) >= 2:
                    stderr = float(np.std(errors, ddof=1) / np.sqrt(len(errors)))
                else:
                    stderr = 0.0
            else:
                mean = float("nan")
                stderr = float("nan")
            summary.append(
                SummaryRow(
                    method=method,
                    n_views=n_views,
                    sqrt_n_views=float(np.sqrt(n_views)),
                    mean_error=mean,
                    stderr_error=stderr,
                    n_replicates=n_total,
                    n_failed=n_failed,
                )
            )
    return summary


def run_simulation(cfg, jobs=1):
    """Run the full (method, K, replicate) grid of a config.

    Parameters
    ----------
    cfg : ExperimentConfig
    jobs : int
        Worker processes; 1 runs in-process.

    Returns
    -------
    (list of ResultRow, list of SummaryRow)
        Rows in deterministic (method, K, replicate) order regardless of
        the worker count.
    """
    cells = [
        (method, n_views, replicate)
        for method in cfg.methods
        for n_views in cfg.k_grid
        for replicate in range(cfg.replicates)
    ]
    if jobs == 1:
        rows = [run_cell(cfg, *cell) for cell in cells]
    else:
        rows = Parallel(n_jobs=jobs)(
            delayed(run_cell)(cfg, *cell) for cell in cells
        )
    return rows, summarize(rows, cfg.methods, cfg.k_grid)


def _fmt(value):
    """Full round-trip decimal formatting for CSV cells."""
    return format(float(value), ".17g")


def write_results_csv(rows, path):
    """Write per-replicate rows; weights are semicolon-joined per cell."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "method",
                "K",
                "replicate",
                "seed",
                "error",
                "theta_realized",
                "spectral_gap",
                "weights",
                "wallclock_ms",
                "reason",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.method,
                    row.n_views,
                    row.replicate,
                    row.seed,
                    _fmt(row.error),
                    _fmt(row.theta_realized),
                    _fmt(row.spectral_gap),
                    ";".join(_fmt(w) for w in row.weights),
                    _fmt(row.wallclock_ms),
                    row.reason,
                ]
            )


def write_summary_csv(summary, path):
    """Write per-cell aggregates, including sqrt(K) for rate plots."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "method",
                "K",
                "sqrt_K",
                "mean_error",
                "stderr_error",
                "n_replicates",
                "n_failed",
            ]
        )
        for row in summary:
            writer.writerow(
                [
                    row.method,
                    row.n_views,
                    _fmt(row.sqrt_n_views),
                    _fmt(row.mean_error),
                    _fmt(row.stderr_error),
                    row.n_replicates,
                    row.n_failed,
                ]
            )
