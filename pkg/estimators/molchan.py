"""Molchan functional I(T) = E[(int_0^T e^{Delta_t} dt)^{-1}] and E[max_{[0,1]} Delta]."""

import logging
from functools import partial

import numpy as np
from scipy.special import logsumexp

from errors import ParameterError
from estimators.persistence import horizon_steps
from estimators.replicas import (
    DEFAULT_SHARDS,
    MAX_PATH_STREAM,
    MAX_SCENERY_STREAM,
    derive_seed,
    replica_seeds,
    run_campaign,
)
from estimators.stats import mean_with_se
from scenery import simulate_delta_trace
from scenery_objects import MolchanEstimate

logger = logging.getLogger(__name__)

LOG_OVERFLOW = -700.0
Z95 = 1.959963984540054


def log_exp_integral(trace, dt, steps):
    """log of the trapezoidal integral of exp(trace) up to each step count."""
    out = np.empty(len(steps))
    for i, k in enumerate(steps):
        weights = np.full(k + 1, dt)
        weights[0] = weights[-1] = dt / 2.0
        out[i] = logsumexp(trace[: k + 1], b=weights)
    return out


def reciprocal_integral(trace, dt, steps):
    """(int_0^T e^Delta)^{-1} per horizon; nan where it would overflow."""
    log_int = log_exp_integral(trace, dt, steps)
    with np.errstate(over="ignore"):
        recip = np.exp(-log_int)
    recip[log_int < LOG_OVERFLOW] = np.nan
    return recip


def molchan_worker(spec, dt, steps, dx_policy, index, master_seed):
    path_seed, scenery_seed = replica_seeds(master_seed, index)
    _, trace = simulate_delta_trace(spec, int(steps[-1]), dt, path_seed, scenery_seed, dx_policy)
    return reciprocal_integral(trace, dt, steps)


def max_delta_worker(spec, dt, dx_policy, index, master_seed):
    n = int(round(1.0 / dt))
    path_seed = derive_seed(master_seed, MAX_PATH_STREAM, index)
    scenery_seed = derive_seed(master_seed, MAX_SCENERY_STREAM, index)
    _, trace = simulate_delta_trace(spec, n, dt, path_seed, scenery_seed, dx_policy)
    return float(trace.max())


def estimate_max_delta(spec, n_replicas, master_seed, dt=2.0 ** -10, dx_policy=None, workers=1, shards=DEFAULT_SHARDS):
    """Independent campaign for E[max_{t in [0,1]} Delta_t]."""
    worker = partial(max_delta_worker, spec, dt, dx_policy)
    return mean_with_se(run_campaign(worker, n_replicas, master_seed, workers, shards))


def summarize_molchan(spec, T_grid, recips, max_delta, max_delta_se, shards=1):
    recips = np.atleast_2d(np.asarray(recips, dtype=float))
    T_grid = np.asarray(T_grid, dtype=float)
    excluded = np.isnan(recips).sum(axis=0)
    for T, count in zip(T_grid, excluded):
        if count:
            logger.warning("molchan: %d replicas excluded at T=%g (integral underflow)", count, T)
    stats = [mean_with_se(recips[:, i]) for i in range(T_grid.size)]
    I_hat = np.array([m for m, _ in stats])
    se = np.array([s for _, s in stats])
    scale = T_grid ** (spec.gamma() / 2.0) / (1.0 - spec.gamma() / 2.0)
    return MolchanEstimate(
        spec=spec,
        T_grid=T_grid,
        I_hat=I_hat,
        ci_lo=I_hat - Z95 * se,
        ci_hi=I_hat + Z95 * se,
        normalized=I_hat * scale,
        norm_ci_lo=(I_hat - Z95 * se) * scale,
        norm_ci_hi=(I_hat + Z95 * se) * scale,
        excluded=excluded,
        max_delta_01=max_delta,
        max_delta_01_se=max_delta_se,
        shards=shards,
    )


def molchan_functional(
    spec,
    T_grid,
    n_replicas,
    seed,
    dt=2.0 ** -6,
    max_dt=2.0 ** -10,
    dx_policy=None,
    workers=1,
    shards=DEFAULT_SHARDS,
):
    T_grid, steps = horizon_steps(T_grid, dt)
    worker = partial(molchan_worker, spec, dt, steps, dx_policy)
    recips = run_campaign(worker, n_replicas, seed, workers, shards)
    max_delta, max_se = estimate_max_delta(spec, n_replicas, seed, max_dt, dx_policy, workers, shards)
    return summarize_molchan(spec, T_grid, recips, max_delta, max_se, shards)


def molchan_consistency(estimate, rel_tol=0.15):
    """Normalised I(T) stable across the two largest horizons and close to E[max Delta]."""
    if estimate.T_grid.size < 2:
        raise ParameterError("consistency needs at least two horizons")
    a, b = -2, -1
    overlap = bool(
        estimate.norm_ci_lo[a] <= estimate.norm_ci_hi[b] and estimate.norm_ci_lo[b] <= estimate.norm_ci_hi[a]
    )
    rel_gap = abs(estimate.normalized[b] - estimate.max_delta_01) / abs(estimate.max_delta_01)
    return {
        "normalized": [float(estimate.normalized[a]), float(estimate.normalized[b])],
        "max_delta_01": float(estimate.max_delta_01),
        "ci_overlap": overlap,
        "relative_gap": float(rel_gap),
        "passed": overlap and rel_gap <= rel_tol,
    }
