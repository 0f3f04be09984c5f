"""Persistence probability F(T) = P[sup_{t<=T} Delta_t <= barrier] and its exponent."""

import logging
from functools import partial

import numpy as np

from errors import FitError, ParameterError
from estimators.replicas import DEFAULT_SHARDS, replica_seeds, run_campaign
from estimators.stats import MIN_TAIL_COUNT, weighted_slope, wilson_interval
from scenery import simulate_delta_trace
from scenery_objects import PersistenceEstimate

logger = logging.getLogger(__name__)

MIN_REPLICAS = 100
SLOPE_BAND = 0.08
# default fit window spans the last 2^6 of the horizon range, about two decades
FIT_WINDOW_RATIO = 2.0 ** 6


def horizon_steps(T_grid, dt):
    T_grid = np.asarray(T_grid, dtype=float)
    if T_grid.ndim != 1 or T_grid.size == 0:
        raise ParameterError("T grid must be a nonempty list of horizons")
    if np.any(np.diff(T_grid) <= 0) or T_grid[0] <= 0:
        raise ParameterError("T grid must be positive and strictly increasing")
    steps = np.rint(T_grid / dt).astype(int)
    if np.any(np.abs(steps * dt - T_grid) > 1e-9 * T_grid) or steps[0] < 1:
        raise ParameterError(f"every horizon must be a positive multiple of dt={dt}")
    return T_grid, steps


def persistence_worker(spec, dt, steps, barrier, dx_policy, index, master_seed):
    """Survival indicator of one replica at each horizon."""
    path_seed, scenery_seed = replica_seeds(master_seed, index)
    _, trace = simulate_delta_trace(spec, int(steps[-1]), dt, path_seed, scenery_seed, dx_policy)
    running = np.maximum.accumulate(trace)
    return running[steps] <= barrier


def summarize_persistence(spec, barrier, T_grid, F_hat, n_replicas, T_window=None, shards=1):
    """Wrap survival fractions into an estimate with Wilson CIs and a fitted slope."""
    T_grid = np.asarray(T_grid, dtype=float)
    F_hat = np.asarray(F_hat, dtype=float)
    ci_lo, ci_hi = wilson_interval(F_hat, n_replicas)
    estimate = PersistenceEstimate(
        spec=spec,
        barrier=barrier,
        T_grid=T_grid,
        n_replicas=int(n_replicas),
        survivors=np.rint(F_hat * n_replicas).astype(int),
        F_hat=F_hat,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        shards=shards,
    )
    for T, F in zip(T_grid, F_hat):
        if F <= 0.0:
            estimate.flags.append(f"T={T:g}: no replica survives; omitted from slope")
        elif F >= 1.0:
            estimate.flags.append(f"T={T:g}: every replica survives; omitted from slope")
    try:
        estimate.fitted_slope, estimate.slope_se = fit_exponent(estimate, T_window)
    except FitError as e:
        estimate.flags.append(f"slope omitted: {e}")
        logger.warning("persistence slope omitted: %s", e)
    return estimate


def fit_exponent(estimate, T_window=None):
    """Weighted least squares of log F on log T over a window of horizons.

    The default window is [T_max / FIT_WINDOW_RATIO, T_max]. Points with F = 0,
    F = 1 or fewer than MIN_TAIL_COUNT survivors are left out.
    """
    T = estimate.T_grid
    F = estimate.F_hat
    lo, hi = T_window if T_window is not None else (T.max() / FIT_WINDOW_RATIO, T.max())
    usable = (T >= lo * (1 - 1e-12)) & (T <= hi * (1 + 1e-12))
    usable &= (F > 0) & (F < 1) & (F * estimate.n_replicas >= MIN_TAIL_COUNT)
    if usable.sum() < 3:
        raise FitError(f"only {int(usable.sum())} usable horizons in window [{lo:g}, {hi:g}]")
    half = (estimate.ci_hi[usable] - estimate.ci_lo[usable]) / 2.0
    sigma = half / F[usable]
    return weighted_slope(np.log(T[usable]), np.log(F[usable]), 1.0 / sigma ** 2)


def estimate_persistence(
    spec,
    barrier,
    T_grid,
    n_replicas,
    master_seed,
    dt=2.0 ** -6,
    dx_policy=None,
    workers=1,
    shards=DEFAULT_SHARDS,
    T_window=None,
):
    if n_replicas < MIN_REPLICAS:
        raise ParameterError(f"persistence needs at least {MIN_REPLICAS} replicas, got {n_replicas}")
    T_grid, steps = horizon_steps(T_grid, dt)
    worker = partial(persistence_worker, spec, dt, steps, barrier, dx_policy)
    alive = np.array(run_campaign(worker, n_replicas, master_seed, workers, shards))
    F_hat = alive.sum(axis=0) / n_replicas
    return summarize_persistence(spec, barrier, T_grid, F_hat, n_replicas, T_window, shards)


def slope_verdict(estimate, band=SLOPE_BAND):
    """Whether the fitted slope lies within band of -gamma/2."""
    if estimate.fitted_slope is None:
        return False
    return abs(estimate.fitted_slope - estimate.expected_exponent) <= band
