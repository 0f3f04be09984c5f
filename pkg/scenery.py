"""White-noise scenery and the process Delta_t = sum_i L_t(x_i) dW_i."""

import logging
import math

import numpy as np

from errors import ParameterError
from local_time import compute_local_time, grid_for, split_segments
from process_gen import make_rng, sample_path
from scenery_objects import DeltaPath, SceneryField

logger = logging.getLogger(__name__)

COV_EPS = 1e-12


def sample_scenery(grid, seed):
    rng = make_rng(seed)
    return SceneryField(grid, rng.normal(0.0, math.sqrt(grid.dx), grid.bins), seed)


def build_delta(field, scenery):
    if field.grid != scenery.grid:
        raise ParameterError(f"local time grid {field.grid} does not match scenery grid {scenery.grid}")
    delta = field.L @ scenery.dW
    return DeltaPath(field.checkpoints.copy(), delta, np.maximum.accumulate(delta), field.V.copy())


def conditional_covariance(field, s, t):
    """E[Delta_s Delta_t | Y] = integral of L_s L_t."""
    i, j = field.index_of(s), field.index_of(t)
    return float(np.dot(field.L[i], field.L[j]) * field.grid.dx)


def delta_increment_cov_check(field, s, t):
    """E[Delta_t (Delta_s - Delta_t) | Y] >= 0 for t <= s."""
    if t > s:
        raise ParameterError("expected t <= s")
    i, j = field.index_of(t), field.index_of(s)
    # L is nondecreasing in time, so every term here is >= 0
    value = float(np.dot(field.L[i], field.L[j] - field.L[i]) * field.grid.dx)
    return value >= -COV_EPS * max(1.0, float(field.V[j]))


def delta_on_grid(path, grid, dW):
    """Delta at every grid time of the path, for one scenery (bins,) or a batch (r, bins).

    Matches field.L @ dW at any checkpoint; cost is O(n) per scenery.
    """
    dW = np.asarray(dW, dtype=float)
    single = dW.ndim == 1
    dW = np.atleast_2d(dW)
    if dW.shape[1] != grid.bins:
        raise ParameterError(f"scenery has {dW.shape[1]} cells, grid has {grid.bins}")
    split = split_segments(path.values, path.dt, grid)
    cum = np.zeros((dW.shape[0], grid.bins + 1))
    np.cumsum(dW, axis=1, out=cum[:, 1:])
    steps = (
        split.w_lo * dW[:, split.i_lo]
        + split.w_hi * dW[:, split.i_hi]
        + split.w_mid * (cum[:, split.i_hi] - cum[:, split.i_lo + 1])
    ) / grid.dx
    out = np.zeros((dW.shape[0], path.n + 1))
    np.cumsum(steps, axis=1, out=out[:, 1:])
    return out[0] if single else out


def simulate_delta_trace(spec, n, dt, path_seed, scenery_seed, dx_policy=None):
    """One replica: (path, Delta on the path grid)."""
    path = sample_path(spec, n, dt, path_seed)
    grid = grid_for(path, dx_policy)
    scenery = sample_scenery(grid, scenery_seed)
    return path, delta_on_grid(path, grid, scenery.dW)


def default_checkpoints(T, dt, n_geometric=8, n_uniform=16):
    """0, a geometric ladder T 2^-(m-j), and a uniform grid on [0, min(1, T)], snapped to dt."""
    n = int(round(T / dt))
    if n < 1:
        raise ParameterError(f"horizon {T} is shorter than one step {dt}")
    steps = {0, n}
    for j in range(n_geometric + 1):
        steps.add(max(1, int(round(n * 2.0 ** -(n_geometric - j)))))
    unit = min(n, int(round(1.0 / dt)))
    for j in range(1, n_uniform + 1):
        steps.add(max(1, int(round(unit * j / n_uniform))))
    return np.array(sorted(steps)) * dt


def simulate_replica(spec, n, dt, path_seed, scenery_seed, checkpoints=None, dx_policy=None):
    """(path, local time field, scenery, DeltaPath) for one replica."""
    path = sample_path(spec, n, dt, path_seed)
    if checkpoints is None:
        checkpoints = default_checkpoints(path.horizon, dt)
    field = compute_local_time(path, checkpoints, dx_policy)
    scenery = sample_scenery(field.grid, scenery_seed)
    return path, field, scenery, build_delta(field, scenery)


def conditional_traces(path, n_scenery, seed, dx_policy=None):
    """Delta traces of one fixed path under n_scenery independent sceneries, shape (n_scenery, n+1)."""
    if n_scenery < 1:
        raise ParameterError("n_scenery must be positive")
    grid = grid_for(path, dx_policy)
    rng = make_rng(seed)
    dW = rng.normal(0.0, math.sqrt(grid.dx), (n_scenery, grid.bins))
    return delta_on_grid(path, grid, dW)


def conditional_sup_probabilities(path, traces, windows, levels, relative=False):
    """Per-scenery events {sup over window <= level} and their frequencies, for one fixed path.

    windows are (start, end) times on the path grid. With relative=True the
    sup is taken over Delta minus its value at the window start.
    """
    if len(windows) != len(levels):
        raise ParameterError("need one level per window")
    traces = np.atleast_2d(traces)
    events = np.empty((traces.shape[0], len(windows)), dtype=bool)
    for j, ((start, end), level) in enumerate(zip(windows, levels)):
        i, k = path.step_of(start), path.step_of(end)
        if k < i:
            raise ParameterError(f"window ({start}, {end}) is reversed")
        piece = traces[:, i : k + 1]
        if relative:
            piece = piece - traces[:, i : i + 1]
        events[:, j] = piece.max(axis=1) <= level
    return events, events.mean(axis=0)
