"""Occupation-time binning of a sampled path.

Between grid times the path is taken to be linear, so each step spends its dt
uniformly over the x-interval it sweeps. Splitting that time across the bins
the segment crosses makes the occupation mass exact at every checkpoint.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import erf

from errors import ParameterError
from process_gen import shifted_path, truncated_path
from scenery_objects import GridSpec, LocalTimeField

logger = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-12
DISCRETIZATION_TOL = 0.05
# median |N(0, 1)|
MEDIAN_ABS_NORMAL = float(stats.norm.ppf(0.75))


def step_scale(path):
    """Typical step size: median |step| in Gaussian units, RMS step if the median is 0.

    A single large jump of a stable path moves the RMS step but not the median.
    """
    steps = np.abs(np.diff(path.values))
    scale = float(np.median(steps)) / MEDIAN_ABS_NORMAL
    if scale > 0.0:
        return scale
    return math.sqrt(float(np.dot(steps, steps)) / steps.size)


@dataclass(frozen=True)
class DxPolicy:
    kappa: float = 0.5
    dx_floor: float = 1e-6
    dx: Optional[float] = None  # fixed bin width, overrides kappa

    def choose(self, path):
        if self.dx is not None:
            if not self.dx > 0:
                raise ParameterError(f"dx must be positive, got {self.dx}")
            return float(self.dx)
        return max(self.kappa * step_scale(path), self.dx_floor)

    def fixed(self, path):
        """Same policy pinned to the dx it picks for this path."""
        return DxPolicy(self.kappa, self.dx_floor, self.choose(path))


def grid_for(path, dx_policy=None):
    dx_policy = dx_policy or DxPolicy()
    return GridSpec.around(path.max_abs(), dx_policy.choose(path))


@dataclass
class SegmentSplit:
    """How each step's dt is spread over the bins: w_lo in bin i_lo, w_hi in
    bin i_hi, and w_mid in every bin strictly between them."""

    i_lo: np.ndarray
    i_hi: np.ndarray
    w_lo: np.ndarray
    w_hi: np.ndarray
    w_mid: np.ndarray


def split_segments(values, dt, grid):
    a, b = values[:-1], values[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    width = hi - lo
    i_lo = grid.index_of(lo)
    i_hi = grid.index_of(hi)
    same = i_lo == i_hi
    safe = np.where(same, 1.0, width)
    first_edge = grid.x_min + grid.dx * (i_lo + 1)
    last_edge = grid.x_min + grid.dx * i_hi
    w_lo = np.where(same, dt, dt * np.clip(first_edge - lo, 0.0, width) / safe)
    w_hi = np.where(same, 0.0, dt * np.clip(hi - last_edge, 0.0, width) / safe)
    w_mid = np.where(same, 0.0, dt * grid.dx / safe)
    return SegmentSplit(i_lo, i_hi, w_lo, w_hi, w_mid)


def _bin_masses(split, start, stop, bins):
    sl = slice(start, stop)
    masses = np.bincount(split.i_lo[sl], split.w_lo[sl], minlength=bins)
    masses += np.bincount(split.i_hi[sl], split.w_hi[sl], minlength=bins)
    ramp = np.bincount(split.i_lo[sl] + 1, split.w_mid[sl], minlength=bins + 1)
    ramp -= np.bincount(split.i_hi[sl], split.w_mid[sl], minlength=bins + 1)
    masses += np.cumsum(ramp)[:bins]
    return np.clip(masses, 0.0, None)


def _checkpoint_steps(path, checkpoints):
    if checkpoints is None:
        return np.array([0.0, path.horizon]), np.array([0, path.n])
    cps = np.atleast_1d(np.asarray(checkpoints, dtype=float))
    if cps.size == 0:
        raise ParameterError("at least one checkpoint is required")
    steps = np.array([path.step_of(t) for t in cps])
    if np.any(np.diff(steps) <= 0):
        raise ParameterError("checkpoints must be strictly increasing")
    return steps * path.dt, steps


def compute_local_time(path, checkpoints=None, dx_policy=None, grid=None):
    """Local time L_t(x) on a grid auto-sized from the path, at each checkpoint."""
    grid = grid or grid_for(path, dx_policy)
    times, steps = _checkpoint_steps(path, checkpoints)
    split = split_segments(path.values, path.dt, grid)

    increments = np.zeros((steps.size, grid.bins))
    prev = 0
    for j, k in enumerate(steps):
        if k > prev:
            masses = _bin_masses(split, prev, k, grid.bins)
            total = masses.sum()
            if total > 0:
                # exact occupation time for the interval
                masses *= (k - prev) * path.dt / total
            increments[j] = masses
        prev = k

    L = np.cumsum(increments, axis=0) / grid.dx
    V = np.einsum("ij,ij->i", L, L) * grid.dx
    logger.debug("local time: %d bins of %.3g, %d checkpoints", grid.bins, grid.dx, steps.size)
    return LocalTimeField(grid, times, L, V)


def self_intersection(field, t):
    return float(field.V[field.index_of(t)])


# occupation density formula

@dataclass(frozen=True)
class OccupationFunction:
    name: str
    f: object
    antiderivative: object

    def time_integral(self, values, dt):
        """Exact integral of f along the linear interpolant of the path."""
        a, b = values[:-1], values[1:]
        width = b - a
        flat = np.abs(width) < 1e-12
        slope = (self.antiderivative(b) - self.antiderivative(a)) / np.where(flat, 1.0, width)
        per_step = np.where(flat, self.f(0.5 * (a + b)), slope)
        return float(dt * per_step.sum())


def constant(c=1.0):
    return OccupationFunction("constant", lambda x: np.full_like(x, c, dtype=float), lambda x: c * np.asarray(x, dtype=float))


def gaussian_bump(center=0.0, width=1.0):
    root_pi = math.sqrt(math.pi)
    return OccupationFunction(
        "gaussian_bump",
        lambda x: np.exp(-(((x - center) / width) ** 2)),
        lambda x: 0.5 * root_pi * width * erf((x - center) / width),
    )


def indicator(lo, hi):
    if not lo < hi:
        raise ParameterError("indicator interval must have lo < hi")
    return OccupationFunction(
        "indicator",
        lambda x: ((x >= lo) & (x < hi)).astype(float),
        lambda x: np.clip(x, lo, hi) - lo,
    )


def cosine(freq=1.0):
    return OccupationFunction("cosine", lambda x: np.cos(freq * x), lambda x: np.sin(freq * x) / freq)


def occupation_residual(path, f, t, dx_policy=None):
    """Relative gap between both sides of the occupation density formula at time t."""
    k = path.step_of(t)
    if k == 0:
        return 0.0
    field = compute_local_time(path, [t], dx_policy)
    space_side = float(np.sum(f.f(field.grid.centers()) * field.L[0]) * field.grid.dx)
    time_side = f.time_integral(path.values[: k + 1], path.dt)
    return abs(time_side - space_side) / max(abs(time_side), RESIDUAL_FLOOR)


# pathwise inequalities

def comparison_check(path, field, t, tol=DISCRETIZATION_TOL):
    """t^2 / (2 max_{s<=t}|Y(s)|) <= V_t, up to the discretisation allowance."""
    top = path.max_abs(t)
    if top == 0.0:
        return True
    return t * t / (2.0 * top) <= self_intersection(field, t) * (1.0 + tol)


def superadditivity_terms(path, s, t, dx_policy=None):
    """(V_{s+t}, V_s, V_t of the path restarted at s), all on one bin width."""
    if not (s > 0 and t > 0):
        raise ParameterError("s and t must be positive")
    whole = truncated_path(path, s + t)
    pinned = (dx_policy or DxPolicy()).fixed(whole)
    v_total = compute_local_time(whole, [s + t], pinned).V[0]
    v_head = compute_local_time(truncated_path(path, s), [s], pinned).V[0]
    v_tail = compute_local_time(shifted_path(path, s, t), [t], pinned).V[0]
    return float(v_total), float(v_head), float(v_tail)


def superadditivity_check(path, s, t, dx_policy=None, tol=DISCRETIZATION_TOL):
    v_total, v_head, v_tail = superadditivity_terms(path, s, t, dx_policy)
    return v_total >= (v_head + v_tail) * (1.0 - tol)
