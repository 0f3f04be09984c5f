"""Sample paths of the driving process Y.

Every generator is a pure function of (spec, n, dt, seed): the seed feeds a
Philox counter-based generator, so the same arguments give bit-identical
paths in any process.
"""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky, toeplitz

from errors import GenerationError, ParameterError
from scenery_objects import Family, PathSample, ProcessSpec

logger = logging.getLogger(__name__)

CHOLESKY_MAX_N = 4096
OUTER_MARGIN = 1.05


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def _check_grid(n, dt):
    if int(n) != n or n < 1:
        raise ParameterError(f"step count must be a positive integer, got {n}")
    if not dt > 0:
        raise ParameterError(f"time step must be positive, got {dt}")
    return int(n)


def _from_increments(spec, increments, dt, seed):
    values = np.empty(increments.size + 1)
    values[0] = 0.0
    np.cumsum(increments, out=values[1:])
    return PathSample(spec, dt, values, seed)


def sample_brownian(n, dt, seed):
    n = _check_grid(n, dt)
    rng = make_rng(seed)
    return _from_increments(ProcessSpec.brownian(), rng.normal(0.0, math.sqrt(dt), n), dt, seed)


# stable Levy

def stable_variates(delta, zeta, size, rng):
    """Chambers-Mallows-Stuck draws with E[exp(iuX)] = exp(-|u|^delta (1 + i zeta sgn(u) tan(pi delta/2)))."""
    # the CMS skew parameter has the opposite sign convention
    skew = -zeta
    V = rng.uniform(-math.pi / 2, math.pi / 2, size)
    W = rng.exponential(1.0, size)
    t = math.tan(math.pi * delta / 2)
    B = math.atan(skew * t) / delta
    S = (1.0 + (skew * t) ** 2) ** (1.0 / (2.0 * delta))
    return (
        S * np.sin(delta * (V + B)) / np.cos(V) ** (1.0 / delta)
        * (np.cos(V - delta * (V + B)) / W) ** ((1.0 - delta) / delta)
    )


def sample_stable_levy(spec, n, dt, seed):
    if spec.family != Family.STABLE_LEVY:
        raise ParameterError(f"expected a stable Levy spec, got {spec.family.value}")
    n = _check_grid(n, dt)
    if spec.experimental:
        logger.warning("skewed stable driver (zeta=%g) is experimental", spec.zeta)
    rng = make_rng(seed)
    steps = stable_variates(spec.delta, spec.zeta, n, rng) * dt ** (1.0 / spec.delta)
    return _from_increments(spec, steps, dt, seed)


# fractional Brownian motion

def fgn_autocovariance(hurst, k):
    """Autocovariance of unit-step fractional Gaussian noise at lag k."""
    k = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k ** two_h + np.abs(k - 1) ** two_h)


@lru_cache(maxsize=32)
def _circulant_eigenvalues(n, hurst):
    row = fgn_autocovariance(hurst, np.r_[np.arange(n + 1), np.arange(n - 1, 0, -1)])
    eig = np.fft.fft(row).real
    eig.setflags(write=False)
    return eig


@lru_cache(maxsize=8)
def _cholesky_factor(n, hurst):
    factor = cholesky(toeplitz(fgn_autocovariance(hurst, np.arange(n))), lower=True)
    factor.setflags(write=False)
    return factor


def sample_fbm(spec, n, dt, seed):
    if spec.family != Family.FRACTIONAL_BM:
        raise ParameterError(f"expected a fractional BM spec, got {spec.family.value}")
    n = _check_grid(n, dt)
    rng = make_rng(seed)
    eig = _circulant_eigenvalues(n, spec.hurst)
    if eig.min() >= -1e-10 * eig.max():
        m = eig.size
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        noise = np.fft.fft(np.sqrt(np.clip(eig, 0.0, None) / m) * z).real[:n]
    elif n <= CHOLESKY_MAX_N:
        logger.warning("circulant embedding not nonnegative (n=%d, H=%g); using Cholesky", n, spec.hurst)
        noise = _cholesky_factor(n, spec.hurst) @ rng.standard_normal(n)
    else:
        raise GenerationError(
            f"circulant embedding has eigenvalue {eig.min():.3e} < 0 for n={n}, H={spec.hurst}, "
            f"and n exceeds the Cholesky limit {CHOLESKY_MAX_N}"
        )
    return _from_increments(spec, noise * dt ** spec.hurst, dt, seed)


# iterated Brownian motion

def sample_ibm(n, dt, seed):
    """Y(t) = B(inner(t)) with B two-sided, sampled on spacing dt and interpolated."""
    n = _check_grid(n, dt)
    rng = make_rng(seed)
    inner = np.empty(n + 1)
    inner[0] = 0.0
    np.cumsum(rng.normal(0.0, math.sqrt(dt), n), out=inner[1:])

    reach = OUTER_MARGIN * float(np.max(np.abs(inner)))
    m = max(1, int(math.ceil(reach / dt)))
    right = np.cumsum(rng.normal(0.0, math.sqrt(dt), m))
    left = np.cumsum(rng.normal(0.0, math.sqrt(dt), m))
    outer = np.concatenate([left[::-1], [0.0], right])
    xs = np.arange(-m, m + 1) * dt
    return PathSample(ProcessSpec.ibm(), dt, np.interp(inner, xs, outer), seed)


def sample_path(spec, n, dt, seed):
    if spec.family == Family.BROWNIAN:
        return sample_brownian(n, dt, seed)
    if spec.family == Family.STABLE_LEVY:
        return sample_stable_levy(spec, n, dt, seed)
    if spec.family == Family.FRACTIONAL_BM:
        return sample_fbm(spec, n, dt, seed)
    return sample_ibm(n, dt, seed)


# path transforms

def reverse_path(path, T):
    """t -> Y(T - t) - Y(T) on [0, T]."""
    k = path.step_of(T)
    if k == 0:
        raise ParameterError("reversal horizon must be positive")
    head = path.values[: k + 1]
    return PathSample(path.spec, path.dt, head[::-1] - head[-1], path.seed)


def shifted_path(path, s, t=None):
    """u -> Y(u + s) - Y(s) for u in [0, t] (default: to the end of the path)."""
    i = path.step_of(s)
    j = path.n if t is None else path.step_of(s + t)
    if j <= i:
        raise ParameterError("shifted window must be nonempty")
    window = path.values[i : j + 1]
    return PathSample(path.spec, path.dt, window - window[0], path.seed)


def truncated_path(path, t):
    k = path.step_of(t)
    if k == 0:
        raise ParameterError("truncation time must be positive")
    return PathSample(path.spec, path.dt, path.values[: k + 1], path.seed)
