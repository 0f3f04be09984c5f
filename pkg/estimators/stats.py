import math

import numpy as np
from scipy import stats

from errors import FitError

KS_LEVEL = 0.01
MIN_TAIL_COUNT = 50
MIN_ENVELOPE_POINTS = 6


def wilson_interval(p_hat, trials, confidence=0.95):
    """Wilson score interval for a binomial proportion; vectorised over p_hat."""
    p_hat = np.asarray(p_hat, dtype=float)
    if trials <= 0:
        return np.zeros_like(p_hat), np.ones_like(p_hat)
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    denom = 1.0 + z * z / trials
    center = (p_hat + z * z / (2.0 * trials)) / denom
    margin = (z / denom) * np.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials))
    return np.clip(center - margin, 0.0, 1.0), np.clip(center + margin, 0.0, 1.0)


def wilson_half_width(p_hat, trials, confidence=0.95):
    lo, hi = wilson_interval(p_hat, trials, confidence)
    return (hi - lo) / 2.0


def weighted_slope(x, y, weights):
    """Weighted least-squares slope of y on x with known per-point variances 1/weights."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.size < 3:
        raise FitError(f"need at least 3 points for a slope, got {x.size}")
    x_bar = np.sum(w * x) / np.sum(w)
    y_bar = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - x_bar) ** 2)
    if sxx <= 0:
        raise FitError("abscissae are all equal")
    slope = np.sum(w * (x - x_bar) * (y - y_bar)) / sxx
    return float(slope), float(math.sqrt(1.0 / sxx))


def ols_slope(x, y):
    """Ordinary least-squares slope and its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise FitError(f"need at least 3 points for a slope, got {x.size}")
    res = stats.linregress(x, y)
    return float(res.slope), float(res.stderr)


def survival(samples, xs, side="right"):
    """P[X >= x] (right) or P[X <= x] (left) at each x."""
    s = np.sort(np.asarray(samples, dtype=float))
    xs = np.asarray(xs, dtype=float)
    if side == "right":
        return (s.size - np.searchsorted(s, xs, side="left")) / s.size
    return np.searchsorted(s, xs, side="right") / s.size


def fit_envelope(samples, exponent, side="right"):
    """One-sided envelope log P <= log C - c z, z = x^p (right) or x^-p (left tail).

    Only positive x enter. The usable range is where the empirical tail holds at
    least MIN_TAIL_COUNT points; the slope is taken over its far half.
    """
    s = np.asarray(samples, dtype=float)
    n = s.size
    floor = MIN_TAIL_COUNT / n
    report = {"exponent": float(exponent), "side": side, "n": int(n)}
    if floor >= 0.5:
        report.update(low_power=True, admissible=None, points=0)
        return report
    # abscissae spread geometrically in tail probability, down to the floor
    levels = np.geomspace(0.5, floor, 40)
    xs = np.unique(np.quantile(s, 1.0 - levels if side == "right" else levels))
    xs = xs[xs > 0]
    p = survival(s, xs, side)
    keep = p >= floor
    xs, p = xs[keep], p[keep]
    report["points"] = int(xs.size)
    if xs.size < MIN_ENVELOPE_POINTS:
        report.update(low_power=True, admissible=None)
        return report
    z = xs ** exponent if side == "right" else xs ** (-exponent)
    log_p = np.log(p)
    order = np.argsort(z)
    z, log_p = z[order], log_p[order]
    far = slice(z.size // 2, None)
    slope, se = ols_slope(z[far], log_p[far])
    t_stat = slope / se if se > 0 else -math.inf
    admissible = bool(slope < 0 and t_stat <= -2.0)
    rate = -slope
    report.update(
        low_power=False,
        admissible=admissible,
        rate=float(rate),
        rate_se=float(se),
        log_C=float(np.max(log_p + rate * z)) if admissible else None,
        x_range=[float(xs.min()), float(xs.max())],
    )
    return report


def ks_two_sample(name, a, b, level=KS_LEVEL):
    res = stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return {
        "name": name,
        "kind": "ks",
        "statistic": float(res.statistic),
        "pvalue": float(res.pvalue),
        "passed": bool(res.pvalue >= level),
    }


def ks_standard_normal(name, samples, level=KS_LEVEL):
    res = stats.kstest(np.asarray(samples, dtype=float), "norm")
    return {
        "name": name,
        "kind": "ks",
        "statistic": float(res.statistic),
        "pvalue": float(res.pvalue),
        "passed": bool(res.pvalue >= level),
    }


def mean_with_se(samples):
    s = np.asarray(samples, dtype=float)
    s = s[np.isfinite(s)]
    if s.size < 2:
        return float("nan"), float("nan")
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(s.size))
