"""Tail envelopes of V_1, Delta_1 and max_{[0,1]} |Y|."""

import logging
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import stats

from errors import ParameterError
from estimators.replicas import DEFAULT_SHARDS, replica_seeds, run_campaign
from estimators.stats import fit_envelope, survival, wilson_half_width
from local_time import compute_local_time
from process_gen import sample_path
from scenery import build_delta, sample_scenery
from scenery_objects import Family

logger = logging.getLogger(__name__)

FULL_POWER_REPLICAS = 100_000
IBM_CHAIN_X = (1.0, 1.5, 2.0, 3.0)


@dataclass(eq=False)
class TailSamples:
    V1: np.ndarray
    delta1: np.ndarray
    max_abs: np.ndarray

    @property
    def n(self):
        return self.V1.size


def tail_worker(spec, dt, dx_policy, index, master_seed):
    path_seed, scenery_seed = replica_seeds(master_seed, index)
    path = sample_path(spec, int(round(1.0 / dt)), dt, path_seed)
    field = compute_local_time(path, [1.0], dx_policy)
    delta = build_delta(field, sample_scenery(field.grid, scenery_seed))
    return float(field.V[0]), float(delta.delta[0]), path.max_abs()


def sample_tails(spec, n_replicas, seed, dt=2.0 ** -8, dx_policy=None, workers=1, shards=DEFAULT_SHARDS):
    if n_replicas < 1:
        raise ParameterError("n_replicas must be positive")
    if n_replicas < FULL_POWER_REPLICAS:
        logger.warning("tails: %d replicas, envelope fits may be low-power", n_replicas)
    worker = partial(tail_worker, spec, dt, dx_policy)
    rows = np.array(run_campaign(worker, n_replicas, seed, workers, shards))
    return TailSamples(rows[:, 0], rows[:, 1], rows[:, 2])


def _envelope(name, samples, exponent, side):
    report = fit_envelope(samples, exponent, side)
    report["name"] = name
    report["low_power"] = report["low_power"] or report["n"] < FULL_POWER_REPLICAS
    report["passed"] = bool(report["admissible"])
    return report


def delta1_exponent(spec):
    a = spec.alpha()
    return 2.0 * a / (1.0 + a)


def tail_check_delta1(spec, n_replicas, seed, dt=2.0 ** -8, dx_policy=None, workers=1, shards=DEFAULT_SHARDS, samples=None):
    """Right-tail envelope of Delta_1 with exponent 2 alpha / (1 + alpha)."""
    if samples is None:
        samples = sample_tails(spec, n_replicas, seed, dt, dx_policy, workers, shards)
    return _envelope("delta1_tail", samples.delta1, delta1_exponent(spec), "right")


def h4_check(spec, samples):
    """Right tail of V_1 against exp(-c x^alpha)."""
    return _envelope("V1_right_tail", samples.V1, spec.alpha(), "right")


def h5_check(spec, samples):
    """Left tail of V_1 against exp(-c x^-beta)."""
    return _envelope("V1_left_tail", samples.V1, spec.beta(), "left")


def h5_sufficient_check(spec, samples):
    # V_1 >= 1/(2 max|Y|), so a max|Y| tail of order exp(-c x^beta) gives the left tail of V_1
    return _envelope("max_abs_Y_tail", samples.max_abs, spec.beta(), "right")


def ibm_max_chain_check(spec, samples, x_grid=IBM_CHAIN_X):
    """P[max_{[0,1]} |Y| >= x] <= 8 sf(x^(2/3)) for iterated Brownian motion."""
    if spec.family != Family.ITERATED_BM:
        raise ParameterError(f"the max chain bound applies to iterated BM, not {spec.family.value}")
    x_grid = np.asarray(x_grid, dtype=float)
    p_hat = survival(samples.max_abs, x_grid, "right")
    slack = wilson_half_width(p_hat, samples.n)
    bound = 8.0 * stats.norm.sf(x_grid ** (2.0 / 3.0))
    rows = [
        {"x": float(x), "p_hat": float(p), "bound": float(b), "passed": bool(p <= b + s)}
        for x, p, b, s in zip(x_grid, p_hat, bound, slack)
    ]
    return {"name": "ibm_max_chain", "rows": rows, "passed": all(r["passed"] for r in rows)}


def tail_campaign(spec, n_replicas, seed, dt=2.0 ** -8, dx_policy=None, workers=1, shards=DEFAULT_SHARDS):
    """Every tail check on one shared sample of (V_1, Delta_1, max |Y|)."""
    samples = sample_tails(spec, n_replicas, seed, dt, dx_policy, workers, shards)
    checks = [
        h4_check(spec, samples),
        h5_check(spec, samples),
        tail_check_delta1(spec, n_replicas, seed, samples=samples),
        h5_sufficient_check(spec, samples),
    ]
    if spec.family == Family.ITERATED_BM:
        checks.append(ibm_max_chain_check(spec, samples))
    return {
        "spec": spec.to_dict(),
        "n_replicas": n_replicas,
        "low_power": n_replicas < FULL_POWER_REPLICAS,
        "mean_V1": float(samples.V1.mean()),
        "checks": checks,
        # low-power fits are reported but do not fail the campaign
        "passed": all(c["passed"] or c.get("low_power", False) for c in checks),
        "shards": shards,
    }
