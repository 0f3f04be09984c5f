"""The bundled validation suite: every check of the library, run from one config."""

import logging
import time

import numpy as np

from estimators.identities import identity_suite
from estimators.inequalities import (
    conditional_maximal_campaign,
    maximal_inequality_check,
    occupation_campaign,
    pathwise_campaign,
    slepian_check,
)
from estimators.molchan import molchan_consistency, molchan_functional
from estimators.persistence import estimate_persistence, slope_verdict, summarize_persistence
from estimators.replicas import replica_seeds
from estimators.tails import tail_campaign
from scenery import simulate_replica

logger = logging.getLogger(__name__)

OCCUPATION_PATHS = 100
OCCUPATION_STEPS = 100_000
CHECK_DT = 2.0 ** -8
CONDITIONAL_PATHS = 3
SLEPIAN_WINDOWS = (0.0, 0.5, 1.0)
SLEPIAN_LEVELS = (1.0, 1.0)
EXACT_RTOL = 1e-12


def exact_properties(config):
    """Mass, monotonicity, determinism and regression exactness; all at machine precision."""
    spec, policy = config.spec(), config.dx_policy()
    path_seed, scenery_seed = replica_seeds(config.master_seed, 0)
    n = config.steps()
    _, field, _, delta = simulate_replica(spec, n, config.dt, path_seed, scenery_seed, dx_policy=policy)
    _, _, _, again = simulate_replica(spec, n, config.dt, path_seed, scenery_seed, dx_policy=policy)

    T = 2.0 ** np.arange(4, 13)
    F = T ** -0.25
    fitted = summarize_persistence(spec, 1.0, T, F, 10 ** 9)
    checks = {
        "mass_conservation": bool(np.allclose(field.mass(), field.checkpoints, rtol=EXACT_RTOL, atol=1e-12)),
        "local_time_monotone": bool(np.all(np.diff(field.L, axis=0) >= 0.0)),
        "determinism": bool(
            np.array_equal(delta.delta, again.delta) and np.array_equal(delta.running_sup, again.running_sup)
        ),
        "regression_exact": fitted.fitted_slope is not None and abs(fitted.fitted_slope + 0.25) < 1e-12,
    }
    return {**checks, "passed": all(checks.values())}


class ValidationRunner:
    def __init__(self, config):
        self.config = config
        self.spec = config.spec()
        self.policy = config.dx_policy()
        # each entry: {"name": str, "passed": bool, ...}
        self.results = []

    def guard(self, name, fn):
        """Run one check; any exception becomes a named failure."""
        start = time.perf_counter()
        try:
            result = fn()
        except Exception as e:
            logger.error("check %s raised %s", name, e)
            result = {"passed": False, "error": f"{type(e).__name__}: {e}"}
        result = {"name": name, **result, "time": time.perf_counter() - start}
        logger.info("check %s: %s (%.1fs)", name, "ok" if result["passed"] else "FAILED", result["time"])
        self.results.append(result)
        return result

    def _persistence(self):
        c = self.config
        estimate = estimate_persistence(
            self.spec, c.barrier, c.T_grid, c.n_replicas, c.master_seed, c.dt, self.policy, c.workers, c.shards
        )
        return {
            "fitted_slope": estimate.fitted_slope,
            "slope_se": estimate.slope_se,
            "expected_exponent": estimate.expected_exponent,
            "flags": estimate.flags,
            "passed": slope_verdict(estimate),
        }

    def _molchan(self):
        c = self.config
        estimate = molchan_functional(
            self.spec, c.molchan_T_grid, c.n_molchan_replicas, c.master_seed, c.molchan_dt,
            dx_policy=self.policy, workers=c.workers, shards=c.shards,
        )
        return molchan_consistency(estimate)

    def run(self):
        c, spec, policy = self.config, self.spec, self.policy
        seed, workers, shards = c.master_seed, c.workers, c.shards
        self.guard("exact_properties", lambda: exact_properties(c))
        self.guard(
            "occupation_density",
            lambda: occupation_campaign(
                spec, min(OCCUPATION_PATHS, c.n_check_paths), OCCUPATION_STEPS, seed, policy, workers, shards
            ),
        )
        self.guard(
            "pathwise_inequalities",
            lambda: _all_passed(pathwise_campaign(spec, c.n_check_paths, seed, CHECK_DT, policy, workers, shards)),
        )
        self.guard(
            "maximal_inequality",
            lambda: maximal_inequality_check(
                spec, 1.0, c.max_x_grid, c.n_check_paths, seed, CHECK_DT, policy, workers, shards
            ),
        )
        self.guard(
            "conditional_maximal_inequality",
            lambda: conditional_maximal_campaign(
                spec, CONDITIONAL_PATHS, 1.0, c.max_x_grid, c.n_slepian_sceneries, seed, CHECK_DT, policy
            ),
        )
        u, v, w = SLEPIAN_WINDOWS
        a, b = SLEPIAN_LEVELS
        self.guard(
            "slepian",
            lambda: slepian_check(
                spec, u, v, w, a, b, c.n_slepian_paths, c.n_slepian_sceneries, seed, CHECK_DT, policy, workers, shards
            ),
        )
        self.guard(
            "identities",
            lambda: identity_suite(spec, c.n_ks_replicas, seed, c.ks_dt, policy, workers, shards),
        )
        self.guard("tails", lambda: tail_campaign(spec, c.n_tail_replicas, seed, CHECK_DT, policy, workers, shards))
        self.guard("persistence", self._persistence)
        self.guard("molchan", self._molchan)
        return self.results

    @property
    def passed(self):
        return bool(self.results) and all(r["passed"] for r in self.results)

    def failures(self):
        return [r["name"] for r in self.results if not r["passed"]]

    def report(self):
        return {
            "spec": self.spec.to_dict(),
            "checks": self.results,
            "failures": self.failures(),
            "passed": self.passed,
        }


def _all_passed(report):
    parts = [v for v in report.values() if isinstance(v, dict) and "passed" in v]
    return {**report, "passed": all(p["passed"] for p in parts)}


def run_validation(config):
    runner = ValidationRunner(config)
    runner.run()
    return runner.report()
