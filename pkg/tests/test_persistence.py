import math

import numpy as np
import pytest

from errors import FitError, ParameterError
from estimators.persistence import (
    SLOPE_BAND,
    estimate_persistence,
    fit_exponent,
    horizon_steps,
    slope_verdict,
    summarize_persistence,
)
from scenery_objects import ProcessSpec

BROWNIAN = ProcessSpec.brownian()


def _synthetic(F, T=None, n=10 ** 9):
    T = 2.0 ** np.arange(4, 13) if T is None else np.asarray(T, dtype=float)
    return summarize_persistence(BROWNIAN, 1.0, T, F(T), n)


class TestFit:
    def test_exact_power_law(self):
        estimate = _synthetic(lambda T: T ** -0.25)
        assert estimate.fitted_slope == pytest.approx(-0.25, abs=1e-12)
        assert estimate.flags == []

    @pytest.mark.parametrize("theta, c", [(0.1, 0.9), (0.375, 0.05), (0.5, 1.0)])
    def test_scale_invariance(self, theta, c):
        assert _synthetic(lambda T: c * T ** -theta).fitted_slope == pytest.approx(-theta, abs=1e-12)

    def test_log_correction_biases_upward(self):
        estimate = _synthetic(lambda T: T ** -0.25 * np.log(T) ** 0.5, T=2.0 ** np.arange(6, 13))
        slope, _ = fit_exponent(estimate, (2.0 ** 6, 2.0 ** 12))
        assert -0.25 < slope < -0.12

    def test_window_with_two_points(self):
        estimate = _synthetic(lambda T: T ** -0.25)
        with pytest.raises(FitError):
            fit_exponent(estimate, (2.0 ** 11, 2.0 ** 12))

    def test_rare_survival_is_left_out(self):
        estimate = _synthetic(lambda T: T ** -0.25, n=100)
        # F * n < 50 everywhere in the default window
        assert estimate.fitted_slope is None
        assert any("slope omitted" in f for f in estimate.flags)

    def test_default_window_spans_two_decades(self):
        estimate = _synthetic(lambda T: T ** -0.375, n=20_000)
        wide, wide_se = fit_exponent(estimate)
        narrow, narrow_se = fit_exponent(estimate, (2.0 ** 10, 2.0 ** 12))
        assert wide == pytest.approx(-0.375, abs=1e-12)
        # at the production budget the slope error is well inside the acceptance band
        assert wide_se < SLOPE_BAND / 4
        assert wide_se < narrow_se / 2

    def test_default_window_drops_rare_horizons(self):
        # F * n >= 50 only up to T = 2^8 here
        estimate = _synthetic(lambda T: T ** -0.5, n=800)
        assert estimate.fitted_slope == pytest.approx(-0.5, abs=1e-12)
        _, se = fit_exponent(estimate, (2.0 ** 6, 2.0 ** 8))
        assert estimate.slope_se == pytest.approx(se)

    def test_expected_exponent(self):
        assert _synthetic(lambda T: T ** -0.25).expected_exponent == -0.25
        est = summarize_persistence(ProcessSpec.ibm(), 1.0, [1.0], [0.5], 100)
        assert est.expected_exponent == -0.125
        est = summarize_persistence(ProcessSpec.fbm(0.6), 1.0, [1.0], [0.5], 100)
        assert est.expected_exponent == pytest.approx(-0.30)

    def test_verdict(self):
        good = _synthetic(lambda T: T ** -0.3)
        bad = _synthetic(lambda T: T ** -0.5)
        assert slope_verdict(good)
        assert not slope_verdict(bad)


class TestHorizons:
    def test_steps(self):
        T, steps = horizon_steps([1.0, 2.0, 4.0], 0.25)
        np.testing.assert_array_equal(steps, [4, 8, 16])

    @pytest.mark.parametrize("grid", [[], [2.0, 1.0], [0.0, 1.0], [1.0, 1.1]])
    def test_bad_grid(self, grid):
        with pytest.raises(ParameterError):
            horizon_steps(grid, 0.25)


class TestCampaign:
    def test_no_barrier_means_full_survival(self):
        est = estimate_persistence(BROWNIAN, math.inf, [1.0], 100, 1, dt=1.0 / 16)
        np.testing.assert_array_equal(est.F_hat, [1.0])
        assert any("every replica survives" in f for f in est.flags)

    def test_unreachable_barrier(self):
        est = estimate_persistence(BROWNIAN, -1e9, [0.5, 1.0, 2.0], 100, 1, dt=1.0 / 16)
        np.testing.assert_array_equal(est.F_hat, [0.0, 0.0, 0.0])
        assert est.fitted_slope is None
        assert not slope_verdict(est)

    def test_too_few_replicas(self):
        with pytest.raises(ParameterError):
            estimate_persistence(BROWNIAN, 1.0, [1.0], 99, 1)

    def test_invariants(self):
        est = estimate_persistence(BROWNIAN, 1.0, [1.0, 2.0, 4.0, 8.0], 400, 3, dt=1.0 / 16)
        assert np.all((0.0 <= est.F_hat) & (est.F_hat <= 1.0))
        assert np.all(est.ci_lo <= est.F_hat) and np.all(est.F_hat <= est.ci_hi)
        # the same replicas are reused across horizons, so F is exactly nonincreasing
        assert np.all(np.diff(est.F_hat) <= 0.0)

    def test_reproducible_across_shards_and_workers(self):
        args = (BROWNIAN, 1.0, [1.0, 2.0], 120, 99)
        a = estimate_persistence(*args, dt=1.0 / 16, shards=1)
        b = estimate_persistence(*args, dt=1.0 / 16, shards=5)
        c = estimate_persistence(*args, dt=1.0 / 16, shards=4, workers=2)
        np.testing.assert_array_equal(a.F_hat, b.F_hat)
        np.testing.assert_array_equal(a.F_hat, c.F_hat)


@pytest.mark.slow
class TestExponentBands:
    T_GRID = [2.0 ** k for k in range(4, 13)]

    @pytest.mark.parametrize("spec", [ProcessSpec.brownian(), ProcessSpec.fbm(0.75)], ids=["brownian", "fbm075"])
    def test_slope_in_band(self, spec):
        est = estimate_persistence(spec, 1.0, self.T_GRID, 20_000, 20250101, dt=2.0 ** -6, workers=4)
        assert est.slope_se < SLOPE_BAND / 2
        assert slope_verdict(est), (est.fitted_slope, est.expected_exponent)
