import math

import numpy as np
import pytest

from errors import ParameterError
from local_time import (
    MEDIAN_ABS_NORMAL,
    DxPolicy,
    comparison_check,
    compute_local_time,
    constant,
    gaussian_bump,
    grid_for,
    indicator,
    occupation_residual,
    self_intersection,
    step_scale,
    superadditivity_check,
    superadditivity_terms,
)
from process_gen import sample_brownian, sample_path
from scenery import default_checkpoints
from scenery_objects import GridSpec, PathSample, ProcessSpec


def _flat_path(n, dt):
    return PathSample(ProcessSpec.brownian(), dt, np.zeros(n + 1), 0)


class TestGrid:
    def test_symmetric_around_zero(self):
        grid = GridSpec.around(1.0, 0.1)
        assert grid.bins == 2 * (math.ceil(1.0 / 0.1) + 1) + 1
        assert grid.x_min == pytest.approx(-grid.x_max)
        assert np.any(np.isclose(grid.centers(), 0.0))

    def test_zero_range_path_gets_three_bins(self):
        grid = grid_for(_flat_path(10, 0.1))
        assert grid.bins == 3

    def test_covers_the_path(self):
        path = sample_brownian(1000, 0.001, 3)
        grid = grid_for(path)
        assert grid.x_min <= -path.max_abs() - grid.dx * 0.5
        assert grid.x_max >= path.max_abs() + grid.dx * 0.5

    def test_dx_policy(self):
        path = sample_brownian(1024, 1.0 / 1024, 1)
        rms = math.sqrt(np.mean(np.diff(path.values) ** 2))
        # median and RMS scales agree for Gaussian steps
        assert step_scale(path) == pytest.approx(rms, rel=0.1)
        assert DxPolicy().choose(path) == pytest.approx(0.5 * step_scale(path))
        assert DxPolicy(dx=0.2).choose(path) == 0.2
        assert DxPolicy().fixed(path).dx == DxPolicy().choose(path)
        with pytest.raises(ParameterError):
            DxPolicy(dx=-1.0).choose(path)

    def test_dx_ignores_a_single_jump(self):
        values = np.concatenate([[0.0], np.cumsum(np.full(1000, 0.01) * (-1) ** np.arange(1000))])
        values[-1] += 1000.0
        path = PathSample(ProcessSpec.stable(1.5), 0.001, values, 0)
        assert DxPolicy().choose(path) == pytest.approx(0.5 * 0.01 / MEDIAN_ABS_NORMAL)

    def test_dx_on_mostly_flat_path(self):
        values = np.zeros(11)
        values[-1] = 1.0
        path = PathSample(ProcessSpec.brownian(), 0.1, values, 0)
        assert step_scale(path) == pytest.approx(math.sqrt(0.1))

    def test_stable_dx_tracks_typical_step(self):
        spec = ProcessSpec.stable(1.5)
        for r in range(200):
            path = sample_path(spec, 256, 1.0 / 256, r)
            steps = np.abs(np.diff(path.values))
            assert DxPolicy().choose(path) <= 2.0 * np.median(steps)


class TestLocalTime:
    def test_mass_conservation(self):
        for family_spec in (ProcessSpec.brownian(), ProcessSpec.stable(1.5), ProcessSpec.fbm(0.75), ProcessSpec.ibm()):
            path = sample_path(family_spec, 2048, 1.0 / 256, 17)
            field = compute_local_time(path, default_checkpoints(path.horizon, path.dt))
            np.testing.assert_allclose(field.mass(), field.checkpoints, rtol=1e-12, atol=1e-12)

    def test_monotone_in_time(self):
        path = sample_brownian(4096, 1.0 / 1024, 8)
        field = compute_local_time(path, np.arange(1, 17) * 0.25)
        assert np.all(np.diff(field.L, axis=0) >= 0.0)

    def test_constant_path(self):
        field = compute_local_time(_flat_path(20, 0.1), [1.0, 2.0], DxPolicy(dx=0.1))
        centre = field.grid.index_of(0.0)
        assert field.L[0, centre] == pytest.approx(10.0)
        assert field.L[1, centre] == pytest.approx(20.0)
        assert self_intersection(field, 1.0) == pytest.approx(10.0)

    def test_non_checkpoint_time(self):
        field = compute_local_time(sample_brownian(100, 0.01, 2), [0.5, 1.0])
        with pytest.raises(ParameterError):
            self_intersection(field, 0.75)

    def test_checkpoints_must_increase(self):
        with pytest.raises(ParameterError):
            compute_local_time(sample_brownian(100, 0.01, 2), [1.0, 0.5])

    def test_mean_self_intersection_of_brownian(self):
        v = [compute_local_time(sample_brownian(512, 1.0 / 512, r), [1.0]).V[0] for r in range(1500)]
        # E[V_1] = 8 / (3 sqrt(2 pi))
        assert np.mean(v) == pytest.approx(8.0 / (3.0 * math.sqrt(2.0 * math.pi)), abs=0.08)


class TestOccupationDensity:
    def test_constant_is_exact(self):
        path = sample_brownian(10_000, 1e-4, 4)
        assert occupation_residual(path, constant(), 1.0) < 1e-12

    def test_bin_aligned_indicator_is_exact(self):
        path = sample_brownian(10_000, 1e-4, 5)
        edges = grid_for(path).edges()
        f = indicator(edges[edges.size // 3], edges[2 * edges.size // 3])
        assert occupation_residual(path, f, 1.0) < 1e-9

    def test_gaussian_bump(self):
        residuals = [occupation_residual(sample_brownian(2 ** 15, 2.0 ** -15, r), gaussian_bump(), 1.0) for r in range(5)]
        assert np.median(residuals) < 0.02

    def test_zero_time(self):
        assert occupation_residual(sample_brownian(10, 0.1, 0), gaussian_bump(), 0.0) == 0.0

    def test_indicator_needs_an_interval(self):
        with pytest.raises(ParameterError):
            indicator(1.0, 1.0)


class TestPathwiseInequalities:
    def test_comparison_on_brownian_paths(self):
        for r in range(50):
            path = sample_brownian(256, 1.0 / 256, r)
            field = compute_local_time(path, [0.5, 1.0])
            assert comparison_check(path, field, 1.0)
            assert comparison_check(path, field, 0.5)

    def test_comparison_on_flat_path(self):
        path = _flat_path(10, 0.1)
        assert comparison_check(path, compute_local_time(path, [1.0]), 1.0)

    def test_superadditivity_constant_path(self):
        path = _flat_path(20, 0.1)
        v_total, v_head, v_tail = superadditivity_terms(path, 1.0, 1.0, DxPolicy(dx=0.1))
        assert v_total == pytest.approx(40.0)
        assert v_head == pytest.approx(10.0)
        assert v_tail == pytest.approx(10.0)

    def test_superadditivity_brownian(self):
        for r in range(50):
            assert superadditivity_check(sample_brownian(256, 1.0 / 256, 100 + r), 0.5, 0.5)

    def test_superadditivity_needs_positive_times(self):
        with pytest.raises(ParameterError):
            superadditivity_terms(sample_brownian(10, 0.1, 0), 0.0, 0.5)
