import numpy as np
import pytest

from errors import ParameterError
from estimators.identities import (
    FEATURES,
    delta_symmetry,
    identity_features,
    identity_suite,
    ks_budget,
    moment_scaling_check,
    stable_reduction_check,
)
from process_gen import sample_fbm
from scenery_objects import ProcessSpec

BROWNIAN = ProcessSpec.brownian()


def _fbm_features(n_replicas, batch):
    # Gaussian stand-in for Delta with index h = 3/4, sampled on t = 0, 0.5, ..., 3
    spec = ProcessSpec.fbm(0.75)
    rows = np.array([sample_fbm(spec, 6, 0.5, 1000 * batch + r).values for r in range(n_replicas)])
    return {"D0.5": rows[:, 1], "D1": rows[:, 2], "D2": rows[:, 4], "D3": rows[:, 6]}


class TestFeatures:
    def test_feature_names(self):
        assert FEATURES[:4] == ["Y1", "Y2", "Y4", "Y16"]
        assert "revY4" in FEATURES and "V4" in FEATURES and "D1.5" in FEATURES
        assert len(FEATURES) == len(set(FEATURES)) == 19

    def test_table(self):
        table = identity_features(BROWNIAN, 5, 1, dt=0.25)
        assert set(table) == set(FEATURES)
        assert all(v.shape == (5,) for v in table.values())
        assert np.all(table["V4"] >= table["V1"])
        # time reversal at T ends at -Y_T
        np.testing.assert_allclose(table["revY4"], -table["Y4"])

    def test_batches_differ(self):
        a = identity_features(BROWNIAN, 5, 1, dt=0.25, batch=0)
        b = identity_features(BROWNIAN, 5, 1, dt=0.25, batch=1)
        assert not np.array_equal(a["Y1"], b["Y1"])

    def test_needs_two_replicas(self):
        with pytest.raises(ParameterError):
            identity_features(BROWNIAN, 1, 1)


class TestChecks:
    def test_budget(self):
        assert ks_budget(20) == 1
        assert ks_budget(21) == 1
        assert ks_budget(40) == 2
        assert ks_budget(3) == 1

    def test_moment_scaling_on_gaussian_increments(self):
        report = moment_scaling_check(BROWNIAN, _fbm_features(3000, 0), _fbm_features(3000, 1))
        assert report["passed"]
        assert report["E_delta1_sq"] == pytest.approx(1.0, rel=0.1)
        for row in report["rows"]:
            assert row["C2"] == pytest.approx(1.0, rel=0.1)

    def test_moment_scaling_detects_wrong_index(self):
        # h = 0.95 under fBm(0.1), against increments of index 3/4
        report = moment_scaling_check(ProcessSpec.fbm(0.1), _fbm_features(3000, 0), _fbm_features(3000, 1))
        assert not report["passed"]

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = {"D1": rng.standard_normal(2000)}, {"D1": rng.standard_normal(2000)}
        assert delta_symmetry(a, b)["passed"]
        assert not delta_symmetry({"D1": a["D1"] + 1.0}, b)["passed"]

    def test_stable_reduction(self):
        assert stable_reduction_check(2000, 11)["passed"]


class TestSuite:
    def test_brownian_schedule(self):
        report = identity_suite(BROWNIAN, 30, 2, dt=0.25, shards=2)
        assert report["n_ks"] == 20
        assert report["ks_budget"] == 1
        assert report["ks_failures"] == sum(not t["passed"] for t in report["ks"])
        reversal = [t for t in report["ks"] if t["name"].startswith("Y time reversal")]
        assert len(reversal) == 3
        assert all(set(t["signs_passed"]) <= {"+", "-"} for t in reversal)
        assert len(report["moment_scaling"]["rows"]) == 3

    def test_stable_adds_reduction(self):
        report = identity_suite(ProcessSpec.stable(1.5), 20, 3, dt=0.25, shards=2)
        assert report["n_ks"] == 21
        assert report["ks"][-1]["name"] == "stable index 2 vs sqrt(2) BM"


@pytest.mark.slow
class TestSuiteAtScale:
    def test_brownian_within_budget(self):
        report = identity_suite(BROWNIAN, 10_000, 2025, workers=4)
        assert report["n_ks"] == 20
        assert report["ks_failures"] <= report["ks_budget"]
        assert report["moment_scaling"]["passed"]
        assert report["passed"]
