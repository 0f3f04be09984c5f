import json

import pytest

from load_config import CONFIGS_DIR
from runner import EXIT_BAD_CONFIG, EXIT_CHECK_FAILED, EXIT_IO, EXIT_OK, main

TINY = {
    "family": "brownian",
    "dt": 0.0625,
    "n_steps": 16,
    "T_grid": [1, 2, 4],
    "n_replicas": 100,
    "n_sim_replicas": 2,
    "master_seed": 3,
    "molchan_T_grid": [4, 8],
    "molchan_dt": 0.0625,
    "n_molchan_replicas": 20,
    "n_tail_replicas": 50,
    "n_ks_replicas": 20,
    "ks_dt": 0.0625,
    "n_check_paths": 2,
    "n_slepian_paths": 1,
    "n_slepian_sceneries": 20,
    "shards": 2,
}


@pytest.fixture
def write_config(tmp_path):
    def write(**overrides):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({**TINY, "out_dir": str(tmp_path / "out"), **overrides}))
        return str(path)
    return write


class TestSimulate:
    def test_writes_three_files_per_replica(self, write_config, tmp_path):
        assert main(["simulate", "--config", write_config()]) == EXIT_OK
        out = tmp_path / "out"
        assert sorted(p.name for p in out.iterdir()) == [
            "replica_0000_delta.csv",
            "replica_0000_local_time.csv",
            "replica_0000_path.csv",
            "replica_0001_delta.csv",
            "replica_0001_local_time.csv",
            "replica_0001_path.csv",
        ]
        assert (out / "replica_0000_path.csv").read_text().splitlines()[0] == "t,y"
        assert (out / "replica_0000_local_time.csv").read_text().splitlines()[0] == "t,x,L"
        assert (out / "replica_0000_delta.csv").read_text().splitlines()[0] == "t,delta,running_sup,cond_var"
        assert len((out / "replica_0000_path.csv").read_text().splitlines()) == 18

    def test_reruns_are_byte_identical(self, write_config, tmp_path):
        config = write_config()
        main(["simulate", "--config", config, "--out", str(tmp_path / "a")])
        main(["simulate", "--config", config, "--out", str(tmp_path / "b"), "--workers", "2"])
        for p in (tmp_path / "a").iterdir():
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()

    def test_seed_override_changes_output(self, write_config, tmp_path):
        config = write_config()
        main(["simulate", "--config", config, "--out", str(tmp_path / "a")])
        main(["simulate", "--config", config, "--out", str(tmp_path / "b"), "--seed", "4"])
        name = "replica_0000_path.csv"
        assert (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes()


class TestExitCodes:
    def test_zero_replicas(self, write_config):
        assert main(["simulate", "--config", write_config(n_replicas=0)]) == EXIT_BAD_CONFIG
        assert main(["simulate", "--config", write_config(n_sim_replicas=0)]) == EXIT_BAD_CONFIG

    def test_persistence_budget_checked_at_load(self, write_config, tmp_path, capsys):
        assert main(["simulate", "--config", write_config(n_replicas=50)]) == EXIT_BAD_CONFIG
        assert "n_replicas" in capsys.readouterr().out
        assert not (tmp_path / "out").exists()

    def test_stability_index_out_of_range(self, write_config, capsys):
        assert main(["persistence", "--config", write_config(family="stable_levy", delta=0.5)]) == EXIT_BAD_CONFIG
        assert "delta" in capsys.readouterr().out

    def test_missing_config(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == EXIT_IO

    def test_output_is_a_file(self, write_config, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        assert main(["simulate", "--config", write_config(), "--out", str(blocker)]) == EXIT_IO

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            main([])


class TestCampaigns:
    def test_persistence_summary(self, write_config, tmp_path, capsys):
        code = main(["persistence", "--config", write_config(n_replicas=200)])
        assert code in (EXIT_OK, EXIT_CHECK_FAILED)
        summary = json.loads((tmp_path / "out" / "persistence_summary.json").read_text())
        assert summary["expected_exponent"] == -0.25
        assert summary["gamma"] == 0.5
        assert summary["schema_version"] == 1
        assert summary["config"]["n_replicas"] == 200
        header = (tmp_path / "out" / "persistence.csv").read_text().splitlines()[0]
        assert header == "T,F_hat,ci_lo,ci_hi,survivors,n_replicas"
        assert "=== Summary ===" in capsys.readouterr().out

    def test_molchan_tables(self, write_config, tmp_path):
        main(["molchan", "--config", write_config()])
        summary = json.loads((tmp_path / "out" / "molchan_summary.json").read_text())
        assert summary["h"] == 0.75
        assert "consistency" in summary
        assert (tmp_path / "out" / "molchan.csv").exists()

    @pytest.mark.slow
    def test_unreachable_barrier_fails_validation(self, write_config, tmp_path):
        code = main(["validate", "--config", write_config(barrier=-1e9)])
        assert code == EXIT_CHECK_FAILED
        report = json.loads((tmp_path / "out" / "validation_report.json").read_text())
        assert "persistence" in report["failures"]
        names = [c["name"] for c in report["checks"]]
        assert "conditional_maximal_inequality" in names
        conditional = next(c for c in report["checks"] if c["name"] == "conditional_maximal_inequality")
        assert conditional["n_paths"] == 3
        persistence = next(c for c in report["checks"] if c["name"] == "persistence")
        assert persistence["fitted_slope"] is None
        assert persistence["flags"]
        assert any(flag.startswith("persistence: ") for flag in report["flags"])

    @pytest.mark.slow
    def test_smoke_config_runs_every_check(self, tmp_path):
        # smoke budgets are too small for the persistence and Molchan verdicts
        code = main(["validate", "--config", str(CONFIGS_DIR / "smoke.json"), "--out", str(tmp_path / "smoke")])
        assert code in (EXIT_OK, EXIT_CHECK_FAILED)
        report = json.loads((tmp_path / "smoke" / "validation_report.json").read_text())
        checks = {c["name"]: c for c in report["checks"]}
        assert list(checks) == [
            "exact_properties",
            "occupation_density",
            "pathwise_inequalities",
            "maximal_inequality",
            "conditional_maximal_inequality",
            "slepian",
            "identities",
            "tails",
            "persistence",
            "molchan",
        ]
        assert checks["exact_properties"]["passed"]
        assert all("error" not in c for c in checks.values())
        assert set(report["failures"]) <= {"persistence", "molchan"}
