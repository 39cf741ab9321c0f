"""CLI surface: subcommands, exit codes, flag/environment precedence."""

import json

from monitored_mps.cli import _resolve_workers, main
from monitored_mps.harness import fit_scaling


def write_spec(tmp_path, **overrides):
    doc = {
        "sweep": {"n_qubits": [4], "theta": ["pi/3"], "p": [1.0], "chi_max": [16]},
        "cutoff": 1e-8,
        "t_max": 2,
        "t_cutoff": 1,
        "n_trajectories": 2,
        "master_seed": 9,
        "output_dir": str(tmp_path / "out"),
        "workers": 1,
    }
    doc.update(overrides)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    return path


class TestRun:
    def test_run_writes_outputs_and_exits_zero(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        assert main(["run", "--spec", str(spec)]) == 0
        out_dir = tmp_path / "out"
        assert list(out_dir.glob("raw_*.csv"))
        assert list(out_dir.glob("stats_*.json"))
        assert "S_inf" in capsys.readouterr().out

    def test_output_dir_override(self, tmp_path):
        spec = write_spec(tmp_path)
        override = tmp_path / "elsewhere"
        assert main(["run", "--spec", str(spec), "--output-dir", str(override)]) == 0
        assert list(override.glob("raw_*.csv"))

    def test_master_seed_override_changes_results(self, tmp_path):
        spec = write_spec(tmp_path)
        main(["run", "--spec", str(spec), "--output-dir", str(tmp_path / "a")])
        main(["run", "--spec", str(spec), "--output-dir", str(tmp_path / "b"),
              "--master-seed", "123"])
        raw_a = next((tmp_path / "a").glob("raw_*.csv")).read_text()
        raw_b = next((tmp_path / "b").glob("raw_*.csv")).read_text()
        assert raw_a != raw_b


class TestSweepCommand:
    def test_sweep_runs(self, tmp_path, capsys):
        rc = main(
            [
                "sweep", "--n", "4", "--theta", "pi/2", "--p", "1.0", "--chi", "8",
                "--t-max", "2", "--t-cutoff", "1", "--n-traj", "2", "--seed", "3",
                "--output-dir", str(tmp_path), "-j", "1",
            ]
        )
        assert rc == 0
        assert "S_inf = 0.0000" in capsys.readouterr().out  # projective angle


class TestOracleCheck:
    def test_passes(self, capsys):
        assert main(["oracle-check", "--cases", "10", "--max-n", "5", "--seed", "4"]) == 0
        assert "PASS" in capsys.readouterr().out


class TestChiScanCommand:
    def test_scan_writes_summary(self, tmp_path, capsys):
        rc = main(
            [
                "chi-scan", "--n", "4", "--theta", "pi/3", "--chi", "4,8",
                "--t-max", "2", "--t-cutoff", "1", "--n-traj", "2", "--seed", "5",
                "--output-dir", str(tmp_path), "-j", "1",
            ]
        )
        assert rc == 0
        summary = next(tmp_path.glob("chi_scan_*.json"))
        doc = json.loads(summary.read_text())
        assert doc["chi"] == [4, 8]
        assert len(doc["s_inf"]) == 2


class TestFitCommand:
    def test_fit_output_matches_fit_scaling_exactly(self, tmp_path, capsys):
        # synthetic stats files for three sizes
        points = []
        for i, (n, s_inf) in enumerate([(8, 1.0), (12, 1.5), (16, 1.8)]):
            stats = {
                "config_id": f"c{n}",
                "n_qubits": n,
                "theta": 1.0471975511965976,
                "theta_label": "pi/3",
                "p": 1.0,
                "chi_max": 64,
                "n_trajectories": 10,
                "n_failed": 0,
                "times": [1],
                "mean_s": [s_inf],
                "std_s": [0.1],
                "sem_s": [0.03],
                "s_inf": s_inf,
                "s_inf_sem": 0.03,
                "peak_bond": 8,
                "wall_time": 0.0,
                "failed": False,
            }
            path = tmp_path / f"stats_c{n}.json"
            path.write_text(json.dumps(stats))
            points.append((float(n), s_inf, 0.03))
        out = tmp_path / "fit.json"
        rc = main(
            ["fit"]
            + [str(tmp_path / f"stats_c{n}.json") for n in (8, 12, 16)]
            + ["--model", "log", "--output", str(out)]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        expected = fit_scaling(points, "log")
        assert doc["pi/3"]["slope"] == expected.slope
        assert doc["pi/3"]["intercept"] == expected.intercept
        assert doc["pi/3"]["residuals"] == expected.residuals


class TestWorkerResolution:
    def test_flag_wins_over_environment(self, monkeypatch):
        monkeypatch.setenv("MONITORED_MPS_MAX_WORKERS", "2")
        assert _resolve_workers(8, 1) == 8

    def test_environment_caps_configured_value(self, monkeypatch):
        monkeypatch.setenv("MONITORED_MPS_MAX_WORKERS", "2")
        assert _resolve_workers(None, 8) == 2

    def test_no_env_uses_configured(self, monkeypatch):
        monkeypatch.delenv("MONITORED_MPS_MAX_WORKERS", raising=False)
        assert _resolve_workers(None, 3) == 3
