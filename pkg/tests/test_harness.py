"""Harness: spec parsing, file schemas, statistics, fits, chi scans."""

import json
import math

import numpy as np
import pytest

from monitored_mps.circuit import CircuitConfig, seed_key
from monitored_mps.harness import (
    EnsembleStats,
    ExperimentSpec,
    aggregate,
    build_sweep,
    chi_convergence_scan,
    fit_scaling,
    load_spec,
    load_stats,
    make_config_id,
    parse_theta,
    read_raw,
    run_experiment,
)


def small_configs(**kw):
    args = dict(
        cutoff=1e-8, t_max=2, t_cutoff=1, n_trajectories=2, master_seed=11
    )
    args.update(kw)
    return build_sweep([4], ["pi/3"], [1.0], [16], **args)


class TestParseTheta:
    @pytest.mark.parametrize(
        "text,value,label",
        [
            ("pi/2", math.pi / 2, "pi/2"),
            ("pi/6", math.pi / 6, "pi/6"),
            ("pi", math.pi, "pi"),
            ("2pi/3", 2 * math.pi / 3, "2pi/3"),
            ("2*pi/3", 2 * math.pi / 3, "2pi/3"),
        ],
    )
    def test_pi_fractions(self, text, value, label):
        theta, got_label = parse_theta(text)
        assert theta == pytest.approx(value, abs=1e-15)
        assert got_label == label

    def test_plain_number(self):
        theta, label = parse_theta(0.7)
        assert theta == 0.7
        assert float(label) == 0.7

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_theta("two pi")


class TestSpecFiles:
    def _doc(self, tmp_path, **overrides):
        doc = {
            "sweep": {"n_qubits": [4], "theta": ["pi/3"], "p": [1.0], "chi_max": [16]},
            "cutoff": 1e-8,
            "t_max": 2,
            "t_cutoff": 1,
            "n_trajectories": 2,
            "master_seed": 1,
            "output_dir": str(tmp_path / "out"),
            "workers": 2,
        }
        doc.update(overrides)
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(doc))
        return path

    def test_round_trip(self, tmp_path):
        spec = load_spec(self._doc(tmp_path))
        assert len(spec.configs) == 1
        cfg = spec.configs[0]
        assert cfg.theta_label == "pi/3"
        assert cfg.config_id == make_config_id(4, "pi/3", 1.0, 16)
        assert spec.workers == 2

    def test_unknown_top_level_key_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown spec keys"):
            load_spec(self._doc(tmp_path, typo_key=1))

    def test_unknown_sweep_key_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown sweep keys"):
            load_spec(
                self._doc(
                    tmp_path,
                    sweep={
                        "n_qubits": [4],
                        "theta": ["pi/3"],
                        "p": [1.0],
                        "chi_max": [16],
                        "chimax": [8],
                    },
                )
            )

    def test_missing_key_rejected(self, tmp_path):
        doc = {
            "sweep": {"n_qubits": [4], "theta": ["pi/3"], "p": [1.0], "chi_max": [16]},
            "t_max": 2,
            "t_cutoff": 1,
            "master_seed": 1,
            "output_dir": "x",
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="missing spec keys"):
            load_spec(path)

    def test_duplicate_config_ids_rejected(self):
        cfgs = small_configs()
        with pytest.raises(ValueError, match="distinct"):
            ExperimentSpec(configs=cfgs + cfgs, output_dir="x")


class TestRunExperiment:
    def test_bookkeeping_and_roundtrip(self, tmp_path):
        configs = small_configs()
        spec = ExperimentSpec(configs=configs, output_dir=tmp_path, workers=1)
        stats = run_experiment(spec)
        cid = configs[0].config_id
        s = stats[cid]
        assert s.n_trajectories == 2
        assert s.times == [1, 2]
        assert len(s.mean_s) == 2

        raw_path = tmp_path / f"raw_{cid}.csv"
        rows = raw_path.read_text().strip().split("\n")
        assert rows[0] == "config_id,trajectory,t,S_cut_left,S_cut_right,S_mean"
        assert len(rows) == 1 + 2 * 2  # header + n_traj * t_max

        # stats file reproduces the dataclass exactly
        assert load_stats(tmp_path / f"stats_{cid}.json") == s

        # aggregated mean equals the arithmetic mean of raw rows, exactly
        parsed = read_raw(raw_path)
        series = np.stack([parsed[i][:, 3] for i in sorted(parsed)])
        np.testing.assert_array_equal(series.mean(axis=0), np.array(s.mean_s))
        # and each raw S_mean column is the average of the two cuts
        for traj in parsed.values():
            np.testing.assert_array_equal(traj[:, 3], 0.5 * (traj[:, 1] + traj[:, 2]))

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        configs = small_configs(n_trajectories=3)
        cid = configs[0].config_id
        run_experiment(ExperimentSpec(configs=configs, output_dir=tmp_path / "a", workers=1))
        run_experiment(ExperimentSpec(configs=configs, output_dir=tmp_path / "b", workers=2))
        raw_a = (tmp_path / "a" / f"raw_{cid}.csv").read_bytes()
        raw_b = (tmp_path / "b" / f"raw_{cid}.csv").read_bytes()
        assert raw_a == raw_b
        rec_a = (tmp_path / "a" / f"records_{cid}_t0001.txt").read_bytes()
        rec_b = (tmp_path / "b" / f"records_{cid}_t0001.txt").read_bytes()
        assert rec_a == rec_b

    def test_record_file_schema(self, tmp_path):
        configs = small_configs(n_trajectories=1)
        cid = configs[0].config_id
        run_experiment(ExperimentSpec(configs=configs, output_dir=tmp_path, workers=1))
        lines = (tmp_path / f"records_{cid}_t0000.txt").read_text().strip().split("\n")
        assert len(lines) == 2 * 2  # t_max steps x two layers
        t, layer, *triples = lines[0].split(" ")
        assert (t, layer) == ("1", "0")
        assert len(triples) == 4
        for triple in triples:
            measured, outcome, prob = triple.split(":")
            assert measured in ("0", "1")
            if measured == "1":
                assert outcome in ("0", "1")
                assert 0.0 <= float(prob) <= 1.0
            else:
                assert (outcome, prob) == ("-", "-")


class TestAggregate:
    def _results(self, cfg, values):
        from monitored_mps.circuit import TrajectoryResult

        out = []
        for i, v in enumerate(values):
            arr = np.asarray(v, dtype=float)
            out.append(
                TrajectoryResult(
                    config_id=cfg.config_id,
                    trajectory_index=i,
                    seed_key=seed_key(cfg, i),
                    s_left=arr,
                    s_right=arr,
                    records=[],
                    peak_bond=2,
                )
            )
        return out

    def test_statistics_definitions(self):
        cfg = small_configs(t_max=3, t_cutoff=2, n_trajectories=2)[0]
        results = self._results(cfg, [[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]])
        stats = aggregate(cfg, results, n_failed=0, wall_time=0.0)
        assert stats.mean_s == [2.0, 2.0, 2.0]
        # per-trajectory window means (t >= 2): 2.5 and 1.5
        assert stats.s_inf == pytest.approx(2.0)
        assert stats.s_inf_sem == pytest.approx(
            np.std([2.5, 1.5], ddof=1) / math.sqrt(2)
        )
        assert stats.std_s[0] == pytest.approx(np.std([1.0, 3.0], ddof=1))
        assert not stats.failed

    def test_single_trajectory_has_no_sem(self):
        cfg = small_configs(n_trajectories=1)[0]
        stats = aggregate(cfg, self._results(cfg, [[1.0, 2.0]]), 0, 0.0)
        assert stats.sem_s is None and stats.s_inf_sem is None

    def test_failure_budget(self):
        cfg = small_configs(n_trajectories=2)[0]
        results = self._results(cfg, [[1.0, 2.0]])
        assert aggregate(cfg, results, n_failed=1, wall_time=0.0).failed
        assert not aggregate(cfg, results, n_failed=0, wall_time=0.0).failed


class TestFitScaling:
    def test_exact_log_data(self):
        points = [(n, 2.0 + 3.0 * math.log(n), 0.1) for n in (8, 12, 16, 20)]
        fit = fit_scaling(points, "log")
        assert fit.slope == pytest.approx(3.0, abs=1e-10)
        assert fit.intercept == pytest.approx(2.0, abs=1e-10)
        assert max(abs(r) for r in fit.residuals) < 1e-10

    def test_exact_linear_data(self):
        points = [(n, 0.5 * n, 0.1) for n in (8, 12, 16)]
        fit = fit_scaling(points, "linear")
        assert fit.slope == pytest.approx(0.5, abs=1e-10)
        assert fit.intercept == pytest.approx(0.0, abs=1e-10)

    def test_weighting_prefers_precise_points(self):
        # outlier with a huge error bar should barely move the fit
        points = [(8, 4.0, 1e-3), (12, 6.0, 1e-3), (16, 8.0, 1e-3), (20, 50.0, 1e3)]
        fit = fit_scaling(points, "linear")
        assert fit.slope == pytest.approx(0.5, abs=1e-3)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="3 points"):
            fit_scaling([(8, 1.0, 0.1), (12, 2.0, 0.1)], "log")

    def test_degenerate_design(self):
        with pytest.raises(ValueError, match="degenerate"):
            fit_scaling([(8, 1.0, 0.1), (8, 2.0, 0.1), (8, 3.0, 0.1)], "log")

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            fit_scaling([(8, 1.0, 0.1)] * 3, "quadratic")

    def test_slope_stderr_positive(self):
        points = [(n, 0.5 * n + 0.01 * (-1) ** n, 0.05) for n in (8, 12, 16, 20)]
        fit = fit_scaling(points, "linear")
        assert fit.slope_stderr() > 0


class TestChiScan:
    def test_chi_one_forces_product_states(self, tmp_path):
        base = CircuitConfig(
            n_qubits=4,
            p=1.0,
            theta=math.pi / 4,
            chi_max=8,
            cutoff=0.0,
            t_max=2,
            t_cutoff=1,
            master_seed=5,
            n_trajectories=2,
            config_id="scan_test",
        )
        scan = chi_convergence_scan(base, [1, 8], tmp_path, workers=1)
        chi1 = dict((c, s) for c, s, _ in scan)
        assert chi1[1] == 0.0  # a single Schmidt value carries no entanglement

    def test_identical_seeds_across_chis(self, tmp_path):
        base = CircuitConfig(
            n_qubits=4,
            p=1.0,
            theta=math.pi / 3,
            chi_max=16,
            cutoff=0.0,
            t_max=2,
            t_cutoff=1,
            master_seed=5,
            n_trajectories=2,
            config_id="seeds_test",
        )
        # chi values large enough to be exact at N=4 must agree exactly
        scan = chi_convergence_scan(base, [4, 8, 16], tmp_path, workers=2)
        values = [s for _, s, _ in scan]
        assert values[0] == values[1] == values[2]
        doc = json.loads((tmp_path / "chi_scan_seeds_test.json").read_text())
        assert doc["chi"] == [4, 8, 16]
        assert doc["s_inf"] == values

    def test_seed_key_shared(self):
        from dataclasses import replace

        base = small_configs()[0]
        derived = replace(base, chi_max=4, config_id=base.config_id + "_chi4", seed_id=base.config_id)
        assert seed_key(base, 3) == seed_key(derived, 3)
