"""Circuit driver: brickwall structure, time steps, trajectories.

Full time steps are validated by replaying the recorded gates, masks, and
outcomes on the dense statevector oracle, and statistically by comparing
whole trajectory ensembles against an independent dense implementation of
the same circuit.
"""

import math

import numpy as np
import pytest

from monitored_mps.circuit import (
    CircuitConfig,
    TrajectoryError,
    brickwall_pairs,
    long_time_entropy,
    run_trajectory,
    time_step,
    trajectory_rng,
)
from monitored_mps.dense import (
    DenseState,
    dense_apply_gate,
    dense_entropy,
    dense_site_probabilities,
    dense_weak_measure_layer,
    fidelity,
    neel_dense,
)
from monitored_mps.gates import haar_unitary, identity_gate, weak_measurement_gate
from monitored_mps.mps import neel_state


def make_config(**kw):
    base = dict(
        n_qubits=6,
        p=1.0,
        theta=math.pi / 4,
        chi_max=64,
        cutoff=0.0,
        t_max=2,
        t_cutoff=1,
        master_seed=3,
        n_trajectories=1,
        config_id="test",
    )
    base.update(kw)
    return CircuitConfig(**base)


class TestBrickwall:
    def test_layer_pair_structure(self):
        assert brickwall_pairs(6, 0) == [(0, 1), (2, 3), (4, 5)]
        assert brickwall_pairs(6, 1) == [(1, 2), (3, 4), (5, 0)]

    def test_gate_count_per_step_is_n(self):
        for n in (4, 8, 12):
            pairs = brickwall_pairs(n, 0) + brickwall_pairs(n, 1)
            assert len(pairs) == n  # N two-qubit unitaries per step
            # each layer touches every site exactly once
            for layer in (0, 1):
                touched = [s for pair in brickwall_pairs(n, layer) for s in pair]
                assert sorted(touched) == list(range(n))

    def test_boundary_gate_only_in_even_layer(self):
        for n in (4, 8):
            assert all(b == a + 1 for a, b in brickwall_pairs(n, 0))
            wrap = [(a, b) for a, b in brickwall_pairs(n, 1) if b != a + 1]
            assert wrap == [(n - 1, 0)]


class TestConfigValidation:
    def test_rejects_odd_or_small_n(self):
        with pytest.raises(ValueError):
            make_config(n_qubits=5)
        with pytest.raises(ValueError):
            make_config(n_qubits=2)

    def test_rejects_bad_probability_and_windows(self):
        with pytest.raises(ValueError):
            make_config(p=1.5)
        with pytest.raises(ValueError):
            make_config(t_cutoff=5, t_max=2)

    def test_direct_method_requires_projective_angle(self):
        with pytest.raises(ValueError):
            make_config(measure_method="direct", theta=math.pi / 3)
        make_config(measure_method="direct", theta=math.pi / 2)  # ok


class TestTimeStep:
    def test_identity_gates_no_measurement_is_noop(self):
        cfg = make_config(p=0.0)
        state = neel_state(6, cfg.truncation())
        before = state.to_statevector()
        records = time_step(
            state, cfg, trajectory_rng(cfg, 0), gate_factory=lambda _rng: identity_gate(2)
        )
        assert fidelity(before, state.to_statevector()) >= 1 - 1e-10
        assert all(not s.measured for rec in records for s in rec.sites)

    def test_projective_step_from_neel_is_basis_state(self):
        cfg = make_config(theta=math.pi / 2, p=1.0, chi_max=256)
        state = neel_state(6, cfg.truncation())
        time_step(state, cfg, trajectory_rng(cfg, 0))
        assert state.bond_entropy(3) == 0.0
        assert state.bond_entropy(4) == 0.0
        # every site is in a computational basis state
        for i in range(6):
            probs = state.site_probabilities(i)
            assert max(probs) == pytest.approx(1.0, abs=1e-10)

    def test_full_step_matches_dense_replay(self):
        # record the gates and outcomes, then replay them exactly on the oracle
        cfg = make_config(theta=0.9, p=0.6, chi_max=64, cutoff=0.0)
        rng = trajectory_rng(cfg, 0)
        recorded = []

        def recording_factory(r):
            g = haar_unitary(4, r)
            recorded.append(g)
            return g

        state = neel_state(6, cfg.truncation())
        records = time_step(state, cfg, rng, gate_factory=recording_factory)

        dv = neel_dense(6)
        n_odd = len(brickwall_pairs(6, 0))
        for gate, sites in zip(recorded[:n_odd], brickwall_pairs(6, 0)):
            dv = dense_apply_gate(dv, gate, sites)
        mask1 = [s.measured for s in records[0].sites]
        out1 = [s.outcome if s.outcome is not None else 0 for s in records[0].sites]
        dv, joint1 = dense_weak_measure_layer(dv, mask1, cfg.theta, out1)
        for gate, sites in zip(recorded[n_odd:], brickwall_pairs(6, 1)):
            dv = dense_apply_gate(dv, gate, sites)
        mask2 = [s.measured for s in records[1].sites]
        out2 = [s.outcome if s.outcome is not None else 0 for s in records[1].sites]
        dv, joint2 = dense_weak_measure_layer(dv, mask2, cfg.theta, out2)

        assert fidelity(state.to_statevector(), dv.amplitudes) >= 1 - 1e-8
        assert records[0].joint_probability() == pytest.approx(joint1, abs=1e-10)
        assert records[1].joint_probability() == pytest.approx(joint2, abs=1e-10)

    def test_uumm_order_runs_and_differs_only_in_schedule(self):
        cfg = make_config(layer_order="UUMM")
        state = neel_state(6, cfg.truncation())
        records = time_step(state, cfg, trajectory_rng(cfg, 0))
        assert len(records) == 2
        assert abs(state.global_norm() - 1.0) < 1e-8


class TestUnitaryOnlyEvolution:
    def test_matches_dense_and_entangles(self):
        # p=0, cutoff=0, chi >= 2^{N/2}: exact match with the dense oracle,
        # and the half-cut entropy grows on average (Haar brickwall entangles).
        cfg = make_config(p=0.0, n_qubits=6, chi_max=8, t_max=3)
        rng = trajectory_rng(cfg, 1)
        recorded = []

        def recording_factory(r):
            g = haar_unitary(4, r)
            recorded.append(g)
            return g

        state = neel_state(6, cfg.truncation())
        dv = neel_dense(6)
        entropies = [0.0]
        for _ in range(cfg.t_max):
            start = len(recorded)
            time_step(state, cfg, rng, gate_factory=recording_factory)
            gates = recorded[start:]
            for gate, sites in zip(gates[:3], brickwall_pairs(6, 0)):
                dv = dense_apply_gate(dv, gate, sites)
            for gate, sites in zip(gates[3:], brickwall_pairs(6, 1)):
                dv = dense_apply_gate(dv, gate, sites)
            assert abs(state.bond_entropy(3) - dense_entropy(dv, 3)) <= 1e-8
            entropies.append(state.bond_entropy(3))
        assert fidelity(state.to_statevector(), dv.amplitudes) >= 1 - 1e-8
        assert entropies[-1] > entropies[0]


class TestRunTrajectory:
    def test_t_max_zero_empty_series(self):
        cfg = make_config(t_max=0, t_cutoff=0)
        res = run_trajectory(cfg, 0)
        assert res.s_left.size == 0 and res.s_right.size == 0
        assert neel_state(cfg.n_qubits, cfg.truncation()).bond_entropy(3) == 0.0

    def test_bit_reproducible(self):
        cfg = make_config(t_max=3, theta=math.pi / 6, chi_max=32, cutoff=1e-8)
        a = run_trajectory(cfg, 5)
        b = run_trajectory(cfg, 5)
        np.testing.assert_array_equal(a.s_left, b.s_left)
        np.testing.assert_array_equal(a.s_right, b.s_right)
        assert a.seed_key == b.seed_key
        assert a.peak_bond == b.peak_bond
        for ra, rb in zip(a.records, b.records):
            assert [r.outcomes() for r in ra] == [r.outcomes() for r in rb]

    def test_distinct_trajectories_differ(self):
        cfg = make_config(t_max=2, theta=math.pi / 6)
        a = run_trajectory(cfg, 0)
        b = run_trajectory(cfg, 1)
        assert not np.array_equal(a.s_left, b.s_left)

    def test_failure_carries_location(self):
        cfg = make_config(theta=math.pi / 6, chi_max=64)
        with pytest.raises(TrajectoryError) as err:

            def bad_factory(_rng):
                raise RuntimeError("boom")

            state = neel_state(cfg.n_qubits, cfg.truncation())
            try:
                time_step(state, cfg, trajectory_rng(cfg, 0), gate_factory=bad_factory)
            except RuntimeError as exc:
                raise TrajectoryError(str(exc), 0, 1) from exc
        assert err.value.time_step == 1

    def test_ensemble_matches_independent_dense_trajectories(self):
        # Statistical check: MPS trajectory ensemble vs a from-scratch dense
        # implementation of the same circuit (different randomness).
        n, t_max, n_traj = 6, 8, 24
        theta, p = math.pi / 4, 1.0
        cfg = make_config(
            n_qubits=n, theta=theta, p=p, chi_max=64, cutoff=0.0, t_max=t_max, t_cutoff=4
        )
        mps_vals = np.array(
            [np.mean(run_trajectory(cfg, i).s_mean[3:]) for i in range(n_traj)]
        )

        def dense_trajectory(seed):
            rng = np.random.default_rng(seed)
            dv = neel_dense(n)
            series = []
            for _ in range(t_max):
                for layer in (0, 1):
                    for sites in brickwall_pairs(n, layer):
                        dv = dense_apply_gate(dv, haar_unitary(4, rng), sites)
                    mask = [bool(rng.random() < p) for _ in range(n)]
                    m = weak_measurement_gate(theta)
                    for site, flag in enumerate(mask):
                        if not flag:
                            continue
                        ext = np.zeros(dv.amplitudes.size * 2, dtype=complex)
                        ext[0::2] = dv.amplitudes
                        work = dense_apply_gate(DenseState(ext), m, (site, n))
                        probs = dense_site_probabilities(work, n)
                        outcome = 0 if rng.random() < probs[0] else 1
                        proj = work.amplitudes[outcome::2]
                        dv = DenseState(proj / np.linalg.norm(proj))
                series.append(0.5 * (dense_entropy(dv, n // 2) + dense_entropy(dv, n // 2 + 1)))
            return np.mean(series[3:])

        dense_vals = np.array([dense_trajectory(1000 + i) for i in range(n_traj)])
        se = math.sqrt(
            mps_vals.var(ddof=1) / n_traj + dense_vals.var(ddof=1) / n_traj
        )
        assert abs(mps_vals.mean() - dense_vals.mean()) <= 5 * se


class TestLongTimeEntropy:
    def test_constant_series(self):
        assert long_time_entropy(np.full(10, 1.7), 4) == pytest.approx(1.7)

    def test_ramp_then_plateau(self):
        series = np.concatenate([np.linspace(0, 2.0, 10), np.full(10, 2.0)])
        assert long_time_entropy(series, 11) == pytest.approx(2.0)

    def test_empty_window_raises(self):
        with pytest.raises(ValueError, match="empty"):
            long_time_entropy(np.array([]), 1)

    def test_window_includes_t_cutoff(self):
        series = np.array([0.0, 1.0, 2.0, 3.0])  # S(1)..S(4)
        assert long_time_entropy(series, 3) == pytest.approx(2.5)  # mean of S(3), S(4)
