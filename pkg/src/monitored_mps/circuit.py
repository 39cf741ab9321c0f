"""Brickwall circuit assembly and full-trajectory execution.

One time step is two brickwall layers of fresh Haar-random two-qubit
unitaries and two measurement layers.  Odd bonds are (0,1), (2,3), ...;
even bonds are (1,2), (3,4), ..., (N-1,0), with the periodic boundary gate
realized through swap chains.  The default intra-step order is
unitaries(odd), measure, unitaries(even), measure ("UMUM"); "UUMM" applies
both unitary layers first.

Entropies are recorded after each complete step at the two central cuts
N/2 and N/2+1, on the same state, and averaged downstream.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .gates import haar_unitary
from .mps import MpsState, TruncationParams, neel_state
from .sampler import (
    LayerPlan,
    MeasurementRecord,
    SiteOutcome,
    born_projective_measure,
    sample_measurement_layer,
)

LAYER_ORDERS = ("UMUM", "UUMM")
MEASURE_METHODS = ("sweep", "direct")


@dataclass
class CircuitConfig:
    """Everything needed to reproduce one ensemble bit-for-bit."""

    n_qubits: int
    p: float
    theta: float
    chi_max: int
    cutoff: float
    t_max: int
    t_cutoff: int
    master_seed: int
    n_trajectories: int
    layer_order: str = "UMUM"
    measure_method: str = "sweep"
    config_id: str = "cfg"
    theta_label: str | None = None
    # When set, seeds derive from this id instead of config_id, so several
    # configs (e.g. a bond-dimension scan) can share identical trajectories.
    seed_id: str | None = None

    def __post_init__(self) -> None:
        if self.n_qubits < 4 or self.n_qubits % 2 != 0:
            raise ValueError("n_qubits must be even and >= 4")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("measurement probability must be in [0, 1]")
        if self.chi_max < 1:
            raise ValueError("chi_max must be >= 1")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        if self.t_max < 0 or self.t_cutoff < 0 or self.t_cutoff > self.t_max:
            raise ValueError("need 0 <= t_cutoff <= t_max")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.layer_order not in LAYER_ORDERS:
            raise ValueError(f"layer_order must be one of {LAYER_ORDERS}")
        if self.measure_method not in MEASURE_METHODS:
            raise ValueError(f"measure_method must be one of {MEASURE_METHODS}")
        if self.measure_method == "direct" and abs(self.theta - pi / 2) > 1e-12:
            raise ValueError("direct (projective) readout is only valid at theta = pi/2")

    def truncation(self) -> TruncationParams:
        return TruncationParams(chi_max=self.chi_max, cutoff=self.cutoff)


@dataclass
class TrajectoryResult:
    """Per-step entropy time series plus the full measurement history."""

    config_id: str
    trajectory_index: int
    seed_key: tuple[int, int, int]
    s_left: np.ndarray
    s_right: np.ndarray
    records: list[list[MeasurementRecord]] = field(default_factory=list)
    peak_bond: int = 1

    @property
    def s_mean(self) -> np.ndarray:
        return 0.5 * (self.s_left + self.s_right)


class TrajectoryError(RuntimeError):
    def __init__(self, message: str, trajectory_index: int, time_step: int):
        super().__init__(f"trajectory {trajectory_index}, step {time_step}: {message}")
        self.trajectory_index = trajectory_index
        self.time_step = time_step


def brickwall_pairs(n: int, layer: int) -> list[tuple[int, int]]:
    """Site pairs of one brickwall layer; layer 1 wraps around the boundary."""
    if layer == 0:
        return [(i, i + 1) for i in range(0, n - 1, 2)]
    return [(i, (i + 1) % n) for i in range(1, n, 2)]


def config_salt(config_id: str) -> int:
    """Stable 64-bit hash of the config id, mixed into every seed."""
    return int.from_bytes(hashlib.sha256(config_id.encode()).digest()[:8], "big")


def seed_key(config: CircuitConfig, trajectory_index: int) -> tuple[int, int, int]:
    return (
        config.master_seed,
        config_salt(config.seed_id or config.config_id),
        trajectory_index,
    )


def trajectory_rng(config: CircuitConfig, trajectory_index: int) -> np.random.Generator:
    """Dedicated stream for one trajectory.

    Seeds are split with numpy's SeedSequence over the key
    (master_seed, hash(config or seed id), trajectory_index), so streams
    are reproducible and non-overlapping regardless of execution order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed_key(config, trajectory_index)))


def _unitary_layer(
    state: MpsState,
    layer: int,
    rng: np.random.Generator,
    gate_factory=None,
) -> None:
    factory = gate_factory or (lambda r: haar_unitary(4, r))
    for a, b in brickwall_pairs(state.n_sites, layer):
        gate = factory(rng)
        if b == a + 1:
            state.apply_two_site_gate(gate, a)
        else:
            state.apply_gate_with_swaps(gate, a, b)


def _measurement_layer(
    state: MpsState, config: CircuitConfig, rng: np.random.Generator
) -> MeasurementRecord:
    plan = LayerPlan.bernoulli(state.n_sites, config.p, config.theta, rng)
    if config.measure_method == "sweep":
        return sample_measurement_layer(state, plan, rng)
    # Direct projective readout of the physical qubits (theta = pi/2 limit).
    record = MeasurementRecord()
    for site, flag in enumerate(plan.measured):
        if flag:
            outcome, prob = born_projective_measure(state, site, rng)
            record.sites.append(SiteOutcome(measured=True, outcome=outcome, probability=prob))
        else:
            record.sites.append(SiteOutcome(measured=False))
    return record


def time_step(
    state: MpsState,
    config: CircuitConfig,
    rng: np.random.Generator,
    gate_factory=None,
) -> list[MeasurementRecord]:
    """Advance the state by one full step; returns the two layer records.

    ``gate_factory(rng) -> GateMatrix`` overrides the Haar sampler (used by
    oracle-replay tests to inject known or recorded gates).
    """
    if config.layer_order == "UMUM":
        _unitary_layer(state, 0, rng, gate_factory)
        first = _measurement_layer(state, config, rng)
        _unitary_layer(state, 1, rng, gate_factory)
        second = _measurement_layer(state, config, rng)
    else:  # UUMM
        _unitary_layer(state, 0, rng, gate_factory)
        _unitary_layer(state, 1, rng, gate_factory)
        first = _measurement_layer(state, config, rng)
        second = _measurement_layer(state, config, rng)
    return [first, second]


def run_trajectory(config: CircuitConfig, trajectory_index: int) -> TrajectoryResult:
    """Run one quantum trajectory from the alternating initial state.

    Bit-reproducible for a fixed (master_seed, config_id, trajectory_index):
    all randomness flows from the trajectory stream in a fixed draw order.
    """
    rng = trajectory_rng(config, trajectory_index)
    state = neel_state(config.n_qubits, config.truncation())
    n = config.n_qubits
    s_left = np.zeros(config.t_max)
    s_right = np.zeros(config.t_max)
    records: list[list[MeasurementRecord]] = []
    peak = 1
    for t in range(1, config.t_max + 1):
        try:
            records.append(time_step(state, config, rng))
            s_left[t - 1] = state.bond_entropy(n // 2)
            s_right[t - 1] = state.bond_entropy(n // 2 + 1)
        except Exception as exc:  # noqa: BLE001 - diagnostics carry (traj, t)
            raise TrajectoryError(str(exc), trajectory_index, t) from exc
        peak = max(peak, state.max_bond())
    key = seed_key(config, trajectory_index)
    return TrajectoryResult(
        config_id=config.config_id,
        trajectory_index=trajectory_index,
        seed_key=key,
        s_left=s_left,
        s_right=s_right,
        records=records,
        peak_bond=peak,
    )


def long_time_entropy(series: np.ndarray, t_cutoff: int) -> float:
    """Mean of S(t) over t >= t_cutoff, with series[i] holding S(t=i+1)."""
    series = np.asarray(series)
    start = max(t_cutoff, 1) - 1
    window = series[start:]
    if window.size == 0:
        raise ValueError(f"empty averaging window: t_cutoff={t_cutoff}, t_max={series.size}")
    return float(np.mean(window))
