"""MPS simulation of monitored quantum circuits with tunable-strength
mid-circuit measurements, sampled in a single sweep per layer."""

from .circuit import CircuitConfig, TrajectoryResult, long_time_entropy, run_trajectory, time_step
from .gates import GateMatrix, GateSequence, haar_unitary, native_decomposition, swap_gate, weak_measurement_gate
from .harness import EnsembleStats, ExperimentSpec, chi_convergence_scan, fit_scaling, run_experiment
from .mps import MpsState, TruncationParams, neel_state
from .sampler import LayerPlan, MeasurementRecord, born_projective_measure, sample_measurement_layer
from .tensor import DenseTensor, SvdResult, contract, qr_decompose, svd_truncated

__all__ = [
    "CircuitConfig",
    "DenseTensor",
    "EnsembleStats",
    "ExperimentSpec",
    "GateMatrix",
    "GateSequence",
    "LayerPlan",
    "MeasurementRecord",
    "MpsState",
    "SvdResult",
    "TrajectoryResult",
    "TruncationParams",
    "born_projective_measure",
    "chi_convergence_scan",
    "contract",
    "fit_scaling",
    "haar_unitary",
    "long_time_entropy",
    "native_decomposition",
    "neel_state",
    "qr_decompose",
    "run_experiment",
    "run_trajectory",
    "sample_measurement_layer",
    "svd_truncated",
    "swap_gate",
    "time_step",
    "weak_measurement_gate",
]
