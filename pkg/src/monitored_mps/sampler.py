"""Single-sweep sampling of a layer of variable-strength measurements.

Each measured site is coupled to a fresh |0> ancilla by the tunable
unitary from `gates.weak_measurement_gate`; the ancillas are then read out
projectively.  Instead of materializing the ancillas, the sweep walks the
chain left to right once:

  1. put the orthogonality center on site 0;
  2. at a measured site, attach the ancilla index, apply the coupling, and
     keep the modified site tensor for the final projection;
  3. absorb the left environment and contract the modified tensor with its
     conjugate over the physical index, giving a tensor with open ancilla
     and right-link indices;
  4. trace the right links (sites to the right are right-isometric, so
     this is the exact partial trace) and normalize: the result is the
     ancilla's conditional one-particle density matrix, whose diagonal is
     the Born distribution of its readout given all earlier outcomes;
  5. draw (or force) the outcome, then fix both ancilla indices to it and
     renormalize, producing the environment passed to the next site.

Unmeasured sites pass the environment through their transfer matrix.
Environments are kept at unit trace, so each recorded probability is the
exact conditional probability and their product is the joint Born
probability of the record.  After the sweep the stored site tensors are
projected onto the outcomes, the state is renormalized by the square root
of the joint probability, and the center returns to site 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence

import numpy as np

from .gates import weak_measurement_gate
from .mps import MpsState, _link, _phys
from .tensor import DenseTensor, contract, identity_tensor

# Forcing an outcome whose conditional probability is below this aborts.
MEASURE_ZERO_FLOOR = 1e-12
# Input states must be normalized to this tolerance.
NORM_ATOL = 1e-8
# Allowed relative mismatch between sqrt(joint probability) and the actual
# norm of the projected state; larger gaps indicate a canonical-form bug.
NORM_CONSISTENCY_RTOL = 1e-8

ANC = "_a"
ANC_BRA = "_a*"


def _bra(label: str) -> str:
    return label + "*"


class MeasureZeroBranchError(ValueError):
    """Raised when a forced outcome has (numerically) zero probability."""


@dataclass
class LayerPlan:
    """Which sites are measured this layer, and at what strength."""

    measured: list[bool]
    theta: float

    @classmethod
    def bernoulli(
        cls, n: int, p: float, theta: float, rng: np.random.Generator
    ) -> "LayerPlan":
        """Independent Bernoulli(p) mask, drawn in site order 0..n-1."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("measurement probability must be in [0, 1]")
        draws = rng.random(n)
        return cls(measured=[bool(u < p) for u in draws], theta=theta)

    @classmethod
    def all_sites(cls, n: int, theta: float) -> "LayerPlan":
        return cls(measured=[True] * n, theta=theta)


@dataclass
class SiteOutcome:
    measured: bool
    outcome: int | None = None
    probability: float | None = None


@dataclass
class MeasurementRecord:
    """Per-site outcomes of one measurement layer."""

    sites: list[SiteOutcome] = field(default_factory=list)

    def joint_probability(self) -> float:
        p = 1.0
        for s in self.sites:
            if s.measured:
                p *= s.probability
        return p

    def outcomes(self) -> list[int | None]:
        return [s.outcome for s in self.sites]


@dataclass
class EnvTensor:
    """Left environment on a bond: a (ket-link, bra-link) matrix.

    For a unit-trace environment, Hermiticity and positive
    semidefiniteness hold up to roundoff.
    """

    tensor: DenseTensor

    def as_matrix(self) -> np.ndarray:
        return self.tensor.array

    def trace(self) -> float:
        return float(np.trace(self.tensor.array).real)

    def validate(self, atol: float = 1e-10) -> None:
        m = self.tensor.array
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("environment is not Hermitian")
        if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < -atol:
            raise ValueError("environment is not positive semidefinite")


def ancilla_rdm(p_tensor: DenseTensor) -> np.ndarray:
    """Trace the right links of an environment-with-ancilla tensor and
    normalize, yielding the ancilla's 2x2 conditional density matrix."""
    t = p_tensor
    link = next(
        l for l in t.labels if l not in (ANC, ANC_BRA) and not l.endswith("*")
    )
    rho = contract(t, identity_tensor(t.extent(link), (link, _bra(link))))
    rho_m = rho.transposed((ANC, ANC_BRA)).array
    tr = float(np.trace(rho_m).real)
    if tr <= MEASURE_ZERO_FLOOR:
        raise ValueError("ancilla density matrix has nonpositive trace")
    return rho_m / tr


def _attach_ancilla(site_tensor: DenseTensor) -> DenseTensor:
    """Tensor the site with an ancilla index fixed to |0>."""
    arr = site_tensor.array
    ext = np.zeros(arr.shape + (2,), dtype=complex)
    ext[..., 0] = arr
    return DenseTensor(ext, site_tensor.labels + (ANC,))


def _couple(site_tensor: DenseTensor, site: int, theta: float) -> DenseTensor:
    """Apply the measurement coupling to (physical, ancilla) of one site."""
    a_anc = _attach_ancilla(site_tensor)
    m = weak_measurement_gate(theta)
    g = DenseTensor(m.matrix.reshape(2, 2, 2, 2), ("_q", "_ao", _phys(site), ANC))
    out = contract(g, a_anc)  # ("_q", "_ao", b_i, b_{i+1})
    return out.relabeled({"_q": _phys(site), "_ao": ANC})


def _assert_right_isometric(state: MpsState, first: int, atol: float = 1e-8) -> None:
    for j in range(first, state.n_sites):
        arr = state.tensors[j].array
        g = np.tensordot(arr, arr.conj(), axes=([1, 2], [1, 2]))
        if np.max(np.abs(g - np.eye(arr.shape[0]))) > atol:
            raise AssertionError(f"site {j} lost right-isometry during the sweep")


def sample_measurement_layer(
    state: MpsState,
    plan: LayerPlan,
    rng: np.random.Generator | None = None,
    forced: Sequence[int] | None = None,
    check_right_isometry: bool = False,
) -> MeasurementRecord:
    """Measure one layer, mutating ``state``; returns the outcome record.

    In sample mode (``forced`` is None) outcomes are drawn from the exact
    Born distribution of the ancilla-dilated layer.  In forced mode the
    given outcomes are imposed and the record carries their exact
    conditional probabilities; entries at unmeasured sites are ignored.
    ``check_right_isometry`` asserts, at every step of the sweep, that the
    sites not yet visited are still right-isometric (debugging aid).
    """
    n = state.n_sites
    if len(plan.measured) != n:
        raise ValueError("plan length does not match chain length")
    if forced is None and rng is None:
        raise ValueError("sample mode needs an rng")
    if forced is not None and len(forced) != n:
        raise ValueError("forced outcomes must have one entry per site")
    if abs(state.global_norm() - 1.0) > NORM_ATOL:
        raise ValueError("input state is not normalized")

    state.canonicalize(0)
    env = EnvTensor(identity_tensor(1, (_link(0), _bra(_link(0)))))
    coupled: dict[int, DenseTensor] = {}
    record = MeasurementRecord()
    joint = 1.0

    for i in range(n):
        if check_right_isometry:
            _assert_right_isometric(state, i + 1)
        site_t = state.tensors[i]
        left, right = _link(i), _link(i + 1)
        if not plan.measured[i]:
            # Pass the environment through the site's transfer matrix.
            half = contract(env.tensor, site_t)  # (b_i*, p_i, b_{i+1})
            star = site_t.conj().relabeled({left: _bra(left), right: _bra(right)})
            env = EnvTensor(contract(half, star))  # (b_{i+1}, b_{i+1}*)
            record.sites.append(SiteOutcome(measured=False))
            continue

        tilde = _couple(site_t, i, plan.theta)  # (p_i, _a, b_i, b_{i+1})
        coupled[i] = tilde
        star = tilde.conj().relabeled(
            {left: _bra(left), right: _bra(right), ANC: ANC_BRA}
        )
        # Absorb the environment before conjugate-contracting: this keeps
        # every intermediate at O(chi^2) size instead of O(chi^4).
        half = contract(env.tensor, tilde)  # (b_i*, p_i, _a, b_{i+1})
        p_tensor = contract(half, star)  # (_a, b_{i+1}, _a*, b_{i+1}*)
        rho = ancilla_rdm(p_tensor)
        probs = np.clip(np.diag(rho).real, 0.0, 1.0)

        if forced is not None:
            outcome = int(forced[i])
            if outcome not in (0, 1):
                raise ValueError(f"forced outcome {outcome} at site {i} is not a bit")
        else:
            outcome = 0 if rng.random() < probs[0] else 1
        q = float(probs[outcome])
        if q < MEASURE_ZERO_FLOOR:
            raise MeasureZeroBranchError(
                f"outcome {outcome} at site {i} has probability {q:.3e}"
            )
        joint *= q
        record.sites.append(SiteOutcome(measured=True, outcome=outcome, probability=q))

        projected = p_tensor.fix_index(ANC, outcome).fix_index(ANC_BRA, outcome)
        env = EnvTensor(projected.scaled(1.0 / q))  # (b_{i+1}, b_{i+1}*), trace 1

    # Project the stored coupled tensors onto their outcomes.
    for i, tilde in coupled.items():
        out = record.sites[i].outcome
        new_t = tilde.fix_index(ANC, out).transposed((_link(i), _phys(i), _link(i + 1)))
        state.tensors[i] = new_t

    state.ortho_center = None
    state.canonicalize(0)
    center_norm = state.tensors[0].norm()
    expected = sqrt(joint)
    if abs(center_norm / expected - 1.0) > NORM_CONSISTENCY_RTOL:
        raise RuntimeError(
            f"post-measurement norm {center_norm:.12e} disagrees with "
            f"sqrt(joint probability) {expected:.12e}"
        )
    state.tensors[0] = state.tensors[0].scaled(1.0 / expected)
    return record


def born_projective_measure(
    state: MpsState, site: int, rng: np.random.Generator
) -> tuple[int, float]:
    """Projective Z measurement of one physical qubit, mutating ``state``.

    Returns (outcome, probability).  Probabilities come from the one-site
    reduced density matrix; the state is projected and renormalized.
    """
    probs = state.site_probabilities(site)  # canonicalizes to `site`
    outcome = 0 if rng.random() < probs[0] else 1
    p = float(probs[outcome])
    if p < MEASURE_ZERO_FLOOR:
        raise MeasureZeroBranchError(f"outcome {outcome} at site {site}")
    t = state.tensors[site]
    arr = t.array.copy()
    arr[:, 1 - outcome, :] = 0.0
    state.tensors[site] = DenseTensor(arr / sqrt(p), t.labels)
    return outcome, p
