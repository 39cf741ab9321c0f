"""Gate constructors: Haar-random unitaries, the tunable measurement
coupling, swap gates, and a trapped-ion-native decomposition of the coupling.

Basis ordering for two-site matrices: the first (left/physical) site index
varies slowest, i.e. the 4x4 basis is |00>, |01>, |10>, |11> with the first
bit belonging to the first site.  For the measurement coupling the first
site is the physical qubit and the second is the ancilla.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

UNITARITY_ATOL = 1e-12

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


@dataclass
class GateMatrix:
    """A unitary acting on one or two sites.

    ``sites`` is optional metadata (application functions take explicit
    site arguments); when set it names the intended targets.
    """

    matrix: np.ndarray
    sites: tuple | None = None

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"gate matrix must be square, got {m.shape}")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if dev > UNITARITY_ATOL:
            raise ValueError(f"gate is not unitary (max deviation {dev:.2e})")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return 1 if self.dim == 2 else 2


@dataclass
class GateSequence:
    """An ordered list of gates; element 0 is applied first."""

    gates: list[GateMatrix] = field(default_factory=list)

    def product(self) -> np.ndarray:
        """Ordered product as a matrix on (qubit x ancilla).

        Single-site gates in the sequence act on the ancilla; two-site
        gates are stored on (ancilla, qubit) and are reordered here into
        the (qubit, ancilla) convention of `weak_measurement_gate`.
        """
        swap = swap_gate().matrix
        total = np.eye(4, dtype=complex)
        for g in self.gates:
            if g.n_sites == 1:
                full = np.kron(np.eye(2), g.matrix)  # qubit slow, ancilla fast
            else:
                full = swap @ g.matrix @ swap  # stored (ancilla, qubit)
            total = full @ total
        return total


def haar_unitary(d: int, rng: np.random.Generator) -> GateMatrix:
    """Haar-distributed d x d unitary from a complex-Gaussian matrix + QR.

    The R diagonal is phase-corrected so the distribution is exactly Haar
    and the draw is deterministic for a fixed rng state.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))[np.newaxis, :]
    return GateMatrix(q)


def weak_measurement_gate(theta: float) -> GateMatrix:
    """Unitary coupling a physical qubit to a fresh |0> ancilla.

    Equal to exp[i*theta * ((1+Z_qubit)/2) * X_ancilla]: on qubit |0> the
    ancilla block is cos(theta)*I + i*sin(theta)*X, on qubit |1> it is the
    identity.  theta=0 leaves the state untouched; theta=pi/2 realizes a
    projective measurement once the ancilla is read out.
    """
    if not 0.0 <= theta <= math.pi / 2:
        warnings.warn(
            f"measurement strength theta={theta} outside [0, pi/2]; "
            "the coupling wraps periodically",
            stacklevel=2,
        )
    c, s = math.cos(theta), math.sin(theta)
    m = np.eye(4, dtype=complex)
    m[0, 0] = c
    m[0, 1] = 1j * s
    m[1, 0] = 1j * s
    m[1, 1] = c
    return GateMatrix(m)


def native_decomposition(theta: float) -> GateSequence:
    """The measurement coupling compiled to trapped-ion-style primitives.

    Sequence (applied in order): Hadamard on the ancilla, exp(i*theta*Z/2)
    on the ancilla, exp(i*theta*ZZ/2) on (ancilla, qubit), Hadamard on the
    ancilla.  The ordered product equals weak_measurement_gate(theta) up
    to a global phase.
    """
    z_rot = np.diag([np.exp(1j * theta / 2), np.exp(-1j * theta / 2)])
    zz = np.diag(
        [
            np.exp(1j * theta / 2),   # |00>
            np.exp(-1j * theta / 2),  # |01>
            np.exp(-1j * theta / 2),  # |10>
            np.exp(1j * theta / 2),   # |11>
        ]
    )
    return GateSequence(
        [
            GateMatrix(HADAMARD, sites=("ancilla",)),
            GateMatrix(z_rot, sites=("ancilla",)),
            GateMatrix(zz, sites=("ancilla", "qubit")),
            GateMatrix(HADAMARD, sites=("ancilla",)),
        ]
    )


def swap_gate() -> GateMatrix:
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = 1.0
    m[1, 2] = m[2, 1] = 1.0
    return GateMatrix(m)


def identity_gate(n_sites: int = 2) -> GateMatrix:
    return GateMatrix(np.eye(2**n_sites, dtype=complex))


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise |a - e^{i*phi} b| minimized over the global phase."""
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))
