"""Brute-force statevector simulator used as the exactness oracle.

Qubit ordering matches the MPS site order: site 0 is the most significant
bit of the basis index, so amplitude[b] belongs to the bitstring of b read
left to right.  Hard-capped at 14 qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gates import GateMatrix, weak_measurement_gate

MAX_QUBITS = 14


@dataclass
class DenseState:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.amplitudes, dtype=np.complex128)
        n = int(round(math.log2(v.size)))
        if 2**n != v.size:
            raise ValueError(f"amplitude vector length {v.size} is not a power of two")
        if n > MAX_QUBITS:
            raise ValueError(f"dense simulation capped at {MAX_QUBITS} qubits, got {n}")
        self.amplitudes = v

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.amplitudes.size)))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "DenseState":
        return DenseState(self.amplitudes.copy())


def basis_state(bits: list[int]) -> DenseState:
    n = len(bits)
    v = np.zeros(2**n, dtype=complex)
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    v[idx] = 1.0
    return DenseState(v)


def neel_dense(n: int) -> DenseState:
    return basis_state([i % 2 for i in range(n)])


def random_dense(n: int, rng: np.random.Generator) -> DenseState:
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return DenseState(v / np.linalg.norm(v))


def dense_apply_gate(state: DenseState, gate: GateMatrix, sites: tuple[int, ...]) -> DenseState:
    """Exact unitary action on the designated qubits (any placement)."""
    n = state.n_qubits
    for s in sites:
        if not 0 <= s < n:
            raise ValueError(f"site {s} out of range for {n} qubits")
    if len(set(sites)) != len(sites):
        raise ValueError("duplicate sites")
    k = len(sites)
    if gate.dim != 2**k:
        raise ValueError(f"gate dimension {gate.dim} does not act on {k} sites")
    psi = state.amplitudes.reshape([2] * n)
    g = gate.matrix.reshape([2] * (2 * k))
    # tensordot puts the gate's output axes first; move them back into place.
    psi = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), list(sites)))
    psi = np.moveaxis(psi, list(range(k)), list(sites))
    return DenseState(psi.reshape(-1))


def dense_weak_measure_layer(
    state: DenseState,
    measured: list[bool],
    theta: float,
    outcomes: list[int],
) -> tuple[DenseState, float]:
    """Ancilla-dilated measurement layer with forced outcomes.

    Each measured site gets a transient |0> ancilla appended, the coupling
    applied, and the ancilla projected onto the forced outcome.  Couplings
    on distinct sites act on disjoint qubit pairs, so projecting one
    ancilla before coupling the next is exact.  Returns the renormalized
    state and the joint probability of the outcome string.
    """
    n = state.n_qubits
    if len(measured) != n or len(outcomes) != n:
        raise ValueError("measured mask and outcomes must have one entry per site")
    m = weak_measurement_gate(theta)
    psi = state.amplitudes
    joint = 1.0
    for site, flag in enumerate(measured):
        if not flag:
            continue
        ext = np.zeros(psi.size * 2, dtype=complex)
        ext[0::2] = psi  # ancilla appended as least significant bit, in |0>
        work = DenseState(ext)
        work = dense_apply_gate(work, m, (site, n))
        proj = work.amplitudes[int(outcomes[site])::2]
        p = float(np.vdot(proj, proj).real)
        if p <= 1e-14:
            raise ValueError(f"probability-zero branch at site {site}")
        joint *= p
        psi = proj / math.sqrt(p)
    return DenseState(psi), joint


def dense_measurement_distribution(
    state: DenseState, measured: list[bool], theta: float
) -> dict[tuple[int, ...], float]:
    """Joint Born distribution over all outcome strings (testing helper)."""
    import itertools

    sites = [i for i, f in enumerate(measured) if f]
    dist: dict[tuple[int, ...], float] = {}
    for bits in itertools.product((0, 1), repeat=len(sites)):
        outcomes = [0] * state.n_qubits
        for s, b in zip(sites, bits):
            outcomes[s] = b
        try:
            _, p = dense_weak_measure_layer(state, measured, theta, outcomes)
        except ValueError:
            p = 0.0
        dist[bits] = p
    return dist


def dense_entropy(state: DenseState, cut: int) -> float:
    """Von Neumann entropy (natural log) of the first ``cut`` qubits."""
    n = state.n_qubits
    if not 1 <= cut <= n - 1:
        raise ValueError(f"cut must be in 1..{n - 1}")
    mat = state.amplitudes.reshape(2**cut, 2 ** (n - cut))
    s = np.linalg.svd(mat, compute_uv=False)
    p = s * s
    p = p[p > 1e-14]
    p = p / np.sum(p)
    ent = float(-np.sum(p * np.log(p)))
    return ent if ent > 0.0 else 0.0


def dense_site_probabilities(state: DenseState, site: int) -> np.ndarray:
    """Born probabilities for a projective Z measurement of one qubit."""
    n = state.n_qubits
    psi = state.amplitudes.reshape([2] * n)
    axes = tuple(i for i in range(n) if i != site)
    return np.sum(np.abs(psi) ** 2, axis=axes)


def dense_project_site(state: DenseState, site: int, outcome: int) -> tuple[DenseState, float]:
    """Project one qubit onto |outcome> and renormalize."""
    n = state.n_qubits
    psi = state.amplitudes.reshape([2] * n).copy()
    idx: list[object] = [slice(None)] * n
    idx[site] = 1 - outcome
    psi[tuple(idx)] = 0.0
    flat = psi.reshape(-1)
    p = float(np.vdot(flat, flat).real)
    if p <= 1e-14:
        raise ValueError("probability-zero projection")
    return DenseState(flat / math.sqrt(p)), p


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Squared overlap of two normalized vectors."""
    return float(abs(np.vdot(a, b)) ** 2)
