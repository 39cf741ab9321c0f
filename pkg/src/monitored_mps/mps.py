"""Open-boundary matrix-product state of an N-qubit register.

Site tensors carry labels ("b{i}", "p{i}", "b{i+1}") in that axis order:
left link, physical (extent 2), right link.  Boundary links b0 and bN have
extent 1.  Sites are 0-based.  A cut index c in 1..N-1 bipartitions the
chain into sites [0, c) and [c, N).

The orthogonality center is tracked so canonicalization moves are
incremental; every public mutating operation leaves the state normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gates import GateMatrix, swap_gate
from .tensor import DenseTensor, contract, qr_decompose, svd_truncated

# Squared Schmidt values at or below this floor contribute zero entropy.
SCHMIDT_FLOOR = 1e-14
# Canonical-form isometry tolerance for validation helpers.
CANONICAL_ATOL = 1e-8


@dataclass
class TruncationParams:
    """Bond-dimension cap and discarded-weight cutoff for SVD truncation."""

    chi_max: int
    cutoff: float = 0.0

    def __post_init__(self) -> None:
        if self.chi_max < 1:
            raise ValueError("chi_max must be >= 1")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")


def _link(i: int) -> str:
    return f"b{i}"


def _phys(i: int) -> str:
    return f"p{i}"


class MpsState:
    """Chain of rank-3 site tensors with a tracked orthogonality center."""

    def __init__(
        self,
        tensors: list[DenseTensor],
        params: TruncationParams,
        ortho_center: int | None = None,
        validate: bool = True,
    ):
        self.tensors = list(tensors)
        self.params = params
        self.ortho_center = ortho_center
        if validate:
            self._validate_structure()

    # -- construction -----------------------------------------------------

    @classmethod
    def product_state(cls, bits: list[int], params: TruncationParams) -> "MpsState":
        tensors = []
        for i, b in enumerate(bits):
            arr = np.zeros((1, 2, 1), dtype=complex)
            arr[0, int(b), 0] = 1.0
            tensors.append(DenseTensor(arr, (_link(i), _phys(i), _link(i + 1))))
        return cls(tensors, params, ortho_center=0)

    @classmethod
    def from_statevector(cls, vec: np.ndarray, params: TruncationParams) -> "MpsState":
        """Exact MPS of a dense state vector (site 0 = most significant bit)."""
        v = np.asarray(vec, dtype=complex)
        n = int(round(math.log2(v.size)))
        if 2**n != v.size:
            raise ValueError("vector length is not a power of two")
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("zero vector")
        rem = (v / norm).reshape(1, -1)
        tensors = []
        chi_l = 1
        for i in range(n - 1):
            mat = rem.reshape(chi_l * 2, -1)
            u, s, vh = np.linalg.svd(mat, full_matrices=False)
            k = max(1, int(np.count_nonzero(s > 1e-14 * s[0])))
            tensors.append(
                DenseTensor(u[:, :k].reshape(chi_l, 2, k), (_link(i), _phys(i), _link(i + 1)))
            )
            rem = s[:k, np.newaxis] * vh[:k]
            chi_l = k
        tensors.append(
            DenseTensor(rem.reshape(chi_l, 2, 1), (_link(n - 1), _phys(n - 1), _link(n)))
        )
        return cls(tensors, params, ortho_center=n - 1)

    # -- basic queries -----------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def chi_max(self) -> int:
        return self.params.chi_max

    @property
    def cutoff(self) -> float:
        return self.params.cutoff

    def copy(self) -> "MpsState":
        # DenseTensors are immutable values, so a shallow list copy suffices.
        return MpsState(list(self.tensors), self.params, self.ortho_center, validate=False)

    def max_bond(self) -> int:
        return max(t.dims[2] for t in self.tensors)

    def link_extents(self) -> list[int]:
        return [self.tensors[0].dims[0]] + [t.dims[2] for t in self.tensors]

    def _validate_structure(self) -> None:
        n = self.n_sites
        if n < 1:
            raise ValueError("empty chain")
        for i, t in enumerate(self.tensors):
            if t.labels != (_link(i), _phys(i), _link(i + 1)):
                raise ValueError(f"site {i} has labels {t.labels}")
            if t.dims[1] != 2:
                raise ValueError(f"site {i} physical extent {t.dims[1]} != 2")
        if self.tensors[0].dims[0] != 1 or self.tensors[-1].dims[2] != 1:
            raise ValueError("boundary links must have extent 1")
        for i in range(n - 1):
            if self.tensors[i].dims[2] != self.tensors[i + 1].dims[0]:
                raise ValueError(f"link extent mismatch between sites {i} and {i + 1}")

    # -- canonical form ----------------------------------------------------

    def _shift_right(self, k: int) -> None:
        """Make site k left-isometric, absorbing the remainder into k+1."""
        q, r = qr_decompose(self.tensors[k], (_link(k), _phys(k)), new_label="_sh")
        nxt = contract(r, self.tensors[k + 1])  # ("_sh", p_{k+1}, b_{k+2})
        self.tensors[k] = q.relabeled({"_sh": _link(k + 1)})
        self.tensors[k + 1] = nxt.relabeled({"_sh": _link(k + 1)})

    def _shift_left(self, k: int) -> None:
        """Make site k right-isometric, absorbing the remainder into k-1."""
        q, r = qr_decompose(self.tensors[k], (_phys(k), _link(k + 1)), new_label="_sh")
        prv = contract(self.tensors[k - 1], r)  # (b_{k-1}, p_{k-1}, "_sh")
        self.tensors[k] = q.relabeled({"_sh": _link(k)}).transposed(
            (_link(k), _phys(k), _link(k + 1))
        )
        self.tensors[k - 1] = prv.relabeled({"_sh": _link(k)})

    def canonicalize(self, center: int) -> None:
        """Move the orthogonality center to ``center``.

        Preserves the represented state exactly (pure QR, no truncation).
        """
        n = self.n_sites
        if not 0 <= center < n:
            raise ValueError(f"center {center} out of range")
        if self.ortho_center is None:
            for k in range(center):
                self._shift_right(k)
            for k in range(n - 1, center, -1):
                self._shift_left(k)
        elif self.ortho_center < center:
            for k in range(self.ortho_center, center):
                self._shift_right(k)
        elif self.ortho_center > center:
            for k in range(self.ortho_center, center, -1):
                self._shift_left(k)
        self.ortho_center = center

    def check_canonical(self, atol: float = CANONICAL_ATOL) -> bool:
        """Verify the isometry conditions implied by ortho_center."""
        c = self.ortho_center
        if c is None:
            return False
        for i, t in enumerate(self.tensors):
            arr = t.array
            if i < c:
                chi = arr.shape[2]
                g = np.tensordot(arr.conj(), arr, axes=([0, 1], [0, 1]))
            elif i > c:
                chi = arr.shape[0]
                g = np.tensordot(arr, arr.conj(), axes=([1, 2], [1, 2]))
            else:
                continue
            if np.max(np.abs(g - np.eye(chi))) > atol:
                return False
        return True

    # -- gates --------------------------------------------------------------

    def apply_two_site_gate(
        self, gate: GateMatrix, left_site: int, params: TruncationParams | None = None
    ) -> None:
        """Apply a 4x4 gate on (left_site, left_site+1), truncate the touched
        bond, renormalize, and leave the center on the right member."""
        i = left_site
        n = self.n_sites
        if not 0 <= i <= n - 2:
            raise ValueError(f"left site {i} out of range (gate needs adjacent pair)")
        if gate.dim != 4:
            raise ValueError("two-site gate must be 4x4")
        p = params or self.params
        if self.ortho_center is None or self.ortho_center < i:
            self.canonicalize(i)
        elif self.ortho_center > i + 1:
            self.canonicalize(i + 1)
        theta = contract(self.tensors[i], self.tensors[i + 1])
        g = DenseTensor(
            gate.matrix.reshape(2, 2, 2, 2), ("_gl", "_gr", _phys(i), _phys(i + 1))
        )
        res = contract(g, theta)  # ("_gl", "_gr", b_i, b_{i+2})
        svd = svd_truncated(
            res, (_link(i), "_gl"), p.chi_max, p.cutoff, new_label=_link(i + 1)
        )
        s = svd.s / np.linalg.norm(svd.s)
        self.tensors[i] = svd.u.relabeled({"_gl": _phys(i)}).transposed(
            (_link(i), _phys(i), _link(i + 1))
        )
        right = s[:, np.newaxis, np.newaxis] * svd.v.array
        self.tensors[i + 1] = DenseTensor(right, (_link(i + 1), _phys(i + 1), _link(i + 2)))
        self.ortho_center = i + 1

    def apply_gate_with_swaps(
        self,
        gate: GateMatrix,
        site_a: int,
        site_b: int,
        params: TruncationParams | None = None,
    ) -> None:
        """Apply a two-site gate on arbitrary (site_a, site_b) via swap chains.

        The gate matrix is ordered with site_a's index varying slowest.
        Every swap is truncated with the same parameters as the gate itself.
        """
        if site_a == site_b:
            raise ValueError("gate sites must differ")
        swap = swap_gate()

        def reordered() -> GateMatrix:
            m = swap.matrix @ gate.matrix @ swap.matrix
            return GateMatrix(m)

        if site_b == site_a + 1:
            self.apply_two_site_gate(gate, site_a, params)
            return
        if site_a == site_b + 1:
            self.apply_two_site_gate(reordered(), site_b, params)
            return
        lo, hi = min(site_a, site_b), max(site_a, site_b)
        # Walk the qubit at lo up to hi-1, apply, then walk it back.
        for k in range(lo, hi - 1):
            self.apply_two_site_gate(swap, k, params)
        if site_a == lo:
            self.apply_two_site_gate(gate, hi - 1, params)
        else:
            self.apply_two_site_gate(reordered(), hi - 1, params)
        for k in range(hi - 2, lo - 1, -1):
            self.apply_two_site_gate(swap, k, params)

    # -- observables ---------------------------------------------------------

    def schmidt_values(self, cut: int) -> np.ndarray:
        """Exact Schmidt coefficients across the bond at ``cut``."""
        n = self.n_sites
        if not 1 <= cut <= n - 1:
            raise ValueError(f"cut must be in 1..{n - 1}")
        self.canonicalize(cut - 1)
        t = self.tensors[cut - 1]
        mat = t.array.reshape(t.dims[0] * 2, t.dims[2])
        return np.linalg.svd(mat, compute_uv=False)

    def bond_entropy(self, cut: int) -> float:
        """Von Neumann entropy (natural log) across the cut.

        The state is canonicalized internally so the Schmidt values are
        exact; squared values at or below SCHMIDT_FLOOR contribute zero.
        """
        s = self.schmidt_values(cut)
        p = s * s
        p = p[p > SCHMIDT_FLOOR]
        p = p / np.sum(p)
        ent = float(-np.sum(p * np.log(p)))
        return ent if ent > 0.0 else 0.0

    def global_norm(self) -> float:
        """Full transfer-matrix contraction of <psi|psi>, independent of the
        tracked canonical form."""
        env = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            half = np.tensordot(env, t.array, axes=([0], [0]))  # (l', p, r)
            env = np.tensordot(t.array.conj(), half, axes=([0, 1], [0, 1]))  # (r', r)
            env = env.T
        return float(math.sqrt(abs(env[0, 0].real)))

    def site_probabilities(self, site: int) -> np.ndarray:
        """Diagonal of the one-site reduced density matrix."""
        self.canonicalize(site)
        t = self.tensors[site].array
        probs = np.einsum("lpr,lpr->p", t, t.conj()).real
        total = probs.sum()
        if total <= 0:
            raise ValueError("state has zero norm at site")
        return probs / total

    def expectation_z(self, site: int) -> float:
        p = self.site_probabilities(site)
        return float(p[0] - p[1])

    def to_statevector(self) -> np.ndarray:
        """Dense amplitudes with site 0 as the most significant bit."""
        v = self.tensors[0].array.reshape(2, -1)
        for t in self.tensors[1:]:
            v = np.tensordot(v, t.array, axes=([1], [0]))
            v = v.reshape(-1, t.dims[2])
        return v.reshape(-1)


def neel_state(n: int, params: TruncationParams) -> MpsState:
    """Alternating product state |0 1 0 1 ...> with site 0 in |0>."""
    if n < 2 or n % 2 != 0:
        raise ValueError(f"chain length must be even and >= 2, got {n}")
    return MpsState.product_state([i % 2 for i in range(n)], params)


def save_snapshot(state: MpsState, path) -> None:
    """Dump the state to a compressed npz file (debugging / golden tests).

    Layout: one complex array ``site_<i>`` per site in the canonical
    (left, physical, right) axis order, plus scalar metadata fields
    ``n_sites``, ``chi_max``, ``cutoff``, and ``ortho_center`` (-1 when
    the center is untracked).
    """
    arrays = {f"site_{i}": t.array for i, t in enumerate(state.tensors)}
    np.savez_compressed(
        path,
        n_sites=state.n_sites,
        chi_max=state.params.chi_max,
        cutoff=state.params.cutoff,
        ortho_center=-1 if state.ortho_center is None else state.ortho_center,
        **arrays,
    )


def load_snapshot(path) -> MpsState:
    with np.load(path) as data:
        n = int(data["n_sites"])
        params = TruncationParams(int(data["chi_max"]), float(data["cutoff"]))
        center = int(data["ortho_center"])
        tensors = [
            DenseTensor(data[f"site_{i}"], (_link(i), _phys(i), _link(i + 1)))
            for i in range(n)
        ]
    return MpsState(tensors, params, ortho_center=None if center < 0 else center)
