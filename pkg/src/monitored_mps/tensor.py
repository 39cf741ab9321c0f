"""Dense complex tensors with named indices.

Conventions used throughout the package:

* A tensor's data is stored as a C-contiguous (row-major) numpy array whose
  axis ``k`` corresponds to ``labels[k]``.  All reshapes go through
  ``_as_matrix`` so the linear layout is fixed in one place.
* Contraction is label-driven: two tensors contract over every label they
  share, and the shared extents must match.
* Decompositions (QR, truncated SVD) split a tensor into a ``row_labels``
  group and the remaining columns; the new bond index is appended with a
  caller-chosen label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

# Isometry checks (q^dag q = 1, v v^dag = 1) are asserted to this tolerance.
ISOMETRY_ATOL = 1e-10
# Allowed slack between reconstruction error^2 / norm^2 and discarded_weight.
RECONSTRUCTION_SLACK = 1e-12
# Singular values below SINGULAR_FLOOR * s_max are treated as exact zeros
# before the cutoff rule is applied.
SINGULAR_FLOOR = 1e-14


class ContractionCounter:
    """Counts contract() calls, for structural cost assertions in tests."""

    def __init__(self) -> None:
        self.count = 0

    def reset(self) -> None:
        self.count = 0


#: Global counter incremented by every contract() call.
CONTRACTIONS = ContractionCounter()


class DenseTensor:
    """An arbitrary-rank complex tensor with unique string index labels.

    Instances are treated as immutable values: no method mutates ``array``
    in place, and callers must not either.
    """

    __slots__ = ("array", "labels")

    def __init__(self, array: np.ndarray, labels: Sequence[str]):
        arr = np.asarray(array, dtype=np.complex128)
        labels = tuple(labels)
        if arr.ndim != len(labels):
            raise ValueError(f"rank {arr.ndim} does not match {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        self.array = arr
        self.labels = labels

    @property
    def dims(self) -> tuple[int, ...]:
        return self.array.shape

    def extent(self, label: str) -> int:
        return self.array.shape[self.labels.index(label)]

    def relabeled(self, mapping: Mapping[str, str]) -> "DenseTensor":
        """Return a view-like tensor with labels renamed per ``mapping``."""
        return DenseTensor(self.array, tuple(mapping.get(l, l) for l in self.labels))

    def conj(self) -> "DenseTensor":
        return DenseTensor(np.conj(self.array), self.labels)

    def transposed(self, order: Sequence[str]) -> "DenseTensor":
        order = tuple(order)
        if set(order) != set(self.labels):
            raise ValueError(f"transpose order {order} does not match labels {self.labels}")
        perm = [self.labels.index(l) for l in order]
        return DenseTensor(np.ascontiguousarray(np.transpose(self.array, perm)), order)

    def fix_index(self, label: str, value: int) -> "DenseTensor":
        """Slice one index at a fixed value, removing that axis."""
        ax = self.labels.index(label)
        idx: list[object] = [slice(None)] * self.array.ndim
        idx[ax] = value
        rest = self.labels[:ax] + self.labels[ax + 1:]
        return DenseTensor(self.array[tuple(idx)], rest)

    def scaled(self, factor: complex) -> "DenseTensor":
        return DenseTensor(self.array * factor, self.labels)

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def item(self) -> complex:
        if self.array.ndim != 0 and self.array.size != 1:
            raise ValueError("item() requires a scalar tensor")
        return complex(self.array.reshape(()))

    def __repr__(self) -> str:  # pragma: no cover
        return f"DenseTensor(dims={self.dims}, labels={self.labels})"


@dataclass
class SvdResult:
    """Truncated SVD of a tensor split into row and column index groups.

    ``u`` carries the row labels plus the new bond label; ``v`` carries the
    new bond label plus the column labels.  ``s`` is sorted descending.
    ``discarded_weight`` is the discarded fraction of the squared spectrum.
    """

    u: DenseTensor
    s: np.ndarray
    v: DenseTensor
    discarded_weight: float


def contract(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Contract two tensors over all shared labels.

    With no shared labels this is an outer product; with all labels shared
    the result is a rank-0 scalar tensor.  Raises on extent mismatch.
    """
    shared = [l for l in a.labels if l in b.labels]
    axes_a = [a.labels.index(l) for l in shared]
    axes_b = [b.labels.index(l) for l in shared]
    for l, ia, ib in zip(shared, axes_a, axes_b):
        if a.array.shape[ia] != b.array.shape[ib]:
            raise ValueError(
                f"extent mismatch on shared label {l!r}: "
                f"{a.array.shape[ia]} vs {b.array.shape[ib]}"
            )
    CONTRACTIONS.count += 1
    out = np.tensordot(a.array, b.array, axes=(axes_a, axes_b))
    out_labels = tuple(l for l in a.labels if l not in shared) + tuple(
        l for l in b.labels if l not in shared
    )
    return DenseTensor(out, out_labels)


def identity_tensor(extent: int, labels: tuple[str, str]) -> DenseTensor:
    """Kronecker delta connecting two labels of equal extent."""
    return DenseTensor(np.eye(extent), labels)


def _as_matrix(t: DenseTensor, row_labels: Sequence[str]):
    """Reshape to a matrix with ``row_labels`` (in the given order) as rows.

    Columns are the remaining labels in the tensor's own order.  Returns
    (matrix, row_labels, row_shape, col_labels, col_shape).
    """
    row_labels = tuple(row_labels)
    if not row_labels:
        raise ValueError("row_labels must be nonempty")
    for l in row_labels:
        if l not in t.labels:
            raise ValueError(f"row label {l!r} not in tensor labels {t.labels}")
    col_labels = tuple(l for l in t.labels if l not in row_labels)
    if not col_labels:
        raise ValueError("row_labels must be a proper subset of the tensor labels")
    tt = t.transposed(row_labels + col_labels)
    row_shape = tt.dims[: len(row_labels)]
    col_shape = tt.dims[len(row_labels):]
    mat = tt.array.reshape(int(np.prod(row_shape)), int(np.prod(col_shape)))
    return mat, row_labels, row_shape, col_labels, col_shape


def _robust_svd(mat: np.ndarray):
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but reliable.
        from scipy.linalg import svd as scipy_svd

        return scipy_svd(mat, full_matrices=False, lapack_driver="gesvd")


def svd_truncated(
    t: DenseTensor,
    row_labels: Sequence[str],
    chi_max: int,
    cutoff: float,
    new_label: str = "_svd",
) -> SvdResult:
    """Truncated SVD keeping the smallest rank whose discarded squared
    weight is within ``cutoff``, then capping the rank at ``chi_max``.

    Singular values below SINGULAR_FLOOR * s_max are dropped as exact zeros
    regardless of cutoff (they carry no weight).  At least one singular
    value is always kept.  Raises on an all-zero input tensor.
    """
    if chi_max < 1:
        raise ValueError("chi_max must be >= 1")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    if new_label in t.labels:
        raise ValueError(f"new label {new_label!r} collides with tensor labels")
    mat, row_labels, row_shape, col_labels, col_shape = _as_matrix(t, row_labels)
    if not np.any(mat):
        raise ValueError("svd_truncated on an all-zero tensor (probability-zero branch?)")
    u, s, vh = _robust_svd(mat)
    s = np.where(s < SINGULAR_FLOOR * s[0], 0.0, s)
    nnz = int(np.count_nonzero(s))
    s2 = s * s
    total = float(np.sum(s2))
    # Smallest k with tail weight <= cutoff * total; tail[k] = sum(s2[k:]).
    tail = np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])
    k = int(np.searchsorted(-tail, -cutoff * total, side="left"))
    k = max(1, min(k, chi_max, max(nnz, 1)))
    discarded = float(tail[k] / total)
    u_t = DenseTensor(
        np.ascontiguousarray(u[:, :k]).reshape(row_shape + (k,)),
        row_labels + (new_label,),
    )
    v_t = DenseTensor(
        np.ascontiguousarray(vh[:k, :]).reshape((k,) + col_shape),
        (new_label,) + col_labels,
    )
    return SvdResult(u=u_t, s=s[:k].copy(), v=v_t, discarded_weight=discarded)


def qr_decompose(
    t: DenseTensor, row_labels: Sequence[str], new_label: str = "_qr"
) -> tuple[DenseTensor, DenseTensor]:
    """QR split with q isometric on the new bond and contract(q, r) == t.

    The phase convention forces a real non-negative diagonal of r so the
    decomposition is deterministic.
    """
    if new_label in t.labels:
        raise ValueError(f"new label {new_label!r} collides with tensor labels")
    mat, row_labels, row_shape, col_labels, col_shape = _as_matrix(t, row_labels)
    q, r = np.linalg.qr(mat, mode="reduced")
    diag = np.diagonal(r).copy()
    phases = np.where(np.abs(diag) > 0, diag / np.where(np.abs(diag) > 0, np.abs(diag), 1.0), 1.0)
    q = q * phases[np.newaxis, :]
    r = np.conj(phases)[:, np.newaxis] * r
    k = q.shape[1]
    q_t = DenseTensor(np.ascontiguousarray(q).reshape(row_shape + (k,)), row_labels + (new_label,))
    r_t = DenseTensor(np.ascontiguousarray(r).reshape((k,) + col_shape), (new_label,) + col_labels)
    return q_t, r_t
