"""Dense real tensors with labeled axes, contraction, fusion and decompositions.

Storage convention
------------------
All tensors hold float64 values in C (row-major) order: the last axis is the
fastest.  Every fusion, split and checkpoint record in this package relies on
that single convention, which makes checkpoints bit-reproducible.

Decomposition conventions
-------------------------
``symm_eig`` returns eigenvalues sorted in descending order.  Each eigenvector
is sign-fixed so that its largest-magnitude entry is positive (ties broken by
the lowest index).  ``svd`` applies the same rule to the left singular
vectors, compensating in the right ones, so that U @ diag(s) @ V.T always
reconstructs the input.  The fixed signs matter: isometries derived from
these decompositions feed a gauge transform that needs reproducible bases.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "SymmEigResult",
    "DimensionMismatchError",
    "DecompositionError",
    "contract",
    "fuse",
    "split",
    "symm_eig",
    "svd",
    "write_record",
    "read_record",
]


class DimensionMismatchError(ValueError):
    """Raised when axis extents required to match do not."""


class DecompositionError(RuntimeError):
    """Raised when an eigen- or singular-value decomposition fails."""


@dataclass(frozen=True)
class Tensor:
    """A dense real multi-index array with optional axis labels."""

    data: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", arr)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != arr.ndim:
                raise DimensionMismatchError(
                    f"{len(labels)} labels for a rank-{arr.ndim} tensor"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def rank(self) -> int:
        return self.data.ndim

    def axis(self, key: int | str) -> int:
        """Resolve an axis given either its position or its label."""
        if isinstance(key, str):
            if self.labels is None or key not in self.labels:
                raise KeyError(f"no axis labeled {key!r}")
            return self.labels.index(key)
        return range(self.rank)[key]


def _as_array(t: Tensor | np.ndarray) -> np.ndarray:
    return t.data if isinstance(t, Tensor) else np.asarray(t, dtype=np.float64)


def contract(
    a: Tensor, b: Tensor, pairs: Sequence[tuple[int | str, int | str]]
) -> Tensor:
    """Contract ``a`` with ``b`` over the given axis pairs.

    The result keeps the unpaired axes of ``a`` followed by those of ``b``,
    each in their original order.  Paired axes must have equal extents.
    """
    ax_a = [a.axis(p) for p, _ in pairs]
    ax_b = [b.axis(q) for _, q in pairs]
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise DimensionMismatchError("an axis appears in more than one pair")
    for i, j in zip(ax_a, ax_b):
        if a.dims[i] != b.dims[j]:
            raise DimensionMismatchError(
                f"axis {i} of a (extent {a.dims[i]}) does not match "
                f"axis {j} of b (extent {b.dims[j]})"
            )
    out = np.tensordot(a.data, b.data, axes=(ax_a, ax_b))
    labels = None
    if a.labels is not None and b.labels is not None:
        keep_a = [l for i, l in enumerate(a.labels) if i not in ax_a]
        keep_b = [l for j, l in enumerate(b.labels) if j not in ax_b]
        labels = tuple(keep_a + keep_b)
    return Tensor(out, labels)


def fuse(t: Tensor, groups: Sequence[Sequence[int]]) -> Tensor:
    """Fuse each group of axes into a single axis.

    ``groups`` must partition all axes of ``t``.  Axes are first permuted to
    the concatenated group order, then each group is reshaped (C order) into
    one axis whose extent is the product of the member extents.  ``split``
    inverts a single fusion given the original extents.
    """
    flat = [t.axis(i) for g in groups for i in g]
    if sorted(flat) != list(range(t.rank)):
        raise DimensionMismatchError("groups do not partition the axes")
    perm = t.data.transpose(flat)
    shape = []
    for g in groups:
        e = 1
        for i in g:
            e *= t.dims[t.axis(i)]
        shape.append(e)
    return Tensor(np.ascontiguousarray(perm).reshape(shape))


def split(t: Tensor, axis: int, extents: Sequence[int]) -> Tensor:
    """Split one axis into several; inverse of a single-group fusion."""
    ax = t.axis(axis)
    if int(np.prod(extents)) != t.dims[ax]:
        raise DimensionMismatchError(
            f"extents {tuple(extents)} do not factor axis of extent {t.dims[ax]}"
        )
    shape = t.dims[:ax] + tuple(extents) + t.dims[ax + 1 :]
    return Tensor(t.data.reshape(shape))


@dataclass(frozen=True)
class SymmEigResult:
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def _fix_column_signs(v: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive.

    np.argmax returns the first occurrence, which breaks magnitude ties by
    the lowest index.
    """
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def symm_eig(m: Tensor | np.ndarray, sym_tol: float = 1e-10) -> SymmEigResult:
    """Eigendecompose a symmetric matrix with a deterministic convention.

    The caller is expected to symmetrize first; asymmetry beyond ``sym_tol``
    (relative to the largest entry) is an error.
    """
    a = _as_array(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
    asym = float(np.abs(a - a.T).max()) if a.size else 0.0
    if asym > sym_tol * scale:
        raise DimensionMismatchError(
            f"matrix asymmetric: max |m - m.T| = {asym:.3e} (scale {scale:.3e})"
        )
    try:
        vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigh failed to converge: {exc}") from exc
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = vecs * _fix_column_signs(vecs)
    return SymmEigResult(vals, vecs)


def svd(m: Tensor | np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``m = U @ diag(s) @ V.T`` with descending s and fixed signs."""
    a = _as_array(m)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got rank {a.ndim}")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"svd failed to converge: {exc}") from exc
    signs = _fix_column_signs(u)
    return u * signs, s, (vh * signs[:, None]).T


# -- checkpoint records -------------------------------------------------------

_HEADER = struct.Struct("<Q")


def write_record(fh: BinaryIO, arr: np.ndarray) -> None:
    """Write one tensor record: rank and dims as u64 LE, then f64 values (C order)."""
    a = np.ascontiguousarray(arr, dtype="<f8")
    fh.write(_HEADER.pack(a.ndim))
    for d in a.shape:
        fh.write(_HEADER.pack(d))
    fh.write(a.tobytes(order="C"))


def read_record(fh: BinaryIO) -> np.ndarray:
    """Read one tensor record written by :func:`write_record`."""
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise EOFError("truncated record header")
    (rank,) = _HEADER.unpack(raw)
    dims = []
    for _ in range(rank):
        (d,) = _HEADER.unpack(fh.read(_HEADER.size))
        dims.append(d)
    count = int(np.prod(dims)) if dims else 1
    data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
    return data.reshape(dims).astype(np.float64)
