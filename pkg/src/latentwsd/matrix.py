"""Non-negative sparse count matrices and dense factor matrices.

Sparse matrices wrap a canonical scipy CSR array (sorted column indices,
duplicates summed, explicit zeros dropped). Dense factors are plain float64
``numpy.ndarray`` objects; :func:`check_dense` enforces their invariants.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import NonNegativityViolation, ParseError, ShapeError

EPSILON = 1e-12


class SparseMatrix:
    """Immutable non-negative ``rows x cols`` matrix in compressed-row form."""

    __slots__ = ("_csr",)

    def __init__(self, csr: sp.csr_matrix):
        # internal constructor; use from_triplets / from_dense / zeros
        csr = csr.tocsr(copy=True).astype(np.float64)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        data = csr.data
        if data.size and (not np.all(np.isfinite(data)) or data.min() < 0):
            raise NonNegativityViolation("sparse matrix entries must be finite and >= 0")
        for arr in (csr.data, csr.indices, csr.indptr):
            arr.flags.writeable = False
        self._csr = csr

    @classmethod
    def from_triplets(cls, rows: int, cols: int, triplets: Iterable[tuple]) -> "SparseMatrix":
        return from_triplets(rows, cols, triplets)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparseMatrix":
        _check_shape_args(rows, cols)
        return cls(sp.csr_matrix((rows, cols), dtype=np.float64))

    @classmethod
    def from_dense(cls, values) -> "SparseMatrix":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or (arr.size and arr.min() < 0):
            raise NonNegativityViolation("dense input contains negative or non-finite values")
        return cls(sp.csr_matrix(arr))

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def rows(self) -> int:
        return self._csr.shape[0]

    @property
    def cols(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz)

    @property
    def csr(self) -> sp.csr_matrix:
        """The underlying CSR array (read-only buffers)."""
        return self._csr

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Row indices, column indices and values in row-major, ascending-column order."""
        counts = np.diff(self._csr.indptr)
        row_idx = np.repeat(np.arange(self.rows, dtype=np.int64), counts)
        return row_idx, self._csr.indices.astype(np.int64), self._csr.data

    def triplets(self) -> list[tuple[int, int, float]]:
        r, c, v = self.coordinates()
        return [(int(i), int(j), float(x)) for i, j, x in zip(r, c, v)]

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self._csr.T.tocsr())

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def total(self) -> float:
        return float(self._csr.data.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if self.shape != other.shape or self.nnz != other.nnz:
            return False
        a, b = self._csr, other._csr
        return (
            np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    def __hash__(self):
        return hash((self.shape, self.nnz, self._csr.data.tobytes()))

    def __repr__(self) -> str:
        return f"SparseMatrix(rows={self.rows}, cols={self.cols}, nnz={self.nnz})"


def _check_shape_args(rows, cols):
    if int(rows) < 0 or int(cols) < 0:
        raise ShapeError(f"negative dimension ({rows}, {cols})")


def from_triplets(rows: int, cols: int, triplets: Iterable[tuple]) -> SparseMatrix:
    """Build a sparse matrix from ``(row, col, value)`` triplets; duplicates are summed.

    Raises
    ------
    NonNegativityViolation
        If any value is negative or not finite.
    IndexError
        If an index falls outside ``rows x cols``.
    """
    _check_shape_args(rows, cols)
    triplets = list(triplets)
    if not triplets:
        return SparseMatrix.zeros(rows, cols)
    r = np.empty(len(triplets), dtype=np.int64)
    c = np.empty(len(triplets), dtype=np.int64)
    v = np.empty(len(triplets), dtype=np.float64)
    for n, (i, j, x) in enumerate(triplets):
        x = float(x)
        if not math.isfinite(x) or x < 0:
            raise NonNegativityViolation(f"entry ({i}, {j}) has invalid value {x!r}")
        if not (0 <= i < rows and 0 <= j < cols):
            raise IndexError(f"entry ({i}, {j}) outside {rows}x{cols} matrix")
        r[n], c[n], v[n] = i, j, x
    return SparseMatrix(sp.coo_matrix((v, (r, c)), shape=(rows, cols)))


def check_dense(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a 2-d float64 array, verifying every entry is finite and >= 0."""
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonNegativityViolation(f"{name} contains non-finite values")
    if arr.size and arr.min() < 0:
        raise NonNegativityViolation(f"{name} contains negative values")
    return arr


def matmul(lhs, rhs) -> np.ndarray:
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if lhs.ndim != 2 or rhs.ndim != 2 or lhs.shape[1] != rhs.shape[0]:
        raise ShapeError(f"cannot multiply {lhs.shape} by {rhs.shape}")
    out = lhs @ rhs
    if not np.all(np.isfinite(out)):
        raise NonNegativityViolation("product overflowed")
    return out


def sparse_dense_matmul(lhs: SparseMatrix, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.ndim != 2 or lhs.cols != rhs.shape[0]:
        raise ShapeError(f"cannot multiply {lhs.shape} by {rhs.shape}")
    # CSR kernel: each output row accumulates its nonzeros in ascending column order
    return np.asarray(lhs.csr @ rhs)


def _check_factor_shapes(X: SparseMatrix, W: np.ndarray, H: np.ndarray):
    if W.ndim != 2 or H.ndim != 2:
        raise ShapeError("factors must be 2-d")
    if W.shape[0] != X.rows or H.shape[1] != X.cols or W.shape[1] != H.shape[0]:
        raise ShapeError(f"factors {W.shape} x {H.shape} do not match X {X.shape}")


def product_at(W: np.ndarray, H: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Entries ``(W @ H)[rows[t], cols[t]]`` without forming the full product."""
    if rows.size == 0:
        return np.zeros(0)
    return np.einsum("tk,kt->t", W[rows], H[:, cols])


def kl_objective(X: SparseMatrix, W, H, epsilon: float = EPSILON) -> float:
    """Generalized KL divergence D(X || WH) with 0 log 0 = 0.

    Only the nonzeros of X contribute the ``x log(x/y) - x`` terms; the ``+y``
    term is summed over every entry in closed form.
    """
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    _check_factor_shapes(X, W, H)
    r, c, x = X.coordinates()
    y = np.maximum(product_at(W, H, r, c), epsilon)
    total_y = float(W.sum(axis=0) @ H.sum(axis=1))
    value = float(np.sum(x * np.log(x / y)) - x.sum() + total_y)
    return max(value, 0.0)


def frobenius_objective(X: SparseMatrix, W, H) -> float:
    """Squared Frobenius norm ||X - WH||^2."""
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    _check_factor_shapes(X, W, H)
    r, c, x = X.coordinates()
    y = product_at(W, H, r, c)
    on_support = float(np.sum((x - y) ** 2))
    # ||WH||^2 restricted to the zero pattern of X
    full = float(np.sum((W.T @ W) * (H @ H.T)))
    off_support = full - float(np.sum(y * y))
    return max(on_support + max(off_support, 0.0), 0.0)


# --- text triplet format: "rows cols nnz" header, then "row col value" lines ---


def _format_value(v: float) -> str:
    return repr(float(v))


def dump_matrix(M, path) -> None:
    """Write a sparse or dense matrix in the text triplet format."""
    if isinstance(M, SparseMatrix):
        rows, cols = M.shape
        trip = M.triplets()
    else:
        arr = check_dense(M)
        rows, cols = arr.shape
        nz = np.argwhere(arr != 0)
        trip = [(int(i), int(j), float(arr[i, j])) for i, j in nz]
    lines = [f"{rows} {cols} {len(trip)}"]
    lines.extend(f"{i} {j} {_format_value(v)}" for i, j, v in trip)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def _read_triplet_file(path):
    text = Path(path).read_text(encoding="ascii")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("missing header", line=1, path=path)
    try:
        rows, cols, nnz = (int(t) for t in lines[0].split())
    except ValueError:
        raise ParseError("header must be 'rows cols nnz'", line=1, path=path) from None
    body = lines[1:]
    if len(body) != nnz:
        raise ParseError(f"header declares {nnz} entries, found {len(body)}", path=path)
    trip = []
    for lineno, line in enumerate(body, start=2):
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("expected 'row col value'", line=lineno, path=path)
        try:
            trip.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise ParseError(f"bad entry {line!r}", line=lineno, path=path) from None
    return rows, cols, trip


def load_matrix(path) -> SparseMatrix:
    rows, cols, trip = _read_triplet_file(path)
    return from_triplets(rows, cols, trip)


def load_dense(path) -> np.ndarray:
    rows, cols, trip = _read_triplet_file(path)
    out = np.zeros((rows, cols))
    for i, j, v in trip:
        if not (0 <= i < rows and 0 <= j < cols):
            raise IndexError(f"entry ({i}, {j}) outside {rows}x{cols} matrix")
        out[i, j] = v
    return check_dense(out)
