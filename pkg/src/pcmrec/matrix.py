"""Sparse and dense matrix kernels.

Dense matrices are plain C-contiguous ``float64`` numpy arrays. Sparse rating
matrices are stored row-compressed (CSR) so that rows can be iterated and
sliced cheaply, which is all the sampling and product code needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pcmrec._backend import kernels
from pcmrec.errors import (
    DimensionMismatch,
    EmptyMatrix,
    IndexOutOfRange,
    InvalidArgument,
    NotSquare,
    NotSymmetric,
)

SYMMETRY_RTOL = 1e-12
JACOBI_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 64
# sym_eig(method="auto") hands larger problems to LAPACK
JACOBI_MAX_DIM = 256
SVD_DROP_RTOL = 1e-12
SIGN_RTOL = 1e-10


def as_dense(x, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a C-contiguous 2-D float64 array with finite values."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgument(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains non-finite values")
    return arr


class SparseRatingMatrix:
    """An m x n matrix with explicitly stored cells, in CSR layout.

    Cells within a row are kept sorted by column. Absent cells read as zero.
    Instances are treated as immutable; the index arrays are marked read-only.
    """

    __slots__ = ("rows", "cols", "indptr", "indices", "data")

    def __init__(self, rows: int, cols: int, indptr, indices, data):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.rows <= 0 or self.cols <= 0:
            raise InvalidArgument(f"matrix dimensions must be positive, got {self.rows}x{self.cols}")
        if self.indptr.shape != (self.rows + 1,) or self.indptr[0] != 0:
            raise InvalidArgument("indptr must have rows + 1 entries starting at 0")
        if np.any(np.diff(self.indptr) < 0):
            raise InvalidArgument("indptr must be non-decreasing")
        nnz = int(self.indptr[-1])
        if self.indices.shape != (nnz,) or self.data.shape != (nnz,):
            raise InvalidArgument("indices/data length must equal the declared nonzero count")
        if nnz and (self.indices.min() < 0 or self.indices.max() >= self.cols):
            raise IndexOutOfRange("column index out of range")
        if not np.all(np.isfinite(self.data)):
            raise InvalidArgument("cell values must be finite")
        for arr in (self.indptr, self.indices, self.data):
            arr.flags.writeable = False

    @classmethod
    def from_cells(cls, rows: int, cols: int, row_idx, col_idx, values) -> SparseRatingMatrix:
        """Build from coordinate triples; duplicates and out-of-range indices are rejected."""
        r = np.asarray(row_idx, dtype=np.int64).ravel()
        c = np.asarray(col_idx, dtype=np.int64).ravel()
        v = np.asarray(values, dtype=np.float64).ravel()
        if not (r.shape == c.shape == v.shape):
            raise InvalidArgument("row, column and value sequences differ in length")
        if r.size and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise IndexOutOfRange(f"cell index outside {rows}x{cols}")
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        if r.size > 1:
            dup = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise InvalidArgument(f"duplicate cell ({r[k]}, {c[k]})")
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=rows), out=indptr[1:])
        return cls(rows, cols, indptr, c, v)

    @classmethod
    def from_dense(cls, x) -> SparseRatingMatrix:
        x = as_dense(x)
        r, c = np.nonzero(x)
        return cls.from_cells(x.shape[0], x.shape[1], r, c, x[r, c])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def row_slice(self, rows) -> np.ndarray:
        """Dense rendering of the selected rows (repeats allowed), shape (len(rows), n)."""
        rows = np.asarray(rows, dtype=np.int64)
        out = np.zeros((rows.size, self.cols))
        for t, i in enumerate(rows):
            cols, vals = self.row(i)
            out[t, cols] = vals
        return out

    def coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.indptr))
        return rows, self.indices.copy(), self.data.copy()

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        r, c, v = self.coo()
        out[r, c] = v
        return out

    def scaled(self, factor: float) -> SparseRatingMatrix:
        return SparseRatingMatrix(self.rows, self.cols, self.indptr, self.indices, self.data * factor)

    def __repr__(self) -> str:
        return f"SparseRatingMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``U @ diag(sigma) @ V.T`` with ``rank`` retained triples."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each one's first non-negligible component is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        scale = np.max(np.abs(col)) if col.size else 0.0
        nz = np.flatnonzero(np.abs(col) > SIGN_RTOL * scale)
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def sym_eig(g, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric matrix.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns, with the first non-negligible entry of each
    column made positive.

    ``method="jacobi"`` runs cyclic Jacobi rotations until the off-diagonal
    Frobenius norm drops below ``1e-12 * ||G||_F`` (or 64 sweeps).
    ``method="lapack"`` calls ``numpy.linalg.eigh``. ``"auto"`` uses Jacobi up
    to dimension 256 and LAPACK above.
    """
    g = as_dense(g, "G")
    n, m = g.shape
    if n != m:
        raise NotSquare(f"expected a square matrix, got {n}x{m}")
    norm = float(np.linalg.norm(g))
    if np.linalg.norm(g - g.T) > SYMMETRY_RTOL * norm:
        raise NotSymmetric("matrix is not symmetric within 1e-12 relative tolerance")
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    a = 0.5 * (g + g.T)
    if method == "jacobi":
        w, q, _ = kernels.jacobi_eig(np.ascontiguousarray(a), JACOBI_RTOL * norm, JACOBI_MAX_SWEEPS)
    elif method == "lapack":
        w, q = np.linalg.eigh(a)
    else:
        raise InvalidArgument(f"unknown eigen method {method!r}")
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_signs(np.ascontiguousarray(q[:, order]))


def truncated_svd(x, k: int, method: str = "auto") -> SvdFactors:
    """Top-``k`` singular triples via the eigendecomposition of the smaller Gram matrix.

    Singular values are recomputed as the norms of the recovered factor, which
    keeps null directions at roundoff level instead of ``sqrt(eps)``. Values
    below ``1e-12 * sigma_1`` are dropped, so the returned rank can be lower
    than ``k``. Left vectors follow the sign convention of :func:`sym_eig`.
    """
    x = as_dense(x, "X")
    if k < 1:
        raise InvalidArgument(f"k must be at least 1, got {k}")
    if not np.any(x):
        raise EmptyMatrix("cannot decompose an all-zero matrix")
    m, n = x.shape
    wide = m <= n
    gram = x @ x.T if wide else x.T @ x
    _, vecs = sym_eig(gram, method=method)
    other = x.T @ vecs if wide else x @ vecs
    sigma = np.linalg.norm(other, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    keep = order[sigma > SVD_DROP_RTOL * sigma[0]][:k]
    sigma = sigma[: keep.size]
    vecs = vecs[:, keep]
    other = other[:, keep] / sigma
    if wide:
        return SvdFactors(U=vecs, sigma=sigma, V=other)
    # sign convention is defined on the left vectors
    u = _fix_signs(other)
    flip = np.sign(np.sum(u * other, axis=0))
    return SvdFactors(U=u, sigma=sigma, V=vecs * flip)


def sparse_times_dense(a: SparseRatingMatrix, b) -> np.ndarray:
    """Exact product ``A @ B``; each output entry accumulates left to right over A's row."""
    b = as_dense(b, "B")
    if a.cols != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.rows}x{a.cols} by {b.shape[0]}x{b.shape[1]}")
    return kernels.csr_matmul(a.indptr, a.indices, a.data, b)


def row_norms_squared(a: SparseRatingMatrix) -> np.ndarray:
    return kernels.csr_row_norms_sq(a.indptr, a.data)


def frobenius_norm_squared(a: SparseRatingMatrix) -> float:
    """Sum of :func:`row_norms_squared`, accumulated in row order."""
    return float(kernels.sequential_sum(row_norms_squared(a)))


def modified_gram_schmidt(v: np.ndarray) -> np.ndarray:
    """Orthonormalize columns in order; a column that collapses to zero is dropped."""
    cols = []
    for j in range(v.shape[1]):
        w = v[:, j].copy()
        for c in cols:
            w -= (c @ w) * c
        nrm = np.linalg.norm(w)
        if nrm > SVD_DROP_RTOL * max(np.linalg.norm(v[:, j]), 1e-300):
            cols.append(w / nrm)
    if not cols:
        return np.zeros((v.shape[0], 0))
    return np.column_stack(cols)


# MatrixMarket I/O ----------------------------------------------------------

MM_COORD_HEADER = "%%MatrixMarket matrix coordinate real general"
MM_ARRAY_HEADER = "%%MatrixMarket matrix array real general"


def read_matrix_market(path) -> SparseRatingMatrix:
    """Read a ``coordinate real general`` MatrixMarket file (1-based indices)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.lower().split() != MM_COORD_HEADER.lower().split():
            raise InvalidArgument(f"{path}: unsupported MatrixMarket header {header!r}")
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            if not line:
                raise InvalidArgument(f"{path}: missing size line")
            line = fh.readline()
        rows, cols, nnz = (int(t) for t in line.split())
        body = np.loadtxt(fh, ndmin=2, comments="%") if nnz else np.zeros((0, 3))
    if body.shape[0] != nnz:
        raise InvalidArgument(f"{path}: expected {nnz} entries, found {body.shape[0]}")
    if nnz and body.shape[1] != 3:
        raise InvalidArgument(f"{path}: coordinate lines must have 3 fields")
    r = body[:, 0].astype(np.int64) - 1
    c = body[:, 1].astype(np.int64) - 1
    return SparseRatingMatrix.from_cells(rows, cols, r, c, body[:, 2])


def write_matrix_market(path, a: SparseRatingMatrix) -> None:
    r, c, v = a.coo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MM_COORD_HEADER + "\n")
        fh.write(f"{a.rows} {a.cols} {a.nnz}\n")
        for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()):
            fh.write(f"{i + 1} {j + 1} {x!r}\n")


def write_dense_matrix_market(path, x) -> None:
    """Write a dense matrix in MatrixMarket ``array`` format (column-major values)."""
    x = as_dense(x)
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(MM_ARRAY_HEADER + "\n")
        fh.write(f"{x.shape[0]} {x.shape[1]}\n")
        np.savetxt(fh, x.ravel(order="F"), fmt="%.17g")


def frobenius_norm(x) -> float:
    return math.sqrt(float(np.sum(np.asarray(x) ** 2)))
