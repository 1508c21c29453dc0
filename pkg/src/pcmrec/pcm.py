"""Probability completion model.

Sketch the rating matrix by length-squared row sampling (``S``, p x n), sketch
``S`` again by column sampling (``W``, p x p), take the top-k SVD of ``W`` and
lift its left singular vectors to approximate right singular vectors of the
full matrix, ``V[:, i] = S^T U_W[:, i] / sigma_i``. The completed matrix is the
projection ``D = (A V) V^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pcmrec.errors import EmptyMatrix, IndexOutOfRange, InvalidArgument, RankCollapse
from pcmrec.matrix import (
    SparseRatingMatrix,
    frobenius_norm_squared,
    modified_gram_schmidt,
    sparse_times_dense,
    truncated_svd,
)
from pcmrec.sampling import sample_columns, sample_rows


def default_sample_count(m: int, k: int) -> int:
    return min(m, max(4 * k, 120))


@dataclass(frozen=True)
class PcmConfig:
    k: int = 30
    p: int | None = None  # None -> default_sample_count(m, k)
    seed: int = 0
    reorthonormalize: bool = True
    sigma_floor: float = 1e-10

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgument(f"k must be at least 1, got {self.k}")
        if self.p is not None and self.p < self.k:
            raise InvalidArgument(f"need k <= p, got k={self.k}, p={self.p}")
        if not self.sigma_floor >= 0.0:
            raise InvalidArgument("sigma_floor must be non-negative")

    def sample_count(self, m: int) -> int:
        return self.p if self.p is not None else max(self.k, default_sample_count(m, self.k))


@dataclass(frozen=True)
class CompletionResult:
    D: np.ndarray
    V: np.ndarray
    effective_rank: int
    seed: int
    p: int
    source_rows: np.ndarray = field(repr=False)
    source_cols: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)


def complete(a: SparseRatingMatrix, cfg: PcmConfig = PcmConfig()) -> CompletionResult:
    if frobenius_norm_squared(a) == 0.0:
        raise EmptyMatrix("cannot complete an all-zero matrix")
    p = cfg.sample_count(a.rows)
    rows = sample_rows(a, p, cfg.seed)
    cols = sample_columns(rows.matrix, p, cfg.seed)
    svd = truncated_svd(cols.matrix, cfg.k)
    keep = svd.sigma >= cfg.sigma_floor * svd.sigma[0]
    if not np.any(keep):
        raise RankCollapse("no singular value of the column sketch survived the floor")
    sigma = svd.sigma[keep]
    v = rows.matrix.T @ svd.U[:, keep] / sigma
    if cfg.reorthonormalize:
        v = modified_gram_schmidt(v)
        if v.shape[1] == 0:
            raise RankCollapse("lifted singular vectors are numerically zero")
    v = np.ascontiguousarray(v)
    d = sparse_times_dense(a, v) @ v.T
    return CompletionResult(
        D=d,
        V=v,
        effective_rank=int(v.shape[1]),
        seed=cfg.seed,
        p=p,
        source_rows=rows.source_rows,
        source_cols=cols.source_cols,
        sigma=sigma,
    )


def predict_cells(result: CompletionResult, rows, cols) -> np.ndarray:
    """Read ``D`` at the given cells, preserving order."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    m, n = result.D.shape
    if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
        raise IndexOutOfRange(f"cell outside the {m}x{n} completed matrix")
    return result.D[rows, cols]
