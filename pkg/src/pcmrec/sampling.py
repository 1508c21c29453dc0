"""Length-squared row and column sampling.

Rows are drawn i.i.d. with replacement, row ``i`` with probability
``P_i = ||A_i||^2 / ||A||_F^2``, and each drawn row is divided by
``sqrt(p * P_i)``. With that scaling ``E[S^T S] = A^T A`` holds exactly.
Columns of a dense sketch are sampled the same way, giving ``E[W W^T] = S S^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pcmrec import seeding
from pcmrec.errors import EmptyMatrix, InvalidArgument
from pcmrec.matrix import SparseRatingMatrix, as_dense, frobenius_norm_squared, row_norms_squared


@dataclass(frozen=True)
class RowSketch:
    matrix: np.ndarray
    source_rows: np.ndarray
    probabilities: np.ndarray

    @property
    def p(self) -> int:
        return int(self.source_rows.shape[0])


@dataclass(frozen=True)
class ColumnSketch:
    matrix: np.ndarray
    source_cols: np.ndarray
    probabilities: np.ndarray


def length_squared_draw(norms_sq: np.ndarray, total: float, p: int, rng: np.random.Generator):
    """Draw ``p`` indices with probability proportional to ``norms_sq``.

    Returns ``(indices, probabilities_of_drawn, scale)`` where ``scale`` is the
    per-draw factor ``1 / sqrt(p * P_i)``.
    """
    if p < 1:
        raise InvalidArgument(f"sample count must be at least 1, got {p}")
    if not total > 0.0:
        raise EmptyMatrix("cannot sample from an all-zero matrix")
    probs = norms_sq / total
    # inverse-CDF draw on [0, cdf[-1]); zero-probability entries have empty
    # intervals and can never be the first cdf value above u
    cdf = np.cumsum(probs)
    u = rng.random(p) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    chosen = probs[idx]
    return idx, chosen, 1.0 / np.sqrt(p * chosen)


def sample_rows(a: SparseRatingMatrix, p: int, seed: int) -> RowSketch:
    """Sample ``p`` scaled rows of ``a``; deterministic for a given seed."""
    rng = seeding.generator(seed, seeding.ROWS)
    idx, probs, scale = length_squared_draw(row_norms_squared(a), frobenius_norm_squared(a), p, rng)
    s = a.row_slice(idx) * scale[:, None]
    return RowSketch(matrix=s, source_rows=idx, probabilities=probs)


def sample_columns(s, p: int, seed: int) -> ColumnSketch:
    """Sample ``p`` scaled columns of a dense matrix."""
    s = as_dense(s, "S")
    rng = seeding.generator(seed, seeding.COLUMNS)
    col_sq = np.sum(s * s, axis=0)
    idx, probs, scale = length_squared_draw(col_sq, float(np.sum(col_sq)), p, rng)
    w = np.ascontiguousarray(s[:, idx] * scale[None, :])
    return ColumnSketch(matrix=w, source_cols=idx, probabilities=probs)
