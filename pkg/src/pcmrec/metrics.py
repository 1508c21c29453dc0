"""Ranking agreement between true and predicted scores.

The score is ``LCS(S1, S2) / len(S1)`` where ``S1`` orders the test cells by
true rating and ``S2`` by predicted rating, both descending with ties broken by
ascending (user, item). Because the two sequences are permutations of the same
cell set, the LCS reduces to a longest increasing subsequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from pcmrec._backend import kernels
from pcmrec.errors import CellSetMismatch, DuplicateCell, EmptySequence, InvalidArgument


@dataclass(frozen=True)
class RankedCellSequence:
    """Cells as an (N, 2) array of (user, item), highest score first."""

    cells: np.ndarray

    def __len__(self) -> int:
        return int(self.cells.shape[0])

    def keys(self) -> np.ndarray:
        return _cell_keys(self.cells)


def _cell_keys(cells: np.ndarray) -> np.ndarray:
    # (user, item) -> one int64 that sorts like the pair
    return cells[:, 0].astype(np.int64) * (1 << 31) + cells[:, 1].astype(np.int64)


def ranking_sequence(cells, scores) -> RankedCellSequence:
    """Order cells by score descending, ties by (user, item) ascending."""
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.shape[0] != cells.shape[0]:
        raise InvalidArgument("cells and scores differ in length")
    if not np.all(np.isfinite(scores)):
        raise InvalidArgument("scores must be finite")
    if cells.shape[0] > 1 and np.unique(_cell_keys(cells)).size != cells.shape[0]:
        raise DuplicateCell("cell ids must be unique")
    order = np.lexsort((cells[:, 1], cells[:, 0], -scores))
    return RankedCellSequence(np.ascontiguousarray(cells[order]))


def lcs_length_dp(s1: Sequence[Hashable], s2: Sequence[Hashable]) -> int:
    """Quadratic dynamic program over the full table, one row at a time.

    Row recurrence ``L[i][j] = max(L[i][j-1], L[i-1][j], L[i-1][j-1] + [a_i == b_j])``;
    the ``L[i][j-1]`` term is a running maximum, so each row is one numpy pass.
    """
    if not len(s1) or not len(s2):
        return 0
    codes: dict = {}
    b = np.fromiter((codes.setdefault(x, len(codes)) for x in s2), dtype=np.int64, count=len(s2))
    prev = np.zeros(b.size + 1, dtype=np.int64)
    cur = np.zeros_like(prev)
    for x in s1:
        a = codes.get(x, -1)
        step = np.where(b == a, prev[:-1] + 1, prev[1:])
        np.maximum.accumulate(step, out=cur[1:])
        prev, cur = cur, prev
    return int(prev[-1])


def lcs_length_permutation(s1, s2) -> int:
    """LCS of two permutations of the same distinct integer keys, in O(n log n)."""
    s1 = np.asarray(s1, dtype=np.int64)
    s2 = np.asarray(s2, dtype=np.int64)
    order = np.argsort(s2, kind="stable")
    pos = order[np.searchsorted(s2, s1, sorter=order)]
    return int(kernels.lis_length(np.ascontiguousarray(pos, dtype=np.int64)))


def _is_permutation_pair(s1, s2) -> bool:
    if len(s1) != len(s2):
        return False
    try:
        a, b = set(s1), set(s2)
    except TypeError:
        return False
    return len(a) == len(s1) and a == b


def lcs_length(s1: Sequence[Hashable], s2: Sequence[Hashable]) -> int:
    """Longest common subsequence length of two arbitrary sequences.

    Permutation pairs take the LIS route; anything else the quadratic DP.
    """
    s1, s2 = list(s1), list(s2)
    if not s1 or not s2:
        return 0
    if _is_permutation_pair(s1, s2):
        index = {x: t for t, x in enumerate(s2)}
        pos = np.fromiter((index[x] for x in s1), dtype=np.int64, count=len(s1))
        return int(kernels.lis_length(pos))
    return lcs_length_dp(s1, s2)


def lcs_rating(s1: RankedCellSequence, s2: RankedCellSequence) -> float:
    """``LCS(s1, s2) / len(s1)`` for two orderings of the same cell set."""
    if len(s1) == 0:
        raise EmptySequence("cannot rate an empty sequence")
    k1, k2 = s1.keys(), s2.keys()
    if k1.shape != k2.shape or not np.array_equal(np.sort(k1), np.sort(k2)):
        raise CellSetMismatch("sequences do not contain the same cells")
    return lcs_length_permutation(k1, k2) / len(s1)


def rate_predictions(cells, truth, predicted) -> float:
    """LCS rating of the predicted order against the true order of ``cells``."""
    return lcs_rating(ranking_sequence(cells, truth), ranking_sequence(cells, predicted))
