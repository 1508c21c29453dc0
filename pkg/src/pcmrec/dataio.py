"""MovieLens ratings ingestion, subsampling and the half/half split."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from pcmrec import seeding
from pcmrec.errors import (
    DuplicatePair,
    EmptyDataset,
    InvalidRating,
    InvalidRatio,
    MalformedRow,
    MissingHeader,
)
from pcmrec.matrix import SparseRatingMatrix

HEADER = ["userId", "movieId", "rating", "timestamp"]


@dataclass(frozen=True)
class RatingsDataset:
    """Rating events plus the dense index maps of the dataset they came from.

    ``users``/``items`` hold dense indices; ``user_ids``/``item_ids`` map a dense
    index back to the raw id. Subsets share the parent's maps and shape.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    timestamps: np.ndarray
    user_ids: np.ndarray
    item_ids: np.ndarray

    @property
    def m(self) -> int:
        return int(self.user_ids.shape[0])

    @property
    def n(self) -> int:
        return int(self.item_ids.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    def __len__(self) -> int:
        return int(self.ratings.shape[0])

    @property
    def user_index(self) -> dict:
        return {int(raw): k for k, raw in enumerate(self.user_ids.tolist())}

    @property
    def item_index(self) -> dict:
        return {int(raw): k for k, raw in enumerate(self.item_ids.tolist())}

    def take(self, idx) -> RatingsDataset:
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, users=self.users[idx], items=self.items[idx],
                       ratings=self.ratings[idx], timestamps=self.timestamps[idx])

    def cells(self) -> np.ndarray:
        return np.stack([self.users, self.items], axis=1)


def _valid_rating(x: float) -> bool:
    twice = 2.0 * x
    return twice == math.floor(twice) and 1.0 <= twice <= 10.0


def from_events(raw_users, raw_items, ratings, timestamps=None) -> RatingsDataset:
    """Build a dataset from raw-id events; index maps follow first appearance."""
    raw_users = np.asarray(raw_users, dtype=np.int64)
    raw_items = np.asarray(raw_items, dtype=np.int64)
    ratings = np.asarray(ratings, dtype=np.float64)
    if timestamps is None:
        timestamps = np.zeros(ratings.shape[0], dtype=np.int64)
    timestamps = np.asarray(timestamps, dtype=np.int64)
    for k, r in enumerate(ratings.tolist()):
        if not _valid_rating(r):
            raise InvalidRating(r)
    user_ids, users = _first_appearance(raw_users)
    item_ids, items = _first_appearance(raw_items)
    if users.size > 1:
        keys = users * len(item_ids) + items
        if np.unique(keys).size != keys.size:
            order = np.argsort(keys, kind="stable")
            dup = order[1:][keys[order][1:] == keys[order][:-1]][0]
            raise DuplicatePair(
                f"duplicate rating for user {raw_users[dup]} and item {raw_items[dup]} (line {dup + 2})")
    return RatingsDataset(users, items, ratings, timestamps, user_ids, item_ids)


def _first_appearance(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(uniq.size, dtype=np.int64)
    order = np.argsort(first)
    rank[order] = np.arange(uniq.size)
    return uniq[order], rank[inverse.ravel()]


def load_movielens(path) -> RatingsDataset:
    """Parse a MovieLens ``ratings.csv`` (header ``userId,movieId,rating,timestamp``)."""
    path = Path(path)
    users, items, ratings, stamps = [], [], [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise MissingHeader(f"{path}: first line must be {','.join(HEADER)}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRow(line, f"expected 4 fields, got {len(row)}")
            try:
                u, i, r, t = int(row[0]), int(row[1]), float(row[2]), int(row[3])
            except ValueError as exc:
                raise MalformedRow(line, str(exc)) from None
            if not _valid_rating(r):
                raise InvalidRating(row[2], line=line)
            users.append(u)
            items.append(i)
            ratings.append(r)
            stamps.append(t)
    if not ratings:
        raise EmptyDataset(f"{path}: no rating rows")
    return from_events(users, items, ratings, stamps)


def _exact_fraction(ratio: float) -> Fraction:
    # 0.7 -> 7/10 rather than its binary expansion, so floor(0.7 * N) is exact
    return Fraction(ratio).limit_denominator(1_000_000)


def subsample(ds: RatingsDataset, ratio: float, seed: int) -> RatingsDataset:
    """Keep ``floor(ratio * N)`` events drawn uniformly without replacement.

    Kept events stay in their original order; index maps and shape are unchanged.
    """
    if not 0.0 < ratio <= 1.0:
        raise InvalidRatio(f"ratio must lie in (0, 1], got {ratio}")
    keep = math.floor(_exact_fraction(ratio) * len(ds))
    if keep == len(ds):
        return ds
    rng = seeding.generator(seed, seeding.SUBSAMPLE)
    idx = np.sort(rng.choice(len(ds), size=keep, replace=False))
    return ds.take(idx)


def split_half(ds: RatingsDataset, seed: int) -> tuple[RatingsDataset, RatingsDataset]:
    """Seeded shuffle; the test side gets ``floor(N / 2)`` events, train the rest."""
    if len(ds) == 0:
        raise EmptyDataset("cannot split an empty dataset")
    rng = seeding.generator(seed, seeding.SPLIT)
    perm = rng.permutation(len(ds))
    n_test = len(ds) // 2
    return ds.take(np.sort(perm[n_test:])), ds.take(np.sort(perm[:n_test]))


def to_matrix(ds: RatingsDataset) -> SparseRatingMatrix:
    if len(ds) == 0:
        raise EmptyDataset("cannot build a matrix from an empty dataset")
    return SparseRatingMatrix.from_cells(ds.m, ds.n, ds.users, ds.items, ds.ratings)


def synthetic_ratings(m: int, n: int, count: int, seed: int = 0, rank: int = 8) -> RatingsDataset:
    """MovieLens-shaped synthetic data for tests and offline benchmark runs.

    Users and items get power-law activity, true preferences come from a
    low-rank model plus noise, and ratings are rounded onto the half-star grid.
    Every user and item appears at least once when ``count >= max(m, n)``.
    """
    if count > m * n or count < max(m, n):
        raise ValueError("need max(m, n) <= count <= m * n")
    rng = np.random.default_rng(seed)
    user_w = rng.pareto(1.2, m) + 0.05
    item_w = rng.pareto(0.9, n) + 0.05
    user_w /= user_w.sum()
    item_w /= item_w.sum()
    # cover every user and item once, then fill by activity weights
    base_u = np.concatenate([np.arange(m), rng.choice(m, max(0, n - m), p=user_w)])
    base_i = np.concatenate([np.arange(n), rng.choice(n, max(0, m - n), p=item_w)])
    rng.shuffle(base_i)
    keys = set((base_u * n + base_i).tolist())
    while len(keys) < count:
        need = count - len(keys)
        u = rng.choice(m, 2 * need, p=user_w)
        i = rng.choice(n, 2 * need, p=item_w)
        for k in (u * n + i).tolist():
            keys.add(k)
            if len(keys) == count:
                break
    keys = np.array(sorted(keys), dtype=np.int64)
    rng.shuffle(keys)
    users, items = keys // n, keys % n
    pu = rng.normal(0, 1, (m, rank))
    qi = rng.normal(0, 1, (n, rank))
    score = (3.5 + 0.4 * rng.normal(size=m)[users] + 0.5 * rng.normal(size=n)[items]
             + 0.35 * np.einsum("ij,ij->i", pu[users], qi[items]) + 0.5 * rng.normal(size=count))
    ratings = np.clip(np.round(score * 2) / 2, 0.5, 5.0)
    stamps = 964982703 + np.arange(count, dtype=np.int64)
    return from_events(users + 1, items + 1, ratings, stamps)


def write_movielens(ds: RatingsDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for u, i, r, t in zip(ds.user_ids[ds.users].tolist(), ds.item_ids[ds.items].tolist(),
                              ds.ratings.tolist(), ds.timestamps.tolist()):
            w.writerow([u, i, f"{r:.1f}", t])
