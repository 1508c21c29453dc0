"""Singular value thresholding for matrix completion.

Starting from ``Y = 0`` the iteration alternates
``X = shrink(Y, tau)`` and ``Y += delta * P_Omega(M - X)`` until the relative
residual on the observed set drops below ``tol``.

The textbook step ``delta = 1.2 mn / |Omega|`` assumes uniformly scattered
observations. Rating data is far from that (a few users rate thousands of
items), and the first steps overshoot without bound. With ``backtrack`` on, a
step that raises the residual is undone and retried with half the step size;
the halved step is kept for the rest of the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from pcmrec.errors import (
    EmptyMatrix,
    EmptyObservedSet,
    IndexOutOfRange,
    InvalidArgument,
    NumericalDivergence,
)
from pcmrec.matrix import SvdFactors, as_dense, truncated_svd

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class SvtConfig:
    tau: float
    delta: float
    max_iters: int = 100
    tol: float = 1e-4
    rank_cap: int = 30
    backtrack: bool = True

    def __post_init__(self):
        if not (self.tau > 0 and self.delta > 0 and self.tol > 0):
            raise InvalidArgument("tau, delta and tol must be positive")
        if self.max_iters < 1 or self.rank_cap < 1:
            raise InvalidArgument("max_iters and rank_cap must be at least 1")


def default_svt_params(dims: tuple[int, int], observed_count: int, **overrides) -> SvtConfig:
    """``tau = 5 sqrt(mn)``, ``delta = 1.2 mn / |Omega|``; other fields from ``overrides``."""
    m, n = dims
    if m <= 0 or n <= 0 or observed_count <= 0:
        raise InvalidArgument("dimensions and observed count must be positive")
    params = dict(tau=5.0 * math.sqrt(m * n), delta=1.2 * (m * n) / observed_count)
    params.update(overrides)
    return SvtConfig(**params)


@dataclass(frozen=True)
class ObservedSet:
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @classmethod
    def from_cells(cls, rows, cols, values) -> ObservedSet:
        r = np.ascontiguousarray(rows, dtype=np.int64)
        c = np.ascontiguousarray(cols, dtype=np.int64)
        v = np.ascontiguousarray(values, dtype=np.float64)
        if not (r.shape == c.shape == v.shape):
            raise InvalidArgument("row, column and value sequences differ in length")
        if r.size == 0:
            raise EmptyObservedSet("observed set is empty")
        keys = np.stack([r, c], axis=1)
        if np.unique(keys, axis=0).shape[0] != r.size:
            raise InvalidArgument("observed set has repeated positions")
        return cls(r, c, v)

    def __len__(self) -> int:
        return int(self.rows.size)


class SvtResult(NamedTuple):
    X: np.ndarray
    iters: int
    residual: float


def _soft_threshold(svd: SvdFactors, tau: float) -> SvdFactors:
    shrunk = svd.sigma - tau
    keep = shrunk > 0
    return SvdFactors(U=svd.U[:, keep], sigma=shrunk[keep], V=svd.V[:, keep])


def shrink(x, tau: float, rank_cap: int) -> np.ndarray:
    """``U (Sigma - tau)_+ V^T`` over at most ``rank_cap`` leading singular triples."""
    if tau < 0:
        raise InvalidArgument("tau must be non-negative")
    x = as_dense(x, "X")
    return _soft_threshold(truncated_svd(x, rank_cap), tau).reconstruct()


def _shrunk_factors(y: np.ndarray, cfg: SvtConfig) -> SvdFactors | None:
    if not np.any(y):
        return None
    factors = _soft_threshold(truncated_svd(y, cfg.rank_cap), cfg.tau)
    return factors if factors.rank else None


def _factors_at(factors: SvdFactors | None, rows, cols, size: int) -> np.ndarray:
    if factors is None:
        return np.zeros(size)
    return np.einsum("ij,j,ij->i", factors.U[rows], factors.sigma, factors.V[cols])


def svt_complete(obs: ObservedSet, dims: tuple[int, int], cfg: SvtConfig,
                 history: list | None = None) -> SvtResult:
    """Run SVT; if ``history`` is a list, each iteration's residual is appended to it."""
    if len(obs) == 0:
        raise EmptyObservedSet("observed set is empty")
    m, n = dims
    r, c, mv = obs.rows, obs.cols, obs.values
    if r.min() < 0 or r.max() >= m or c.min() < 0 or c.max() >= n:
        raise IndexOutOfRange(f"observed cell outside {m}x{n}")
    m_norm = float(np.linalg.norm(mv))
    if m_norm == 0.0:
        raise EmptyMatrix("all observed values are zero")

    y = np.zeros((m, n))
    delta = cfg.delta
    factors = None
    first = None
    last_ok = None  # (residual, gap) of the last accepted iterate
    accepted = (None, 1.0)
    for it in range(1, cfg.max_iters + 1):
        factors = _shrunk_factors(y, cfg)
        x_obs = _factors_at(factors, r, c, mv.shape[0])
        gap = mv - x_obs
        residual = float(np.linalg.norm(gap)) / m_norm
        if history is not None:
            history.append(residual)
        if first is None:
            first = residual
        if not math.isfinite(residual) or residual > DIVERGENCE_FACTOR * first:
            raise NumericalDivergence(f"SVT residual {residual:.3g} at iteration {it}")
        if cfg.backtrack and last_ok is not None and residual > last_ok[0]:
            # undo half of the previous step
            delta *= 0.5
            y[r, c] -= delta * last_ok[1]
            continue
        accepted = (factors, residual)
        if residual < cfg.tol:
            break
        y[r, c] += delta * gap
        last_ok = (residual, gap)
    factors, residual = accepted
    x = factors.reconstruct() if factors is not None else np.zeros((m, n))
    return SvtResult(X=x, iters=it, residual=residual)
