"""SVD++ latent-factor model trained with stochastic gradient descent.

Prediction for user ``u`` and item ``i``::

    r_hat = mu + b_i + b_u + q_i . (p_u + |R(u)|^-1/2 * sum_{j in R(u)} y_j)

where ``R(u)`` is the set of items ``u`` rated in the training data. An empty
``R(u)`` contributes nothing. Predictions are not clipped to the rating scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from pcmrec import seeding
from pcmrec._backend import kernels
from pcmrec.errors import EmptyDataset, IndexOutOfRange, InvalidArgument, NumericalDivergence

MODEL_FORMAT = "pcmrec-svdpp"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    f: int = 50
    learning_rate: float = 0.005
    regularization: float = 0.02
    init_scale: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.f < 1:
            raise InvalidArgument("epochs must be >= 0 and f >= 1")
        if not (self.learning_rate > 0 and self.regularization >= 0 and self.init_scale >= 0):
            raise InvalidArgument("learning_rate must be positive; regularization and init_scale non-negative")


@dataclass
class SvdPlusPlusModel:
    mu: float
    b_user: np.ndarray
    b_item: np.ndarray
    p_user: np.ndarray
    q_item: np.ndarray
    y_item: np.ndarray
    # training items per user, CSR-style
    r_indptr: np.ndarray = field(repr=False)
    r_indices: np.ndarray = field(repr=False)
    rmse_trace: list = field(default_factory=list)

    @property
    def f(self) -> int:
        return int(self.p_user.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.b_user.shape[0], self.b_item.shape[0])

    def rated_items(self, u: int) -> np.ndarray:
        return self.r_indices[self.r_indptr[u]:self.r_indptr[u + 1]]

    def copy(self) -> SvdPlusPlusModel:
        return replace(
            self,
            b_user=self.b_user.copy(), b_item=self.b_item.copy(),
            p_user=self.p_user.copy(), q_item=self.q_item.copy(), y_item=self.y_item.copy(),
            rmse_trace=list(self.rmse_trace),
        )


def _implicit(model: SvdPlusPlusModel, rated) -> np.ndarray:
    rated = np.asarray(rated, dtype=np.int64)
    if rated.size == 0:
        return np.zeros(model.f)
    return model.y_item[rated].sum(axis=0) / math.sqrt(rated.size)


def predict(model: SvdPlusPlusModel, u: int, i: int, rated=None) -> float:
    """Score for ``(u, i)``; ``rated`` defaults to u's training items."""
    m, n = model.shape
    if not (0 <= u < m and 0 <= i < n):
        raise IndexOutOfRange(f"cell ({u}, {i}) outside {m}x{n}")
    if rated is None:
        rated = model.rated_items(u)
    elif len(rated) and (min(rated) < 0 or max(rated) >= n):
        raise IndexOutOfRange("implicit item index out of range")
    z = _implicit(model, rated)
    return float(model.mu + model.b_item[i] + model.b_user[u] + model.q_item[i] @ (model.p_user[u] + z))


def predict_many(model: SvdPlusPlusModel, users, items) -> np.ndarray:
    """Vectorized :func:`predict` using each user's training items as R(u)."""
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    m, n = model.shape
    if users.size and (users.min() < 0 or users.max() >= m or items.min() < 0 or items.max() >= n):
        raise IndexOutOfRange(f"cell outside {m}x{n}")
    pz = model.p_user + _implicit_all(model)
    return model.mu + model.b_item[items] + model.b_user[users] + np.einsum(
        "ij,ij->i", model.q_item[items], pz[users])


def _implicit_all(model: SvdPlusPlusModel) -> np.ndarray:
    counts = np.diff(model.r_indptr)
    z = np.zeros_like(model.p_user)
    np.add.at(z, np.repeat(np.arange(counts.size), counts), model.y_item[model.r_indices])
    nz = counts > 0
    z[nz] /= np.sqrt(counts[nz])[:, None]
    return z


def _rated_lists(users: np.ndarray, items: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((items, users))
    indptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(np.bincount(users, minlength=m), out=indptr[1:])
    return indptr, np.ascontiguousarray(items[order])


def train(users, items, ratings, shape: tuple[int, int], cfg: TrainConfig = TrainConfig()) -> SvdPlusPlusModel:
    """Fit SVD++ on dense-indexed training triples.

    Biases start at zero, factor grids at seeded ``uniform(-init_scale, init_scale)``.
    Each epoch visits the ratings in a fresh seeded permutation; the training
    RMSE after every epoch is kept in ``model.rmse_trace``.
    """
    users = np.ascontiguousarray(users, dtype=np.int64)
    items = np.ascontiguousarray(items, dtype=np.int64)
    ratings = np.ascontiguousarray(ratings, dtype=np.float64)
    if ratings.size == 0:
        raise EmptyDataset("no training ratings")
    m, n = shape
    if users.min() < 0 or users.max() >= m or items.min() < 0 or items.max() >= n:
        raise IndexOutOfRange(f"training cell outside {m}x{n}")
    init = seeding.generator(cfg.seed, seeding.INIT)
    s = cfg.init_scale
    model = SvdPlusPlusModel(
        mu=float(ratings.mean()),
        b_user=np.zeros(m),
        b_item=np.zeros(n),
        p_user=init.uniform(-s, s, (m, cfg.f)) if s else np.zeros((m, cfg.f)),
        q_item=init.uniform(-s, s, (n, cfg.f)) if s else np.zeros((n, cfg.f)),
        y_item=init.uniform(-s, s, (n, cfg.f)) if s else np.zeros((n, cfg.f)),
        r_indptr=None, r_indices=None,
    )
    model.r_indptr, model.r_indices = _rated_lists(users, items, m)
    shuffle = seeding.generator(cfg.seed, seeding.SHUFFLE)
    for epoch in range(cfg.epochs):
        order = np.ascontiguousarray(shuffle.permutation(ratings.size), dtype=np.int64)
        kernels.svdpp_epoch(order, users, items, ratings, model.r_indptr, model.r_indices,
                            model.mu, model.b_user, model.b_item, model.p_user, model.q_item,
                            model.y_item, cfg.learning_rate, cfg.regularization)
        rmse = float(np.sqrt(np.mean((ratings - predict_many(model, users, items)) ** 2)))
        if not math.isfinite(rmse):
            raise NumericalDivergence(f"training RMSE became non-finite in epoch {epoch + 1}")
        model.rmse_trace.append(rmse)
    return model


# Loss and gradients for a single rating ------------------------------------

def loss(model: SvdPlusPlusModel, u: int, i: int, r: float, rated, reg: float) -> float:
    """``0.5 e^2 + 0.5 reg (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2 + sum_j |y_j|^2)``."""
    rated = np.asarray(rated, dtype=np.int64)
    e = r - predict(model, u, i, rated)
    penalty = (model.b_user[u] ** 2 + model.b_item[i] ** 2 + model.p_user[u] @ model.p_user[u]
               + model.q_item[i] @ model.q_item[i] + np.sum(model.y_item[rated] ** 2))
    return 0.5 * e * e + 0.5 * reg * float(penalty)


def gradients(model: SvdPlusPlusModel, u: int, i: int, r: float, rated, reg: float) -> dict:
    """Analytic partials of :func:`loss`; the SGD step is ``param -= lr * grad``."""
    rated = np.asarray(rated, dtype=np.int64)
    e = r - predict(model, u, i, rated)
    z = _implicit(model, rated)
    norm = 1.0 / math.sqrt(rated.size) if rated.size else 0.0
    q = model.q_item[i]
    return {
        "b_user": -e + reg * model.b_user[u],
        "b_item": -e + reg * model.b_item[i],
        "p_user": -e * q + reg * model.p_user[u],
        "q_item": -e * (model.p_user[u] + z) + reg * q,
        "y_item": -e * norm * q[None, :] + reg * model.y_item[rated],
    }


def gradient_check(model: SvdPlusPlusModel, rating: tuple, rated=None,
                   reg: float = 0.02, h: float = 1e-5) -> float:
    """Max relative gap between analytic and central-difference gradients.

    ``rating`` is ``(u, i, r)``. The relative gap per coordinate is
    ``|a - fd| / max(|a|, |fd|, 1e-6)``.
    """
    u, i, r = rating
    rated = model.rated_items(u) if rated is None else np.asarray(rated, dtype=np.int64)
    work = model.copy()
    g = gradients(work, u, i, r, rated, reg)
    coords = [(work.b_user, (u,), g["b_user"]), (work.b_item, (i,), g["b_item"])]
    for d in range(work.f):
        coords.append((work.p_user, (u, d), g["p_user"][d]))
        coords.append((work.q_item, (i, d), g["q_item"][d]))
    for t, j in enumerate(rated.tolist()):
        for d in range(work.f):
            coords.append((work.y_item, (j, d), g["y_item"][t, d]))
    worst = 0.0
    for arr, pos, a in coords:
        base = arr[pos]
        arr[pos] = base + h
        x_hi = arr[pos]
        up = loss(work, u, i, r, rated, reg)
        arr[pos] = base - h
        x_lo = arr[pos]
        down = loss(work, u, i, r, rated, reg)
        arr[pos] = base
        fd = (up - down) / (x_hi - x_lo)
        a = float(a)
        worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), 1e-6))
    return worst


def save_model(model: SvdPlusPlusModel, path) -> None:
    """Write a version-tagged ``.npz`` archive (see README for the field list)."""
    np.savez(
        path,
        format=np.array(MODEL_FORMAT), version=np.array(MODEL_VERSION),
        mu=np.array(model.mu), b_user=model.b_user, b_item=model.b_item,
        p_user=model.p_user, q_item=model.q_item, y_item=model.y_item,
        r_indptr=model.r_indptr, r_indices=model.r_indices,
        rmse_trace=np.asarray(model.rmse_trace, dtype=np.float64),
    )


def load_model(path) -> SvdPlusPlusModel:
    with np.load(path, allow_pickle=False) as z:
        if str(z["format"]) != MODEL_FORMAT:
            raise InvalidArgument(f"{path}: not an SVD++ model archive")
        if int(z["version"]) != MODEL_VERSION:
            raise InvalidArgument(f"{path}: unsupported model version {int(z['version'])}")
        return SvdPlusPlusModel(
            mu=float(z["mu"]), b_user=z["b_user"], b_item=z["b_item"],
            p_user=z["p_user"], q_item=z["q_item"], y_item=z["y_item"],
            r_indptr=z["r_indptr"], r_indices=z["r_indices"],
            rmse_trace=z["rmse_trace"].tolist(),
        )


def fit(dataset, cfg: TrainConfig = TrainConfig()) -> SvdPlusPlusModel:
    """:func:`train` on a :class:`~pcmrec.dataio.RatingsDataset`."""
    return train(dataset.users, dataset.items, dataset.ratings, dataset.shape, cfg)
