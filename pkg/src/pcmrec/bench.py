"""Benchmark grid: (method x fraction x repetition) runs scored by LCS rating."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from pcmrec import pcm, seeding, svdpp, svt
from pcmrec.dataio import RatingsDataset, split_half, subsample, to_matrix
from pcmrec.errors import ConfigError, PcmrecError
from pcmrec.metrics import rate_predictions

log = logging.getLogger(__name__)

METHODS = ("pcm", "svt", "svdpp")
REPORT_HEADER = ["method", "fraction", "test_cells", "wall_ms", "lcs_rating", "seed", "diag"]
PAPER_FRACTIONS = tuple(round(0.1 * k, 1) for k in range(1, 11))


@dataclass
class SvtSettings:
    """SVT knobs; ``tau``/``delta`` default to the size-dependent rules at run time."""

    tau: float | None = None
    delta: float | None = None
    max_iters: int = 100
    tol: float = 1e-4
    rank_cap: int = 30
    backtrack: bool = True


@dataclass
class ExperimentConfig:
    dataset: str | None = None
    methods: tuple = METHODS
    fractions: tuple = PAPER_FRACTIONS
    seed: int = 0
    pcm_k: int = 30
    pcm_p: int | None = None
    svt: SvtSettings = field(default_factory=SvtSettings)
    svdpp_epochs: int = 30
    svdpp_f: int = 50
    svdpp_lr: float = 0.005
    svdpp_reg: float = 0.02
    svdpp_init_scale: float = 0.05
    repetitions: int = 1
    jobs: int = 1
    out: str | None = None

    def validate(self) -> None:
        if not self.methods:
            raise ConfigError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s): {', '.join(bad)}")
        if not self.fractions:
            raise ConfigError("at least one fraction is required")
        if any(not 0.0 < f <= 1.0 for f in self.fractions):
            raise ConfigError("fractions must lie in (0, 1]")
        if list(self.fractions) != sorted(self.fractions):
            raise ConfigError("fractions must be sorted ascending")
        if self.repetitions < 1 or self.jobs < 1:
            raise ConfigError("repetitions and jobs must be at least 1")
        try:
            seeding.check_seed(self.seed)
        except PcmrecError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class ReportRow:
    method: str
    fraction: float
    test_cells: int
    wall_ms: float
    lcs_rating: float | None
    seed: int
    diag: str

    @property
    def failed(self) -> bool:
        return self.lcs_rating is None


def _diag(**items) -> str:
    return ";".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in items.items())


def _fmt(x: float) -> str:
    return f"{x:.8g}"


def run_cell(method: str, train: RatingsDataset, test: RatingsDataset,
             cfg: ExperimentConfig, seed: int, fraction: float = 1.0) -> ReportRow:
    """Fit on ``train``, score the predicted order of ``test`` cells against the truth.

    ``wall_ms`` covers matrix construction, fitting and prediction.
    """
    if train.shape != test.shape:
        raise ConfigError("train and test come from different index spaces")
    t0 = time.perf_counter()
    if method == "pcm":
        result = pcm.complete(to_matrix(train), pcm.PcmConfig(k=cfg.pcm_k, p=cfg.pcm_p, seed=seed))
        pred = pcm.predict_cells(result, test.users, test.items)
        diag = _diag(p=result.p, rank=result.effective_rank)
    elif method == "svt":
        obs = svt.ObservedSet.from_cells(train.users, train.items, train.ratings)
        s = cfg.svt
        overrides = dict(max_iters=s.max_iters, tol=s.tol, rank_cap=s.rank_cap, backtrack=s.backtrack)
        if s.tau is not None:
            overrides["tau"] = s.tau
        if s.delta is not None:
            overrides["delta"] = s.delta
        params = svt.default_svt_params(train.shape, len(obs), **overrides)
        res = svt.svt_complete(obs, train.shape, params)
        pred = res.X[test.users, test.items]
        diag = _diag(iters=res.iters, residual=res.residual)
    elif method == "svdpp":
        tcfg = svdpp.TrainConfig(epochs=cfg.svdpp_epochs, f=cfg.svdpp_f, learning_rate=cfg.svdpp_lr,
                                 regularization=cfg.svdpp_reg, init_scale=cfg.svdpp_init_scale, seed=seed)
        model = svdpp.train(train.users, train.items, train.ratings, train.shape, tcfg)
        pred = svdpp.predict_many(model, test.users, test.items)
        diag = _diag(epochs=tcfg.epochs,
                     train_rmse=model.rmse_trace[-1] if model.rmse_trace else float("nan"))
    else:
        raise ConfigError(f"unknown method {method!r}")
    wall_ms = (time.perf_counter() - t0) * 1e3
    rating = rate_predictions(test.cells(), test.ratings, pred)
    return ReportRow(method, fraction, len(test), wall_ms, rating, seed, diag)


@dataclass(frozen=True)
class _Task:
    fraction_index: int
    fraction: float
    repetition: int
    seed: int


def _run_task(dataset: RatingsDataset, cfg: ExperimentConfig, task: _Task) -> list[ReportRow]:
    sub = subsample(dataset, task.fraction, task.seed)
    train, test = split_half(sub, task.seed)
    rows = []
    for method in cfg.methods:
        try:
            row = run_cell(method, train, test, cfg, task.seed, task.fraction)
        except (PcmrecError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            log.error("%s at fraction %s failed: %s", method, task.fraction, exc)
            msg = str(exc).replace(",", " ").replace("\n", " ")
            row = ReportRow(method, task.fraction, len(test), math.nan, None, task.seed,
                            _diag(error=f"{type(exc).__name__}: {msg}"))
        log.info("%-5s fraction=%s rep=%d lcs=%s wall_ms=%.1f", method, task.fraction,
                 task.repetition, "FAILED" if row.failed else f"{row.lcs_rating:.6f}", row.wall_ms)
        rows.append(row)
    return rows


def grid_tasks(cfg: ExperimentConfig) -> list[_Task]:
    return [
        _Task(k, float(f), rep, seeding.cell_seed(cfg.seed, k, rep))
        for k, f in enumerate(cfg.fractions)
        for rep in range(cfg.repetitions)
    ]


def run_grid(dataset: RatingsDataset, cfg: ExperimentConfig,
             on_row: Callable[[ReportRow], None] | None = None) -> list[ReportRow]:
    """Run the whole grid in fraction-major, repetition, method order.

    ``on_row`` sees each row as soon as it and all rows before it are done, so a
    report written through it loses at most the cells still in flight.
    """
    cfg.validate()
    tasks = grid_tasks(cfg)
    rows: list[ReportRow] = []

    def emit(batch):
        for row in batch:
            rows.append(row)
            if on_row is not None:
                on_row(row)

    if cfg.jobs == 1 or len(tasks) == 1:
        for task in tasks:
            emit(_run_task(dataset, cfg, task))
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_task, dataset, cfg, t) for t in tasks]
            for fut in futures:  # in submission order, whatever the completion order
                emit(fut.result())
    return rows


# Report I/O ----------------------------------------------------------------

def format_row(row: ReportRow) -> list[str]:
    return [
        row.method,
        _fmt(row.fraction),
        str(row.test_cells),
        "" if math.isnan(row.wall_ms) else _fmt(row.wall_ms),
        "" if row.lcs_rating is None else _fmt(row.lcs_rating),
        str(row.seed),
        row.diag,
    ]


class ReportWriter:
    """Streams rows to a CSV file, flushing after each one."""

    def __init__(self, path=None, stream=None):
        self.path = Path(path) if path is not None else None
        self._owns = stream is None
        self._fh = self.path.open("w", newline="", encoding="utf-8") if self._owns else stream
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(REPORT_HEADER)
        self._fh.flush()

    def write(self, row: ReportRow) -> None:
        self._csv.writerow(format_row(row))
        self._fh.flush()

    @classmethod
    def for_stream(cls, stream) -> ReportWriter:
        return cls(stream=stream)

    def close(self) -> None:
        if self._owns:
            self._fh.close()
        else:
            self._fh.flush()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_report(rows: Iterable[ReportRow], path) -> None:
    with ReportWriter(path) as w:
        for row in rows:
            w.write(row)


def report_text(rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for row in rows:
        w.writerow(format_row(row))
    return buf.getvalue()


def read_report(path) -> list[ReportRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != REPORT_HEADER:
            raise ValueError(f"{path}: unexpected report header {header}")
        return [
            ReportRow(
                method=r[0], fraction=float(r[1]), test_cells=int(r[2]),
                wall_ms=float(r[3]) if r[3] else math.nan,
                lcs_rating=float(r[4]) if r[4] else None,
                seed=int(r[5]), diag=r[6],
            )
            for r in reader
        ]
