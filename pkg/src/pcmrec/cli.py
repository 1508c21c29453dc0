"""``bench`` command line.

Exit codes: 0 on success, 1 on configuration or dataset errors, 2 when some
grid cells failed (their rows are still written, with an empty lcs_rating).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from pcmrec import __version__
from pcmrec.bench import METHODS, PAPER_FRACTIONS, ExperimentConfig, ReportWriter, SvtSettings, run_grid
from pcmrec.errors import ConfigError, DatasetError, PcmrecError

log = logging.getLogger("pcmrec")

# flag dest -> value kind; config-file keys use the same names (dashes allowed)
RUN_OPTIONS = {
    "dataset": str,
    "methods": list,
    "fractions": list,
    "seed": int,
    "out": str,
    "pcm_p": int,
    "pcm_k": int,
    "svt_iters": int,
    "svt_tol": float,
    "svt_rank_cap": int,
    "svt_tau": float,
    "svt_delta": float,
    "svt_backtrack": bool,
    "svdpp_epochs": int,
    "svdpp_f": int,
    "svdpp_lr": float,
    "svdpp_reg": float,
    "reps": int,
    "jobs": int,
}


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the method x fraction grid and write a CSV report",
                         argument_default=argparse.SUPPRESS)
    run.add_argument("--config", help="JSON file with any of the flags below (flags win)")
    run.add_argument("--dataset", help="MovieLens ratings.csv")
    run.add_argument("--methods", type=_csv_list(str), help="comma list from pcm,svt,svdpp")
    run.add_argument("--fractions", type=_csv_list(float), help="comma list in (0,1], ascending")
    run.add_argument("--seed", type=int, help="master seed (default 0)")
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument("--pcm-p", type=int, help="PCM sample count (default min(m, max(4k, 120)))")
    run.add_argument("--pcm-k", type=int, help="PCM rank (default 30)")
    run.add_argument("--svt-iters", type=int, help="SVT iteration budget (default 100)")
    run.add_argument("--svt-tol", type=float, help="SVT relative residual stop (default 1e-4)")
    run.add_argument("--svt-rank-cap", type=int, help="SVT rank cap per shrink (default 30)")
    run.add_argument("--svt-tau", type=float, help="SVT threshold (default 5 sqrt(mn))")
    run.add_argument("--svt-delta", type=float, help="SVT step (default 1.2 mn/|Omega|)")
    run.add_argument("--svt-no-backtrack", dest="svt_backtrack", action="store_false",
                     help="disable SVT step halving")
    run.add_argument("--svdpp-epochs", type=int, help="SVD++ epochs (default 30)")
    run.add_argument("--svdpp-f", type=int, help="SVD++ latent dimension (default 50)")
    run.add_argument("--svdpp-lr", type=float, help="SVD++ learning rate (default 0.005)")
    run.add_argument("--svdpp-reg", type=float, help="SVD++ regularization (default 0.02)")
    run.add_argument("--reps", type=int, help="repetitions per fraction (default 1)")
    run.add_argument("--jobs", type=int, help="parallel worker processes (default 1)")

    comp = sub.add_parser("complete", help="complete a MatrixMarket matrix with PCM")
    comp.add_argument("matrix", help="input, MatrixMarket coordinate format")
    comp.add_argument("--out", required=True, help="output, MatrixMarket array format")
    comp.add_argument("--k", type=int, default=30)
    comp.add_argument("--p", type=int, default=None)
    comp.add_argument("--seed", type=int, default=0)
    comp.add_argument("--raw", action="store_true", help="skip re-orthonormalization of V")

    lcs = sub.add_parser("lcs", help="LCS rating of two orderings of the same cells")
    lcs.add_argument("truth", help="file with one cell id per line, true order")
    lcs.add_argument("predicted", help="file with one cell id per line, predicted order")

    syn = sub.add_parser("synth", help="write a synthetic MovieLens-style ratings.csv")
    syn.add_argument("--out", required=True)
    syn.add_argument("--users", type=int, default=610)
    syn.add_argument("--items", type=int, default=9724)
    syn.add_argument("--ratings", type=int, default=100836)
    syn.add_argument("--seed", type=int, default=0)
    return parser


def load_run_options(args: argparse.Namespace) -> dict:
    opts = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        for key, value in raw.items():
            dest = key.replace("-", "_")
            if dest not in RUN_OPTIONS:
                raise ConfigError(f"unknown config key {key!r}")
            if RUN_OPTIONS[dest] is list and isinstance(value, str):
                value = value.split(",")
            opts[dest] = value
    for dest in RUN_OPTIONS:
        if hasattr(args, dest):
            opts[dest] = getattr(args, dest)
    return opts


def experiment_config(opts: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig(
            dataset=opts.get("dataset"),
            methods=tuple(str(m).strip() for m in opts.get("methods", METHODS)),
            fractions=tuple(float(f) for f in opts.get("fractions", PAPER_FRACTIONS)),
            seed=int(opts.get("seed", 0)),
            pcm_k=int(opts.get("pcm_k", 30)),
            pcm_p=opts.get("pcm_p"),
            svt=SvtSettings(
                tau=opts.get("svt_tau"),
                delta=opts.get("svt_delta"),
                max_iters=int(opts.get("svt_iters", 100)),
                tol=float(opts.get("svt_tol", 1e-4)),
                rank_cap=int(opts.get("svt_rank_cap", 30)),
                backtrack=bool(opts.get("svt_backtrack", True)),
            ),
            svdpp_epochs=int(opts.get("svdpp_epochs", 30)),
            svdpp_f=int(opts.get("svdpp_f", 50)),
            svdpp_lr=float(opts.get("svdpp_lr", 0.005)),
            svdpp_reg=float(opts.get("svdpp_reg", 0.02)),
            repetitions=int(opts.get("reps", 1)),
            jobs=int(opts.get("jobs", 1)),
            out=opts.get("out"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    if not cfg.dataset:
        raise ConfigError("--dataset is required")
    return cfg


def cmd_run(args) -> int:
    from pcmrec.dataio import load_movielens

    cfg = experiment_config(load_run_options(args))
    try:
        dataset = load_movielens(cfg.dataset)
    except OSError as exc:
        raise DatasetError(f"cannot read {cfg.dataset}: {exc}") from None
    log.info("loaded %s: %d ratings, %dx%d", cfg.dataset, len(dataset), dataset.m, dataset.n)
    if cfg.out:
        writer = ReportWriter(cfg.out)
    else:
        writer = ReportWriter.for_stream(sys.stdout)
    with writer:
        rows = run_grid(dataset, cfg, on_row=writer.write)
    failed = sum(r.failed for r in rows)
    if failed:
        log.error("%d of %d grid cells failed", failed, len(rows))
        return 2
    return 0


def cmd_complete(args) -> int:
    from pcmrec.matrix import read_matrix_market, write_dense_matrix_market
    from pcmrec.pcm import PcmConfig, complete

    try:
        a = read_matrix_market(args.matrix)
    except OSError as exc:
        raise DatasetError(f"cannot read {args.matrix}: {exc}") from None
    result = complete(a, PcmConfig(k=args.k, p=args.p, seed=args.seed, reorthonormalize=not args.raw))
    write_dense_matrix_market(args.out, result.D)
    log.info("completed %dx%d matrix, p=%d, effective rank %d",
             a.rows, a.cols, result.p, result.effective_rank)
    return 0


def _read_sequence(path) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from None


def cmd_lcs(args) -> int:
    from pcmrec.errors import CellSetMismatch, EmptySequence
    from pcmrec.metrics import lcs_length

    s1 = _read_sequence(args.truth)
    s2 = _read_sequence(args.predicted)
    if not s1:
        raise EmptySequence(f"{args.truth} is empty")
    if len(set(s1)) != len(s1) or sorted(s1) != sorted(s2):
        raise CellSetMismatch("the two files must list the same distinct cells")
    length = lcs_length(s1, s2)
    print(f"{length / len(s1):.8g}")
    log.info("LCS %d of %d", length, len(s1))
    return 0


def cmd_synth(args) -> int:
    from pcmrec.dataio import synthetic_ratings, write_movielens

    ds = synthetic_ratings(args.users, args.items, args.ratings, seed=args.seed)
    write_movielens(ds, args.out)
    log.info("wrote %d synthetic ratings to %s", len(ds), args.out)
    return 0


COMMANDS = {"run": cmd_run, "complete": cmd_complete, "lcs": cmd_lcs, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        return COMMANDS[args.command](args)
    except (PcmrecError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
