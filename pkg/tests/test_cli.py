import json
import subprocess
import sys

import numpy as np
import pytest

from pcmrec.bench import REPORT_HEADER, read_report
from pcmrec.cli import main
from pcmrec.dataio import synthetic_ratings, write_movielens
from pcmrec.matrix import SparseRatingMatrix, write_matrix_market
from pcmrec.pcm import PcmConfig, complete

FAST = ["--svt-iters", "10", "--svdpp-epochs", "2", "--svdpp-f", "4", "--pcm-k", "4"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "ratings.csv"
    write_movielens(synthetic_ratings(25, 50, 400, seed=8), path)
    return path


def test_run_writes_report(tmp_path, dataset):
    out = tmp_path / "r.csv"
    code = main(["-q", "run", "--dataset", str(dataset), "--fractions", "0.5,1.0", "--out", str(out)] + FAST)
    assert code == 0
    rows = read_report(out)
    assert [(r.fraction, r.method) for r in rows] == [
        (0.5, "pcm"), (0.5, "svt"), (0.5, "svdpp"), (1.0, "pcm"), (1.0, "svt"), (1.0, "svdpp")]


def test_run_to_stdout(capsys, dataset):
    assert main(["-q", "run", "--dataset", str(dataset), "--methods", "pcm", "--fractions", "1.0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(REPORT_HEADER)
    assert len(lines) == 2


def test_config_file_and_flag_precedence(tmp_path, dataset):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dataset": str(dataset), "methods": ["pcm"], "fractions": [0.4],
                               "seed": 3, "pcm-k": 5, "out": str(tmp_path / "a.csv")}))
    assert main(["-q", "run", "--config", str(cfg), "--seed", "9"]) == 0
    row = read_report(tmp_path / "a.csv")[0]
    assert row.fraction == 0.4
    from pcmrec.seeding import fraction_seed
    assert row.seed == fraction_seed(9, 0)


@pytest.mark.parametrize("argv", [
    ["run"],
    ["run", "--dataset", "DATA", "--methods", "pcm,als"],
    ["run", "--dataset", "DATA", "--fractions", "0.5,0.1"],
    ["run", "--dataset", "DATA", "--reps", "0"],
    ["run", "--dataset", "/nonexistent/ratings.csv"],
])
def test_config_and_dataset_errors_exit_one(argv, dataset):
    argv = [str(dataset) if a == "DATA" else a for a in argv]
    assert main(["-q"] + argv) == 1


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"colour": "blue"}')
    assert main(["-q", "run", "--config", str(cfg)]) == 1
    cfg.write_text("{not json")
    assert main(["-q", "run", "--config", str(cfg)]) == 1


def test_malformed_dataset_exit_one(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("userId,movieId,rating,timestamp\n1,1,7.0,0\n")
    assert main(["-q", "run", "--dataset", str(bad)]) == 1


def test_partial_failure_exit_two(tmp_path, dataset):
    out = tmp_path / "r.csv"
    code = main(["-q", "run", "--dataset", str(dataset), "--methods", "svt,pcm", "--fractions", "1.0",
                 "--svt-delta", "1e6", "--svt-no-backtrack", "--out", str(out)])
    assert code == 2
    rows = read_report(out)
    assert [r.failed for r in rows] == [True, False]


def test_complete_subcommand(tmp_path):
    rng = np.random.default_rng(0)
    a = SparseRatingMatrix.from_dense(np.outer(rng.random(6) + 1, rng.random(9) + 1))
    src, dst = tmp_path / "a.mtx", tmp_path / "d.mtx"
    write_matrix_market(src, a)
    assert main(["-q", "complete", str(src), "--out", str(dst), "--k", "2", "--p", "4", "--seed", "1"]) == 0
    lines = dst.read_text().splitlines()
    assert lines[0] == "%%MatrixMarket matrix array real general"
    assert lines[1] == "6 9"
    d = np.array([float(x) for x in lines[2:]]).reshape((9, 6)).T
    expected = complete(a, PcmConfig(k=2, p=4, seed=1)).D
    np.testing.assert_array_equal(d, expected)


def test_complete_missing_file(tmp_path):
    assert main(["-q", "complete", str(tmp_path / "none.mtx"), "--out", str(tmp_path / "d.mtx")]) == 1


def test_lcs_subcommand(tmp_path, capsys):
    (tmp_path / "s1").write_text("a\nb\nc\nd\n")
    (tmp_path / "s2").write_text("d\nc\nb\na\n")
    assert main(["-q", "lcs", str(tmp_path / "s1"), str(tmp_path / "s2")]) == 0
    assert capsys.readouterr().out.strip() == "0.25"
    (tmp_path / "s3").write_text("a\nb\nc\nx\n")
    assert main(["-q", "lcs", str(tmp_path / "s1"), str(tmp_path / "s3")]) == 1
    (tmp_path / "empty").write_text("")
    assert main(["-q", "lcs", str(tmp_path / "empty"), str(tmp_path / "empty")]) == 1


def test_synth_subcommand(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["-q", "synth", "--out", str(out), "--users", "5", "--items", "7", "--ratings", "20"]) == 0
    assert out.read_text().splitlines()[0] == "userId,movieId,rating,timestamp"
    assert len(out.read_text().splitlines()) == 21


def test_progress_goes_to_stderr(dataset):
    proc = subprocess.run(
        [sys.executable, "-m", "pcmrec.cli", "run", "--dataset", str(dataset), "--methods", "pcm",
         "--fractions", "1.0"], capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[0] == ",".join(REPORT_HEADER)
    assert "pcm" in proc.stderr and "fraction=1.0" in proc.stderr
    assert "INFO" not in proc.stdout
