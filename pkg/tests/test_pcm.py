import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcmrec.errors import EmptyMatrix, IndexOutOfRange, InvalidArgument
from pcmrec.matrix import SparseRatingMatrix
from pcmrec.pcm import PcmConfig, complete, default_sample_count, predict_cells


def rank_k(seed, m, n, k):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(m, k)) @ rng.normal(size=(k, n))


def rel_err(d, a):
    return np.linalg.norm(d - a) / np.linalg.norm(a)


@pytest.fixture(scope="module")
def ratings_like():
    rng = np.random.default_rng(99)
    mask = rng.random((40, 70)) < 0.3
    r, c = np.nonzero(mask)
    return SparseRatingMatrix.from_cells(40, 70, r, c, rng.integers(1, 11, r.size) / 2.0)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        PcmConfig(k=0)
    with pytest.raises(InvalidArgument):
        PcmConfig(k=5, p=4)
    assert default_sample_count(610, 30) == 120
    assert default_sample_count(50, 30) == 50
    assert default_sample_count(610, 40) == 160
    assert PcmConfig(k=30).sample_count(20) == 30


def test_zero_matrix():
    with pytest.raises(EmptyMatrix):
        complete(SparseRatingMatrix.from_cells(3, 4, [], [], []), PcmConfig(k=1, p=2))


def test_rank_one_is_exact():
    rng = np.random.default_rng(100200)
    a = np.outer(rng.normal(size=100), rng.normal(size=200))
    res = complete(SparseRatingMatrix.from_dense(a), PcmConfig(k=1, p=10, seed=4))
    assert res.effective_rank == 1
    assert rel_err(res.D, a) < 1e-6


def test_rank_five_median_error():
    a = rank_k(2005, 200, 400, 5)
    sa = SparseRatingMatrix.from_dense(a)
    errs = [rel_err(complete(sa, PcmConfig(k=5, p=50, seed=s)).D, a) for s in range(20)]
    assert np.median(errs) < 0.15
    # the exact truncated SVD reference is 0 for an exactly rank-5 matrix
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    assert rel_err((u[:, :5] * s[:5]) @ vt[:5], a) < 1e-12


def test_result_fields(ratings_like):
    res = complete(ratings_like, PcmConfig(k=6, p=15, seed=2))
    assert res.D.shape == (40, 70)
    assert res.V.shape == (70, res.effective_rank)
    assert 1 <= res.effective_rank <= 6
    assert res.p == 15
    assert res.source_rows.shape == (15,) and res.source_cols.shape == (15,)
    assert np.all(np.diff(res.sigma) <= 0)


def test_d_equals_avvt_and_v_orthonormal(ratings_like):
    res = complete(ratings_like, PcmConfig(k=8, p=20, seed=1))
    a = ratings_like.to_dense()
    v = res.V
    assert np.linalg.norm(v.T @ v - np.eye(v.shape[1])) < 1e-8
    assert rel_err(res.D, a @ v @ v.T) < 1e-10


def test_raw_mode_still_satisfies_d_formula(ratings_like):
    res = complete(ratings_like, PcmConfig(k=8, p=20, seed=1, reorthonormalize=False))
    a = ratings_like.to_dense()
    assert rel_err(res.D, (a @ res.V) @ res.V.T) < 1e-10


def test_projection_is_idempotent(ratings_like):
    res = complete(ratings_like, PcmConfig(k=10, p=25, seed=3))
    v = res.V
    once = res.D
    twice = (once @ v) @ v.T
    assert rel_err(twice, once) < 1e-10


@settings(max_examples=25)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_rank_bound(k, seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((30, 45)) < 0.4
    r, c = np.nonzero(mask)
    if r.size == 0:
        return
    a = SparseRatingMatrix.from_cells(30, 45, r, c, rng.integers(1, 11, r.size) / 2.0)
    res = complete(a, PcmConfig(k=k, p=max(k, 15), seed=seed))
    assert res.effective_rank <= k
    s = np.linalg.svd(res.D, compute_uv=False)
    if res.effective_rank < s.size:
        assert s[res.effective_rank] < 1e-8 * s[0]


def test_determinism(ratings_like):
    cfg = PcmConfig(k=5, p=12, seed=77)
    r1, r2 = complete(ratings_like, cfg), complete(ratings_like, cfg)
    assert r1.D.tobytes() == r2.D.tobytes()
    assert r1.source_rows.tolist() == r2.source_rows.tolist()


@given(st.floats(0.01, 100.0))
def test_scaling_equivariance(c):
    rng = np.random.default_rng(12)
    mask = rng.random((25, 35)) < 0.4
    r, ci = np.nonzero(mask)
    a = SparseRatingMatrix.from_cells(25, 35, r, ci, rng.integers(1, 11, r.size) / 2.0)
    cfg = PcmConfig(k=4, p=10, seed=8)
    base = complete(a, cfg)
    scaled = complete(a.scaled(c), cfg)
    np.testing.assert_array_equal(scaled.source_rows, base.source_rows)
    np.testing.assert_allclose(scaled.D, c * base.D, rtol=1e-9, atol=1e-12 * c * np.abs(base.D).max())


# predict_cells -----------------------------------------------------------------

@pytest.fixture(scope="module")
def small_result():
    a = SparseRatingMatrix.from_dense([[1.0, 2.0], [3.0, 4.5]])
    return complete(a, PcmConfig(k=2, p=2, seed=0))


def test_predict_empty(small_result):
    assert predict_cells(small_result, [], []).shape == (0,)


def test_predict_row_major_2x2(small_result):
    out = predict_cells(small_result, [0, 0, 1, 1], [0, 1, 0, 1])
    assert out.tolist() == small_result.D.ravel().tolist()


def test_predict_100_random_cells(ratings_like):
    res = complete(ratings_like, PcmConfig(k=5, p=12, seed=0))
    rng = np.random.default_rng(100)
    rows, cols = rng.integers(0, 40, 100), rng.integers(0, 70, 100)
    expected = [res.D[i, j] for i, j in zip(rows, cols)]
    assert predict_cells(res, rows, cols).tolist() == expected


def test_predict_out_of_range(small_result):
    with pytest.raises(IndexOutOfRange):
        predict_cells(small_result, [2], [0])
    with pytest.raises(IndexOutOfRange):
        predict_cells(small_result, [0], [-1])
