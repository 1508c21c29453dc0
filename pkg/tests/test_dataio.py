import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcmrec.dataio import (
    RatingsDataset,
    from_events,
    load_movielens,
    split_half,
    subsample,
    synthetic_ratings,
    to_matrix,
    write_movielens,
)
from pcmrec.errors import (
    DuplicatePair,
    EmptyDataset,
    InvalidRating,
    InvalidRatio,
    MalformedRow,
    MissingHeader,
)

TABLE_SIZES = [5041, 10083, 15125, 20167, 25209, 30250, 35292, 40334, 45376, 50418]
FRACTIONS = [round(0.1 * k, 1) for k in range(1, 11)]
SMALL = synthetic_ratings(20, 30, 150, seed=1)


@pytest.fixture(scope="module")
def full_size():
    # 100,836 events over a 610 x 9,724 index space, like ml-latest-small
    n = 100_836
    rng = np.random.default_rng(0)
    keys = rng.choice(610 * 9724, size=n, replace=False)
    return RatingsDataset(
        users=keys // 9724, items=keys % 9724,
        ratings=rng.integers(1, 11, n) / 2.0, timestamps=np.zeros(n, dtype=np.int64),
        user_ids=np.arange(1, 611), item_ids=np.arange(1, 9725),
    )


def write(tmp_path, text):
    p = tmp_path / "ratings.csv"
    p.write_text(text)
    return p


# load_movielens ----------------------------------------------------------------

def test_three_row_fixture(fixture_csv):
    ds = load_movielens(fixture_csv)
    assert (ds.m, ds.n, len(ds)) == (2, 2, 3)
    assert ds.user_index == {1: 0, 2: 1}
    assert ds.item_index == {10: 0, 20: 1}
    assert ds.users.tolist() == [0, 0, 1]
    assert ds.items.tolist() == [0, 1, 0]
    assert ds.ratings.tolist() == [4.0, 3.5, 5.0]


def test_index_maps_follow_first_appearance(tmp_path):
    p = write(tmp_path, "userId,movieId,rating,timestamp\n9,300,1.0,0\n4,100,2.0,0\n9,100,3.0,0\n")
    ds = load_movielens(p)
    assert ds.user_ids.tolist() == [9, 4]
    assert ds.item_ids.tolist() == [300, 100]


def test_off_grid_rating(tmp_path):
    p = write(tmp_path, "userId,movieId,rating,timestamp\n1,1,4.0,0\n1,2,0.3,0\n")
    with pytest.raises(InvalidRating) as exc:
        load_movielens(p)
    assert exc.value.line == 3


@pytest.mark.parametrize("value", ["0.0", "5.5", "2.25", "-1"])
def test_other_invalid_ratings(tmp_path, value):
    p = write(tmp_path, f"userId,movieId,rating,timestamp\n1,1,{value},0\n")
    with pytest.raises(InvalidRating):
        load_movielens(p)


def test_missing_header(tmp_path):
    with pytest.raises(MissingHeader):
        load_movielens(write(tmp_path, "1,1,4.0,0\n"))
    with pytest.raises(MissingHeader):
        load_movielens(write(tmp_path, ""))


def test_malformed_row_reports_line(tmp_path):
    p = write(tmp_path, "userId,movieId,rating,timestamp\n1,1,4.0,0\n1,x,4.0,0\n")
    with pytest.raises(MalformedRow) as exc:
        load_movielens(p)
    assert exc.value.line == 3
    p = write(tmp_path, "userId,movieId,rating,timestamp\n1,1,4.0\n")
    with pytest.raises(MalformedRow):
        load_movielens(p)


def test_duplicate_pair(tmp_path):
    p = write(tmp_path, "userId,movieId,rating,timestamp\n1,1,4.0,0\n2,1,3.0,0\n1,1,2.0,5\n")
    with pytest.raises(DuplicatePair):
        load_movielens(p)


def test_header_only_file(tmp_path):
    with pytest.raises(EmptyDataset):
        load_movielens(write(tmp_path, "userId,movieId,rating,timestamp\n"))


def test_write_read_round_trip(tmp_path):
    ds = synthetic_ratings(30, 50, 200, seed=3)
    p = tmp_path / "r.csv"
    write_movielens(ds, p)
    back = load_movielens(p)
    for name in ("users", "items", "ratings", "timestamps", "user_ids", "item_ids"):
        np.testing.assert_array_equal(getattr(back, name), getattr(ds, name))


# subsample / split ---------------------------------------------------------------

def test_subsample_full_ratio_is_identity(fixture_csv):
    ds = load_movielens(fixture_csv)
    assert subsample(ds, 1.0, seed=5) is ds


def test_subsample_sizes(full_size):
    assert len(subsample(full_size, 0.5, seed=1)) == 50_418
    assert len(subsample(full_size, 0.1, seed=1)) == 10_083


def test_table_sizes_after_subsample_and_split(full_size):
    sizes = []
    for k, f in enumerate(FRACTIONS):
        sub = subsample(full_size, f, seed=k)
        _, test = split_half(sub, seed=k)
        sizes.append(len(test))
    assert sizes == TABLE_SIZES


def test_subsample_keeps_shape_and_maps(full_size):
    sub = subsample(full_size, 0.2, seed=7)
    assert sub.shape == full_size.shape
    assert sub.user_ids is full_size.user_ids


@pytest.mark.parametrize("ratio", [0.0, -0.1, 1.5])
def test_subsample_invalid_ratio(fixture_csv, ratio):
    with pytest.raises(InvalidRatio):
        subsample(load_movielens(fixture_csv), ratio, seed=0)


def test_split_five():
    ds = from_events([1, 2, 3, 4, 5], [1, 1, 1, 1, 1], [1.0, 2.0, 3.0, 4.0, 5.0])
    train, test = split_half(ds, seed=0)
    assert (len(train), len(test)) == (3, 2)


def test_split_full_size(full_size):
    assert len(split_half(full_size, seed=0)[1]) == 50_418


def test_split_after_thirty_percent(full_size):
    sub = subsample(full_size, 0.3, seed=2)
    assert len(sub) == 30_250
    assert len(split_half(sub, seed=2)[1]) == 15_125


def test_split_empty():
    ds = from_events([1], [1], [1.0]).take([])
    with pytest.raises(EmptyDataset):
        split_half(ds, seed=0)


@settings(max_examples=30)
@given(st.integers(1, 300), st.integers(0, 2**64 - 1))
def test_split_partitions(n, seed):
    ds = from_events(np.arange(n), np.zeros(n, dtype=int), np.full(n, 3.0))
    train, test = split_half(ds, seed)
    a, b = set(train.users.tolist()), set(test.users.tolist())
    assert not a & b
    assert a | b == set(range(n))
    assert len(test) == n // 2


@settings(max_examples=30)
@given(st.floats(0.02, 1.0), st.integers(0, 2**64 - 1))
def test_subsample_then_split_deterministic(ratio, seed):
    ds = SMALL
    s1, s2 = subsample(ds, ratio, seed), subsample(ds, ratio, seed)
    assert s1.users.tolist() == s2.users.tolist()
    t1, t2 = split_half(s1, seed), split_half(s2, seed)
    assert t1[0].items.tolist() == t2[0].items.tolist()
    assert t1[1].items.tolist() == t2[1].items.tolist()


# to_matrix ------------------------------------------------------------------

def test_single_event_matrix():
    a = to_matrix(from_events([7], [3], [4.5]))
    assert a.shape == (1, 1) and a.nnz == 1
    assert a.to_dense()[0, 0] == 4.5


def test_fixture_matrix(fixture_csv):
    a = to_matrix(load_movielens(fixture_csv))
    assert a.shape == (2, 2) and a.nnz == 3
    np.testing.assert_array_equal(a.to_dense(), [[4.0, 3.5], [5.0, 0.0]])


def test_full_size_matrix_count(full_size):
    a = to_matrix(full_size)
    assert a.shape == (610, 9724)
    assert a.nnz == len(full_size)


def test_to_matrix_empty():
    with pytest.raises(EmptyDataset):
        to_matrix(from_events([1], [1], [1.0]).take([]))


def test_synthetic_covers_index_space():
    ds = synthetic_ratings(40, 90, 500, seed=2)
    assert ds.shape == (40, 90)
    assert set(ds.users.tolist()) == set(range(40))
    assert set(ds.items.tolist()) == set(range(90))
    assert set(np.unique(ds.ratings).tolist()) <= {x / 2 for x in range(1, 11)}
