import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dhash.dataset import (
    load_features,
    load_labels,
    map_labels,
    one_hot_encode,
    labels_from_one_hot,
    sample_anchors,
    save_features,
    split,
    split_label_column,
    validate_features,
)
from dhash.errors import ParseError, ValidationError


class TestLoadFeatures:
    def test_csv_basic(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,4\n5,6\n")
        X = load_features(p, "csv")
        assert X.shape == (3, 2)
        assert np.array_equal(X, [[1, 2], [3, 4], [5, 6]])

    def test_csv_header_skipped(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n3,4\n")
        X = load_features(p, "csv", header=True)
        assert X.shape == (2, 2)

    def test_csv_wrong_arity_names_row(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,4,5\n6,7\n")
        with pytest.raises(ParseError, match="row 1"):
            load_features(p, "csv")

    def test_csv_non_numeric(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,oops\n")
        with pytest.raises(ParseError, match="row 1"):
            load_features(p, "csv")

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\nnan,4\n")
        with pytest.raises(ValidationError, match="row 1"):
            load_features(p, "csv")

    def test_raw_binary_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((37, 11)) * 10.0 ** rng.integers(-8, 8, (37, 11))
        p = tmp_path / "x.dhmx"
        save_features(p, X)
        back = load_features(p, "raw")
        assert back.dtype == np.float64
        assert X.tobytes() == back.tobytes()

    def test_raw_truncated(self, tmp_path):
        p = tmp_path / "x.dhmx"
        save_features(p, np.ones((4, 3)))
        p.write_bytes(p.read_bytes()[:-5])
        with pytest.raises(ParseError):
            load_features(p, "raw")

    def test_raw_bad_magic(self, tmp_path):
        p = tmp_path / "x.dhmx"
        p.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(ParseError):
            load_features(p, "raw")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValidationError):
            load_features(tmp_path / "x", "parquet")


class TestLabels:
    def test_one_hot_basic(self):
        Y = one_hot_encode([0, 1, 0], num_classes=2)
        assert np.array_equal(Y, [[1, 0], [0, 1], [1, 0]])

    def test_one_hot_out_of_range(self):
        with pytest.raises(ValidationError):
            one_hot_encode([2], num_classes=2)
        with pytest.raises(ValidationError):
            one_hot_encode([-1], num_classes=2)

    def test_one_hot_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 7, size=100)
        Y = one_hot_encode(labels)
        assert np.array_equal(Y.sum(axis=1), np.ones(100))

    @given(st.lists(st.integers(min_value=0, max_value=9), min_size=1, max_size=60))
    def test_one_hot_argmax_identity(self, labels):
        Y = one_hot_encode(labels, num_classes=10)
        assert labels_from_one_hot(Y).tolist() == labels

    def test_map_labels_dense_and_stable(self):
        ids, table = map_labels(["cat", "dog", "cat", "ant"])
        assert table == ["ant", "cat", "dog"]
        assert ids.tolist() == [1, 2, 1, 0]

    def test_load_labels_strings(self, tmp_path):
        p = tmp_path / "y.txt"
        p.write_text("b\na\nb\n")
        assert load_labels(p).tolist() == [1, 0, 1]

    def test_load_labels_ints(self, tmp_path):
        p = tmp_path / "y.txt"
        p.write_text("3\n0\n2\n")
        assert load_labels(p).tolist() == [3, 0, 2]

    def test_split_label_column(self):
        M = np.array([[0.5, 1.5, 2.0], [0.25, 2.5, 1.0]])
        X, y = split_label_column(M)
        assert np.array_equal(X, [[0.5, 1.5], [0.25, 2.5]])
        assert y.tolist() == [2, 1]

    def test_split_label_column_non_integer(self):
        with pytest.raises(ValidationError):
            split_label_column(np.array([[1.0, 0.5]]))


class TestSampleAnchors:
    def test_m_equals_n_is_permutation(self):
        X = np.arange(20, dtype=float).reshape(10, 2)
        a = sample_anchors(X, 10, seed=5)
        assert sorted(a.indices.tolist()) == list(range(10))
        assert np.array_equal(np.sort(a.anchors[:, 0]), X[:, 0])

    def test_same_seed_same_indices(self):
        X = np.random.default_rng(2).standard_normal((50, 3))
        a1 = sample_anchors(X, 7, seed=123)
        a2 = sample_anchors(X, 7, seed=123)
        assert np.array_equal(a1.indices, a2.indices)

    def test_m_too_large(self):
        with pytest.raises(ValidationError):
            sample_anchors(np.ones((3, 2)), 4, seed=0)

    def test_uniformity_chi_square(self):
        # 10000 draws of 3-of-10: per-index count should stay within 3 sigma
        # of the binomial mean 3000.
        X = np.arange(10, dtype=float).reshape(10, 1)
        counts = np.zeros(10)
        for seed in range(10000):
            counts[sample_anchors(X, 3, seed=seed).indices] += 1
        sigma = np.sqrt(10000 * 0.3 * 0.7)
        assert np.all(np.abs(counts - 3000) <= 3 * sigma)


class TestSplit:
    def test_counts(self):
        X = np.arange(20, dtype=float).reshape(10, 2)
        labels = np.arange(10) % 2
        parts = split(X, labels, 0.2, seed=0)
        assert parts.train_X.shape[0] == 8
        assert parts.test_X.shape[0] == 2

    def test_partition_law(self):
        X = np.random.default_rng(3).standard_normal((33, 4))
        labels = np.random.default_rng(4).integers(0, 3, 33)
        parts = split(X, labels, 0.3, seed=1)
        union = set(parts.train_indices) | set(parts.test_indices)
        inter = set(parts.train_indices) & set(parts.test_indices)
        assert union == set(range(33))
        assert inter == set()

    def test_stratified_keeps_every_class_in_train(self):
        rng = np.random.default_rng(5)
        labels = np.repeat(np.arange(5), [2, 3, 9, 20, 6])
        X = rng.standard_normal((labels.size, 3))
        parts = split(X, labels, 0.4, seed=2, stratified=True)
        assert set(parts.train_labels) == set(range(5))

    def test_alignment_preserved(self):
        X = np.arange(12, dtype=float).reshape(6, 2)
        labels = np.array([10, 11, 12, 13, 14, 15])
        parts = split(X, labels, 0.5, seed=9)
        for row, lab in zip(parts.test_X, parts.test_labels):
            assert row[0] == (lab - 10) * 2

    def test_bad_fraction(self):
        X = np.ones((4, 2))
        for frac in (0.0, 1.0, -0.1):
            with pytest.raises(ValidationError):
                split(X, [0, 1, 0, 1], frac, seed=0)

    def test_empty_side_rejected(self):
        X = np.ones((3, 2))
        with pytest.raises(ValidationError):
            split(X, [0, 0, 1], 0.01, seed=0)


def test_validate_features_rejects_bad_shapes():
    with pytest.raises(ValidationError):
        validate_features(np.ones(3))
    with pytest.raises(ValidationError):
        validate_features(np.ones((0, 3)))
    with pytest.raises(ValidationError):
        validate_features(np.array([[1.0, np.inf]]))
