import numpy as np
import pytest

from clfgof.data import (
    HoldoutDataset,
    augment,
    augment_with_probabilities,
    child_seed,
    partition_folds,
    predict_simplex,
    split_indices,
    validate_simplex,
)
from clfgof.errors import (
    BadFoldCount,
    ClassifierFailure,
    DegenerateSum,
    InvalidDataset,
    NegativeProbability,
)


def test_validate_simplex_examples():
    np.testing.assert_array_equal(validate_simplex([0.5, 0.5], 2), [0.5, 0.5])
    np.testing.assert_allclose(validate_simplex([0.3, 0.3, 0.3], 3), [1 / 3] * 3, atol=1e-15)
    with pytest.raises(NegativeProbability):
        validate_simplex([-0.01, 1.01], 2)


def test_validate_simplex_edge_cases():
    # tiny negatives from rounding are clipped, not rejected
    np.testing.assert_allclose(validate_simplex([-1e-12, 1.0], 2), [0.0, 1.0])
    with pytest.raises(DegenerateSum):
        validate_simplex([0.0, 0.0], 2)
    with pytest.raises(InvalidDataset):
        validate_simplex([0.2, 0.8], 3)
    with pytest.raises(InvalidDataset):
        validate_simplex([np.nan, 1.0], 2)
    out = validate_simplex([0.2000001, 0.7999998], 2)
    assert abs(out.sum() - 1.0) < 1e-15


def test_holdout_validation():
    with pytest.raises(InvalidDataset):
        HoldoutDataset(np.zeros((3, 2)), [0, 1, 2], 2)
    with pytest.raises(InvalidDataset):
        HoldoutDataset(np.zeros((3, 2)), [0, 1], 2)
    with pytest.raises(InvalidDataset):
        HoldoutDataset(np.array([[np.inf], [0.0]]), [0, 1], 2)
    with pytest.raises(InvalidDataset):
        HoldoutDataset(np.zeros((2, 1)), [0, 1], 1)
    with pytest.raises(InvalidDataset):
        HoldoutDataset(np.zeros((2, 1)), [0.5, 1], 2)
    h = HoldoutDataset(np.arange(4.0), [0, 1, 1, 0], 2)
    assert (h.n, h.d) == (4, 1)
    with pytest.raises(ValueError):
        h.features[0, 0] = 1.0  # immutable


def test_augment_point_mass():
    X = np.random.default_rng(0).standard_normal((50, 2))
    h = HoldoutDataset(X, np.zeros(50, dtype=int), 3)
    aug = augment(h, lambda Z: np.tile([0.0, 0.0, 1.0], (Z.shape[0], 1)), seed=4)
    assert np.all(aug.y_prime == 2)
    np.testing.assert_array_equal(aug.x, X)
    np.testing.assert_array_equal(aug.y, h.labels)


def test_augment_frequency():
    n = 10_000
    h = HoldoutDataset(np.zeros((n, 1)), np.zeros(n, dtype=int), 2)
    aug = augment(h, lambda Z: np.tile([0.3, 0.7], (Z.shape[0], 1)), seed=9)
    assert abs(aug.y_prime.mean() - 0.7) < 0.02


def test_augment_deterministic():
    X = np.random.default_rng(1).standard_normal((30, 2))
    h = HoldoutDataset(X, np.arange(30) % 2, 2)
    clf = lambda Z: np.column_stack((np.full(len(Z), 0.4), np.full(len(Z), 0.6)))
    a, b = augment(h, clf, 77), augment(h, clf, 77)
    for f in ("y_prime", "u", "u_prime"):
        assert getattr(a, f).tobytes() == getattr(b, f).tobytes()
    c = augment(h, clf, 78)
    assert c.u.tobytes() != a.u.tobytes()
    assert np.all((a.u >= 0) & (a.u < 1))


def test_augment_accepts_predict_proba_object():
    class Clf:
        def predict_proba(self, X):
            return np.tile([1.0, 0.0], (len(X), 1))

    h = HoldoutDataset(np.zeros((5, 1)), [1, 1, 0, 0, 1], 2)
    assert np.all(augment(h, Clf(), 0).y_prime == 0)


def test_classifier_failure():
    h = HoldoutDataset(np.zeros((5, 1)), [1, 1, 0, 0, 1], 2)

    def broken(X):
        raise RuntimeError("boom")

    with pytest.raises(ClassifierFailure):
        augment(h, broken, 0)
    with pytest.raises(ClassifierFailure):
        predict_simplex(lambda X: np.ones((len(X), 3)) / 3, h.features, 2)


def test_augment_with_probabilities_row_mismatch():
    h = HoldoutDataset(np.zeros((5, 1)), [1, 1, 0, 0, 1], 2)
    with pytest.raises(InvalidDataset):
        augment_with_probabilities(h, np.full((4, 2), 0.5), 0)


def test_partition_examples():
    assert list(partition_folds(10, 5, 0).sizes) == [2] * 5
    assert list(partition_folds(11, 5, 0).sizes) == [3, 2, 2, 2, 2]
    with pytest.raises(BadFoldCount):
        partition_folds(6, 7, 0)
    with pytest.raises(BadFoldCount):
        partition_folds(6, 1, 0)


def test_partition_is_partition():
    fp = partition_folds(103, 7, 3)
    seen = np.concatenate([fp.fold(k) for k in range(7)])
    assert sorted(seen.tolist()) == list(range(103))
    for k in range(7):
        assert np.intersect1d(fp.fold(k), fp.complement(k)).size == 0
        assert fp.fold(k).size + fp.complement(k).size == 103
    assert fp.assignments.tobytes() == partition_folds(103, 7, 3).assignments.tobytes()


def test_split_indices():
    fit, ev = split_indices(10, 0.5, 1)
    assert fit.size == 5 and ev.size == 5
    assert sorted(np.concatenate((fit, ev)).tolist()) == list(range(10))
    fit, ev = split_indices(4, 0.9, 1)
    assert ev.size >= 2
    with pytest.raises(InvalidDataset):
        split_indices(10, 1.0, 1)


def test_child_seed_independent_keys():
    a = child_seed(1, 0)
    assert a == child_seed(1, 0)
    assert len({child_seed(1, k) for k in range(100)}) == 100
    assert child_seed(1, 0) != child_seed(2, 0)
    assert 0 <= a < 2**64
