import math
import warnings

import numpy as np
import pytest

from clfgof.data import AugmentedDataset
from clfgof.distinguish import (
    FunctionBasis,
    LabelInteractionBasis,
    LassoProcedure,
    LogisticLabelSplit,
    build_design_matrix,
    default_lambda,
    expand,
    fit_lasso,
    fit_logistic,
    label_split_fit,
    lasso_kkt_violation,
)
from clfgof.errors import (
    EmptySubset,
    MaxSweepsExceeded,
    NonPositiveLambda,
    SingleClassInput,
    UnboundedBasis,
)
from clfgof.oracle import auc_of, logistic_setting

from conftest import make_aug


def _records(x, y, yp, seed=0):
    x = np.asarray(x, dtype=float).reshape(len(y), -1)
    r = np.random.default_rng(seed)
    return AugmentedDataset(x=x, y=np.asarray(y), y_prime=np.asarray(yp), u=r.random(len(y)),
                            u_prime=r.random(len(y)), seed=seed, label_count=6)


def test_expand_single_record():
    s = expand(_records([[1.5, -2.0]], [3], [5]))
    np.testing.assert_array_equal(s.y, [3, 5])
    np.testing.assert_array_equal(s.c, [0, 1])
    np.testing.assert_array_equal(s.x, [[1.5, -2.0], [1.5, -2.0]])


def test_expand_order_and_counts(small_aug):
    s = expand(small_aug)
    m = len(small_aug)
    assert s.m == m
    assert (s.c == 0).sum() == m and (s.c == 1).sum() == m
    np.testing.assert_array_equal(s.y[:m], small_aug.y)
    np.testing.assert_array_equal(s.y[m:], small_aug.y_prime)
    with pytest.raises(EmptySubset):
        expand(small_aug.subset([]))


def test_fit_logistic_single_class():
    with pytest.raises(SingleClassInput):
        fit_logistic(np.zeros((5, 1)), np.ones(5))


def test_fit_logistic_recovers_slope():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(50_000)
    c = (rng.random(50_000) < 1 / (1 + np.exp(-2 * x))).astype(float)
    model = fit_logistic(x, c)
    assert model.converged
    assert abs(model.theta[0] - 2.0) < 0.1
    assert abs(model.theta[1]) < 0.05


def test_fit_logistic_balanced_constant_features():
    model = fit_logistic(np.zeros((10, 2)), np.array([0, 1] * 5))
    assert abs(model.theta[-1]) < 1e-12
    np.testing.assert_allclose(model.predict(np.random.default_rng(1).standard_normal((4, 2))), 0.5)


def test_fit_logistic_perfect_separation():
    x = np.array([-2.0, -1.0, 1.0, 2.0])
    model = fit_logistic(x, np.array([0, 0, 1, 1]))
    assert not model.converged
    assert np.linalg.norm(model.theta) == pytest.approx(30.0)
    p = model.predict(x.reshape(-1, 1))
    assert p[0] < 0.5 < p[-1]


def test_fit_logistic_ridge_shrinks():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((300, 3))
    c = (rng.random(300) < 1 / (1 + np.exp(-x[:, 0]))).astype(float)
    free = fit_logistic(x, c)
    ridge = fit_logistic(x, c, l2=50.0)
    assert np.linalg.norm(ridge.theta[:-1]) < np.linalg.norm(free.theta[:-1])


def test_design_matrix_constant_basis():
    s = expand(make_aug(n=7))
    Xi, Z = build_design_matrix(s, FunctionBasis([lambda X, y: np.ones(len(y))], bound=1.0))
    np.testing.assert_array_equal(Xi, np.ones((14, 1)))
    np.testing.assert_array_equal(Z, [0] * 7 + [1] * 7)
    with pytest.raises(UnboundedBasis):
        build_design_matrix(s, FunctionBasis([lambda X, y: np.full(len(y), 3.0)], bound=1.0))


def test_label_interaction_basis_layout():
    basis = LabelInteractionBasis(d=2, label_count=2, bound=1.0)
    E = basis.evaluate(np.array([[0.5, 5.0], [-3.0, 0.2]]), np.array([0, 1]))
    np.testing.assert_array_equal(E, [[1, 0.5, 1.0, 0, 0, 0], [0, 0, 0, 1, -1.0, 0.2]])
    assert basis.size == 6


def test_default_lambda_examples():
    assert default_lambda(math.exp(2), 4) == pytest.approx(math.sqrt(2) / 2)
    assert default_lambda(100, 400) == pytest.approx(0.1073, abs=1e-4)
    assert default_lambda(100, 800) / default_lambda(100, 400) == pytest.approx(1 / math.sqrt(2))


def test_lasso_zero_above_threshold(rng):
    X = rng.standard_normal((40, 5))
    Z = np.r_[np.zeros(20), np.ones(20)]
    thresh = np.max(np.abs(X.T @ Z)) / X.shape[0]  # ||Xi'Z / (2n)||_inf with 2n rows
    model = fit_lasso(X, Z, thresh * 1.0001)
    assert np.all(model.beta == 0)
    model = fit_lasso(X, Z, thresh * 0.9)
    assert np.any(model.beta != 0)


def test_lasso_small_lambda_least_squares():
    X = np.array([[1.0, 2.0], [3.0, -1.0]])
    Z = np.array([0.0, 1.0])
    ls = np.linalg.solve(X, Z)
    model = fit_lasso(X, Z, 1e-10, tol=1e-14, max_sweeps=100_000)
    np.testing.assert_allclose(model.beta, ls, atol=1e-7)


def test_lasso_kkt_and_trace(rng):
    X = rng.standard_normal((200, 30))
    Z = (rng.random(200) < 0.5).astype(float)
    model = fit_lasso(X, Z, 0.02)
    assert model.converged
    assert lasso_kkt_violation(X, Z, model) <= 1e-6
    assert np.all(np.diff(model.objective_trace) <= 1e-14)
    grad = -(X.T @ (Z - X @ model.beta)) / X.shape[0]
    assert np.all(np.abs(grad) <= model.lam + 1e-6)


def test_lasso_errors(rng):
    X = rng.standard_normal((20, 3))
    Z = np.r_[np.zeros(10), np.ones(10)]
    with pytest.raises(NonPositiveLambda):
        fit_lasso(X, Z, 0.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        model = fit_lasso(X, Z, 1e-4, tol=1e-300, max_sweeps=2)
    assert not model.converged and model.sweeps == 2
    assert any(issubclass(x.category, MaxSweepsExceeded) for x in w)


def test_label_split_fallback():
    # label 0 only ever real, label 1 only ever synthetic: both strata single-class
    rec = _records(np.arange(6.0), [0] * 6, [1] * 6)
    g = label_split_fit(rec, lambda xs, cs, seed: pytest.fail("should not fit"), 0)
    np.testing.assert_array_equal(g.score(np.zeros((3, 1)), np.array([0, 1, 2])), 0.5)


@pytest.mark.parametrize("proc", [LogisticLabelSplit(), LassoProcedure()])
def test_procedure_symmetry(proc):
    aug = make_aug(n=150, d=4, M=3, seed=8)
    perm = np.random.default_rng(0).permutation(len(aug))
    g1, g2 = proc.fit(aug, 0), proc.fit(aug.subset(perm), 0)
    probe = make_aug(n=50, d=4, M=3, seed=9)
    for labels in (probe.y, probe.y_prime):
        assert np.max(np.abs(g1.score(probe.x, labels) - g2.score(probe.x, labels))) < 1e-10


def test_label_split_null_and_alternative_auc():
    null = logistic_setting(5, 0)
    g = LogisticLabelSplit().fit(null.draw_triplets(4000, 1), 0)
    assert abs(auc_of(g, null, 100_000, 2).auc - 0.5) < 0.03
    alt = logistic_setting(5, 0, alternative=True, sparse=True)
    g = LogisticLabelSplit().fit(alt.draw_triplets(2000, 1), 0)
    assert auc_of(g, alt, 100_000, 2).auc > 0.6


def test_lasso_scores_in_unit_interval():
    alt = logistic_setting(10, 0, alternative=True)
    g = LassoProcedure().fit(alt.draw_triplets(300, 1), 0)
    probe = alt.draw_triplets(500, 2)
    s = g.score(probe.x, probe.y)
    assert np.all((s >= 0) & (s <= 1))
