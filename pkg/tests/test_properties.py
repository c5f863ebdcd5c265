import json
import math

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from clfgof.data import HoldoutDataset, augment_with_probabilities, partition_folds
from clfgof.procedure import TestConfig, TestReport, delta_min, normal_quantile, run_test
from clfgof.ranksum import ScoredPair, empirical_projections
from conftest import make_aug

FAST = settings(max_examples=60, deadline=None)

seeds = st.integers(0, 2**32 - 1)


@FAST
@given(T=st.floats(0, 1), sigma2=st.floats(1e-6, 1.0), n=st.integers(4, 10_000),
       alpha=st.floats(0.001, 0.5), delta=st.floats(0, 0.5))
def test_decision_coherence(T, sigma2, n, alpha, delta):
    sigma = math.sqrt(sigma2)
    dmin = delta_min(T, sigma, n, alpha)
    margin = T - 0.5 - sigma / math.sqrt(n) * normal_quantile(1 - alpha)
    assume(abs(delta - margin) > 1e-9)  # boundary: z equals the quantile up to rounding
    rep = TestReport("split", T, sigma2, 0.0, 0.5, False, dmin, n, alpha, delta, False)
    assert rep.decide(delta) == (delta < dmin)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), method=st.sampled_from(["split", "cross"]), shift=st.booleans())
def test_decision_coherence_end_to_end(seed, method, shift):
    aug = make_aug(n=80, d=2, seed=seed, shift=1.0 if shift else 0.0)
    rep = run_test(aug, TestConfig(method=method, K=4, seed=seed))
    for delta in np.linspace(0, 0.5, 11):
        if abs(delta - rep.delta_min) > 1e-9:
            assert rep.decide(delta) == (delta < rep.delta_min)


def _pair_strategy():
    scores = st.lists(st.integers(-5, 5), min_size=1, max_size=40)
    return st.tuples(scores, scores, seeds)


MONOTONE = [
    lambda s: 3.0 * s + 1.0,
    lambda s: s**3,
    np.exp,
    np.arctan,
]


@FAST
@given(data=_pair_strategy(), which=st.integers(0, len(MONOTONE) - 1), tie_break=st.booleans())
def test_auc_monotone_invariance(data, which, tie_break):
    s0, s1, seed = data
    s0, s1 = np.array(s0, float), np.array(s1, float)
    r = np.random.default_rng(seed)
    u0, u1 = r.random(s0.size), r.random(s1.size)
    f = MONOTONE[which]
    a = empirical_projections(ScoredPair(s0, s1, u0, u1), tie_break)
    b = empirical_projections(ScoredPair(f(s0), f(s1), u0, u1), tie_break)
    assert a.T == b.T
    assert np.array_equal(a.phi_hat, b.phi_hat) and np.array_equal(a.psi_hat, b.psi_hat)


@settings(max_examples=30, deadline=None)
@given(p=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=5), n=st.integers(500, 5000), seed=seeds)
def test_augmentation_marginal_concentration(p, n, seed):
    p = np.array(p) / np.sum(p)
    holdout = HoldoutDataset(np.zeros((n, 1)), np.zeros(n, dtype=int), p.size)
    aug = augment_with_probabilities(holdout, np.tile(p, (n, 1)), seed)
    freq = np.bincount(aug.y_prime, minlength=p.size) / n
    sd = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(freq - p) <= 5 * sd + 1e-12)


@FAST
@given(n=st.integers(2, 500), K=st.integers(2, 20), seed=seeds)
def test_fold_partition_validity(n, K, seed):
    assume(K <= n)
    folds = partition_folds(n, K, seed)
    parts = [folds.fold(k) for k in range(K)]
    allidx = np.sort(np.concatenate(parts))
    assert np.array_equal(allidx, np.arange(n))
    assert folds.sizes.max() - folds.sizes.min() <= 1 and folds.sizes.min() >= 1
    for k in range(K):
        assert np.array_equal(np.sort(np.concatenate([folds.fold(k), folds.complement(k)])), np.arange(n))


@settings(max_examples=10, deadline=None)
@given(seed=seeds, method=st.sampled_from(["split", "cross"]), dist=st.sampled_from(["logistic", "lasso"]))
def test_seed_determinism(seed, method, dist):
    aug = make_aug(n=60, d=3, seed=seed % 1000)
    cfg = TestConfig(method=method, K=3, seed=seed, distinguisher=dist)
    a = json.dumps(run_test(aug, cfg).to_dict(), sort_keys=True)
    b = json.dumps(run_test(make_aug(n=60, d=3, seed=seed % 1000), cfg).to_dict(), sort_keys=True)
    assert a.encode() == b.encode()
