import sys

import numpy as np
import pytest

from clfgof.data import AugmentedDataset, HoldoutDataset, augment


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_aug(n=200, d=3, M=2, seed=0, shift=0.0):
    """Small augmented dataset from a softmax-linear model."""
    r = np.random.default_rng(seed)
    X = r.standard_normal((n, d))
    W = r.standard_normal((d, M))
    logits = X @ W
    P = np.exp(logits - logits.max(axis=1, keepdims=True))
    P /= P.sum(axis=1, keepdims=True)
    y = np.array([r.choice(M, p=p) for p in P])
    Q = np.roll(P, 1, axis=1) if shift else P
    holdout = HoldoutDataset(X, y, M)
    return augment(holdout, lambda Z: Q, seed + 1)


@pytest.fixture
def small_aug():
    return make_aug()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: (int(k.rstrip("ab")), k)):
        terminalreporter.write_line(results[key])
