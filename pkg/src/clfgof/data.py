"""Holdout datasets, black-box classifier access, augmentation and folds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Union, runtime_checkable

import numpy as np

from .errors import (
    BadFoldCount,
    ClassifierFailure,
    DegenerateSum,
    InvalidDataset,
    NegativeProbability,
)

NEGATIVE_TOL = 1e-9
SUM_FLOOR = 1e-12


def child_seed(seed: int, *key: int) -> int:
    """Derive an independent 64-bit seed from ``seed`` and a spawn key."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class HoldoutDataset:
    features: np.ndarray
    labels: np.ndarray
    label_count: int

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.labels)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidDataset(f"features must be a nonempty n x d matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidDataset("features contain non-finite entries")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise InvalidDataset(f"labels must have length {X.shape[0]}, got shape {y.shape}")
        if y.size and not np.all(np.equal(np.mod(y, 1), 0)):
            raise InvalidDataset("labels must be integers")
        y = y.astype(np.int64)
        M = int(self.label_count)
        if M < 2:
            raise InvalidDataset(f"label_count must be >= 2, got {M}")
        if y.min() < 0 or y.max() > M - 1:
            raise InvalidDataset(f"labels must lie in [0, {M - 1}]")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "label_count", M)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def validate_simplex(v, M: int) -> np.ndarray:
    """Check and renormalize one probability vector of length ``M``.

    >>> validate_simplex([0.3, 0.3, 0.3], 3)
    array([0.33333333, 0.33333333, 0.33333333])
    """
    p = np.asarray(v, dtype=np.float64)
    if p.shape != (M,):
        raise InvalidDataset(f"expected {M} probabilities, got shape {p.shape}")
    return validate_simplex_rows(p.reshape(1, M), M)[0]


def validate_simplex_rows(P, M: int) -> np.ndarray:
    """Row-wise :func:`validate_simplex` for an ``(n, M)`` matrix."""
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != M:
        raise InvalidDataset(f"expected an (n, {M}) probability matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidDataset("probabilities contain non-finite entries")
    if np.any(P < -NEGATIVE_TOL):
        row = int(np.argwhere(P < -NEGATIVE_TOL)[0, 0])
        raise NegativeProbability(f"row {row} has an entry below -{NEGATIVE_TOL:g}: {P[row].tolist()}")
    P = np.clip(P, 0.0, None)
    s = P.sum(axis=1)
    if np.any(s < SUM_FLOOR):
        row = int(np.argmin(s))
        raise DegenerateSum(f"row {row} sums to {s[row]:g}")
    return P / s[:, None]


@runtime_checkable
class ProbabilisticClassifier(Protocol):
    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...


ClassifierLike = Union[ProbabilisticClassifier, Callable[[np.ndarray], np.ndarray]]


def predict_simplex(eta_hat: ClassifierLike, X: np.ndarray, M: int) -> np.ndarray:
    """Evaluate a black-box classifier on every row and validate the output."""
    fn = eta_hat.predict_proba if hasattr(eta_hat, "predict_proba") else eta_hat
    try:
        P = np.asarray(fn(X), dtype=np.float64)
    except Exception as exc:  # black box: any failure is the classifier's
        raise ClassifierFailure(f"classifier raised {type(exc).__name__}: {exc}") from exc
    if P.shape != (X.shape[0], M):
        raise ClassifierFailure(f"classifier returned shape {P.shape}, expected {(X.shape[0], M)}")
    return validate_simplex_rows(P, M)


@dataclass(frozen=True)
class AugmentedDataset:
    """Triplets ``(x, y, y')`` with stored tie-break uniforms ``u, u'``."""

    x: np.ndarray
    y: np.ndarray
    y_prime: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    seed: int
    label_count: int

    def __len__(self) -> int:
        return self.x.shape[0]

    def subset(self, idx) -> "AugmentedDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return AugmentedDataset(
            x=_frozen(self.x[idx]),
            y=_frozen(self.y[idx]),
            y_prime=_frozen(self.y_prime[idx]),
            u=_frozen(self.u[idx]),
            u_prime=_frozen(self.u_prime[idx]),
            seed=self.seed,
            label_count=self.label_count,
        )


def sample_categorical(P: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Inverse-CDF categorical draw per row of ``P`` from uniforms ``w``."""
    cdf = np.cumsum(P, axis=1)
    draws = np.sum(cdf <= w[:, None], axis=1)
    return np.minimum(draws, P.shape[1] - 1).astype(np.int64)


def augment_with_probabilities(data: HoldoutDataset, probs, seed: int) -> AugmentedDataset:
    """Augment using precomputed classifier outputs aligned with the rows."""
    P = validate_simplex_rows(probs, data.label_count)
    if P.shape[0] != data.n:
        raise InvalidDataset(f"{P.shape[0]} prediction rows for {data.n} data rows")
    rng = make_rng(seed)
    w = rng.random(data.n)
    u = rng.random(data.n)
    u_prime = rng.random(data.n)
    return AugmentedDataset(
        x=data.features,
        y=data.labels,
        y_prime=_frozen(sample_categorical(P, w)),
        u=_frozen(u),
        u_prime=_frozen(u_prime),
        seed=int(seed),
        label_count=data.label_count,
    )


def augment(data: HoldoutDataset, eta_hat: ClassifierLike, seed: int) -> AugmentedDataset:
    """Draw ``y'_i ~ Cat(eta_hat(x_i))`` for every holdout row."""
    P = predict_simplex(eta_hat, data.features, data.label_count)
    return augment_with_probabilities(data, P, seed)


@dataclass(frozen=True)
class FoldPartition:
    assignments: np.ndarray
    K: int

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.K)

    def fold(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == k)

    def complement(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != k)


def partition_folds(n: int, K: int, seed: int) -> FoldPartition:
    """Random permutation of ``0..n-1`` cut into ``K`` contiguous blocks.

    When ``K`` does not divide ``n`` the first ``n mod K`` folds get one
    extra element.
    """
    n, K = int(n), int(K)
    if K < 2 or K > n:
        raise BadFoldCount(f"need 2 <= K <= n, got K={K}, n={n}")
    perm = make_rng(seed).permutation(n)
    base, extra = divmod(n, K)
    sizes = np.full(K, base)
    sizes[:extra] += 1
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.repeat(np.arange(K), sizes)
    return FoldPartition(assignments=_frozen(assignments), K=K)


def split_indices(n: int, fit_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random disjoint (fit, evaluation) index sets covering ``0..n-1``."""
    if not 0.0 < fit_fraction < 1.0:
        raise InvalidDataset(f"split fraction must lie in (0, 1), got {fit_fraction}")
    n1 = int(round(fit_fraction * n))
    n1 = min(max(n1, 1), n - 2)
    if n1 < 1:
        raise InvalidDataset(f"cannot split n={n} into a fit part and >= 2 evaluation rows")
    perm = make_rng(seed).permutation(n)
    return np.sort(perm[:n1]), np.sort(perm[n1:])
