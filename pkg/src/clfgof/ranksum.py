"""Rank-sum statistics with tie-breaking, and their empirical projections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from . import kernels
from .data import AugmentedDataset, FoldPartition, child_seed
from .errors import EmptyInput, InvalidDataset


class Distinguisher(Protocol):
    def score(self, X: np.ndarray, y: np.ndarray) -> np.ndarray: ...


class DistinguisherProcedure(Protocol):
    def fit(self, records: AugmentedDataset, seed: int) -> Distinguisher: ...


@dataclass(frozen=True)
class ScoredPair:
    """Scores of the real sample (``s0``) and synthetic sample (``s1``)."""

    s0: np.ndarray
    s1: np.ndarray
    u0: Optional[np.ndarray] = None
    u1: Optional[np.ndarray] = None

    def __post_init__(self):
        s0 = np.asarray(self.s0, dtype=np.float64).ravel()
        s1 = np.asarray(self.s1, dtype=np.float64).ravel()
        if s0.size == 0 or s1.size == 0:
            raise EmptyInput("rank statistics need nonempty score arrays")
        for name, a in (("s0", s0), ("s1", s1)):
            if not np.all(np.isfinite(a)):
                raise InvalidDataset(f"{name} contains non-finite scores")
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "s1", s1)
        for name, ref in (("u0", s0), ("u1", s1)):
            u = getattr(self, name)
            if u is not None:
                u = np.asarray(u, dtype=np.float64).ravel()
                if u.shape != ref.shape:
                    raise InvalidDataset(f"{name} length {u.size} != score length {ref.size}")
                object.__setattr__(self, name, u)

    @property
    def m0(self) -> int:
        return self.s0.shape[0]

    @property
    def m1(self) -> int:
        return self.s1.shape[0]

    def keys(self, tie_break: bool):
        if tie_break:
            if self.u0 is None or self.u1 is None:
                raise InvalidDataset("tie-breaking requires stored uniforms u0, u1")
            return self.s0, self.u0, self.s1, self.u1
        # equal zero uniforms turn the lexicographic order into the plain strict one
        return self.s0, np.zeros(self.m0), self.s1, np.zeros(self.m1)


@dataclass(frozen=True)
class ProjectionValues:
    phi_hat: np.ndarray
    psi_hat: np.ndarray
    T: float


def empirical_projections(pair: ScoredPair, tie_break: bool = True) -> ProjectionValues:
    """phi_hat[i]: share of synthetic keys above real key i;
    psi_hat[j]: share of real keys below synthetic key j."""
    above, below = kernels.rank_counts(*pair.keys(tie_break))
    T = float(above.sum()) / (pair.m0 * pair.m1)
    return ProjectionValues(phi_hat=above / pair.m1, psi_hat=below / pair.m0, T=T)


def rank_sum(pair: ScoredPair, tie_break: bool = True) -> float:
    """Fraction of cross-sample pairs where the synthetic point ranks higher."""
    above, _ = kernels.rank_counts(*pair.keys(tie_break))
    return float(above.sum()) / (pair.m0 * pair.m1)


def rank_indicator_matrix(pair: ScoredPair, tie_break: bool = True) -> np.ndarray:
    """The full ``m0 x m1`` indicator matrix by direct double loop (oracle)."""
    s0, u0, s1, u1 = pair.keys(tie_break)
    R = np.zeros((pair.m0, pair.m1), dtype=np.int64)
    for i in range(pair.m0):
        for j in range(pair.m1):
            if s0[i] < s1[j]:
                R[i, j] = 1
            elif s0[i] == s1[j] and u0[i] < u1[j]:
                R[i, j] = 1
    return R


def rank_sum_bruteforce(pair: ScoredPair, tie_break: bool = True) -> float:
    return float(rank_indicator_matrix(pair, tie_break).mean())


def projections_bruteforce(pair: ScoredPair, tie_break: bool = True) -> ProjectionValues:
    R = rank_indicator_matrix(pair, tie_break)
    return ProjectionValues(phi_hat=R.mean(axis=1), psi_hat=R.mean(axis=0), T=float(R.mean()))


def score_pair(records: AugmentedDataset, g: Distinguisher) -> ScoredPair:
    """Score the real pairs ``(x_i, y_i)`` and synthetic pairs ``(x_j, y'_j)``."""
    return ScoredPair(
        s0=g.score(records.x, records.y),
        s1=g.score(records.x, records.y_prime),
        u0=records.u,
        u1=records.u_prime,
    )


def t_split(aug: AugmentedDataset, split, procedure: DistinguisherProcedure, seed: int):
    """Fit on the first index set, rank-sum on the second. Returns ``(T, g)``."""
    fit_idx, eval_idx = (np.asarray(s, dtype=np.int64) for s in split)
    if fit_idx.size == 0 or eval_idx.size == 0:
        raise EmptyInput("both parts of the split must be nonempty")
    if np.intersect1d(fit_idx, eval_idx).size:
        raise InvalidDataset("fit and evaluation index sets overlap")
    g = procedure.fit(aug.subset(fit_idx), seed)
    T = rank_sum(score_pair(aug.subset(eval_idx), g), tie_break=True)
    return T, g


def t_cross(aug: AugmentedDataset, folds: FoldPartition, procedure: DistinguisherProcedure, seed: int):
    """Out-of-fold fits, in-fold rank sums, unweighted fold average.

    Returns ``(T_cross, [(T_k, g_k), ...])``.
    """
    if folds.assignments.shape[0] != len(aug):
        raise InvalidDataset("fold partition does not match the dataset length")
    per_fold = []
    for k in range(folds.K):
        g = procedure.fit(aug.subset(folds.complement(k)), child_seed(seed, k))
        T_k = rank_sum(score_pair(aug.subset(folds.fold(k)), g), tie_break=True)
        per_fold.append((T_k, g))
    return float(np.mean([t for t, _ in per_fold])), per_fold
