"""Variance estimators for the split and cross-fit statistics, plus diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import AugmentedDataset, child_seed, make_rng
from .errors import InvalidDataset, TooFewEvaluations
from .ranksum import ProjectionValues

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2_hat: float
    per_fold: Optional[np.ndarray] = None
    floored: bool = False


def _fold_variance(proj: ProjectionValues, T: float) -> tuple[float, bool]:
    phi = np.asarray(proj.phi_hat, dtype=np.float64)
    psi = np.asarray(proj.psi_hat, dtype=np.float64)
    if phi.shape != psi.shape:
        raise InvalidDataset("phi_hat and psi_hat must be indexed by the same evaluation records")
    m = phi.shape[0]
    if m < 2:
        raise TooFewEvaluations(f"need at least 2 evaluation records, got {m}")
    resid = phi + psi - 2.0 * T
    s2 = float(resid @ resid) / (m - 1)
    if s2 < VARIANCE_FLOOR:
        return VARIANCE_FLOOR, True
    return s2, False


def sigma_split(proj: ProjectionValues, T: Optional[float] = None) -> VarianceEstimate:
    """Sample variance of ``phi_hat + psi_hat`` centred at ``2T``, divisor ``m - 1``."""
    s2, floored = _fold_variance(proj, proj.T if T is None else T)
    return VarianceEstimate(sigma2_hat=s2, floored=floored)


def sigma_cross(per_fold_proj: Sequence[ProjectionValues], per_fold_T: Optional[Sequence[float]] = None) -> VarianceEstimate:
    """Unweighted average over folds of the per-fold split-style variance."""
    if len(per_fold_proj) < 2:
        raise TooFewEvaluations(f"cross-fit variance needs K >= 2 folds, got {len(per_fold_proj)}")
    Ts = [p.T for p in per_fold_proj] if per_fold_T is None else list(per_fold_T)
    vals = []
    any_floored = False
    for proj, T in zip(per_fold_proj, Ts):
        s2, fl = _fold_variance(proj, T)
        vals.append(s2)
        any_floored |= fl
    per_fold = np.asarray(vals)
    s2 = float(per_fold.mean())
    if s2 < VARIANCE_FLOOR:
        s2, any_floored = VARIANCE_FLOOR, True
    return VarianceEstimate(sigma2_hat=s2, per_fold=per_fold, floored=any_floored)


# ---------------------------------------------------------------------------
# Hajek linearisation residual
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HajekReport:
    residual: float
    scaled: float
    T: float = float("nan")
    mu_hat: float = float("nan")
    n_k: int = 0


def hajek_residual(T_k: float, phi, psi, mu_hat: float) -> HajekReport:
    """``|T_k - mu - Phi_k - Psi_k|`` with ``Phi_k = mean(phi) - mu``, ``Psi_k = mean(psi) - mu``."""
    phi = np.asarray(phi, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    Phi = phi.mean() - mu_hat
    Psi = psi.mean() - mu_hat
    r = abs(T_k - mu_hat - Phi - Psi)
    return HajekReport(residual=float(r), scaled=float(math.sqrt(phi.shape[0]) * r),
                       T=float(T_k), mu_hat=float(mu_hat), n_k=int(phi.shape[0]))


def hajek_oracle_check(model, procedure, n_train: int, n_eval: int, seed: int,
                       draws: int = 100_000, g=None) -> HajekReport:
    """Residual using population projections of a known generative model.

    The distinguisher is fitted on ``n_train`` fresh triplets (or ``g`` is
    used directly); ``T_k`` is computed on ``n_eval`` fresh triplets.
    """
    from .oracle import ProjectionOracle
    from .ranksum import rank_sum, score_pair

    if g is None:
        g = procedure.fit(model.draw_triplets(n_train, child_seed(seed, 0)), child_seed(seed, 1))
    fold = model.draw_triplets(n_eval, child_seed(seed, 2))
    oracle = ProjectionOracle(g, model, draws, child_seed(seed, 3))
    T_k = rank_sum(score_pair(fold, g), tie_break=True)
    phi = oracle.phi(fold.x, fold.y)
    psi = oracle.psi(fold.x, fold.y_prime)
    return hajek_residual(T_k, phi, psi, oracle.auc)


# ---------------------------------------------------------------------------
# Perturb-one stability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    deltas: np.ndarray
    quantiles: tuple
    scaled_p99: float
    n: int


class EmpiricalTripletSource:
    """Resample records of an augmented dataset with replacement.

    Stands in for a generative model when only holdout data are available.
    """

    def __init__(self, aug: AugmentedDataset):
        self.aug = aug

    def draw_triplets(self, n: int, seed: int) -> AugmentedDataset:
        rng = make_rng(seed)
        idx = rng.integers(0, len(self.aug), size=n)
        sub = self.aug.subset(idx)
        # fresh tie-break uniforms for the resampled copies
        return AugmentedDataset(x=sub.x, y=sub.y, y_prime=sub.y_prime, u=rng.random(n),
                                u_prime=rng.random(n), seed=int(seed), label_count=sub.label_count)


def _replace_record(data: AugmentedDataset, i: int, new: AugmentedDataset) -> AugmentedDataset:
    def put(a, b):
        a = np.array(a, copy=True)
        a[i] = b[0]
        return a

    return AugmentedDataset(
        x=put(data.x, new.x), y=put(data.y, new.y), y_prime=put(data.y_prime, new.y_prime),
        u=put(data.u, new.u), u_prime=put(data.u_prime, new.u_prime),
        seed=data.seed, label_count=data.label_count,
    )


def perturb_one_stability(procedure, generator, n: int, reps: int, probe_count: int, seed: int) -> StabilityReport:
    """Score changes when one training triplet is replaced by an iid copy.

    Each repetition fits on ``n`` triplets and on the same set with one random
    record swapped, then records ``|g(x*, y*) - g^i(x*, y*)|`` and
    ``|g(x*, y'*) - g^i(x*, y'*)|`` at ``probe_count`` fresh probe triplets.
    """
    if reps < 1:
        raise InvalidDataset("reps must be >= 1")
    deltas = []
    for r in range(reps):
        s = child_seed(seed, r)
        data = generator.draw_triplets(n, child_seed(s, 0))
        swap = generator.draw_triplets(1, child_seed(s, 1))
        probes = generator.draw_triplets(probe_count, child_seed(s, 2))
        i = int(make_rng(child_seed(s, 3)).integers(0, n))
        fit_seed = child_seed(s, 4)
        g = procedure.fit(data, fit_seed)
        gi = procedure.fit(_replace_record(data, i, swap), fit_seed)
        for labels in (probes.y, probes.y_prime):
            deltas.append(np.abs(g.score(probes.x, labels) - gi.score(probes.x, labels)))
    deltas = np.concatenate(deltas)
    q = tuple(float(v) for v in np.quantile(deltas, [0.5, 0.9, 0.99]))
    return StabilityReport(deltas=deltas, quantiles=q, scaled_p99=q[2] * math.sqrt(n), n=int(n))
