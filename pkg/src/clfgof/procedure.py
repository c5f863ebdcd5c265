"""Sample-split and cross-fit tolerance tests, p-values and the delta_min bound."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .data import AugmentedDataset, child_seed, partition_folds, split_indices
from .distinguish import ConstantProcedure, LassoProcedure, LogisticLabelSplit
from .errors import InvalidDataset, OutOfRange
from .ranksum import empirical_projections, score_pair
from .variance import sigma_cross, sigma_split

# Acklam's rational approximation to the normal quantile
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _lower_quantile(p: float) -> float:
    # p in (0, 0.5]
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # one Halley step against the erfc-based CDF
    e = normal_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, absolute error below 1e-9 on (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise OutOfRange(f"quantile level must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -_lower_quantile(1.0 - p)
    return _lower_quantile(p)


def delta_min(T: float, sigma_hat: float, n_eff: int, alpha: float) -> float:
    """Level ``1 - alpha`` lower confidence bound for the separation."""
    return max(0.0, T - 0.5 - sigma_hat / math.sqrt(n_eff) * normal_quantile(1.0 - alpha))


def z_statistic(T: float, sigma_hat: float, n_eff: int, delta: float) -> float:
    return math.sqrt(n_eff) * (T - delta - 0.5) / sigma_hat


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # keep pytest from collecting this class

    alpha: float = 0.05
    delta: float = 0.0
    method: str = "cross"
    K: int = 5
    split_fraction: float = 0.5
    seed: int = 0
    distinguisher: str = "logistic"
    lasso_c: float = 0.5
    lasso_lambda: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidDataset(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 <= self.delta <= 0.5:
            raise InvalidDataset(f"delta must lie in [0, 0.5], got {self.delta}")
        if self.method not in ("split", "cross"):
            raise InvalidDataset(f"method must be 'split' or 'cross', got {self.method!r}")
        if self.method == "cross" and self.K < 2:
            raise InvalidDataset(f"cross-fitting needs K >= 2, got {self.K}")
        if not 0.0 < self.split_fraction < 1.0:
            raise InvalidDataset(f"split_fraction must lie in (0, 1), got {self.split_fraction}")
        make_procedure(self.distinguisher)  # validates the name

    def procedure(self):
        return make_procedure(self.distinguisher, lasso_c=self.lasso_c, lasso_lambda=self.lasso_lambda)


def make_procedure(name: str, lasso_c: float = 0.5, lasso_lambda: Optional[float] = None):
    if name == "logistic":
        return LogisticLabelSplit()
    if name == "lasso":
        return LassoProcedure(lam=lasso_lambda, c=lasso_c)
    if name == "constant":
        return ConstantProcedure()
    raise InvalidDataset(f"unknown distinguisher {name!r} (expected logistic, lasso or constant)")


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    method: str
    T: float
    sigma2_hat: float
    z_stat: float
    p_value: float
    reject: bool
    delta_min: float
    n_eval: int
    alpha: float
    delta: float
    floored: bool
    per_fold: Optional[list] = None
    diagnostics: Optional[dict] = None

    def decide(self, delta: float, alpha: Optional[float] = None) -> bool:
        """Rejection decision for another tolerance (and level) on the same data."""
        alpha = self.alpha if alpha is None else alpha
        z = z_statistic(self.T, math.sqrt(self.sigma2_hat), self.n_eval, delta)
        return z > normal_quantile(1.0 - alpha)

    def to_dict(self) -> dict:
        return asdict(self)


def _finish(method, T, est, n_eff, cfg: TestConfig, per_fold) -> TestReport:
    sigma = math.sqrt(est.sigma2_hat)
    z = z_statistic(T, sigma, n_eff, cfg.delta)
    return TestReport(
        method=method,
        T=float(T),
        sigma2_hat=float(est.sigma2_hat),
        z_stat=float(z),
        p_value=float(normal_sf(z)),
        reject=bool(z > normal_quantile(1.0 - cfg.alpha)),
        delta_min=float(delta_min(T, sigma, n_eff, cfg.alpha)),
        n_eval=int(n_eff),
        alpha=float(cfg.alpha),
        delta=float(cfg.delta),
        floored=bool(est.floored),
        per_fold=per_fold,
    )


def run_split_test(aug: AugmentedDataset, cfg: TestConfig, procedure=None) -> TestReport:
    """Fit on one part, rank-sum and variance on the other, scale by ``sqrt(n2)``."""
    n = len(aug)
    if n < 4:
        raise InvalidDataset(f"sample-split test needs n >= 4, got {n}")
    procedure = procedure or cfg.procedure()
    fit_idx, eval_idx = split_indices(n, cfg.split_fraction, child_seed(cfg.seed, 0))
    g = procedure.fit(aug.subset(fit_idx), child_seed(cfg.seed, 1))
    proj = empirical_projections(score_pair(aug.subset(eval_idx), g), tie_break=True)
    est = sigma_split(proj)
    return _finish("split", proj.T, est, eval_idx.size, cfg, None)


def run_cross_test(aug: AugmentedDataset, cfg: TestConfig, procedure=None) -> TestReport:
    """K-fold cross-fit: out-of-fold fits, in-fold rank sums, scale by ``sqrt(n)``."""
    n = len(aug)
    if n < 2 * cfg.K:
        raise InvalidDataset(f"cross-fit test needs n >= 2K = {2 * cfg.K}, got {n}")
    procedure = procedure or cfg.procedure()
    folds = partition_folds(n, cfg.K, child_seed(cfg.seed, 0))
    fit_seed = child_seed(cfg.seed, 1)
    projs = []
    for k in range(cfg.K):
        g = procedure.fit(aug.subset(folds.complement(k)), child_seed(fit_seed, k))
        projs.append(empirical_projections(score_pair(aug.subset(folds.fold(k)), g), tie_break=True))
    est = sigma_cross(projs)
    T = float(np.mean([p.T for p in projs]))
    per_fold = [
        {"fold": k, "n_k": int(folds.sizes[k]), "T_k": float(p.T), "sigma2_k": float(s)}
        for k, (p, s) in enumerate(zip(projs, est.per_fold))
    ]
    return _finish("cross", T, est, n, cfg, per_fold)


def run_test(aug: AugmentedDataset, cfg: TestConfig, procedure=None) -> TestReport:
    if cfg.method == "split":
        return run_split_test(aug, cfg, procedure)
    return run_cross_test(aug, cfg, procedure)
