"""Distinguisher procedures: fit a score g(x, y) in [0, 1] on augmented data.

Built-in procedures:

* :class:`LogisticLabelSplit` -- one IRLS logistic model per label, combined
  by ``g(x, y) = g_y(x)``.
* :class:`LassoProcedure` -- squared-loss LASSO on a bounded basis
  expansion, solved by cyclic coordinate descent.
* :class:`ConstantProcedure` -- ignores its data; useful as a baseline.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit

from . import kernels
from .data import AugmentedDataset
from .errors import (
    EmptySubset,
    InvalidDataset,
    MaxSweepsExceeded,
    NonPositiveLambda,
    NumericalFailure,
    SingleClassInput,
    UnboundedBasis,
)

SEPARATION_NORM = 30.0
HESSIAN_JITTER = 1e-10


@dataclass(frozen=True)
class ExpandedSample:
    """``2m`` rows: all ``(x_i, y_i, c=0)`` then all ``(x_i, y'_i, c=1)``."""

    x: np.ndarray
    y: np.ndarray
    c: np.ndarray

    @property
    def m(self) -> int:
        return self.x.shape[0] // 2


def expand(records: AugmentedDataset) -> ExpandedSample:
    if len(records) == 0:
        raise EmptySubset("cannot expand an empty record set")
    m = len(records)
    return ExpandedSample(
        x=np.vstack((records.x, records.x)),
        y=np.concatenate((records.y, records.y_prime)),
        c=np.concatenate((np.zeros(m, dtype=np.int64), np.ones(m, dtype=np.int64))),
    )


# ---------------------------------------------------------------------------
# Logistic regression by IRLS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogisticModel:
    theta: np.ndarray  # slopes then intercept
    converged: bool
    iterations: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return expit(X @ self.theta[:-1] + self.theta[-1])


def _nll(A, c, theta, l2=0.0):
    eta = A @ theta
    pen = 0.5 * l2 * float(theta[:-1] @ theta[:-1]) if l2 else 0.0
    return float(np.sum(np.logaddexp(0.0, eta) - c * eta)) + pen


def fit_logistic(xs, cs, tol: float = 1e-8, max_iter: int = 100, l2: float = 0.0) -> LogisticModel:
    """Newton/IRLS fit of ``P(c=1 | x)`` with an intercept.

    ``l2 > 0`` adds ``(l2 / 2) * ||slopes||^2`` to the negative log-likelihood
    (the intercept is not penalised).

    Stops once the largest coefficient update drops below ``tol``. If the
    coefficient norm passes 30, or ``max_iter`` runs out on perfectly
    separated data, the coefficients are rescaled to norm 30 and
    ``converged`` is False.
    """
    X = np.asarray(xs, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    c = np.asarray(cs, dtype=np.float64).ravel()
    if c.shape[0] != X.shape[0]:
        raise InvalidDataset(f"{X.shape[0]} feature rows but {c.shape[0]} labels")
    if not np.all(np.isfinite(X)):
        raise InvalidDataset("features contain non-finite entries")
    if not np.all((c == 0) | (c == 1)):
        raise InvalidDataset("class labels must be 0 or 1")
    if c.min() == c.max():
        raise SingleClassInput("logistic fit needs both classes present")

    A = np.hstack((X, np.ones((X.shape[0], 1))))
    p = A.shape[1]
    theta = np.zeros(p)
    if l2 < 0:
        raise InvalidDataset(f"l2 penalty must be nonnegative, got {l2}")
    obj = _nll(A, c, theta, l2)
    ridge = np.full(p, float(l2))
    ridge[-1] = 0.0
    jitter = np.diag(ridge + HESSIAN_JITTER)
    for it in range(1, max_iter + 1):
        mu = expit(A @ theta)
        w = mu * (1.0 - mu)
        H = A.T @ (A * w[:, None]) + jitter
        grad = A.T @ (c - mu) - ridge * theta
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            raise NumericalFailure("non-finite Newton step")
        scale = 1.0
        for _ in range(40):
            cand = theta + scale * step
            new_obj = _nll(A, c, cand, l2)
            if new_obj <= obj + 1e-12 * max(1.0, abs(obj)):
                break
            scale *= 0.5
        else:
            raise NumericalFailure("objective increased after a damped Newton step")
        update = np.max(np.abs(cand - theta))
        theta, obj = cand, new_obj
        norm = float(np.linalg.norm(theta))
        if norm > SEPARATION_NORM:
            return LogisticModel(theta=theta * (SEPARATION_NORM / norm), converged=False, iterations=it)
        if update < tol:
            return LogisticModel(theta=theta, converged=True, iterations=it)
    # Newton creeps towards infinity on separated data; detect it directly
    margins = (2.0 * c - 1.0) * (A @ theta)
    if np.all(margins > 0):
        theta = theta * (SEPARATION_NORM / float(np.linalg.norm(theta)))
    return LogisticModel(theta=theta, converged=False, iterations=max_iter)


# ---------------------------------------------------------------------------
# Basis expansions and the coupled-sample LASSO
# ---------------------------------------------------------------------------


class BasisExpansion:
    """Functions ``e_1..e_K: (x, y) -> [-B, B]`` evaluated row-wise."""

    size: int
    bound: float

    def evaluate(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class LabelInteractionBasis(BasisExpansion):
    """Per-label indicator and per-label clamped raw features.

    Column block for label ``l`` is ``[1(y=l), 1(y=l) * clip(x, -B, B)]``.
    """

    d: int
    label_count: int
    bound: float = 10.0

    @property
    def size(self) -> int:
        return self.label_count * (self.d + 1)

    def evaluate(self, X, y):
        X = np.clip(np.asarray(X, dtype=np.float64), -self.bound, self.bound)
        y = np.asarray(y)
        n = X.shape[0]
        out = np.zeros((n, self.size))
        w = self.d + 1
        for label in range(self.label_count):
            mask = y == label
            out[mask, label * w] = 1.0
            out[mask, label * w + 1:(label + 1) * w] = X[mask]
        return out


@dataclass(frozen=True)
class FunctionBasis(BasisExpansion):
    """Arbitrary vectorised callables ``f(X, y) -> (n,)``."""

    functions: Sequence[Callable[[np.ndarray, np.ndarray], np.ndarray]]
    bound: float

    @property
    def size(self) -> int:
        return len(self.functions)

    def evaluate(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        cols = [np.broadcast_to(np.asarray(f(X, y), dtype=np.float64), (X.shape[0],)) for f in self.functions]
        return np.column_stack(cols)


def build_design_matrix(sample: ExpandedSample, basis: BasisExpansion):
    """Return ``(Xi, Z)``: basis rows for the real then synthetic block, and 0/1 response."""
    Xi = basis.evaluate(sample.x, sample.y)
    if not np.all(np.isfinite(Xi)):
        raise UnboundedBasis("basis produced non-finite values")
    worst = float(np.max(np.abs(Xi))) if Xi.size else 0.0
    if worst > basis.bound:
        raise UnboundedBasis(f"basis value {worst:g} exceeds bound {basis.bound:g}")
    return Xi, sample.c.astype(np.float64)


# penalty constant used by the LASSO distinguisher; c = 1 over-shrinks at n ~ 1000
LASSO_C = 0.5


def default_lambda(K_n: int, n: int, c: float = 1.0) -> float:
    """``c * sqrt(log(K_n) / n)``."""
    return c * math.sqrt(math.log(K_n) / n)


@dataclass(frozen=True)
class LassoModel:
    beta: np.ndarray
    lam: float
    basis: Optional[BasisExpansion]
    objective_trace: np.ndarray
    converged: bool = True
    sweeps: int = 0


def fit_lasso(design, Z, lam: float, tol: float = 1e-9, max_sweeps: int = 10_000,
              basis: Optional[BasisExpansion] = None) -> LassoModel:
    """Minimise ``(1/(4n)) ||Z - design @ b||^2 + lam * ||b||_1`` with ``n = rows / 2``.

    Cyclic coordinate descent from ``b = 0`` with exact soft-threshold
    updates. If ``max_sweeps`` is exhausted a :class:`MaxSweepsExceeded`
    warning is issued and the last iterate is returned with
    ``converged=False``.
    """
    if not lam > 0:
        raise NonPositiveLambda(f"lambda must be positive, got {lam}")
    design = np.asarray(design, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64).ravel()
    if design.ndim != 2 or design.shape[0] != Z.shape[0]:
        raise InvalidDataset(f"design {design.shape} does not match response length {Z.shape[0]}")
    if not np.all(np.isfinite(design)):
        raise InvalidDataset("design contains non-finite entries")
    beta, trace, sweeps, converged = kernels.cd_lasso(design, Z, lam, tol, max_sweeps, np.zeros(design.shape[1]))
    if not converged:
        warnings.warn(f"coordinate descent stopped after {sweeps} sweeps", MaxSweepsExceeded, stacklevel=2)
    return LassoModel(beta=beta, lam=float(lam), basis=basis, objective_trace=trace,
                      converged=bool(converged), sweeps=int(sweeps))


def lasso_kkt_violation(design, Z, model: LassoModel) -> float:
    """Largest violation of the LASSO optimality conditions (0 at an exact optimum)."""
    design = np.asarray(design, dtype=np.float64)
    r = np.asarray(Z, dtype=np.float64) - design @ model.beta
    grad = -(design.T @ r) / design.shape[0]
    lam = model.lam
    zero = model.beta == 0
    viol = np.where(zero, np.maximum(np.abs(grad) - lam, 0.0), np.abs(grad + lam * np.sign(model.beta)))
    return float(viol.max()) if viol.size else 0.0


# ---------------------------------------------------------------------------
# Distinguishers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantDistinguisher:
    value: float = 0.5

    def score(self, X, y):
        return np.full(np.asarray(X).shape[0], self.value)


@dataclass(frozen=True)
class LabelSplitDistinguisher:
    """``g(x, y) = g_y(x)``; labels without a fitted model score ``fallback``."""

    models: dict
    fallback: float = 0.5

    def score(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        out = np.full(X.shape[0], self.fallback)
        for label, model in self.models.items():
            mask = y == label
            if np.any(mask):
                out[mask] = model.predict(X[mask])
        return out


@dataclass(frozen=True)
class LassoDistinguisher:
    model: LassoModel

    def score(self, X, y):
        return np.clip(self.model.basis.evaluate(X, y) @ self.model.beta, 0.0, 1.0)


def label_split_fit(records: AugmentedDataset, inner, seed: int) -> LabelSplitDistinguisher:
    """Fit ``inner(xs, cs, seed)`` separately on the rows of each label stratum.

    Strata that are empty or contain a single class value fall back to the
    constant score 0.5.
    """
    sample = expand(records)
    models = {}
    for label in np.unique(sample.y):
        mask = sample.y == label
        cs = sample.c[mask]
        if cs.min() == cs.max():
            continue
        models[int(label)] = inner(sample.x[mask], cs, seed)
    return LabelSplitDistinguisher(models=models)


@dataclass(frozen=True)
class ConstantProcedure:
    value: float = 0.5

    def fit(self, records: AugmentedDataset, seed: int) -> ConstantDistinguisher:
        return ConstantDistinguisher(self.value)


@dataclass(frozen=True)
class LogisticLabelSplit:
    tol: float = 1e-8
    max_iter: int = 100
    l2: float = 0.0

    def _inner(self, xs, cs, seed):
        return fit_logistic(xs, cs, tol=self.tol, max_iter=self.max_iter, l2=self.l2)

    def fit(self, records: AugmentedDataset, seed: int) -> LabelSplitDistinguisher:
        return label_split_fit(records, self._inner, seed)


@dataclass(frozen=True)
class LassoProcedure:
    """Squared-loss LASSO over a basis; default basis is :class:`LabelInteractionBasis`.

    ``lam`` overrides the default ``c * sqrt(log(K_n) / n)``.
    """

    lam: Optional[float] = None
    c: float = LASSO_C
    bound: float = 10.0
    basis: Optional[BasisExpansion] = None
    tol: float = 1e-9
    max_sweeps: int = 10_000

    def fit(self, records: AugmentedDataset, seed: int) -> LassoDistinguisher:
        sample = expand(records)
        basis = self.basis or LabelInteractionBasis(records.x.shape[1], records.label_count, self.bound)
        Xi, Z = build_design_matrix(sample, basis)
        lam = self.lam if self.lam is not None else default_lambda(basis.size, sample.m, self.c)
        model = fit_lasso(Xi, Z, lam, tol=self.tol, max_sweeps=self.max_sweeps, basis=basis)
        return LassoDistinguisher(model)
