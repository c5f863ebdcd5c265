"""Ground truth for known generative models.

Monte Carlo (and, for finite models, exact) AUCs, likelihood ratios, the
Neyman-Pearson separation, total variation, and population projections and
variances used to validate the estimators.

Every AUC here counts ties as one half, which is the expectation of the
random tie-break used by the test statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, log_expit

from .data import AugmentedDataset, HoldoutDataset, child_seed, make_rng, sample_categorical

CHUNK = 100_000


class GenerativeModel:
    """``X ~ P_X``, ``Y | X ~ Cat(eta(X))`` and the classifier ``eta_hat``.

    Subclasses implement :meth:`sample_x`, :meth:`eta` and :meth:`eta_hat`.
    """

    label_count: int

    def sample_x(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def eta(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eta_hat(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_eta(self, X):
        with np.errstate(divide="ignore"):
            return np.log(self.eta(X))

    def log_eta_hat(self, X):
        with np.errstate(divide="ignore"):
            return np.log(self.eta_hat(X))

    @property
    def classifier(self):
        """The black box under test, as a batch ``predict_proba`` callable."""
        return self.eta_hat

    def sample_p0(self, rng, n):
        X = self.sample_x(rng, n)
        return X, sample_categorical(self.eta(X), rng.random(n))

    def sample_p1(self, rng, n):
        X = self.sample_x(rng, n)
        return X, sample_categorical(self.eta_hat(X), rng.random(n))

    def holdout(self, n: int, seed: int) -> HoldoutDataset:
        X, y = self.sample_p0(make_rng(seed), n)
        return HoldoutDataset(X, y, self.label_count)

    def draw_triplets(self, n: int, seed: int) -> AugmentedDataset:
        """iid ``(X, Y, Y')`` with shared features, plus tie-break uniforms."""
        rng = make_rng(seed)
        X = self.sample_x(rng, n)
        y = sample_categorical(self.eta(X), rng.random(n))
        yp = sample_categorical(self.eta_hat(X), rng.random(n))
        return AugmentedDataset(x=X, y=y, y_prime=yp, u=rng.random(n), u_prime=rng.random(n),
                                seed=int(seed), label_count=self.label_count)


class LogisticSetting(GenerativeModel):
    """``X ~ N(0, I_d)``, ``eta(x) = sigmoid(x'theta_star)``, ``eta_hat(x) = sigmoid(x'theta_hat)``."""

    label_count = 2

    def __init__(self, theta_star, theta_hat):
        self.theta_star = np.asarray(theta_star, dtype=np.float64)
        self.theta_hat = np.asarray(theta_hat, dtype=np.float64)
        self.d = self.theta_star.shape[0]

    def sample_x(self, rng, n):
        return rng.standard_normal((n, self.d))

    @staticmethod
    def _probs(s):
        p1 = expit(s)
        return np.column_stack((1.0 - p1, p1))

    @staticmethod
    def _log_probs(s):
        return np.column_stack((log_expit(-s), log_expit(s)))

    def eta(self, X):
        return self._probs(np.asarray(X) @ self.theta_star)

    def eta_hat(self, X):
        return self._probs(np.asarray(X) @ self.theta_hat)

    def log_eta(self, X):
        return self._log_probs(np.asarray(X) @ self.theta_star)

    def log_eta_hat(self, X):
        return self._log_probs(np.asarray(X) @ self.theta_hat)


def logistic_setting(d: int = 200, theta_seed: int = 0, alternative: bool = False, sparse: bool = False) -> LogisticSetting:
    """The simulation models: dense ``theta* ~ N(0, 0.25^2 I_d)`` or sparse
    ``theta* = (1,1,1,1,1,0,...,0)``; ``theta_hat = theta*`` (null) or ``-theta*``."""
    if sparse:
        theta = np.zeros(d)
        theta[: min(5, d)] = 1.0
    else:
        theta = 0.25 * make_rng(theta_seed).standard_normal(d)
    return LogisticSetting(theta, -theta if alternative else theta)


class DiscreteModel(GenerativeModel):
    """Finite feature space ``{0..S-1}`` (one feature column holding the index)."""

    def __init__(self, px, eta_table, eta_hat_table):
        self.px = np.asarray(px, dtype=np.float64) / np.sum(px)
        self.eta_table = np.asarray(eta_table, dtype=np.float64)
        self.eta_hat_table = np.asarray(eta_hat_table, dtype=np.float64)
        self.label_count = self.eta_table.shape[1]
        self.S = self.px.shape[0]

    @staticmethod
    def _index(X):
        return np.asarray(X, dtype=np.float64).reshape(len(X), -1)[:, 0].astype(np.int64)

    def sample_x(self, rng, n):
        return rng.choice(self.S, size=n, p=self.px).astype(np.float64).reshape(-1, 1)

    def eta(self, X):
        return self.eta_table[self._index(X)]

    def eta_hat(self, X):
        return self.eta_hat_table[self._index(X)]

    # exhaustive enumeration over the support {(x, y)}
    def support(self):
        xs = np.repeat(np.arange(self.S), self.label_count).astype(np.float64).reshape(-1, 1)
        ys = np.tile(np.arange(self.label_count), self.S)
        w0 = (self.px[:, None] * self.eta_table).ravel()
        w1 = (self.px[:, None] * self.eta_hat_table).ravel()
        return xs, ys, w0, w1


def random_discrete_model(rng: np.random.Generator, S: Optional[int] = None, M: Optional[int] = None) -> DiscreteModel:
    S = int(rng.integers(2, 7)) if S is None else S
    M = int(rng.integers(2, 5)) if M is None else M
    px = rng.dirichlet(np.ones(S))
    return DiscreteModel(px, rng.dirichlet(np.ones(M), size=S), rng.dirichlet(np.ones(M), size=S))


# ---------------------------------------------------------------------------
# Likelihood ratio, AUC, separation, total variation
# ---------------------------------------------------------------------------


def log_likelihood_ratio(model: GenerativeModel, X, y) -> np.ndarray:
    """``log(eta_hat(x)[y] / eta(x)[y])`` with ``0/0 -> 0`` and ``c/0 -> +inf``."""
    y = np.asarray(y, dtype=np.int64)
    rows = np.arange(y.shape[0])
    num = model.log_eta_hat(X)[rows, y]
    den = model.log_eta(X)[rows, y]
    both_zero = np.isneginf(num) & np.isneginf(den)
    with np.errstate(invalid="ignore"):
        out = num - den
    out[both_zero] = 0.0
    return out


def likelihood_ratio(model: GenerativeModel, X, y) -> np.ndarray:
    """``dP1/dP0`` at ``(x, y)``, i.e. ``eta_hat(x)[y] / eta(x)[y]`` (``inf`` off P0's support)."""
    with np.errstate(over="ignore"):
        return np.exp(log_likelihood_ratio(model, X, y))


@dataclass(frozen=True)
class SeparationEstimate:
    rho: float
    auc: float
    mc_se: float
    draws: int


def _as_score(score):
    return score.score if hasattr(score, "score") else score


def auc_of(score, model: GenerativeModel, draws: int, seed: int) -> SeparationEstimate:
    """Monte Carlo ``P(s(Z) < s(Z')) + P(s(Z) = s(Z'))/2`` over iid pairs ``Z ~ P0``, ``Z' ~ P1``."""
    if draws < 2:
        raise ValueError("draws must be >= 2")
    fn = _as_score(score)
    rng = make_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < draws:
        m = min(CHUNK, draws - done)
        X0, y0 = model.sample_p0(rng, m)
        X1, y1 = model.sample_p1(rng, m)
        a = np.asarray(fn(X0, y0), dtype=np.float64)
        b = np.asarray(fn(X1, y1), dtype=np.float64)
        ind = (a < b) + 0.5 * (a == b)
        total += ind.sum()
        total_sq += (ind * ind).sum()
        done += m
    auc = float(total) / draws
    var = max(total_sq / draws - auc * auc, 0.0) * draws / (draws - 1)
    return SeparationEstimate(rho=float(auc - 0.5), auc=float(auc), mc_se=math.sqrt(var / draws), draws=int(draws))


def separation(model: GenerativeModel, draws: int = 1_000_000, seed: int = 0) -> SeparationEstimate:
    """Neyman-Pearson separation ``rho = AUC(L) - 1/2`` by Monte Carlo."""
    return auc_of(lambda X, y: log_likelihood_ratio(model, X, y), model, draws, seed)


def _tv_terms(model, draws, seed):
    rng = make_rng(seed)
    out = []
    done = 0
    while done < draws:
        m = min(CHUNK, draws - done)
        X = model.sample_x(rng, m)
        out.append(0.5 * np.abs(model.eta(X) - model.eta_hat(X)).sum(axis=1))
        done += m
    return np.concatenate(out)


def tv_distance(model: GenerativeModel, draws: int, seed: int) -> float:
    """``E_X[ (1/2) sum_l |eta_l(X) - eta_hat_l(X)| ]`` by Monte Carlo."""
    return float(_tv_terms(model, draws, seed).mean())


@dataclass(frozen=True)
class SandwichCheck:
    holds: bool
    lower_margin: float  # rho - tv/4
    upper_margin: float  # tv/2 - rho
    rho: float
    tv: float
    slack: float


def check_tv_auc_sandwich(model: GenerativeModel, draws: int, seed: int) -> SandwichCheck:
    """Check ``tv/4 <= rho <= tv/2`` with a 3-standard-error Monte Carlo slack."""
    sep = separation(model, draws, child_seed(seed, 0))
    terms = _tv_terms(model, draws, child_seed(seed, 1))
    tv = float(terms.mean())
    tv_se = float(terms.std(ddof=1) / math.sqrt(terms.size)) if terms.size > 1 else 0.0
    lower = sep.rho - tv / 4.0
    upper = tv / 2.0 - sep.rho
    slack = 3.0 * math.hypot(sep.mc_se, 0.5 * tv_se)
    return SandwichCheck(holds=bool(lower >= -slack and upper >= -slack), lower_margin=lower,
                         upper_margin=upper, rho=sep.rho, tv=tv, slack=slack)


# exact versions for finite models


def exact_auc(score, model: DiscreteModel) -> float:
    xs, ys, w0, w1 = model.support()
    s = np.asarray(_as_score(score)(xs, ys), dtype=np.float64)
    less = s[:, None] < s[None, :]
    eq = s[:, None] == s[None, :]
    return float(w0 @ (less + 0.5 * eq) @ w1)


def exact_separation(model: DiscreteModel) -> float:
    return exact_auc(lambda X, y: log_likelihood_ratio(model, X, y), model) - 0.5


def exact_tv(model: DiscreteModel) -> float:
    _, _, w0, w1 = model.support()
    return float(0.5 * np.abs(w0 - w1).sum())


def exact_sandwich(model: DiscreteModel, tol: float = 1e-12) -> SandwichCheck:
    rho = exact_separation(model)
    tv = exact_tv(model)
    lower = rho - tv / 4.0
    upper = tv / 2.0 - rho
    return SandwichCheck(holds=bool(lower >= -tol and upper >= -tol), lower_margin=lower,
                         upper_margin=upper, rho=rho, tv=tv, slack=tol)


def lr_l1_distance(g_hat, model: DiscreteModel) -> float:
    """``|| g/(1-g) - L ||_{L1(P0)}`` by enumeration."""
    xs, ys, w0, _ = model.support()
    g = np.asarray(_as_score(g_hat)(xs, ys), dtype=np.float64)
    L_hat = g / (1.0 - g)
    L = likelihood_ratio(model, xs, ys)
    mask = w0 > 0
    return float(np.sum(w0[mask] * np.abs(L_hat[mask] - L[mask])))


# ---------------------------------------------------------------------------
# Population projections and variances
# ---------------------------------------------------------------------------


def _upper_share(sorted_pool, v):
    """Share of pool strictly above ``v`` plus half the share equal to ``v``."""
    n = sorted_pool.shape[0]
    lo = np.searchsorted(sorted_pool, v, side="left")
    hi = np.searchsorted(sorted_pool, v, side="right")
    return (n - hi + 0.5 * (hi - lo)) / n


def _lower_share(sorted_pool, v):
    n = sorted_pool.shape[0]
    lo = np.searchsorted(sorted_pool, v, side="left")
    hi = np.searchsorted(sorted_pool, v, side="right")
    return (lo + 0.5 * (hi - lo)) / n


class ProjectionOracle:
    """Population projections of a fixed distinguisher ``g``.

    ``phi(x, y)  = P_{Z' ~ P1}(g(x, y) < g(Z'))  + ties/2``
    ``psi(x, y') = P_{Z ~ P0}(g(Z) < g(x, y'))   + ties/2``

    Both are read off sorted pools of ``draws`` scores from ``P0`` and ``P1``.
    """

    def __init__(self, g, model: GenerativeModel, draws: int = 100_000, seed: int = 0):
        fn = _as_score(g)
        self.fn = fn
        rng = make_rng(seed)
        X0, y0 = model.sample_p0(rng, draws)
        X1, y1 = model.sample_p1(rng, draws)
        self.pool0 = np.sort(np.asarray(fn(X0, y0), dtype=np.float64))
        self.pool1 = np.sort(np.asarray(fn(X1, y1), dtype=np.float64))

    def phi(self, X, y):
        return _upper_share(self.pool1, np.asarray(self.fn(X, y), dtype=np.float64))

    def psi(self, X, y_prime):
        return _lower_share(self.pool0, np.asarray(self.fn(X, y_prime), dtype=np.float64))

    @property
    def auc(self) -> float:
        """Pool-vs-pool AUC of ``g``: the mean of ``phi`` over the ``P0`` pool."""
        return float(_upper_share(self.pool1, self.pool0).mean())


def population_projections(g, model: GenerativeModel, X, y, y_prime, draws: int = 100_000, seed: int = 0):
    """Return ``(phi(X, y), psi(X, y'))`` for the given points."""
    oracle = ProjectionOracle(g, model, draws, seed)
    return oracle.phi(X, y), oracle.psi(X, y_prime)


def exact_projections(g, model: DiscreteModel, X, y, y_prime):
    xs, ys, w0, w1 = model.support()
    fn = _as_score(g)
    s_sup = np.asarray(fn(xs, ys), dtype=np.float64)
    a = np.asarray(fn(X, y), dtype=np.float64)
    b = np.asarray(fn(X, y_prime), dtype=np.float64)
    phi = ((a[:, None] < s_sup[None, :]) + 0.5 * (a[:, None] == s_sup[None, :])) @ w1
    psi = ((s_sup[None, :] < b[:, None]) + 0.5 * (s_sup[None, :] == b[:, None])) @ w0
    return phi, psi


def exact_split_variance(g, model: DiscreteModel) -> float:
    """``Var(phi(X, Y) + psi(X, Y'))`` by enumerating all triplets."""
    S, M = model.S, model.label_count
    x = np.repeat(np.arange(S), M * M).astype(np.float64).reshape(-1, 1)
    y = np.tile(np.repeat(np.arange(M), M), S)
    yp = np.tile(np.arange(M), S * M)
    idx = x[:, 0].astype(np.int64)
    w = model.px[idx] * model.eta_table[idx, y] * model.eta_hat_table[idx, yp]
    phi, psi = exact_projections(g, model, x, y, yp)
    v = phi + psi
    mean = w @ v
    return float(w @ (v - mean) ** 2)


def population_variance(model: GenerativeModel, kind: str = "split", g=None, procedure=None,
                        train_size: Optional[int] = None, outer: int = 2000, inner: int = 50,
                        draws: int = 100_000, seed: int = 0) -> float:
    """Monte Carlo population variance of ``phi + psi``.

    ``kind="split"``: variance over fresh triplets for the fixed distinguisher ``g``.
    ``kind="cross"``: variance over ``outer`` triplets of the average over
    ``inner`` independently refitted distinguishers (training sets of size
    ``train_size``) of ``phi + psi``.
    """
    if outer < 2:
        raise ValueError("outer must be >= 2")
    pts = model.draw_triplets(outer, child_seed(seed, 0))
    pool_seed = child_seed(seed, 1)
    if kind == "split":
        if g is None:
            raise ValueError("split kind needs a fitted distinguisher g")
        oracle = ProjectionOracle(g, model, draws, pool_seed)
        v = oracle.phi(pts.x, pts.y) + oracle.psi(pts.x, pts.y_prime)
        return float(np.var(v, ddof=1))
    if kind != "cross":
        raise ValueError(f"kind must be 'split' or 'cross', got {kind!r}")
    if procedure is None or train_size is None:
        raise ValueError("cross kind needs a procedure and a train_size")
    if inner < 1:
        raise ValueError("inner must be >= 1")
    acc = np.zeros(outer)
    for r in range(inner):
        data = model.draw_triplets(train_size, child_seed(seed, 2, r))
        g_r = procedure.fit(data, child_seed(seed, 3, r))
        oracle = ProjectionOracle(g_r, model, draws, pool_seed)
        acc += oracle.phi(pts.x, pts.y) + oracle.psi(pts.x, pts.y_prime)
    return float(np.var(acc / inner, ddof=1))


def coupled_lasso_target(model: LogisticSetting, bound: float = 10.0) -> np.ndarray:
    """Population least-squares coefficients over :class:`LabelInteractionBasis`.

    Only for the flipped alternative ``theta_hat = -theta*``. There
    ``eta + eta_hat = 1`` label-wise, so within each label stratum of the
    expanded sample ``x ~ N(0, I)`` and ``P(c = 1 | x, y = 1) = sigmoid(-x'theta*)``.
    Stein's identity then gives intercepts 1/2 and slopes
    ``-/+ E[sigmoid'(s)] theta*`` with ``s ~ N(0, ||theta*||^2)``.
    Feature clamping at ``bound`` is ignored (its mass is negligible for B = 10).
    """
    if not np.allclose(model.theta_hat, -model.theta_star):
        raise ValueError("closed form needs theta_hat = -theta_star")
    sd = float(np.linalg.norm(model.theta_star))
    nodes, weights = np.polynomial.hermite_e.hermegauss(80)
    p = expit(sd * nodes)
    kappa = float(weights @ (p * (1.0 - p)) / math.sqrt(2.0 * math.pi))
    d = model.d
    beta = np.zeros(2 * (d + 1))
    beta[0], beta[1:d + 1] = 0.5, kappa * model.theta_star
    beta[d + 1], beta[d + 2:] = 0.5, -kappa * model.theta_star
    return beta
