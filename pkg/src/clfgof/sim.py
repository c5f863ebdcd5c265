"""Desk-scale simulations: type-1 error, power curves and the sparse setting.

Results are plain rows (one per procedure x distinguisher x alpha x delta)
ready for CSV, plus a JSON-able summary. Everything is a function of the
experiment spec and its seed.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .data import augment, child_seed
from .errors import InvalidDataset
from .oracle import logistic_setting, separation
from .procedure import TestConfig, run_test

CSV_FIELDS = (
    "setting", "procedure", "distinguisher", "n", "K", "alpha", "delta",
    "delta_ratio", "reps", "rejection_rate", "mean_T", "mean_sigma2", "mc_se", "seed",
)

DEFAULT_RATIOS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class ExperimentSpec:
    setting: str = "logistic"
    n: int = 1000
    d: int = 200
    reps: int = 200
    alphas: tuple = (0.05,)
    delta_ratios: tuple = (0.0,)
    theta_seed: int = 0
    distinguishers: tuple = ("logistic",)
    procedures: tuple = ("split", "cross")
    K: int = 5
    split_fraction: float = 0.5
    seed: int = 0
    lasso_c: float = 0.5
    oracle_draws: int = 1_000_000
    delta_star: Optional[float] = None  # skip the oracle when already known
    threads: int = 1

    def __post_init__(self):
        if self.setting not in ("logistic", "sparse"):
            raise InvalidDataset(f"setting must be 'logistic' or 'sparse', got {self.setting!r}")
        if self.reps < 1:
            raise InvalidDataset(f"reps must be >= 1, got {self.reps}")
        if self.n < 2 * self.K or self.n < 4:
            raise InvalidDataset(f"n={self.n} too small for K={self.K}")
        if not self.alphas or not self.delta_ratios:
            raise InvalidDataset("alpha and delta grids must be nonempty")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise InvalidDataset("alphas must lie in (0, 1)")
        if any(r < 0.0 for r in self.delta_ratios):
            raise InvalidDataset("delta ratios must be nonnegative")
        for p in self.procedures:
            if p not in ("split", "cross"):
                raise InvalidDataset(f"unknown procedure {p!r}")
        for g in self.distinguishers:
            if g not in ("logistic", "lasso", "constant"):
                raise InvalidDataset(f"unknown distinguisher {g!r}")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "delta_ratios", tuple(float(r) for r in self.delta_ratios))
        object.__setattr__(self, "distinguishers", tuple(self.distinguishers))
        object.__setattr__(self, "procedures", tuple(self.procedures))


@dataclass
class ExperimentResult:
    experiment: str
    spec: ExperimentSpec
    delta_star: float
    rows: list
    runtime: float = 0.0
    per_rep: dict = field(default_factory=dict)

    def rate(self, procedure: str, distinguisher: str, delta_ratio: float, alpha: Optional[float] = None) -> float:
        alpha = self.spec.alphas[0] if alpha is None else alpha
        for row in self.rows:
            if (row["procedure"] == procedure and row["distinguisher"] == distinguisher
                    and math.isclose(row["delta_ratio"], delta_ratio) and math.isclose(row["alpha"], alpha)):
                return row["rejection_rate"]
        raise KeyError((procedure, distinguisher, delta_ratio, alpha))

    def summary(self) -> dict:
        """Deterministic JSON-able summary (wall-clock runtime is left out)."""
        spec = asdict(self.spec)
        spec.pop("threads")
        return {"experiment": self.experiment, "spec": spec, "delta_star": self.delta_star, "rows": self.rows}


@lru_cache(maxsize=16)
def _cached_delta_star(setting: str, d: int, theta_seed: int, draws: int) -> float:
    model = logistic_setting(d, theta_seed, alternative=True, sparse=setting == "sparse")
    return separation(model, draws, child_seed(theta_seed, 7)).rho


def delta_star(setting: str = "logistic", d: int = 200, theta_seed: int = 0, draws: int = 1_000_000) -> float:
    """Separation of the alternative model (``theta_hat = -theta*``), by Monte Carlo."""
    return _cached_delta_star(setting, int(d), int(theta_seed), int(draws))


def _one_rep(spec: ExperimentSpec, model, r: int, deltas: Sequence[float]):
    rep_seed = child_seed(spec.seed, r)
    holdout = model.holdout(spec.n, child_seed(rep_seed, 0))
    aug = augment(holdout, model.classifier, child_seed(rep_seed, 1))
    out = {}
    for dist in spec.distinguishers:
        for proc in spec.procedures:
            cfg = TestConfig(alpha=spec.alphas[0], delta=0.0, method=proc, K=spec.K,
                             split_fraction=spec.split_fraction, seed=child_seed(rep_seed, 2),
                             distinguisher=dist, lasso_c=spec.lasso_c)
            rep = run_test(aug, cfg)
            dec = np.array([[rep.decide(dl, a) for dl in deltas] for a in spec.alphas], dtype=bool)
            out[(proc, dist)] = (rep.T, rep.sigma2_hat, dec, rep.delta_min)
    return out


def _run(experiment: str, spec: ExperimentSpec, alternative: bool) -> ExperimentResult:
    start = time.perf_counter()
    model = logistic_setting(spec.d, spec.theta_seed, alternative=alternative, sparse=spec.setting == "sparse")
    if not alternative:
        dstar = 0.0  # theta_hat = theta*: the two samples have the same law
    elif spec.delta_star is not None:
        dstar = float(spec.delta_star)
    else:
        dstar = delta_star(spec.setting, spec.d, spec.theta_seed, spec.oracle_draws)
    deltas = [min(r * dstar, 0.5) for r in spec.delta_ratios]

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            reps = list(pool.map(lambda r: _one_rep(spec, model, r, deltas), range(spec.reps)))
    else:
        reps = [_one_rep(spec, model, r, deltas) for r in range(spec.reps)]

    rows = []
    per_rep = {}
    for dist in spec.distinguishers:
        for proc in spec.procedures:
            Ts = np.array([rr[(proc, dist)][0] for rr in reps])
            s2 = np.array([rr[(proc, dist)][1] for rr in reps])
            dec = np.stack([rr[(proc, dist)][2] for rr in reps])  # reps x alphas x deltas
            per_rep[(proc, dist)] = {"T": Ts, "sigma2": s2,
                                     "delta_min": np.array([rr[(proc, dist)][3] for rr in reps])}
            for ai, a in enumerate(spec.alphas):
                for di, (ratio, dl) in enumerate(zip(spec.delta_ratios, deltas)):
                    rate = float(dec[:, ai, di].mean())
                    rows.append({
                        "setting": spec.setting, "procedure": proc, "distinguisher": dist,
                        "n": spec.n, "K": spec.K if proc == "cross" else 1, "alpha": a,
                        "delta": float(dl), "delta_ratio": ratio, "reps": spec.reps,
                        "rejection_rate": rate, "mean_T": float(Ts.mean()),
                        "mean_sigma2": float(s2.mean()),
                        "mc_se": math.sqrt(rate * (1.0 - rate) / spec.reps), "seed": spec.seed,
                    })
    return ExperimentResult(experiment, spec, dstar, rows, time.perf_counter() - start, per_rep)


def run_type1(spec: ExperimentSpec) -> ExperimentResult:
    """Exact null (``theta_hat = theta*``), rejection rate at ``delta = 0``."""
    if any(r != 0.0 for r in spec.delta_ratios):
        raise InvalidDataset("type-1 experiments test delta = 0 only")
    return _run("type1", spec, alternative=False)


def run_power(spec: ExperimentSpec) -> ExperimentResult:
    """Alternative ``theta_hat = -theta*``; power at ``delta = ratio * delta*``."""
    return _run("power", spec, alternative=True)


def run_sparse(spec: ExperimentSpec) -> ExperimentResult:
    """Sparse alternative, cross-fit power per distinguisher."""
    if spec.setting != "sparse":
        raise InvalidDataset("run_sparse needs setting='sparse'")
    if len(spec.distinguishers) < 2:
        raise InvalidDataset("compare at least two distinguishers, e.g. lasso and logistic")
    return _run("sparse", spec, alternative=True)


def write_csv(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in result.rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def write_summary(result: ExperimentResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
