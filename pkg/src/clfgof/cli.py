"""Command-line front end.

    clfgof test --data holdout.csv --preds preds.csv --delta 0.1 --method cross
    clfgof simulate --setting logistic --experiment type1 --reps 200 --out-dir out/
    clfgof diagnose --check sandwich --alternative

Exit codes: 0 success (rejection lives in the report), 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import HoldoutDataset, augment_with_probabilities, child_seed, validate_simplex_rows
from .errors import BadHeader, ClfGofError, NumericalError, RowCountMismatch, ValidationError
from .procedure import TestConfig, make_procedure, run_test

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------------------
# Input files
# ---------------------------------------------------------------------------


def _read_table(path, kind):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise BadHeader(f"{kind} file {path} is empty (header is mandatory)")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    try:
        values = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise BadHeader(f"{kind} file {path}: non-numeric entry ({exc})") from None
    if body and any(len(r) != len(header) for r in body):
        raise BadHeader(f"{kind} file {path}: ragged rows (header has {len(header)} columns)")
    return header, values.reshape(len(body), len(header))


def load_holdout_and_preds(data_path, preds_path) -> tuple[HoldoutDataset, np.ndarray]:
    dh, dv = _read_table(data_path, "data")
    d = len(dh) - 1
    if d < 1 or dh != [f"x{j}" for j in range(1, d + 1)] + ["y"]:
        raise BadHeader(f"data header must be x1,...,xd,y; got {','.join(dh)}")
    ph, pv = _read_table(preds_path, "predictions")
    M = len(ph)
    if M < 2 or ph != [f"p{l}" for l in range(M)]:
        raise BadHeader(f"predictions header must be p0,...,p(M-1) with M >= 2; got {','.join(ph)}")
    if dv.shape[0] != pv.shape[0]:
        raise RowCountMismatch(f"data has {dv.shape[0]} rows but predictions have {pv.shape[0]} rows")
    y = dv[:, -1]
    if not np.all(y == np.round(y)):
        raise BadHeader("labels in column y must be integers")
    holdout = HoldoutDataset(dv[:, :-1], y.astype(np.int64), M)
    return holdout, validate_simplex_rows(pv, M)


def _dump(obj, out) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_test(args) -> int:
    holdout, probs = load_holdout_and_preds(args.data, args.preds)
    cfg = TestConfig(alpha=args.alpha, delta=args.delta, method=args.method, K=args.k,
                     split_fraction=args.split_frac, seed=args.seed, distinguisher=args.distinguisher,
                     lasso_c=args.lasso_c)
    aug = augment_with_probabilities(holdout, probs, child_seed(args.seed, 100))
    report = run_test(aug, cfg).to_dict()
    if args.diagnostics:
        from .variance import EmpiricalTripletSource, perturb_one_stability

        n_fit = max(4, int(round(len(aug) * (1 - 1 / cfg.K if cfg.method == "cross" else cfg.split_fraction))))
        st = perturb_one_stability(cfg.procedure(), EmpiricalTripletSource(aug), n_fit,
                                   reps=args.stability_reps, probe_count=50, seed=child_seed(args.seed, 101))
        report["diagnostics"] = {
            "stability": {"n": st.n, "p50": st.quantiles[0], "p90": st.quantiles[1],
                          "p99": st.quantiles[2], "scaled_p99": st.scaled_p99},
        }
    report["input"] = {"n": holdout.n, "d": holdout.d, "M": holdout.label_count,
                       "distinguisher": cfg.distinguisher, "seed": cfg.seed}
    _dump(report, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .sim import DEFAULT_RATIOS, ExperimentSpec, run_power, run_sparse, run_type1, write_csv, write_summary

    if args.experiment == "type1":
        ratios = (0.0,)
        distinguishers = tuple(args.distinguishers or ("logistic",))
    elif args.experiment == "power":
        ratios = tuple(args.delta_ratios or DEFAULT_RATIOS)
        distinguishers = tuple(args.distinguishers or ("logistic",))
    else:
        ratios = tuple(args.delta_ratios or DEFAULT_RATIOS)
        distinguishers = tuple(args.distinguishers or ("lasso", "logistic"))
    procedures = tuple(args.procedures or (("cross",) if args.experiment == "sparse" else ("split", "cross")))
    spec = ExperimentSpec(setting=args.setting, n=args.n, d=args.d, reps=args.reps,
                          alphas=tuple(args.alphas or (0.05,)), delta_ratios=ratios,
                          theta_seed=args.theta_seed, distinguishers=distinguishers, procedures=procedures,
                          K=args.k, seed=args.seed, lasso_c=args.lasso_c, oracle_draws=args.oracle_draws,
                          delta_star=args.delta_star, threads=args.threads)
    runner = {"type1": run_type1, "power": run_power, "sparse": run_sparse}[args.experiment]
    result = runner(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{args.experiment}_{args.setting}_n{args.n}"
    write_csv(result, out / f"{stem}.csv")
    write_summary(result, out / f"{stem}.json")
    print(f"wrote {out / stem}.csv ({len(result.rows)} rows) in {result.runtime:.1f}s", file=sys.stderr)
    return EXIT_OK


def _model_from_args(args):
    from .oracle import logistic_setting

    return logistic_setting(args.d, args.theta_seed, alternative=args.alternative, sparse=args.setting == "sparse")


def cmd_diagnose(args) -> int:
    from . import oracle, variance

    procedure = make_procedure(args.procedure)
    if args.check == "stability":
        if args.data:
            holdout, probs = load_holdout_and_preds(args.data, args.preds)
            source = variance.EmpiricalTripletSource(
                augment_with_probabilities(holdout, probs, child_seed(args.seed, 100)))
        else:
            source = _model_from_args(args)
        st = variance.perturb_one_stability(procedure, source, args.n, args.reps, args.probes, args.seed)
        out = {"check": "stability", "n": st.n, "reps": args.reps, "probes": args.probes,
               "quantiles": {"p50": st.quantiles[0], "p90": st.quantiles[1], "p99": st.quantiles[2]},
               "scaled_p99": st.scaled_p99, "max_delta": float(st.deltas.max())}
    elif args.check == "hajek":
        model = _model_from_args(args)
        reports = [variance.hajek_oracle_check(model, procedure, args.n, args.n_eval or args.n,
                                               child_seed(args.seed, r), draws=args.draws)
                   for r in range(args.reps)]
        scaled = np.array([h.scaled for h in reports])
        out = {"check": "hajek", "n_train": args.n, "n_eval": args.n_eval or args.n, "reps": args.reps,
               "residual_median": float(np.median([h.residual for h in reports])),
               "scaled_median": float(np.median(scaled)), "scaled_p90": float(np.quantile(scaled, 0.9))}
    elif args.check == "variance-oracle":
        from .data import split_indices
        from .ranksum import empirical_projections, score_pair

        model = _model_from_args(args)
        aug = model.draw_triplets(args.n, child_seed(args.seed, 0))
        fit_idx, eval_idx = split_indices(args.n, 0.5, child_seed(args.seed, 1))
        g = procedure.fit(aug.subset(fit_idx), child_seed(args.seed, 2))
        est = variance.sigma_split(empirical_projections(score_pair(aug.subset(eval_idx), g)))
        pop = oracle.population_variance(model, "split", g=g, outer=args.outer, draws=args.draws,
                                         seed=child_seed(args.seed, 3))
        out = {"check": "variance-oracle", "kind": "split", "n": args.n, "sigma2_hat": est.sigma2_hat,
               "sigma2_oracle": pop, "ratio": est.sigma2_hat / pop if pop > 0 else math.inf}
    else:
        model = _model_from_args(args)
        sw = oracle.check_tv_auc_sandwich(model, args.draws, args.seed)
        out = {"check": "sandwich", "holds": sw.holds, "rho": sw.rho, "tv": sw.tv,
               "lower_margin": sw.lower_margin, "upper_margin": sw.upper_margin, "slack": sw.slack}
    out["seed"] = args.seed
    _dump(out, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _unit(v):
    x = float(v)
    if not 0.0 < x < 1.0:
        raise argparse.ArgumentTypeError(f"{v} is not in (0, 1)")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clfgof", description="Tolerance goodness-of-fit tests for probabilistic classifiers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test a classifier's predictions on holdout data")
    t.add_argument("--data", required=True, help="CSV with header x1,...,xd,y")
    t.add_argument("--preds", required=True, help="CSV with header p0,...,p(M-1), row-aligned with --data")
    t.add_argument("--alpha", type=_unit, default=0.05)
    t.add_argument("--delta", type=float, default=0.0)
    t.add_argument("--method", choices=("split", "cross"), default="cross")
    t.add_argument("--k", type=int, default=5)
    t.add_argument("--split-frac", type=_unit, default=0.5, help="fraction of rows used to fit the distinguisher")
    t.add_argument("--distinguisher", choices=("logistic", "lasso"), default="logistic")
    t.add_argument("--lasso-c", type=float, default=0.5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default=None, help="report path (default stdout)")
    t.add_argument("--diagnostics", action="store_true", help="add a resampling stability diagnostic")
    t.add_argument("--stability-reps", type=int, default=5)
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="run a simulation experiment")
    s.add_argument("--setting", choices=("logistic", "sparse"), default="logistic")
    s.add_argument("--experiment", choices=("type1", "power", "sparse"), default="type1")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--d", type=int, default=200)
    s.add_argument("--reps", type=int, default=200)
    s.add_argument("--alphas", type=_unit, nargs="+")
    s.add_argument("--delta-ratios", type=float, nargs="+", help="tolerances as multiples of delta*")
    s.add_argument("--distinguishers", choices=("logistic", "lasso", "constant"), nargs="+")
    s.add_argument("--procedures", choices=("split", "cross"), nargs="+")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--lasso-c", type=float, default=0.5)
    s.add_argument("--theta-seed", type=int, default=0)
    s.add_argument("--oracle-draws", type=int, default=1_000_000)
    s.add_argument("--delta-star", type=float, default=None, help="skip the separation oracle")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    s.add_argument("--out-dir", default="sim_out")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("diagnose", help="stability, Hajek, variance-oracle and sandwich checks")
    g.add_argument("--check", choices=("stability", "hajek", "variance-oracle", "sandwich"), required=True)
    g.add_argument("--setting", choices=("logistic", "sparse"), default="logistic")
    g.add_argument("--alternative", action="store_true", help="use theta_hat = -theta* instead of the exact null")
    g.add_argument("--d", type=int, default=200)
    g.add_argument("--theta-seed", type=int, default=0)
    g.add_argument("--procedure", choices=("logistic", "lasso", "constant"), default="logistic")
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--n-eval", type=int, default=None)
    g.add_argument("--reps", type=int, default=10)
    g.add_argument("--probes", type=int, default=100)
    g.add_argument("--draws", type=int, default=100_000)
    g.add_argument("--outer", type=int, default=2000)
    g.add_argument("--data", default=None, help="resample this holdout for the stability check")
    g.add_argument("--preds", default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "data", None) and args.command == "diagnose" and not args.preds:
        parser.error("--data needs --preds")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
