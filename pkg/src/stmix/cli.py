"""Command-line interface.

Subcommands: simulate, fit, predict, variogram, summarize, cv.  Every
command that writes a delimited table renders a companion PNG figure next
to it.  Exit codes: 0 success, 2 usage/config error, 3 data validation
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from . import plots
from .data import load_dataset, load_targets, save_dataset
from .draws import load_draws, save_draws
from .effects import summarize_beta, summarize_effects
from .exceptions import ConfigError, DataValidationError, NumericalError
from .predict import cv_split, holdout_targets, predict_points, validation_metrics
from .sampler import run_chain
from .simulate import demo_curves, gp_covariate_fields, benchmark_model, simulate_dataset
from .variogram import empirical_variogram, ols_residuals

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _load_config(path):
    return cfg.parse_config(path) if path else {}


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_simulate(args):
    values = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = values.get("simulate.kind", "benchmark")
    if kind == "demo":
        variant = values.get("simulate.variant", "quadratic")
        curves = demo_curves(variant)
        table = out / f"demo_{variant}.csv"
        _write_csv(table, ["s", "s_prime", "covariance"], curves.rows())
        fig = plots.save_demo_plot(curves, out / f"demo_{variant}.png")
        print(f"wrote {table} and {fig}")
        return EXIT_OK
    if kind != "benchmark":
        raise ConfigError(f"simulate.kind must be benchmark or demo, got {kind!r}")

    spec = cfg.benchmark_spec_from(values)
    rng = np.random.default_rng(args.seed)
    coords = rng.uniform(0.0, spec.extent_km, size=(spec.n_sites, 2))
    coords -= coords.mean(axis=0)
    covs = gp_covariate_fields(
        coords, spec.n_times, len(spec.beta) - 1,
        spec.cov_space_range, spec.cov_time_range, rng,
    )
    model = benchmark_model(spec)
    data, truth = simulate_dataset(
        model, spec.beta, coords, covs,
        missing_rate=spec.missing_rate, seed=int(rng.integers(2**31)),
    )
    data_path = out / "data.csv"
    save_dataset(data, data_path)
    with open(out / "truth.json", "w") as fh:
        json.dump(
            {
                "beta": list(truth.beta),
                "sigma2": truth.sigma2,
                "alpha": truth.alpha.tolist(),
                "rho": list(truth.rho),
                "tau2_innovation": list(truth.tau2),
                "gamma": list(truth.gamma),
                "rho0": truth.rho0,
                "tau0_sq": truth.tau02,
                "seed": args.seed,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
    fig = plots.save_dataset_plot(data, out / "data.png")
    print(
        f"simulated {data.n_sites} sites x {data.n_times} days "
        f"({data.n_observed} observed cells); wrote {data_path}, truth.json, {fig}"
    )
    return EXIT_OK


def cmd_fit(args):
    values = _load_config(args.config)
    data = load_dataset(args.data)
    hyper = cfg.hyperpriors_from(values)
    config = cfg.sampler_config_from(
        values, n_iter=args.iters, burn_in=args.burnin, seed=args.seed
    )
    M = args.M if args.M is not None else cfg.n_components_from(values)
    draws, trace = run_chain(data, M, hyper, config)
    save_draws(args.out, draws)

    acc = draws.meta["acceptance"]
    print(f"chain finished: {draws.n_draws} retained draws -> {args.out}")
    print("acceptance rates (post burn-in):")
    for key in sorted(acc):
        print(f"  {key}: {acc[key]:.3f}")
    tail = trace.cov_trace[config.burn_in :]
    print("covariance probes (posterior mean over retained iterations):")
    for i, (h_s, h_t) in enumerate(trace.lags):
        print(f"  h_s={h_s:g} km, h_t={h_t:g} d: {tail[:, i].mean():.4f}")
    fig = plots.save_trace_plot(trace, str(args.out) + ".trace.png")
    print(f"wrote {fig}")
    return EXIT_OK


def cmd_predict(args):
    data = load_dataset(args.data)
    draws = load_draws(args.draws)
    targets, truth = load_targets(args.targets, data)
    result = predict_points(draws, data, targets, seed=args.seed,
                            max_draws=args.max_draws)
    rows = [
        (i, result.mean[i], result.median[i], result.variance[i],
         result.sd[i], result.lower[i], result.upper[i])
        for i in range(len(result))
    ]
    _write_csv(
        args.out,
        ["target", "mean", "median", "variance", "sd", "lower95", "upper95"],
        rows,
    )
    fig = plots.save_prediction_plot(
        result, truth if truth is not None and np.isfinite(truth).all() else None,
        str(args.out) + ".png",
    )
    print(f"wrote {args.out} and {fig}")
    if truth is not None and np.isfinite(truth).all():
        m = validation_metrics(truth, result)
        print(
            f"metrics over {m.n} targets: MSE={m.mse:.4f} MAD={m.mad:.4f} "
            f"AVE VAR={m.ave_var:.4f} MED SD={m.med_sd:.4f} COV={m.coverage:.3f}"
        )
    return EXIT_OK


def cmd_variogram(args):
    data = load_dataset(args.data)
    resid = ols_residuals(data)
    stratify = None
    if args.stratify:
        if args.stratify not in data.covariate_names[1:]:
            raise DataValidationError(
                f"stratify covariate {args.stratify!r} not in dataset "
                f"(have {data.covariate_names[1:]})"
            )
        k = data.covariate_names.index(args.stratify)
        stratify = data.X[:, :, k]
    if args.bins is not None:
        n_bins, width = args.bins
        centers = (np.arange(int(n_bins)) + 0.5) * width
        bins = (centers, width / 2.0)
    else:
        bins = None
    kinds = ["raw"] + (["standardized"] if args.standardize else [])
    results = []
    for kind in kinds:
        results.extend(
            empirical_variogram(resid, data.coords, bins=bins,
                                stratify_by=stratify, residual_kind=kind)
        )
    rows = [row for r in results for row in r.rows()]
    _write_csv(
        args.out,
        ["kind", "stratum", "h_km", "half_width_km", "msq_difference", "pairs"],
        rows,
    )
    raw_results = [r for r in results if r.kind == "raw"]
    fig = plots.save_variogram_plot(
        raw_results, str(args.out) + ".png",
        title=f"stratified by {args.stratify}" if args.stratify else None,
    )
    print(f"wrote {args.out} and {fig}")
    return EXIT_OK


def cmd_summarize(args):
    draws = load_draws(args.draws)
    lags = []
    for part in args.lags.split(";"):
        h_s, h_t = part.split(",")
        lags.append((float(h_s), int(h_t)))
    if (0.0, 0) not in lags:
        lags.insert(0, (0.0, 0))
    rows = summarize_effects(draws, lags=tuple(lags))
    _write_csv(
        args.out,
        ["covariate", "h_s_km", "h_t_days", "cov_ratio_mean", "cov_ratio_lower",
         "cov_ratio_upper", "cor_ratio_mean", "cor_ratio_lower",
         "cor_ratio_upper", "significant"],
        [
            (r.name, r.h_s, r.h_t, r.delta_mean, r.delta_lower, r.delta_upper,
             r.dtilde_mean, r.dtilde_lower, r.dtilde_upper, int(r.significant))
            for r in rows
        ],
    )
    beta_rows = summarize_beta(draws)
    _write_csv(
        str(args.out) + ".beta.csv",
        ["covariate", "mean", "lower", "upper", "scaled_mean", "scaled_lower",
         "scaled_upper"],
        [
            (r.name, r.mean, r.lower, r.upper, r.scaled_mean, r.scaled_lower,
             r.scaled_upper)
            for r in beta_rows
        ],
    )
    fig = plots.save_effects_plot(rows, str(args.out) + ".png")
    print(f"wrote {args.out}, {args.out}.beta.csv and {fig}")
    return EXIT_OK


def cmd_cv(args):
    values = _load_config(args.config)
    data = load_dataset(args.data)
    hyper = cfg.hyperpriors_from(values)
    m_list = [int(m) for m in args.m_list.split(",")]
    train_mask, test_mask = cv_split(data, args.holdout, seed=args.seed)
    train_data = data.with_mask(train_mask)
    targets, truth = holdout_targets(data, test_mask)
    table = []
    for M in m_list:
        config = cfg.sampler_config_from(
            values, n_iter=args.iters, burn_in=args.burnin, seed=args.seed
        )
        draws, _ = run_chain(train_data, M, hyper, config)
        result = predict_points(draws, train_data, targets, seed=args.seed,
                                max_draws=args.max_draws)
        m = validation_metrics(truth, result)
        table.append(
            {"M": M, "mse": m.mse, "mad": m.mad, "ave_var": m.ave_var,
             "med_sd": m.med_sd, "coverage": m.coverage, "n_test": m.n}
        )
        print(
            f"M={M}: MSE={m.mse:.4f} MAD={m.mad:.4f} AVE VAR={m.ave_var:.4f} "
            f"MED SD={m.med_sd:.4f} COV={m.coverage:.3f}"
        )
    _write_csv(
        args.out,
        ["M", "mse", "mad", "ave_var", "med_sd", "coverage", "n_test"],
        [tuple(row.values()) for row in table],
    )
    fig = plots.save_cv_plot(table, str(args.out) + ".png")
    print(f"wrote {args.out} and {fig}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stmix",
        description="Covariate-dependent nonstationary space-time covariance "
        "modeling: simulation, MCMC fitting, prediction, diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a dataset or demo curves")
    p.add_argument("--config", help="config file (simulate.* keys)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run an MCMC chain")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--burnin", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--M", type=int, default=None, help="override model.M")
    p.add_argument("--out", required=True, help="draws file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="posterior predictive at targets")
    p.add_argument("--draws", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-draws", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("variogram", help="empirical variogram of OLS residuals")
    p.add_argument("--data", required=True)
    p.add_argument("--stratify", help="covariate name for low/high strata")
    p.add_argument("--standardize", action="store_true",
                   help="also emit per-day standardized residual curves")
    p.add_argument("--bins", type=float, nargs=2, metavar=("N", "WIDTH_KM"),
                   default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_variogram)

    p = sub.add_parser("summarize", help="covariance-effect table from draws")
    p.add_argument("--draws", required=True)
    p.add_argument("--lags", default="100,0;0,2",
                   help='semicolon-separated "h_s,h_t" pairs')
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("cv", help="holdout comparison across component counts")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--holdout", type=float, default=0.05)
    p.add_argument("--M-list", dest="m_list", default="1,2,3")
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--burnin", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-draws", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DataValidationError as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
