"""Batch experiment driver.

Each subcommand reproduces one experiment family as a self-describing CSV:
a `#` metadata header (command, JSON parameter echo, seed, version) followed
by the table.  Fixed (config, seed) pairs produce byte-identical output.
Exit codes: 0 ok, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .changeplane import PenaltyConfig, fit_plane, fit_sparse_plane, xi_norm_from_law
from .criterion import CriterionSpec, curvature_margin
from .distributions import CovariateLaw, ErrorLaw
from .limitlaw import (
    StepLaw,
    log_survival_slope,
    quantile_table,
    simulate_cpp_samples,
    tail_profile,
)
from .parallel import ParallelConfig, rate_summary
from .stump import Dataset1D, fit_stump


class ConfigError(ValueError):
    pass


def _parse_law(text: str) -> ErrorLaw:
    text = text.strip().lower()
    if text in ("normal", "gauss", "gaussian"):
        return ErrorLaw.standard_normal()
    if text.startswith("t"):
        return ErrorLaw.standardized_t(float(text[1:]))
    if text.startswith("power"):
        return ErrorLaw.power_tail(float(text[5:]))
    raise ConfigError(f"unknown error law {text!r}")


def _header(command: str, params: dict) -> str:
    echo = json.dumps(params, sort_keys=True)
    return f"# command={command} version={__version__} params={echo}\n"


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(path: str | None, text: str, summary: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        _write_atomic(path, text)
    print(summary, file=sys.stderr)


def _load_xy(path: str):
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ConfigError("data file needs at least two columns (x..., y)")
    return data[:, :-1], data[:, -1]


def _cmd_quantiles(args) -> None:
    laws = [_parse_law(t) for t in args.laws.split(",")]
    reps = 1_000_000 if args.full_budget else args.reps
    params = dict(mu=args.mu, criterion=args.criterion, laws=args.laws,
                  reps=reps, seed=args.seed, intensity=args.intensity)
    table = quantile_table(args.mu, CriterionSpec.parse(args.criterion), laws,
                           replications=reps, seed=args.seed, intensity=args.intensity)
    text = _header("quantiles", params) + table.to_csv()
    _emit(args.output, text, f"quantiles: {len(laws)} laws, {reps} replications")


def _cmd_stump_fit(args) -> None:
    x, y = _load_xy(args.data)
    if x.shape[1] != 1:
        raise ConfigError("stump-fit expects one covariate column")
    fit = fit_stump(Dataset1D(x[:, 0], y), CriterionSpec.parse(args.criterion),
                    convention=args.convention)
    params = dict(data=args.data, criterion=args.criterion, convention=args.convention)
    buf = io.StringIO()
    buf.write(_header("stump-fit", params))
    buf.write("alpha_hat,beta_hat,d_hat,d_lo,d_hi,criterion_value\n")
    buf.write("%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n" % (
        fit.alpha_hat, fit.beta_hat, fit.d_hat,
        fit.d_interval[0], fit.d_interval[1], fit.criterion_value))
    _emit(args.output, buf.getvalue(), f"stump-fit: d_hat={fit.d_hat:.6g}")


def _cmd_cpp_tails(args) -> None:
    law = _parse_law(args.law)
    step = StepLaw(CriterionSpec.parse(args.criterion), args.delta, law)
    from .limitlaw import CPPConfig

    samples = simulate_cpp_samples(CPPConfig(step=step, intensity=args.intensity),
                                   args.reps, seed=args.seed)
    samples = np.abs(samples)
    qs = np.quantile(samples, np.linspace(0.5, 1.0 - 1.0 / args.reps, 40))
    grid = np.unique(qs[qs > 0])
    profile = tail_profile(samples, grid)
    slope = log_survival_slope(samples)
    params = dict(delta=args.delta, criterion=args.criterion, law=args.law,
                  reps=args.reps, seed=args.seed, intensity=args.intensity)
    buf = io.StringIO()
    buf.write(_header("cpp-tails", params))
    buf.write(f"# log10_survival_slope={slope:.6g}\n")
    buf.write("x,survival,half_width\n")
    for x0, p, h in profile:
        buf.write("%.10g,%.10g,%.10g\n" % (x0, p, h))
    _emit(args.output, buf.getvalue(), f"cpp-tails: slope={slope:.4g}")


def _cmd_parallel_rates(args) -> None:
    ms = [int(t) for t in args.grid_m.split(",")]
    law = ErrorLaw.power_tail(args.gamma)
    configs = [
        ParallelConfig(m=m, n=args.n, error_law=law, criterion=CriterionSpec.parse(c),
                       replications=args.reps, seed=args.seed)
        for c in ("l1", "l2")
        for m in ms
    ]
    rows = rate_summary(configs, seed=args.seed)
    params = dict(grid_m=args.grid_m, n=args.n, gamma=args.gamma,
                  reps=args.reps, seed=args.seed)
    buf = io.StringIO()
    buf.write(_header("parallel-rates", params))
    buf.write("criterion,m,n,gamma,norm_logm_median,norm_mgamma_median,replications,seed\n")
    for r in rows:
        buf.write("%s,%d,%d,%.10g,%.10g,%.10g,%d,%d\n" % (
            r["criterion"], r["m"], r["n"], r["gamma"],
            r["norm_logm_median"], r["norm_mgamma_median"],
            r["replications"], r["seed"]))
    _emit(args.output, buf.getvalue(), f"parallel-rates: {len(rows)} rows")


def _cmd_plane_fit(args) -> None:
    x, y = _load_xy(args.data)
    search = ("exact",) if args.search == "exact" else ("restarts", args.restarts)
    fit = fit_plane((x, y), CriterionSpec.parse(args.criterion), search=search, seed=args.seed)
    params = dict(data=args.data, criterion=args.criterion, search=args.search,
                  restarts=args.restarts, seed=args.seed)
    buf = io.StringIO()
    buf.write(_header("plane-fit", params))
    buf.write("alpha_hat,beta_hat,criterion_value," +
              ",".join(f"d{i}" for i in range(x.shape[1])) + "\n")
    buf.write("%.10g,%.10g,%.10g," % (fit.alpha_hat, fit.beta_hat, fit.criterion_value))
    buf.write(",".join("%.10g" % v for v in fit.d_hat) + "\n")
    _emit(args.output, buf.getvalue(),
          f"plane-fit: criterion_value={fit.criterion_value:.6g}")


def _cmd_sparse_plane(args) -> None:
    x, y = _load_xy(args.data)
    n, p = x.shape
    xi_norm = 0.0
    if args.penalty == "squared-error":
        xi_norm = xi_norm_from_law(_parse_law(args.noise_law), n, seed=args.seed)
    config = PenaltyConfig(kind=args.penalty, kappa=args.kappa,
                           delta_exp=args.delta_exp, xi_norm_estimate=xi_norm)
    fit = fit_sparse_plane((x, y), CriterionSpec.parse(args.criterion), config, seed=args.seed)
    params = dict(data=args.data, criterion=args.criterion, penalty=args.penalty,
                  kappa=args.kappa, delta_exp=args.delta_exp, seed=args.seed)
    buf = io.StringIO()
    buf.write(_header("sparse-plane", params))
    buf.write("selected_m,support,alpha_hat,beta_hat,criterion_value," +
              ",".join(f"d{i}" for i in range(p)) + "\n")
    buf.write("%d,%s,%.10g,%.10g,%.10g," % (
        fit.selected_m, ";".join(map(str, fit.support)),
        fit.alpha_hat, fit.beta_hat, fit.criterion_value))
    buf.write(",".join("%.10g" % v for v in fit.d_hat) + "\n")
    _emit(args.output, buf.getvalue(),
          f"sparse-plane: m={fit.selected_m} support={fit.support}")


def _cmd_curvature_check(args) -> None:
    law = _parse_law(args.law)
    spec = CriterionSpec.parse(args.criterion)
    check = curvature_margin(spec, args.mu, law, replications=args.reps,
                             seed=args.seed, l1_delta=args.l1_delta)
    params = dict(criterion=args.criterion, mu=args.mu, law=args.law,
                  reps=args.reps, seed=args.seed)
    buf = io.StringIO()
    buf.write(_header("curvature-check", params))
    buf.write("lhs,rhs,lhs_se,rhs_se\n")
    buf.write("%.10g,%.10g,%.10g,%.10g\n" % (check.lhs, check.rhs, check.lhs_se, check.rhs_se))
    _emit(args.output, buf.getvalue(),
          f"curvature-check: lhs={check.lhs:.6g} rhs={check.rhs:.6g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustcp",
        description="Robust change-point/change-plane experiments with CSV output.")
    parser.add_argument("--config", help="JSON file with {command, parameters}; "
                                         "overrides positional subcommand")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", "-o", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("quantiles", help="limiting-distribution quantile table")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--criterion", default="l1")
    p.add_argument("--laws", default="t3,normal", help="comma list, e.g. t3,normal,power2")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--full-budget", action="store_true", help="use 10^6 replications")
    p.add_argument("--intensity", type=float, default=None)
    common(p)

    p = sub.add_parser("stump-fit", help="fit a one-dimensional two-level model")
    p.add_argument("--data", required=True, help="CSV with columns x,y")
    p.add_argument("--criterion", default="l2")
    p.add_argument("--convention", default="mid", choices=("mid", "smallest"))
    common(p)

    p = sub.add_parser("cpp-tails", help="tail profile of the limiting minimizer")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--criterion", default="l2")
    p.add_argument("--law", default="power2")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--intensity", type=float, default=1.0)
    common(p)

    p = sub.add_parser("parallel-rates", help="max-deviation scaling across many series")
    p.add_argument("--grid-m", default="10,100,1000")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--reps", type=int, default=50)
    common(p)

    p = sub.add_parser("plane-fit", help="fit a change-plane through the origin")
    p.add_argument("--data", required=True, help="CSV with columns x1..xp,y")
    p.add_argument("--criterion", default="l1")
    p.add_argument("--search", default="restarts", choices=("exact", "restarts"))
    p.add_argument("--restarts", type=int, default=50)
    common(p)

    p = sub.add_parser("sparse-plane", help="penalized sparse change-plane fit")
    p.add_argument("--data", required=True, help="CSV with columns x1..xp,y")
    p.add_argument("--criterion", default="huber1")
    p.add_argument("--penalty", default="huber-family",
                   choices=("huber-family", "squared-error"))
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--delta-exp", type=float, default=0.5)
    p.add_argument("--noise-law", default="normal")
    common(p)

    p = sub.add_parser("curvature-check", help="excess-risk lower-bound margin")
    p.add_argument("--criterion", default="huber1")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--law", default="t3")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--l1-delta", type=float, default=None)
    common(p)

    return parser


_DISPATCH = {
    "quantiles": _cmd_quantiles,
    "stump-fit": _cmd_stump_fit,
    "cpp-tails": _cmd_cpp_tails,
    "parallel-rates": _cmd_parallel_rates,
    "plane-fit": _cmd_plane_fit,
    "sparse-plane": _cmd_sparse_plane,
    "curvature-check": _cmd_curvature_check,
}


def _apply_config_file(parser, argv):
    """Expand a --config JSON file into equivalent flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    try:
        path = argv[i + 1]
    except IndexError:
        raise ConfigError("--config needs a path")
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict) or "command" not in cfg:
        raise ConfigError("config file must be an object with a 'command' field")
    flags = [cfg["command"]]
    for key, value in sorted(cfg.get("parameters", {}).items()):
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                flags.append(flag)
        else:
            flags.extend([flag, str(value)])
    return flags + argv[:i] + argv[i + 2 :]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        handler = _DISPATCH[args.command]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        handler(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # simulation/runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
