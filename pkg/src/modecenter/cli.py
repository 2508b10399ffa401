"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import data as _data
from . import kernels
from . import sim as _sim
from . import testbeds as _testbeds
from .errors import ConfigurationError, DomainError, ModeCenterError, NumericError
from .estimators import (
    IrwConfig,
    TrimConfig,
    apply_estimator,
    kme_tuned,
    parse_estimator,
    sample_mean,
    sample_median,
    trimmed_mean,
)
from .pilot import PilotConfig
from .tuner import TunerConfig
from .variance import variance_curve

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- input ------------------------------------------------------------------------

def read_values(path, column=None):
    """Read floats from a file (``-`` for stdin).

    Plain files hold one value per line; with ``column`` the file is CSV
    with a header row.  Blank lines and lines starting with ``#`` are skipped.

    Raises
    ------
    DataError
        Naming the offending line.
    """
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1)
             if ln.strip() and not ln.lstrip().startswith("#")]
    values = []
    if column is None:
        for i, ln in lines:
            try:
                values.append(float(ln.strip()))
            except ValueError:
                raise DataError(f"{path}, line {i}: not a number: {ln.strip()!r}") from None
    else:
        if not lines:
            raise DataError(f"{path}: no header row")
        reader = csv.reader(io.StringIO("\n".join(ln for _, ln in lines)))
        header = next(reader)
        if column not in header:
            raise DataError(f"{path}: no column named {column!r}")
        idx = header.index(column)
        for (i, _), row in zip(lines[1:], reader):
            try:
                values.append(float(row[idx]))
            except (ValueError, IndexError):
                raise DataError(f"{path}, line {i}: bad value in column {column!r}") from None
    if not values:
        raise DataError(f"{path}: no data")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: non-finite values")
    return arr


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _print_json(obj):
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _tuner_cfg(args):
    return TunerConfig(
        beta0=args.beta0, h0=args.h0, tol=args.tuner_tol,
        max_evals=args.tuner_max_evals, multistart=args.tuner_multistart,
    )


def _pilot_cfg(args):
    return PilotConfig(grid_size=args.pilot_grid, bandwidth=args.pilot_bandwidth)


# -- commands -----------------------------------------------------------------------

def cmd_estimate(args):
    x = read_values(args.input, args.column)
    try:
        if args.estimator in ("trimmed", "winsorized"):
            if args.adaptive_alpha == (args.alpha is not None):
                raise UsageError(f"{args.estimator} needs exactly one of --alpha or --adaptive-alpha")
            name = f"{args.estimator}-adaptive" if args.adaptive_alpha else f"{args.estimator}-{args.alpha}"
        elif args.alpha is not None or args.adaptive_alpha:
            raise UsageError("--alpha and --adaptive-alpha apply to trimmed and winsorized only")
        else:
            name = args.estimator
        spec = parse_estimator(name)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from exc

    irw_cfg = IrwConfig(epsilon=args.epsilon, max_iter=args.max_iter, init=args.init)
    out = {
        "estimate": None, "estimator": spec.label, "beta": None, "h": None,
        "iterations": None, "converged": None, "alpha": None,
        "params": None, "diagnostics": {"n": int(x.size)},
    }
    if spec.name == "kme":
        est, params, trace = kme_tuned(x, _pilot_cfg(args), _tuner_cfg(args), irw_cfg)
        out.update(estimate=est, beta=params.beta, h=params.h, iterations=trace.iterations,
                   converged=trace.converged, params=params.as_dict())
        out["diagnostics"]["isolated"] = trace.isolated
        if args.trace:
            out["trace"] = trace.as_dict()
    else:
        est, extras = apply_estimator(spec, x, seed=args.seed, B=args.bootstrap_b, irw_cfg=irw_cfg)
        out.update(estimate=est, alpha=extras.get("alpha"))
    out["estimate"] = _json_float(out["estimate"])
    _print_json(out)
    return EXIT_OK


def _parse_kernel(args):
    if args.kernel == "bump":
        if args.beta is None:
            raise UsageError("--beta is required with the bump kernel")
        return kernels.KernelShape.bump(args.beta)
    if args.beta is not None:
        raise UsageError("--beta applies to the bump kernel only")
    return kernels.KernelShape(args.kernel)


def cmd_variance_curve(args):
    shape = _parse_kernel(args)
    if (args.testbed is None) == (args.data is None):
        raise UsageError("give exactly one of --testbed or --data")
    if args.testbed is not None:
        if args.testbed not in _testbeds.TESTBED_IDS:
            raise UsageError(f"unknown test-bed {args.testbed!r}; valid ids: {', '.join(_testbeds.TESTBED_IDS)}")
        f0 = args.testbed
    else:
        from .pilot import build_pilot

        x = read_values(args.data, args.column)
        f0 = build_pilot(x, grid_size=args.pilot_grid, g=args.pilot_bandwidth)
    if not 0 < args.h_min < args.h_max:
        raise UsageError("need 0 < --h-min < --h-max")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    curve = variance_curve(f0, shape, args.h_min, args.h_max, args.points, not args.linear)

    def cell(v):
        return "" if v is None or not math.isfinite(v) else repr(float(v))

    fh = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(fh)
        w.writerow(["h", "V", "sigma2_ref", "median_ref"])
        for h, v in curve.rows():
            w.writerow([repr(h), cell(v), cell(curve.sigma2_ref), cell(curve.median_ref)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_simulate(args):
    tbs = _split(args.testbeds)
    for tb in tbs:
        if tb not in _testbeds.TESTBED_IDS:
            raise UsageError(f"unknown test-bed {tb!r}; valid ids: {', '.join(_testbeds.TESTBED_IDS)}")
    try:
        sizes = [int(s) for s in _split(args.sizes)]
        cfg = _sim.SimConfig(
            testbeds=tbs, sample_sizes=sizes, replications=args.reps,
            estimators=_split(args.estimators), master_seed=args.seed,
            parallelism=args.parallelism, bootstrap_b=args.bootstrap_b,
        )
        if args.full_scale:
            cfg = replace(cfg, sample_sizes=(100, 1000, 10000), replications=1000)
    except (ValueError, ConfigurationError) as exc:
        raise UsageError(str(exc)) from exc
    table = _sim.run(cfg)
    if args.out in (None, "-"):
        if args.format == "json":
            _print_json(table.as_dict())
        else:
            _sim.write_csv(table, sys.stdout)
    else:
        _sim.emit(table, args.format, args.out)
    return EXIT_OK


def case_study_report(tuner_cfg=None, pilot_cfg=None, irw_cfg=None):
    """Run the full pipeline on the Newcomb data and tabulate the final weights."""
    x = _data.newcomb()
    est, params, trace = kme_tuned(x, pilot_cfg, tuner_cfg, irw_cfg)
    w = trace.weights_final
    profile = kernels.normalize(kernels.KernelShape.bump(params.beta))
    rows = []
    for value, count in _data.NEWCOMB_COUNTS:
        idx = np.flatnonzero(x == value)
        unit = float(w[idx[0]])
        density = float(np.mean(profile.eval((value - x) / params.h)) / params.h)
        rows.append({"value": value, "count": count, "unit_weight": unit,
                     "total_weight": unit * count, "density": density})
    return {
        "estimate": est,
        "beta": params.beta,
        "h": params.h,
        "achieved_variance": params.achieved_variance,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "trimmed_mean": trimmed_mean(x, TrimConfig(2 / 66)),
        "mean": sample_mean(x),
        "median": sample_median(x),
        "rows": rows,
    }


def cmd_case_study(args):
    report = case_study_report(_tuner_cfg(args), _pilot_cfg(args))
    if args.format == "json":
        _print_json(report)
        return EXIT_OK
    print(f"{'value':>6} {'count':>5} {'unit weight':>12} {'weight':>10} {'density':>10}")
    for r in report["rows"]:
        print(f"{r['value']:>6d} {r['count']:>5d} {r['unit_weight']:>12.4g} "
              f"{r['total_weight']:>10.4g} {r['density']:>10.4g}")
    print(f"estimate      {report['estimate']:.4f}")
    print(f"beta, h       {report['beta']:.6g}, {report['h']:.6g}")
    print(f"trimmed mean  {report['trimmed_mean']:.4f}  (alpha = 2/66)")
    print(f"mean, median  {report['mean']:.4f}, {report['median']:.4g}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _add_tuning_flags(p):
    g = p.add_argument_group("tuning")
    g.add_argument("--beta0", type=float, default=1.0, help="starting kernel shape")
    g.add_argument("--h0", type=float, default=None, help="starting bandwidth (default MADN)")
    g.add_argument("--tuner-tol", type=float, default=1e-6)
    g.add_argument("--tuner-max-evals", type=int, default=400)
    g.add_argument("--tuner-multistart", action="store_true")
    g.add_argument("--pilot-bandwidth", type=float, default=None)
    g.add_argument("--pilot-grid", type=int, default=4096)


def build_parser():
    parser = _Parser(prog="modecenter", description="Center-of-symmetry estimation by kernel mode estimation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="estimate the center of a sample")
    p.add_argument("input", help="data file, one value per line ('-' for stdin)")
    p.add_argument("--column", help="read this column of a CSV file")
    p.add_argument("--estimator", default="kme",
                   choices=["kme", "mean", "median", "trimmed", "winsorized", "tukey", "andrews"])
    p.add_argument("--alpha", type=float, help="trimming level for trimmed/winsorized")
    p.add_argument("--adaptive-alpha", action="store_true", help="choose alpha by bootstrap")
    p.add_argument("--bootstrap-b", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--init", choices=["median", "densest_point"], default="median")
    p.add_argument("--trace", action="store_true", help="include the iteration trace")
    _add_tuning_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("variance-curve", help="asymptotic variance over a bandwidth grid (CSV)")
    p.add_argument("--testbed")
    p.add_argument("--data", help="use the pilot density of this sample")
    p.add_argument("--column")
    p.add_argument("--kernel", default="bump", choices=["bump", "epanechnikov", "triweight", "raised_cosine"])
    p.add_argument("--beta", type=float)
    p.add_argument("--h-min", type=float, default=0.5)
    p.add_argument("--h-max", type=float, default=1000.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--linear", action="store_true", help="arithmetic rather than geometric grid")
    p.add_argument("--pilot-bandwidth", type=float, default=None)
    p.add_argument("--pilot-grid", type=int, default=4096)
    p.add_argument("--out")
    p.set_defaults(func=cmd_variance_curve)

    p = sub.add_parser("simulate", help="Monte Carlo comparison of estimators")
    p.add_argument("--testbeds", default=",".join(_sim.SimConfig.testbeds))
    p.add_argument("--sizes", default="100,1000")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--estimators", default=",".join(_sim.DEFAULT_ESTIMATORS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--bootstrap-b", type=int, default=200)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--full-scale", action="store_true", help="n in {100, 1000, 10000} with 1000 replications")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("case-study", help="full pipeline on the bundled Newcomb data")
    p.add_argument("--format", choices=["json", "text"], default="json")
    _add_tuning_flags(p)
    p.set_defaults(func=cmd_case_study)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"modecenter: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"modecenter: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"modecenter: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, DomainError) as exc:
        print(f"modecenter: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModeCenterError as exc:
        print(f"modecenter: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"modecenter: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
