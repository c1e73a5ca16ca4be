"""Command-line interface: ``knninfo {entropy,mi,experiment,rates}``.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 an experiment
cell hit max_trials without resolving its bias.
"""

import argparse
import dataclasses
import os
import sys
from importlib import resources

from . import report_io
from .estimators import EstimatorConfig, Truncation, kl_entropy, ksg_mi, truncated_kl_entropy
from .experiments import CellError, RateModel, load_config, run_experiment, theoretical_rates

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED = 0, 1, 2, 3
THREADS_ENV = "KNNINFO_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def bundled_configs():
    root = resources.files("knninfo") / "configs"
    return sorted(p.name.removesuffix(".toml") for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_config(name):
    """A filesystem path, or the name of a bundled config such as ``table2_row1``."""
    if os.path.exists(name):
        return name
    candidate = resources.files("knninfo") / "configs" / f"{name}.toml"
    if candidate.is_file():
        return str(candidate)
    raise FileNotFoundError(f"config {name!r} not found (bundled: {', '.join(bundled_configs())})")


def _default_threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def build_parser():
    parser = _Parser(prog="knninfo", description="kNN entropy and mutual information estimation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("entropy", help="differential entropy of a sample file (nats)")
    p.add_argument("--input", required=True, metavar="FILE", help="CSV, one sample per row")
    p.add_argument("--k", type=_positive_int, default=3, help="neighbour order (default 3)")
    p.add_argument("--truncate", action="store_true", help="cap kNN distances at A * N**-beta")
    p.add_argument("--A", type=_positive_float, default=None, help="truncation constant (default 1)")
    p.add_argument("--beta", type=_positive_float, default=None,
                   help="truncation exponent in (0, 1/d) (default 1/(d+2))")
    p.add_argument("--metric", choices=("l2", "linf"), default="l2", help="norm (default l2)")

    p = sub.add_parser("mi", help="KSG mutual information between two sample blocks (nats)")
    p.add_argument("--x", metavar="FILE", help="CSV of x samples")
    p.add_argument("--y", metavar="FILE", help="CSV of y samples, row-aligned with --x")
    p.add_argument("--input", metavar="FILE", help="single CSV holding x then y columns")
    p.add_argument("--dx", type=_positive_int, help="number of x columns in --input")
    p.add_argument("--k", type=_positive_int, default=3, help="neighbour order (default 3)")
    p.add_argument("--exclude-self", action="store_true",
                   help="marginal counts exclude the sample itself")

    p = sub.add_parser("experiment", help="run a convergence-rate experiment")
    p.add_argument("--config", metavar="FILE",
                   help="TOML experiment config, or a bundled name such as table2_row1")
    p.add_argument("--out", metavar="DIR", help="output directory for the report files")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--max-trials", type=_positive_int, default=None,
                   help="override the config's max_trials")
    p.add_argument("--list", action="store_true", help="list bundled configs and exit")
    p.add_argument("--quiet", action="store_true", help="no per-cell progress lines")

    p = sub.add_parser("rates", help="theoretical bias/variance decay exponents")
    p.add_argument("--estimator", choices=("kl", "ksg"), required=True)
    p.add_argument("--dx", type=_positive_int, required=True)
    p.add_argument("--dy", type=_positive_int, default=None, help="required for ksg")
    tail = p.add_mutually_exclusive_group()
    tail.add_argument("--tau", type=_positive_float, default=None, help="tail exponent in (0, 1]")
    tail.add_argument("--alpha", type=_positive_float, default=None,
                      help="finite moment order; tau approaches alpha/(alpha + d)")
    return parser


def _print_dict(d, out):
    for key, value in d.items():
        print(f"  {key}: {value!r}" if isinstance(value, float) else f"  {key}: {value}", file=out)


def cmd_entropy(args, out):
    if not args.truncate and (args.A is not None or args.beta is not None):
        raise UsageError("--A and --beta require --truncate")
    loaded = report_io.load_samples(args.input)
    if loaded.duplicates:
        print(f"warning: {len(loaded.duplicates)} duplicate rows (first: {loaded.duplicates[:10]})",
              file=sys.stderr)
    if args.truncate:
        trunc = Truncation(args.A if args.A is not None else 1.0, args.beta)
        result = truncated_kl_entropy(loaded.samples, EstimatorConfig(args.k, trunc, args.metric))
    else:
        result = kl_entropy(loaded.samples, EstimatorConfig(args.k, None, args.metric))
    print(f"entropy: {result.value!r} nats", file=out)
    _print_dict(result.config, out)
    _print_dict(result.diagnostics, out)


def cmd_mi(args, out):
    two = args.x is not None or args.y is not None
    one = args.input is not None or args.dx is not None
    if two == one:
        raise UsageError("give either --x and --y, or --input with --dx")
    if two and (args.x is None or args.y is None):
        raise UsageError("--x and --y must be given together")
    if one and (args.input is None or args.dx is None):
        raise UsageError("--input requires --dx")
    x, y = report_io.load_pair(args.input, args.dx, args.x, args.y)
    result = ksg_mi(x, y, k=args.k, count_self=not args.exclude_self)
    print(f"mutual information: {result.value!r} nats", file=out)
    _print_dict(result.config, out)
    _print_dict(result.diagnostics, out)


def format_rates_table(report):
    spec = report.spec
    dist = spec.distribution
    fit, theory = report.fitted, report.theoretical
    dims = (f"d_x={dist.d_x} d_y={dist.d_y}" if spec.estimator == "ksg" else f"d_x={dist.d}")
    lines = [
        f"{spec.name or 'experiment'}: {spec.estimator}, {dims}, k={spec.k}",
        f"{'':10}{'empirical':>12}{'theoretical':>14}   sample size",
        f"{'bias':10}{fit.bias_slope:12.2f}{float(theory.bias_slope):14.2f}   "
        f"{fit.bias_range[0]}-{fit.bias_range[1]}",
        f"{'variance':10}{fit.variance_slope:12.2f}{float(theory.variance_slope):14.2f}   "
        f"{fit.variance_range[0]}-{fit.variance_range[1]}",
    ]
    return "\n".join(lines)


def cmd_experiment(args, out):
    if args.list:
        for name in bundled_configs():
            print(name, file=out)
        return EXIT_OK
    if args.config is None or args.out is None:
        raise UsageError("--config and --out are required")
    threads = args.threads if args.threads is not None else _default_threads()
    spec = load_config(resolve_config(args.config))
    if args.max_trials is not None:
        spec = dataclasses.replace(spec, max_trials=args.max_trials,
                                   min_trials=min(spec.min_trials, args.max_trials))

    def progress(row):
        if not args.quiet:
            flag = "" if row.converged else "  (not converged)"
            print(f"n={row.n:<8d} trials={row.trials:<8d} bias={row.bias:+.6g} "
                  f"variance={row.variance:.6g}{flag}", file=out, flush=True)

    report = run_experiment(spec, threads=threads, progress=progress)
    paths = report_io.write_report(report, args.out)
    print(format_rates_table(report), file=out)
    print(f"wrote {', '.join(paths.values())}", file=out)
    if not report.all_converged:
        bad = [r.n for r in report.rows if not r.converged]
        print(f"warning: cells did not reach the uncertainty target: n={bad}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_rates(args, out):
    if args.estimator == "ksg" and args.dy is None:
        raise UsageError("--dy is required for ksg")
    if args.estimator == "kl" and args.dy is not None:
        raise UsageError("--dy only applies to ksg")
    tau = 1.0 if args.tau is None else args.tau
    if not 0 < tau <= 1:
        raise UsageError(f"--tau must lie in (0, 1], got {tau}")
    model = RateModel(args.estimator, args.dx, args.dy or 0, tau=tau, alpha=args.alpha)
    rates = theoretical_rates(model)
    rel = "<" if rates.supremum else "="
    print(f"tau {rel} {rates.tau} ({float(rates.tau):.4f})", file=out)
    qualifier = " (approached from below)" if rates.supremum else ""
    print(f"bias slope: {float(rates.bias_slope):.2f}  [{rates.bias_slope}]{qualifier}", file=out)
    print(f"variance slope: {float(rates.variance_slope):.2f}  [{rates.variance_slope}]", file=out)


COMMANDS = {"entropy": cmd_entropy, "mi": cmd_mi, "experiment": cmd_experiment, "rates": cmd_rates}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"knninfo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, CellError) as exc:
        print(f"knninfo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
