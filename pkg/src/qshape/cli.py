"""``qshape`` command line: run an experiment and write its report.

Exit status: 0 on success, 1 on a configuration error, 2 when the
verification suite has a failing check.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .harness import ConfigError, ExperimentConfig

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected comma-separated numbers")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qshape", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)

    def boxed_args(sp):
        sp.add_argument("--n", type=int, required=True, help="half-perimeter of the box")
        sp.add_argument("--rho", type=float, required=True)
        sp.add_argument("--c", type=float, required=True, help="pressure, q = exp(-c/n)")

    def common(sp, fmt):
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)

    sp = sub.add_parser("sample", help="draw one boxed diagram")
    boxed_args(sp)
    common(sp, "json")

    sp = sub.add_parser("limit-shape", help="sup-distance to the limit shape")
    boxed_args(sp)
    sp.add_argument("--samples", type=int, required=True)
    common(sp, "json")

    sp = sub.add_parser("fluctuations", help="fluctuation covariance vs the OU bridge")
    boxed_args(sp)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--grid", type=_grid, default=(0.25, 0.5, 0.75))
    sp.add_argument("--theory-c", type=float, help="compare against this c instead")
    common(sp, "csv")

    sp = sub.add_parser("unbounded", help="unbounded ensemble vs the stationary OU")
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--grid", type=_grid, default=harness.DEFAULT_UNBOUNDED_GRID)
    common(sp, "csv")

    sp = sub.add_parser("verify", help="closed-form identity suite")
    sp.add_argument("--profile", default="default", choices=harness.PROFILES)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    return p


def _config(args) -> ExperimentConfig:
    fields = {k: v for k, v in vars(args).items() if k not in ("format",) and v is not None}
    return ExperimentConfig(**fields)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config(args)
        runner = {
            "sample": harness.run_sample,
            "limit-shape": harness.run_limit_shape,
            "fluctuations": harness.run_fluctuations,
            "unbounded": harness.run_unbounded,
            "verify": lambda cfg: harness.run_verification_suite(cfg.profile),
        }[config.mode]
        report = runner(config)
    except ConfigError as exc:
        print(f"qshape: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MemoryError as exc:
        print(f"qshape: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.out:
        harness.emit_report(report, args.format, config.out)
    else:
        sys.stdout.write(harness.report_text(report, args.format))
    if config.mode == "verify" and not report.passed:
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
