"""
segmul command line.

    segmul mul --n 4 --t 2 --a 11 --b 13 [--trace]
    segmul metrics --n 8 --t 4 [--method exhaustive|mc|estimate] [--out FILE]
    segmul sweep --n 6 8 [--t-rule all|halved|explicit --t 2 3] [--both-fix]
    segmul pareto --in FILE
    segmul image-demo [--in FILE.pgm] --n 8 --t 4 [--no-fix] --out-prefix PATH

Exit codes: 0 success, 2 usage, 3 capability (ceiling, regime), 4 I/O.
"""

import argparse
import json
import logging
from pathlib import Path
import sys
from typing import List, Optional, Sequence

from . import __version__
from .analytic import DEFAULT_DEPTH
from .core import (
    MultiplierConfig,
    Operand,
    mul_accurate_sequential,
    mul_approx_sequential,
    render_trace,
    trace_accurate,
    trace_approx,
)
from .distribution import InputDistribution
from .errors import CeilingError, ConfigError, DistributionError, ImageFormatError, RegimeError
from .imagedemo import load_pgm, run_demo, synthetic_image
from .metrics import DEFAULT_EXHAUSTIVE_CEILING, MAX_EXHAUSTIVE_CEILING, error_distance
from .montecarlo import DEFAULT_CONFIDENCE, DEFAULT_SAMPLES, SamplingPlan
from .sweep import (
    METHODS,
    Evaluation,
    SweepSpec,
    TRule,
    evaluate,
    load_reports,
    pareto_front,
    reports_to_csv,
    reports_to_json,
    run_sweep,
)

logger = logging.getLogger("segmul")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPABILITY = 3
EXIT_IO = 4


class InputFileError(Exception):
    """A user-supplied input file could not be used."""


# ── Argument parsing ────────────────────────────────────────────────────────

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress (INFO)")
    p.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    p.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")
    return p


def _design(p: argparse.ArgumentParser, width_required: bool = True) -> None:
    p.add_argument("--n", type=int, required=width_required, default=None, help="operand width")
    p.add_argument("--t", type=int, default=None, help="splitting point (default n/2)")
    p.add_argument("--fix", action=argparse.BooleanOptionalAction, default=True,
                   help="fix-to-1 correction (default on)")
    p.add_argument("--accurate", action="store_true",
                   help="evaluate the unsegmented chain instead of the split one")


def _evaluation(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS, default=None,
                   help="default: exhaustive up to the ceiling, mc above")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    p.add_argument("--dist-a", metavar="FILE", help="multiplier distribution file")
    p.add_argument("--dist-b", metavar="FILE", help="multiplicand distribution file")
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="estimator conditioning depth")
    p.add_argument("--ceiling", type=int, default=None,
                   help=f"exhaustive ceiling (default {DEFAULT_EXHAUSTIVE_CEILING})")
    p.add_argument("--allow-large", action="store_true",
                   help=f"allow exhaustive runs up to n={MAX_EXHAUSTIVE_CEILING}")


def _output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="default: from --out suffix, else csv")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="segmul",
        description="Segmented-carry approximate sequential multiplier: simulation and error analysis.",
    )
    parser.add_argument("--version", action="version", version=f"segmul {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mul", parents=[common], help="multiply two operands")
    _design(p)
    p.add_argument("--a", type=int, required=True, help="multiplier")
    p.add_argument("--b", type=int, required=True, help="multiplicand")
    p.add_argument("--trace", action="store_true", help="print per-cycle register rows")
    p.set_defaults(func=cmd_mul)

    p = sub.add_parser("metrics", parents=[common], help="error metrics of one design")
    _design(p)
    _evaluation(p)
    _output(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", parents=[common], help="error metrics over an (n, t) grid")
    p.add_argument("--n", type=int, nargs="+", required=True, help="operand widths")
    p.add_argument("--t-rule", choices=[r.value for r in TRule], default=TRule.ALL.value)
    p.add_argument("--t", type=int, nargs="+", default=[], help="splitting points (explicit rule)")
    p.add_argument("--fix", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--both-fix", action="store_true", help="evaluate with and without fix-to-1")
    _evaluation(p)
    _output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pareto", parents=[common], help="non-dominated designs of a report table")
    p.add_argument("--in", dest="input", metavar="FILE", required=True, help="CSV or JSON reports")
    _output(p)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("image-demo", parents=[common], help="square an image on the multiplier")
    p.add_argument("--in", dest="input", metavar="FILE", help="8-bit binary PGM (synthetic if omitted)")
    _design(p, width_required=False)
    p.add_argument("--out-prefix", metavar="PATH", required=True)
    p.set_defaults(func=cmd_image_demo)

    return parser


# ── Helpers ─────────────────────────────────────────────────────────────────

def _config(args: argparse.Namespace) -> MultiplierConfig:
    n = args.n
    t = args.t if args.t is not None else MultiplierConfig.halved(n).t
    return MultiplierConfig(n=n, t=t, fix_to_1=args.fix, segmented=not args.accurate)


def _distribution(path: Optional[str]) -> Optional[InputDistribution]:
    if path is None:
        return None
    try:
        return InputDistribution.load(path)
    except (OSError, DistributionError) as e:
        raise InputFileError(str(e)) from e


def _plan(args: argparse.Namespace) -> SamplingPlan:
    return SamplingPlan(
        sample_count=args.samples,
        seed=args.seed,
        dist_a=_distribution(args.dist_a),
        dist_b=_distribution(args.dist_b),
        confidence_level=args.confidence,
    )


def _format(args: argparse.Namespace) -> str:
    if args.format:
        return args.format
    if args.out and Path(args.out).suffix.lower() == ".json":
        return "json"
    return "csv"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info("wrote %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _write_evaluations(evaluations: Sequence[Evaluation], args: argparse.Namespace) -> None:
    reports = [e.report for e in evaluations]
    intervals = [e.intervals for e in evaluations]
    if _format(args) == "json":
        _emit(reports_to_json(reports, intervals), args.out)
    else:
        _emit(reports_to_csv(reports, intervals), args.out)


def _default_method(args: argparse.Namespace, n: int) -> str:
    if args.method:
        return args.method
    ceiling = args.ceiling
    if ceiling is None:
        ceiling = MAX_EXHAUSTIVE_CEILING if args.allow_large else DEFAULT_EXHAUSTIVE_CEILING
    return "exhaustive" if n <= ceiling else "mc"


# ── Commands ────────────────────────────────────────────────────────────────

def cmd_mul(args: argparse.Namespace) -> int:
    cfg = _config(args)
    a, b = Operand(args.a, cfg.n), Operand(args.b, cfg.n)
    exact = mul_accurate_sequential(a, b)
    approx = mul_approx_sequential(a, b, cfg)
    print(f"accurate={exact.value} approx={approx.value}")
    print(f"accurate_bin={exact.to_binary()} approx_bin={approx.to_binary()}")
    print(f"ed={error_distance(exact, approx)}")
    if args.trace:
        print("accurate trace:")
        print(render_trace(trace_accurate(a, b)))
        print(f"approx trace ({cfg.label}):")
        print(render_trace(trace_approx(a, b, cfg), cfg))
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    cfg = _config(args)
    evaluation = evaluate(
        cfg,
        _default_method(args, cfg.n),
        _plan(args),
        ceiling=args.ceiling,
        allow_large=args.allow_large,
        depth=args.depth,
        workers=args.workers,
    )
    _write_evaluations([evaluation], args)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    fixes = (False, True) if args.both_fix else (args.fix,)
    spec = SweepSpec(
        widths=tuple(args.n),
        t_rule=TRule(args.t_rule),
        t_values=tuple(args.t),
        fix_settings=fixes,
        method=args.method,
        plan=_plan(args),
        ceiling=args.ceiling,
        allow_large=args.allow_large,
        depth=args.depth,
    )
    _write_evaluations(run_sweep(spec, args.workers), args)
    return EXIT_OK


def cmd_pareto(args: argparse.Namespace) -> int:
    try:
        reports = load_reports(args.input)
    except OSError as e:
        raise InputFileError(str(e)) from e
    except (ValueError, KeyError) as e:
        raise ConfigError(f"{args.input}: {e}") from e
    front = pareto_front(reports)
    chosen = {(p.config, p.metrics) for p in front}
    kept = [r for r in reports if (r.config, (r.er, float(r.mae), r.nmed)) in chosen]
    kept.sort(key=lambda r: (r.config.n, r.config.t, r.config.fix_to_1, r.config.segmented))
    logger.info("pareto: %d of %d designs are non-dominated", len(kept), len(reports))
    if _format(args) == "json":
        _emit(json.dumps([p.to_dict() for p in front], sort_keys=True, indent=2), args.out)
    else:
        _emit(reports_to_csv(kept), args.out)
    return EXIT_OK


def cmd_image_demo(args: argparse.Namespace) -> int:
    if args.n is None:
        args.n = 8
    cfg = _config(args)
    if args.input:
        img = load_pgm(args.input)
    else:
        logger.info("no input image, using the synthetic test pattern")
        img = synthetic_image()
    result = run_demo(img, cfg, args.out_prefix)
    print(json.dumps(result.to_dict(), sort_keys=True))
    return EXIT_OK


# ── Entry point ─────────────────────────────────────────────────────────────

def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if args.verbose:
        level = logging.INFO
    if args.quiet:
        level = logging.ERROR
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        return args.func(args)
    except (CeilingError, RegimeError) as e:
        logger.error("%s", e)
        return EXIT_CAPABILITY
    except (InputFileError, ImageFormatError, OSError) as e:
        logger.error("%s", e)
        return EXIT_IO
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
