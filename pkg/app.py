"""
Skew-Moment Uncertainty Bounds - Command-line entry point

Subcommands:
    compute   bound ladder for one instance file
    moments   closed-form and oracle skew moments side by side
    random    write a seeded random instance
    verify    run the property battery on seeded random instances
    geometry  level-surface angle for an instance with an estimator
"""
import argparse
import logging
import sys
from pathlib import Path

from components.console import error_line, format_geometry, format_summary
from components.report import (
    build_report,
    check_finite,
    geometry_to_dict,
    moments_frame,
    record_to_dict,
    render_csv,
    render_json,
    render_moments,
)
from processors.bound_ladder import estimation_angle
from processors.exceptions import DegenerateInstance, ValidationError
from processors.verifier import PropertyVerifier
from utils.file_handler import FileHandler, dump_json
from utils.helpers import parse_int_list
from utils.random_instances import random_instance
from utils.settings_manager import CONDITIONING_DEPTH, Settings, SettingsManager

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3

EPILOG = """exit codes:
  0  success
  1  a verified property failed (verify)
  2  invalid input, file or flag
  3  degenerate instance ([H, rho] = 0, saturated frame, degenerate surface)
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewbound",
        description="Higher-order uncertainty bounds from quantum skew moments.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--settings", type=Path, help="JSON file with tolerance overrides")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    compute = sub.add_parser("compute", help="bound ladder for an instance", epilog=EPILOG,
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    compute.add_argument("instance", type=Path)
    compute.add_argument("--order", type=int, help="odd truncation order K <= 7")
    compute.add_argument("--format", choices=["json", "csv"], default="json")
    compute.add_argument("--no-preshift", action="store_true", help="use H as given for the moment powers")
    compute.add_argument("--out", type=Path)

    moments = sub.add_parser("moments", help="skew moment table", epilog=EPILOG,
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    moments.add_argument("instance", type=Path)
    moments.add_argument("--max-order", type=int, help="even order 2M <= 16")
    moments.add_argument("--format", choices=["json", "csv"], default="json")
    moments.add_argument("--out", type=Path)

    rand = sub.add_parser("random", help="seeded random instance", epilog=EPILOG,
                          formatter_class=argparse.RawDescriptionHelpFormatter)
    rand.add_argument("--dim", type=int, required=True)
    rand.add_argument("--rank", type=int, help="state rank (defaults to dim)")
    rand.add_argument("--seed", type=int, required=True)
    rand.add_argument("--estimator", action="store_true", help="also draw a random estimator T")
    rand.add_argument("--label")
    rand.add_argument("--out", type=Path)

    verify = sub.add_parser("verify", help="property battery", epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
    verify.add_argument("--dims", default="3,4,5", help="comma-separated dimensions")
    verify.add_argument("--trials", type=int, default=20, help="trials per dimension")
    verify.add_argument("--seed", type=int, default=1)
    verify.add_argument("--depth", type=int, help="odd ladder depth K")
    verify.add_argument("--workers", type=int, help="worker threads")

    geometry = sub.add_parser("geometry", help="estimation angle", epilog=EPILOG,
                              formatter_class=argparse.RawDescriptionHelpFormatter)
    geometry.add_argument("instance", type=Path)
    geometry.add_argument("--t", type=float, help="level-surface value (defaults to tr(T rho))")
    geometry.add_argument("--strict", action="store_true", help="fail when the unbiasedness premise is violated")
    geometry.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        FileHandler().write_text(out, text)


def cmd_compute(args: argparse.Namespace, settings: Settings) -> int:
    instance = FileHandler().load_instance(args.instance)
    order = settings.ladder_depth if args.order is None else args.order
    if order > CONDITIONING_DEPTH:
        logger.warning("order %d uses moments through %d; Hankel determinants are poorly conditioned",
                       order, 2 * order)
    record = build_report(instance, settings, order, preshift=not args.no_preshift and settings.preshift)
    check_finite(record_to_dict(record))
    emit(render_csv(record) if args.format == "csv" else render_json(record), args.out)
    return EXIT_OK


def cmd_moments(args: argparse.Namespace, settings: Settings) -> int:
    instance = FileHandler().load_instance(args.instance)
    max_order = settings.moment_order_cap if args.max_order is None else args.max_order
    frame = moments_frame(instance, max_order, settings)
    emit(render_moments(frame, args.format), args.out)
    return EXIT_OK


def cmd_random(args: argparse.Namespace, settings: Settings) -> int:
    rank = args.dim if args.rank is None else args.rank
    instance = random_instance(args.dim, rank, args.seed, estimator=args.estimator, label=args.label)
    handler = FileHandler()
    emit(dump_json(handler.instance_to_json(instance)), args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    try:
        dims = parse_int_list(args.dims)
    except ValueError as e:
        raise ValidationError(f"--dims must be a comma-separated list of integers: {e}") from e
    verifier = PropertyVerifier(settings, depth=args.depth)
    if verifier.depth > CONDITIONING_DEPTH:
        logger.warning("depth %d is beyond the well-conditioned range", verifier.depth)
    summary = verifier.run(dims, args.trials, args.seed, workers=args.workers)
    sys.stdout.write(format_summary(summary))
    return EXIT_OK if summary.passed else EXIT_PROPERTY_FAILURE


def cmd_geometry(args: argparse.Namespace, settings: Settings) -> int:
    instance = FileHandler().load_instance(args.instance)
    if instance.estimator is None:
        raise ValidationError(f"{args.instance} has no 'estimator'")
    report = estimation_angle(instance.estimator, instance.state, instance.hamiltonian,
                              t=args.t, strict=args.strict, tol=settings.rank_tolerance)
    if args.format == "json":
        sys.stdout.write(dump_json(geometry_to_dict(report)))
    else:
        sys.stdout.write(format_geometry(report))
    return EXIT_OK


COMMANDS = {
    "compute": cmd_compute,
    "moments": cmd_moments,
    "random": cmd_random,
    "verify": cmd_verify,
    "geometry": cmd_geometry,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        settings = SettingsManager(args.settings).load()
        return COMMANDS[args.command](args, settings)
    except ValidationError as e:
        error_line(e)
        return EXIT_VALIDATION
    except DegenerateInstance as e:
        error_line(e)
        return EXIT_DEGENERATE
    except OSError as e:
        error_line(e)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
