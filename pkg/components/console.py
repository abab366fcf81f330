"""
Console Component - One-line diagnostics and plain-text summaries
"""
import sys
from typing import TextIO

from processors.bound_ladder import GeometricReport
from processors.verifier import PROPERTY_TOLERANCES, SEPARATION_THRESHOLDS, VerificationSummary
from utils.helpers import format_float


def error_line(error: BaseException, stream: TextIO | None = None) -> None:
    """Print `error: <Type>: <message>` as a single line on stderr"""
    message = " ".join(str(error).split())
    print(f"error: {type(error).__name__}: {message}", file=stream or sys.stderr)


def format_geometry(report: GeometricReport) -> str:
    length = "n/a" if report.arc_length is None else format_float(report.arc_length)
    lines = [
        f"t               {format_float(report.t)}",
        f"arc length s(t) {length}",
        f"angle           {format_float(report.angle)}",
        f"direct angle    {format_float(report.direct_angle)}",
        f"residual        {format_float(report.residual, 3)}",
        f"pairing kappa   {format_float(report.pairing)}",
        f"premise cosine  {format_float(report.premise_cosine)}",
    ]
    if report.invalid_geometry:
        lines.append("warning: estimator violates the unbiasedness premise (premise cosine > 1)")
    return "\n".join(lines) + "\n"


def format_summary(summary: VerificationSummary) -> str:
    """Per-property counts and worst deviations, then the offending seeds"""
    lines = [f"{'property':<24}{'runs':>6}{'fail':>6}  {'worst':>12}  {'limit':>8}  seed"]
    for name, prop in summary.properties.items():
        if name in SEPARATION_THRESHOLDS:
            limit = f">{SEPARATION_THRESHOLDS[name]:.0e}"
        else:
            limit = f"{PROPERTY_TOLERANCES.get(name, 0.0):.0e}"
        lines.append(
            f"{name:<24}{prop.runs:>6}{prop.failures:>6}  {format_float(prop.worst, 3):>12}  {limit:>8}  {prop.worst_seed}"
        )

    total = len(summary.trials)
    failed = summary.failed_trials
    lines.append(f"{total - len(failed)}/{total} trials passed")
    for trial in failed:
        lines.append(f"FAILED trial {trial.index} dim {trial.dim} rank {trial.rank} seed {trial.seed}: "
                     f"{', '.join(trial.failures)}")
    return "\n".join(lines) + "\n"
