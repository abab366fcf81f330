"""
Report Component - Assembles ReportRecords and renders them as JSON or CSV
"""
import math
from dataclasses import dataclass
from typing import Any

import pandas as pd

from processors.bound_ladder import (
    BoundLadder,
    GeometricReport,
    central_moment_bound,
    estimation_angle,
    third_order_bound,
    uncertainty_bound,
)
from processors.derivatives import DerivativeSet
from processors.exceptions import DegenerateInstance, ValidationError
from processors.linalg import principal_sqrt, variance
from processors.skew_moments import (
    build_moment_table,
    canonical_split,
    central_moment,
    skew_dispersion,
    skew_moment_oracle,
)
from utils.file_handler import InstanceFile, dump_json
from utils.helpers import relative_deviation, sanitize_label
from utils.settings_manager import MAX_LADDER_DEPTH, Settings

CSV_COLUMNS = ["label", "dim", "purity", "n", "D", "N", "U", "term", "cumulative"]
CSV_FLOAT_FORMAT = "%.12g"


@dataclass(frozen=True)
class ReportRecord:
    label: str
    dim: int
    purity: float
    moments: dict[int, float]
    ladder: BoundLadder
    variance: float
    skew_dispersion: float
    third_order: float | None = None
    central_moment_bound: float | None = None
    geometry: GeometricReport | None = None


def build_report(instance: InstanceFile, settings: Settings, order: int | None = None,
                 preshift: bool | None = None) -> ReportRecord:
    """
    Run the bound ladder on one instance.

    Args:
        instance: validated (H, rho) pair
        settings: tolerances and defaults
        order: odd truncation order K <= 7 (defaults to the configured depth)
        preshift: override the configured pre-shift of H

    Returns:
        ReportRecord
    """
    order = settings.ladder_depth if order is None else order
    if order < 1 or order % 2 == 0 or order > MAX_LADDER_DEPTH:
        raise ValidationError(f"--order must be odd and lie in [1, {MAX_LADDER_DEPTH}], got {order}")
    settings.check_moment_order(2 * order)
    preshift = settings.preshift if preshift is None else preshift

    h, rho = instance.hamiltonian, instance.state
    xi = principal_sqrt(rho, settings.clamp_ratio)
    table = build_moment_table(h, xi, 2 * order, preshift=preshift, cap=settings.moment_order_cap)
    ladder = uncertainty_bound(table, order, settings.rank_tolerance)

    third = None
    if ladder.truncation_order >= 3:
        third = third_order_bound(table, settings.rank_tolerance)
    comparison = None
    if rho.is_pure and rho.dim >= 3:
        try:
            comparison = central_moment_bound(h, rho, settings.rank_tolerance)
        except DegenerateInstance:
            comparison = None
    geometry = None
    if instance.estimator is not None:
        try:
            geometry = estimation_angle(instance.estimator, rho, h, tol=settings.rank_tolerance, xi=xi)
        except DegenerateInstance:
            geometry = None

    return ReportRecord(
        label=sanitize_label(instance.label or "instance"),
        dim=rho.dim,
        purity=rho.purity,
        moments={o: table[o] for o in table.orders},
        ladder=ladder,
        variance=variance(h, rho),
        skew_dispersion=skew_dispersion(h, rho, xi),
        third_order=third,
        central_moment_bound=comparison,
        geometry=geometry,
    )


def geometry_to_dict(report: GeometricReport) -> dict[str, Any]:
    return {
        "t": report.t,
        "arc_length": report.arc_length,
        "angle": report.angle,
        "direct_angle": report.direct_angle,
        "residual": report.residual,
        "pairing": report.pairing,
        "premise_cosine": report.premise_cosine,
        "invalid_geometry": report.invalid_geometry,
    }


def record_to_dict(record: ReportRecord) -> dict[str, Any]:
    """Plain, ordered dict; saturated rows are absent rather than zero-filled"""
    data: dict[str, Any] = {
        "label": record.label,
        "dim": record.dim,
        "purity": record.purity,
        "variance": record.variance,
        "skew_dispersion": record.skew_dispersion,
        "moments": {str(o): v for o, v in record.moments.items()},
        "ladder": [
            {"n": r.order, "D": r.determinant, "N": r.norm, "U": r.numerator,
             "term": r.term, "cumulative": r.cumulative}
            for r in record.ladder.rows
        ],
        "requested_order": record.ladder.requested_order,
        "truncation_order": record.ladder.truncation_order,
        "saturation_flag": record.ladder.saturation_flag,
        "bound": record.ladder.bound,
        "third_order_bound": record.third_order,
        "central_moment_bound": record.central_moment_bound,
    }
    if record.geometry is not None:
        data["geometry"] = geometry_to_dict(record.geometry)
    return data


def render_json(record: ReportRecord) -> str:
    return dump_json(record_to_dict(record))


def ladder_frame(record: ReportRecord) -> pd.DataFrame:
    frame = record.ladder.as_frame()
    frame.insert(0, "purity", record.purity)
    frame.insert(0, "dim", record.dim)
    frame.insert(0, "label", record.label)
    return frame[CSV_COLUMNS]


def render_csv(record: ReportRecord) -> str:
    return ladder_frame(record).to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def moments_frame(instance: InstanceFile, max_order: int, settings: Settings) -> pd.DataFrame:
    """
    S_2..S_max_order from the closed form and from the derivative oracle,
    with the ordinary central moments alongside.

    When S_2 vanishes only that row is returned.
    """
    if max_order < 2:
        raise ValidationError(f"--max-order must be at least 2, got {max_order}")
    settings.check_moment_order(max_order)
    h, rho = instance.hamiltonian, instance.state
    xi = principal_sqrt(rho, settings.clamp_ratio)
    table = build_moment_table(h, xi, max_order, preshift=settings.preshift, cap=settings.moment_order_cap)
    frame = table.as_frame().rename(columns={"S": "closed_form"})
    keep = frame["order"] > 0
    if table[2] <= settings.rank_tolerance * table.scale ** 2:
        keep = frame["order"] == 2
    frame = frame[keep].reset_index(drop=True)

    top = settings.check_derivative_order(max_order // 2 + 1)
    dset = DerivativeSet.build(xi, h, top, cap=settings.derivative_order_cap)
    orders = [int(o) for o in frame["order"]]
    frame["oracle"] = [skew_moment_oracle(dset, *canonical_split(o)) for o in orders]
    frame["deviation"] = [
        relative_deviation(closed, oracle, floor=settings.rank_tolerance * table.scale ** o)
        for o, closed, oracle in zip(orders, frame["closed_form"], frame["oracle"])
    ]
    frame["central"] = [central_moment(h, rho, o) for o in orders]
    return frame


def render_moments(frame: pd.DataFrame, fmt: str) -> str:
    if fmt == "csv":
        return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    records = [
        {key: (int(value) if key == "order" else float(value)) for key, value in row.items()}
        for row in frame.to_dict(orient="records")
    ]
    return dump_json({"moments": records})


def check_finite(data: Any) -> None:
    """Reports never carry NaN or Inf"""
    if isinstance(data, float) and not math.isfinite(data):
        raise DegenerateInstance("report contains a non-finite value")
    if isinstance(data, dict):
        for value in data.values():
            check_finite(value)
    elif isinstance(data, list):
        for value in data:
            check_finite(value)
