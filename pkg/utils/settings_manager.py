"""
Settings Manager - Numerical tolerances and defaults, optionally JSON-backed
"""
import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

from processors.exceptions import OrderTooLarge, ValidationError

logger = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 16
MAX_MOMENT_ORDER = 16
MAX_LADDER_DEPTH = 7
CONDITIONING_DEPTH = 5


@dataclass(frozen=True)
class Settings:
    """Every tunable the numerical core reads; defaults are the documented ones"""

    derivative_order_cap: int = MAX_DERIVATIVE_ORDER
    moment_order_cap: int = 12
    ladder_depth: int = 5
    rank_tolerance: float = 1e-10
    frame_tolerance: float = 1e-20
    clamp_ratio: float = 1e-14
    preshift: bool = True
    verify_workers: int = 4

    def validate(self) -> "Settings":
        if not 1 <= self.derivative_order_cap <= MAX_DERIVATIVE_ORDER:
            raise ValidationError(f"derivative_order_cap must lie in [1, {MAX_DERIVATIVE_ORDER}]")
        if self.moment_order_cap % 2 or not 2 <= self.moment_order_cap <= MAX_MOMENT_ORDER:
            raise ValidationError(f"moment_order_cap must be even and lie in [2, {MAX_MOMENT_ORDER}]")
        if self.ladder_depth % 2 == 0 or not 1 <= self.ladder_depth <= MAX_LADDER_DEPTH:
            raise ValidationError(f"ladder_depth must be odd and lie in [1, {MAX_LADDER_DEPTH}]")
        for name in ("rank_tolerance", "frame_tolerance", "clamp_ratio"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValidationError(f"{name} must lie in (0, 1), got {value}")
        if self.verify_workers < 1:
            raise ValidationError("verify_workers must be positive")
        return self

    def check_moment_order(self, order: int) -> int:
        if order > self.moment_order_cap:
            raise OrderTooLarge(f"moment order {order} exceeds moment_order_cap = {self.moment_order_cap}")
        return order

    def check_derivative_order(self, order: int) -> int:
        if order > self.derivative_order_cap:
            raise OrderTooLarge(f"derivative order {order} exceeds derivative_order_cap = {self.derivative_order_cap}")
        return order


DEFAULT_SETTINGS = Settings()


class SettingsManager:
    """Loads and saves Settings as a flat JSON object"""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None

    def load(self) -> Settings:
        """
        Read overrides from the JSON file, if any, on top of the defaults.

        Returns:
            Settings: validated settings
        """
        if self.path is None:
            return DEFAULT_SETTINGS
        if not self.path.exists():
            raise ValidationError(f"settings file not found: {self.path}")

        try:
            with open(self.path, "r", encoding="utf-8") as f:
                overrides = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"settings file {self.path} is not valid JSON: {e}") from e

        if not isinstance(overrides, dict):
            raise ValidationError("settings file must hold a JSON object")
        return self.apply(DEFAULT_SETTINGS, overrides)

    def save(self, settings: Settings) -> Path:
        if self.path is None:
            raise ValidationError("no settings path configured")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8") as f:
            json.dump(asdict(settings), f, indent=4)
        return self.path

    @staticmethod
    def apply(base: Settings, overrides: dict[str, Any]) -> Settings:
        known = {f.name: f.type for f in fields(Settings)}
        unknown = sorted(set(overrides) - set(known))
        if unknown:
            raise ValidationError(f"unknown settings: {', '.join(unknown)}")

        cleaned: dict[str, Any] = {}
        for key, value in overrides.items():
            default = getattr(base, key)
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ValidationError(f"{key} must be a boolean")
            elif isinstance(default, int):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValidationError(f"{key} must be an integer")
            elif not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(f"{key} must be a number")
            cleaned[key] = float(value) if isinstance(default, float) else value

        settings = replace(base, **cleaned).validate()
        if settings.ladder_depth > CONDITIONING_DEPTH:
            logger.warning(
                "ladder depth %d uses moments through order %d; Hankel determinants "
                "at this depth are poorly conditioned",
                settings.ladder_depth,
                2 * settings.ladder_depth,
            )
        return settings
