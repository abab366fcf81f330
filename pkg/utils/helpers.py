"""
Helper Functions - Small utilities shared by the processors and the CLI
"""
import math
import re
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient as a Python int (0 outside 0 <= k <= n)"""
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def centered_spectral_norm(matrix: np.ndarray) -> float:
    """Spectral norm of A - (tr A / d) I; unchanged by A -> A + cI"""
    d = matrix.shape[0]
    centered = matrix - (np.trace(matrix) / d) * np.eye(d)
    return float(np.linalg.norm(centered, 2))


def tolerance_scale(matrix: np.ndarray, power: int = 1) -> float:
    """(1 + ||H - mean||_2) ** power, the scale every H-homogeneous tolerance uses"""
    return (1.0 + centered_spectral_norm(matrix)) ** power


def relative_deviation(a: float, b: float, floor: float = 0.0) -> float:
    """|a - b| / max(|a|, |b|, floor); 0 when both vanish"""
    denom = max(abs(a), abs(b), floor)
    if denom == 0.0:
        return 0.0
    return abs(a - b) / denom


def format_float(value: float, digits: int = 12) -> str:
    """Format a float with a fixed number of significant digits"""
    return f"{value:.{digits}g}"


def parse_int_list(text: str) -> list[int]:
    """Parse '3,4,5' into [3, 4, 5]"""
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise ValueError("empty list")
    return [int(item) for item in items]


def sanitize_label(label: str) -> str:
    """Remove characters that would break CSV cells or file names"""
    label = re.sub(r'[<>:"/\\|?*,\n\r]', '', label)
    return label.strip().replace(' ', '_')
