"""Log-linear regression for exponential decay rates."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def fit_decay(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares line through ``(R, ln value)``.

    Returns ``(slope, intercept, residual)`` where the residual is the largest
    absolute deviation of ``ln value`` from the fitted line.
    """
    if len(points) < 4:
        raise ValueError(f"need at least 4 points for a decay fit, got {len(points)}")
    R = np.array([p[0] for p in points], dtype=float)
    v = np.array([p[1] for p in points], dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("decay fit needs finite positive values")
    y = np.log(v)
    slope, intercept = np.polyfit(R, y, 1)
    resid = float(np.max(np.abs(y - (slope * R + intercept))))
    return float(slope), float(intercept), resid
