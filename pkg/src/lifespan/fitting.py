"""Power-law exponent fits on log-log data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    residuals: tuple


def fit_exponent(points) -> FitResult:
    """Least-squares line through ``(log x, log y)`` for points ``(x, y)``."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(x <= 0 or y <= 0 or not np.isfinite(y) for x, y in pts):
        raise ValueError("values must be finite and positive")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    (slope, intercept), *_ = np.linalg.lstsq(np.vstack([lx, np.ones_like(lx)]).T, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), min(max(r2, 0.0), 1.0), tuple(float(r) for r in resid))
