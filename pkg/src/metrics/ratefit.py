"""
ratefit.py — Log-log convergence-rate fits

    log(avg_rsf) = slope * log(T) + intercept     (ordinary least squares)

Points are sorted by T before fitting so the result does not depend on the
order they were collected in.
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateFit:
    points: tuple[tuple[int, float], ...]
    slope: float
    intercept: float
    r2: float

    def predict(self, T: float) -> float:
        return float(np.exp(self.intercept) * T ** self.slope)

    def to_dict(self) -> dict:
        return {
            "points": [{"T": int(T), "avg_rsf": float(y)} for T, y in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
        }


def rate_fit(points) -> RateFit:
    """Fit avg_rsf ~ C T^slope from (T, avg_rsf) pairs."""
    pts = tuple(sorted((int(T), float(y)) for T, y in points))
    if len(pts) < 2:
        raise ValueError(f"rate_fit needs at least 2 points, got {len(pts)}")
    if len({T for T, _ in pts}) < 2:
        raise ValueError("rate_fit needs at least 2 distinct horizons")
    if any(T <= 0 or y <= 0 for T, y in pts):
        raise ValueError("rate_fit needs positive horizons and positive avg_rsf values")
    if len(pts) < 4:
        logger.warning(f"rate fit on only {len(pts)} points")

    log_T = np.log([T for T, _ in pts])
    log_y = np.log([y for _, y in pts])
    slope, intercept = np.polyfit(log_T, log_y, 1)

    resid = log_y - (slope * log_T + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((log_y - log_y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(points=pts, slope=float(slope), intercept=float(intercept), r2=r2)
