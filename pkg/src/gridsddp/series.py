"""Forecast-error series handling and the discrete error outcome grid."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ForecastErrorSeries",
    "OutcomeGrid",
    "quantile_grid",
    "read_series_csv",
    "write_series_csv",
]


@dataclass(frozen=True)
class ForecastErrorSeries:
    """A wind forecast-error history.

    ``errors[t]`` is the forecast error W_t = actual - forecast in MW, aligned
    with ``forecasts[t]`` (the forecast itself, MW). Steps are uniformly
    spaced, ``step_minutes`` apart.
    """

    errors: np.ndarray
    forecasts: np.ndarray
    step_minutes: int = 5

    def __post_init__(self) -> None:
        errors = np.asarray(self.errors, dtype=float)
        forecasts = np.asarray(self.forecasts, dtype=float)
        object.__setattr__(self, "errors", errors)
        object.__setattr__(self, "forecasts", forecasts)
        if errors.ndim != 1 or forecasts.ndim != 1 or errors.shape != forecasts.shape:
            raise ValueError("errors and forecasts must be 1-d arrays of equal length")
        if errors.size < 2:
            raise ValueError("series needs at least 2 observations")
        if not (np.all(np.isfinite(errors)) and np.all(np.isfinite(forecasts))):
            raise ValueError("series values must be finite")
        if self.step_minutes <= 0:
            raise ValueError("step_minutes must be positive")

    def __len__(self) -> int:
        return int(self.errors.size)

    @property
    def actuals(self) -> np.ndarray:
        """Actual wind output E_t = forecast + error."""
        return self.forecasts + self.errors


@dataclass(frozen=True)
class OutcomeGrid:
    """Ordered finite support of discrete forecast-error outcomes (MW).

    Empirical distributions are stored as probability vectors over these
    points; continuous samples are projected to the nearest point.
    """

    points: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", points)
        if points.ndim != 1 or points.size < 1:
            raise ValueError("grid needs at least one point")
        if not np.all(np.isfinite(points)):
            raise ValueError("grid points must be finite")
        if points.size > 1 and not np.all(np.diff(points) > 0):
            raise ValueError("grid points must be strictly increasing")

    @property
    def size(self) -> int:
        return int(self.points.size)

    def nearest_index(self, values) -> np.ndarray:
        """Index of the nearest grid point; midpoint ties go to the lower point."""
        mids = 0.5 * (self.points[1:] + self.points[:-1])
        return np.searchsorted(mids, np.asarray(values, dtype=float), side="left")

    def snap(self, value: float) -> float:
        """The grid point nearest to ``value``."""
        return float(self.points[self.nearest_index(value)])

    def index_of(self, value: float, atol: float = 1e-9) -> int:
        """Index of a value expected to lie on the grid."""
        idx = int(self.nearest_index(value))
        if abs(self.points[idx] - value) > atol:
            raise ValueError(f"value {value} is not on the outcome grid")
        return idx

    def project(self, samples, mask=None) -> np.ndarray:
        """Histogram of samples projected to nearest grid points (sums to 1).

        With ``mask``, samples snap to the nearest *allowed* point, so a
        sign-restricted distribution cannot leak mass across the boundary
        when a sample sits closer to an opposite-sign point.
        """
        samples = np.asarray(samples, dtype=float)
        if samples.size == 0:
            raise ValueError("cannot project an empty sample set")
        if mask is None:
            counts = np.bincount(self.nearest_index(samples), minlength=self.size)
            return counts / counts.sum()
        allowed = np.nonzero(np.asarray(mask, dtype=bool))[0]
        if allowed.size == 0:
            raise ValueError("projection mask allows no grid points")
        sub = OutcomeGrid(self.points[allowed])
        counts = np.bincount(allowed[sub.nearest_index(samples)], minlength=self.size)
        return counts / counts.sum()

    def sign_mask(self, sign: int) -> np.ndarray:
        """Boolean mask of points compatible with a sign class.

        Sign 0 means at-or-below forecast (w <= 0), sign 1 strictly above.
        """
        if sign == 0:
            return self.points <= 0.0
        return self.points > 0.0


def quantile_grid(errors, n_points: int) -> OutcomeGrid:
    """Place grid points at empirical quantiles of the error marginal.

    Points are split between the nonpositive and positive sides in proportion
    to their sample mass (at least one point per populated side), then placed
    at mid-quantiles within each side. Duplicate values collapse, so the
    returned grid may hold fewer than ``n_points`` points.
    """
    errors = np.asarray(errors, dtype=float)
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    neg = np.sort(errors[errors <= 0.0])
    pos = np.sort(errors[errors > 0.0])
    pieces = []
    if neg.size and pos.size:
        n_neg = int(round(n_points * neg.size / errors.size))
        n_neg = min(max(n_neg, 1), n_points - 1)
        n_pos = n_points - n_neg
    else:
        n_neg = n_points if neg.size else 0
        n_pos = n_points - n_neg
    for side, count in ((neg, n_neg), (pos, n_pos)):
        if count == 0:
            continue
        qs = (np.arange(count) + 0.5) / count
        pieces.append(np.quantile(side, qs))
    return OutcomeGrid(np.unique(np.concatenate(pieces)))


def read_series_csv(path) -> ForecastErrorSeries:
    """Read a training series CSV with columns ``t, forecast_mw, actual_mw``."""
    forecasts, actuals = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            forecasts.append(float(row["forecast_mw"]))
            actuals.append(float(row["actual_mw"]))
    forecasts = np.asarray(forecasts)
    actuals = np.asarray(actuals)
    return ForecastErrorSeries(errors=actuals - forecasts, forecasts=forecasts)


def write_series_csv(path, series: ForecastErrorSeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "forecast_mw", "actual_mw"])
        for t, (f, a) in enumerate(zip(series.forecasts, series.actuals)):
            writer.writerow([t, f"{f:.6f}", f"{a:.6f}"])
