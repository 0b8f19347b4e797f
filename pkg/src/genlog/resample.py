"""Shared-rate resampling and value normalization.

Sensor series arrive at different, slightly irregular rates. Before any
modelling they are interpolated onto uniform grids that share a single
step `dt_ms`, chosen so that no series is sampled more coarsely than its
own native resolution. Normalization to [0, 1] is a separate concern:
training fits the parameters and stores them with the model, so that
generated output can be mapped back to physical units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Catalog, MetricId, Series, TimestampMs


@dataclass(frozen=True)
class NormParams:
    """Affine map fitted on observed values: lo -> 0.0, hi -> 1.0."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (self.lo <= self.hi):
            raise ValueError(f"norm requires lo <= hi, got lo={self.lo} hi={self.hi}")


@dataclass
class UniformSeries:
    """A series on the grid t0 + k*dt_ms, values in physical units."""

    metric: MetricId
    source_log: str
    t0: TimestampMs
    dt_ms: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.dt_ms < 1:
            raise ValueError(f"dt_ms must be >= 1, got {self.dt_ms}")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("values must be a non-empty 1-D array")

    def __len__(self) -> int:
        return int(self.values.size)

    def timestamps(self) -> np.ndarray:
        return self.t0 + self.dt_ms * np.arange(self.values.size, dtype=np.int64)


def median_gap_ms(series: Series) -> float:
    """Median inter-sample gap; a single-sample series has no gap."""
    if len(series) < 2:
        raise ValueError(f"series {series.metric!r}/{series.source_log!r} has fewer than 2 samples")
    gaps = np.diff(np.asarray(series.timestamps(), dtype=np.int64))
    return float(np.median(gaps))


def common_dt(catalog: Catalog) -> int:
    """Shared grid step: floor of the smallest median gap, clamped to >= 1 ms.

    Taking the minimum means the densest series sets the rate, so every
    series keeps at least its native density on the shared grid. Series
    with fewer than 2 samples have no rate and are ignored.
    """
    gaps = [median_gap_ms(s) for s in catalog.index.values() if len(s) >= 2]
    if not gaps:
        raise ValueError("no series with at least 2 samples; cannot derive a common step")
    return max(1, int(np.floor(min(gaps))))


def to_uniform(series: Series, dt_ms: int) -> UniformSeries:
    """Linearly interpolate a series onto the grid t0 + k*dt_ms.

    The grid starts at the first sample and ends at the last grid point
    not beyond the last sample, so the first point always coincides with
    a real sample and the last does whenever the span divides evenly.
    """
    if dt_ms < 1:
        raise ValueError(f"dt_ms must be >= 1, got {dt_ms}")
    if len(series) < 2:
        raise ValueError(
            f"series {series.metric!r}/{series.source_log!r} needs >= 2 samples to resample")
    ts = np.asarray(series.timestamps(), dtype=np.int64)
    vs = np.asarray(series.values(), dtype=np.float64)
    t0 = int(ts[0])
    steps = int((ts[-1] - t0) // dt_ms)
    grid = t0 + dt_ms * np.arange(steps + 1, dtype=np.int64)

    left = np.searchsorted(ts, grid, side="right") - 1
    left = np.clip(left, 0, ts.size - 2)
    span = (ts[left + 1] - ts[left]).astype(np.float64)
    w = (grid - ts[left]).astype(np.float64) / span
    # Convex combination: w of exactly 0.0 or 1.0 reproduces the stored
    # sample bit for bit, which keeps grid points that land on samples exact.
    values = vs[left] * (1.0 - w) + vs[left + 1] * w
    return UniformSeries(series.metric, series.source_log, t0, dt_ms, values)


def resample_to_count(values, count: int) -> np.ndarray:
    """Resample to exactly `count` points evenly spaced over the index range.

    Accepts a UniformSeries or a plain value array. count == 1 returns just
    the first value; both endpoints are exact for count >= 2.
    """
    vs = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if vs.ndim != 1 or vs.size < 2:
        raise ValueError(f"need at least 2 values to resample, got {vs.size}")
    if count == 1:
        return vs[:1].copy()
    positions = np.linspace(0.0, float(vs.size - 1), count)
    left = np.clip(positions.astype(np.int64), 0, vs.size - 2)
    w = positions - left
    return vs[left] * (1.0 - w) + vs[left + 1] * w


def fit_norm(values) -> NormParams:
    """Observed min/max of a value array."""
    vs = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if vs.size == 0:
        raise ValueError("cannot fit normalization on an empty array")
    return NormParams(float(np.min(vs)), float(np.max(vs)))


def normalize(values: np.ndarray, norm: NormParams) -> np.ndarray:
    """Map [lo, hi] -> [0, 1]; a degenerate range maps everything to 0.0."""
    vs = np.asarray(values, dtype=np.float64)
    if vs.size == 0:
        raise ValueError("cannot normalize an empty array")
    if norm.hi == norm.lo:
        return np.zeros_like(vs)
    return (vs - norm.lo) / (norm.hi - norm.lo)


def denormalize(values: np.ndarray, norm: NormParams) -> np.ndarray:
    """Inverse of normalize; the degenerate range maps everything back to lo."""
    vs = np.asarray(values, dtype=np.float64)
    if vs.size == 0:
        raise ValueError("cannot denormalize an empty array")
    if norm.hi == norm.lo:
        return np.full_like(vs, norm.lo)
    return vs * (norm.hi - norm.lo) + norm.lo
