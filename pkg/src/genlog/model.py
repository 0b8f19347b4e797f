"""Domain types shared by the whole pipeline, plus basic log inspection.

Everything here is an in-memory value object: construction validates the
structural invariants and instances are treated as immutable afterwards, so
they are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Metric and batch identifiers are plain strings; timestamps are integer
# milliseconds since the Unix epoch (sub-millisecond input is truncated).
MetricId = str
BatchId = str
TimestampMs = int


@dataclass(frozen=True)
class Event:
    """One logged process step, optionally carrying sensor readings."""

    name: str
    timestamp_ms: TimestampMs
    readings: dict[MetricId, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for metric, value in self.readings.items():
            if not metric:
                raise ValueError("metric ids must be non-empty strings")
            if not math.isfinite(value):
                raise ValueError(f"non-finite reading for metric {metric!r}: {value!r}")


@dataclass
class LogFile:
    """A parsed event log: ordered events plus free-form metadata."""

    id: str
    batch: BatchId
    events: list[Event]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("log id must be non-empty")
        if not self.batch:
            raise ValueError(f"log {self.id!r}: batch must be non-empty")
        if not self.events:
            raise ValueError(f"log {self.id!r} has no events")
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.timestamp_ms < prev.timestamp_ms:
                raise ValueError(f"log {self.id!r}: events not sorted by timestamp")

    def observed_metrics(self) -> list[MetricId]:
        """Sorted list of every metric that appears in at least one event."""
        seen: set[MetricId] = set()
        for event in self.events:
            seen.update(event.readings)
        return sorted(seen)


@dataclass
class Series:
    """Irregular (timestamp, value) samples for one metric of one log."""

    metric: MetricId
    source_log: str
    samples: list[tuple[TimestampMs, float]]

    def __post_init__(self) -> None:
        if not self.metric:
            raise ValueError("series metric must be non-empty")
        prev: TimestampMs | None = None
        for ts, value in self.samples:
            if prev is not None and ts <= prev:
                raise ValueError(
                    f"series {self.metric!r}/{self.source_log!r}: timestamps must be "
                    f"strictly increasing (got {ts} after {prev})"
                )
            if not math.isfinite(value):
                raise ValueError(f"series {self.metric!r}: non-finite value {value!r} at t={ts}")
            prev = ts

    def timestamps(self) -> list[TimestampMs]:
        return [ts for ts, _ in self.samples]

    def values(self) -> list[float]:
        return [v for _, v in self.samples]

    def __len__(self) -> int:
        return len(self.samples)


SeriesKey = tuple[BatchId, MetricId, str]  # (batch, metric, log id)


@dataclass
class Catalog:
    """All ingested logs plus the per-(batch, metric, log) series index."""

    logs: list[LogFile]
    index: dict[SeriesKey, Series]

    def __post_init__(self) -> None:
        log_ids = {log.id for log in self.logs}
        if len(log_ids) != len(self.logs):
            raise ValueError("catalog contains duplicate log ids")
        for batch, metric, log_id in self.index:
            if log_id not in log_ids:
                raise ValueError(f"indexed series ({batch}, {metric}, {log_id}) has no backing log")

    def metrics(self) -> list[MetricId]:
        return sorted({metric for _, metric, _ in self.index})

    def batches(self) -> list[BatchId]:
        return sorted({batch for batch, _, _ in self.index})

    def series_for(self, batch: BatchId | None = None, metric: MetricId | None = None) -> list[Series]:
        """All indexed series, optionally restricted to one batch and/or metric."""
        out = []
        for (b, m, _), series in sorted(self.index.items()):
            if batch is not None and b != batch:
                continue
            if metric is not None and m != metric:
                continue
            out.append(series)
        return out

    def get(self, batch: BatchId, metric: MetricId, log_id: str) -> Series:
        return self.index[(batch, metric, log_id)]


def log_duration_ms(log: LogFile) -> int:
    """Span of the log in milliseconds: last event timestamp minus first."""
    return log.events[-1].timestamp_ms - log.events[0].timestamp_ms


def count_metric_values(log: LogFile, metric: MetricId) -> int:
    """Number of events whose readings contain `metric` (0 for unknown metrics)."""
    return sum(1 for event in log.events if metric in event.readings)
