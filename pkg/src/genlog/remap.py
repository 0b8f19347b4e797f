"""Embedding generated series back into real log structure.

A generated series is just numbers. To become a log it borrows the full
event skeleton of a real template log: every event name, the meta map,
the count of readings per metric, and the overall time span stay exactly
as in the template. Only two things change: the readings of
metric-bearing events are replaced with resampled generated values, and
those events get evenly spaced synthetic timestamps across the template's
span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .genesis import GeneratedPart, GeneratedSeries
from .model import Event, LogFile, MetricId, count_metric_values, log_duration_ms
from .resample import resample_to_count


class RemapError(ValueError):
    """The template log cannot host the generated series."""


@dataclass(frozen=True)
class EmbedSlot:
    """Placement rule for one metric: how many values, where, how far apart."""

    count: int
    dt_ms: float
    t0: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.count >= 2 and not self.dt_ms > 0:
            raise ValueError(f"dt_ms must be positive for count {self.count}")


@dataclass
class EmbedPlan:
    slots: dict[MetricId, EmbedSlot]


@dataclass
class RoundtripReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def build_embed_plan(template: LogFile, metrics: list[MetricId]) -> EmbedPlan:
    """Derive per-metric placement from the template's own arithmetic.

    duration over (count - 1) steps makes the first and last embedded
    reading coincide with the template's time span. A metric with a single
    reading has no rate; its one value goes at t0.
    """
    duration = log_duration_ms(template)
    t0 = template.events[0].timestamp_ms
    slots: dict[MetricId, EmbedSlot] = {}
    for metric in metrics:
        count = count_metric_values(template, metric)
        if count == 0:
            raise RemapError(f"template {template.id!r} carries no readings for {metric!r}")
        dt = duration / (count - 1) if count >= 2 else 0.0
        slots[metric] = EmbedSlot(count=count, dt_ms=dt, t0=t0)
    return EmbedPlan(slots)


def embed(template: LogFile, generated: dict[MetricId, GeneratedSeries],
          plan: EmbedPlan, new_id: str | None = None) -> LogFile:
    """Produce a new log with generated readings in the template's skeleton.

    For each planned metric, the i-th metric-bearing event of the template
    receives the i-th resampled value and the timestamp t0 + round(i * dt)
    (round half up). Everything else, meta included, is copied verbatim.
    Events are re-sorted at the end because synthetic timestamps can pass
    original ones; the sort is stable so equal-timestamp order is kept.
    """
    missing = set(plan.slots) - set(generated)
    if missing:
        raise RemapError(f"generated data missing for metric(s) {sorted(missing)}")

    rows = [[event.name, event.timestamp_ms, dict(event.readings)]
            for event in template.events]
    bearer_index: dict[MetricId, list[int]] = {}
    for pos, event in enumerate(template.events):
        for metric in event.readings:
            bearer_index.setdefault(metric, []).append(pos)

    for metric in sorted(plan.slots):
        slot = plan.slots[metric]
        bearers = bearer_index.get(metric, [])
        if len(bearers) != slot.count:
            raise RemapError(
                f"plan expects {slot.count} bearer event(s) for {metric!r}, "
                f"template {template.id!r} has {len(bearers)}")
        if slot.count >= 2 and generated[metric].values.size < 2:
            raise RemapError(
                f"generated series for {metric!r} has "
                f"{generated[metric].values.size} value(s); need at least 2")
        replacement = resample_to_count(generated[metric].values, slot.count) \
            if slot.count >= 2 else generated[metric].values[:1]
        for k, pos in enumerate(bearers):
            rows[pos][2][metric] = float(replacement[k])
            # Shared bearer events are re-timestamped once per metric; the
            # alphabetically last metric wins.
            rows[pos][1] = slot.t0 + math.floor(k * slot.dt_ms + 0.5)

    rows.sort(key=lambda row: row[1])
    events = [Event(name, ts, readings) for name, ts, readings in rows]
    return LogFile(new_id or template.id, template.batch, events, dict(template.meta))


def remap_part(part: GeneratedPart, logs_by_id: dict[str, LogFile],
               new_id: str) -> LogFile:
    """Turn one generated part into a log using its template."""
    template = logs_by_id.get(part.template_log)
    if template is None:
        raise RemapError(f"template log {part.template_log!r} is not in the catalog")
    plan = build_embed_plan(template, sorted(part.series))
    return embed(template, part.series, plan, new_id)


def roundtrip_check(template: LogFile, embedded: LogFile) -> RoundtripReport:
    """Structural comparison of an embedded log against its template.

    Checks event count, per-metric reading counts, the meta map, the time
    span (within 1 ms for rounding), and that the result survives a
    serialization round trip. Violations are collected, not raised.
    """
    from .ingest import parse_log_yamlite, write_log_yamlite

    violations: list[str] = []
    if len(embedded.events) != len(template.events):
        violations.append(
            f"event count: template {len(template.events)}, embedded {len(embedded.events)}")
    for metric in sorted(set(template.observed_metrics()) | set(embedded.observed_metrics())):
        want = count_metric_values(template, metric)
        got = count_metric_values(embedded, metric)
        if want != got:
            violations.append(f"count for {metric!r}: template {want}, embedded {got}")
    if embedded.meta != template.meta:
        violations.append(f"meta differs: template {template.meta}, embedded {embedded.meta}")
    span_diff = abs(log_duration_ms(embedded) - log_duration_ms(template))
    if span_diff > 1:
        violations.append(f"duration differs by {span_diff} ms")
    try:
        reparsed = parse_log_yamlite(write_log_yamlite(embedded))
        if reparsed != embedded:
            violations.append("serialization round trip changed the log")
    except (ValueError, ArithmeticError) as exc:
        violations.append(f"embedded log does not re-parse: {exc}")
    return RoundtripReport(violations)
