"""Deterministic synthetic log corpus for demos and end-to-end tests.

Builds machining-style logs: a handful of metrics sampled at slightly
different, jittered rates, interleaved with process events that carry no
readings. Batches differ in waveform (a drift term and phase offsets), so
models trained per batch are genuinely distinguishable.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .ingest import write_log_yamlite
from .model import Event, LogFile

DEFAULT_METRICS = ("load_x", "load_y", "spindle")

# 2021-03-01T10:00:00+00:00
BASE_T0_MS = 1_614_592_800_000

PROCESS_STEPS = ("clamp", "cut", "polish", "release")


def make_log(log_id: str, batch_index: int, part_index: int,
             metrics: tuple[str, ...] = DEFAULT_METRICS,
             readings_per_metric: int = 120, base_gap_ms: int = 40,
             seed: int = 0) -> LogFile:
    """One synthetic part run; fully determined by its arguments."""
    rng = np.random.default_rng(seed)
    t0 = BASE_T0_MS + part_index * 3_600_000 + batch_index * 86_400_000
    events: list[Event] = []

    last_ts = t0
    for m_idx, metric in enumerate(metrics):
        # Each metric gets its own rate so the common grid step is a
        # genuine minimum over different medians.
        gap = base_gap_ms * (1.0 + 0.3 * m_idx)
        # Batches differ in period and drift so cross-batch generation is
        # measurably farther from the originals than own-batch generation.
        period = max(8.0, (50 + 10 * m_idx) * (1.0 - 0.35 * batch_index))
        amp = 1.0 + 0.5 * m_idx
        offset = 2.0 * (m_idx + 1)
        drift = 0.006 * batch_index
        phase = 0.7 * batch_index + 0.2 * part_index
        ts = t0
        for k in range(readings_per_metric):
            jitter = int(rng.integers(-4, 5))
            ts = ts + max(1, int(round(gap)) + jitter) if k else t0
            value = (offset + amp * math.sin(2 * math.pi * k / period + phase)
                     + drift * k + float(rng.normal(0.0, 0.01)))
            step = PROCESS_STEPS[(k // 10) % len(PROCESS_STEPS)]
            events.append(Event(step, ts, {metric: value}))
            last_ts = max(last_ts, ts)

    events.append(Event("start", t0, {}))
    events.append(Event("finish", last_ts + 250, {}))
    for k in range(3):
        mid = t0 + (k + 1) * (last_ts + 250 - t0) // 4
        events.append(Event("tool_change", int(mid), {}))

    events.sort(key=lambda e: e.timestamp_ms)
    meta = {"machine": "MaxxTurn45", "program": f"prog_{batch_index:02d}"}
    return LogFile(log_id, f"batch{14 + batch_index}", events, meta)


def make_corpus(batches: int = 2, parts_per_batch: int = 3,
                metrics: tuple[str, ...] = DEFAULT_METRICS,
                readings_per_metric: int = 120, seed: int = 0) -> list[LogFile]:
    logs = []
    for b in range(batches):
        for p in range(parts_per_batch):
            log_id = f"batch{14 + b}_part{p + 1:02d}"
            logs.append(make_log(log_id, b, p, metrics, readings_per_metric,
                                 seed=seed * 1000 + b * 100 + p))
    return logs


def write_corpus(directory: str | Path, **kwargs) -> list[Path]:
    """Write a corpus as YAML-lite files named after their log ids."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for log in make_corpus(**kwargs):
        path = directory / f"{log.id}.log.yaml"
        path.write_text(write_log_yamlite(log), encoding="utf-8")
        paths.append(path)
    return paths
