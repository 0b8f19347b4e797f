"""Log parsing, per-metric series extraction, and the CSV intermediate.

Two interchange formats are supported:

* YAML-lite, a strict line-oriented subset of YAML (2-space indent, no
  anchors/aliases, LF newlines)::

      log:
        id: batch14_part01
        batch: batch14
        machine: MaxxTurn45        # unknown keys are kept as meta
      events:
        - name: cut
          time: 2021-03-01T10:00:00.000+00:00
          data:
            load_y: 1.25
        - name: idle
          time: 2021-03-01T10:00:00.040+00:00

* XES-lite, a single ``<trace>`` XML document::

      <trace id="batch14_part01" batch="batch14">
        <meta key="machine" v="MaxxTurn45"/>
        <event name="cut" time="2021-03-01T10:00:00.000+00:00">
          <val key="load_y" v="1.25"/>
        </event>
      </trace>

Both parsers produce the same ``LogFile`` for equivalent content, and
``parse(write(log)) == log`` holds for either format.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .model import Event, LogFile, MetricId, Series, TimestampMs

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ONE_MS = timedelta(milliseconds=1)

CSV_HEADER = "timestamp_ms,value"

_BATCH_PREFIX = re.compile(r"^(batch\d+)_")


class ParseError(ValueError):
    """Malformed log document; `line` is 1-based where known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class CsvError(ValueError):
    """Malformed series CSV; `row` is the 1-based line number in the text."""

    def __init__(self, message: str, row: int):
        self.row = row
        super().__init__(f"row {row}: {message}")


# ---------------------------------------------------------------------------
# timestamps

def parse_timestamp(text: str, line: int | None = None) -> TimestampMs:
    """ISO-8601 with UTC offset -> epoch milliseconds (sub-ms truncated)."""
    raw = text.strip()
    normalized = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    try:
        dt = datetime.fromisoformat(normalized)
    except ValueError:
        raise ParseError(f"unparsable timestamp {raw!r}", line) from None
    if dt.tzinfo is None:
        raise ParseError(f"timestamp {raw!r} is missing a UTC offset", line)
    return (dt - _EPOCH) // _ONE_MS


def format_timestamp(ms: TimestampMs) -> str:
    """Epoch milliseconds -> canonical UTC ISO-8601 with millisecond precision."""
    return (_EPOCH + ms * _ONE_MS).isoformat(timespec="milliseconds")


# ---------------------------------------------------------------------------
# ingest configuration

@dataclass
class IngestConfig:
    """What to extract and how log files map to batches.

    `metrics` empty means every observed metric. Batch resolution order:
    explicit `batch_of` entry, then a `batchNN_` prefix on the file name or
    log id, then the batch recorded in the log itself, then "default".
    """

    metrics: list[MetricId] = field(default_factory=list)
    batch_of: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for metric in self.metrics:
            if not metric:
                raise ValueError("requested metric ids must be non-empty")

    def assign_batch(self, log_id: str, filename: str | None = None,
                     parsed_batch: str | None = None) -> str:
        if log_id in self.batch_of:
            return self.batch_of[log_id]
        for candidate in (filename, log_id):
            if candidate:
                match = _BATCH_PREFIX.match(candidate)
                if match:
                    return match.group(1)
        return parsed_batch or "default"


# ---------------------------------------------------------------------------
# YAML-lite

_KEY_VALUE = re.compile(r"^([^:\s][^:]*):(?: (.*))?$")


def _split_key_value(content: str, line_no: int) -> tuple[str, str]:
    match = _KEY_VALUE.match(content)
    if not match:
        raise ParseError(f"expected 'key: value', got {content!r}", line_no)
    return match.group(1), (match.group(2) or "").strip()


def parse_log_yamlite(text: str) -> LogFile:
    """Parse a YAML-lite log document into a LogFile.

    Events arriving out of timestamp order are sorted (stable) and the log
    is flagged with meta["reordered"] = "true". Unknown keys under `log:`
    are preserved verbatim in meta.
    """
    lines = text.split("\n")
    pos = 0

    def skip_blank() -> None:
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1

    def indent_of(line: str) -> int:
        return len(line) - len(line.lstrip(" "))

    skip_blank()
    if pos >= len(lines) or lines[pos].rstrip() != "log:":
        raise ParseError("expected 'log:' as the first key", pos + 1)
    pos += 1

    header: dict[str, str] = {}
    while pos < len(lines):
        line = lines[pos]
        if not line.strip():
            pos += 1
            continue
        if indent_of(line) != 2:
            break
        key, value = _split_key_value(line.strip(), pos + 1)
        if key in header:
            raise ParseError(f"duplicate log key {key!r}", pos + 1)
        header[key] = value
        pos += 1

    skip_blank()
    if pos >= len(lines) or lines[pos].rstrip() != "events:":
        raise ParseError("expected 'events:' after the log header", pos + 1)
    pos += 1

    events: list[Event] = []
    while pos < len(lines):
        line = lines[pos]
        if not line.strip():
            pos += 1
            continue
        if not line.startswith("  - "):
            raise ParseError(f"expected an event item ('  - key: value'), got {line!r}", pos + 1)
        item_line = pos + 1
        fields: dict[str, str] = {}
        readings: dict[str, float] = {}
        key, value = _split_key_value(line[4:], pos + 1)
        fields[key] = value
        pos += 1
        while pos < len(lines):
            line = lines[pos]
            if not line.strip():
                pos += 1
                continue
            if line.startswith("  - ") or indent_of(line) < 4:
                break
            if indent_of(line) != 4:
                raise ParseError(f"bad indentation inside event item: {line!r}", pos + 1)
            key, value = _split_key_value(line.strip(), pos + 1)
            if key in fields:
                raise ParseError(f"duplicate event key {key!r}", pos + 1)
            if key == "data":
                if value:
                    raise ParseError("'data:' takes no inline value", pos + 1)
                fields[key] = ""
                pos += 1
                while pos < len(lines):
                    line = lines[pos]
                    if not line.strip():
                        pos += 1
                        continue
                    if line.startswith("  - ") or indent_of(line) < 6:
                        break
                    if indent_of(line) != 6:
                        raise ParseError(f"bad indentation inside data map: {line!r}", pos + 1)
                    metric, number = _split_key_value(line.strip(), pos + 1)
                    if metric in readings:
                        raise ParseError(f"duplicate metric {metric!r} in data map", pos + 1)
                    try:
                        parsed = float(number)
                    except ValueError:
                        raise ParseError(f"non-numeric reading {number!r} for {metric!r}", pos + 1) from None
                    if not math.isfinite(parsed):
                        raise ParseError(f"non-finite reading {number!r} for {metric!r}", pos + 1)
                    readings[metric] = parsed
                    pos += 1
            else:
                fields[key] = value
                pos += 1
        unknown = set(fields) - {"name", "time", "data"}
        if unknown:
            raise ParseError(f"unknown event key(s) {sorted(unknown)}", item_line)
        if "name" not in fields:
            raise ParseError("event is missing 'name'", item_line)
        if "time" not in fields:
            raise ParseError("event is missing 'time'", item_line)
        events.append(Event(fields["name"], parse_timestamp(fields["time"], item_line), readings))

    if not events:
        raise ParseError("document has no events", len(lines))

    log_id = header.pop("id", "")
    if not log_id:
        raise ParseError("log header is missing 'id'")
    batch = header.pop("batch", "") or "default"
    meta = dict(header)

    ordered = sorted(events, key=lambda e: e.timestamp_ms)
    if [e.timestamp_ms for e in events] != [e.timestamp_ms for e in ordered]:
        meta["reordered"] = "true"
    return LogFile(log_id, batch, ordered, meta)


def write_log_yamlite(log: LogFile) -> str:
    """Serialize a LogFile to canonical YAML-lite (meta and data keys sorted)."""
    out = ["log:", f"  id: {_scalar(log.id)}", f"  batch: {_scalar(log.batch)}"]
    for key in sorted(log.meta):
        out.append(f"  {_scalar_key(key)}: {_scalar(log.meta[key])}")
    out.append("events:")
    for event in log.events:
        out.append(f"  - name: {_scalar(event.name)}")
        out.append(f"    time: {format_timestamp(event.timestamp_ms)}")
        if event.readings:
            out.append("    data:")
            for metric in sorted(event.readings):
                out.append(f"      {_scalar_key(metric)}: {event.readings[metric]!r}")
    return "\n".join(out) + "\n"


def _scalar(value: str) -> str:
    if "\n" in value:
        raise ValueError(f"scalar value may not contain newlines: {value!r}")
    if value != value.strip():
        raise ValueError(f"scalar value may not have leading/trailing spaces: {value!r}")
    return value


def _scalar_key(key: str) -> str:
    if not key or ":" in key or "\n" in key or key != key.strip():
        raise ValueError(f"bad map key: {key!r}")
    return key


# ---------------------------------------------------------------------------
# XES-lite

def parse_log_xeslite(text: str) -> LogFile:
    """Parse a single-trace XES-lite XML document; same semantics as YAML-lite."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line = exc.position[0] if getattr(exc, "position", None) else None
        raise ParseError(f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}", line) from None
    if root.tag != "trace":
        raise ParseError(f"expected <trace> root element, got <{root.tag}>")
    log_id = root.get("id", "")
    if not log_id:
        raise ParseError("<trace> is missing the id attribute")
    batch = root.get("batch", "") or "default"

    meta: dict[str, str] = {}
    events: list[Event] = []
    for child in root:
        if child.tag == "meta":
            key = child.get("key", "")
            if not key:
                raise ParseError("<meta> is missing the key attribute")
            meta[key] = child.get("v", "")
        elif child.tag == "event":
            name = child.get("name")
            if name is None:
                raise ParseError("<event> is missing the name attribute")
            time_attr = child.get("time")
            if time_attr is None:
                raise ParseError(f"<event name={name!r}> is missing the time attribute")
            readings: dict[str, float] = {}
            for val in child:
                if val.tag != "val":
                    raise ParseError(f"unexpected <{val.tag}> inside <event>")
                metric = val.get("key", "")
                if not metric:
                    raise ParseError("<val> is missing the key attribute")
                try:
                    number = float(val.get("v", ""))
                except ValueError:
                    raise ParseError(f"non-numeric <val> {val.get('v')!r} for {metric!r}") from None
                if not math.isfinite(number):
                    raise ParseError(f"non-finite <val> for {metric!r}")
                readings[metric] = number
            events.append(Event(name, parse_timestamp(time_attr), readings))
        else:
            raise ParseError(f"unexpected <{child.tag}> inside <trace>")

    if not events:
        raise ParseError("trace has no events")
    ordered = sorted(events, key=lambda e: e.timestamp_ms)
    if [e.timestamp_ms for e in events] != [e.timestamp_ms for e in ordered]:
        meta["reordered"] = "true"
    return LogFile(log_id, batch, ordered, meta)


def write_log_xeslite(log: LogFile) -> str:
    """Serialize a LogFile to canonical XES-lite XML."""
    root = ET.Element("trace", {"id": log.id, "batch": log.batch})
    for key in sorted(log.meta):
        ET.SubElement(root, "meta", {"key": key, "v": log.meta[key]})
    for event in log.events:
        el = ET.SubElement(root, "event", {
            "name": event.name,
            "time": format_timestamp(event.timestamp_ms),
        })
        for metric in sorted(event.readings):
            ET.SubElement(el, "val", {"key": metric, "v": repr(event.readings[metric])})
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="unicode") + "\n"


# ---------------------------------------------------------------------------
# series extraction

def extract_series(log: LogFile, cfg: IngestConfig) -> tuple[list[Series], list[str]]:
    """Pull one Series per requested metric out of a log.

    Returns (series, warnings): requested metrics that never occur in the log
    are skipped and reported as warnings. Duplicate timestamps within one
    metric keep the later value, so timestamps are strictly increasing.
    """
    requested = cfg.metrics or log.observed_metrics()
    series: list[Series] = []
    warnings: list[str] = []
    for metric in requested:
        samples: list[tuple[TimestampMs, float]] = []
        for event in log.events:
            if metric not in event.readings:
                continue
            if samples and samples[-1][0] == event.timestamp_ms:
                samples[-1] = (event.timestamp_ms, event.readings[metric])
            else:
                samples.append((event.timestamp_ms, event.readings[metric]))
        if not samples:
            warnings.append(f"metric {metric!r} not present in log {log.id!r}")
            continue
        series.append(Series(metric, log.id, samples))
    return series, warnings


# ---------------------------------------------------------------------------
# CSV intermediate

def write_series_csv(series: Series) -> str:
    """Series -> `timestamp_ms,value` CSV text (exact float round trip)."""
    rows = [CSV_HEADER]
    rows.extend(f"{ts},{value!r}" for ts, value in series.samples)
    return "\n".join(rows) + "\n"


def read_series_csv(text: str, metric: MetricId, source_log: str) -> Series:
    """Inverse of write_series_csv; metric/source identity comes from the caller."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CSV_HEADER:
        raise CsvError(f"bad header, expected {CSV_HEADER!r}", 1)
    samples: list[tuple[TimestampMs, float]] = []
    for row_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise CsvError(f"expected 2 fields, got {len(parts)}", row_no)
        try:
            ts = int(parts[0])
        except ValueError:
            raise CsvError(f"non-integer timestamp {parts[0]!r}", row_no) from None
        try:
            value = float(parts[1])
        except ValueError:
            raise CsvError(f"non-numeric value {parts[1]!r}", row_no) from None
        if not math.isfinite(value):
            raise CsvError(f"non-finite value {parts[1]!r}", row_no)
        if samples and ts <= samples[-1][0]:
            raise CsvError(f"timestamp {ts} not increasing (previous {samples[-1][0]})", row_no)
        samples.append((ts, value))
    return Series(metric, source_log, samples)
