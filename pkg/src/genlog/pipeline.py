"""Stage orchestration shared by the command line and the HTTP service.

Each stage reads the previous stage's on-disk artifacts and writes its
own, under one data directory:

    catalog/index.json            what was ingested, and the common step
    catalog/logs/<id>.yaml        canonical serialization of every log
    catalog/series/<...>.csv      one CSV per (batch, metric, log)
    models/<batch>__<metric>.json one trained model per slice
    models/manifest.json          training summary, written last
    generated/                    generated series CSVs + provenance.json
    out_logs/                     remapped full logs
    reports/validation.json       DTW / envelope / variance report

Writes are atomic (temp file + rename) and all JSON is serialized with
sorted keys, so reruns with identical inputs and seed produce a
byte-identical tree.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote, unquote

import numpy as np

from .genesis import (GeneratedPart, GeneratedSeries, GenRequest, ModelRegistry,
                      Provenance, SelectionSet, generate_batch)
from .ingest import (IngestConfig, ParseError, parse_log_xeslite, parse_log_yamlite,
                     extract_series, read_series_csv, write_log_yamlite,
                     write_series_csv)
from .model import BatchId, Catalog, LogFile, MetricId, Series
from .neural import ModelRecord, TrainConfig, record_from_json, record_to_json, train_many
from .remap import RemapError, remap_part, roundtrip_check
from .resample import UniformSeries, common_dt, resample_to_count, to_uniform
from .validate import envelope, series_stats, variance_report


def slug(name: str) -> str:
    """Filesystem-safe encoding of an arbitrary identifier (reversible)."""
    return quote(name, safe="")


def unslug(name: str) -> str:
    return unquote(name)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def derive_seed(base_seed: int, metric: MetricId, batch: BatchId) -> int:
    """Stable per-slice seed so adding a slice never shifts the others."""
    digest = hashlib.sha256(f"{base_seed}|{metric}|{batch}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)


# ---------------------------------------------------------------------------
# ingest stage

@dataclass
class IngestOutcome:
    catalog: Catalog | None
    dt_ms: int | None
    warnings: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)


def ingest_directory(input_dir: Path, cfg: IngestConfig) -> IngestOutcome:
    """Parse every log in a directory and index its series.

    Unparseable files are collected as failures, not raised; the catalog
    is None only when nothing parsed at all.
    """
    input_dir = Path(input_dir)
    paths = sorted(p for p in input_dir.iterdir()
                   if p.suffix.lower() in (".yaml", ".yml", ".xml"))
    logs: list[LogFile] = []
    index: dict[tuple[BatchId, MetricId, str], Series] = {}
    warnings: list[str] = []
    failures: list[tuple[str, str]] = []
    seen_ids: set[str] = set()

    for path in paths:
        try:
            text = path.read_text(encoding="utf-8")
            parser = parse_log_xeslite if path.suffix.lower() == ".xml" else parse_log_yamlite
            log = parser(text)
            if log.id in seen_ids:
                raise ParseError(f"duplicate log id {log.id!r}")
            batch = cfg.assign_batch(log.id, path.name, parsed_batch=log.batch)
            if batch != log.batch:
                log = LogFile(log.id, batch, log.events, log.meta)
            series_list, extract_warnings = extract_series(log, cfg)
            seen_ids.add(log.id)
            logs.append(log)
            warnings.extend(extract_warnings)
            for series in series_list:
                index[(log.batch, series.metric, log.id)] = series
        except (ValueError, OSError) as exc:
            failures.append((path.name, str(exc)))

    if not logs:
        return IngestOutcome(None, None, warnings, failures)
    catalog = Catalog(logs, index)
    try:
        dt_ms = common_dt(catalog)
    except ValueError as exc:
        failures.append(("<catalog>", str(exc)))
        return IngestOutcome(None, None, warnings, failures)
    return IngestOutcome(catalog, dt_ms, warnings, failures)


def save_catalog(outcome: IngestOutcome, data_dir: Path) -> Path:
    if outcome.catalog is None or outcome.dt_ms is None:
        raise ValueError("cannot save an empty ingest outcome")
    data_dir = Path(data_dir)
    catalog = outcome.catalog
    log_entries = []
    for log in sorted(catalog.logs, key=lambda l: l.id):
        rel = f"catalog/logs/{slug(log.id)}.yaml"
        atomic_write_text(data_dir / rel, write_log_yamlite(log))
        log_entries.append({"id": log.id, "batch": log.batch, "file": rel})
    series_entries = []
    for (batch, metric, log_id) in sorted(catalog.index):
        series = catalog.index[(batch, metric, log_id)]
        rel = f"catalog/series/{slug(batch)}__{slug(metric)}__{slug(log_id)}.csv"
        atomic_write_text(data_dir / rel, write_series_csv(series))
        series_entries.append(
            {"batch": batch, "metric": metric, "log": log_id, "file": rel})
    index = {
        "dt_ms": outcome.dt_ms,
        "metrics": catalog.metrics(),
        "batches": catalog.batches(),
        "logs": log_entries,
        "series": series_entries,
        "warnings": sorted(outcome.warnings),
        "failures": [{"file": f, "error": e} for f, e in sorted(outcome.failures)],
    }
    index_path = data_dir / "catalog" / "index.json"
    atomic_write_text(index_path, canonical_json(index))
    return index_path


def load_catalog(data_dir: Path) -> tuple[Catalog, int]:
    data_dir = Path(data_dir)
    index_path = data_dir / "catalog" / "index.json"
    if not index_path.is_file():
        raise FileNotFoundError(f"no catalog at {index_path}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    logs = []
    for entry in index["logs"]:
        text = (data_dir / entry["file"]).read_text(encoding="utf-8")
        logs.append(parse_log_yamlite(text))
    series_index: dict[tuple[BatchId, MetricId, str], Series] = {}
    for entry in index["series"]:
        text = (data_dir / entry["file"]).read_text(encoding="utf-8")
        series = read_series_csv(text, entry["metric"], entry["log"])
        series_index[(entry["batch"], entry["metric"], entry["log"])] = series
    return Catalog(logs, series_index), int(index["dt_ms"])


# ---------------------------------------------------------------------------
# training stage

def model_path(data_dir: Path, metric: MetricId, batch: BatchId) -> Path:
    return Path(data_dir) / "models" / f"{slug(batch)}__{slug(metric)}.json"


def train_slice(catalog: Catalog, dt_ms: int, metric: MetricId, batch: BatchId,
                cfg: TrainConfig) -> ModelRecord:
    """Train the model for one (metric, batch) slice of the catalog."""
    arrays = []
    for series in catalog.series_for(batch=batch, metric=metric):
        if len(series) >= 2:
            arrays.append(to_uniform(series, dt_ms).values)
    if not arrays:
        raise ValueError(f"no usable series for ({metric!r}, {batch!r})")
    return train_many(metric, batch, arrays, cfg)


def train_all(catalog: Catalog, dt_ms: int, base_cfg: TrainConfig, data_dir: Path,
              metrics: list[MetricId] | None = None) -> dict:
    """Train every (metric, batch) slice; write models, then the manifest.

    Slices that cannot train (short series and the like) are skipped and
    listed. Per-slice seeds derive from the base seed and the slice name,
    so the run is reproducible and order-independent.
    """
    data_dir = Path(data_dir)
    wanted = metrics or catalog.metrics()
    entries = []
    skipped = []
    for metric in sorted(wanted):
        for batch in catalog.batches():
            if not catalog.series_for(batch=batch, metric=metric):
                continue
            cfg = dataclasses.replace(
                base_cfg, seed=derive_seed(base_cfg.seed, metric, batch))
            try:
                record = train_slice(catalog, dt_ms, metric, batch, cfg)
            except (ValueError, ArithmeticError) as exc:
                skipped.append({"metric": metric, "batch": batch, "reason": str(exc)})
                continue
            path = model_path(data_dir, metric, batch)
            atomic_write_text(path, record_to_json(record))
            entries.append({
                "metric": metric, "batch": batch,
                "file": str(path.relative_to(data_dir)),
                "stopped_epoch": record.stopped_epoch,
                "final_loss": record.loss_history[-1],
                "best_loss": record.best_loss,
            })
    manifest = {"seed": base_cfg.seed, "models": entries, "skipped": skipped}
    atomic_write_text(data_dir / "models" / "manifest.json", canonical_json(manifest))
    return manifest


def load_models(data_dir: Path) -> dict[tuple[MetricId, BatchId], ModelRecord]:
    models_dir = Path(data_dir) / "models"
    records: dict[tuple[MetricId, BatchId], ModelRecord] = {}
    if not models_dir.is_dir():
        return records
    for path in sorted(models_dir.glob("*.json")):
        if path.name == "manifest.json":
            continue
        record = record_from_json(path.read_text(encoding="utf-8"))
        records[(record.metric, record.batch)] = record
    return records


def build_registry(catalog: Catalog, dt_ms: int,
                   models: dict[tuple[MetricId, BatchId], ModelRecord]) -> ModelRegistry:
    """Registry of trained models plus every resample-able catalog series."""
    registry = ModelRegistry()
    for record in models.values():
        registry.add_model(record)
    for (batch, metric, log_id), series in catalog.index.items():
        if len(series) >= 2:
            registry.add_input(batch, to_uniform(series, dt_ms))
    return registry


# ---------------------------------------------------------------------------
# generation + remap stages

def save_generated(parts: list[GeneratedPart], registry: ModelRegistry,
                   dt_ms: int, data_dir: Path, seed: int) -> Path:
    """Persist generated series as CSVs plus one provenance sidecar."""
    data_dir = Path(data_dir)
    part_entries = []
    for part in parts:
        series_entries = {}
        for metric in sorted(part.series):
            gen = part.series[metric]
            prov = gen.provenance
            input_series = registry.inputs[(metric, prov.input_batch, prov.input_log)]
            rel = f"generated/part{part.index:04d}__{slug(metric)}.csv"
            samples = [(int(t), float(v)) for t, v in
                       zip(input_series.timestamps(), gen.values)]
            series = Series(metric, prov.input_log, samples)
            atomic_write_text(data_dir / rel, write_series_csv(series))
            series_entries[metric] = {
                "file": rel,
                "model_batch": prov.model_batch,
                "input_batch": prov.input_batch,
                "input_log": prov.input_log,
            }
        part_entries.append({
            "index": part.index,
            "template_log": part.template_log,
            "series": series_entries,
        })
    sidecar = {"seed": seed, "count": len(parts), "dt_ms": dt_ms, "parts": part_entries}
    path = data_dir / "generated" / "provenance.json"
    atomic_write_text(path, canonical_json(sidecar))
    return path


def load_generated(data_dir: Path) -> list[GeneratedPart]:
    data_dir = Path(data_dir)
    sidecar_path = data_dir / "generated" / "provenance.json"
    if not sidecar_path.is_file():
        raise FileNotFoundError(f"no generated data at {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    parts = []
    for entry in sidecar["parts"]:
        series: dict[MetricId, GeneratedSeries] = {}
        for metric, item in entry["series"].items():
            text = (data_dir / item["file"]).read_text(encoding="utf-8")
            csv_series = read_series_csv(text, metric, item["input_log"])
            series[metric] = GeneratedSeries(
                metric=metric,
                values=np.asarray(csv_series.values(), dtype=np.float64),
                provenance=Provenance(
                    metric=metric, model_batch=item["model_batch"],
                    input_batch=item["input_batch"], input_log=item["input_log"]))
        parts.append(GeneratedPart(index=int(entry["index"]),
                                   template_log=entry["template_log"], series=series))
    return parts


def out_log_id(part: GeneratedPart) -> str:
    return f"gen{part.index:04d}_{part.template_log}"


def remap_all(parts: list[GeneratedPart], catalog: Catalog,
              data_dir: Path | None = None) -> tuple[list[LogFile], list[dict]]:
    """Remap every part; per-part failures are collected, not fatal."""
    logs_by_id = {log.id: log for log in catalog.logs}
    out_logs: list[LogFile] = []
    failures: list[dict] = []
    for part in parts:
        try:
            out_log = remap_part(part, logs_by_id, out_log_id(part))
        except RemapError as exc:
            failures.append({"index": part.index, "template": part.template_log,
                             "error": str(exc)})
            continue
        out_logs.append(out_log)
        if data_dir is not None:
            rel = f"out_logs/{slug(out_log.id)}.yaml"
            atomic_write_text(Path(data_dir) / rel, write_log_yamlite(out_log))
    return out_logs, failures


# ---------------------------------------------------------------------------
# validation stage

DTW_POINTS = 160
MAX_PAIRS_PER_METRIC = 50


def validation_report(parts: list[GeneratedPart], registry: ModelRegistry,
                      out_logs: list[LogFile] | None = None,
                      catalog: Catalog | None = None,
                      max_pairs: int = MAX_PAIRS_PER_METRIC) -> dict:
    """Quantify a generation run: envelopes, own/cross DTW, round trips.

    DTW pairs compare each generated series against the input series that
    drove it, labeled `own` when model and input batch coincide. Series
    are downsampled to DTW_POINTS before alignment to bound the quadratic
    cost; the report records that.
    """
    metrics_report: dict[str, dict] = {}
    all_metrics = sorted({m for part in parts for m in part.series})
    for metric in all_metrics:
        gathered = [(part.series[metric], part.index) for part in parts
                    if metric in part.series]
        ref_key = min((g.provenance.input_batch, g.provenance.input_log)
                      for g, _ in gathered)
        reference = registry.inputs[(metric, ref_key[0], ref_key[1])]
        ref_values = reference.values
        resampled = [resample_to_count(g.values, ref_values.size) for g, _ in gathered]
        env = envelope(resampled)

        own_pairs, cross_pairs = [], []
        for gen, _ in gathered[:max_pairs]:
            prov = gen.provenance
            source = registry.inputs[(metric, prov.input_batch, prov.input_log)]
            points = min(DTW_POINTS, gen.values.size, source.values.size)
            pair = (resample_to_count(gen.values, points),
                    resample_to_count(source.values, points))
            (own_pairs if prov.model_batch == prov.input_batch else cross_pairs).append(pair)
        variance = None
        if own_pairs and cross_pairs:
            variance = variance_report(own_pairs, cross_pairs).to_jsonable()
        metrics_report[metric] = {
            "count": len(gathered),
            "real_log": ref_key[1],
            "real_batch": ref_key[0],
            "real": ref_values.tolist(),
            "real_stats": series_stats(ref_values),
            "envelope": env.to_jsonable(),
            "dtw_points": DTW_POINTS,
            "own_pairs": len(own_pairs),
            "cross_pairs": len(cross_pairs),
            "variance": variance,
        }

    roundtrips = []
    if out_logs is not None and catalog is not None:
        logs_by_id = {log.id: log for log in catalog.logs}
        by_out_id = {out_log_id(part): part for part in parts}
        for out_log in out_logs:
            part = by_out_id.get(out_log.id)
            if part is None:
                continue
            report = roundtrip_check(logs_by_id[part.template_log], out_log)
            roundtrips.append({
                "out_log": out_log.id,
                "template": part.template_log,
                "violations": report.violations,
            })
    return {"metrics": metrics_report, "roundtrips": roundtrips}


def run_generation(registry: ModelRegistry, selection: SelectionSet, count: int,
                   seed: int, catalog: Catalog,
                   data_dir: Path | None = None) -> dict:
    """Generate, remap, and validate in one pass; optionally persist."""
    parts = generate_batch(GenRequest(selection, count, seed), registry)
    out_logs, failures = remap_all(parts, catalog, data_dir)
    report = validation_report(parts, registry, out_logs, catalog)
    if data_dir is not None:
        atomic_write_text(Path(data_dir) / "reports" / "validation.json",
                          canonical_json(report))
    return {"parts": parts, "out_logs": out_logs, "remap_failures": failures,
            "report": report}
