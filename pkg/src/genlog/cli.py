"""Command line pipeline runner.

Five stage subcommands plus `serve`:

    genlog ingest   --input DIR --out DIR    logs -> catalog/
    genlog train    --out DIR                catalog/ -> models/
    genlog generate --out DIR --count N      models/ -> generated/
    genlog remap    --out DIR                generated/ -> out_logs/
    genlog validate --out DIR                everything -> reports/

Exit codes: 0 success, 1 total failure (including bad usage), 2 partial
failure (some inputs processed, failures listed on stderr).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .genesis import GenRequest, ModelRegistry, SelectionSet, generate_batch
from .ingest import IngestConfig
from .neural import TrainConfig
from .pipeline import (build_registry, ingest_directory, load_catalog,
                       load_generated, load_models, remap_all, save_catalog,
                       save_generated, train_all)

EXIT_OK = 0
EXIT_TOTAL = 1
EXIT_PARTIAL = 2


class _Parser(argparse.ArgumentParser):
    # usage errors are total failures, so they exit 1, not argparse's 2
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_TOTAL, f"{self.prog}: error: {message}\n")


def _parse_config_file(path: Path) -> dict[str, str]:
    """Flat key=value text; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_TRAIN_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _apply_overrides(raw: dict[str, str]) -> tuple[TrainConfig, dict[str, str]]:
    """Split a flat config into TrainConfig overrides and batch.<id> rules."""
    train_kwargs: dict[str, object] = {}
    batch_of: dict[str, str] = {}
    for key, value in raw.items():
        if key.startswith("batch."):
            batch_of[key[len("batch."):]] = value
        elif key in _TRAIN_FIELDS:
            kind = _TRAIN_FIELDS[key]
            train_kwargs[key] = int(value) if kind == "int" else float(value)
        else:
            raise ValueError(f"unknown config key {key!r}")
    return TrainConfig(**train_kwargs), batch_of


def _load_config(args) -> tuple[TrainConfig, dict[str, str]]:
    raw = _parse_config_file(Path(args.config)) if getattr(args, "config", None) else {}
    cfg, batch_of = _apply_overrides(raw)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg, batch_of


def _metrics_list(args) -> list[str] | None:
    if getattr(args, "metrics", None):
        return [m.strip() for m in args.metrics.split(",") if m.strip()]
    return None


def cmd_ingest(args) -> int:
    _, batch_of = _load_config(args)
    cfg = IngestConfig(metrics=_metrics_list(args) or [], batch_of=batch_of)
    input_dir = Path(args.input)
    if not input_dir.is_dir():
        print(f"error: input directory {input_dir} does not exist", file=sys.stderr)
        return EXIT_TOTAL
    outcome = ingest_directory(input_dir, cfg)
    for name, error in outcome.failures:
        print(f"failed: {name}: {error}", file=sys.stderr)
    for warning in outcome.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if outcome.catalog is None:
        print("error: no log file could be ingested", file=sys.stderr)
        return EXIT_TOTAL
    index_path = save_catalog(outcome, Path(args.out))
    print(f"ingested {len(outcome.catalog.logs)} logs, "
          f"{len(outcome.catalog.index)} series, dt={outcome.dt_ms}ms -> {index_path}")
    return EXIT_PARTIAL if outcome.failures else EXIT_OK


def cmd_train(args) -> int:
    cfg, _ = _load_config(args)
    data_dir = Path(args.out)
    try:
        catalog, dt_ms = load_catalog(data_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOTAL
    manifest = train_all(catalog, dt_ms, cfg, data_dir, metrics=_metrics_list(args))
    for item in manifest["skipped"]:
        print(f"skipped: ({item['metric']}, {item['batch']}): {item['reason']}",
              file=sys.stderr)
    print(f"trained {len(manifest['models'])} models "
          f"({len(manifest['skipped'])} skipped) -> {data_dir / 'models'}")
    if not manifest["models"]:
        return EXIT_TOTAL
    return EXIT_PARTIAL if manifest["skipped"] else EXIT_OK


def _parse_cells(text: str) -> list[tuple[str, str]]:
    cells = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ValueError(f"expected metric:batch, got {item!r}")
        metric, _, batch = item.partition(":")
        cells.append((metric.strip(), batch.strip()))
    return cells


def _registry_and_selection(args, data_dir: Path) -> tuple[ModelRegistry, SelectionSet, object, int]:
    catalog, dt_ms = load_catalog(data_dir)
    models = load_models(data_dir)
    if not models:
        raise FileNotFoundError(f"no trained models under {data_dir / 'models'}")
    registry = build_registry(catalog, dt_ms, models)
    if getattr(args, "cells", None):
        cells = _parse_cells(args.cells)
    else:
        cells = sorted(models)
    if args.metrics:
        wanted = set(_metrics_list(args) or [])
        cells = [c for c in cells if c[0] in wanted]
    selection = registry.selection_for(cells)
    return registry, selection, catalog, dt_ms


def cmd_generate(args) -> int:
    data_dir = Path(args.out)
    try:
        registry, selection, catalog, dt_ms = _registry_and_selection(args, data_dir)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOTAL
    seed = args.seed if args.seed is not None else 0
    parts = generate_batch(GenRequest(selection, args.count, seed), registry)
    save_generated(parts, registry, dt_ms, data_dir, seed)
    print(f"generated {len(parts)} parts -> {data_dir / 'generated'}")
    return EXIT_OK


def cmd_remap(args) -> int:
    data_dir = Path(args.out)
    try:
        catalog, _ = load_catalog(data_dir)
        parts = load_generated(data_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOTAL
    out_logs, failures = remap_all(parts, catalog, data_dir)
    for item in failures:
        print(f"failed: part {item['index']} ({item['template']}): {item['error']}",
              file=sys.stderr)
    print(f"remapped {len(out_logs)} logs -> {data_dir / 'out_logs'}")
    if not out_logs:
        return EXIT_TOTAL
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_validate(args) -> int:
    from .pipeline import atomic_write_text, canonical_json, validation_report

    data_dir = Path(args.out)
    try:
        catalog, dt_ms = load_catalog(data_dir)
        models = load_models(data_dir)
        parts = load_generated(data_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOTAL
    registry = build_registry(catalog, dt_ms, models)
    out_logs, _ = remap_all(parts, catalog, data_dir=None)
    report = validation_report(parts, registry, out_logs, catalog)
    report_path = data_dir / "reports" / "validation.json"
    atomic_write_text(report_path, canonical_json(report))
    bad = [r for r in report["roundtrips"] if r["violations"]]
    for item in bad:
        print(f"roundtrip violations in {item['out_log']}: {item['violations']}",
              file=sys.stderr)
    print(f"validated {len(parts)} parts, {len(report['roundtrips'])} roundtrips "
          f"-> {report_path}")
    return EXIT_PARTIAL if bad else EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = Path(args.out or os.environ.get("GENLOG_DIR", "."))
    app = create_app(data_dir, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="genlog", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--out", required=out_required, default=None,
                       help="pipeline data directory")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="base RNG seed")
        p.add_argument("--metrics", help="comma-separated metric filter")

    p_ingest = sub.add_parser("ingest", help="parse logs into a series catalog")
    p_ingest.add_argument("--input", required=True, help="directory of log files")
    common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_train = sub.add_parser("train", help="train one model per (metric, batch)")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_gen = sub.add_parser("generate", help="generate new series from trained models")
    common(p_gen)
    p_gen.add_argument("--count", type=int, default=10, help="parts to generate")
    p_gen.add_argument("--cells", help="metric:batch,... selection (default: all trained)")
    p_gen.set_defaults(func=cmd_generate)

    p_remap = sub.add_parser("remap", help="embed generated series into template logs")
    common(p_remap)
    p_remap.set_defaults(func=cmd_remap)

    p_val = sub.add_parser("validate", help="write the DTW/envelope/variance report")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    common(p_serve, out_required=False)
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--static", default=None,
                         help="directory with the dashboard bundle to serve at /")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOTAL


if __name__ == "__main__":
    sys.exit(main())
