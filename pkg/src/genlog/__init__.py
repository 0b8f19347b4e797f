"""Synthetic process-log generation from per-metric sensor models.

The pipeline turns a directory of process event logs into per-metric
time series, trains one small recurrent model per (metric, batch)
slice, generates new series by cross-combining trained models with
recorded input series, embeds the results back into template logs, and
quantifies how close generated data stays to the originals.
"""

from .genesis import (GeneratedPart, GeneratedSeries, GenRequest, ModelRegistry,
                      Provenance, SelectionSet, generate_batch, generate_series)
from .ingest import (CsvError, IngestConfig, ParseError, extract_series,
                     parse_log_xeslite, parse_log_yamlite, read_series_csv,
                     write_log_xeslite, write_log_yamlite, write_series_csv)
from .model import Catalog, Event, LogFile, Series
from .neural import (ModelRecord, TrainConfig, record_from_json, record_to_json,
                     train, train_many)
from .pipeline import (IngestOutcome, build_registry, ingest_directory,
                       load_catalog, load_generated, load_models, remap_all,
                       run_generation, save_catalog, save_generated, train_all,
                       validation_report)
from .remap import (EmbedPlan, EmbedSlot, RemapError, RoundtripReport,
                    build_embed_plan, embed, remap_part, roundtrip_check)
from .resample import (NormParams, UniformSeries, common_dt, denormalize,
                       fit_norm, normalize, resample_to_count, to_uniform)
from .validate import (DtwResult, Envelope, VarianceReport, dtw, envelope,
                       series_stats, variance_report)

__version__ = "0.1.0"

__all__ = [
    "Catalog", "CsvError", "DtwResult", "EmbedPlan", "EmbedSlot", "Envelope",
    "Event", "GenRequest", "GeneratedPart", "GeneratedSeries", "IngestConfig",
    "IngestOutcome", "LogFile", "ModelRecord", "ModelRegistry", "NormParams",
    "ParseError", "Provenance", "RemapError", "RoundtripReport", "SelectionSet",
    "Series", "TrainConfig", "UniformSeries", "VarianceReport", "__version__",
    "build_embed_plan", "build_registry", "common_dt", "denormalize", "dtw",
    "embed", "envelope", "extract_series", "fit_norm", "generate_batch",
    "generate_series", "ingest_directory", "load_catalog", "load_generated",
    "load_models", "normalize", "parse_log_xeslite", "parse_log_yamlite",
    "read_series_csv", "record_from_json", "record_to_json", "remap_all",
    "remap_part", "resample_to_count", "roundtrip_check", "run_generation",
    "save_catalog", "save_generated", "series_stats", "to_uniform", "train",
    "train_all", "train_many", "validation_report", "variance_report",
    "write_log_xeslite", "write_log_yamlite", "write_series_csv",
]
