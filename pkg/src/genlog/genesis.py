"""Generating new series by crossing trained models with real inputs.

Every generation draw pairs a model with an input series, both picked
uniformly at random and independently from whatever the selection allows.
A model trained on one batch driven by a series from another batch yields
output blending the dynamics of both, which is the point: with two
batches selected there are four (model, input) pairings and each should
appear about a quarter of the time over many draws.

The model is applied teacher-forced, one step ahead: the first `lookback`
outputs copy the input, and every later position is the model's
prediction from the real (not previously generated) preceding window.
Inputs are normalized with the model's own training normalization and the
output is mapped back through it, so generated values live in the input's
physical units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import BatchId, MetricId
from .neural import ModelRecord, forward_last
from .resample import UniformSeries, denormalize, normalize


@dataclass(frozen=True)
class Provenance:
    """Which model and which input series produced a generated series."""

    metric: MetricId
    model_batch: BatchId
    input_batch: BatchId
    input_log: str


@dataclass
class GeneratedSeries:
    """Generated values in physical units, tagged with their origin."""

    metric: MetricId
    values: np.ndarray
    provenance: Provenance

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("values must be a non-empty 1-D array")
        if not np.isfinite(self.values).all():
            raise ValueError("generated values must be finite")


@dataclass
class GeneratedPart:
    """One synthetic process run: a generated series per selected metric.

    `template_log` is the input log drawn for the alphabetically first
    metric; the remapping stage embeds every metric into that log.
    """

    index: int
    template_log: str
    series: dict[MetricId, GeneratedSeries] = field(default_factory=dict)


@dataclass
class SelectionSet:
    """What generation may draw from, per metric.

    `model_batches[metric]` lists the batches whose models are active;
    `inputs[metric]` lists the (batch, log) series eligible as inputs.
    """

    model_batches: dict[MetricId, list[BatchId]]
    inputs: dict[MetricId, list[tuple[BatchId, str]]]

    def __post_init__(self) -> None:
        if not self.model_batches:
            raise ValueError("selection is empty")
        if set(self.model_batches) != set(self.inputs):
            raise ValueError("selection lists different metrics for models and inputs")
        for metric in self.model_batches:
            if not self.model_batches[metric]:
                raise ValueError(f"no active model batches for metric {metric!r}")
            if not self.inputs[metric]:
                raise ValueError(f"no eligible input series for metric {metric!r}")
        # Deterministic draw order regardless of construction order.
        self.model_batches = {m: sorted(set(bs)) for m, bs in self.model_batches.items()}
        self.inputs = {m: sorted(set(pairs)) for m, pairs in self.inputs.items()}

    def metrics(self) -> list[MetricId]:
        return sorted(self.model_batches)


@dataclass(frozen=True)
class GenRequest:
    selection: SelectionSet
    count: int
    seed: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


@dataclass
class ModelRegistry:
    """Trained models plus the uniform input series they can be driven by."""

    models: dict[tuple[MetricId, BatchId], ModelRecord] = field(default_factory=dict)
    inputs: dict[tuple[MetricId, BatchId, str], UniformSeries] = field(default_factory=dict)

    def add_model(self, record: ModelRecord) -> None:
        self.models[(record.metric, record.batch)] = record

    def add_input(self, batch: BatchId, series: UniformSeries) -> None:
        self.inputs[(series.metric, batch, series.source_log)] = series

    def selection_for(self, cells: list[tuple[MetricId, BatchId]]) -> SelectionSet:
        """Selection drawing models from `cells` and inputs from their logs."""
        model_batches: dict[MetricId, list[BatchId]] = {}
        for metric, batch in cells:
            if (metric, batch) not in self.models:
                raise KeyError(f"no trained model for cell ({metric!r}, {batch!r})")
            model_batches.setdefault(metric, []).append(batch)
        inputs = {
            metric: [(batch, log) for (m, batch, log) in self.inputs
                     if m == metric and batch in set(batches)]
            for metric, batches in model_batches.items()
        }
        return SelectionSet(model_batches, inputs)


def validate_selection(selection: SelectionSet, registry: ModelRegistry) -> None:
    """Every referenced model and input series must exist in the registry."""
    for metric in selection.metrics():
        for batch in selection.model_batches[metric]:
            if (metric, batch) not in registry.models:
                raise KeyError(f"selection references untrained model ({metric!r}, {batch!r})")
        for batch, log in selection.inputs[metric]:
            if (metric, batch, log) not in registry.inputs:
                raise KeyError(
                    f"selection references unknown input series ({metric!r}, {batch!r}, {log!r})")


def draw_pair(selection: SelectionSet, metric: MetricId, registry: ModelRegistry,
              rng: np.random.Generator) -> tuple[ModelRecord, UniformSeries, BatchId]:
    """Uniformly draw a model and, independently, an input series."""
    batches = selection.model_batches[metric]
    model_batch = batches[int(rng.integers(len(batches)))]
    record = registry.models[(metric, model_batch)]
    pairs = selection.inputs[metric]
    input_batch, input_log = pairs[int(rng.integers(len(pairs)))]
    return record, registry.inputs[(metric, input_batch, input_log)], input_batch


def generate_series(model: ModelRecord, input_series: UniformSeries,
                    input_batch: BatchId = "default") -> GeneratedSeries:
    """Drive one model with one input series; output length equals input length."""
    if input_series.metric != model.metric:
        raise ValueError(
            f"metric mismatch: model is for {model.metric!r}, input is {input_series.metric!r}")
    lookback = model.lookback
    if len(input_series) < lookback + 1:
        raise ValueError(
            f"input series of length {len(input_series)} is too short for "
            f"lookback {lookback} (need at least {lookback + 1} values)")
    scaled = normalize(input_series.values, model.norm)
    out = scaled.copy()
    windows = sliding_window_view(scaled, lookback)[:-1]
    predictions, _ = forward_last(model.weights, np.ascontiguousarray(windows))
    out[lookback:] = predictions
    return GeneratedSeries(
        metric=model.metric, values=denormalize(out, model.norm),
        provenance=Provenance(metric=model.metric, model_batch=model.batch,
                              input_batch=input_batch,
                              input_log=input_series.source_log))


def generate_batch(req: GenRequest, registry: ModelRegistry) -> list[GeneratedPart]:
    """Generate `req.count` synthetic parts under one selection.

    Draw order is fixed (parts outermost, metrics alphabetical inside) so
    the same seed reproduces the same output exactly.
    """
    validate_selection(req.selection, registry)
    rng = np.random.default_rng(req.seed)
    metrics = req.selection.metrics()
    parts: list[GeneratedPart] = []
    for index in range(req.count):
        series: dict[MetricId, GeneratedSeries] = {}
        for metric in metrics:
            record, input_series, input_batch = draw_pair(
                req.selection, metric, registry, rng)
            try:
                series[metric] = generate_series(record, input_series, input_batch)
            except ValueError as exc:
                raise ValueError(f"part {index}, metric {metric!r}: {exc}") from exc
        template = series[metrics[0]].provenance.input_log
        parts.append(GeneratedPart(index=index, template_log=template, series=series))
    return parts
