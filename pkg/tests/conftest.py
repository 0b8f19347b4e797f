"""Shared fixtures: a synthetic corpus and a small trained data directory.

Training fixtures use a deliberately small TrainConfig so the suite stays
fast; tests that probe training quality construct their own configs.
"""

from __future__ import annotations

import shutil

import pytest

from genlog.ingest import IngestConfig, extract_series
from genlog.model import Catalog
from genlog.neural import TrainConfig
from genlog.pipeline import IngestOutcome, save_catalog, train_all
from genlog.resample import common_dt

SMALL_TRAIN = TrainConfig(hidden_size=8, lookback=8, max_epochs=25, seed=0)


def build_catalog(logs) -> Catalog:
    cfg = IngestConfig()
    index = {}
    for log in logs:
        series_list, _ = extract_series(log, cfg)
        for series in series_list:
            index[(log.batch, series.metric, log.id)] = series
    return Catalog(list(logs), index)


@pytest.fixture(scope="session")
def corpus_logs():
    from genlog.corpus import make_corpus

    return make_corpus(batches=2, parts_per_batch=3, readings_per_metric=120, seed=7)


@pytest.fixture(scope="session")
def catalog(corpus_logs):
    return build_catalog(corpus_logs)


@pytest.fixture(scope="session")
def dt_ms(catalog):
    return common_dt(catalog)


@pytest.fixture(scope="session")
def trained_dir(tmp_path_factory, catalog, dt_ms):
    """Data directory with catalog + six small trained models."""
    data_dir = tmp_path_factory.mktemp("trained")
    save_catalog(IngestOutcome(catalog, dt_ms), data_dir)
    train_all(catalog, dt_ms, SMALL_TRAIN, data_dir)
    return data_dir


@pytest.fixture()
def data_dir(trained_dir, tmp_path):
    """Private mutable copy of the trained directory."""
    target = tmp_path / "data"
    shutil.copytree(trained_dir, target)
    return target
