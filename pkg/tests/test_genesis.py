import numpy as np
import pytest

from genlog.genesis import (GeneratedSeries, GenRequest, ModelRegistry,
                            Provenance, SelectionSet, draw_pair, generate_batch,
                            generate_series, validate_selection)
from genlog.neural import TrainConfig, train
from genlog.resample import UniformSeries, denormalize, normalize

CFG = TrainConfig(hidden_size=8, lookback=8, max_epochs=30, seed=3)


def uniform(metric, log, values, t0=0):
    return UniformSeries(metric, log, t0, 10, np.asarray(values, dtype=np.float64))


def sine(n, phase=0.0, offset=2.0):
    return offset + np.sin(np.linspace(0, 14, n) + phase)


@pytest.fixture(scope="module")
def small_registry():
    registry = ModelRegistry()
    for batch, phase in (("b1", 0.0), ("b2", 0.9)):
        series = uniform("m", f"{batch}_log", sine(60, phase))
        registry.add_model(train(series, CFG, batch=batch))
        registry.add_input(batch, series)
    return registry


# ---------------------------------------------------------------------------
# selection

def test_selection_set_canonicalizes():
    sel = SelectionSet({"m": ["b2", "b1", "b1"]},
                       {"m": [("b2", "l2"), ("b1", "l1"), ("b1", "l1")]})
    assert sel.model_batches["m"] == ["b1", "b2"]
    assert sel.inputs["m"] == [("b1", "l1"), ("b2", "l2")]
    assert sel.metrics() == ["m"]


def test_selection_set_rejects_mismatch_and_empty():
    with pytest.raises(ValueError):
        SelectionSet({}, {})
    with pytest.raises(ValueError):
        SelectionSet({"m": ["b1"]}, {"other": [("b1", "l")]})
    with pytest.raises(ValueError):
        SelectionSet({"m": []}, {"m": [("b1", "l")]})
    with pytest.raises(ValueError):
        SelectionSet({"m": ["b1"]}, {"m": []})


def test_selection_for_and_validation(small_registry):
    sel = small_registry.selection_for([("m", "b1"), ("m", "b2")])
    assert sel.model_batches["m"] == ["b1", "b2"]
    assert sel.inputs["m"] == [("b1", "b1_log"), ("b2", "b2_log")]
    validate_selection(sel, small_registry)

    with pytest.raises(KeyError):
        small_registry.selection_for([("m", "unknown")])
    bad = SelectionSet({"m": ["b1"]}, {"m": [("b1", "missing_log")]})
    with pytest.raises(KeyError):
        validate_selection(bad, small_registry)


def test_gen_request_count_validation(small_registry):
    sel = small_registry.selection_for([("m", "b1")])
    with pytest.raises(ValueError):
        GenRequest(sel, 0, 1)


# ---------------------------------------------------------------------------
# drawing

def test_draw_pair_is_seed_deterministic(small_registry):
    sel = small_registry.selection_for([("m", "b1"), ("m", "b2")])
    a = [draw_pair(sel, "m", small_registry, np.random.default_rng(5))[2]
         for _ in range(20)]
    b = [draw_pair(sel, "m", small_registry, np.random.default_rng(5))[2]
         for _ in range(20)]
    assert a == b
    assert set(a) <= {"b1", "b2"}


def test_draw_pair_covers_all_combinations(small_registry):
    sel = small_registry.selection_for([("m", "b1"), ("m", "b2")])
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(200):
        record, series, input_batch = draw_pair(sel, "m", small_registry, rng)
        seen.add((record.batch, input_batch))
    assert seen == {("b1", "b1"), ("b1", "b2"), ("b2", "b1"), ("b2", "b2")}


# ---------------------------------------------------------------------------
# single-series generation

def test_generate_series_copies_lookback_prefix(small_registry):
    model = small_registry.models[("m", "b1")]
    series = small_registry.inputs[("m", "b2", "b2_log")]
    gen = generate_series(model, series, input_batch="b2")
    assert gen.values.shape == series.values.shape
    lb = model.lookback
    np.testing.assert_array_equal(gen.values[:lb], series.values[:lb])
    assert not np.array_equal(gen.values[lb:], series.values[lb:])
    assert gen.provenance == Provenance("m", "b1", "b2", "b2_log")
    assert np.all(np.isfinite(gen.values))


def test_generate_series_uses_model_norm(small_registry):
    # predictions live in the model's normalized space; spot-check one point
    model = small_registry.models[("m", "b1")]
    series = small_registry.inputs[("m", "b1", "b1_log")]
    gen = generate_series(model, series, input_batch="b1")
    lb = model.lookback
    from genlog.neural import predict_window

    window = normalize(series.values[:lb], model.norm)
    want = denormalize(np.array([predict_window(model.weights, window, lb)]),
                       model.norm)[0]
    assert gen.values[lb] == pytest.approx(want, rel=1e-12)


def test_generate_series_error_cases(small_registry):
    model = small_registry.models[("m", "b1")]
    with pytest.raises(ValueError, match="metric"):
        generate_series(model, uniform("other", "l", sine(40)))
    with pytest.raises(ValueError, match="too short"):
        generate_series(model, uniform("m", "l", sine(model.lookback)))


# ---------------------------------------------------------------------------
# batch generation

def test_generate_batch_shapes_and_template_rule(small_registry):
    sel = small_registry.selection_for([("m", "b1"), ("m", "b2")])
    parts = generate_batch(GenRequest(sel, 5, seed=9), small_registry)
    assert [p.index for p in parts] == [0, 1, 2, 3, 4]
    for part in parts:
        assert set(part.series) == {"m"}
        # template comes from the first metric's drawn input log
        assert part.template_log == part.series["m"].provenance.input_log


def test_generate_batch_is_seed_deterministic(small_registry):
    sel = small_registry.selection_for([("m", "b1"), ("m", "b2")])
    a = generate_batch(GenRequest(sel, 6, seed=4), small_registry)
    b = generate_batch(GenRequest(sel, 6, seed=4), small_registry)
    for pa, pb in zip(a, b):
        assert pa.template_log == pb.template_log
        assert pa.series["m"].provenance == pb.series["m"].provenance
        np.testing.assert_array_equal(pa.series["m"].values, pb.series["m"].values)


def test_generate_batch_error_carries_part_context(small_registry):
    # an input too short for the model's lookback fails with part context
    registry = ModelRegistry()
    registry.models.update(small_registry.models)
    registry.add_input("b1", uniform("m", "short_log", sine(6)))
    sel = SelectionSet({"m": ["b1"]}, {"m": [("b1", "short_log")]})
    with pytest.raises(ValueError, match=r"part 0, metric 'm'"):
        generate_batch(GenRequest(sel, 1, seed=0), registry)


def test_generate_batch_validates_upfront(small_registry):
    sel = SelectionSet({"m": ["nope"]}, {"m": [("b1", "b1_log")]})
    with pytest.raises(KeyError):
        generate_batch(GenRequest(sel, 1, seed=0), small_registry)


def test_generated_series_requires_finite_1d():
    with pytest.raises(ValueError):
        GeneratedSeries("m", np.array([[1.0]]), Provenance("m", "a", "b", "l"))
    with pytest.raises(ValueError):
        GeneratedSeries("m", np.array([float("nan")]), Provenance("m", "a", "b", "l"))


def test_cross_combination_frequencies_rough():
    # smoke version of the acceptance criterion: 2 models x 2 inputs,
    # 2000 draws, each combo near a quarter
    registry = ModelRegistry()
    rng_weights = np.random.default_rng(1)
    from genlog.neural import init_weights
    from genlog.neural import ModelRecord
    from genlog.resample import NormParams

    cfg = TrainConfig(hidden_size=4, lookback=4)
    for batch in ("b1", "b2"):
        registry.add_model(ModelRecord(
            metric="m", batch=batch, config=cfg, norm=NormParams(0.0, 1.0),
            weights=init_weights(4, rng_weights), loss_history=[1.0],
            stopped_epoch=1, best_epoch=1, best_loss=1.0))
        registry.add_input(batch, uniform("m", f"{batch}_log",
                                          np.linspace(0, 1, 6), t0=0))
    sel = registry.selection_for([("m", "b1"), ("m", "b2")])
    parts = generate_batch(GenRequest(sel, 2000, seed=123), registry)
    counts = {}
    for part in parts:
        prov = part.series["m"].provenance
        key = (prov.model_batch, prov.input_batch)
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 4
    for combo, n in counts.items():
        assert 0.2 <= n / 2000 <= 0.3, (combo, n)
