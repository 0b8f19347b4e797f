import pytest

from genlog.ingest import (CSV_HEADER, CsvError, IngestConfig, ParseError,
                           extract_series, format_timestamp, parse_log_xeslite,
                           parse_log_yamlite, parse_timestamp, read_series_csv,
                           write_log_xeslite, write_log_yamlite, write_series_csv)
from genlog.model import Event, LogFile, Series


# ---------------------------------------------------------------------------
# timestamps

# Epoch values cross-checked with GNU date:
#   date -u -d "2021-03-01T10:00:00Z" +%s      -> 1614592800
#   date -u -d "1999-12-31T23:59:59.999Z" +%s%3N -> 946684799999
def test_parse_timestamp_known_values():
    assert parse_timestamp("2021-03-01T10:00:00.000+00:00") == 1_614_592_800_000
    assert parse_timestamp("2021-03-01T10:00:00Z") == 1_614_592_800_000
    assert parse_timestamp("1999-12-31T23:59:59.999Z") == 946_684_799_999


def test_parse_timestamp_respects_offsets():
    # 10:00 at +02:00 is 08:00 UTC
    assert (parse_timestamp("2021-03-01T10:00:00+02:00")
            == parse_timestamp("2021-03-01T08:00:00Z"))


def test_parse_timestamp_requires_offset():
    with pytest.raises(ValueError):
        parse_timestamp("2021-03-01T10:00:00")


def test_parse_timestamp_truncates_microseconds():
    assert parse_timestamp("2021-03-01T10:00:00.123456Z") == 1_614_592_800_123


def test_format_timestamp_round_trip():
    for ms in (0, 1, 999, 1_614_592_800_000, 946_684_799_999):
        assert parse_timestamp(format_timestamp(ms)) == ms
    assert format_timestamp(1_614_592_800_000) == "2021-03-01T10:00:00.000+00:00"


# ---------------------------------------------------------------------------
# YAML-lite

SAMPLE_YAML = """log:
  id: batch14_part03
  batch: batch14
  machine: MaxxTurn45
events:
  - name: clamp
    time: 2021-03-01T10:00:00.000+00:00
    data:
      load_x: 1.5
  - name: cut
    time: 2021-03-01T10:00:00.040+00:00
    data:
      load_x: 1.75
      spindle: 2040.0
  - name: release
    time: 2021-03-01T10:00:01.000+00:00
    data:
"""


def expected_sample_log():
    t0 = 1_614_592_800_000
    return LogFile(
        "batch14_part03", "batch14",
        [Event("clamp", t0, {"load_x": 1.5}),
         Event("cut", t0 + 40, {"load_x": 1.75, "spindle": 2040.0}),
         Event("release", t0 + 1000, {})],
        {"machine": "MaxxTurn45"})


def test_parse_yamlite_hand_written():
    assert parse_log_yamlite(SAMPLE_YAML) == expected_sample_log()


def test_write_yamlite_round_trip():
    log = expected_sample_log()
    assert parse_log_yamlite(write_log_yamlite(log)) == log


def test_yamlite_round_trip_over_corpus(corpus_logs):
    for log in corpus_logs:
        assert parse_log_yamlite(write_log_yamlite(log)) == log


def test_yamlite_unsorted_events_get_reordered():
    text = SAMPLE_YAML.replace("10:00:00.000", "10:00:09.000")
    log = parse_log_yamlite(text)
    assert [e.timestamp_ms for e in log.events] == sorted(
        e.timestamp_ms for e in log.events)
    assert log.meta["reordered"] == "true"


@pytest.mark.parametrize("mutation, hint", [
    (lambda t: t.replace("    time: 2021-03-01T10:00:00.000+00:00\n", ""), "time"),
    (lambda t: t.replace("      load_x: 1.75\n", "      load_x: 1.75\n      load_x: 2.0\n"),
     "duplicate"),
    (lambda t: t.replace("load_x: 1.5", "load_x: not_a_number"), "number"),
    (lambda t: "garbage\n" + t, "log"),
])
def test_yamlite_syntax_errors_carry_line_numbers(mutation, hint):
    with pytest.raises(ParseError) as err:
        parse_log_yamlite(mutation(SAMPLE_YAML))
    assert err.value.line >= 1
    assert hint.lower() in str(err.value).lower()


def test_yamlite_missing_id_rejected():
    with pytest.raises(ParseError, match="id"):
        parse_log_yamlite(SAMPLE_YAML.replace("  id: batch14_part03\n", ""))


def test_yamlite_duplicate_meta_key_rejected():
    text = SAMPLE_YAML.replace("  machine: MaxxTurn45\n",
                               "  machine: a\n  machine: b\n")
    with pytest.raises(ParseError):
        parse_log_yamlite(text)


# ---------------------------------------------------------------------------
# XES-lite

def test_xeslite_round_trip():
    log = expected_sample_log()
    assert parse_log_xeslite(write_log_xeslite(log)) == log


def test_xeslite_and_yamlite_twins_parse_equal():
    log = expected_sample_log()
    assert parse_log_xeslite(write_log_xeslite(log)) == parse_log_yamlite(
        write_log_yamlite(log))


def test_xeslite_round_trip_over_corpus(corpus_logs):
    for log in corpus_logs:
        assert parse_log_xeslite(write_log_xeslite(log)) == log


def test_xeslite_rejects_malformed_xml():
    with pytest.raises(ParseError):
        parse_log_xeslite("<trace id='x'")
    with pytest.raises(ParseError):
        parse_log_xeslite("<wrong/>")


# ---------------------------------------------------------------------------
# batch assignment

def test_assign_batch_precedence():
    cfg = IngestConfig(batch_of={"special": "batch99"})
    # explicit map wins
    assert cfg.assign_batch("special", "batch14_x.yaml", "batchZ") == "batch99"
    # filename prefix next
    assert cfg.assign_batch("other", "batch14_x.yaml", "batchZ") == "batch14"
    # log id prefix next
    assert cfg.assign_batch("batch7_part", None, "batchZ") == "batch7"
    # parsed batch next, then default
    assert cfg.assign_batch("other", "x.yaml", "batchZ") == "batchZ"
    assert cfg.assign_batch("other", "x.yaml", None) == "default"


# ---------------------------------------------------------------------------
# series extraction

def test_extract_series_groups_by_metric():
    log = expected_sample_log()
    series, warnings = extract_series(log, IngestConfig())
    by_metric = {s.metric: s for s in series}
    assert set(by_metric) == {"load_x", "spindle"}
    assert by_metric["load_x"].values() == [1.5, 1.75]
    assert by_metric["spindle"].values() == [2040.0]
    assert warnings == []


def test_extract_series_metric_filter():
    log = expected_sample_log()
    series, _ = extract_series(log, IngestConfig(metrics=["spindle"]))
    assert [s.metric for s in series] == ["spindle"]


def test_extract_series_duplicate_timestamp_last_wins():
    log = LogFile("p", "b", [
        Event("a", 10, {"m": 1.0}),
        Event("b", 10, {"m": 2.0}),
        Event("c", 20, {"m": 3.0}),
    ], {})
    series, _ = extract_series(log, IngestConfig())
    assert series[0].samples == [(10, 2.0), (20, 3.0)]


def test_extract_series_absent_requested_metric_warns():
    log = expected_sample_log()
    series, warnings = extract_series(log, IngestConfig(metrics=["load_x", "absent"]))
    assert [s.metric for s in series] == ["load_x"]
    assert any("absent" in w for w in warnings)


# ---------------------------------------------------------------------------
# CSV

def test_csv_header_and_round_trip():
    series = Series("m", "log", [(0, 0.1), (40, 1.0 / 3.0), (81, -2.5e-17)])
    text = write_series_csv(series)
    assert text.splitlines()[0] == CSV_HEADER == "timestamp_ms,value"
    back = read_series_csv(text, "m", "log")
    assert back.samples == series.samples  # float repr round trips exactly


def test_csv_errors_carry_row_numbers():
    with pytest.raises(CsvError):
        read_series_csv("wrong,header\n0,1.0\n", "m", "log")
    # rows are physical 1-based lines, the header being row 1
    with pytest.raises(CsvError) as err:
        read_series_csv("timestamp_ms,value\n0,1.0\nx,2.0\n", "m", "log")
    assert err.value.row == 3
    with pytest.raises(CsvError) as err:
        read_series_csv("timestamp_ms,value\n5,1.0\n5,2.0\n", "m", "log")
    assert err.value.row == 3
