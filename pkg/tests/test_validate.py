import math

import numpy as np
import pytest

from genlog.validate import (DtwResult, Envelope, dtw, envelope, series_stats,
                             variance_report)


def dtw_bruteforce(a, b):
    """Exhaustive DFS over every monotone alignment path. Exponential, only
    for tiny instances; pruning on the running total is safe because local
    costs are nonnegative."""
    n, m = len(a), len(b)
    best = math.inf

    def go(i, j, acc):
        nonlocal best
        acc += abs(a[i] - b[j])
        if acc >= best:
            return
        if i == n - 1 and j == m - 1:
            best = acc
            return
        if i + 1 < n and j + 1 < m:
            go(i + 1, j + 1, acc)
        if j + 1 < m:
            go(i, j + 1, acc)
        if i + 1 < n:
            go(i + 1, j, acc)

    go(0, 0, 0.0)
    return best


def path_is_valid(path, n, m):
    if path[0] != (0, 0) or path[-1] != (n - 1, m - 1):
        return False
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        di, dj = i1 - i0, j1 - j0
        if (di, dj) not in ((1, 0), (0, 1), (1, 1)):
            return False
    return True


# ---------------------------------------------------------------------------
# dtw

def test_dtw_hand_cases():
    assert dtw([0.0], [0.0]).distance == 0.0
    assert dtw([1.0], [4.0]).distance == 3.0
    # (0,0)->(0,1)->(1,2) costs 0+1+0 = 1; the diagonal route costs 2
    r = dtw([0.0, 3.0], [0.0, 1.0, 3.0])
    assert r.distance == 1.0
    assert r.path == [(0, 0), (0, 1), (1, 2)]


def test_dtw_identity_symmetry_nonneg():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = list(rng.normal(0, 2, size=int(rng.integers(1, 10))))
        b = list(rng.normal(0, 2, size=int(rng.integers(1, 10))))
        assert dtw(a, a).distance == 0.0
        ab, ba = dtw(a, b), dtw(b, a)
        assert ab.distance == pytest.approx(ba.distance, abs=1e-12)
        assert ab.distance >= 0.0


def test_dtw_equals_exhaustive_oracle():
    rng = np.random.default_rng(7)
    for _ in range(120):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        a = [float(x) for x in rng.normal(0, 3, size=n)]
        b = [float(x) for x in rng.normal(0, 3, size=m)]
        got = dtw(a, b)
        want = dtw_bruteforce(a, b)
        assert got.distance == pytest.approx(want, abs=1e-9)
        assert path_is_valid(got.path, n, m)
        # the reported path must actually cost the reported distance
        path_cost = sum(abs(a[i] - b[j]) for i, j in got.path)
        assert path_cost == pytest.approx(got.distance, abs=1e-9)


def test_dtw_rejects_empty():
    with pytest.raises(ValueError):
        dtw([], [1.0])
    with pytest.raises(ValueError):
        dtw([1.0], [])


def test_dtw_result_monotone_path_on_longer_series():
    rng = np.random.default_rng(11)
    a = list(rng.normal(0, 1, size=40))
    b = list(rng.normal(0, 1, size=55))
    r = dtw(a, b)
    assert path_is_valid(r.path, 40, 55)


# ---------------------------------------------------------------------------
# stats and envelope

def test_series_stats_hand_values():
    stats = series_stats([1.0, 2.0, 3.0, 4.0])
    assert stats["mean"] == 2.5
    assert stats["variance"] == pytest.approx(1.25)  # population variance
    assert stats["std"] == pytest.approx(math.sqrt(1.25))
    assert stats["min"] == 1.0 and stats["max"] == 4.0
    with pytest.raises(ValueError):
        series_stats([])


def test_envelope_hand_case():
    env = envelope([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]])
    assert env.min.tolist() == [1.0, 10.0]
    assert env.max.tolist() == [3.0, 30.0]
    assert env.median.tolist() == [2.0, 20.0]
    # linear-interpolation quartiles of {1,2,3}: 1.5 and 2.5
    assert env.q25.tolist() == [1.5, 15.0]
    assert env.q75.tolist() == [2.5, 25.0]


def test_envelope_monotone_per_index():
    rng = np.random.default_rng(4)
    series = [rng.normal(0, 5, size=30) for _ in range(9)]
    env = envelope(series)
    assert np.all(env.min <= env.q25)
    assert np.all(env.q25 <= env.median)
    assert np.all(env.median <= env.q75)
    assert np.all(env.q75 <= env.max)


def test_envelope_single_series_collapses():
    env = envelope([[1.0, 2.0, 3.0]])
    for field in (env.min, env.q25, env.median, env.q75, env.max):
        assert field.tolist() == [1.0, 2.0, 3.0]


def test_envelope_rejects_ragged_and_empty():
    with pytest.raises(ValueError):
        envelope([])
    with pytest.raises(ValueError) as err:
        envelope([[1.0, 2.0], [1.0]])
    assert "1" in str(err.value)


def test_envelope_jsonable_keys():
    env = envelope([[1.0, 2.0]])
    assert set(env.to_jsonable()) == {"min", "q25", "median", "q75", "max"}


# ---------------------------------------------------------------------------
# variance report

def test_variance_report_degenerate_control():
    a = [1.0, 2.0, 3.0]
    report = variance_report(own_pairs=[(a, a)], cross_pairs=[(a, [2.0, 3.0, 4.0])])
    assert report.own_mean == 0.0
    assert report.degenerate_model
    assert report.cross_mean > 0.0
    assert report.cross_exceeds_own


def test_variance_report_single_pairs_well_formed():
    report = variance_report(own_pairs=[([1.0, 2.0], [1.0, 2.5])],
                             cross_pairs=[([1.0, 2.0], [5.0, 9.0])])
    assert report.own_count == report.cross_count == 1
    assert report.own_mean > 0.0
    assert not report.degenerate_model
    data = report.to_jsonable()
    assert set(data) == {"own_mean", "cross_mean", "own_count", "cross_count",
                         "degenerate_model", "cross_exceeds_own"}


def test_variance_report_empty_group_errors():
    with pytest.raises(ValueError):
        variance_report([], [([1.0], [1.0])])
    with pytest.raises(ValueError):
        variance_report([([1.0], [1.0])], [])
