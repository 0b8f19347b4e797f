"""Quantitative checks on generated data.

Dynamic time warping measures how far a generated series strays from a
real one while tolerating local time shifts; per-index envelopes show the
spread of a whole generated population against the real series. The
variance report condenses the expected behavior: a model replaying its
own training input should land close to it (small but nonzero distance),
while a model driven by another run's input should land farther away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class DtwResult:
    """Alignment distance and one minimum-cost warping path."""

    distance: float
    path: list[tuple[int, int]]


@dataclass
class Envelope:
    """Per-index order statistics across a collection of series."""

    min: np.ndarray
    q25: np.ndarray
    median: np.ndarray
    q75: np.ndarray
    max: np.ndarray

    def __len__(self) -> int:
        return int(self.min.size)

    def to_jsonable(self) -> dict:
        return {
            "min": self.min.tolist(),
            "q25": self.q25.tolist(),
            "median": self.median.tolist(),
            "q75": self.q75.tolist(),
            "max": self.max.tolist(),
        }


@dataclass
class VarianceReport:
    own_mean: float
    cross_mean: float
    own_count: int
    cross_count: int
    degenerate_model: bool

    @property
    def cross_exceeds_own(self) -> bool:
        return self.cross_mean > self.own_mean

    def to_jsonable(self) -> dict:
        return {
            "own_mean": self.own_mean,
            "cross_mean": self.cross_mean,
            "own_count": self.own_count,
            "cross_count": self.cross_count,
            "degenerate_model": self.degenerate_model,
            "cross_exceeds_own": self.cross_exceeds_own,
        }


def dtw(a, b) -> DtwResult:
    """Minimum-cost monotone alignment with local cost |a_i - b_j|.

    Classic O(n*m) dynamic program. The path is recovered by backtracking;
    at cost ties the diagonal predecessor wins over the left one, which
    wins over the up one. Distances are symmetric because both the step
    pattern and the cost are.
    """
    va = [float(v) for v in np.asarray(a, dtype=np.float64)]
    vb = [float(v) for v in np.asarray(b, dtype=np.float64)]
    if not va or not vb:
        raise ValueError("dtw inputs must be non-empty")
    n, m = len(va), len(vb)

    # Plain-list DP: scalar indexing dominates here and Python lists beat
    # numpy element access by a wide margin at these sizes.
    acc: list[list[float]] = []
    prev: list[float] = []
    for i in range(n):
        ai = va[i]
        row = [0.0] * m
        if i == 0:
            row[0] = abs(ai - vb[0])
            for j in range(1, m):
                row[j] = row[j - 1] + abs(ai - vb[j])
        else:
            row[0] = prev[0] + abs(ai - vb[0])
            for j in range(1, m):
                best = prev[j - 1]
                if row[j - 1] < best:
                    best = row[j - 1]
                if prev[j] < best:
                    best = prev[j]
                row[j] = best + abs(ai - vb[j])
        acc.append(row)
        prev = row

    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, left, up = acc[i - 1][j - 1], acc[i][j - 1], acc[i - 1][j]
            best = min(diag, left, up)
            if diag == best:
                i, j = i - 1, j - 1
            elif left == best:
                j -= 1
            else:
                i -= 1
        path.append((i, j))
    path.reverse()
    return DtwResult(distance=acc[n - 1][m - 1], path=path)


def series_stats(values) -> dict[str, float]:
    """Mean, population variance, std, min, max of one series."""
    vs = np.asarray(values, dtype=np.float64)
    if vs.size == 0:
        raise ValueError("stats of an empty series are undefined")
    variance = float(np.var(vs))
    return {
        "mean": float(np.mean(vs)),
        "variance": variance,
        "std": math.sqrt(variance),
        "min": float(np.min(vs)),
        "max": float(np.max(vs)),
    }


def envelope(collection: list) -> Envelope:
    """Per-index min/q25/median/q75/max over equal-length series.

    Quantiles use the linear-interpolation definition: at sorted position
    p*(k-1) for fraction p over k series, interpolating between neighbors.
    """
    if not collection:
        raise ValueError("envelope of an empty collection is undefined")
    arrays = [np.asarray(c, dtype=np.float64) for c in collection]
    length = arrays[0].size
    if length == 0:
        raise ValueError("envelope of empty series is undefined")
    for k, arr in enumerate(arrays):
        if arr.ndim != 1 or arr.size != length:
            raise ValueError(
                f"series {k} has length {arr.size}, expected {length} (ragged input)")
    stack = np.stack(arrays)
    q25, median, q75 = np.quantile(stack, [0.25, 0.5, 0.75], axis=0, method="linear")
    return Envelope(
        min=stack.min(axis=0), q25=q25, median=median, q75=q75, max=stack.max(axis=0))


def variance_report(own_pairs: list[tuple], cross_pairs: list[tuple]) -> VarianceReport:
    """Mean DTW distance of own pairings versus cross pairings.

    Each pair is (generated, original). A zero own-mean marks a degenerate
    model (it reproduced its input exactly), which the report flags rather
    than hides.
    """
    if not own_pairs or not cross_pairs:
        raise ValueError("both own and cross pair groups must be non-empty")
    own = [dtw(g, o).distance for g, o in own_pairs]
    cross = [dtw(g, o).distance for g, o in cross_pairs]
    own_mean = float(np.mean(own))
    return VarianceReport(
        own_mean=own_mean, cross_mean=float(np.mean(cross)),
        own_count=len(own), cross_count=len(cross),
        degenerate_model=own_mean == 0.0)
