"""Characteristic curves on a shared normalized time grid, and distances between them.

A completed project's measured attribute becomes a curve of G values aligned
to the uniform grid t_k = k/(G-1) on [0, 1], so curves from projects of any
length can be compared, averaged, and matched against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    AttributeMismatch,
    EmptyPrefix,
    GridMismatch,
    InvalidConfig,
    MalformedSeries,
)

RAW = "raw"
CUMULATIVE = "cumulative"
MODES = (RAW, CUMULATIVE)

RMS = "rms"
MAX = "max"
METRICS = (RMS, MAX)

DEFAULT_GRID_SIZE = 20

# Absolute slack when deciding whether a grid position lies inside a prefix,
# so progress values arriving through arithmetic do not drop the boundary point.
_PREFIX_EPS = 1e-12


def check_metric(metric: str) -> str:
    if metric not in METRICS:
        raise InvalidConfig(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise InvalidConfig(f"unknown curve mode {mode!r}; expected one of {MODES}")
    return mode


@dataclass(frozen=True)
class Grid:
    """Uniform sampling grid on [0, 1] with positions k/(size-1)."""

    size: int = DEFAULT_GRID_SIZE

    def __post_init__(self) -> None:
        if not isinstance(self.size, int) or self.size < 2:
            raise InvalidConfig(f"grid size must be an integer >= 2, got {self.size!r}")

    def positions(self) -> np.ndarray:
        return grid_positions(self.size)


def grid_positions(size: int) -> np.ndarray:
    """Grid positions t_k = k/(size-1); the one formula used everywhere."""
    return np.arange(size) / (size - 1)


@dataclass(frozen=True)
class RawSeries:
    """One project's measured attribute as (t, value) points, t already in [0, 1]."""

    project_id: str
    attribute: str
    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(t), float(v)) for t, v in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise MalformedSeries(
                f"series {self.project_id}/{self.attribute}: needs at least 2 points"
            )
        for t, v in pts:
            if not (math.isfinite(t) and math.isfinite(v)):
                raise MalformedSeries(
                    f"series {self.project_id}/{self.attribute}: non-finite point ({t}, {v})"
                )
            if t < 0.0 or t > 1.0:
                raise MalformedSeries(
                    f"series {self.project_id}/{self.attribute}: t={t} outside [0, 1]"
                )
        for (t0, _), (t1, _) in zip(pts, pts[1:]):
            if not t0 < t1:
                raise MalformedSeries(
                    f"series {self.project_id}/{self.attribute}: t not strictly increasing"
                )

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.points)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.points)


def normalize_time(points: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    """Rescale arbitrary finite timestamps linearly so min -> 0 and max -> 1.

    Input points may use calendar units; they are sorted by time first.
    Duplicate timestamps are rejected.
    """
    pts = sorted((float(t), float(v)) for t, v in points)
    if len(pts) < 2:
        raise MalformedSeries("needs at least 2 points to normalize")
    for t, v in pts:
        if not (math.isfinite(t) and math.isfinite(v)):
            raise MalformedSeries(f"non-finite point ({t}, {v})")
    t_min, t_max = pts[0][0], pts[-1][0]
    if t_min == t_max:
        raise MalformedSeries("all points share one timestamp")
    for (t0, _), (t1, _) in zip(pts, pts[1:]):
        if t0 == t1:
            raise MalformedSeries(f"duplicate timestamp {t0}")
    span = t_max - t_min
    return [((t - t_min) / span, v) for t, v in pts]


@dataclass(frozen=True)
class CharacteristicCurve:
    """Curve values aligned to the grid; cumulative curves are non-decreasing."""

    project_id: str
    attribute: str
    values: tuple[float, ...]
    mode: str

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        check_mode(self.mode)
        if len(vals) < 2:
            raise MalformedSeries(
                f"curve {self.project_id}/{self.attribute}: needs at least 2 grid values"
            )
        if not all(math.isfinite(v) for v in vals):
            raise MalformedSeries(
                f"curve {self.project_id}/{self.attribute}: non-finite values"
            )
        if self.mode == CUMULATIVE:
            for a, b in zip(vals, vals[1:]):
                if b < a:
                    raise MalformedSeries(
                        f"curve {self.project_id}/{self.attribute}: cumulative values decrease"
                    )

    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    def value_at(self, t: float) -> float:
        """Piecewise-linear interpolation of the curve at progress t in [0, 1]."""
        return float(np.interp(t, grid_positions(len(self.values)), self.array()))


def resample(series: RawSeries, grid: Grid, mode: str) -> CharacteristicCurve:
    """Sample a series onto the grid by piecewise-linear interpolation.

    The series must span t=0..1 (normalize first). In cumulative mode the
    values are treated as per-period quantities: they are summed into the
    running total before interpolation, which preserves units.
    """
    check_mode(mode)
    ts = np.asarray(series.times)
    vs = np.asarray(series.values)
    if ts[0] != 0.0 or ts[-1] != 1.0:
        raise MalformedSeries(
            f"series {series.project_id}/{series.attribute}: must span t=0..1, "
            f"got [{ts[0]}, {ts[-1]}] (normalize first)"
        )
    if mode == CUMULATIVE:
        if np.any(vs < 0.0):
            raise MalformedSeries(
                f"series {series.project_id}/{series.attribute}: cumulative mode "
                "requires non-negative values"
            )
        vs = np.cumsum(vs)
    out = np.interp(grid.positions(), ts, vs)
    if mode == CUMULATIVE:
        # Interpolating a non-decreasing sequence can wobble by one ulp at
        # segment boundaries; flatten that so the invariant holds exactly.
        out = np.maximum.accumulate(out)
    return CharacteristicCurve(
        project_id=series.project_id,
        attribute=series.attribute,
        values=tuple(float(v) for v in out),
        mode=mode,
    )


def _check_comparable(a: CharacteristicCurve, b: CharacteristicCurve) -> None:
    if a.attribute != b.attribute:
        raise AttributeMismatch(
            f"cannot compare attributes {a.attribute!r} and {b.attribute!r}"
        )
    if len(a.values) != len(b.values):
        raise GridMismatch(
            f"grid sizes differ: {len(a.values)} vs {len(b.values)}"
        )


def _metric_value(diff: np.ndarray, metric: str) -> float:
    peak = float(np.max(np.abs(diff)))
    if metric == MAX:
        return peak
    if peak == 0.0:
        return 0.0
    # Scale by the peak before squaring so subnormal differences cannot
    # underflow to zero (identity of indiscernibles holds for all finites).
    scaled = diff / peak
    return peak * float(np.sqrt(np.mean(scaled * scaled)))


def distance(a: CharacteristicCurve, b: CharacteristicCurve, metric: str = RMS) -> float:
    """Distance between two curves on the same grid (rms or max over grid points)."""
    check_metric(metric)
    _check_comparable(a, b)
    return _metric_value(a.array() - b.array(), metric)


def prefix_distance(
    a: CharacteristicCurve,
    b: CharacteristicCurve,
    upto: float,
    metric: str = RMS,
) -> float:
    """Distance restricted to grid positions t_k <= upto.

    With upto=1 this equals the full-curve distance; upto below 0 leaves no
    grid point and raises EmptyPrefix.
    """
    check_metric(metric)
    _check_comparable(a, b)
    if not math.isfinite(upto):
        raise EmptyPrefix(f"progress must be finite, got {upto}")
    p = min(float(upto), 1.0)
    size = len(a.values)
    count = int(np.searchsorted(grid_positions(size), p + _PREFIX_EPS, side="right"))
    if count == 0:
        raise EmptyPrefix(f"no grid position at or before progress {upto}")
    diff = a.array()[:count] - b.array()[:count]
    return _metric_value(diff, metric)
