"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from sprintctl import (
    CharacteristicCurve,
    ClusteringConfig,
    ContextSchema,
    ContextVector,
    Factor,
    Grid,
    ProjectRecord,
    RawSeries,
    build,
)


@pytest.fixture
def small_schema() -> ContextSchema:
    return ContextSchema(
        (
            Factor("lang", "categorical"),
            Factor("team", "numeric"),
        )
    )


def constant_curve(project_id: str, value: float, size: int = 2, attribute: str = "effort") -> CharacteristicCurve:
    return CharacteristicCurve(
        project_id=project_id,
        attribute=attribute,
        values=(value,) * size,
        mode="raw",
    )


def grid_series(project_id: str, values, attribute: str = "effort") -> RawSeries:
    """Series whose points already sit on the uniform grid for len(values)."""
    n = len(values)
    times = np.arange(n) / (n - 1)
    return RawSeries(
        project_id=project_id,
        attribute=attribute,
        points=tuple(zip((float(t) for t in times), (float(v) for v in values))),
    )


def make_base(
    curves_by_project: dict[str, list[float]],
    contexts: dict[str, dict],
    theta: float,
    schema: ContextSchema,
    metric: str = "rms",
    attribute: str = "effort",
):
    """Experience base over raw-mode curves whose points lie on the grid."""
    records = [
        ProjectRecord(
            project_id=pid,
            context=ContextVector(contexts[pid]),
            series={attribute: grid_series(pid, values, attribute)},
        )
        for pid, values in curves_by_project.items()
    ]
    size = len(next(iter(curves_by_project.values())))
    return build(
        records,
        schema,
        {attribute: ClusteringConfig(threshold=theta, metric=metric)},
        Grid(size),
        "raw",
    )
