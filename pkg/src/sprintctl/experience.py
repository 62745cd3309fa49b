"""Ingest historical project data, cluster it, and persist the experience base.

File formats (all documented in the README):
  curves CSV    header ``project_id,attribute,t,value``; one measurement per row
  contexts CSV  header ``project_id,factor,value``; one factor assignment per row
  schema JSON   list of ``{"name": ..., "kind": "numeric"|"categorical", "weight": ...}``
  base file     canonical checksummed text written by :func:`save`
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import canon
from .clustering import (
    Cluster,
    ClusteringConfig,
    Dendrogram,
    DendrogramMerge,
    cluster_curves,
)
from .context import (
    AggregatedContext,
    ContextSchema,
    ContextVector,
    Factor,
    NUMERIC,
    compute_ranges,
)
from .curves import (
    CharacteristicCurve,
    Grid,
    RawSeries,
    check_metric,
    check_mode,
    normalize_time,
    resample,
)
from .errors import (
    DuplicateProject,
    InvalidConfig,
    ParseError,
    SchemaViolation,
    UnknownAttribute,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

CURVES_HEADER = ["project_id", "attribute", "t", "value"]
CONTEXTS_HEADER = ["project_id", "factor", "value"]


@dataclass(frozen=True)
class ProjectRecord:
    """One historical project: its context plus one raw series per attribute."""

    project_id: str
    context: ContextVector
    series: Mapping[str, RawSeries] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "series", dict(self.series))


@dataclass(frozen=True)
class AttributeClusters:
    """Clustering result for one attribute inside an experience base."""

    threshold: float
    clusters: tuple[Cluster, ...]
    dendrogram: Dendrogram


@dataclass(frozen=True)
class ExperienceBase:
    schema: ContextSchema
    grid: Grid
    metric: str
    mode: str
    ranges: Mapping[str, tuple[float, float]]
    attributes: Mapping[str, AttributeClusters]
    provenance: tuple[str, ...]
    format_version: int = FORMAT_VERSION

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranges", dict(self.ranges))
        object.__setattr__(self, "attributes", dict(self.attributes))

    def clusters_for(self, attribute: str) -> tuple[Cluster, ...]:
        if attribute not in self.attributes:
            raise UnknownAttribute(
                f"experience base has no attribute {attribute!r}; "
                f"available: {sorted(self.attributes)}"
            )
        return self.attributes[attribute].clusters

    def checksum(self) -> str:
        return canon.checksum(canon.canonical_dumps(base_to_payload(self)))


# ---------------------------------------------------------------------------
# schema file


def load_schema(path: str | Path) -> ContextSchema:
    """Parse the schema JSON file: a list of factor declarations."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read schema {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return schema_from_payload(raw, where=str(path))


def schema_from_payload(raw: Any, where: str = "schema") -> ContextSchema:
    if not isinstance(raw, list):
        raise ParseError(f"{where}: expected a JSON list of factors")
    factors = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ParseError(f"{where}: factor #{i} is not an object")
        unknown = set(item) - {"name", "kind", "weight"}
        if unknown:
            raise ParseError(f"{where}: factor #{i} has unknown keys {sorted(unknown)}")
        if "name" not in item or "kind" not in item:
            raise ParseError(f"{where}: factor #{i} needs 'name' and 'kind'")
        factors.append(
            Factor(
                name=str(item["name"]),
                kind=str(item["kind"]),
                weight=float(item.get("weight", 1.0)),
            )
        )
    return ContextSchema(tuple(factors))


def schema_to_payload(schema: ContextSchema) -> list[dict[str, Any]]:
    return [
        {"name": f.name, "kind": f.kind, "weight": f.weight} for f in schema.factors
    ]


def save_schema(schema: ContextSchema, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(schema_to_payload(schema), indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# CSV ingestion


def _read_rows(path: Path, header: list[str]) -> Iterable[tuple[int, list[str]]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    rows = list(reader)
    if not rows:
        raise ParseError(f"{path}: empty file, expected header {','.join(header)}")
    found = [cell.strip() for cell in rows[0]]
    if found != header:
        raise ParseError(
            f"{path}:1: expected header {','.join(header)}, got {','.join(found)}"
        )
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
            )
        yield lineno, [cell.strip() for cell in row]


def _parse_float(raw: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ParseError(f"{where}: not a number: {raw!r}") from exc
    return value


def ingest(
    curves_file: str | Path,
    contexts_file: str | Path,
    schema_file: str | Path,
    attributes: Iterable[str] | None = None,
) -> list[ProjectRecord]:
    """Parse and validate the input files into project records.

    Series whose timestamps do not already span [0, 1] are rescaled linearly
    (min -> 0, max -> 1) with a logged warning. When an attribute allowlist is
    given, curve rows outside it raise UnknownAttribute.
    """
    curves_path = Path(curves_file)
    contexts_path = Path(contexts_file)
    schema = load_schema(schema_file)
    allowed = set(attributes) if attributes is not None else None

    points: dict[tuple[str, str], list[tuple[float, float]]] = {}
    seen_points: set[tuple[str, str, float]] = set()
    for lineno, row in _read_rows(curves_path, CURVES_HEADER):
        project_id, attribute, t_raw, v_raw = row
        where = f"{curves_path}:{lineno}"
        if not project_id or not attribute:
            raise ParseError(f"{where}: empty project_id or attribute")
        if allowed is not None and attribute not in allowed:
            raise UnknownAttribute(
                f"{where}: attribute {attribute!r} not in {sorted(allowed)}"
            )
        t = _parse_float(t_raw, where)
        value = _parse_float(v_raw, where)
        key = (project_id, attribute, t)
        if key in seen_points:
            raise DuplicateProject(
                f"{where}: duplicate point for project {project_id!r} "
                f"attribute {attribute!r} at t={t}"
            )
        seen_points.add(key)
        points.setdefault((project_id, attribute), []).append((t, value))

    assignments: dict[str, dict[str, Any]] = {}
    for lineno, row in _read_rows(contexts_path, CONTEXTS_HEADER):
        project_id, factor_name, raw_value = row
        where = f"{contexts_path}:{lineno}"
        if not project_id or not factor_name:
            raise ParseError(f"{where}: empty project_id or factor")
        try:
            factor = schema.factor(factor_name)
        except SchemaViolation as exc:
            raise SchemaViolation(f"{where}: {exc}") from exc
        value: Any
        if factor.kind == NUMERIC:
            value = _parse_float(raw_value, where)
        else:
            value = raw_value
        project = assignments.setdefault(project_id, {})
        if factor_name in project:
            raise DuplicateProject(
                f"{where}: factor {factor_name!r} assigned twice for "
                f"project {project_id!r}"
            )
        project[factor_name] = value

    records: list[ProjectRecord] = []
    project_ids = sorted(set(assignments) | {pid for pid, _ in points})
    for project_id in project_ids:
        series: dict[str, RawSeries] = {}
        for (pid, attribute), pts in sorted(points.items()):
            if pid != project_id:
                continue
            pts = sorted(pts)
            t_values = [t for t, _ in pts]
            if t_values[0] != 0.0 or t_values[-1] != 1.0:
                log.warning(
                    "series %s/%s: timestamps span [%g, %g]; rescaling to [0, 1]",
                    project_id,
                    attribute,
                    t_values[0],
                    t_values[-1],
                )
                pts = normalize_time(pts)
            series[attribute] = RawSeries(
                project_id=project_id, attribute=attribute, points=tuple(pts)
            )
        context = ContextVector(assignments.get(project_id, {}))
        schema.validate(context)
        records.append(
            ProjectRecord(project_id=project_id, context=context, series=series)
        )
    return records


# ---------------------------------------------------------------------------
# build


def build(
    records: Sequence[ProjectRecord],
    schema: ContextSchema,
    attribute_configs: Mapping[str, ClusteringConfig],
    grid: Grid | None = None,
    mode: str = "cumulative",
) -> ExperienceBase:
    """Resample every configured attribute, cluster it, and assemble the base.

    Deterministic for a given record set regardless of input order.
    """
    if not records:
        raise InvalidConfig("build needs at least one project record")
    if not attribute_configs:
        raise InvalidConfig("build needs at least one attribute config")
    grid = grid or Grid()
    check_mode(mode)
    metrics = {cfg.metric for cfg in attribute_configs.values()}
    if len(metrics) != 1:
        raise InvalidConfig(f"all attributes must share one metric, got {sorted(metrics)}")
    metric = check_metric(metrics.pop())

    ordered = sorted(records, key=lambda r: r.project_id)
    for a, b in zip(ordered, ordered[1:]):
        if a.project_id == b.project_id:
            raise DuplicateProject(f"duplicate record for project {a.project_id!r}")

    contexts = {r.project_id: r.context for r in ordered}
    ranges = compute_ranges([r.context for r in ordered], schema)

    attributes: dict[str, AttributeClusters] = {}
    for attribute in sorted(attribute_configs):
        config = attribute_configs[attribute]
        curves = []
        for record in ordered:
            if attribute not in record.series:
                raise UnknownAttribute(
                    f"project {record.project_id!r} has no series for "
                    f"attribute {attribute!r}"
                )
            curves.append(resample(record.series[attribute], grid, mode))
        clusters, dendrogram = cluster_curves(curves, contexts, config, schema)
        attributes[attribute] = AttributeClusters(
            threshold=config.threshold,
            clusters=tuple(clusters),
            dendrogram=dendrogram,
        )

    return ExperienceBase(
        schema=schema,
        grid=grid,
        metric=metric,
        mode=mode,
        ranges=ranges,
        attributes=attributes,
        provenance=tuple(r.project_id for r in ordered),
    )


# ---------------------------------------------------------------------------
# payload codecs


def context_to_payload(context: ContextVector) -> dict[str, Any]:
    return dict(sorted(context.assignments.items()))


def context_from_payload(raw: Any, where: str = "context") -> ContextVector:
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: expected an object of factor assignments")
    return ContextVector(raw)


def aggregated_to_payload(context: AggregatedContext) -> dict[str, Any]:
    return {
        "means": dict(sorted(context.means.items())),
        "representatives": dict(sorted(context.representatives.items())),
        "frequencies": {
            name: dict(sorted(freq.items()))
            for name, freq in sorted(context.frequencies.items())
        },
    }


def aggregated_from_payload(raw: Any) -> AggregatedContext:
    return AggregatedContext(
        means=raw["means"],
        representatives=raw["representatives"],
        frequencies=raw["frequencies"],
    )


def curve_to_payload(curve: CharacteristicCurve) -> dict[str, Any]:
    return {
        "project_id": curve.project_id,
        "attribute": curve.attribute,
        "mode": curve.mode,
        "values": list(curve.values),
    }


def curve_from_payload(raw: Any) -> CharacteristicCurve:
    return CharacteristicCurve(
        project_id=raw["project_id"],
        attribute=raw["attribute"],
        values=tuple(raw["values"]),
        mode=raw["mode"],
    )


def _cluster_to_payload(cluster: Cluster) -> dict[str, Any]:
    return {
        "cluster_id": cluster.cluster_id,
        "attribute": cluster.attribute,
        "member_ids": list(cluster.member_ids),
        "member_count": cluster.member_count,
        "curve": curve_to_payload(cluster.cluster_curve),
        "context": aggregated_to_payload(cluster.context),
    }


def _cluster_from_payload(raw: Any) -> Cluster:
    return Cluster(
        cluster_id=int(raw["cluster_id"]),
        attribute=raw["attribute"],
        member_ids=tuple(raw["member_ids"]),
        cluster_curve=curve_from_payload(raw["curve"]),
        context=aggregated_from_payload(raw["context"]),
        member_count=int(raw["member_count"]),
    )


def _dendrogram_to_payload(dendrogram: Dendrogram) -> dict[str, Any]:
    return {
        "leaf_projects": list(dendrogram.leaf_projects),
        "merges": [
            [m.left_id, m.right_id, m.height, m.new_id] for m in dendrogram.merges
        ],
    }


def _dendrogram_from_payload(raw: Any) -> Dendrogram:
    return Dendrogram(
        leaf_projects=tuple(raw["leaf_projects"]),
        merges=tuple(
            DendrogramMerge(int(l), int(r), float(h), int(n))
            for l, r, h, n in raw["merges"]
        ),
    )


def base_to_payload(base: ExperienceBase) -> dict[str, Any]:
    return {
        "schema": schema_to_payload(base.schema),
        "grid_size": base.grid.size,
        "metric": base.metric,
        "mode": base.mode,
        "ranges": {name: list(span) for name, span in sorted(base.ranges.items())},
        "attributes": {
            attribute: {
                "threshold": group.threshold,
                "clusters": [_cluster_to_payload(c) for c in group.clusters],
                "dendrogram": _dendrogram_to_payload(group.dendrogram),
            }
            for attribute, group in sorted(base.attributes.items())
        },
        "provenance": list(base.provenance),
    }


def base_from_payload(raw: Any, format_version: int = FORMAT_VERSION) -> ExperienceBase:
    try:
        return ExperienceBase(
            schema=schema_from_payload(raw["schema"]),
            grid=Grid(int(raw["grid_size"])),
            metric=raw["metric"],
            mode=raw["mode"],
            ranges={
                name: (float(span[0]), float(span[1]))
                for name, span in raw["ranges"].items()
            },
            attributes={
                attribute: AttributeClusters(
                    threshold=float(group["threshold"]),
                    clusters=tuple(
                        _cluster_from_payload(c) for c in group["clusters"]
                    ),
                    dendrogram=_dendrogram_from_payload(group["dendrogram"]),
                )
                for attribute, group in raw["attributes"].items()
            },
            provenance=tuple(raw["provenance"]),
            format_version=format_version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"experience base payload malformed: {exc}") from exc


def save(base: ExperienceBase, path: str | Path) -> None:
    """Write the base as a canonical checksummed file (byte-identical for equal bases)."""
    canon.write_file(path, canon.BASE_MAGIC, base.format_version, base_to_payload(base))


def load(path: str | Path) -> ExperienceBase:
    payload = canon.read_file(path, canon.BASE_MAGIC, FORMAT_VERSION)
    return base_from_payload(payload)
