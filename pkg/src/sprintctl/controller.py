"""Live project control: select a prediction curve, watch actuals, replan.

A tracked project carries a prediction (a cluster curve, possibly adapted to
actual data), an ordered measurement log, and an event log. Measurements
outside the relative tolerance corridor raise DeviationDetected events;
replanning is always an explicit operator action carrying one of the three
deviation causes, and never happens silently.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import canon
from .clustering import Cluster
from .context import ContextVector, similarity
from .curves import CharacteristicCurve, RAW, grid_positions, prefix_distance
from .errors import (
    InsufficientPrefix,
    InvalidConfig,
    MalformedSeries,
    NoActuals,
    NoClusters,
    NonMonotoneTime,
    OutOfRangeTime,
    ParseError,
    VersionMismatch,
)
from .experience import (
    ExperienceBase,
    context_from_payload,
    context_to_payload,
    curve_from_payload,
    curve_to_payload,
)

log = logging.getLogger(__name__)

PROJECT_FORMAT_VERSION = 1

STATIC = "static"
DYNAMIC = "dynamic"
HYBRID = "hybrid"
STRATEGIES = (STATIC, DYNAMIC, HYBRID)

RESCALE = "rescale"
SHIFT = "shift"
NONE = "none"
ADAPTATIONS = (RESCALE, SHIFT, NONE)

DEVIATION_DETECTED = "DeviationDetected"
SELECTION_CONFLICT = "SelectionConflict"
REPLANNED = "Replanned"
PREDICTION_ADAPTED = "PredictionAdapted"

WRONG_EXPERIENCE = "WrongExperience"
WRONG_CONTEXT = "WrongContext"
CHANGED_CHARACTERISTICS = "ChangedCharacteristics"
REPLAN_CAUSES = (WRONG_EXPERIENCE, WRONG_CONTEXT, CHANGED_CHARACTERISTICS)


@dataclass(frozen=True)
class ControlConfig:
    """Tracking knobs: tolerance corridor, prefix rules, hybrid switch, adaptation."""

    tolerance: float = 0.2
    epsilon: float = 1e-9
    min_prefix_points: int = 3
    hybrid_switch: float = 0.3
    adaptation: str = RESCALE
    selection_strategy: str = STATIC

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tolerance) and self.tolerance > 0.0):
            raise InvalidConfig(f"tolerance must be > 0, got {self.tolerance}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise InvalidConfig(f"epsilon must be > 0, got {self.epsilon}")
        if not isinstance(self.min_prefix_points, int) or self.min_prefix_points < 1:
            raise InvalidConfig(
                f"min_prefix_points must be an integer >= 1, got {self.min_prefix_points!r}"
            )
        if not 0.0 <= self.hybrid_switch <= 1.0:
            raise InvalidConfig(
                f"hybrid_switch must be in [0, 1], got {self.hybrid_switch}"
            )
        if self.adaptation not in ADAPTATIONS:
            raise InvalidConfig(
                f"adaptation must be one of {ADAPTATIONS}, got {self.adaptation!r}"
            )
        if self.selection_strategy not in STRATEGIES:
            raise InvalidConfig(
                f"selection_strategy must be one of {STRATEGIES}, "
                f"got {self.selection_strategy!r}"
            )


@dataclass(frozen=True)
class ControlEvent:
    """One entry of the event log; progress (not wall clock) is the time axis."""

    kind: str
    at_progress: float
    payload: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ReplanCause:
    """Why the operator replans: bad experience, corrected context, or changed project."""

    kind: str
    context: Optional[ContextVector] = None

    def __post_init__(self) -> None:
        if self.kind not in REPLAN_CAUSES:
            raise InvalidConfig(
                f"replan cause must be one of {REPLAN_CAUSES}, got {self.kind!r}"
            )
        if self.kind == WRONG_EXPERIENCE and self.context is not None:
            raise InvalidConfig(f"{self.kind} takes no context payload")
        if self.kind != WRONG_EXPERIENCE and self.context is None:
            raise InvalidConfig(f"{self.kind} requires a context payload")

    @classmethod
    def wrong_experience(cls) -> "ReplanCause":
        return cls(WRONG_EXPERIENCE)

    @classmethod
    def wrong_context(cls, corrected: ContextVector) -> "ReplanCause":
        return cls(WRONG_CONTEXT, corrected)

    @classmethod
    def changed_characteristics(cls, updated: ContextVector) -> "ReplanCause":
        return cls(CHANGED_CHARACTERISTICS, updated)


@dataclass
class TrackedProject:
    """Mutable live-project state; one writer at a time, reads between mutations."""

    project_id: str
    attribute: str
    context: ContextVector
    planned_duration: float
    base: ExperienceBase
    selected_cluster_id: int
    prediction: CharacteristicCurve
    actuals: list[tuple[float, float]] = field(default_factory=list)
    events: list[ControlEvent] = field(default_factory=list)
    config: ControlConfig = field(default_factory=ControlConfig)

    @property
    def progress(self) -> float:
        return self.actuals[-1][0] if self.actuals else 0.0

    def selected_cluster(self) -> Cluster:
        for cluster in self.base.clusters_for(self.attribute):
            if cluster.cluster_id == self.selected_cluster_id:
                return cluster
        raise NoClusters(
            f"cluster {self.selected_cluster_id} missing for attribute "
            f"{self.attribute!r}"
        )

    def plan_value(self, t: float) -> float:
        return self.prediction.value_at(t)


def elapsed_to_progress(elapsed: float, planned_duration: float) -> float:
    """Convert elapsed calendar time to the progress fraction, capping at 1."""
    if not (math.isfinite(elapsed) and elapsed >= 0.0):
        raise OutOfRangeTime(f"elapsed time must be >= 0, got {elapsed}")
    if not (math.isfinite(planned_duration) and planned_duration > 0.0):
        raise InvalidConfig(f"planned duration must be > 0, got {planned_duration}")
    fraction = elapsed / planned_duration
    if fraction > 1.0:
        log.warning(
            "elapsed %g exceeds planned duration %g; progress capped at 1",
            elapsed,
            planned_duration,
        )
        return 1.0
    return fraction


def _similarity_to(project_context: ContextVector, cluster: Cluster, base: ExperienceBase) -> float:
    return similarity(project_context, cluster.context, base.schema, base.ranges)


def _candidates(
    base: ExperienceBase, attribute: str, exclude: Iterable[int] = ()
) -> list[Cluster]:
    excluded = set(exclude)
    clusters = [c for c in base.clusters_for(attribute) if c.cluster_id not in excluded]
    if not clusters:
        raise NoClusters(f"no candidate clusters for attribute {attribute!r}")
    return clusters


def plan_project(
    base: ExperienceBase,
    project_id: str,
    attribute: str,
    context: ContextVector,
    planned_duration: float,
    config: ControlConfig | None = None,
) -> TrackedProject:
    """Select the most context-similar cluster curve as the initial prediction.

    Ties break to the larger cluster, then the smaller cluster id. Logs one
    Replanned event with cause "initial".
    """
    config = config or ControlConfig()
    if not (math.isfinite(planned_duration) and planned_duration > 0.0):
        raise InvalidConfig(f"planned duration must be > 0, got {planned_duration}")
    base.schema.validate(context)
    chosen = _select_static(base, attribute, context)
    cluster = next(
        c for c in base.clusters_for(attribute) if c.cluster_id == chosen
    )
    project = TrackedProject(
        project_id=project_id,
        attribute=attribute,
        context=context,
        planned_duration=float(planned_duration),
        base=base,
        selected_cluster_id=chosen,
        prediction=cluster.cluster_curve,
        config=config,
    )
    project.events.append(
        ControlEvent(
            kind=REPLANNED,
            at_progress=0.0,
            payload={
                "cause": "initial",
                "old_cluster_id": None,
                "new_cluster_id": chosen,
            },
        )
    )
    return project


def _select_static(
    base: ExperienceBase,
    attribute: str,
    context: ContextVector,
    exclude: Iterable[int] = (),
) -> int:
    candidates = _candidates(base, attribute, exclude)
    ranked = sorted(
        candidates,
        key=lambda c: (
            -_similarity_to(context, c, base),
            -c.member_count,
            c.cluster_id,
        ),
    )
    return ranked[0].cluster_id


def select_static(project: TrackedProject, exclude: Iterable[int] = ()) -> int:
    """Cluster choice by context similarity alone."""
    return _select_static(project.base, project.attribute, project.context, exclude)


def _actual_prefix_curve(project: TrackedProject) -> CharacteristicCurve:
    """Actuals interpolated onto the grid; points outside the measured span clamp."""
    xs = np.asarray([t for t, _ in project.actuals])
    ys = np.asarray([v for _, v in project.actuals])
    size = project.base.grid.size
    values = np.interp(grid_positions(size), xs, ys)
    return CharacteristicCurve(
        project_id=project.project_id,
        attribute=project.attribute,
        values=tuple(float(v) for v in values),
        mode=RAW,
    )


def select_dynamic(project: TrackedProject, exclude: Iterable[int] = ()) -> int:
    """Cluster whose curve prefix best matches the measured actual prefix."""
    if len(project.actuals) < project.config.min_prefix_points:
        raise InsufficientPrefix(
            f"need at least {project.config.min_prefix_points} measurements, "
            f"have {len(project.actuals)}"
        )
    candidates = _candidates(project.base, project.attribute, exclude)
    actual_curve = _actual_prefix_curve(project)
    progress = project.progress
    metric = project.base.metric
    ranked = sorted(
        candidates,
        key=lambda c: (
            prefix_distance(actual_curve, c.cluster_curve, progress, metric),
            c.cluster_id,
        ),
    )
    return ranked[0].cluster_id


def select_hybrid(
    project: TrackedProject, exclude: Iterable[int] = ()
) -> tuple[int, Optional[ControlEvent]]:
    """Static and dynamic choice combined.

    Agreement (or an unavailable dynamic choice) passes through silently;
    disagreement logs a SelectionConflict and trusts the dynamic choice once
    progress has reached the configured switch point.
    """
    static_choice = select_static(project, exclude)
    try:
        dynamic_choice = select_dynamic(project, exclude)
    except InsufficientPrefix:
        return static_choice, None
    if static_choice == dynamic_choice:
        return static_choice, None
    progress = project.progress
    chosen = (
        dynamic_choice if progress >= project.config.hybrid_switch else static_choice
    )
    event = ControlEvent(
        kind=SELECTION_CONFLICT,
        at_progress=progress,
        payload={
            "static_cluster_id": static_choice,
            "dynamic_cluster_id": dynamic_choice,
            "chosen_cluster_id": chosen,
            "progress": progress,
        },
    )
    return chosen, event


def record_actual(
    project: TrackedProject, t: float, value: float
) -> list[ControlEvent]:
    """Append a measurement and check it against the tolerance corridor.

    The relative deviation |value - plan(t)| / max(|plan(t)|, epsilon) beyond
    the tolerance raises a DeviationDetected event (two-sided corridor).
    """
    if not math.isfinite(t):
        raise OutOfRangeTime(f"progress must be finite, got {t}")
    if t < 0.0 or t > 1.0:
        raise OutOfRangeTime(f"progress {t} outside [0, 1]")
    if project.actuals and t <= project.actuals[-1][0]:
        raise NonMonotoneTime(
            f"progress {t} not after last measurement at {project.actuals[-1][0]}"
        )
    if not math.isfinite(value):
        raise MalformedSeries(f"measured value must be finite, got {value}")

    project.actuals.append((float(t), float(value)))
    plan = project.plan_value(t)
    deviation = abs(value - plan) / max(abs(plan), project.config.epsilon)
    events: list[ControlEvent] = []
    if deviation > project.config.tolerance:
        events.append(
            ControlEvent(
                kind=DEVIATION_DETECTED,
                at_progress=float(t),
                payload={
                    "deviation": float(deviation),
                    "t": float(t),
                    "value": float(value),
                    "plan_value": float(plan),
                    "tolerance": project.config.tolerance,
                },
            )
        )
    project.events.extend(events)
    return events


def adapt_prediction(project: TrackedProject) -> list[ControlEvent]:
    """Re-anchor the prediction on the latest measurement.

    Rescale multiplies the cluster-curve tail by actual/planned at the current
    progress (falling back to an additive shift when the plan there is ~0);
    the head follows the recorded actuals. Adaptation "none" restores the
    pure cluster curve.
    """
    if not project.actuals:
        raise NoActuals("prediction adaptation needs at least one measurement")
    cluster = project.selected_cluster()
    cluster_values = cluster.cluster_curve.array()
    size = project.base.grid.size
    positions = grid_positions(size)
    mode = project.config.adaptation

    if mode == NONE:
        project.prediction = cluster.cluster_curve
        event = ControlEvent(
            kind=PREDICTION_ADAPTED,
            at_progress=project.progress,
            payload={"adaptation": NONE, "cluster_id": cluster.cluster_id},
        )
        project.events.append(event)
        return [event]

    p, actual_value = project.actuals[-1]
    plan_at_p = float(np.interp(p, positions, cluster_values))
    payload: dict[str, Any] = {"cluster_id": cluster.cluster_id, "t": p}
    if mode == RESCALE and abs(plan_at_p) >= project.config.epsilon:
        factor = actual_value / plan_at_p
        tail = cluster_values * factor
        payload["adaptation"] = RESCALE
        payload["factor"] = float(factor)
    else:
        offset = actual_value - plan_at_p
        tail = cluster_values + offset
        payload["adaptation"] = SHIFT
        payload["offset"] = float(offset)

    xs = np.asarray([t for t, _ in project.actuals])
    ys = np.asarray([v for _, v in project.actuals])
    head = np.interp(positions, xs, ys)
    values = np.where(positions >= p, tail, head)
    project.prediction = CharacteristicCurve(
        project_id=project.project_id,
        attribute=project.attribute,
        values=tuple(float(v) for v in values),
        mode=RAW,
    )
    event = ControlEvent(
        kind=PREDICTION_ADAPTED, at_progress=float(p), payload=payload
    )
    project.events.append(event)
    return [event]


def _reselect(
    project: TrackedProject, strategy: str, exclude: Iterable[int] = ()
) -> tuple[int, Optional[ControlEvent]]:
    if strategy == STATIC:
        return select_static(project, exclude), None
    if strategy == DYNAMIC:
        try:
            return select_dynamic(project, exclude), None
        except InsufficientPrefix:
            return select_static(project, exclude), None
    return select_hybrid(project, exclude)


def replan(project: TrackedProject, cause: ReplanCause) -> list[ControlEvent]:
    """Reselect the cluster curve for one of the three deviation causes.

    WrongExperience excludes the current cluster; the context-correcting
    causes replace the project context first. The prediction is re-adapted to
    the actual data afterwards.
    """
    old_cluster = project.selected_cluster_id
    progress = project.progress
    events: list[ControlEvent] = []
    no_alternative = False

    if cause.kind == WRONG_EXPERIENCE:
        alternatives = [
            c
            for c in project.base.clusters_for(project.attribute)
            if c.cluster_id != old_cluster
        ]
        if not alternatives:
            new_cluster = old_cluster
            no_alternative = True
            conflict = None
        else:
            new_cluster, conflict = _reselect(
                project, project.config.selection_strategy, exclude={old_cluster}
            )
    elif cause.kind == WRONG_CONTEXT:
        project.base.schema.validate(cause.context)
        project.context = cause.context
        new_cluster, conflict = select_static(project), None
    else:  # ChangedCharacteristics
        project.base.schema.validate(cause.context)
        project.context = cause.context
        new_cluster, conflict = _reselect(project, project.config.selection_strategy)

    if conflict is not None:
        project.events.append(conflict)
        events.append(conflict)

    project.selected_cluster_id = new_cluster
    payload: dict[str, Any] = {
        "cause": cause.kind,
        "old_cluster_id": old_cluster,
        "new_cluster_id": new_cluster,
    }
    if cause.context is not None:
        payload["context"] = context_to_payload(cause.context)
    if no_alternative:
        payload["no_alternative"] = True
    replanned = ControlEvent(kind=REPLANNED, at_progress=progress, payload=payload)
    project.events.append(replanned)
    events.append(replanned)

    if project.actuals:
        events.extend(adapt_prediction(project))
    else:
        project.prediction = project.selected_cluster().cluster_curve
    return events


# ---------------------------------------------------------------------------
# persistence


def config_to_payload(config: ControlConfig) -> dict[str, Any]:
    return {
        "tolerance": config.tolerance,
        "epsilon": config.epsilon,
        "min_prefix_points": config.min_prefix_points,
        "hybrid_switch": config.hybrid_switch,
        "adaptation": config.adaptation,
        "selection_strategy": config.selection_strategy,
    }


def config_from_payload(raw: dict[str, Any]) -> ControlConfig:
    return ControlConfig(
        tolerance=float(raw["tolerance"]),
        epsilon=float(raw["epsilon"]),
        min_prefix_points=int(raw["min_prefix_points"]),
        hybrid_switch=float(raw["hybrid_switch"]),
        adaptation=raw["adaptation"],
        selection_strategy=raw["selection_strategy"],
    )


def events_to_payload(events: Sequence[ControlEvent]) -> list[dict[str, Any]]:
    return [
        {"kind": e.kind, "at_progress": e.at_progress, "payload": dict(e.payload)}
        for e in events
    ]


def events_from_payload(raw: Sequence[dict[str, Any]]) -> list[ControlEvent]:
    return [
        ControlEvent(
            kind=e["kind"], at_progress=float(e["at_progress"]), payload=e["payload"]
        )
        for e in raw
    ]


def project_to_payload(
    project: TrackedProject, base_path: str | None = None
) -> dict[str, Any]:
    return {
        "project_id": project.project_id,
        "attribute": project.attribute,
        "context": context_to_payload(project.context),
        "planned_duration": project.planned_duration,
        "base_path": base_path,
        "base_checksum": project.base.checksum(),
        "selected_cluster_id": project.selected_cluster_id,
        "prediction": curve_to_payload(project.prediction),
        "actuals": [[t, v] for t, v in project.actuals],
        "events": events_to_payload(project.events),
        "config": config_to_payload(project.config),
    }


def save_project(
    project: TrackedProject, path: str | Path, base_path: str | None = None
) -> None:
    canon.write_file(
        path,
        canon.PROJECT_MAGIC,
        PROJECT_FORMAT_VERSION,
        project_to_payload(project, base_path),
    )


def stored_base_path(path: str | Path) -> str | None:
    """The experience-base path recorded in a tracked-project file, if any."""
    payload = canon.read_file(path, canon.PROJECT_MAGIC, PROJECT_FORMAT_VERSION)
    return payload.get("base_path")


def load_project(path: str | Path, base: ExperienceBase) -> TrackedProject:
    """Load a tracked project against the base it was planned with."""
    payload = canon.read_file(path, canon.PROJECT_MAGIC, PROJECT_FORMAT_VERSION)
    try:
        stored = payload["base_checksum"]
        if stored != base.checksum():
            raise VersionMismatch(
                f"{path}: tracked against a different experience base "
                f"(checksum {stored[:12]}..., base {base.checksum()[:12]}...)"
            )
        return TrackedProject(
            project_id=payload["project_id"],
            attribute=payload["attribute"],
            context=context_from_payload(payload["context"]),
            planned_duration=float(payload["planned_duration"]),
            base=base,
            selected_cluster_id=int(payload["selected_cluster_id"]),
            prediction=curve_from_payload(payload["prediction"]),
            actuals=[(float(t), float(v)) for t, v in payload["actuals"]],
            events=events_from_payload(payload["events"]),
            config=config_from_payload(payload["config"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: tracked-project payload malformed: {exc}") from exc
