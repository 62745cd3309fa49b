"""Measurement-based software project control.

Learn averaged "cluster curves" from past projects' attribute time series,
pick a prediction for a new project by context similarity, watch incoming
measurements against a tolerance corridor, and replan when the plan drifts.
"""

from .clustering import (
    Cluster,
    ClusteringConfig,
    Dendrogram,
    DendrogramMerge,
    cluster_curves,
    suggest_threshold,
)
from .context import (
    AggregatedContext,
    ContextSchema,
    ContextVector,
    Factor,
    aggregate_contexts,
    compute_ranges,
    similarity,
)
from .controller import (
    ControlConfig,
    ControlEvent,
    ReplanCause,
    TrackedProject,
    adapt_prediction,
    elapsed_to_progress,
    load_project,
    plan_project,
    record_actual,
    replan,
    save_project,
    select_dynamic,
    select_hybrid,
    select_static,
)
from .curves import (
    CharacteristicCurve,
    Grid,
    RawSeries,
    distance,
    normalize_time,
    prefix_distance,
    resample,
)
from .errors import SprintError
from .experience import (
    AttributeClusters,
    ExperienceBase,
    ProjectRecord,
    build,
    ingest,
    load as load_base,
    load_schema,
    save as save_base,
    save_schema,
)
from .simulate import (
    Archetype,
    EvaluationReport,
    GeneratorConfig,
    SimulatedPortfolio,
    adjusted_rand_index,
    evaluate,
    generate,
    write_portfolio,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatedContext",
    "Archetype",
    "AttributeClusters",
    "CharacteristicCurve",
    "Cluster",
    "ClusteringConfig",
    "ContextSchema",
    "ContextVector",
    "ControlConfig",
    "ControlEvent",
    "Dendrogram",
    "DendrogramMerge",
    "EvaluationReport",
    "ExperienceBase",
    "Factor",
    "GeneratorConfig",
    "Grid",
    "ProjectRecord",
    "RawSeries",
    "ReplanCause",
    "SimulatedPortfolio",
    "SprintError",
    "TrackedProject",
    "adapt_prediction",
    "adjusted_rand_index",
    "aggregate_contexts",
    "build",
    "cluster_curves",
    "compute_ranges",
    "distance",
    "elapsed_to_progress",
    "evaluate",
    "generate",
    "ingest",
    "load_base",
    "load_project",
    "load_schema",
    "normalize_time",
    "plan_project",
    "prefix_distance",
    "record_actual",
    "replan",
    "resample",
    "save_base",
    "save_project",
    "save_schema",
    "select_dynamic",
    "select_hybrid",
    "select_static",
    "similarity",
    "suggest_threshold",
    "write_portfolio",
]
