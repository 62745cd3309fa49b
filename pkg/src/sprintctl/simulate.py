"""Synthetic project portfolios drawn from latent archetypes, plus evaluation.

Each archetype is an S-shaped cumulative effort curve with a fully assigned
context template. Generated projects perturb the curve multiplicatively per
grid point (re-monotonized by running max) and jitter the context, so the
recoverability of the archetype structure can be dialed through the noise
knobs. The generator emits the same CSV/schema files the ingestion path
consumes, and the evaluator scores cluster recovery, context-based selection,
and prediction error against a global-mean baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .context import CATEGORICAL, ContextSchema, ContextVector, Factor, NUMERIC
from .controller import (
    ControlConfig,
    DYNAMIC,
    STATIC,
    STRATEGIES,
    plan_project,
    record_actual,
    select_dynamic,
    select_hybrid,
)
from .curves import CharacteristicCurve, RawSeries, grid_positions, resample
from .errors import InvalidConfig, ParseError
from .experience import ExperienceBase, ProjectRecord, save_schema

ATTRIBUTE = "effort"

_NUMERIC_FACTORS: tuple[tuple[str, float, float], ...] = (
    # name, archetype-0 value, per-archetype step
    ("team_size", 3.0, 4.0),
    ("avg_experience_years", 2.0, 2.5),
    ("estimated_kloc", 40.0, 80.0),
    ("num_subsystems", 2.0, 3.0),
    ("reuse_fraction", 0.05, 0.17),
)

_CATEGORICAL_FACTORS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("paradigm", ("object_oriented", "procedural", "functional", "logic", "scripting", "dataflow")),
    ("domain", ("embedded", "web", "desktop", "telecom", "finance", "games")),
    ("process_model", ("waterfall", "iterative", "agile", "spiral", "kanban", "vmodel")),
    ("language", ("java", "c", "cpp", "python", "ada", "smalltalk")),
    ("criticality", ("minimal", "low", "medium", "high", "safety")),
)

_EXTRA_VOCAB = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")


@dataclass(frozen=True)
class Archetype:
    archetype_id: int
    base_curve: tuple[float, ...]
    context_template: ContextVector


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_archetypes: int = 5
    n_train: int = 17
    n_test: int = 4
    n_context_factors: int = 10
    value_noise: float = 0.05
    context_noise: float = 0.05
    flip_prob: float = 0.1
    grid_size: int = 20

    def __post_init__(self) -> None:
        for name in ("n_archetypes", "n_train", "n_test", "n_context_factors"):
            count = getattr(self, name)
            if not isinstance(count, int) or count < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {count!r}")
        if not isinstance(self.grid_size, int) or self.grid_size < 2:
            raise InvalidConfig(f"grid_size must be an integer >= 2, got {self.grid_size!r}")
        for name in ("value_noise", "context_noise"):
            level = getattr(self, name)
            if not (math.isfinite(level) and level >= 0.0):
                raise InvalidConfig(f"{name} must be >= 0, got {level!r}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise InvalidConfig(f"flip_prob must be in [0, 1], got {self.flip_prob!r}")


@dataclass(frozen=True)
class SimulatedPortfolio:
    train: tuple[ProjectRecord, ...]
    test: tuple[ProjectRecord, ...]
    ground_truth: Mapping[str, int]
    schema: ContextSchema
    archetypes: tuple[Archetype, ...]
    attribute: str = ATTRIBUTE
    grid_size: int = 20

    def __post_init__(self) -> None:
        object.__setattr__(self, "ground_truth", dict(self.ground_truth))


def _factor_catalog(n_factors: int) -> list[tuple[str, str, Any]]:
    """Interleaved (name, kind, spec) list; spec is (base, step) or a vocabulary."""
    catalog: list[tuple[str, str, Any]] = []
    for (num, cat) in zip(_NUMERIC_FACTORS, _CATEGORICAL_FACTORS):
        catalog.append((num[0], NUMERIC, (num[1], num[2])))
        catalog.append((cat[0], CATEGORICAL, cat[1]))
    i = 0
    while len(catalog) < n_factors:
        if i % 2 == 0:
            catalog.append((f"extra_metric_{i}", NUMERIC, (10.0 + 3.0 * i, 5.0 + i)))
        else:
            catalog.append((f"extra_class_{i}", CATEGORICAL, _EXTRA_VOCAB))
        i += 1
    return catalog[:n_factors]


def _archetype_curve(grid_size: int, index: int, count: int) -> np.ndarray:
    """S-shaped cumulative curve: distinct total, midpoint, and steepness per archetype."""
    t = grid_positions(grid_size)
    spread = index / max(count - 1, 1)
    midpoint = 0.3 + 0.4 * spread
    steepness = 8.0 + 2.0 * (index % 4)
    total = 60.0 + 35.0 * index
    z = 1.0 / (1.0 + np.exp(-steepness * (t - midpoint)))
    z0 = 1.0 / (1.0 + np.exp(steepness * midpoint))
    z1 = 1.0 / (1.0 + np.exp(-steepness * (1.0 - midpoint)))
    shape = (z - z0) / (z1 - z0)
    return np.maximum.accumulate(total * shape)


def _make_archetypes(config: GeneratorConfig) -> list[Archetype]:
    catalog = _factor_catalog(config.n_context_factors)
    archetypes = []
    for a in range(config.n_archetypes):
        assignments: dict[str, Any] = {}
        for name, kind, spec in catalog:
            if kind == NUMERIC:
                base_value, step = spec
                assignments[name] = base_value + step * a
            else:
                vocab = spec
                assignments[name] = vocab[a % len(vocab)]
        archetypes.append(
            Archetype(
                archetype_id=a,
                base_curve=tuple(
                    float(v) for v in _archetype_curve(config.grid_size, a, config.n_archetypes)
                ),
                context_template=ContextVector(assignments),
            )
        )
    return archetypes


def _noisy_curve(
    base_curve: np.ndarray, rng: np.random.Generator, sigma: float
) -> np.ndarray:
    noisy = base_curve * (1.0 + rng.normal(0.0, sigma, base_curve.shape))
    return np.maximum.accumulate(noisy)


def _increments(curve: np.ndarray) -> list[float]:
    """Per-period quantities whose running sum reconstructs the cumulative curve."""
    values = [float(curve[0])]
    values.extend(float(d) for d in np.diff(curve))
    return values


def _noisy_context(
    template: ContextVector,
    catalog: Sequence[tuple[str, str, Any]],
    rng: np.random.Generator,
    sigma: float,
    flip_prob: float,
) -> ContextVector:
    assignments: dict[str, Any] = {}
    for name, kind, spec in catalog:
        value = template.get(name)
        if kind == NUMERIC:
            assignments[name] = float(value) * (1.0 + rng.normal(0.0, sigma))
        else:
            vocab = spec
            if rng.random() < flip_prob:
                others = [v for v in vocab if v != value]
                value = others[int(rng.integers(len(others)))]
            assignments[name] = value
    return ContextVector(assignments)


def generate(config: GeneratorConfig) -> SimulatedPortfolio:
    """Draw a deterministic portfolio of train and test projects from archetypes.

    The first n_archetypes train projects take archetypes round-robin so every
    archetype has a train member; every later project draws uniformly.
    """
    rng = np.random.default_rng(config.seed)
    archetypes = _make_archetypes(config)
    catalog = _factor_catalog(config.n_context_factors)
    times = grid_positions(config.grid_size)

    schema = ContextSchema(
        tuple(Factor(name=name, kind=kind) for name, kind, _ in catalog)
    )

    ground_truth: dict[str, int] = {}

    def make_record(project_id: str, position: int, split_train: bool) -> ProjectRecord:
        if split_train and position < config.n_archetypes:
            archetype_id = position
        else:
            archetype_id = int(rng.integers(config.n_archetypes))
        archetype = archetypes[archetype_id]
        ground_truth[project_id] = archetype_id
        curve = _noisy_curve(
            np.asarray(archetype.base_curve), rng, config.value_noise
        )
        series = RawSeries(
            project_id=project_id,
            attribute=ATTRIBUTE,
            points=tuple(zip((float(t) for t in times), _increments(curve))),
        )
        context = _noisy_context(
            archetype.context_template, catalog, rng, config.context_noise, config.flip_prob
        )
        return ProjectRecord(
            project_id=project_id, context=context, series={ATTRIBUTE: series}
        )

    train = tuple(
        make_record(f"train{i + 1:03d}", i, True) for i in range(config.n_train)
    )
    test = tuple(
        make_record(f"test{i + 1:03d}", i, False) for i in range(config.n_test)
    )
    return SimulatedPortfolio(
        train=train,
        test=test,
        ground_truth=ground_truth,
        schema=schema,
        archetypes=tuple(archetypes),
        grid_size=config.grid_size,
    )


# ---------------------------------------------------------------------------
# portfolio files (same formats the ingestion path reads)


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_curves_csv(records: Sequence[ProjectRecord], path: Path) -> None:
    lines = ["project_id,attribute,t,value"]
    for record in records:
        for attribute, series in sorted(record.series.items()):
            for t, v in series.points:
                lines.append(f"{record.project_id},{attribute},{_fmt(t)},{_fmt(v)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_contexts_csv(records: Sequence[ProjectRecord], path: Path) -> None:
    lines = ["project_id,factor,value"]
    for record in records:
        for name, value in sorted(record.context.assignments.items()):
            cell = _fmt(value) if isinstance(value, float) else str(value)
            lines.append(f"{record.project_id},{name},{cell}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_portfolio(portfolio: SimulatedPortfolio, out_dir: str | Path) -> list[Path]:
    """Emit train/test CSVs, the schema, and the ground-truth table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    pairs = [
        ("train_curves.csv", lambda p: _write_curves_csv(portfolio.train, p)),
        ("train_contexts.csv", lambda p: _write_contexts_csv(portfolio.train, p)),
        ("test_curves.csv", lambda p: _write_curves_csv(portfolio.test, p)),
        ("test_contexts.csv", lambda p: _write_contexts_csv(portfolio.test, p)),
    ]
    for name, writer in pairs:
        path = out / name
        writer(path)
        written.append(path)
    schema_path = out / "schema.json"
    save_schema(portfolio.schema, schema_path)
    written.append(schema_path)
    truth_path = out / "ground_truth.csv"
    lines = ["project_id,archetype_id"]
    for project_id, archetype_id in sorted(portfolio.ground_truth.items()):
        lines.append(f"{project_id},{archetype_id}")
    truth_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(truth_path)
    return written


def read_ground_truth(path: str | Path) -> dict[str, int]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != "project_id,archetype_id":
        raise ParseError(f"{path}:1: expected header project_id,archetype_id")
    truth: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 columns")
        try:
            truth[parts[0]] = int(parts[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad archetype id {parts[1]!r}") from exc
    return truth


# ---------------------------------------------------------------------------
# evaluation


def adjusted_rand_index(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    """Chance-corrected agreement between two partitions of the same items."""
    if len(labels_a) != len(labels_b):
        raise InvalidConfig("label sequences must have equal length")
    n = len(labels_a)
    if n == 0:
        raise InvalidConfig("cannot score empty partitions")

    def comb2(x: int) -> float:
        return x * (x - 1) / 2.0

    contingency: dict[tuple[int, int], int] = {}
    rows: dict[int, int] = {}
    cols: dict[int, int] = {}
    for a, b in zip(labels_a, labels_b):
        contingency[(a, b)] = contingency.get((a, b), 0) + 1
        rows[a] = rows.get(a, 0) + 1
        cols[b] = cols.get(b, 0) + 1

    index = sum(comb2(c) for c in contingency.values())
    sum_rows = sum(comb2(c) for c in rows.values())
    sum_cols = sum(comb2(c) for c in cols.values())
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        # Both partitions degenerate (all one cluster or all singletons).
        return 1.0
    return (index - expected) / (max_index - expected)


@dataclass(frozen=True)
class TestOutcome:
    project_id: str
    true_archetype: int
    selected_cluster_id: int
    selected_majority_archetype: int
    selection_correct: bool
    mad_selected: float
    mad_baseline: float


@dataclass(frozen=True)
class EvaluationReport:
    attribute: str
    strategy: str
    n_clusters: int
    threshold: float
    ari_train: float
    selection_accuracy: float
    mean_mad_selected: float
    mean_mad_baseline: float
    outcomes: tuple[TestOutcome, ...]

    def to_payload(self) -> dict[str, Any]:
        return {
            "attribute": self.attribute,
            "strategy": self.strategy,
            "n_clusters": self.n_clusters,
            "threshold": self.threshold,
            "ari_train": self.ari_train,
            "selection_accuracy": self.selection_accuracy,
            "mean_mad_selected": self.mean_mad_selected,
            "mean_mad_baseline": self.mean_mad_baseline,
            "outcomes": [
                {
                    "project_id": o.project_id,
                    "true_archetype": o.true_archetype,
                    "selected_cluster_id": o.selected_cluster_id,
                    "selected_majority_archetype": o.selected_majority_archetype,
                    "selection_correct": o.selection_correct,
                    "mad_selected": o.mad_selected,
                    "mad_baseline": o.mad_baseline,
                }
                for o in self.outcomes
            ],
        }

    def to_csv_text(self) -> str:
        lines = [
            "project_id,true_archetype,selected_cluster_id,"
            "selected_majority_archetype,selection_correct,mad_selected,mad_baseline"
        ]
        for o in self.outcomes:
            lines.append(
                f"{o.project_id},{o.true_archetype},{o.selected_cluster_id},"
                f"{o.selected_majority_archetype},{str(o.selection_correct).lower()},"
                f"{_fmt(o.mad_selected)},{_fmt(o.mad_baseline)}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [
            f"attribute:            {self.attribute}",
            f"strategy:             {self.strategy}",
            f"clusters:             {self.n_clusters} (threshold {self.threshold:.6g})",
            f"train ARI:            {self.ari_train:.4f}",
            f"selection accuracy:   {self.selection_accuracy:.4f}"
            f" ({sum(o.selection_correct for o in self.outcomes)}/{len(self.outcomes)})",
            f"mean MAD (selected):  {self.mean_mad_selected:.4f}",
            f"mean MAD (baseline):  {self.mean_mad_baseline:.4f}",
        ]
        return "\n".join(lines) + "\n"


def from_payload(raw: dict[str, Any]) -> EvaluationReport:
    try:
        return EvaluationReport(
            attribute=raw["attribute"],
            strategy=raw["strategy"],
            n_clusters=int(raw["n_clusters"]),
            threshold=float(raw["threshold"]),
            ari_train=float(raw["ari_train"]),
            selection_accuracy=float(raw["selection_accuracy"]),
            mean_mad_selected=float(raw["mean_mad_selected"]),
            mean_mad_baseline=float(raw["mean_mad_baseline"]),
            outcomes=tuple(
                TestOutcome(
                    project_id=o["project_id"],
                    true_archetype=int(o["true_archetype"]),
                    selected_cluster_id=int(o["selected_cluster_id"]),
                    selected_majority_archetype=int(o["selected_majority_archetype"]),
                    selection_correct=bool(o["selection_correct"]),
                    mad_selected=float(o["mad_selected"]),
                    mad_baseline=float(o["mad_baseline"]),
                )
                for o in raw["outcomes"]
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"evaluation payload malformed: {exc}") from exc


def global_mean_curve(base: ExperienceBase, attribute: str) -> CharacteristicCurve:
    """Pointwise mean of every training curve (member-count weighted cluster mean)."""
    clusters = base.clusters_for(attribute)
    total = sum(c.member_count for c in clusters)
    stack = np.stack([c.cluster_curve.array() * c.member_count for c in clusters])
    mean = np.sum(stack, axis=0) / total
    return CharacteristicCurve(
        project_id="baseline:global-mean",
        attribute=attribute,
        values=tuple(float(v) for v in mean),
        mode=base.mode,
    )


def _cluster_majority_archetypes(
    base: ExperienceBase, attribute: str, ground_truth: Mapping[str, int]
) -> dict[int, int]:
    majorities: dict[int, int] = {}
    for cluster in base.clusters_for(attribute):
        counts: dict[int, int] = {}
        for member in cluster.member_ids:
            counts[ground_truth[member]] = counts.get(ground_truth[member], 0) + 1
        majorities[cluster.cluster_id] = sorted(
            counts.items(), key=lambda kv: (-kv[1], kv[0])
        )[0][0]
    return majorities


def _cumulative_points(record: ProjectRecord, attribute: str) -> list[tuple[float, float]]:
    series = record.series[attribute]
    running = np.cumsum(np.asarray(series.values))
    return list(zip(series.times, (float(v) for v in running)))


def evaluate(
    base: ExperienceBase,
    test: Sequence[ProjectRecord],
    ground_truth: Mapping[str, int],
    strategy: str = STATIC,
    attribute: str = ATTRIBUTE,
    control: ControlConfig | None = None,
) -> EvaluationReport:
    """Score the base against held-out projects.

    Reports the train-partition ARI versus ground truth, the share of test
    projects whose selected cluster carries their archetype, and per-project
    mean absolute deviation of the selected cluster curve versus the global
    mean baseline. Dynamic and hybrid strategies feed measurements up to
    progress 0.5 (at least min_prefix_points of them) before reselecting.
    """
    if strategy not in STRATEGIES:
        raise InvalidConfig(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    control = control or ControlConfig()
    clusters = base.clusters_for(attribute)

    member_label: dict[str, int] = {}
    for cluster in clusters:
        for member in cluster.member_ids:
            member_label[member] = cluster.cluster_id
    train_ids = sorted(member_label)
    ari = adjusted_rand_index(
        [ground_truth[pid] for pid in train_ids],
        [member_label[pid] for pid in train_ids],
    )

    majorities = _cluster_majority_archetypes(base, attribute, ground_truth)
    baseline = global_mean_curve(base, attribute)
    cluster_by_id = {c.cluster_id: c for c in clusters}

    outcomes = []
    for record in sorted(test, key=lambda r: r.project_id):
        project = plan_project(
            base,
            record.project_id,
            attribute,
            record.context,
            planned_duration=1.0,
            config=control,
        )
        if strategy != STATIC:
            points = _cumulative_points(record, attribute)
            prefix = [pt for pt in points if pt[0] <= 0.5]
            if len(prefix) < control.min_prefix_points:
                prefix = points[: control.min_prefix_points]
            for t, value in prefix:
                record_actual(project, t, value)
            if strategy == DYNAMIC:
                selected = select_dynamic(project)
            else:
                selected, _ = select_hybrid(project)
        else:
            selected = project.selected_cluster_id

        actual = resample(record.series[attribute], base.grid, base.mode).array()
        selected_vals = cluster_by_id[selected].cluster_curve.array()
        mad_selected = float(np.mean(np.abs(selected_vals - actual)))
        mad_baseline = float(np.mean(np.abs(baseline.array() - actual)))
        truth = ground_truth[record.project_id]
        outcomes.append(
            TestOutcome(
                project_id=record.project_id,
                true_archetype=truth,
                selected_cluster_id=selected,
                selected_majority_archetype=majorities[selected],
                selection_correct=majorities[selected] == truth,
                mad_selected=mad_selected,
                mad_baseline=mad_baseline,
            )
        )

    n_test = len(outcomes)
    return EvaluationReport(
        attribute=attribute,
        strategy=strategy,
        n_clusters=len(clusters),
        threshold=base.attributes[attribute].threshold,
        ari_train=float(ari),
        selection_accuracy=(
            sum(o.selection_correct for o in outcomes) / n_test if n_test else 0.0
        ),
        mean_mad_selected=(
            math.fsum(o.mad_selected for o in outcomes) / n_test if n_test else 0.0
        ),
        mean_mad_baseline=(
            math.fsum(o.mad_baseline for o in outcomes) / n_test if n_test else 0.0
        ),
        outcomes=tuple(outcomes),
    )
