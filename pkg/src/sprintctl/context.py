"""Project context vectors and similarity between contexts.

A context captures the boundary conditions of a project (team, technology,
organization) as named factors, either numeric or categorical. Similarity
against a cluster's aggregated context drives the initial curve selection.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from .errors import EmptyMemberList, SchemaViolation

NUMERIC = "numeric"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, CATEGORICAL)

FactorValue = Union[float, str]


@dataclass(frozen=True)
class Factor:
    name: str
    kind: str
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaViolation("factor name must be non-empty")
        if self.kind not in KINDS:
            raise SchemaViolation(
                f"factor {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}"
            )
        object.__setattr__(self, "weight", float(self.weight))
        if not math.isfinite(self.weight) or self.weight <= 0.0:
            raise SchemaViolation(f"factor {self.name!r}: weight must be > 0")


@dataclass(frozen=True)
class ContextSchema:
    """Ordered factor declarations; names are unique."""

    factors: tuple[Factor, ...]

    def __post_init__(self) -> None:
        factors = tuple(self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise SchemaViolation("schema needs at least one factor")
        names = [f.name for f in factors]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaViolation(f"duplicate factor names in schema: {dupes}")

    def factor(self, name: str) -> Factor:
        for f in self.factors:
            if f.name == name:
                return f
        raise SchemaViolation(f"unknown factor {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def validate_assignment(self, name: str, value: FactorValue) -> None:
        factor = self.factor(name)
        if factor.kind == NUMERIC:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaViolation(
                    f"factor {name!r} is numeric but got {value!r}"
                )
            if not math.isfinite(float(value)):
                raise SchemaViolation(f"factor {name!r}: value must be finite")
        else:
            if not isinstance(value, str):
                raise SchemaViolation(
                    f"factor {name!r} is categorical but got {value!r}"
                )

    def validate(self, context: "ContextVector") -> None:
        for name, value in context.assignments.items():
            self.validate_assignment(name, value)


@dataclass(frozen=True)
class ContextVector:
    """Factor assignments for one project; unassigned factors are simply absent."""

    assignments: Mapping[str, FactorValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: dict[str, FactorValue] = {}
        for name, value in dict(self.assignments).items():
            if isinstance(value, bool):
                raise SchemaViolation(f"factor {name!r}: boolean values not allowed")
            if isinstance(value, (int, float)):
                value = float(value)
                if not math.isfinite(value):
                    raise SchemaViolation(f"factor {name!r}: value must be finite")
            elif not isinstance(value, str):
                raise SchemaViolation(
                    f"factor {name!r}: values must be numbers or strings, got {value!r}"
                )
            cleaned[str(name)] = value
        object.__setattr__(self, "assignments", cleaned)

    def get(self, name: str) -> FactorValue | None:
        return self.assignments.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.assignments


@dataclass(frozen=True)
class AggregatedContext:
    """Cluster-level context: numeric means plus categorical majority values."""

    means: Mapping[str, float]
    representatives: Mapping[str, str]
    frequencies: Mapping[str, Mapping[str, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", dict(self.means))
        object.__setattr__(self, "representatives", dict(self.representatives))
        object.__setattr__(
            self, "frequencies", {k: dict(v) for k, v in dict(self.frequencies).items()}
        )

    def get(self, name: str) -> FactorValue | None:
        if name in self.means:
            return self.means[name]
        return self.representatives.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.means or name in self.representatives


ContextLike = Union[ContextVector, AggregatedContext]

FactorRanges = Mapping[str, tuple[float, float]]


def aggregate_contexts(
    members: Sequence[ContextVector], schema: ContextSchema
) -> AggregatedContext:
    """Combine member contexts: numeric factors average, categorical take the majority.

    Categorical ties break to the lexicographically smallest value, which makes
    the result independent of member order.
    """
    if not members:
        raise EmptyMemberList("cannot aggregate an empty member list")
    for member in members:
        schema.validate(member)

    means: dict[str, float] = {}
    representatives: dict[str, str] = {}
    frequencies: dict[str, dict[str, int]] = {}
    for factor in schema.factors:
        assigned = [m.get(factor.name) for m in members if factor.name in m]
        if not assigned:
            continue
        if factor.kind == NUMERIC:
            values = sorted(float(v) for v in assigned)  # order-independent sum
            means[factor.name] = math.fsum(values) / len(values)
        else:
            counts = Counter(str(v) for v in assigned)
            best = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
            representatives[factor.name] = best
            frequencies[factor.name] = dict(sorted(counts.items()))
    return AggregatedContext(means, representatives, frequencies)


def compute_ranges(
    contexts: Sequence[ContextVector], schema: ContextSchema
) -> dict[str, tuple[float, float]]:
    """Observed (min, max) per numeric factor; factors never assigned are absent."""
    ranges: dict[str, tuple[float, float]] = {}
    for context in contexts:
        schema.validate(context)
    for factor in schema.factors:
        if factor.kind != NUMERIC:
            continue
        values = [
            float(c.get(factor.name)) for c in contexts if factor.name in c
        ]
        if values:
            ranges[factor.name] = (min(values), max(values))
    return ranges


def _validate_side(side: ContextLike, schema: ContextSchema) -> None:
    if isinstance(side, ContextVector):
        schema.validate(side)
        return
    for name, value in side.means.items():
        schema.validate_assignment(name, value)
    for name, value in side.representatives.items():
        schema.validate_assignment(name, value)


def similarity(
    a: ContextVector,
    b: ContextLike,
    schema: ContextSchema,
    ranges: FactorRanges,
) -> float:
    """Weighted similarity in [0, 1] over factors assigned on both sides.

    Numeric factors score 1 - |a-b|/range (clamped to [0, 1]; a zero or
    unknown range scores all-or-nothing on equality). Categorical factors
    score 1 on an exact match, with the aggregated side represented by its
    majority value. Weights renormalize over the shared factors; two contexts
    sharing no factor score 0.
    """
    _validate_side(a, schema)
    _validate_side(b, schema)

    total = 0.0
    weight_sum = 0.0
    for factor in schema.factors:
        if factor.name not in a or factor.name not in b:
            continue
        av = a.get(factor.name)
        bv = b.get(factor.name)
        if factor.kind == NUMERIC:
            av_f, bv_f = float(av), float(bv)
            lo_hi = ranges.get(factor.name)
            span = (lo_hi[1] - lo_hi[0]) if lo_hi else 0.0
            if span <= 0.0:
                score = 1.0 if av_f == bv_f else 0.0
            else:
                score = 1.0 - abs(av_f - bv_f) / span
                score = min(1.0, max(0.0, score))
        else:
            score = 1.0 if str(av) == str(bv) else 0.0
        total += factor.weight * score
        weight_sum += factor.weight
    if weight_sum == 0.0:
        return 0.0
    return total / weight_sum
