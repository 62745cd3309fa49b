"""Group characteristic curves into clusters of mutually similar curves.

Agglomerative complete linkage: repeatedly merge the two clusters whose
worst-case member distance is smallest, while that distance stays within the
threshold. Complete linkage realizes the threshold as an all-pairs guarantee:
every pair of curves inside a finished cluster is within the threshold.

Everything is deterministic: leaves are numbered by ascending project id,
distance ties break on the smallest (left id, right id) pair, and final
cluster ids are assigned by ascending smallest member project id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .context import AggregatedContext, ContextSchema, ContextVector, aggregate_contexts
from .curves import (
    CUMULATIVE,
    CharacteristicCurve,
    check_metric,
    distance,
)
from .errors import (
    DuplicateProject,
    HeterogeneousCurves,
    InvalidConfig,
    InvalidTargetK,
    MissingContext,
)

# Threshold suggestions are clamped to stay positive even when all merge
# heights are zero (duplicate curves).
_MIN_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ClusteringConfig:
    """Threshold in curve-distance units plus the metric; linkage is always complete."""

    threshold: float
    metric: str = "rms"

    def __post_init__(self) -> None:
        object.__setattr__(self, "threshold", float(self.threshold))
        if not self.threshold > 0.0:
            raise InvalidConfig(f"threshold must be > 0, got {self.threshold}")
        check_metric(self.metric)


@dataclass(frozen=True)
class DendrogramMerge:
    left_id: int
    right_id: int
    height: float
    new_id: int


@dataclass(frozen=True)
class Dendrogram:
    """All n-1 merges in order. Leaves 0..n-1 follow ascending project id."""

    leaf_projects: tuple[str, ...]
    merges: tuple[DendrogramMerge, ...]

    def heights(self) -> tuple[float, ...]:
        return tuple(m.height for m in self.merges)


@dataclass(frozen=True)
class Cluster:
    cluster_id: int
    attribute: str
    member_ids: tuple[str, ...]
    cluster_curve: CharacteristicCurve
    context: AggregatedContext
    member_count: int


def _sorted_homogeneous(
    curves: Sequence[CharacteristicCurve],
) -> list[CharacteristicCurve]:
    if not curves:
        raise InvalidConfig("clustering needs at least one curve")
    first = curves[0]
    for c in curves:
        if c.attribute != first.attribute:
            raise HeterogeneousCurves(
                f"mixed attributes: {first.attribute!r} vs {c.attribute!r}"
            )
        if len(c.values) != len(first.values):
            raise HeterogeneousCurves(
                f"mixed grid sizes: {len(first.values)} vs {len(c.values)}"
            )
        if c.mode != first.mode:
            raise HeterogeneousCurves(f"mixed modes: {first.mode!r} vs {c.mode!r}")
    ordered = sorted(curves, key=lambda c: c.project_id)
    for a, b in zip(ordered, ordered[1:]):
        if a.project_id == b.project_id:
            raise DuplicateProject(f"duplicate curve for project {a.project_id!r}")
    return ordered


def _pairwise(curves: Sequence[CharacteristicCurve], metric: str) -> np.ndarray:
    n = len(curves)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = distance(curves[i], curves[j], metric)
    return d


def _full_merges(d: np.ndarray) -> list[DendrogramMerge]:
    """All n-1 complete-linkage merges over the leaf distance matrix."""
    n = d.shape[0]
    size = 2 * n - 1
    link = np.zeros((size, size))
    link[:n, :n] = d
    active = list(range(n))
    merges: list[DendrogramMerge] = []
    for step in range(n - 1):
        best: tuple[float, int, int] | None = None
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                i, j = active[ai], active[bi]
                cand = (link[i, j], i, j)
                if best is None or cand < best:
                    best = cand
        height, i, j = best  # type: ignore[misc]
        new_id = n + step
        for k in active:
            if k not in (i, j):
                link[new_id, k] = link[k, new_id] = max(link[i, k], link[j, k])
        active.remove(i)
        active.remove(j)
        active.append(new_id)
        merges.append(DendrogramMerge(i, j, float(height), new_id))
    return merges


def _cut(
    n: int, merges: Sequence[DendrogramMerge], threshold: float
) -> list[list[int]]:
    """Leaf partition after applying every merge with height <= threshold."""
    groups: dict[int, list[int]] = {i: [i] for i in range(n)}
    for merge in merges:
        if merge.height > threshold:
            break
        merged = groups.pop(merge.left_id) + groups.pop(merge.right_id)
        groups[merge.new_id] = merged
    return list(groups.values())


def cluster_curves(
    curves: Sequence[CharacteristicCurve],
    contexts: Mapping[str, ContextVector],
    config: ClusteringConfig,
    schema: ContextSchema,
) -> tuple[list[Cluster], Dendrogram]:
    """Cluster curves under the config threshold and average each group.

    Returns the clusters (ids 0..m-1 by ascending smallest member project id)
    together with the full dendrogram computed past the threshold for audit.
    """
    ordered = _sorted_homogeneous(curves)
    for c in ordered:
        if c.project_id not in contexts:
            raise MissingContext(f"no context for project {c.project_id!r}")

    d = _pairwise(ordered, config.metric)
    merges = _full_merges(d)
    dendrogram = Dendrogram(
        leaf_projects=tuple(c.project_id for c in ordered),
        merges=tuple(merges),
    )

    groups = _cut(len(ordered), merges, config.threshold)
    groups.sort(key=lambda leaves: min(ordered[i].project_id for i in leaves))

    attribute = ordered[0].attribute
    mode = ordered[0].mode
    clusters: list[Cluster] = []
    for cluster_id, leaves in enumerate(groups):
        members = sorted(leaves, key=lambda i: ordered[i].project_id)
        member_ids = tuple(ordered[i].project_id for i in members)
        stack = np.stack([ordered[i].array() for i in members])
        mean = np.mean(stack, axis=0)
        if mode == CUMULATIVE:
            mean = np.maximum.accumulate(mean)
        curve = CharacteristicCurve(
            project_id=f"cluster:{cluster_id}",
            attribute=attribute,
            values=tuple(float(v) for v in mean),
            mode=mode,
        )
        context = aggregate_contexts([contexts[pid] for pid in member_ids], schema)
        clusters.append(
            Cluster(
                cluster_id=cluster_id,
                attribute=attribute,
                member_ids=member_ids,
                cluster_curve=curve,
                context=context,
                member_count=len(member_ids),
            )
        )
    return clusters, dendrogram


def suggest_threshold(
    curves: Sequence[CharacteristicCurve], target_k: int, metric: str = "rms"
) -> float:
    """Threshold that cuts the dendrogram into exactly target_k clusters.

    Returns the midpoint between the (n-k)-th and (n-k+1)-th smallest merge
    heights; at the ends, half the smallest height (k=n) or 1.1x the largest
    (k=1). Exact when merge heights are distinct.
    """
    check_metric(metric)
    n = len(curves)
    if not isinstance(target_k, int) or target_k < 1 or target_k > n:
        raise InvalidTargetK(f"target_k must be in 1..{n}, got {target_k!r}")
    if n == 1:
        return 1.0
    ordered = _sorted_homogeneous(curves)
    heights = [m.height for m in _full_merges(_pairwise(ordered, metric))]
    if target_k == n:
        theta = heights[0] / 2.0
    elif target_k == 1:
        theta = heights[-1] * 1.1
    else:
        theta = (heights[n - target_k - 1] + heights[n - target_k]) / 2.0
    return max(theta, _MIN_THRESHOLD)
