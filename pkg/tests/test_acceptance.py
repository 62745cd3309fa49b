"""Acceptance suite: one test per criterion, each printing its pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.
"""

from __future__ import annotations

import random
import time

import pytest

from sprintctl import (
    CharacteristicCurve,
    ClusteringConfig,
    ContextSchema,
    ContextVector,
    ControlConfig,
    Factor,
    GeneratorConfig,
    Grid,
    ReplanCause,
    build,
    cluster_curves,
    distance,
    evaluate,
    generate,
    load_base,
    plan_project,
    record_actual,
    replan,
    resample,
    save_base,
    select_dynamic,
    select_hybrid,
    select_static,
    suggest_threshold,
)
from sprintctl.canon import canonical_dumps
from sprintctl.cli import main as cli_main
from sprintctl.controller import events_to_payload
from sprintctl.curves import grid_positions
from sprintctl.errors import InsufficientPrefix

from conftest import make_base
from test_clustering import oracle_partition, partition_of
from test_experience import random_base

SEEDS = range(20)


def report(name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: {status}{suffix}")
    assert passed, f"{name} failed{suffix}"


def sweep():
    """The 20-seed default sweep shared by the first three criteria."""
    results = []
    for seed in SEEDS:
        portfolio = generate(GeneratorConfig(seed=seed))
        grid = Grid(portfolio.grid_size)
        curves = [
            resample(r.series["effort"], grid, "cumulative") for r in portfolio.train
        ]
        theta = suggest_threshold(curves, 5)
        base = build(
            list(portfolio.train),
            portfolio.schema,
            {"effort": ClusteringConfig(theta)},
            grid,
            "cumulative",
        )
        outcome = evaluate(base, list(portfolio.test), portfolio.ground_truth)
        results.append(outcome)
    return results


@pytest.fixture(scope="module")
def sweep_results():
    start = time.perf_counter()
    results = sweep()
    return results, time.perf_counter() - start


def test_case_study_shape_replication(sweep_results):
    results, elapsed = sweep_results
    exactly_five = sum(r.n_clusters == 5 for r in results)
    ari_hits = sum(r.ari_train >= 0.9 for r in results)
    passed = exactly_five == 20 and ari_hits >= 18 and elapsed < 10.0
    report(
        "case-study shape replication",
        passed,
        f"5-clusters {exactly_five}/20, ARI>=0.9 in {ari_hits}/20, {elapsed:.2f}s",
    )


def test_static_selection_quality(sweep_results):
    results, _ = sweep_results
    hits = sum(r.selection_accuracy >= 3 / 4 for r in results)
    report("static selection quality", hits >= 16, f"accuracy>=3/4 in {hits}/20")


def test_prediction_error_beats_baseline(sweep_results):
    results, _ = sweep_results
    wins = sum(r.mean_mad_selected < r.mean_mad_baseline for r in results)
    report("prediction-error direction", wins >= 15, f"beats baseline in {wins}/20")


def test_oracle_equivalence_on_200_instances():
    rng = random.Random(20240)
    schema = ContextSchema((Factor("lang", "categorical"),))
    matched = 0
    within = 0
    total = 200
    for _ in range(total):
        n = rng.randint(1, 6)
        size = rng.randint(2, 6)
        ids = [f"p{i:02d}" for i in range(n)]
        rows = [[rng.uniform(-10, 10) for _ in range(size)] for _ in range(n)]
        metric = rng.choice(["rms", "max"])
        theta = rng.uniform(0.2, 12.0)
        curves = [
            CharacteristicCurve(pid, "effort", tuple(row), "raw")
            for pid, row in zip(ids, rows)
        ]
        contexts = {pid: ContextVector({"lang": "x"}) for pid in ids}
        clusters, _ = cluster_curves(
            curves, contexts, ClusteringConfig(theta, metric), schema
        )
        if partition_of(clusters) == oracle_partition(rows, ids, theta, metric):
            matched += 1
        by_id = {c.project_id: c for c in curves}
        if all(
            distance(by_id[a], by_id[b], metric) <= theta
            for cluster in clusters
            for a in cluster.member_ids
            for b in cluster.member_ids
        ):
            within += 1
    report(
        "oracle equivalence",
        matched == total and within == total,
        f"partitions {matched}/{total}, intra<=theta {within}/{total}",
    )


def _interp(t, xs, ys):
    """Independent piecewise-linear interpolation for the corridor recheck."""
    if t <= xs[0]:
        return ys[0]
    if t >= xs[-1]:
        return ys[-1]
    for j in range(len(xs) - 1):
        if xs[j] <= t <= xs[j + 1]:
            slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j])
            return ys[j] + slope * (t - xs[j])
    raise AssertionError("unreachable")


def test_controller_determinism_and_corridor():
    schema = ContextSchema((Factor("lang", "categorical"),))

    # (a) byte-identical event log on replay
    def run_stream():
        base = make_base(
            {"a": [2.0, 4.0, 6.0], "b": [0.0, 1.0, 2.0]},
            {"a": {"lang": "x"}, "b": {"lang": "y"}},
            theta=0.5,
            schema=schema,
        )
        project = plan_project(
            base, "replay", "effort", ContextVector({"lang": "x"}), 1.0,
            ControlConfig(min_prefix_points=2),
        )
        for t, value in ((0.1, 2.1), (0.4, 9.0), (0.6, 0.5), (0.9, 2.2)):
            record_actual(project, t, value)
            if value > 5.0:
                replan(project, ReplanCause.wrong_experience())
        return canonical_dumps(events_to_payload(project.events)).encode()

    replay_ok = run_stream() == run_stream()

    # (b) 1,000 random (plan, actual, tau) triples vs direct recomputation
    rng = random.Random(555)
    corridor_ok = True
    failures = 0
    for _ in range(1000):
        size = rng.randint(2, 8)
        plan_values = [rng.uniform(-5, 50) for _ in range(size)]
        if rng.random() < 0.2:
            plan_values[rng.randrange(size)] = 0.0
        tau = rng.uniform(0.01, 0.7)
        epsilon = 1e-9
        base = make_base(
            {"only": plan_values}, {"only": {"lang": "x"}}, theta=1.0, schema=schema
        )
        project = plan_project(
            base, "probe", "effort", ContextVector({"lang": "x"}), 1.0,
            ControlConfig(tolerance=tau, epsilon=epsilon),
        )
        t = rng.uniform(0.0, 1.0)
        value = rng.uniform(-10, 60)
        events = record_actual(project, t, value)
        plan_at_t = _interp(t, list(grid_positions(size)), plan_values)
        deviation = abs(value - plan_at_t) / max(abs(plan_at_t), epsilon)
        expected = deviation > tau
        fired = any(e.kind == "DeviationDetected" for e in events)
        if fired != expected:
            failures += 1
            corridor_ok = False
    report(
        "controller determinism & corridor",
        replay_ok and corridor_ok,
        f"replay {'ok' if replay_ok else 'differs'}, corridor mismatches {failures}/1000",
    )


def test_hybrid_agreement_law():
    rng = random.Random(777)
    schema = ContextSchema((Factor("lang", "categorical"), Factor("team", "numeric")))
    langs = ["a", "b", "c", "d"]
    agreements = 0
    violations = 0
    for _ in range(1000):
        n_clusters = rng.randint(2, 4)
        curves = {}
        contexts = {}
        for i in range(n_clusters):
            pid = f"p{i}"
            level = rng.uniform(0, 30) + 40.0 * i
            curves[pid] = [level, level + rng.uniform(0, 10), level + rng.uniform(0, 20)]
            contexts[pid] = {"lang": langs[i], "team": float(rng.randint(1, 20))}
        base = make_base(curves, contexts, theta=5.0, schema=schema)
        config = ControlConfig(
            min_prefix_points=rng.choice([1, 2, 3]),
            hybrid_switch=rng.uniform(0.0, 1.0),
        )
        project = plan_project(
            base, "h", "effort",
            ContextVector({"lang": rng.choice(langs), "team": float(rng.randint(1, 20))}),
            1.0, config,
        )
        t = 0.0
        for _ in range(rng.randint(0, 5)):
            t += rng.uniform(0.05, 0.25)
            if t > 1.0:
                break
            record_actual(project, t, rng.uniform(0, 150))
        static_choice = select_static(project)
        try:
            dynamic_choice = select_dynamic(project)
        except InsufficientPrefix:
            dynamic_choice = None
        hybrid_choice, conflict = select_hybrid(project)
        if dynamic_choice is None or static_choice == dynamic_choice:
            agreements += 1
            if hybrid_choice != static_choice or conflict is not None:
                violations += 1
    report(
        "hybrid agreement law",
        violations == 0 and agreements > 0,
        f"{agreements}/1000 agreeing cases, {violations} violations",
    )


def test_persistence_laws(tmp_path):
    rng = random.Random(31337)
    round_trips = 0
    byte_stable = 0
    total = 100
    for i in range(total):
        base = random_base(rng)
        path_a = tmp_path / f"{i}_a.eb"
        path_b = tmp_path / f"{i}_b.eb"
        save_base(base, path_a)
        loaded = load_base(path_a)
        if loaded == base:
            round_trips += 1
        save_base(loaded, path_b)
        if path_a.read_bytes() == path_b.read_bytes():
            byte_stable += 1

    # CLI golden files: identical bytes across two full runs
    for run in ("g1", "g2"):
        out = tmp_path / run
        assert cli_main(["simulate", "--seed", "3", "--out-dir", str(out / "data")]) == 0
        assert (
            cli_main(
                [
                    "build",
                    "--curves", str(out / "data" / "train_curves.csv"),
                    "--contexts", str(out / "data" / "train_contexts.csv"),
                    "--schema", str(out / "data" / "schema.json"),
                    "--attribute", "effort",
                    "--target-k", "5",
                    "--out", str(out / "base.eb"),
                ]
            )
            == 0
        )
    golden = (tmp_path / "g1" / "base.eb").read_bytes() == (
        tmp_path / "g2" / "base.eb"
    ).read_bytes()
    golden = golden and all(
        (tmp_path / "g1" / "data" / f.name).read_bytes() == f.read_bytes()
        for f in (tmp_path / "g2" / "data").iterdir()
    )
    report(
        "persistence laws",
        round_trips == total and byte_stable == total and golden,
        f"round-trip {round_trips}/{total}, byte-stable {byte_stable}/{total}, "
        f"CLI golden {'ok' if golden else 'differs'}",
    )
