"""Generator determinism, archetype recovery, and the evaluation report."""

from __future__ import annotations


import numpy as np
import pytest

from sprintctl import (
    ClusteringConfig,
    GeneratorConfig,
    Grid,
    adjusted_rand_index,
    build,
    evaluate,
    generate,
    ingest,
    resample,
    suggest_threshold,
    write_portfolio,
)
from sprintctl.errors import InvalidConfig
from sprintctl.simulate import from_payload


def build_from(portfolio, target_k=5):
    curves = [
        resample(r.series["effort"], Grid(portfolio.grid_size), "cumulative")
        for r in portfolio.train
    ]
    theta = suggest_threshold(curves, target_k)
    return build(
        list(portfolio.train),
        portfolio.schema,
        {"effort": ClusteringConfig(theta)},
        Grid(portfolio.grid_size),
        "cumulative",
    )


# ---------------------------------------------------------------------------
# generation


def test_default_counts_match_the_case_study_shape():
    portfolio = generate(GeneratorConfig(seed=42))
    assert len(portfolio.train) == 17
    assert len(portfolio.test) == 4
    assert len(portfolio.schema.factors) == 10
    assert len(portfolio.archetypes) == 5
    kinds = [f.kind for f in portfolio.schema.factors]
    assert kinds.count("numeric") == 5 and kinds.count("categorical") == 5


def test_same_seed_reproduces_output():
    a = generate(GeneratorConfig(seed=7))
    b = generate(GeneratorConfig(seed=7))
    assert a.train == b.train
    assert a.test == b.test
    assert a.ground_truth == b.ground_truth


def test_different_seeds_differ():
    a = generate(GeneratorConfig(seed=1))
    b = generate(GeneratorConfig(seed=2))
    assert a.train != b.train


def test_noiseless_curves_equal_archetype_base():
    portfolio = generate(
        GeneratorConfig(seed=5, value_noise=0.0, context_noise=0.0, flip_prob=0.0)
    )
    for record in portfolio.train + portfolio.test:
        archetype = portfolio.archetypes[portfolio.ground_truth[record.project_id]]
        curve = resample(record.series["effort"], Grid(20), "cumulative")
        np.testing.assert_allclose(
            curve.values, archetype.base_curve, rtol=1e-12, atol=1e-12
        )
        assert record.context == archetype.context_template


def test_noiseless_recovery_is_perfect():
    portfolio = generate(
        GeneratorConfig(seed=9, value_noise=0.0, context_noise=0.0, flip_prob=0.0)
    )
    base = build_from(portfolio)
    report = evaluate(base, list(portfolio.test), portfolio.ground_truth)
    assert report.n_clusters == 5
    assert report.ari_train == 1.0
    assert report.selection_accuracy == 1.0


def test_round_robin_guarantees_every_archetype_trains():
    for seed in range(8):
        portfolio = generate(GeneratorConfig(seed=seed))
        train_archetypes = {
            portfolio.ground_truth[r.project_id] for r in portfolio.train
        }
        assert train_archetypes == set(range(5))


def test_cumulative_base_curves_are_non_decreasing():
    portfolio = generate(GeneratorConfig(seed=3, value_noise=0.4))
    for archetype in portfolio.archetypes:
        values = archetype.base_curve
        assert all(b >= a for a, b in zip(values, values[1:]))
    for record in portfolio.train:
        assert all(v >= 0.0 for v in record.series["effort"].values)


def test_generator_config_validation():
    with pytest.raises(InvalidConfig):
        GeneratorConfig(n_archetypes=0)
    with pytest.raises(InvalidConfig):
        GeneratorConfig(value_noise=-0.1)
    with pytest.raises(InvalidConfig):
        GeneratorConfig(flip_prob=1.5)
    with pytest.raises(InvalidConfig):
        GeneratorConfig(grid_size=1)


def test_portfolio_files_round_trip_exactly(tmp_path):
    portfolio = generate(GeneratorConfig(seed=13))
    write_portfolio(portfolio, tmp_path)
    train = ingest(
        tmp_path / "train_curves.csv",
        tmp_path / "train_contexts.csv",
        tmp_path / "schema.json",
    )
    assert train == sorted(portfolio.train, key=lambda r: r.project_id)
    test = ingest(
        tmp_path / "test_curves.csv",
        tmp_path / "test_contexts.csv",
        tmp_path / "schema.json",
    )
    assert test == sorted(portfolio.test, key=lambda r: r.project_id)


# ---------------------------------------------------------------------------
# adjusted Rand index


def test_ari_matches_sklearn_on_random_labelings():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(0)
    for _ in range(60):
        n = int(rng.integers(2, 40))
        a = rng.integers(0, 5, n).tolist()
        b = rng.integers(0, 5, n).tolist()
        ours = adjusted_rand_index(a, b)
        theirs = float(sklearn_metrics.adjusted_rand_score(a, b))
        assert ours == pytest.approx(theirs, abs=1e-12)


def test_ari_degenerate_cases():
    assert adjusted_rand_index([0, 0, 0], [1, 1, 1]) == 1.0
    assert adjusted_rand_index([0, 1, 2], [2, 0, 1]) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) < 0.5
    with pytest.raises(InvalidConfig):
        adjusted_rand_index([0], [0, 1])


def test_ari_degrades_with_value_noise():
    def mean_ari(sigma):
        total = 0.0
        for seed in range(20):
            portfolio = generate(GeneratorConfig(seed=seed, value_noise=sigma))
            report = evaluate(
                build_from(portfolio), list(portfolio.test), portfolio.ground_truth
            )
            total += report.ari_train
        return total / 20

    low, mid, high = mean_ari(0.02), mean_ari(0.25), mean_ari(1.2)
    assert low >= mid - 1e-9
    assert mid >= high - 1e-9
    assert low > high  # strict drop across the full span


# ---------------------------------------------------------------------------
# evaluation report


def test_report_contains_baseline_fields():
    portfolio = generate(GeneratorConfig(seed=21))
    report = evaluate(build_from(portfolio), list(portfolio.test), portfolio.ground_truth)
    payload = report.to_payload()
    assert {"mean_mad_selected", "mean_mad_baseline", "ari_train", "outcomes"} <= set(
        payload
    )
    for outcome in payload["outcomes"]:
        assert {"mad_selected", "mad_baseline", "selection_correct"} <= set(outcome)
    assert from_payload(payload) == report


def test_report_csv_and_text_render():
    portfolio = generate(GeneratorConfig(seed=21))
    report = evaluate(build_from(portfolio), list(portfolio.test), portfolio.ground_truth)
    csv_text = report.to_csv_text()
    assert csv_text.splitlines()[0].startswith("project_id,true_archetype")
    assert len(csv_text.splitlines()) == 1 + len(report.outcomes)
    assert "selection accuracy" in report.to_text()


@pytest.mark.parametrize("strategy", ["static", "dynamic", "hybrid"])
def test_every_strategy_evaluates(strategy):
    portfolio = generate(GeneratorConfig(seed=30))
    report = evaluate(
        build_from(portfolio),
        list(portfolio.test),
        portfolio.ground_truth,
        strategy=strategy,
    )
    assert report.strategy == strategy
    assert 0.0 <= report.selection_accuracy <= 1.0


def test_unknown_strategy_rejected():
    portfolio = generate(GeneratorConfig(seed=30))
    with pytest.raises(InvalidConfig):
        evaluate(
            build_from(portfolio),
            list(portfolio.test),
            portfolio.ground_truth,
            strategy="oracle",
        )
