"""Ingestion diagnostics, build determinism, and the persistence laws."""

from __future__ import annotations

import random

import pytest

from sprintctl import (
    ClusteringConfig,
    ContextSchema,
    ContextVector,
    Factor,
    GeneratorConfig,
    Grid,
    ProjectRecord,
    build,
    generate,
    ingest,
    load_base,
    load_schema,
    save_base,
    write_portfolio,
)
from sprintctl.experience import base_to_payload
from sprintctl.errors import (
    CorruptFile,
    DuplicateProject,
    InvalidConfig,
    IoError,
    ParseError,
    SchemaViolation,
    UnknownAttribute,
    VersionMismatch,
)

from conftest import grid_series, make_base


SCHEMA_JSON = """[
  {"name": "lang", "kind": "categorical", "weight": 1.0},
  {"name": "team", "kind": "numeric", "weight": 1.0}
]
"""


def write_inputs(tmp_path, curves_text, contexts_text, schema_text=SCHEMA_JSON):
    curves = tmp_path / "curves.csv"
    contexts = tmp_path / "contexts.csv"
    schema = tmp_path / "schema.json"
    curves.write_text(curves_text)
    contexts.write_text(contexts_text)
    schema.write_text(schema_text)
    return curves, contexts, schema


GOOD_CURVES = (
    "project_id,attribute,t,value\n"
    "P1,effort,0.0,0\n"
    "P1,effort,0.5,120\n"
    "P1,effort,1.0,80\n"
    "P2,effort,0.0,10\n"
    "P2,effort,1.0,30\n"
)

GOOD_CONTEXTS = (
    "project_id,factor,value\n"
    "P1,lang,java\n"
    "P1,team,4\n"
    "P2,lang,c\n"
    "P2,team,9\n"
)


# ---------------------------------------------------------------------------
# ingest


def test_ingest_parses_records(tmp_path):
    records = ingest(*write_inputs(tmp_path, GOOD_CURVES, GOOD_CONTEXTS))
    assert [r.project_id for r in records] == ["P1", "P2"]
    p1 = records[0]
    assert p1.series["effort"].points == ((0.0, 0.0), (0.5, 120.0), (1.0, 80.0))
    assert p1.context.assignments == {"lang": "java", "team": 4.0}


def test_ingest_single_row_example(tmp_path):
    curves = (
        "project_id,attribute,t,value\n"
        "P1,effort,0.5,120\n"
        "P1,effort,0.0,0\n"
        "P1,effort,1.0,200\n"
    )
    records = ingest(*write_inputs(tmp_path, curves, "project_id,factor,value\nP1,lang,java\n"))
    assert len(records) == 1
    assert (0.5, 120.0) in records[0].series["effort"].points


def test_ingest_rescales_calendar_time(tmp_path, caplog):
    curves = (
        "project_id,attribute,t,value\n"
        "P1,effort,2,1\n"
        "P1,effort,6,2\n"
        "P1,effort,10,3\n"
    )
    with caplog.at_level("WARNING"):
        records = ingest(
            *write_inputs(tmp_path, curves, "project_id,factor,value\nP1,team,4\n")
        )
    assert records[0].series["effort"].times == (0.0, 0.5, 1.0)
    assert any("rescaling" in message for message in caplog.messages)


def test_ingest_unknown_factor_names_it(tmp_path):
    contexts = "project_id,factor,value\nP1,platform,linux\n"
    with pytest.raises(SchemaViolation, match="platform"):
        ingest(*write_inputs(tmp_path, GOOD_CURVES, contexts))


def test_ingest_bad_number_reports_line(tmp_path):
    curves = "project_id,attribute,t,value\nP1,effort,zero,1\nP1,effort,1,2\n"
    with pytest.raises(ParseError, match=":2"):
        ingest(*write_inputs(tmp_path, curves, GOOD_CONTEXTS))


def test_ingest_bad_header_rejected(tmp_path):
    curves = "id,attr,t,v\nP1,effort,0,1\n"
    with pytest.raises(ParseError, match="header"):
        ingest(*write_inputs(tmp_path, curves, GOOD_CONTEXTS))


def test_ingest_wrong_column_count_reports_line(tmp_path):
    curves = "project_id,attribute,t,value\nP1,effort,0\n"
    with pytest.raises(ParseError, match=":2"):
        ingest(*write_inputs(tmp_path, curves, GOOD_CONTEXTS))


def test_ingest_duplicate_curve_point_rejected(tmp_path):
    curves = (
        "project_id,attribute,t,value\n"
        "P1,effort,0.5,1\n"
        "P1,effort,0.5,2\n"
    )
    with pytest.raises(DuplicateProject):
        ingest(*write_inputs(tmp_path, curves, GOOD_CONTEXTS))


def test_ingest_duplicate_context_row_rejected(tmp_path):
    contexts = "project_id,factor,value\nP1,lang,java\nP1,lang,c\n"
    with pytest.raises(DuplicateProject):
        ingest(*write_inputs(tmp_path, GOOD_CURVES, contexts))


def test_ingest_attribute_allowlist(tmp_path):
    curves = "project_id,attribute,t,value\nP1,defects,0,1\nP1,defects,1,2\n"
    paths = write_inputs(tmp_path, curves, "project_id,factor,value\nP1,lang,java\n")
    with pytest.raises(UnknownAttribute, match="defects"):
        ingest(*paths, attributes=["effort"])
    assert len(ingest(*paths)) == 1  # no allowlist accepts anything


def test_ingest_numeric_factor_must_parse(tmp_path):
    contexts = "project_id,factor,value\nP1,team,large\n"
    with pytest.raises(ParseError):
        ingest(*write_inputs(tmp_path, GOOD_CURVES, contexts))


def test_ingest_twenty_five_project_fixture(tmp_path):
    portfolio = generate(GeneratorConfig(seed=3, n_train=25))
    write_portfolio(portfolio, tmp_path)
    records = ingest(
        tmp_path / "train_curves.csv",
        tmp_path / "train_contexts.csv",
        tmp_path / "schema.json",
    )
    assert len(records) == 25


def test_schema_file_validation(tmp_path):
    bad = tmp_path / "schema.json"
    bad.write_text('{"not": "a list"}')
    with pytest.raises(ParseError):
        load_schema(bad)
    bad.write_text('[{"name": "x", "kind": "numeric", "color": "red"}]')
    with pytest.raises(ParseError, match="color"):
        load_schema(bad)
    bad.write_text('[{"name": "x"}]')
    with pytest.raises(ParseError):
        load_schema(bad)


# ---------------------------------------------------------------------------
# build


@pytest.fixture
def schema():
    return ContextSchema((Factor("lang", "categorical"), Factor("team", "numeric")))


def test_build_single_record_singleton(schema):
    records = [
        ProjectRecord(
            "P1", ContextVector({"team": 4}), {"effort": grid_series("P1", [0, 1, 2])}
        )
    ]
    base = build(records, schema, {"effort": ClusteringConfig(1.0)}, Grid(3), "raw")
    clusters = base.clusters_for("effort")
    assert len(clusters) == 1
    assert clusters[0].member_ids == ("P1",)
    assert base.provenance == ("P1",)


def test_build_missing_attribute_names_project(schema):
    records = [
        ProjectRecord(
            "P1", ContextVector({}), {"effort": grid_series("P1", [0, 1])}
        ),
        ProjectRecord("P2", ContextVector({}), {}),
    ]
    with pytest.raises(UnknownAttribute, match="P2.*effort"):
        build(records, schema, {"effort": ClusteringConfig(1.0)}, Grid(2), "raw")


def test_build_is_order_independent(schema):
    records = [
        ProjectRecord(
            f"P{i}",
            ContextVector({"team": float(i)}),
            {"effort": grid_series(f"P{i}", [i, i + 1.0])},
        )
        for i in range(5)
    ]
    expected = build(records, schema, {"effort": ClusteringConfig(1.5)}, Grid(2), "raw")
    shuffled = records[::-1]
    assert (
        base_to_payload(
            build(shuffled, schema, {"effort": ClusteringConfig(1.5)}, Grid(2), "raw")
        )
        == base_to_payload(expected)
    )


def test_build_requires_uniform_metric(schema):
    records = [
        ProjectRecord(
            "P1",
            ContextVector({}),
            {
                "effort": grid_series("P1", [0, 1]),
                "defects": grid_series("P1", [0, 1], attribute="defects"),
            },
        )
    ]
    with pytest.raises(InvalidConfig):
        build(
            records,
            schema,
            {
                "effort": ClusteringConfig(1.0, "rms"),
                "defects": ClusteringConfig(1.0, "max"),
            },
            Grid(2),
            "raw",
        )


def test_build_rejects_duplicate_records(schema):
    record = ProjectRecord(
        "P1", ContextVector({}), {"effort": grid_series("P1", [0, 1])}
    )
    with pytest.raises(DuplicateProject):
        build([record, record], schema, {"effort": ClusteringConfig(1.0)}, Grid(2), "raw")


def test_build_ranges_cover_all_member_contexts(schema):
    base = make_base(
        {"a": [1.0, 2.0], "b": [1.1, 2.1]},
        {"a": {"team": 3}, "b": {"team": 11}},
        theta=1.0,
        schema=schema,
    )
    assert base.ranges == {"team": (3.0, 11.0)}


# ---------------------------------------------------------------------------
# persistence laws


def random_base(rng: random.Random):
    n_factors = rng.randint(1, 4)
    factors = []
    for i in range(n_factors):
        kind = rng.choice(["numeric", "categorical"])
        factors.append(Factor(f"f{i}", kind, weight=rng.choice([1.0, 2.0, 0.5])))
    schema = ContextSchema(tuple(factors))
    n = rng.randint(1, 7)
    size = rng.randint(2, 6)
    curves = {}
    contexts = {}
    for i in range(n):
        pid = f"p{i:02d}"
        curves[pid] = [rng.uniform(0, 50) for _ in range(size)]
        assignments = {}
        for factor in factors:
            if rng.random() < 0.8:
                assignments[factor.name] = (
                    rng.uniform(0, 10)
                    if factor.kind == "numeric"
                    else rng.choice(["a", "b", "c"])
                )
        contexts[pid] = assignments
    return make_base(
        curves,
        contexts,
        theta=rng.uniform(0.5, 20.0),
        schema=schema,
        metric=rng.choice(["rms", "max"]),
    )


def test_save_load_round_trip_and_canonical_bytes(tmp_path):
    rng = random.Random(42)
    for i in range(25):
        base = random_base(rng)
        path_a = tmp_path / f"base_{i}_a.eb"
        path_b = tmp_path / f"base_{i}_b.eb"
        save_base(base, path_a)
        loaded = load_base(path_a)
        assert loaded == base
        save_base(loaded, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()


def test_version_mismatch_detected(tmp_path):
    base = random_base(random.Random(1))
    path = tmp_path / "base.eb"
    save_base(base, path)
    text = path.read_text()
    path.write_text(text.replace("format=1", "format=2", 1))
    with pytest.raises(VersionMismatch):
        load_base(path)


def test_corrupt_payload_detected(tmp_path):
    base = random_base(random.Random(2))
    path = tmp_path / "base.eb"
    save_base(base, path)
    text = path.read_text()
    path.write_text(text.replace('"rms"', '"max"') if '"rms"' in text else text.replace('"max"', '"rms"'))
    with pytest.raises(CorruptFile):
        load_base(path)


def test_truncated_file_detected(tmp_path):
    base = random_base(random.Random(3))
    path = tmp_path / "base.eb"
    save_base(base, path)
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(CorruptFile):
        load_base(path)


def test_wrong_magic_detected(tmp_path):
    path = tmp_path / "base.eb"
    path.write_text("something-else format=1 sha256=00\n{}\n")
    with pytest.raises(CorruptFile):
        load_base(path)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        load_base(tmp_path / "absent.eb")


def test_unwritable_path_is_io_error(tmp_path):
    base = random_base(random.Random(4))
    with pytest.raises(IoError):
        save_base(base, tmp_path / "no_such_dir" / "base.eb")
