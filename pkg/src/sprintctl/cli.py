"""Command-line entry points for the whole pipeline.

Exit codes: 0 success, 1 domain error (diagnostic on stderr), 2 usage error.
The optional SPRINTCTL_CONFIG env var may point to a JSON file overriding the
built-in defaults for the control and build flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import canon
from .clustering import ClusteringConfig, suggest_threshold
from .controller import (
    ControlConfig,
    ReplanCause,
    elapsed_to_progress,
    load_project,
    plan_project,
    record_actual,
    replan,
    save_project,
    stored_base_path,
)
from .context import ContextVector, similarity
from .curves import Grid, resample
from .errors import InvalidConfig, ParseError, SprintError
from .experience import build, ingest, load as load_base, load_schema, save as save_base
from .reporting import write_evaluation_report, write_project_report
from .simulate import (
    ATTRIBUTE,
    GeneratorConfig,
    evaluate,
    from_payload as evaluation_from_payload,
    generate,
    read_ground_truth,
    write_portfolio,
)

EVALUATION_MAGIC = "sprintctl-evaluation"

_CAUSE_NAMES = {
    "wrong-experience": "WrongExperience",
    "wrong-context": "WrongContext",
    "changed-characteristics": "ChangedCharacteristics",
}

_CONFIG_KEYS = {
    "tolerance": float,
    "epsilon": float,
    "min_prefix_points": int,
    "hybrid_switch": float,
    "adaptation": str,
    "selection_strategy": str,
    "grid_size": int,
    "metric": str,
    "mode": str,
}


def _env_defaults() -> dict:
    path = os.environ.get("SPRINTCTL_CONFIG")
    if not path:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"SPRINTCTL_CONFIG: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"SPRINTCTL_CONFIG: {path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidConfig(f"SPRINTCTL_CONFIG: {path}: expected a JSON object")
    defaults = {}
    for key, value in raw.items():
        if key not in _CONFIG_KEYS:
            raise InvalidConfig(
                f"SPRINTCTL_CONFIG: {path}: unknown key {key!r}; "
                f"allowed: {sorted(_CONFIG_KEYS)}"
            )
        defaults[key] = _CONFIG_KEYS[key](value)
    return defaults


def _load_context_file(path: str) -> ContextVector:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read context {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: expected a JSON object of factor assignments")
    return ContextVector(raw)


def _control_config(args: argparse.Namespace) -> ControlConfig:
    return ControlConfig(
        tolerance=args.tolerance,
        epsilon=args.epsilon,
        min_prefix_points=args.min_prefix_points,
        hybrid_switch=args.hybrid_switch,
        adaptation=args.adaptation,
        selection_strategy=args.strategy,
    )


def _add_control_flags(parser: argparse.ArgumentParser, defaults: dict) -> None:
    parser.add_argument(
        "--tolerance", type=float, default=defaults.get("tolerance", 0.2),
        help="relative deviation tolerance (default 0.2)",
    )
    parser.add_argument(
        "--epsilon", type=float, default=defaults.get("epsilon", 1e-9),
        help="guard for near-zero plan values (default 1e-9)",
    )
    parser.add_argument(
        "--min-prefix-points", type=int,
        default=defaults.get("min_prefix_points", 3),
        help="measurements required before dynamic selection (default 3)",
    )
    parser.add_argument(
        "--hybrid-switch", type=float, default=defaults.get("hybrid_switch", 0.3),
        help="progress after which hybrid conflicts trust the dynamic choice (default 0.3)",
    )
    parser.add_argument(
        "--adaptation", choices=["rescale", "shift", "none"],
        default=defaults.get("adaptation", "rescale"),
        help="prediction adaptation mode (default rescale)",
    )
    parser.add_argument(
        "--strategy", choices=["static", "dynamic", "hybrid"],
        default=defaults.get("selection_strategy", "static"),
        help="cluster selection strategy for replanning (default static)",
    )


def _resolve_base_path(args: argparse.Namespace) -> Path:
    project_path = Path(args.project)
    base_arg = getattr(args, "base", None)
    if base_arg:
        return Path(base_arg)
    stored = stored_base_path(project_path)
    if not stored:
        raise InvalidConfig(
            f"{project_path}: no experience-base path recorded; pass --base"
        )
    stored_path = Path(stored)
    if not stored_path.is_absolute():
        stored_path = project_path.parent / stored_path
    return stored_path


def _print_events(events) -> None:
    for event in events:
        payload = canon.canonical_dumps(event.payload).replace("\n", " ").replace("  ", "")
        print(f"{event.kind} at t={event.at_progress:g}: {payload}")


# ---------------------------------------------------------------------------
# commands


def _cmd_ingest(args: argparse.Namespace) -> int:
    records = ingest(
        args.curves, args.contexts, args.schema, attributes=args.attribute or None
    )
    n_series = sum(len(r.series) for r in records)
    print(f"ingested {len(records)} projects ({n_series} series)")
    return 0


def _cmd_build(args: argparse.Namespace) -> int:
    if (args.theta is None) == (args.target_k is None):
        raise InvalidConfig("pass exactly one of --theta or --target-k")
    schema = load_schema(args.schema)
    records = ingest(args.curves, args.contexts, args.schema, attributes=args.attribute)
    grid = Grid(args.grid_size)

    configs = {}
    for attribute in args.attribute:
        if args.theta is not None:
            theta = args.theta
        else:
            curves = []
            for record in sorted(records, key=lambda r: r.project_id):
                if attribute in record.series:
                    curves.append(resample(record.series[attribute], grid, args.mode))
            theta = suggest_threshold(curves, args.target_k, args.metric)
        configs[attribute] = ClusteringConfig(threshold=theta, metric=args.metric)

    base = build(records, schema, configs, grid, args.mode)
    save_base(base, args.out)
    for attribute in sorted(configs):
        group = base.attributes[attribute]
        print(
            f"{attribute}: {len(group.clusters)} clusters "
            f"(theta={group.threshold:g}, metric={args.metric}, mode={args.mode})"
        )
    print(f"wrote {args.out}")
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    base = load_base(args.base)
    context = _load_context_file(args.context)
    project = plan_project(
        base,
        args.project_id,
        args.attribute,
        context,
        args.planned_duration,
        _control_config(args),
    )
    save_project(project, args.out, base_path=args.base)
    cluster = project.selected_cluster()
    score = similarity(context, cluster.context, base.schema, base.ranges)
    print(
        f"selected cluster {cluster.cluster_id} "
        f"({cluster.member_count} members, similarity {score:.4f})"
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_track(args: argparse.Namespace) -> int:
    if (args.t is None) == (args.elapsed is None):
        raise InvalidConfig("pass exactly one of --t or --elapsed")
    base_path = _resolve_base_path(args)
    base = load_base(base_path)
    project = load_project(args.project, base)
    t = (
        args.t
        if args.t is not None
        else elapsed_to_progress(args.elapsed, project.planned_duration)
    )
    events = record_actual(project, t, args.value)
    save_project(project, args.project, base_path=stored_base_path(args.project) or str(base_path))
    plan = project.plan_value(t)
    if events:
        _print_events(events)
    else:
        deviation = abs(args.value - plan) / max(abs(plan), project.config.epsilon)
        print(f"ok at t={t:g}: value {args.value:g} vs plan {plan:.4f} (deviation {deviation:.4f})")
    return 0


def _cmd_replan(args: argparse.Namespace) -> int:
    base_path = _resolve_base_path(args)
    base = load_base(base_path)
    project = load_project(args.project, base)
    kind = _CAUSE_NAMES[args.cause]
    context = _load_context_file(args.context) if args.context else None
    if kind == "WrongExperience":
        cause = ReplanCause(kind)
    else:
        if context is None:
            raise InvalidConfig(f"--cause {args.cause} requires --context")
        cause = ReplanCause(kind, context)
    events = replan(project, cause)
    save_project(project, args.project, base_path=stored_base_path(args.project) or str(base_path))
    _print_events(events)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = GeneratorConfig(
        seed=args.seed,
        n_archetypes=args.n_archetypes,
        n_train=args.n_train,
        n_test=args.n_test,
        n_context_factors=args.n_factors,
        value_noise=args.value_noise,
        context_noise=args.context_noise,
        flip_prob=args.flip_prob,
        grid_size=args.grid_size,
    )
    portfolio = generate(config)
    written = write_portfolio(portfolio, args.out_dir)
    print(
        f"generated {len(portfolio.train)} train + {len(portfolio.test)} test "
        f"projects from {len(portfolio.archetypes)} archetypes "
        f"({len(portfolio.schema.factors)} context factors)"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    if (args.data_dir is None) == (args.seed is None):
        raise InvalidConfig("pass exactly one of --data-dir or --seed")
    grid = Grid(args.grid_size)
    if args.seed is not None:
        portfolio = generate(GeneratorConfig(seed=args.seed, grid_size=args.grid_size))
        schema = portfolio.schema
        train = list(portfolio.train)
        test = list(portfolio.test)
        ground_truth = dict(portfolio.ground_truth)
    else:
        data = Path(args.data_dir)
        schema = load_schema(data / "schema.json")
        train = ingest(
            data / "train_curves.csv", data / "train_contexts.csv", data / "schema.json"
        )
        test = ingest(
            data / "test_curves.csv", data / "test_contexts.csv", data / "schema.json"
        )
        ground_truth = read_ground_truth(data / "ground_truth.csv")

    curves = []
    for record in sorted(train, key=lambda r: r.project_id):
        curves.append(resample(record.series[ATTRIBUTE], grid, args.mode))
    theta = args.theta or suggest_threshold(curves, args.target_k, args.metric)
    base = build(
        train,
        schema,
        {ATTRIBUTE: ClusteringConfig(threshold=theta, metric=args.metric)},
        grid,
        args.mode,
    )
    report = evaluate(
        base, test, ground_truth, strategy=args.strategy, control=_control_config(args)
    )
    print(report.to_text(), end="")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        canon.write_file(out / "report.json", EVALUATION_MAGIC, 1, report.to_payload())
        for path in write_evaluation_report(report, out):
            print(f"wrote {path}")
        print(f"wrote {out / 'report.json'}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    if (args.project is None) == (args.evaluation is None):
        raise InvalidConfig("pass exactly one of --project or --evaluation")
    if args.project is not None:
        base = load_base(_resolve_base_path(args))
        project = load_project(args.project, base)
        written = write_project_report(project, args.out_dir)
    else:
        payload = canon.read_file(args.evaluation, EVALUATION_MAGIC, 1)
        report = evaluation_from_payload(payload)
        written = write_evaluation_report(report, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import make_server  # deferred so core commands never import it

    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise InvalidConfig(f"--bind must be HOST:PORT, got {args.bind!r}")
    server = make_server(
        base_path=args.base,
        projects_dir=args.projects_dir,
        host=host,
        port=int(port_text),
        static_dir=args.static,
    )
    host_shown, port_shown = server.server_address[:2]
    print(f"serving on http://{host_shown}:{port_shown}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    defaults = defaults or {}
    parser = argparse.ArgumentParser(
        prog="sprintctl",
        description=(
            "Project control from experience curves: cluster past projects' "
            "attribute series, predict new projects by context, track "
            "deviations, replan."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    grid_default = defaults.get("grid_size", 20)
    metric_default = defaults.get("metric", "rms")
    mode_default = defaults.get("mode", "cumulative")

    p = sub.add_parser("ingest", help="validate curve/context/schema files")
    p.add_argument("--curves", required=True)
    p.add_argument("--contexts", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--attribute", action="append", help="restrict accepted attributes")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("build", help="cluster historical projects into an experience base")
    p.add_argument("--curves", required=True)
    p.add_argument("--contexts", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--attribute", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--theta", type=float, help="clustering threshold")
    p.add_argument("--target-k", type=int, help="derive the threshold for k clusters")
    p.add_argument("--grid-size", type=int, default=grid_default)
    p.add_argument("--metric", choices=["rms", "max"], default=metric_default)
    p.add_argument("--mode", choices=["cumulative", "raw"], default=mode_default)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("plan", help="select a prediction curve for a new project")
    p.add_argument("--base", required=True)
    p.add_argument("--project-id", required=True)
    p.add_argument("--attribute", default=ATTRIBUTE)
    p.add_argument("--context", required=True, help="JSON file of factor assignments")
    p.add_argument("--planned-duration", type=float, required=True)
    p.add_argument("--out", required=True)
    _add_control_flags(p, defaults)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("track", help="record a measurement against the plan")
    p.add_argument("--project", required=True)
    p.add_argument("--base", help="override the base path recorded in the project file")
    p.add_argument("--t", type=float, help="progress fraction in [0, 1]")
    p.add_argument("--elapsed", type=float, help="elapsed calendar time (converted, capped at 1)")
    p.add_argument("--value", type=float, required=True)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("replan", help="reselect the prediction curve for a cause")
    p.add_argument("--project", required=True)
    p.add_argument("--base", help="override the base path recorded in the project file")
    p.add_argument("--cause", choices=sorted(_CAUSE_NAMES), required=True)
    p.add_argument("--context", help="JSON context for the context-correcting causes")
    p.set_defaults(func=_cmd_replan)

    p = sub.add_parser("simulate", help="generate a synthetic project portfolio")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-archetypes", type=int, default=5)
    p.add_argument("--n-train", type=int, default=17)
    p.add_argument("--n-test", type=int, default=4)
    p.add_argument("--n-factors", type=int, default=10)
    p.add_argument("--value-noise", type=float, default=0.05)
    p.add_argument("--context-noise", type=float, default=0.05)
    p.add_argument("--flip-prob", type=float, default=0.1)
    p.add_argument("--grid-size", type=int, default=grid_default)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evaluate", help="score cluster recovery and prediction error")
    p.add_argument("--data-dir", help="directory written by simulate")
    p.add_argument("--seed", type=int, help="generate the portfolio in memory instead")
    p.add_argument("--theta", type=float)
    p.add_argument("--target-k", type=int, default=5)
    p.add_argument("--grid-size", type=int, default=grid_default)
    p.add_argument("--metric", choices=["rms", "max"], default=metric_default)
    p.add_argument("--mode", choices=["cumulative", "raw"], default=mode_default)
    p.add_argument("--out-dir")
    _add_control_flags(p, defaults)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="emit plot-ready CSV and event summaries")
    p.add_argument("--project")
    p.add_argument("--base", help="override the base path recorded in the project file")
    p.add_argument("--evaluation", help="report.json written by evaluate")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="serve the HTTP JSON API (and the dashboard)")
    p.add_argument("--base", required=True)
    p.add_argument("--projects-dir", required=True)
    p.add_argument("--bind", default="127.0.0.1:8347")
    p.add_argument("--static", help="directory of dashboard files to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.WARNING, format="sprintctl: %(levelname)s: %(message)s"
    )
    try:
        parser = build_parser(_env_defaults())
        args = parser.parse_args(argv)
        return args.func(args)
    except SprintError as exc:
        print(f"sprintctl: error [{exc.code}]: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
