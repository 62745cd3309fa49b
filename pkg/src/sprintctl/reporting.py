"""Plot-ready files for tracked projects and evaluation runs."""

from __future__ import annotations

from pathlib import Path

from . import canon
from .controller import TrackedProject
from .curves import grid_positions
from .errors import IoError
from .simulate import EvaluationReport


def _fmt(value: float) -> str:
    return repr(float(value))


def project_curves_csv(project: TrackedProject) -> str:
    """Grid rows carry plan and corridor columns; measurement rows carry the actual."""
    tolerance = project.config.tolerance
    lines = ["t,plan,corridor_low,corridor_high,actual"]
    positions = grid_positions(project.base.grid.size)
    for t, plan in zip(positions, project.prediction.values):
        low = plan * (1.0 - tolerance)
        high = plan * (1.0 + tolerance)
        lines.append(f"{_fmt(t)},{_fmt(plan)},{_fmt(low)},{_fmt(high)},")
    for t, value in project.actuals:
        lines.append(f"{_fmt(t)},,,,{_fmt(value)}")
    return "\n".join(lines) + "\n"


def project_events_text(project: TrackedProject) -> str:
    lines = [
        f"project {project.project_id} attribute {project.attribute} "
        f"cluster {project.selected_cluster_id}"
    ]
    for i, event in enumerate(project.events):
        payload = canon.canonical_dumps(event.payload).replace("\n", " ").replace("  ", "")
        lines.append(f"{i:03d} t={_fmt(event.at_progress)} {event.kind} {payload}")
    return "\n".join(lines) + "\n"


def write_project_report(project: TrackedProject, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        curves_path = out / "curves.csv"
        curves_path.write_text(project_curves_csv(project), encoding="utf-8")
        events_path = out / "events.txt"
        events_path.write_text(project_events_text(project), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    return [curves_path, events_path]


def write_evaluation_report(report: EvaluationReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "evaluation.csv"
        csv_path.write_text(report.to_csv_text(), encoding="utf-8")
        text_path = out / "summary.txt"
        text_path.write_text(report.to_text(), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    return [csv_path, text_path]
