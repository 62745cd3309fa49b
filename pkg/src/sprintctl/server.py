"""HTTP JSON API over an experience base and a directory of tracked projects.

The server is the wire between the control engine and the dashboard: every
mutation is persisted to the project file (atomic write) before the response
is sent, a per-project lock enforces the single-writer contract, and the
experience base stays read-only for the lifetime of the process. Numbers are
rounded to 10 decimal places before encoding.

Endpoints (details in docs/api.md):
  GET  /api/projects
  GET  /api/projects/{id}
  GET  /api/projects/{id}/curves
  GET  /api/projects/{id}/events
  POST /api/projects/{id}/measurements   {"t": ..., "value": ...}
  POST /api/projects/{id}/replan         {"cause": ..., "context": {...}?}
  GET  /api/clusters?attribute=A
  GET  /api/schema
Static dashboard files are served at / when a static directory is given.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlparse

from .controller import (
    ReplanCause,
    TrackedProject,
    load_project,
    record_actual,
    replan,
    save_project,
)
from .curves import grid_positions
from .errors import (
    BindFailure,
    InsufficientPrefix,
    InvalidConfig,
    NoActuals,
    NoClusters,
    NonMonotoneTime,
    OutOfRangeTime,
    ParseError,
    SchemaViolation,
    SprintError,
    UnknownAttribute,
)
from .experience import (
    ExperienceBase,
    context_from_payload,
    load as load_base,
    schema_to_payload,
)

_API_PRECISION = 10

# Domain errors that map to a client-side 400 rather than a 500.
_CLIENT_ERRORS = (
    InsufficientPrefix,
    InvalidConfig,
    NoActuals,
    NoClusters,
    NonMonotoneTime,
    OutOfRangeTime,
    ParseError,
    SchemaViolation,
    UnknownAttribute,
)

_CAUSES = {"WrongExperience", "WrongContext", "ChangedCharacteristics"}


def round_floats(value: Any, ndigits: int = _API_PRECISION) -> Any:
    """Recursively round floats so API numbers have fixed decimal precision."""
    if isinstance(value, float):
        return round(value, ndigits)
    if isinstance(value, dict):
        return {k: round_floats(v, ndigits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v, ndigits) for v in value]
    return value


class ProjectStore:
    """Tracked-project files in one directory, with a lock per project id."""

    def __init__(self, directory: Path, base: ExperienceBase, base_path: Path):
        self.directory = directory
        self.base = base
        self.base_path = base_path
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock(self, project_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(project_id, threading.Lock())

    def path(self, project_id: str) -> Path:
        return self.directory / f"{project_id}.tp"

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.tp"))

    def get(self, project_id: str) -> TrackedProject:
        return load_project(self.path(project_id), self.base)

    def put(self, project: TrackedProject) -> None:
        save_project(
            project, self.path(project.project_id), base_path=str(self.base_path)
        )


def _event_payloads(project: TrackedProject, events) -> list[dict[str, Any]]:
    return [
        {"kind": e.kind, "at_progress": e.at_progress, "payload": dict(e.payload)}
        for e in events
    ]


def project_summary(project: TrackedProject) -> dict[str, Any]:
    return {
        "project_id": project.project_id,
        "attribute": project.attribute,
        "selected_cluster_id": project.selected_cluster_id,
        "planned_duration": project.planned_duration,
        "progress": project.progress,
        "n_actuals": len(project.actuals),
        "n_events": len(project.events),
    }


def project_detail(project: TrackedProject) -> dict[str, Any]:
    detail = project_summary(project)
    detail["context"] = dict(sorted(project.context.assignments.items()))
    detail["config"] = {
        "tolerance": project.config.tolerance,
        "epsilon": project.config.epsilon,
        "min_prefix_points": project.config.min_prefix_points,
        "hybrid_switch": project.config.hybrid_switch,
        "adaptation": project.config.adaptation,
        "selection_strategy": project.config.selection_strategy,
    }
    return detail


def project_curves(project: TrackedProject) -> dict[str, Any]:
    tolerance = project.config.tolerance
    grid = [float(t) for t in grid_positions(project.base.grid.size)]
    plan = list(project.prediction.values)
    cluster = project.selected_cluster()
    return {
        "project_id": project.project_id,
        "attribute": project.attribute,
        "selected_cluster_id": project.selected_cluster_id,
        "tolerance": tolerance,
        "grid": grid,
        "plan": plan,
        "corridor_low": [v * (1.0 - tolerance) for v in plan],
        "corridor_high": [v * (1.0 + tolerance) for v in plan],
        "cluster": list(cluster.cluster_curve.values),
        "actuals": [{"t": t, "value": v} for t, v in project.actuals],
    }


def clusters_payload(base: ExperienceBase, attribute: str) -> dict[str, Any]:
    group = base.attributes.get(attribute)
    if group is None:
        raise UnknownAttribute(
            f"no clusters for attribute {attribute!r}; available: "
            f"{sorted(base.attributes)}"
        )
    grid = [float(t) for t in grid_positions(base.grid.size)]
    return {
        "attribute": attribute,
        "metric": base.metric,
        "mode": base.mode,
        "threshold": group.threshold,
        "grid": grid,
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "member_count": c.member_count,
                "member_ids": list(c.member_ids),
                "curve": list(c.cluster_curve.values),
                "context": {
                    "means": dict(sorted(c.context.means.items())),
                    "representatives": dict(sorted(c.context.representatives.items())),
                    "frequencies": {
                        k: dict(sorted(v.items()))
                        for k, v in sorted(c.context.frequencies.items())
                    },
                },
            }
            for c in group.clusters
        ],
    }


def schema_payload(base: ExperienceBase) -> dict[str, Any]:
    return {
        "factors": schema_to_payload(base.schema),
        "ranges": {name: list(span) for name, span in sorted(base.ranges.items())},
    }


class _Handler(BaseHTTPRequestHandler):
    server_version = "sprintctl"
    store: ProjectStore  # injected by make_server
    static_dir: Path | None = None

    # -- plumbing ---------------------------------------------------------

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib name
        pass

    def _send_json(self, status: int, payload: Any) -> None:
        body = json.dumps(round_floats(payload), sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error_code": code, "message": message})

    def _read_json_body(self) -> Any:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise ParseError("empty request body")
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"invalid JSON body: {exc}") from exc

    def _project_or_404(self, project_id: str) -> TrackedProject | None:
        if not self.store.path(project_id).is_file():
            self._send_error_json(404, "unknown-project", f"no project {project_id!r}")
            return None
        return self.store.get(project_id)

    # -- routing ----------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 - stdlib name
        try:
            self._route_get()
        except SprintError as exc:
            status = 400 if isinstance(exc, _CLIENT_ERRORS) else 500
            self._send_error_json(status, exc.code, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error_json(500, "internal-error", str(exc))

    def do_POST(self) -> None:  # noqa: N802 - stdlib name
        try:
            self._route_post()
        except SprintError as exc:
            status = 400 if isinstance(exc, _CLIENT_ERRORS) else 500
            self._send_error_json(status, exc.code, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error_json(500, "internal-error", str(exc))

    def _route_get(self) -> None:
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]

        if parts == ["api", "projects"]:
            summaries = []
            for project_id in self.store.ids():
                with self.store.lock(project_id):
                    summaries.append(project_summary(self.store.get(project_id)))
            self._send_json(200, summaries)
            return

        if len(parts) >= 3 and parts[:2] == ["api", "projects"]:
            project_id = parts[2]
            tail = parts[3:]
            with self.store.lock(project_id):
                project = self._project_or_404(project_id)
                if project is None:
                    return
                if not tail:
                    self._send_json(200, project_detail(project))
                elif tail == ["curves"]:
                    self._send_json(200, project_curves(project))
                elif tail == ["events"]:
                    self._send_json(200, _event_payloads(project, project.events))
                else:
                    self._send_error_json(404, "not-found", f"no route {url.path}")
            return

        if parts == ["api", "clusters"]:
            query = parse_qs(url.query)
            attributes = query.get("attribute")
            if not attributes:
                self._send_error_json(
                    400, "invalid-config", "query parameter 'attribute' is required"
                )
                return
            self._send_json(200, clusters_payload(self.store.base, attributes[0]))
            return

        if parts == ["api", "schema"]:
            self._send_json(200, schema_payload(self.store.base))
            return

        if parts and parts[0] == "api":
            self._send_error_json(404, "not-found", f"no route {url.path}")
            return

        self._serve_static(url.path)

    def _route_post(self) -> None:
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if len(parts) != 4 or parts[:2] != ["api", "projects"]:
            self._send_error_json(404, "not-found", f"no route {url.path}")
            return
        project_id, action = parts[2], parts[3]
        if action == "measurements":
            self._post_measurement(project_id)
        elif action == "replan":
            self._post_replan(project_id)
        else:
            self._send_error_json(404, "not-found", f"no route {url.path}")

    # -- mutations ----------------------------------------------------------

    def _post_measurement(self, project_id: str) -> None:
        body = self._read_json_body()
        if not isinstance(body, dict) or "t" not in body or "value" not in body:
            raise ParseError('measurement body must be {"t": ..., "value": ...}')
        try:
            t = float(body["t"])
            value = float(body["value"])
        except (TypeError, ValueError) as exc:
            raise ParseError("t and value must be numbers") from exc
        with self.store.lock(project_id):
            project = self._project_or_404(project_id)
            if project is None:
                return
            events = record_actual(project, t, value)
            self.store.put(project)
            self._send_json(
                200,
                {
                    "project": project_summary(project),
                    "events": _event_payloads(project, events),
                },
            )

    def _post_replan(self, project_id: str) -> None:
        body = self._read_json_body()
        if not isinstance(body, dict) or "cause" not in body:
            raise ParseError('replan body must be {"cause": ..., "context": {...}?}')
        cause_kind = body["cause"]
        if cause_kind not in _CAUSES:
            raise ParseError(f"cause must be one of {sorted(_CAUSES)}, got {cause_kind!r}")
        context = None
        if cause_kind != "WrongExperience":
            if "context" not in body:
                raise ParseError(f"cause {cause_kind} requires a context payload")
            context = context_from_payload(body["context"], where="replan context")
        cause = ReplanCause(cause_kind, context)
        with self.store.lock(project_id):
            project = self._project_or_404(project_id)
            if project is None:
                return
            old_cluster = project.selected_cluster_id
            events = replan(project, cause)
            self.store.put(project)
            self._send_json(
                200,
                {
                    "project": project_summary(project),
                    "old_cluster_id": old_cluster,
                    "new_cluster_id": project.selected_cluster_id,
                    "events": _event_payloads(project, events),
                },
            )

    # -- static files -------------------------------------------------------

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            if path in ("/", "/index.html"):
                self._send_json(
                    200,
                    {
                        "service": "sprintctl",
                        "message": "API at /api; start with --static for the dashboard",
                    },
                )
            else:
                self._send_error_json(404, "not-found", f"no route {path}")
            return
        name = path.lstrip("/") or "index.html"
        target = (self.static_dir / name).resolve()
        root = self.static_dir.resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            self._send_error_json(404, "not-found", f"no file {path}")
            return
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(
    base_path: str | Path,
    projects_dir: str | Path,
    host: str = "127.0.0.1",
    port: int = 8347,
    static_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Build the threaded server; caller runs serve_forever()/shutdown()."""
    base_path = Path(base_path)
    base = load_base(base_path)
    projects = Path(projects_dir)
    try:
        projects.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BindFailure(f"projects dir {projects}: {exc}") from exc

    store = ProjectStore(projects, base, base_path)

    class Handler(_Handler):
        pass

    Handler.store = store
    Handler.static_dir = Path(static_dir) if static_dir else None

    try:
        return ThreadingHTTPServer((host, port), Handler)
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
