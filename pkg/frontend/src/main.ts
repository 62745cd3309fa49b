/** Dashboard bootstrap: polling loop, project switching, form wiring. */

import { ApiClient } from "./api.js";
import {
  ProjectView,
  replanRequestBody,
  validateContextEdits,
  validateMeasurement,
} from "./state.js";
import {
  ContextEditorRefs,
  renderChart,
  renderContextEditor,
  renderDetail,
  renderFeed,
  renderProjectList,
  renderStatus,
  showFieldErrors,
} from "./render.js";
import type { ReplanCauseKind, SchemaPayload } from "./types.js";

const POLL_INTERVAL_MS = 5000;

const api = new ApiClient("");

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const nodes = {
  banner: byId<HTMLElement>("connection-banner"),
  pollStamp: byId<HTMLElement>("poll-stamp"),
  projectList: byId<HTMLElement>("project-list"),
  detail: byId<HTMLElement>("project-detail"),
  chart: byId<HTMLElement>("chart-holder"),
  feed: byId<HTMLElement>("event-feed"),
  measurementForm: byId<HTMLFormElement>("measurement-form"),
  measurementT: byId<HTMLInputElement>("measurement-t"),
  measurementValue: byId<HTMLInputElement>("measurement-value"),
  measurementError: byId<HTMLElement>("measurement-error"),
  measurementSubmit: byId<HTMLButtonElement>("measurement-submit"),
  replanForm: byId<HTMLFormElement>("replan-form"),
  replanCause: byId<HTMLSelectElement>("replan-cause"),
  contextEditor: byId<HTMLElement>("context-editor"),
  replanError: byId<HTMLElement>("replan-error"),
  replanSubmit: byId<HTMLButtonElement>("replan-submit"),
};

let schema: SchemaPayload | null = null;
let view: ProjectView | null = null;
let editorRefs: ContextEditorRefs | null = null;
let selectedId: string | null = null;

function setPending(pending: boolean): void {
  nodes.measurementSubmit.disabled = pending;
  nodes.replanSubmit.disabled = pending;
}

function contextEditorVisible(): boolean {
  return (nodes.replanCause.value as ReplanCauseKind) !== "WrongExperience";
}

function redraw(): void {
  renderStatus(nodes.banner, nodes.pollStamp, view?.connectionLost ?? false, view?.lastPollMs ?? null);
  if (!view || !view.detail || !view.curves) return;
  renderDetail(nodes.detail, view.detail);
  renderChart(nodes.chart, view.curves);
  renderFeed(nodes.feed, view.feed);
  nodes.contextEditor.parentElement!.hidden = !contextEditorVisible();
}

async function selectProject(projectId: string): Promise<void> {
  selectedId = projectId;
  view = new ProjectView(api, projectId);
  await view.refresh();
  if (schema && view.detail) {
    editorRefs = renderContextEditor(nodes.contextEditor, schema, view.detail.context);
  }
  redraw();
  await refreshProjectList();
}

async function refreshProjectList(): Promise<void> {
  try {
    const projects = await api.listProjects();
    renderProjectList(nodes.projectList, projects, selectedId, (projectId) => {
      void selectProject(projectId);
    });
    if (selectedId === null && projects.length > 0) {
      await selectProject(projects[0]!.project_id);
    }
  } catch {
    if (view) view.connectionLost = true;
    redraw();
  }
}

async function poll(): Promise<void> {
  await refreshProjectList();
  if (view) {
    await view.refresh();
    redraw();
  }
}

nodes.measurementForm.addEventListener("submit", (event) => {
  event.preventDefault();
  void (async () => {
    if (!view) return;
    const validated = validateMeasurement(nodes.measurementT.value, nodes.measurementValue.value);
    if (validated.errors.t || validated.errors.value) {
      nodes.measurementError.textContent =
        validated.errors.t ?? validated.errors.value ?? "";
      nodes.measurementError.hidden = false;
      return;
    }
    setPending(true);
    const outcome = await view.submitMeasurement(validated.t!, validated.value!);
    setPending(false);
    if (outcome.ok) {
      nodes.measurementError.hidden = true;
      nodes.measurementT.value = "";
      nodes.measurementValue.value = "";
    } else {
      nodes.measurementError.textContent = `${outcome.errorCode}: ${outcome.message}`;
      nodes.measurementError.hidden = false;
    }
    redraw();
  })();
});

nodes.replanCause.addEventListener("change", () => {
  nodes.contextEditor.parentElement!.hidden = !contextEditorVisible();
});

nodes.replanForm.addEventListener("submit", (event) => {
  event.preventDefault();
  void (async () => {
    if (!view || !view.detail || !schema) return;
    const cause = nodes.replanCause.value as ReplanCauseKind;
    let request;
    if (cause === "WrongExperience") {
      request = replanRequestBody(cause, undefined);
    } else {
      const edits: Record<string, string> = {};
      for (const [name, input] of editorRefs?.inputs ?? []) {
        edits[name] = input.value;
      }
      const validated = validateContextEdits(schema, view.detail.context, edits);
      if (editorRefs) showFieldErrors(editorRefs, validated.errors);
      if (!validated.vector) return;
      request = replanRequestBody(cause, validated.vector);
    }
    setPending(true);
    const outcome = await view.submitReplan(request);
    setPending(false);
    if (outcome.ok) {
      nodes.replanError.hidden = true;
      if (schema && view.detail) {
        editorRefs = renderContextEditor(nodes.contextEditor, schema, view.detail.context);
      }
    } else {
      nodes.replanError.textContent = `${outcome.errorCode}: ${outcome.message}`;
      nodes.replanError.hidden = false;
    }
    redraw();
  })();
});

async function start(): Promise<void> {
  try {
    schema = await api.schema();
  } catch {
    nodes.banner.hidden = false;
  }
  await poll();
  setInterval(() => void poll(), POLL_INTERVAL_MS);
}

void start();
