/** DOM rendering: turns view-model state into the page. */

import { bandPath, DEFAULT_LAYOUT, linePath, makeScales, yTicks } from "./chart.js";
import type { FeedEntry } from "./state.js";
import type {
  CurvesPayload,
  FactorValue,
  ProjectDetail,
  ProjectSummary,
  SchemaPayload,
} from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

export function renderProjectList(
  container: HTMLElement,
  projects: ProjectSummary[],
  selected: string | null,
  onSelect: (projectId: string) => void,
): void {
  container.replaceChildren();
  if (projects.length === 0) {
    container.append(el("p", "empty", "no tracked projects yet"));
    return;
  }
  for (const project of projects) {
    const button = el("button", "project-row");
    if (project.project_id === selected) button.classList.add("selected");
    button.append(el("span", "project-name", project.project_id));
    button.append(
      el(
        "span",
        "project-meta",
        `${project.attribute} · cluster ${project.selected_cluster_id} · t=${String(project.progress)}`,
      ),
    );
    button.addEventListener("click", () => onSelect(project.project_id));
    container.append(button);
  }
}

export function renderChart(container: HTMLElement, curves: CurvesPayload): void {
  const layout = DEFAULT_LAYOUT;
  const scales = makeScales(curves, layout);
  const svg = svgEl("svg", {
    viewBox: `0 0 ${layout.width} ${layout.height}`,
    class: "chart",
    role: "img",
  });

  for (const tick of yTicks(scales)) {
    svg.append(
      svgEl("line", {
        x1: String(layout.padLeft),
        x2: String(layout.width - layout.padRight),
        y1: String(tick.position),
        y2: String(tick.position),
        class: "gridline",
      }),
    );
    const label = svgEl("text", {
      x: String(layout.padLeft - 6),
      y: String(tick.position + 4),
      class: "tick-label",
      "text-anchor": "end",
    });
    label.textContent = tick.label;
    svg.append(label);
  }

  svg.append(
    svgEl("path", {
      d: bandPath(curves.grid, curves.corridor_low, curves.corridor_high, scales),
      class: "corridor",
    }),
  );
  svg.append(
    svgEl("path", {
      d: linePath(curves.grid, curves.cluster, scales),
      class: "cluster-line",
    }),
  );
  svg.append(
    svgEl("path", {
      d: linePath(curves.grid, curves.plan, scales),
      class: "plan-line",
    }),
  );
  for (const point of curves.actuals) {
    svg.append(
      svgEl("circle", {
        cx: String(scales.x(point.t)),
        cy: String(scales.y(point.value)),
        r: "3.5",
        class: "actual-point",
      }),
    );
    const title = svgEl("title", {});
    title.textContent = `t=${String(point.t)} value=${String(point.value)}`;
    svg.lastElementChild!.append(title);
  }

  container.replaceChildren(svg);
  const legend = el("div", "legend");
  legend.append(el("span", "legend-plan", "plan"));
  legend.append(el("span", "legend-corridor", "tolerance corridor"));
  legend.append(el("span", "legend-cluster", "cluster curve"));
  legend.append(el("span", "legend-actual", "actuals"));
  container.append(legend);
}

export function renderFeed(container: HTMLElement, feed: FeedEntry[]): void {
  container.replaceChildren();
  if (feed.length === 0) {
    container.append(el("p", "empty", "no events yet"));
    return;
  }
  for (const entry of feed) {
    const row = el("div", entry.isAlert ? "event alert" : "event");
    row.append(el("span", "event-kind", entry.kind));
    row.append(el("span", "event-at", `t=${String(entry.atProgress)}`));
    row.append(el("span", "event-text", entry.text));
    container.append(row);
  }
}

export function renderStatus(
  banner: HTMLElement,
  stamp: HTMLElement,
  connectionLost: boolean,
  lastPollMs: number | null,
): void {
  banner.hidden = !connectionLost;
  if (lastPollMs === null) {
    stamp.textContent = "never polled";
  } else {
    const age = Math.round((Date.now() - lastPollMs) / 1000);
    stamp.textContent = `last poll ${new Date(lastPollMs).toLocaleTimeString()} (${age}s ago)`;
    stamp.classList.toggle("stale", age > 15);
  }
}

export interface ContextEditorRefs {
  inputs: Map<string, HTMLInputElement>;
  errors: Map<string, HTMLElement>;
}

export function renderContextEditor(
  container: HTMLElement,
  schema: SchemaPayload,
  current: Record<string, FactorValue>,
): ContextEditorRefs {
  container.replaceChildren();
  const refs: ContextEditorRefs = { inputs: new Map(), errors: new Map() };
  for (const factor of schema.factors) {
    const row = el("div", "factor-row");
    const label = el("label", "factor-label", factor.name);
    const input = el("input");
    input.name = factor.name;
    const currentValue = current[factor.name];
    input.value = currentValue === undefined ? "" : String(currentValue);
    input.placeholder = factor.kind;
    const error = el("span", "field-error");
    error.hidden = true;
    row.append(label, input, error);
    container.append(row);
    refs.inputs.set(factor.name, input);
    refs.errors.set(factor.name, error);
  }
  return refs;
}

export function showFieldErrors(
  refs: ContextEditorRefs,
  errors: Record<string, string>,
): void {
  for (const [name, node] of refs.errors) {
    const message = errors[name];
    node.textContent = message ?? "";
    node.hidden = message === undefined;
  }
}

export function renderDetail(container: HTMLElement, detail: ProjectDetail): void {
  container.replaceChildren();
  container.append(el("h2", undefined, detail.project_id));
  container.append(
    el(
      "p",
      "detail-meta",
      `${detail.attribute} · cluster ${detail.selected_cluster_id} · ` +
        `progress ${String(detail.progress)} of planned ${String(detail.planned_duration)} · ` +
        `tolerance ±${String(detail.config.tolerance)}`,
    ),
  );
}
