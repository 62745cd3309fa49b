/** View model for one tracked project.
 *
 * Everything rendered comes verbatim from API payloads; this module never
 * recomputes predictions or corridors. It only derives presentation order
 * (event feed newest first), validates form input against the schema, and
 * tracks poll/mutation status. DOM-free so it can be tested headless.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  CurvesPayload,
  EventPayload,
  FactorValue,
  ProjectDetail,
  ReplanCauseKind,
  ReplanRequest,
  SchemaPayload,
} from "./types.js";

export interface FeedEntry {
  seq: number;
  kind: string;
  atProgress: number;
  text: string;
  isAlert: boolean;
}

export interface FieldErrors {
  [factorName: string]: string;
}

export interface ContextValidation {
  vector?: Record<string, FactorValue>;
  errors: FieldErrors;
}

/** One event as a feed line; numbers are stringified verbatim. */
export function feedText(event: EventPayload): string {
  const payload = event.payload;
  switch (event.kind) {
    case "DeviationDetected":
      return `deviation ${String(payload["deviation"])} at t=${String(payload["t"])}: measured ${String(payload["value"])} vs plan ${String(payload["plan_value"])} (tolerance ${String(payload["tolerance"])})`;
    case "SelectionConflict":
      return `static picks cluster ${String(payload["static_cluster_id"])}, dynamic picks ${String(payload["dynamic_cluster_id"])}; following ${String(payload["chosen_cluster_id"])}`;
    case "Replanned": {
      const from = payload["old_cluster_id"];
      const to = payload["new_cluster_id"];
      const cause = String(payload["cause"]);
      const suffix = payload["no_alternative"] ? " (no alternative cluster)" : "";
      if (from === null || from === undefined) {
        return `planned onto cluster ${String(to)} (${cause})`;
      }
      return `cluster ${String(from)} -> ${String(to)} (${cause})${suffix}`;
    }
    case "PredictionAdapted": {
      const mode = String(payload["adaptation"]);
      if (mode === "rescale") return `prediction rescaled by factor ${String(payload["factor"])}`;
      if (mode === "shift") return `prediction shifted by ${String(payload["offset"])}`;
      return "prediction reset to the cluster curve";
    }
    default:
      return JSON.stringify(payload);
  }
}

/** Chronological API events turned into a newest-first feed. */
export function buildFeed(events: EventPayload[]): FeedEntry[] {
  return events
    .map((event, seq) => ({
      seq,
      kind: event.kind,
      atProgress: event.at_progress,
      text: feedText(event),
      isAlert: event.kind === "DeviationDetected" || event.kind === "SelectionConflict",
    }))
    .reverse();
}

/** Validate context editor fields against the schema; numeric fields must parse. */
export function validateContextEdits(
  schema: SchemaPayload,
  current: Record<string, FactorValue>,
  edits: Record<string, string>,
): ContextValidation {
  const errors: FieldErrors = {};
  const vector: Record<string, FactorValue> = { ...current };
  const known = new Map(schema.factors.map((f) => [f.name, f.kind]));
  for (const [name, raw] of Object.entries(edits)) {
    const kind = known.get(name);
    if (kind === undefined) {
      errors[name] = "unknown factor";
      continue;
    }
    const text = raw.trim();
    if (text === "") {
      delete vector[name]; // clearing a field unassigns the factor
      continue;
    }
    if (kind === "numeric") {
      const value = Number(text);
      if (!Number.isFinite(value)) {
        errors[name] = "must be a number";
        continue;
      }
      vector[name] = value;
    } else {
      vector[name] = text;
    }
  }
  if (Object.keys(errors).length > 0) {
    return { errors };
  }
  return { vector, errors };
}

/** Request body for a replan: context-correcting causes carry the full vector. */
export function replanRequestBody(
  cause: ReplanCauseKind,
  vector: Record<string, FactorValue> | undefined,
): ReplanRequest {
  if (cause === "WrongExperience") {
    return { cause };
  }
  if (vector === undefined) {
    throw new Error(`${cause} requires a context vector`);
  }
  return { cause, context: vector };
}

export interface MeasurementValidation {
  t?: number;
  value?: number;
  errors: { t?: string; value?: string };
}

export function validateMeasurement(tText: string, valueText: string): MeasurementValidation {
  const errors: { t?: string; value?: string } = {};
  const t = Number(tText.trim());
  const value = Number(valueText.trim());
  if (tText.trim() === "" || !Number.isFinite(t)) {
    errors.t = "progress must be a number";
  } else if (t < 0 || t > 1) {
    errors.t = "progress must be in [0, 1]";
  }
  if (valueText.trim() === "" || !Number.isFinite(value)) {
    errors.value = "value must be a number";
  }
  if (errors.t || errors.value) {
    return { errors };
  }
  return { t, value, errors };
}

export type MutationOutcome =
  | { ok: true }
  | { ok: false; errorCode: string; message: string }
  | { ok: false; errorCode: "pending"; message: "another submission is in flight" };

/** Live state of one project view, refreshed by polling. */
export class ProjectView {
  detail: ProjectDetail | null = null;
  curves: CurvesPayload | null = null;
  feed: FeedEntry[] = [];
  lastPollMs: number | null = null;
  connectionLost = false;
  pendingMutation = false;

  constructor(
    readonly api: ApiClient,
    readonly projectId: string,
    private readonly now: () => number = () => Date.now(),
  ) {}

  /** One poll: pull detail, curves, and events; flag connection loss. */
  async refresh(): Promise<void> {
    try {
      const [detail, curves, events] = await Promise.all([
        this.api.projectDetail(this.projectId),
        this.api.projectCurves(this.projectId),
        this.api.projectEvents(this.projectId),
      ]);
      this.detail = detail;
      this.curves = curves;
      this.feed = buildFeed(events);
      this.lastPollMs = this.now();
      this.connectionLost = false;
    } catch (error) {
      if (error instanceof ApiError) {
        throw error; // server answered: a real API problem, not connectivity
      }
      this.connectionLost = true;
    }
  }

  alerts(): FeedEntry[] {
    return this.feed.filter((entry) => entry.isAlert);
  }

  private async mutate(action: () => Promise<unknown>): Promise<MutationOutcome> {
    if (this.pendingMutation) {
      return { ok: false, errorCode: "pending", message: "another submission is in flight" };
    }
    this.pendingMutation = true;
    try {
      await action();
      await this.refresh();
      return { ok: true };
    } catch (error) {
      if (error instanceof ApiError) {
        return { ok: false, errorCode: error.errorCode, message: error.message };
      }
      this.connectionLost = true;
      return { ok: false, errorCode: "connection", message: String(error) };
    } finally {
      this.pendingMutation = false;
    }
  }

  submitMeasurement(t: number, value: number): Promise<MutationOutcome> {
    return this.mutate(() => this.api.postMeasurement(this.projectId, t, value));
  }

  submitReplan(request: ReplanRequest): Promise<MutationOutcome> {
    return this.mutate(() => this.api.postReplan(this.projectId, request));
  }
}
