/** Typed fetch client for the sprintctl API. */

import type {
  CurvesPayload,
  EventPayload,
  MutationResponse,
  ProjectDetail,
  ProjectSummary,
  ReplanRequest,
  ReplanResponse,
  SchemaPayload,
} from "./types.js";

/** A non-2xx response; carries the server's stable error code when present. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseResponse<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "http-error";
    let message = `request failed with status ${response.status}`;
    try {
      const body = (await response.json()) as { error_code?: string; message?: string };
      if (body.error_code) code = body.error_code;
      if (body.message) message = body.message;
    } catch {
      // non-JSON error body; keep the generic message
    }
    throw new ApiError(response.status, code, message);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, { cache: "no-store" });
    return parseResponse<T>(response);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parseResponse<T>(response);
  }

  listProjects(): Promise<ProjectSummary[]> {
    return this.get("/api/projects");
  }

  projectDetail(projectId: string): Promise<ProjectDetail> {
    return this.get(`/api/projects/${encodeURIComponent(projectId)}`);
  }

  projectCurves(projectId: string): Promise<CurvesPayload> {
    return this.get(`/api/projects/${encodeURIComponent(projectId)}/curves`);
  }

  projectEvents(projectId: string): Promise<EventPayload[]> {
    return this.get(`/api/projects/${encodeURIComponent(projectId)}/events`);
  }

  schema(): Promise<SchemaPayload> {
    return this.get("/api/schema");
  }

  postMeasurement(projectId: string, t: number, value: number): Promise<MutationResponse> {
    return this.post(`/api/projects/${encodeURIComponent(projectId)}/measurements`, {
      t,
      value,
    });
  }

  postReplan(projectId: string, request: ReplanRequest): Promise<ReplanResponse> {
    return this.post(`/api/projects/${encodeURIComponent(projectId)}/replan`, request);
  }
}
