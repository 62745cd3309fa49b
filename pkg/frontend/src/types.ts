/** Payload shapes of the sprintctl HTTP JSON API (see docs/api.md in the repo). */

export interface ProjectSummary {
  project_id: string;
  attribute: string;
  selected_cluster_id: number;
  planned_duration: number;
  progress: number;
  n_actuals: number;
  n_events: number;
}

export interface ControlConfigPayload {
  tolerance: number;
  epsilon: number;
  min_prefix_points: number;
  hybrid_switch: number;
  adaptation: string;
  selection_strategy: string;
}

export type FactorValue = number | string;

export interface ProjectDetail extends ProjectSummary {
  context: Record<string, FactorValue>;
  config: ControlConfigPayload;
}

export interface ActualPoint {
  t: number;
  value: number;
}

export interface CurvesPayload {
  project_id: string;
  attribute: string;
  selected_cluster_id: number;
  tolerance: number;
  grid: number[];
  plan: number[];
  corridor_low: number[];
  corridor_high: number[];
  cluster: number[];
  actuals: ActualPoint[];
}

export interface EventPayload {
  kind: string;
  at_progress: number;
  payload: Record<string, unknown>;
}

export interface SchemaFactor {
  name: string;
  kind: "numeric" | "categorical";
  weight: number;
}

export interface SchemaPayload {
  factors: SchemaFactor[];
  ranges: Record<string, [number, number]>;
}

export interface MutationResponse {
  project: ProjectSummary;
  events: EventPayload[];
}

export interface ReplanResponse extends MutationResponse {
  old_cluster_id: number;
  new_cluster_id: number;
}

export type ReplanCauseKind =
  | "WrongExperience"
  | "WrongContext"
  | "ChangedCharacteristics";

export interface ReplanRequest {
  cause: ReplanCauseKind;
  context?: Record<string, FactorValue>;
}
