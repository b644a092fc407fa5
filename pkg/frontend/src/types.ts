/** Payload shapes of the assistant service API (the single source of
 * truth for every number the console displays). */

export type StatusLevel = "Safe" | "Alert" | "Critical";

export interface Trigger {
  line: string;
  rho: number;
  forecast_step: number;
}

export interface LineReading {
  id: string;
  from_substation: string;
  to_substation: string;
  in_service: boolean;
  flow_mw: number;
  rho: number;
  thermal_limit: number;
}

export interface GeneratorReading {
  id: string;
  substation: string;
  kind: "dispatchable" | "wind" | "solar";
  dispatch_mw: number;
  planned_mw: number;
}

export interface LoadReading {
  id: string;
  substation: string;
  mw: number;
}

export interface HistoryPoint {
  step: number;
  max_rho: number | "inf";
  redispatch_mw: number;
  topology_distance: number;
  blackout: boolean;
}

export interface AuditEntry {
  index: number;
  step: number;
  actor: "operator" | "auto";
  kind: "staged" | "step";
  action: ActionSpec;
  outcome: string;
  detail: string;
}

export interface Snapshot {
  session: string;
  grid: string;
  chronic: string;
  mode: "paused" | "auto";
  step_index: number;
  step_count: number;
  blackout: boolean;
  status: { level: StatusLevel; max_rho: number | "inf"; triggers: Trigger[] };
  max_rho: number | "inf";
  topology: {
    element_bus: Record<string, number>;
    line_status: Record<string, boolean>;
  };
  topology_distance: number;
  lines: LineReading[];
  generators: GeneratorReading[];
  loads: LoadReading[];
  layout: Record<string, [number, number]>;
  staged_action: ActionSpec | null;
  history: HistoryPoint[];
  audit_tail: AuditEntry[];
}

export type ActionSpec =
  | { type: "noop"; reason?: string }
  | { type: "substation"; substation: string; assignment: Record<string, number> }
  | { type: "line"; line: string; connect: boolean }
  | {
      type: "redispatch";
      deltas: Record<string, number>;
      curtail_caps?: Record<string, number>;
      insufficient?: boolean;
    }
  | { type: "composite"; topology: ActionSpec; redispatch: ActionSpec };

export interface N1Summary {
  screened: number;
  violations: number;
  worst_rho: number | "inf";
}

export interface PostLine {
  id: string;
  rho: number;
  in_service: boolean;
}

export interface Recommendation {
  rank: number;
  candidate_id: string;
  action: ActionSpec;
  projected_max_rho: (number | "inf")[];
  post_lines: PostLine[];
  n1: N1Summary;
  explanation: {
    triggering_lines: Trigger[];
    affected: string | null;
  };
  rejections?: string[];
}

export interface CandidatesResponse {
  step_index: number;
  status: StatusLevel;
  note: string;
  noop_max_rho?: (number | "inf")[];
  recommendations: Recommendation[];
  computed_ms: number;
}

export interface ServiceErrorBody {
  code: string;
  message: string;
  detail: string;
}
