// Payload shapes of the session service, version 1. The console renders these
// verbatim; it computes no domain values of its own.

export interface ScenarioSummary {
  scenario_id: string;
  title: string;
  sections: string[];
  mandatory_slots: string[];
  hypothesis_count: number;
}

export interface ScenariosResponse {
  v: number;
  pack_id: string;
  scenarios: ScenarioSummary[];
}

export interface SessionCreated {
  v: number;
  session_id: string;
  scenario_id: string;
  policy: string;
  status: string;
}

export interface EventSeedBody {
  field_id: string;
  value: string;
  state: string;
  temporality: string;
  char_start: number;
  char_end: number;
  role?: string | null;
  confidence?: number | null;
}

export interface UtteranceRequest {
  speaker: string;
  text: string;
  events?: EventSeedBody[] | null;
}

export type UtilityComponents = Record<string, number>;

export interface ActionBody {
  action_id: string;
  verb: string;
  target_slot: string | null;
  prompt_text: string;
  utility: number;
  utility_components: UtilityComponents;
}

export interface GapBody {
  kind: string;
  slot_id: string | null;
  severity: number;
  rationale_trace: string;
  source: string;
}

export interface TurnSummary {
  turn_index: number;
  injected: boolean;
  events: Record<string, unknown>[];
  gaps: GapBody[];
  action: ActionBody | null;
  trace_hash: string;
}

export interface UtteranceResponse {
  v: number;
  session_id: string;
  status: string;
  turns: TurnSummary[];
  emr_diff: Record<string, unknown>[];
  t_goal: number | null;
}

export interface StateEntryBody {
  field_id: string;
  value: string;
  state: string;
  weight: number;
  temporality: string;
  supporting_trace_ids: string[];
  last_update_turn: number;
}

export interface StateResponse {
  v: number;
  session_id: string;
  turn_index: number;
  state_hash: string;
  entries: Record<string, StateEntryBody>;
  contradictions: { slot_id: string; trace_ids: string[] }[];
  belief: { probs: Record<string, number>; history: [number, number][] };
  status: string;
}

export interface RecordRow {
  slot_id: string;
  normalized_value: string;
  status: string;
  temporality: string;
  assertion: string;
  risk_flag: boolean;
  evidence: unknown[];
}

export interface EmrResponse {
  v: number;
  session_id: string;
  record: { sections: Record<string, RecordRow[]>; generated_at_turn: number };
}

export interface TraceResponse {
  v: number;
  session_id: string;
  traces: Record<string, unknown>[];
  trace_hashes: string[];
}

export interface ErrorBody {
  v: number;
  code: string;
  message: string;
}
