// Pure view-model builders. Every number they emit is copied from a service
// payload; nothing is recomputed here (the parity tests hold us to that).

import type {
  ActionBody,
  GapBody,
  RecordRow,
  StateEntryBody,
  StateResponse,
} from "./types.js";

// Sign pattern of the action utility: positive contributions for information
// gain, risk reduction, path shortening, explanation gain and conservative
// bias; penalties for redundancy and cognitive load.
export const COMPONENT_ORDER = ["ig", "rr", "ps", "eg", "rp", "cl", "cb"] as const;

export const COMPONENT_SIGNS: Record<string, 1 | -1> = {
  ig: 1,
  rr: 1,
  ps: 1,
  eg: 1,
  rp: -1,
  cl: -1,
  cb: 1,
};

export const COMPONENT_LABELS: Record<string, string> = {
  ig: "information gain",
  rr: "risk reduction",
  ps: "path shortening",
  eg: "explanation gain",
  rp: "redundancy penalty",
  cl: "cognitive load",
  cb: "conservative bias",
};

export interface ComponentView {
  key: string;
  label: string;
  sign: "+" | "-";
  value: number;
}

export interface ActionCardView {
  actionId: string;
  verb: string;
  targetSlot: string | null;
  prompt: string;
  utility: number;
  components: ComponentView[];
}

export function actionCard(action: ActionBody): ActionCardView {
  return {
    actionId: action.action_id,
    verb: action.verb,
    targetSlot: action.target_slot,
    prompt: action.prompt_text,
    utility: action.utility,
    components: COMPONENT_ORDER.map((key) => ({
      key,
      label: COMPONENT_LABELS[key],
      sign: COMPONENT_SIGNS[key] === 1 ? "+" : "-",
      value: action.utility_components[key] ?? 0,
    })),
  };
}

export interface GapBadgeView {
  kind: string;
  badge: string;
  slot: string;
  severity: number;
  rationale: string;
}

const GAP_BADGES: Record<string, string> = {
  risk: "badge-risk",
  evidence: "badge-evidence",
  information: "badge-info",
  differential: "badge-differential",
  path_blocking: "badge-path",
};

export function gapBadges(gaps: GapBody[]): GapBadgeView[] {
  return gaps.map((g) => ({
    kind: g.kind,
    badge: GAP_BADGES[g.kind] ?? "badge-info",
    slot: g.slot_id ?? "(overall)",
    severity: g.severity,
    rationale: g.rationale_trace,
  }));
}

export interface BeliefBarView {
  hypothesis: string;
  probability: number;
  widthPercent: number;
}

export function beliefBars(probs: Record<string, number>): BeliefBarView[] {
  return Object.entries(probs)
    .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]))
    .map(([hypothesis, probability]) => ({
      hypothesis,
      probability,
      widthPercent: probability * 100,
    }));
}

export interface StateRowView {
  slot: string;
  value: string;
  state: string;
  weight: number;
  turn: number;
}

export function stateRows(state: StateResponse): StateRowView[] {
  return Object.values(state.entries)
    .map((e: StateEntryBody) => ({
      slot: e.field_id,
      value: e.value,
      state: e.state,
      weight: e.weight,
      turn: e.last_update_turn,
    }))
    .sort((a, b) => a.slot.localeCompare(b.slot));
}

export interface EmrSectionView {
  section: string;
  rows: RecordRow[];
}

export function emrSections(
  sections: Record<string, RecordRow[]>,
  order: string[],
): EmrSectionView[] {
  const named = order.filter((s) => s in sections);
  const rest = Object.keys(sections).filter((s) => !order.includes(s)).sort();
  return [...named, ...rest].map((section) => ({
    section,
    rows: sections[section] ?? [],
  }));
}

export function validateUtterance(text: string): string | null {
  if (text.trim().length === 0) {
    return "Enter an utterance before submitting.";
  }
  return null;
}

export function parseEventAnnotations(raw: string): unknown[] | null {
  const trimmed = raw.trim();
  if (!trimmed) return null;
  const parsed = JSON.parse(trimmed);
  if (!Array.isArray(parsed)) {
    throw new Error("event annotations must be a JSON array");
  }
  return parsed;
}
