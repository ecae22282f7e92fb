// DOM wiring for the console. State renders only from server responses;
// there is no optimistic UI and one in-flight request per session tab.

import { InquiryClient, ServiceError } from "./api.js";
import type { ScenarioSummary, TurnSummary } from "./types.js";
import {
  actionCard,
  beliefBars,
  emrSections,
  gapBadges,
  parseEventAnnotations,
  stateRows,
  validateUtterance,
} from "./view.js";

const params = new URLSearchParams(window.location.search);
const client = new InquiryClient(params.get("api") ?? "http://127.0.0.1:8234");

interface Tab {
  sessionId: string;
  scenarioId: string;
  policy: string;
  status: string;
  tGoal: number | null;
  turns: TurnSummary[];
  busy: boolean;
}

const tabs: Tab[] = [];
let active = -1;

const el = (id: string) => document.getElementById(id)!;

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

async function init(): Promise<void> {
  try {
    const body = await client.scenarios();
    const picker = el("scenario") as HTMLSelectElement;
    body.scenarios.forEach((s: ScenarioSummary) => {
      const opt = h("option");
      opt.value = s.scenario_id;
      opt.textContent = `${s.title}`;
      picker.appendChild(opt);
    });
    el("pack").textContent = `pack: ${body.pack_id}`;
  } catch (err) {
    showError(`Cannot reach the service at ${client.baseUrl}: ${String(err)}`);
  }
  el("create").addEventListener("click", createSession);
  el("send").addEventListener("click", submitUtterance);
}

function showError(message: string): void {
  const banner = el("error");
  banner.textContent = message;
  banner.hidden = message === "";
}

async function createSession(): Promise<void> {
  showError("");
  const picker = el("scenario") as HTMLSelectElement;
  const policy = (el("policy") as HTMLSelectElement).value;
  try {
    const created = await client.createSession(picker.value, policy);
    tabs.push({
      sessionId: created.session_id,
      scenarioId: created.scenario_id,
      policy: created.policy,
      status: created.status,
      tGoal: null,
      turns: [],
      busy: false,
    });
    active = tabs.length - 1;
    renderTabs();
    await refreshPanels();
  } catch (err) {
    showError(String(err));
  }
}

function renderTabs(): void {
  const bar = el("tabs");
  bar.replaceChildren();
  tabs.forEach((tab, i) => {
    const btn = h("button", i === active ? "tab current" : "tab",
      `${tab.scenarioId} · ${tab.sessionId}`);
    btn.addEventListener("click", async () => {
      active = i;
      renderTabs();
      await refreshPanels();
    });
    bar.appendChild(btn);
  });
}

async function submitUtterance(): Promise<void> {
  if (active < 0) return showError("Create a session first.");
  const tab = tabs[active];
  if (tab.busy) return;
  const textArea = el("utterance") as HTMLTextAreaElement;
  const problem = validateUtterance(textArea.value);
  if (problem) return showError(problem);
  let events: unknown[] | null = null;
  try {
    events = parseEventAnnotations((el("annotations") as HTMLTextAreaElement).value);
  } catch (err) {
    return showError(`Annotations: ${String(err)}`);
  }
  showError("");
  tab.busy = true;
  setInputEnabled(false);
  try {
    const resp = await client.postUtterance(tab.sessionId, {
      speaker: (el("speaker") as HTMLSelectElement).value,
      text: textArea.value,
      events: events as never,
    });
    tab.status = resp.status;
    tab.tGoal = resp.t_goal;
    tab.turns.push(...resp.turns);
    textArea.value = "";
    (el("annotations") as HTMLTextAreaElement).value = "";
    await refreshPanels();
  } catch (err) {
    if (err instanceof ServiceError) {
      showError(`${err.code}: ${err.message}`);
      if (err.code === "session_ended") {
        tab.status = "ended";
        await refreshPanels();
      }
    } else {
      showError(String(err));
    }
  } finally {
    tab.busy = false;
    setInputEnabled(active >= 0 && tabs[active].status === "active");
  }
}

function setInputEnabled(enabled: boolean): void {
  (el("utterance") as HTMLTextAreaElement).disabled = !enabled;
  (el("send") as HTMLButtonElement).disabled = !enabled;
}

async function refreshPanels(): Promise<void> {
  if (active < 0) return;
  const tab = tabs[active];
  renderStatus(tab);
  renderTurns(tab);
  renderProposal(tab);
  try {
    const [state, emr] = await Promise.all([
      client.state(tab.sessionId),
      client.emr(tab.sessionId),
    ]);
    tab.status = state.status;
    renderState(state);
    renderEmr(emr.record.sections);
    renderStatus(tab);
  } catch (err) {
    showError(String(err));
  }
  setInputEnabled(tab.status === "active");
}

function renderStatus(tab: Tab): void {
  const badge = el("status");
  badge.className = `status status-${tab.status}`;
  badge.textContent =
    tab.status === "goal_reached" && tab.tGoal !== null
      ? `goal reached at turn ${tab.tGoal}`
      : tab.status;
}

function renderTurns(tab: Tab): void {
  const list = el("turns");
  list.replaceChildren();
  tab.turns.forEach((t) => {
    const row = h("div", t.injected ? "turn injected" : "turn");
    row.appendChild(h("span", "turn-index", `#${t.turn_index}`));
    const evs = t.events.length
      ? t.events.map((e) => `${e["field_id"]}=${e["value"]} [${e["state"]}]`).join(", ")
      : "no events";
    row.appendChild(h("span", "turn-events", evs));
    if (tab.tGoal !== null && t.turn_index === tab.tGoal) {
      row.classList.add("goal-turn");
    }
    list.appendChild(row);
  });
  list.scrollTop = list.scrollHeight;
}

function renderProposal(tab: Tab): void {
  const holder = el("action");
  holder.replaceChildren();
  const lastWithAction = [...tab.turns].reverse().find((t) => t.action !== null);
  if (!lastWithAction || !lastWithAction.action) {
    holder.appendChild(h("p", "muted", "No proposed action yet."));
    renderGaps([]);
    return;
  }
  const card = actionCard(lastWithAction.action);
  const title = h("div", "action-title",
    `${card.verb}${card.targetSlot ? " · " + card.targetSlot : ""}`);
  holder.appendChild(title);
  holder.appendChild(h("p", "prompt", card.prompt));
  holder.appendChild(h("div", "utility", `utility ${card.utility.toFixed(4)}`));
  const table = h("table", "components");
  card.components.forEach((c) => {
    const tr = h("tr");
    tr.appendChild(h("td", "sign", c.sign));
    tr.appendChild(h("td", "", c.label));
    tr.appendChild(h("td", "num", c.value.toFixed(4)));
    table.appendChild(tr);
  });
  holder.appendChild(table);
  renderGaps(lastWithAction.gaps);
}

function renderGaps(gaps: Parameters<typeof gapBadges>[0]): void {
  const list = el("gaps");
  list.replaceChildren();
  if (!gaps.length) {
    list.appendChild(h("p", "muted", "No open gaps on the last proposal."));
    return;
  }
  gapBadges(gaps).forEach((g) => {
    const row = h("div", "gap");
    row.appendChild(h("span", `badge ${g.badge}`, g.kind));
    row.appendChild(h("span", "", `${g.slot} (severity ${g.severity})`));
    row.title = g.rationale;
    list.appendChild(row);
  });
}

function renderState(state: Parameters<typeof stateRows>[0]): void {
  const table = el("state");
  table.replaceChildren();
  const header = h("tr");
  ["slot", "value", "state", "weight"].forEach((c) => header.appendChild(h("th", "", c)));
  table.appendChild(header);
  stateRows(state).forEach((r) => {
    const tr = h("tr");
    tr.appendChild(h("td", "", r.slot));
    tr.appendChild(h("td", "", r.value));
    tr.appendChild(h("td", `chip chip-${r.state}`, r.state));
    tr.appendChild(h("td", "num", r.weight.toFixed(1)));
    table.appendChild(tr);
  });
  const bars = el("belief");
  bars.replaceChildren();
  beliefBars(state.belief.probs).forEach((b) => {
    const row = h("div", "bar-row");
    row.appendChild(h("span", "bar-label", b.hypothesis));
    const track = h("div", "bar-track");
    const fill = h("div", "bar-fill");
    fill.style.width = `${b.widthPercent}%`;
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(h("span", "num", b.probability.toFixed(3)));
    bars.appendChild(row);
  });
}

function renderEmr(sections: Record<string, never[]> | Record<string, any[]>): void {
  const holder = el("emr");
  holder.replaceChildren();
  emrSections(sections, ["HPI", "ROS", "Plan", "Risk"]).forEach((s) => {
    const block = h("div", "emr-section");
    block.appendChild(h("h3", "", s.section));
    if (!s.rows.length) {
      block.appendChild(h("p", "muted", "empty"));
    } else {
      s.rows.forEach((row) => {
        const line = h("div", `emr-row assertion-${row.assertion}`);
        line.appendChild(h("span", "emr-slot", row.slot_id));
        line.appendChild(h("span", "", `${row.normalized_value} · ${row.status}`));
        if (row.risk_flag) line.appendChild(h("span", "badge badge-risk", "risk"));
        block.appendChild(line);
      });
    }
    holder.appendChild(block);
  });
}

init();
