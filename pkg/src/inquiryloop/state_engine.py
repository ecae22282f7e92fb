"""State folding and typed gap derivation.

``apply_events`` folds a turn's events into the running case model under a
weight-precedence rule, recording contradictions instead of letting denials
silently erase strong evidence. ``derive_gaps`` diffs the case model against
the goal and emits the typed gap list that drives planning. Both are pure
functions: same inputs, same outputs, replay-identical.
"""
from __future__ import annotations

from typing import Sequence

from .belief import Belief, top_two_margin
from .knowledge import ReasoningPath
from .model import (
    Contradiction,
    CurrentState,
    EngineConfig,
    GAP_KIND_RANK,
    GapKind,
    GapSignal,
    GoalState,
    StateEntry,
    StateLabel,
    StatefulEvent,
    ordered_unique,
    state_weight,
)

_EVIDENCE_GAP_STATES = (StateLabel.PENDING_VERIFICATION, StateLabel.UNCONFIRMED)


def apply_events(
    prev: CurrentState,
    events: Sequence[StatefulEvent],
    turn_index: int,
    config: EngineConfig | None = None,
) -> CurrentState:
    """Fold one turn's events into the case model.

    Precedence per slot: higher state weight wins; on equal weight the later
    event wins. A denial never overwrites a full-weight entry; it is recorded
    as a contradiction instead (and vice versa, a full-weight event landing on
    a denied slot overwrites it but still logs the conflict). Trace ids are
    only ever added, never dropped.
    """
    if turn_index <= prev.turn_index:
        raise ValueError(
            f"turn_index must advance: {turn_index} <= {prev.turn_index}"
        )
    config = config or EngineConfig()
    entries = dict(prev.entries)
    contradictions = list(prev.contradictions)

    for ev in events:
        w_new = state_weight(ev.state, config)
        existing = entries.get(ev.field_id)
        if existing is None:
            entries[ev.field_id] = StateEntry(
                field_id=ev.field_id,
                value=ev.value,
                state=ev.state,
                weight=w_new,
                temporality=ev.temporality,
                supporting_trace_ids=(ev.trace_id,),
                last_update_turn=turn_index,
            )
            continue

        traces = ordered_unique((*existing.supporting_trace_ids, ev.trace_id))
        conflict = (
            ev.state is StateLabel.NEGATED and existing.weight >= 1.0
        ) or (existing.state is StateLabel.NEGATED and w_new >= 1.0)
        if conflict:
            pair = Contradiction(
                slot_id=ev.field_id,
                trace_ids=(existing.supporting_trace_ids[-1], ev.trace_id),
            )
            if pair not in contradictions:
                contradictions.append(pair)

        if ev.state is StateLabel.NEGATED and existing.weight >= 1.0:
            # Denial loses to strong evidence: keep the entry, keep the trace.
            entries[ev.field_id] = StateEntry(
                field_id=existing.field_id,
                value=existing.value,
                state=existing.state,
                weight=existing.weight,
                temporality=existing.temporality,
                supporting_trace_ids=traces,
                last_update_turn=existing.last_update_turn,
            )
            continue

        if w_new >= existing.weight:
            entries[ev.field_id] = StateEntry(
                field_id=ev.field_id,
                value=ev.value,
                state=ev.state,
                weight=w_new,
                temporality=ev.temporality,
                supporting_trace_ids=traces,
                last_update_turn=turn_index,
            )
        else:
            entries[ev.field_id] = StateEntry(
                field_id=existing.field_id,
                value=existing.value,
                state=existing.state,
                weight=existing.weight,
                temporality=existing.temporality,
                supporting_trace_ids=traces,
                last_update_turn=existing.last_update_turn,
            )

    return CurrentState(
        entries=entries,
        contradictions=tuple(contradictions),
        turn_index=turn_index,
    )


def goal_met(cur: CurrentState, goal: GoalState, config: EngineConfig | None = None) -> bool:
    """All mandatory slots at or above w_min and every fired risk rule discharged."""
    config = config or EngineConfig()
    for slot in goal.mandatory_slots():
        if cur.weight_of(slot.slot_id) < config.w_min:
            return False
    for rule in goal.risk_rules:
        if rule.fired(cur) and not rule.discharged(cur):
            return False
    return True


def open_risk_rules(cur: CurrentState, goal: GoalState) -> list:
    """Risk rules currently fired but not yet discharged."""
    return [r for r in goal.risk_rules if r.fired(cur) and not r.discharged(cur)]


def derive_gaps(
    cur: CurrentState,
    goal: GoalState,
    belief: Belief,
    paths: Sequence[ReasoningPath] = (),
    config: EngineConfig | None = None,
) -> list[GapSignal]:
    """Typed difference between the case model and the goal.

    Emits, in a deterministic (kind rank, slot) order:
      information  - mandatory goal slot missing or below w_min
      evidence     - entry sitting in a pending/unconfirmed state
      risk         - fired risk rule not yet discharged, at rule severity
      differential - top-two belief hypotheses closer than the margin
      path_blocking- a retrieved path whose precondition slot is below w_min
    """
    config = config or EngineConfig()
    gaps: list[GapSignal] = []

    for slot in goal.mandatory_slots():
        w = cur.weight_of(slot.slot_id)
        if w < config.w_min:
            severity = 1.0 if slot.slot_id not in cur.entries else round(config.w_min - w, 9)
            gaps.append(
                GapSignal(
                    kind=GapKind.INFORMATION,
                    slot_id=slot.slot_id,
                    severity=severity,
                    rationale_trace=f"mandatory slot {slot.slot_id} at weight {w:.2f} < {config.w_min:.2f}",
                    source=f"goal:{slot.slot_id}",
                )
            )

    for slot_id in sorted(cur.entries):
        entry = cur.entries[slot_id]
        if entry.state in _EVIDENCE_GAP_STATES:
            gaps.append(
                GapSignal(
                    kind=GapKind.EVIDENCE,
                    slot_id=slot_id,
                    severity=round(1.0 - entry.weight, 9),
                    rationale_trace=f"{slot_id} is {entry.state.value}; needs verification",
                    source=f"entry:{slot_id}",
                )
            )

    for rule in open_risk_rules(cur, goal):
        blocked = [s for s in rule.unresolved_slots if cur.weight_of(s) < rule.threshold]
        target = blocked[0] if blocked else rule.unresolved_slots[0]
        gaps.append(
            GapSignal(
                kind=GapKind.RISK,
                slot_id=target,
                severity=rule.severity,
                rationale_trace=(
                    f"risk rule {rule.rule_id} fired; {', '.join(blocked)} unresolved"
                ),
                source=rule.rule_id,
            )
        )

    margin = top_two_margin(belief)
    if margin is not None and margin < config.differential_delta:
        ranked = sorted(belief.probs.items(), key=lambda kv: (-kv[1], kv[0]))
        a, b = ranked[0][0], ranked[1][0]
        gaps.append(
            GapSignal(
                kind=GapKind.DIFFERENTIAL,
                slot_id=None,
                severity=round(config.differential_delta - margin, 9),
                rationale_trace=f"top hypotheses {a} and {b} within {margin:.3f}",
                source="belief:top2",
            )
        )

    blocked_slots: dict[str, GapSignal] = {}
    for path in paths:
        slot = path.precondition_slot
        if slot is None:
            continue
        w = cur.weight_of(slot)
        if w < config.w_min and slot not in blocked_slots:
            blocked_slots[slot] = GapSignal(
                kind=GapKind.PATH_BLOCKING,
                slot_id=slot,
                severity=round(config.w_min - w, 9),
                rationale_trace=(
                    f"path {'>'.join(path.nodes)} blocked on {slot} at weight {w:.2f}"
                ),
                source=f"path:{path.nodes[0]}>{path.nodes[-1]}",
            )
    gaps.extend(blocked_slots[s] for s in sorted(blocked_slots))

    gaps.sort(key=lambda g: (GAP_KIND_RANK[g.kind], g.slot_id or "", g.source))
    return gaps


def gaps_by_urgency(gaps: Sequence[GapSignal]) -> list[GapSignal]:
    """Most urgent first: numeric severity, then kind rank, then slot."""
    return sorted(
        gaps, key=lambda g: (-g.severity, GAP_KIND_RANK[g.kind], g.slot_id or "", g.source)
    )
