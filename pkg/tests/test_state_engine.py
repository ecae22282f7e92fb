from __future__ import annotations

import pytest

from inquiryloop.belief import Belief
from inquiryloop.knowledge import KnowledgeEdge, ReasoningPath
from inquiryloop.model import (
    Condition,
    CurrentState,
    EngineConfig,
    EvidenceSpan,
    GapKind,
    GoalSlot,
    GoalState,
    RiskRule,
    Role,
    StateLabel,
    StatefulEvent,
    Temporality,
)
from inquiryloop.state_engine import apply_events, derive_gaps, goal_met

CFG = EngineConfig()


def ev(slot, value, state, trace, turn=1):
    return StatefulEvent(
        field_id=slot, value=value, state=state, temporality=Temporality.PRESENT,
        role=Role.PATIENT, evidence=EvidenceSpan(turn, 0, 5, Role.PATIENT),
        confidence=1.0, trace_id=trace,
    )


def test_empty_events_advances_turn_only():
    prev = CurrentState.empty()
    cur = apply_events(prev, [], 0, CFG)
    assert cur.turn_index == 0 and dict(cur.entries) == {}


def test_upgrade_keeps_both_traces():
    cur = apply_events(CurrentState.empty(),
                       [ev("chest_xray", "advised", StateLabel.RECOMMENDED, "t0e0", 0)], 0, CFG)
    assert cur.entries["chest_xray"].weight == 0.2
    cur = apply_events(cur, [ev("chest_xray", "result_normal", StateLabel.COMPLETED, "t1e0")], 1, CFG)
    entry = cur.entries["chest_xray"]
    assert entry.state is StateLabel.COMPLETED
    assert entry.weight == 0.7
    assert entry.value == "result_normal"
    assert entry.supporting_trace_ids == ("t0e0", "t1e0")


def test_negation_never_overwrites_strong_entry():
    cur = apply_events(CurrentState.empty(),
                       [ev("penicillin_allergy", "present", StateLabel.OBSERVED_RESULT, "t0e0", 0)],
                       0, CFG)
    cur = apply_events(cur, [ev("penicillin_allergy", "absent", StateLabel.NEGATED, "t1e0")], 1, CFG)
    entry = cur.entries["penicillin_allergy"]
    assert entry.value == "present" and entry.state is StateLabel.OBSERVED_RESULT
    assert ("penicillin_allergy", ("t0e0", "t1e0")) in [
        (c.slot_id, c.trace_ids) for c in cur.contradictions
    ]
    assert "t1e0" in entry.supporting_trace_ids  # provenance retained


def test_strong_event_overwrites_negated_but_logs_conflict():
    cur = apply_events(CurrentState.empty(),
                       [ev("fever", "absent", StateLabel.NEGATED, "t0e0", 0)], 0, CFG)
    cur = apply_events(cur, [ev("fever", "present", StateLabel.OBSERVED_RESULT, "t1e0")], 1, CFG)
    assert cur.entries["fever"].state is StateLabel.OBSERVED_RESULT
    assert len(cur.contradictions) == 1


def test_equal_weight_later_turn_wins():
    cur = apply_events(CurrentState.empty(),
                       [ev("cough", "mild", StateLabel.OBSERVED_RESULT, "t0e0", 0)], 0, CFG)
    cur = apply_events(cur, [ev("cough", "severe", StateLabel.OBSERVED_RESULT, "t1e0")], 1, CFG)
    assert cur.entries["cough"].value == "severe"
    assert cur.entries["cough"].last_update_turn == 1


def test_turn_index_must_advance():
    cur = apply_events(CurrentState.empty(), [], 3, CFG)
    with pytest.raises(ValueError):
        apply_events(cur, [], 3, CFG)


def test_idempotent_on_duplicate_events():
    events = [ev("cough", "mild", StateLabel.OBSERVED_RESULT, "t1e0"),
              ev("fever", "absent", StateLabel.NEGATED, "t1e1")]
    once = apply_events(CurrentState.empty(), events, 1, CFG)
    twice = apply_events(once, events, 2, CFG)
    assert dict(once.entries).keys() == dict(twice.entries).keys()
    for slot in once.entries:
        a, b = once.entries[slot], twice.entries[slot]
        assert (a.value, a.state, a.weight, a.supporting_trace_ids) == \
            (b.value, b.state, b.weight, b.supporting_trace_ids)
    assert once.contradictions == twice.contradictions


def test_monotone_provenance():
    state = CurrentState.empty()
    seen: set[str] = set()
    batches = [
        [ev("a", "1", StateLabel.RECOMMENDED, "t0e0", 0)],
        [ev("a", "2", StateLabel.OBSERVED_RESULT, "t1e0"), ev("b", "3", StateLabel.UNCONFIRMED, "t1e1")],
        [ev("a", "4", StateLabel.NEGATED, "t2e0", 2), ev("b", "3", StateLabel.CONFIRMED, "t2e1", 2)],
    ]
    for i, batch in enumerate(batches):
        state = apply_events(state, batch, i, CFG)
        assert seen <= state.all_trace_ids()
        seen = state.all_trace_ids()


GOAL = GoalState(
    required_slots=(
        GoalSlot("symptom_duration", "HPI", mandatory=True),
        GoalSlot("chest_pain", "HPI", mandatory=True),
        GoalSlot("exertional_worsening", "ROS", risk_flag=True),
        GoalSlot("ecg", "Plan", mandatory=True, risk_flag=True),
        GoalSlot("lab_panel", "Plan"),
    ),
    risk_rules=(
        RiskRule("acute_workup",
                 (Condition("chest_pain", min_weight=1.0),
                  Condition("exertional_worsening", min_weight=1.0)),
                 ("ecg",), severity=2.0),
    ),
)


def state_of(*events):
    return apply_events(CurrentState.empty(), list(events), 0, CFG)


def test_information_gap_for_missing_mandatory():
    cur = state_of()
    gaps = derive_gaps(cur, GOAL, Belief(probs={"h1": 1.0}), (), CFG)
    info = [g for g in gaps if g.kind is GapKind.INFORMATION]
    assert {g.slot_id for g in info} == {"symptom_duration", "chest_pain", "ecg"}
    for g in info:
        assert g.severity == 1.0


def test_gap_soundness_mandatory_below_threshold():
    cur = state_of(ev("chest_pain", "present", StateLabel.OBSERVED_RESULT, "t0e0", 0),
                   ev("symptom_duration", "3d", StateLabel.RECOMMENDED, "t0e1", 0))
    gaps = derive_gaps(cur, GOAL, Belief(probs={"h1": 1.0}), (), CFG)
    for g in gaps:
        if g.kind is GapKind.INFORMATION:
            slot = GOAL.slot(g.slot_id)
            assert slot is not None and slot.mandatory
            assert cur.weight_of(g.slot_id) < CFG.w_min


def test_evidence_gap_for_pending_entries():
    cur = state_of(ev("lab_panel", "ordered", StateLabel.PENDING_VERIFICATION, "t0e0", 0))
    gaps = derive_gaps(cur, GOAL, Belief(probs={"h1": 1.0}), (), CFG)
    assert any(g.kind is GapKind.EVIDENCE and g.slot_id == "lab_panel" for g in gaps)


def test_risk_gap_fires_with_rule_severity():
    cur = state_of(ev("chest_pain", "present", StateLabel.OBSERVED_RESULT, "t0e0", 0),
                   ev("exertional_worsening", "present", StateLabel.OBSERVED_RESULT, "t0e1", 0))
    gaps = derive_gaps(cur, GOAL, Belief(probs={"h1": 1.0}), (), CFG)
    risk = [g for g in gaps if g.kind is GapKind.RISK]
    assert len(risk) == 1
    assert risk[0].severity == 2.0
    assert risk[0].source == "acute_workup"
    assert risk[0].slot_id == "ecg"


def test_differential_gap_threshold():
    cur = state_of()
    close = Belief(probs={"h1": 0.52, "h2": 0.48})
    far = Belief(probs={"h1": 0.8, "h2": 0.2})
    gaps_close = derive_gaps(cur, GOAL, close, (), CFG)
    gaps_far = derive_gaps(cur, GOAL, far, (), CFG)
    assert any(g.kind is GapKind.DIFFERENTIAL for g in gaps_close)
    assert not any(g.kind is GapKind.DIFFERENTIAL for g in gaps_far)


def test_path_blocking_gap():
    edge = KnowledgeEdge("a", "b", "requires", 1.0)
    path = ReasoningPath(nodes=("a", "b"), edges=(edge,), cost=1.0, score=0.5,
                         precondition_slot="ecg")
    cur = state_of()
    gaps = derive_gaps(cur, GOAL, Belief(probs={"h1": 1.0}), [path], CFG)
    assert any(g.kind is GapKind.PATH_BLOCKING and g.slot_id == "ecg" for g in gaps)


def test_gap_list_replay_identical():
    cur = state_of(ev("chest_pain", "present", StateLabel.OBSERVED_RESULT, "t0e0", 0))
    b = Belief(probs={"h1": 0.5, "h2": 0.5})
    assert derive_gaps(cur, GOAL, b, (), CFG) == derive_gaps(cur, GOAL, b, (), CFG)


def test_goal_met_requires_mandatory_and_risk_discharge():
    cur = state_of(
        ev("chest_pain", "present", StateLabel.OBSERVED_RESULT, "t0e0", 0),
        ev("symptom_duration", "3d", StateLabel.OBSERVED_RESULT, "t0e1", 0),
        ev("exertional_worsening", "present", StateLabel.OBSERVED_RESULT, "t0e2", 0),
    )
    assert not goal_met(cur, GOAL, CFG)  # ecg missing and rule fired
    cur = apply_events(cur, [ev("ecg", "done", StateLabel.COMPLETED, "t1e0")], 1, CFG)
    assert goal_met(cur, GOAL, CFG)
