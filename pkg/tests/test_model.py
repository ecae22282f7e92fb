from __future__ import annotations

import pytest

from inquiryloop.model import (
    Condition,
    CurrentState,
    EngineConfig,
    EvidenceSpan,
    GapKind,
    GapSignal,
    GoalSlot,
    GoalState,
    RiskRule,
    Role,
    StateEntry,
    StateLabel,
    StatefulEvent,
    Temporality,
    UnknownLabelError,
    canonical_json,
    stable_hash,
    state_weight,
    tokenize,
)

ALL_LABELS = list(StateLabel)


def test_state_weight_table_exact():
    expected = {
        StateLabel.OBSERVED_RESULT: 1.0,
        StateLabel.CONFIRMED: 1.0,
        StateLabel.VERIFIED: 1.0,
        StateLabel.COMPLETED: 0.7,
        StateLabel.HISTORICAL_RESULT: 0.5,
        StateLabel.RECOMMENDED: 0.2,
        StateLabel.PENDING_VERIFICATION: 0.2,
        StateLabel.UNCONFIRMED: 0.2,
        StateLabel.UNKNOWN: 0.0,
    }
    for label, weight in expected.items():
        assert state_weight(label) == weight


def test_state_weight_total_over_labels():
    for label in ALL_LABELS:
        w = state_weight(label)
        assert 0.0 <= w <= 1.0


def test_state_weight_default_overrides():
    assert state_weight(StateLabel.NEGATED) == 0.0
    assert state_weight(StateLabel.NOT_DONE) == 0.0
    config = EngineConfig(negated_weight=0.1, not_done_weight=0.05)
    assert state_weight(StateLabel.NEGATED, config) == 0.1
    assert state_weight(StateLabel.NOT_DONE, config) == 0.05
    # overrides never touch the listed states
    assert state_weight(StateLabel.COMPLETED, config) == 0.7


def test_label_parsing_is_closed():
    assert StateLabel.parse("negated") is StateLabel.NEGATED
    with pytest.raises(UnknownLabelError):
        StateLabel.parse("kind_of_confirmed")
    with pytest.raises(UnknownLabelError):
        Role.parse("nurse")
    with pytest.raises(UnknownLabelError):
        Temporality.parse("sometime")


def test_evidence_span_bounds():
    EvidenceSpan(0, 0, 3, Role.PATIENT)
    with pytest.raises(ValueError):
        EvidenceSpan(0, 3, 3, Role.PATIENT)
    with pytest.raises(ValueError):
        EvidenceSpan(-1, 0, 3, Role.PATIENT)


def test_event_confidence_bounds():
    span = EvidenceSpan(0, 0, 4, Role.PATIENT)
    with pytest.raises(ValueError):
        StatefulEvent("cough", "present", StateLabel.OBSERVED_RESULT,
                      Temporality.PRESENT, Role.PATIENT, span, 1.2, "t0e0")


def test_state_entry_requires_provenance():
    with pytest.raises(ValueError):
        StateEntry("cough", "present", StateLabel.OBSERVED_RESULT, 1.0,
                   Temporality.PRESENT, (), 0)


def test_goal_state_rejects_unknown_rule_slots():
    with pytest.raises(ValueError):
        GoalState(
            required_slots=(GoalSlot("cough", "HPI"),),
            risk_rules=(RiskRule("r1", (Condition("fever"),), ("cough",), 1.0),),
        )


def test_risk_rule_fire_and_discharge():
    goal_slots = (GoalSlot("cough", "HPI"), GoalSlot("xray", "Plan"))
    rule = RiskRule("r1", (Condition("cough", min_weight=1.0),), ("xray",), 2.0)
    GoalState(required_slots=goal_slots, risk_rules=(rule,))
    cur = CurrentState(
        entries={"cough": StateEntry("cough", "present", StateLabel.OBSERVED_RESULT,
                                     1.0, Temporality.PRESENT, ("t0e0",), 0)},
        contradictions=(), turn_index=0)
    assert rule.fired(cur)
    assert not rule.discharged(cur)


def test_gap_signal_risk_invariant():
    with pytest.raises(ValueError):
        GapSignal(GapKind.RISK, "xray", 0.0, "no severity", "r1")
    with pytest.raises(ValueError):
        GapSignal(GapKind.RISK, "xray", 1.0, "no source", "")


def test_canonical_json_stable_ordering():
    a = canonical_json({"b": 1, "a": [2, 3]})
    b = canonical_json({"a": [2, 3], "b": 1})
    assert a == b == '{"a":[2,3],"b":1}'
    assert stable_hash({"b": 1, "a": [2, 3]}) == stable_hash({"a": [2, 3], "b": 1})


def test_tokenize():
    assert tokenize("Chest-pain, for 3 days!") == ["chest", "pain", "for", "3", "days"]
    assert tokenize("") == []
