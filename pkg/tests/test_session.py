from __future__ import annotations

import pytest

from inquiryloop.cli import bundled_data_dir
from inquiryloop.knowledge import load_kb
from inquiryloop.model import Role, Verb
from inquiryloop.pack import load_pack
from inquiryloop.planner import PolicyKind
from inquiryloop.session import Session, SessionEndedError, run_policy


@pytest.fixture(scope="module")
def pack():
    return load_pack(bundled_data_dir("pilot_pack"))


@pytest.fixture(scope="module")
def kb():
    return load_kb(bundled_data_dir("kb"))


def drive(pack, kb, script_id, policy):
    return run_policy(pack.scripts[script_id], pack, kb, policy)


def test_turn_pipeline_produces_full_trace(pack, kb):
    result = drive(pack, kb, "chest_01", PolicyKind.FULL_FRAMEWORK)
    first = result.traces[0]
    assert first.turn_index == 0
    assert first.events  # chief complaint extracted
    assert first.state_hash
    assert first.belief["probs"]
    assert first.candidates
    assert first.chosen_action_id is not None
    assert first.retrieval_top


def test_trace_indices_strictly_increasing(pack, kb):
    result = drive(pack, kb, "chest_02", PolicyKind.FULL_FRAMEWORK)
    indices = [t.turn_index for t in result.traces]
    assert indices == sorted(set(indices))


def test_responder_injects_reply_once(pack, kb):
    result = drive(pack, kb, "chest_01", PolicyKind.FULL_FRAMEWORK)
    injected = [t for t in result.traces if t.injected]
    assert injected, "responder never fired"
    # injected turns carry no proposals
    assert all(t.chosen_action_id is None for t in injected)
    # a given (verb, slot) answer fires at most once
    seen = [(t.speaker, t.text) for t in injected]
    assert len(seen) == len(set(seen))


def test_goal_reached_stops_session(pack, kb):
    result = drive(pack, kb, "chest_01", PolicyKind.FULL_FRAMEWORK)
    assert result.status == "goal_reached"
    assert result.t_goal is not None
    assert result.traces[-1].status_after == "goal_reached"


def test_post_after_goal_rejected(pack, kb):
    scenario = pack.scenarios["chest_01"]
    session = Session(scenario, kb, PolicyKind.FULL_FRAMEWORK,
                      config=pack.engine_config(), weights=pack.utility_weights())
    for turn in pack.scripts["chest_01"].turns:
        if session.status != "active":
            break
        session.post_turn(turn.speaker, turn.text, turn.gold_events)
    assert session.status == "goal_reached"
    with pytest.raises(SessionEndedError):
        session.post_turn(Role.PATIENT, "one more thing", ())


def test_direct_generation_never_acts(pack, kb):
    for script_id in pack.scripts:
        result = drive(pack, kb, script_id, PolicyKind.DIRECT_GENERATION)
        assert result.actions == []
        assert result.t_goal is None
        assert result.status == "ended"


def test_rule_template_follows_checklist_order(pack, kb):
    result = drive(pack, kb, "chest_01", PolicyKind.RULE_TEMPLATE)
    checklist = pack.scenarios["chest_01"].checklist
    asked = [a.target_slot for a in result.actions]
    assert asked == list(checklist[:len(asked)])
    assert all(a.verb is Verb.ASK for a in result.actions)


def test_chunk_rag_only_asks(pack, kb):
    result = drive(pack, kb, "chest_01", PolicyKind.CHUNK_RAG)
    assert result.actions and all(a.verb is Verb.ASK for a in result.actions)
    # gaps recorded in traces stay informational
    for trace in result.traces:
        for gap in trace.gaps:
            assert gap["kind"] == "information"


def test_full_framework_uses_risk_closing_verbs(pack, kb):
    result = drive(pack, kb, "chest_01", PolicyKind.FULL_FRAMEWORK)
    verbs = {a.verb for a in result.actions}
    assert Verb.RECOMMEND_EXAM in verbs or Verb.VERIFY in verbs


def test_replay_trace_hashes_identical(pack, kb):
    for policy in PolicyKind:
        a = drive(pack, kb, "abdomen_01", policy).trace_hashes()
        b = drive(pack, kb, "abdomen_01", policy).trace_hashes()
        assert a == b


def test_emr_updates_every_turn(pack, kb):
    scenario = pack.scenarios["chest_01"]
    session = Session(scenario, kb, PolicyKind.FULL_FRAMEWORK,
                      config=pack.engine_config(), weights=pack.utility_weights())
    turn = pack.scripts["chest_01"].turns[0]
    before = session.emr
    session.post_turn(turn.speaker, turn.text, turn.gold_events)
    assert session.emr_diff_since(before)


def test_session_ids_unique(pack, kb):
    scenario = pack.scenarios["chest_01"]
    s1 = Session(scenario, kb)
    s2 = Session(scenario, kb)
    assert s1.session_id != s2.session_id


def test_chosen_action_always_among_candidates(pack, kb):
    for policy in (PolicyKind.FULL_FRAMEWORK, PolicyKind.CHUNK_RAG, PolicyKind.RULE_TEMPLATE):
        result = drive(pack, kb, "chest_03", policy)
        for trace in result.traces:
            if trace.chosen_action_id is not None:
                assert trace.chosen_action_id in {c["action_id"] for c in trace.candidates}


def test_trace_utilities_recomputable_bit_exact(pack, kb):
    from inquiryloop.model import UtilityBreakdown
    from inquiryloop.planner import utility_value

    weights = pack.utility_weights()
    result = drive(pack, kb, "chest_01", PolicyKind.FULL_FRAMEWORK)
    checked = 0
    for trace in result.traces:
        for cand in trace.candidates:
            comp = UtilityBreakdown(**cand["utility_components"])
            assert utility_value(comp, weights) == cand["utility"]
            checked += 1
    assert checked > 0


def test_full_framework_reaches_goal_no_later_than_rule_template(pack, kb):
    # measured on the bundled pack, never assumed: targeted risk-closing
    # questioning should not be slower than the fixed checklist
    full_goals, template_goals = [], []
    for script_id in sorted(pack.scripts):
        full = drive(pack, kb, script_id, PolicyKind.FULL_FRAMEWORK)
        template = drive(pack, kb, script_id, PolicyKind.RULE_TEMPLATE)
        if full.t_goal is not None:
            full_goals.append(full.t_goal)
        if template.t_goal is not None:
            template_goals.append(template.t_goal)
    assert full_goals, "full framework never reached a goal"
    mean = lambda xs: sum(xs) / len(xs)
    assert mean(full_goals) <= mean(template_goals)


def test_turn_errors_carry_turn_context(pack, kb):
    from inquiryloop.extraction import make_extractor
    from inquiryloop.session import TurnProcessingError

    scenario = pack.scenarios["chest_01"]
    session = Session(scenario, kb, PolicyKind.FULL_FRAMEWORK,
                      config=pack.engine_config(),
                      extractor=make_extractor("gold", lenient_gold=False))
    with pytest.raises(TurnProcessingError) as err:
        session.post_turn(Role.PATIENT, "free text without annotations", None)
    assert err.value.turn_index == 0
