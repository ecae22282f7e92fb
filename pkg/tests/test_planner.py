from __future__ import annotations

import random

import pytest

from inquiryloop.belief import Belief, OutcomeModel
from inquiryloop.knowledge import (
    KnowledgeBase,
    KnowledgeEdge,
    KnowledgeObject,
    ObjectKind,
    ReasoningPath,
    RetrievalConfig,
    RetrievalResult,
    RankedObject,
)
from inquiryloop.model import (
    ActionCandidate,
    Condition,
    CurrentState,
    EngineConfig,
    GapKind,
    GapSignal,
    GoalSlot,
    GoalState,
    RiskRule,
    StateEntry,
    StateLabel,
    Temporality,
    UtilityBreakdown,
    Verb,
)
from inquiryloop.planner import (
    ChosenAction,
    NoCandidatesError,
    PlanningContext,
    PolicyKind,
    UnknownPolicyError,
    UtilityWeights,
    generate_candidates,
    score_candidates,
    select_action,
    utility_value,
)

CFG = EngineConfig()


def entry(slot, value, state, weight, turn=0):
    return StateEntry(slot, value, state, weight, Temporality.PRESENT, (f"{slot}@0",), turn)


def make_state(*entries, turn=0):
    return CurrentState(entries={e.field_id: e for e in entries},
                        contradictions=(), turn_index=turn)


GOAL = GoalState(
    required_slots=(
        GoalSlot("symptom_duration", "HPI", mandatory=True),
        GoalSlot("chest_pain", "HPI", mandatory=True),
        GoalSlot("pending_lab", "Plan"),
        GoalSlot("ecg", "Plan", mandatory=True, risk_flag=True),
    ),
    risk_rules=(
        RiskRule("acute_workup", (Condition("chest_pain", min_weight=1.0),),
                 ("ecg",), severity=2.0),
    ),
)


def tiny_kb():
    objects = [
        KnowledgeObject("exam.ecg", ObjectKind.EXAM_UNIT,
                        {"slot": "ecg", "discharges": ["acute_workup"],
                         "precondition_slot": "ecg"}, "tracing study"),
        KnowledgeObject("case.plan", ObjectKind.CASE_SUMMARY,
                        {"discharges": ["acute_workup"]}, "plan summary"),
        KnowledgeObject("sym.pain", ObjectKind.SYMPTOM_UNIT,
                        {"slot": "chest_pain"}, "pain unit"),
    ]
    return KnowledgeBase(objects, [], RetrievalConfig(dim=16))


def retrieval_with(*ids, paths=()):
    ranked = tuple(
        RankedObject(object_id=oid, vector_score=0.5, object_score=0.5,
                     path_score=0.0, fused_score=1.0 - 0.01 * i)
        for i, oid in enumerate(ids)
    )
    return RetrievalResult(ranked=ranked, paths={}, all_paths=tuple(paths))


def ctx_for(cur, gaps, retrieval, history=(), om=None):
    return PlanningContext(
        cur=cur, goal=GOAL, belief=Belief(probs={"h1": 0.5, "h2": 0.5}),
        gaps=gaps, retrieval=retrieval,
        outcome_model=om or OutcomeModel(per_action={}),
        history=list(history), kb=tiny_kb(), config=CFG,
    )


def gap(kind, slot, severity, source="src"):
    return GapSignal(kind=kind, slot_id=slot, severity=severity,
                     rationale_trace="", source=source)


def test_no_gaps_no_candidates():
    cur = make_state()
    out = generate_candidates(cur, [], retrieval_with(), [], GOAL, tiny_kb(), CFG)
    assert out == []


def test_information_gap_yields_single_ask():
    cur = make_state()
    gaps = [gap(GapKind.INFORMATION, "symptom_duration", 1.0, "goal:symptom_duration")]
    out = generate_candidates(cur, gaps, retrieval_with(), [], GOAL, tiny_kb(), CFG)
    assert len(out) == 1
    assert out[0].verb is Verb.ASK and out[0].target_slot == "symptom_duration"
    assert out[0].action_id == "a00"


def test_risk_gap_needs_discharging_object_in_pool():
    cur = make_state(entry("chest_pain", "present", StateLabel.OBSERVED_RESULT, 1.0))
    gaps = [gap(GapKind.RISK, "ecg", 2.0, "acute_workup")]
    with_exam = generate_candidates(cur, gaps, retrieval_with("exam.ecg"), [], GOAL, tiny_kb(), CFG)
    assert [(c.verb, c.target_slot) for c in with_exam] == [(Verb.RECOMMEND_EXAM, "ecg")]
    without = generate_candidates(cur, gaps, retrieval_with("sym.pain"), [], GOAL, tiny_kb(), CFG)
    assert without == []


def test_risk_gap_non_exam_discharger_recommends_plan():
    cur = make_state(entry("chest_pain", "present", StateLabel.OBSERVED_RESULT, 1.0))
    gaps = [gap(GapKind.RISK, "ecg", 2.0, "acute_workup")]
    out = generate_candidates(cur, gaps, retrieval_with("case.plan"), [], GOAL, tiny_kb(), CFG)
    assert [(c.verb, c.target_slot) for c in out] == [(Verb.RECOMMEND_PLAN, "ecg")]


def test_candidate_cap():
    cur = make_state()
    gaps = [gap(GapKind.INFORMATION, f"slot_{i:02d}", 1.0 - i * 0.01, f"g{i}")
            for i in range(30)]
    out = generate_candidates(cur, gaps, retrieval_with(), [], GOAL, tiny_kb(), CFG)
    assert len(out) == CFG.max_candidates


def test_utility_equation_substitution():
    # all weights 1, components (IG .5, RR .2, PS .1, EG 0, RP .3, CL .1, CB .05)
    w = UtilityWeights(ig=1, rr=1, ps=1, eg=1, rp=1, cl=1, cb=1)
    comp = UtilityBreakdown(ig=0.5, rr=0.2, ps=0.1, eg=0.0, rp=0.3, cl=0.1, cb=0.05)
    assert utility_value(comp, w) == pytest.approx(0.45, abs=1e-12)


def test_utility_zero_components():
    w = UtilityWeights()
    assert utility_value(UtilityBreakdown(), w) == 0.0


def test_rp_floor_for_satisfied_slot():
    cur = make_state(entry("ecg", "done", StateLabel.OBSERVED_RESULT, 1.0), turn=4)
    cand = ActionCandidate("a40", Verb.ASK, "ecg", "p")
    scored = score_candidates([cand], ctx_for(cur, [], retrieval_with()), UtilityWeights())
    assert scored[0].utility_components.rp == 1.0


def test_rp_for_recent_repeat():
    cur = make_state(turn=3)
    history = [ChosenAction(1, "a10", Verb.ASK, "symptom_duration", False)]
    cand = ActionCandidate("a30", Verb.ASK, "symptom_duration", "p")
    scored = score_candidates([cand], ctx_for(cur, [], retrieval_with(), history),
                              UtilityWeights())
    assert scored[0].utility_components.rp == 1.0
    # outside the window the penalty clears
    old = [ChosenAction(0, "a00", Verb.ASK, "symptom_duration", False)]
    cur2 = make_state(turn=5)
    scored2 = score_candidates([cand], ctx_for(cur2, [], retrieval_with(), old),
                               UtilityWeights())
    assert scored2[0].utility_components.rp == 0.0


def test_cl_counts_consecutive_ask_run():
    cur = make_state(turn=4)
    history = [ChosenAction(i, f"a{i}0", Verb.ASK, f"s{i}", False) for i in range(3)]
    ask = ActionCandidate("a40", Verb.ASK, "symptom_duration", "p")
    verify = ActionCandidate("a41", Verb.VERIFY, "pending_lab", "p")
    scored = score_candidates([ask, verify], ctx_for(cur, [], retrieval_with(), history),
                              UtilityWeights())
    assert scored[0].utility_components.cl == pytest.approx(0.6)
    assert scored[1].utility_components.cl == 0.0


def test_cb_for_risk_flagged_confirmation():
    cur = make_state()
    verify_risky = ActionCandidate("a00", Verb.VERIFY, "ecg", "p")
    verify_plain = ActionCandidate("a01", Verb.VERIFY, "pending_lab", "p")
    ask_risky = ActionCandidate("a02", Verb.ASK, "ecg", "p")
    scored = score_candidates([verify_risky, verify_plain, ask_risky],
                              ctx_for(cur, [], retrieval_with()), UtilityWeights())
    assert scored[0].utility_components.cb == 1.0
    assert scored[1].utility_components.cb == 0.0
    assert scored[2].utility_components.cb == 0.0


def test_eg_for_explain_on_differential():
    cur = make_state()
    gaps = [gap(GapKind.DIFFERENTIAL, None, 0.1, "belief:top2")]
    cand = ActionCandidate("a00", Verb.EXPLAIN, None, "p")
    scored = score_candidates([cand], ctx_for(cur, gaps, retrieval_with()),
                              UtilityWeights())
    assert scored[0].utility_components.eg == 1.0


def test_ps_from_blocked_path():
    edge = KnowledgeEdge("exam.ecg", "case.plan", "r", 1.0)
    path = ReasoningPath(nodes=("exam.ecg", "case.plan"), edges=(edge,),
                         cost=1.25, score=0.8, precondition_slot="ecg")
    cur = make_state()
    cand = ActionCandidate("a00", Verb.RECOMMEND_EXAM, "ecg", "p")
    scored = score_candidates([cand], ctx_for(cur, [], retrieval_with(paths=[path])),
                              UtilityWeights())
    assert scored[0].utility_components.ps == pytest.approx(0.8)


def test_rr_shares_outstanding_severity():
    cur = make_state(entry("chest_pain", "present", StateLabel.OBSERVED_RESULT, 1.0))
    gaps = [gap(GapKind.RISK, "ecg", 2.0, "acute_workup")]
    closing = ActionCandidate("a00", Verb.RECOMMEND_EXAM, "ecg", "p")
    unrelated = ActionCandidate("a01", Verb.ASK, "symptom_duration", "p")
    scored = score_candidates([closing, unrelated], ctx_for(cur, gaps, retrieval_with()),
                              UtilityWeights())
    assert scored[0].utility_components.rr == 1.0
    assert scored[1].utility_components.rr == 0.0


def test_select_action_basics():
    a = ActionCandidate("a00", Verb.ASK, "x", "p", utility=0.45)
    b = ActionCandidate("a01", Verb.ASK, "y", "p", utility=0.71)
    assert select_action([a, b]) is b
    assert select_action([a]) is a
    tie = ActionCandidate("a01", Verb.ASK, "y", "p", utility=0.45)
    assert select_action([tie, a]).action_id == "a00"
    with pytest.raises(NoCandidatesError):
        select_action([])


def test_argmax_invariant_under_positive_scaling():
    rng = random.Random(31)
    for _ in range(300):
        n = rng.randint(2, 8)
        cands = []
        comps = []
        for i in range(n):
            comp = UtilityBreakdown(*(round(rng.uniform(0, 1), 6) for _ in range(7)))
            comps.append(comp)
            cands.append(ActionCandidate(f"a0{i}", Verb.ASK, f"s{i}", "p"))
        base_w = UtilityWeights(*(round(rng.uniform(0.01, 2.0), 6) for _ in range(7)))
        scale = rng.uniform(0.1, 10.0)
        scaled_w = UtilityWeights(*(getattr(base_w, f) * scale for f in
                                    ("ig", "rr", "ps", "eg", "rp", "cl", "cb")))
        pick = lambda w: select_action([
            ActionCandidate(c.action_id, c.verb, c.target_slot, c.prompt_text,
                            comp, utility_value(comp, w))
            for c, comp in zip(cands, comps)
        ]).action_id
        assert pick(base_w) == pick(scaled_w)


def test_policy_kind_parsing():
    assert PolicyKind.parse("full_framework") is PolicyKind.FULL_FRAMEWORK
    with pytest.raises(UnknownPolicyError):
        PolicyKind.parse("magic")


def test_utility_weights_validate():
    with pytest.raises(ValueError):
        UtilityWeights(ig=-1.0)
