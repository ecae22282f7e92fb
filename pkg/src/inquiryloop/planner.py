"""Candidate generation and one-step utility scoring.

Candidates come straight from the typed gaps (ask for missing information,
verify pending evidence, recommend a discharging exam or plan for open risk,
explain a tight differential). Each candidate is scored with a seven-part
utility; selection is a plain argmax with a lexicographic tie-break on action
id. No lookahead: the controller stays a tractable local policy.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

from .belief import Belief, MissingOutcomeModelError, OutcomeModel, expected_information_gain
from .knowledge import KnowledgeBase, ObjectKind, RetrievalResult, object_discharges
from .model import (
    ActionCandidate,
    CurrentState,
    EngineConfig,
    GapKind,
    GapSignal,
    GoalState,
    UtilityBreakdown,
    Verb,
)
from .state_engine import gaps_by_urgency

import math


class NoCandidatesError(RuntimeError):
    """Selection requested on an empty candidate set."""


class UnknownPolicyError(ValueError):
    pass


class PolicyKind(str, Enum):
    DIRECT_GENERATION = "direct_generation"
    CHUNK_RAG = "chunk_rag"
    RULE_TEMPLATE = "rule_template"
    FULL_FRAMEWORK = "full_framework"

    @classmethod
    def parse(cls, raw: str) -> "PolicyKind":
        try:
            return cls(raw)
        except ValueError:
            raise UnknownPolicyError(f"unknown policy: {raw!r}") from None


@dataclass(frozen=True)
class UtilityWeights:
    """Non-negative weights for IG, RR, PS, EG, RP, CL, CB."""

    ig: float = 1.0
    rr: float = 1.5
    ps: float = 0.5
    eg: float = 0.3
    rp: float = 1.0
    cl: float = 0.5
    cb: float = 0.4

    def __post_init__(self) -> None:
        for name in ("ig", "rr", "ps", "eg", "rp", "cl", "cb"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"utility weight {name} must be finite and >= 0")

    @classmethod
    def from_dict(cls, raw: Mapping[str, float]) -> "UtilityWeights":
        base = cls()
        return cls(**{k: float(raw.get(k, getattr(base, k))) for k in
                      ("ig", "rr", "ps", "eg", "rp", "cl", "cb")})

    def ig_only(self) -> "UtilityWeights":
        return UtilityWeights(ig=1.0, rr=0.0, ps=0.0, eg=0.0, rp=0.0, cl=0.0, cb=0.0)


@dataclass(frozen=True)
class ChosenAction:
    """History record of one committed action."""

    turn_index: int
    action_id: str
    verb: Verb
    target_slot: str | None
    satisfied_at_proposal: bool  # target already at/above w_min when proposed


@dataclass
class PlanningContext:
    """Everything utility components read; assembled once per turn."""

    cur: CurrentState
    goal: GoalState
    belief: Belief
    gaps: Sequence[GapSignal]
    retrieval: RetrievalResult
    outcome_model: OutcomeModel
    history: Sequence[ChosenAction]
    kb: KnowledgeBase
    config: EngineConfig = field(default_factory=EngineConfig)


_PROMPTS: dict[Verb, str] = {
    Verb.ASK: "Could you tell me about {topic}?",
    Verb.VERIFY: "Let me confirm: what is the current status of {topic}?",
    Verb.EXPLAIN: "Here is how the leading possibilities differ on {topic}.",
    Verb.RECOMMEND_EXAM: "I recommend we complete {topic} now.",
    Verb.RECOMMEND_PLAN: "I suggest we plan for {topic} next.",
}


def _prompt(verb: Verb, slot: str | None) -> str:
    topic = (slot or "the current findings").replace("_", " ")
    return _PROMPTS[verb].format(topic=topic)


def action_key(verb: Verb, slot: str | None) -> str:
    return f"{verb.value}:{slot or '*'}"


def generate_candidates(
    cur: CurrentState,
    gaps: Sequence[GapSignal],
    retrieval: RetrievalResult,
    history: Sequence[ChosenAction],
    goal: GoalState,
    kb: KnowledgeBase,
    config: EngineConfig | None = None,
) -> list[ActionCandidate]:
    """One action per gap, most urgent gaps first, capped at max_candidates.

    Risk gaps only yield a recommendation when a discharging exam or plan
    object sits inside the retrieval candidate pool; the object's own slot
    becomes the action target. Duplicate (verb, slot) pairs collapse onto the
    first (most urgent) occurrence.
    """
    config = config or EngineConfig()
    pool = [kb.objects[oid] for oid in retrieval.top_ids(config.candidate_pool_k)]
    turn = cur.turn_index
    out: list[ActionCandidate] = []
    seen: set[tuple[Verb, str | None]] = set()

    def push(verb: Verb, slot: str | None) -> None:
        if len(out) >= config.max_candidates or (verb, slot) in seen:
            return
        seen.add((verb, slot))
        out.append(
            ActionCandidate(
                action_id=f"a{turn}{len(out)}",
                verb=verb,
                target_slot=slot,
                prompt_text=_prompt(verb, slot),
            )
        )

    rules = {r.rule_id: r for r in goal.risk_rules}
    for gap in gaps_by_urgency(gaps):
        if gap.kind is GapKind.INFORMATION:
            push(Verb.ASK, gap.slot_id)
        elif gap.kind is GapKind.EVIDENCE:
            push(Verb.VERIFY, gap.slot_id)
        elif gap.kind is GapKind.RISK:
            rule = rules.get(gap.source)
            if rule is None:
                continue
            discharging = [o for o in pool if object_discharges(o, rule)]
            if not discharging:
                continue
            # prefer a discharger whose own slot is still below the rule
            # threshold; recommending an already-satisfied exam helps nothing
            open_slots = {
                s for s in rule.unresolved_slots
                if cur.weight_of(s) < rule.threshold
            }
            live = [o for o in discharging if o.primary_slot() in open_slots]
            obj = live[0] if live else discharging[0]
            verb = (
                Verb.RECOMMEND_EXAM
                if obj.kind is ObjectKind.EXAM_UNIT
                else Verb.RECOMMEND_PLAN
            )
            push(verb, obj.primary_slot() or gap.slot_id)
        elif gap.kind is GapKind.DIFFERENTIAL:
            push(Verb.EXPLAIN, None)
        # path_blocking gaps steer the PS component instead of spawning actions
    return out


def utility_components(a: ActionCandidate, ctx: PlanningContext) -> UtilityBreakdown:
    cfg = ctx.config
    n = len(ctx.belief.probs)
    ig = 0.0
    key = action_key(a.verb, a.target_slot)
    if n > 1 and ctx.outcome_model.has(key):
        ig = expected_information_gain(ctx.belief, key, ctx.outcome_model) / math.log(n)

    risk_gaps = [g for g in ctx.gaps if g.kind is GapKind.RISK]
    total_risk = sum(g.severity for g in risk_gaps)
    rr = 0.0
    if total_risk > 0 and a.target_slot is not None:
        rules = {r.rule_id: r for r in ctx.goal.risk_rules}
        closed = sum(
            g.severity
            for g in risk_gaps
            if g.source in rules and a.target_slot in rules[g.source].unresolved_slots
        )
        rr = closed / total_risk

    ps = 0.0
    for path in ctx.retrieval.all_paths:
        if path.precondition_slot is not None and path.precondition_slot == a.target_slot:
            ps = max(ps, path.score)

    eg = 1.0 if a.verb is Verb.EXPLAIN and any(
        g.kind is GapKind.DIFFERENTIAL for g in ctx.gaps
    ) else 0.0

    rp = 0.0
    if a.target_slot is not None and ctx.cur.weight_of(a.target_slot) >= cfg.w_min:
        rp = 1.0
    else:
        turn = ctx.cur.turn_index
        for past in ctx.history:
            if (
                past.verb is a.verb
                and past.target_slot == a.target_slot
                and 0 < turn - past.turn_index <= cfg.repeat_window
            ):
                rp = 1.0
                break

    cl = 0.0
    if a.verb is Verb.ASK:
        run = 0
        for past in reversed(ctx.history):
            if past.verb is Verb.ASK:
                run += 1
            else:
                break
        cl = min(run / 5.0, 1.0)

    cb = (
        1.0
        if a.verb in (Verb.VERIFY, Verb.RECOMMEND_EXAM)
        and ctx.goal.is_risk_flagged(a.target_slot)
        else 0.0
    )

    return UtilityBreakdown(ig=ig, rr=rr, ps=ps, eg=eg, rp=rp, cl=cl, cb=cb)


def utility_value(components: UtilityBreakdown, w: UtilityWeights) -> float:
    c = components
    return (
        w.ig * c.ig
        + w.rr * c.rr
        + w.ps * c.ps
        + w.eg * c.eg
        - w.rp * c.rp
        - w.cl * c.cl
        + w.cb * c.cb
    )


def utility(
    a: ActionCandidate, ctx: PlanningContext, weights: UtilityWeights
) -> ActionCandidate:
    """Score one candidate; returns a copy carrying breakdown and total."""
    components = utility_components(a, ctx)
    return replace(
        a, utility_components=components, utility=utility_value(components, weights)
    )


def score_candidates(
    candidates: Sequence[ActionCandidate], ctx: PlanningContext, weights: UtilityWeights
) -> list[ActionCandidate]:
    return [utility(a, ctx, weights) for a in candidates]


def select_action(candidates: Sequence[ActionCandidate]) -> ActionCandidate:
    """Highest utility wins; exact ties fall to the smaller action id."""
    if not candidates:
        raise NoCandidatesError("no candidates to select from")
    return min(candidates, key=lambda a: (-a.utility, a.action_id))
