"""Session runtime: the per-turn control loop and the four runnable policies.

A session owns one consultation: it folds each incoming turn into the case
model, updates the belief, derives gaps, retrieves supportive objects and
paths, scores candidate actions, and commits the winner, emitting one
auditable TurnTrace per processed turn. Turns are strictly sequential within
a session; distinct sessions are independent.

Scripted system-action replies ("responders") let a pack react to committed
actions: when the chosen (verb, slot) matches a responder entry that has not
fired yet, the scripted reply is processed as the immediately following turn.
This is what lets different policies reach the goal at different speeds on
the same script.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Sequence

from .belief import Belief, update_belief
from .emr import EMRecord, project_record, record_diff
from .extraction import DialogueTurn, EventSeed, Extractor, make_extractor, validate_events
from .knowledge import KnowledgeBase, RetrievalConfig, RetrievalResult, chunk_profile, retrieve
from .model import (
    ActionCandidate,
    CurrentState,
    EngineConfig,
    GapKind,
    GapSignal,
    Role,
    StatefulEvent,
    Verb,
    stable_hash,
    to_plain,
)
from .pack import Scenario, ScenarioPack, Script
from .planner import (
    ChosenAction,
    PlanningContext,
    PolicyKind,
    UtilityWeights,
    generate_candidates,
    score_candidates,
    select_action,
)
from .state_engine import apply_events, derive_gaps, goal_met

_session_counter = itertools.count(1)


class SessionEndedError(RuntimeError):
    """Utterance posted to a session that already reached its goal or ended."""


class TurnProcessingError(RuntimeError):
    """A module failure while processing one turn, with turn context attached."""

    def __init__(self, turn_index: int, cause: Exception) -> None:
        super().__init__(f"turn {turn_index}: {cause}")
        self.turn_index = turn_index
        self.cause = cause


class UnknownScenarioError(KeyError):
    pass


@dataclass(frozen=True)
class TurnTrace:
    """Complete audit record of one processed turn."""

    turn_index: int
    speaker: str
    text: str
    injected: bool
    events: tuple[dict[str, Any], ...]
    diagnostics: tuple[str, ...]
    state_hash: str
    belief: dict[str, Any]
    gaps: tuple[dict[str, Any], ...]
    retrieval_top: tuple[dict[str, Any], ...]
    candidates: tuple[dict[str, Any], ...]
    chosen_action_id: str | None
    status_after: str

    def to_dict(self) -> dict[str, Any]:
        return to_plain(self)

    def trace_hash(self) -> str:
        return stable_hash(self.to_dict())


@dataclass
class SessionResult:
    session_id: str
    script_id: str | None
    scenario_id: str
    policy: PolicyKind
    traces: list[TurnTrace]
    actions: list[ChosenAction]
    final_state: CurrentState
    final_record: EMRecord
    t_goal: int | None
    status: str

    def trace_hashes(self) -> list[str]:
        return [t.trace_hash() for t in self.traces]


_EMPTY_RETRIEVAL = RetrievalResult(ranked=(), paths={}, all_paths=())


class Session:
    """One live consultation driven turn by turn."""

    def __init__(
        self,
        scenario: Scenario,
        kb: KnowledgeBase,
        policy: PolicyKind = PolicyKind.FULL_FRAMEWORK,
        config: EngineConfig | None = None,
        weights: UtilityWeights | None = None,
        retrieval_config: RetrievalConfig | None = None,
        extraction_mode: str = "gold",
        rules: Sequence = (),
        session_id: str | None = None,
        extractor: Extractor | None = None,
    ) -> None:
        self.session_id = session_id or f"s{next(_session_counter):06d}"
        self.scenario = scenario
        self.kb = kb
        self.policy = policy
        self.config = config or EngineConfig()
        self.weights = weights or UtilityWeights()
        self.extractor = extractor or make_extractor(extraction_mode, rules, self.config)
        base_rc = retrieval_config or kb.config
        if policy is PolicyKind.CHUNK_RAG:
            base_rc = chunk_profile(base_rc)
            self.weights = (weights or UtilityWeights()).ig_only()
        self.retrieval_config = base_rc

        self.cur = CurrentState.empty()
        self.belief = Belief.from_hypotheses(scenario.hypotheses) if scenario.hypotheses else Belief(probs={"_": 1.0})
        self.traces: list[TurnTrace] = []
        self.actions: list[ChosenAction] = []
        self.status = "active"
        self.t_goal: int | None = None
        self.next_turn_index = 0
        self.emr: EMRecord = project_record(
            self.cur, scenario.goal, scenario.schema, {}, self.config
        )
        self.event_index: dict[str, StatefulEvent] = {}
        self.last_paths: tuple = ()
        self._responder_fired: set[tuple[str, str]] = set()
        self._checklist_pos = 0

    # -- turn processing ----------------------------------------------------

    def post_turn(
        self,
        speaker: Role,
        text: str,
        gold_events: Sequence[EventSeed] | None = None,
    ) -> list[TurnTrace]:
        """Process one utterance (plus any responder reply it triggers).

        Returns the traces appended by this call, scripted turn first.
        """
        if self.status != "active":
            raise SessionEndedError(
                f"session {self.session_id} is {self.status}; no further turns accepted"
            )
        turn = DialogueTurn(
            turn_index=self.next_turn_index,
            speaker=speaker,
            text=text,
            gold_events=tuple(gold_events) if gold_events is not None else None,
        )
        return self._process(turn, injected=False)

    def _process(self, turn: DialogueTurn, injected: bool) -> list[TurnTrace]:
        self.next_turn_index = turn.turn_index + 1
        try:
            trace = self._run_turn(turn, injected)
        except Exception as exc:
            raise TurnProcessingError(turn.turn_index, exc) from exc
        self.traces.append(trace)
        produced = [trace]

        if self.status == "active" and trace.chosen_action_id is not None:
            chosen = next(
                c for c in trace.candidates if c["action_id"] == trace.chosen_action_id
            )
            key = (chosen["verb"], chosen["target_slot"] or "")
            reply = self.scenario.responder.get(key)
            if reply is not None and key not in self._responder_fired:
                self._responder_fired.add(key)
                reply_turn = DialogueTurn(
                    turn_index=self.next_turn_index,
                    speaker=reply.speaker,
                    text=reply.text,
                    gold_events=reply.events,
                )
                produced.extend(self._process(reply_turn, injected=True))
        return produced

    def _run_turn(self, turn: DialogueTurn, injected: bool) -> TurnTrace:
        extracted, diagnostics = validate_events(self.extractor(turn), turn)
        for ev in extracted:
            self.event_index[ev.trace_id] = ev

        self.cur = apply_events(self.cur, extracted, turn.turn_index, self.config)

        if self.policy in (PolicyKind.FULL_FRAMEWORK, PolicyKind.CHUNK_RAG, PolicyKind.DIRECT_GENERATION):
            self.belief = update_belief(
                self.belief, extracted, self.scenario.likelihood, turn.turn_index, self.config
            )

        gaps: list[GapSignal] = []
        retrieval = _EMPTY_RETRIEVAL
        candidates: list[ActionCandidate] = []
        chosen_id: str | None = None

        interactive = self.policy is not PolicyKind.DIRECT_GENERATION
        reached = goal_met(self.cur, self.scenario.goal, self.config)
        # Injected turns are replies to the action just committed; the next
        # proposal waits for the next scripted utterance. This also bounds
        # responder chains to one reply per posted turn.
        proposing = interactive and not injected and not reached

        if proposing:
            if self.policy in (PolicyKind.FULL_FRAMEWORK, PolicyKind.CHUNK_RAG):
                gaps = derive_gaps(
                    self.cur, self.scenario.goal, self.belief, self.last_paths, self.config
                )
                if self.policy is PolicyKind.CHUNK_RAG:
                    gaps = [g for g in gaps if g.kind is GapKind.INFORMATION]
                retrieval = retrieve(
                    self.cur,
                    self.scenario.goal,
                    self.belief,
                    self.kb,
                    self.config,
                    self.retrieval_config,
                )
                self.last_paths = retrieval.all_paths
                candidates = generate_candidates(
                    self.cur, gaps, retrieval, self.actions, self.scenario.goal, self.kb, self.config
                )
                ctx = PlanningContext(
                    cur=self.cur,
                    goal=self.scenario.goal,
                    belief=self.belief,
                    gaps=gaps,
                    retrieval=retrieval,
                    outcome_model=self.scenario.outcomes,
                    history=self.actions,
                    kb=self.kb,
                    config=self.config,
                )
                candidates = score_candidates(candidates, ctx, self.weights)
            elif self.policy is PolicyKind.RULE_TEMPLATE:
                candidates = self._checklist_candidate(turn.turn_index)

            if candidates:
                chosen = select_action(candidates)
                chosen_id = chosen.action_id
                self.actions.append(
                    ChosenAction(
                        turn_index=turn.turn_index,
                        action_id=chosen.action_id,
                        verb=chosen.verb,
                        target_slot=chosen.target_slot,
                        satisfied_at_proposal=(
                            chosen.target_slot is not None
                            and self.cur.weight_of(chosen.target_slot) >= self.config.w_min
                        ),
                    )
                )
            else:
                self.status = "ended"

        if interactive and reached and self.status == "active":
            self.status = "goal_reached"
            if self.t_goal is None:
                self.t_goal = turn.turn_index

        self.emr = project_record(
            self.cur, self.scenario.goal, self.scenario.schema, self.event_index, self.config
        )

        return TurnTrace(
            turn_index=turn.turn_index,
            speaker=turn.speaker.value,
            text=turn.text,
            injected=injected,
            events=tuple(to_plain(e) for e in extracted),
            diagnostics=tuple(diagnostics),
            state_hash=stable_hash(self.cur),
            belief=self.belief.to_dict(),
            gaps=tuple(to_plain(g) for g in gaps),
            retrieval_top=tuple(
                {"object_id": r.object_id, "fused_score": r.fused_score}
                for r in retrieval.ranked[: self.config.trace_top_k]
            ),
            candidates=tuple(to_plain(c) for c in candidates),
            chosen_action_id=chosen_id,
            status_after=self.status,
        )

    def _checklist_candidate(self, turn_index: int) -> list[ActionCandidate]:
        checklist = self.scenario.checklist
        if self._checklist_pos >= len(checklist):
            return []
        slot = checklist[self._checklist_pos]
        self._checklist_pos += 1
        return [
            ActionCandidate(
                action_id=f"a{turn_index}0",
                verb=Verb.ASK,
                target_slot=slot,
                prompt_text=f"Could you tell me about {slot.replace('_', ' ')}?",
            )
        ]

    # -- snapshots ----------------------------------------------------------

    def emr_diff_since(self, previous: EMRecord | None) -> list[dict[str, Any]]:
        return record_diff(previous, self.emr)

    def result(self, script_id: str | None = None) -> SessionResult:
        return SessionResult(
            session_id=self.session_id,
            script_id=script_id,
            scenario_id=self.scenario.scenario_id,
            policy=self.policy,
            traces=list(self.traces),
            actions=list(self.actions),
            final_state=self.cur,
            final_record=self.emr,
            t_goal=self.t_goal,
            status=self.status,
        )


def run_policy(
    script: Script,
    pack: ScenarioPack,
    kb: KnowledgeBase,
    kind: PolicyKind,
    config: EngineConfig | None = None,
    weights: UtilityWeights | None = None,
) -> SessionResult:
    """Replay one script under one policy. Turns stop early once the session
    leaves the active state (goal reached or nothing left to do)."""
    scenario = pack.scenarios.get(script.scenario_id)
    if scenario is None:
        raise UnknownScenarioError(script.scenario_id)
    session = Session(
        scenario=scenario,
        kb=kb,
        policy=kind,
        config=config or pack.engine_config(),
        weights=weights or pack.utility_weights(),
        extraction_mode=pack.extraction_mode(),
        rules=pack.rules,
    )
    for turn in script.turns:
        if session.status != "active":
            break
        session.post_turn(turn.speaker, turn.text, turn.gold_events)
    if session.status == "active":
        session.status = "ended"
    return session.result(script_id=script.script_id)
