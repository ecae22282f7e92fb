"""HTTP surface over live sessions.

Sessions live in memory, one lock per session so concurrent posts on the same
session serialize (or 409 when queueing is disabled). The shared knowledge
base is read-only. Optionally every processed turn is appended to a JSONL
file per session for crash-recoverable replay.
"""
from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from ..knowledge import KnowledgeBase
from ..model import Role, UnknownLabelError, stable_hash, to_plain
from ..pack import ScenarioPack
from ..planner import PolicyKind, UnknownPolicyError
from ..session import Session, SessionEndedError, TurnProcessingError
from .schemas import (
    API_VERSION,
    ActionBody,
    CreateSessionRequest,
    EmrResponse,
    ErrorBody,
    ScenarioSummary,
    ScenariosResponse,
    SessionCreated,
    StateResponse,
    TraceResponse,
    TurnSummary,
    UtteranceRequest,
    UtteranceResponse,
)
from ..extraction import EventSeed
from ..model import StateLabel, Temporality


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content=ErrorBody(code=code, message=message).model_dump(),
    )


class SessionRegistry:
    def __init__(self, queue_concurrent_posts: bool = True) -> None:
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self.queue_concurrent_posts = queue_concurrent_posts

    def add(self, session: Session) -> None:
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()

    def get(self, session_id: str) -> tuple[Session, threading.Lock] | None:
        with self._registry_lock:
            session = self._sessions.get(session_id)
            if session is None:
                return None
            return session, self._locks[session_id]


def create_app(
    pack: ScenarioPack,
    kb: KnowledgeBase,
    queue_concurrent_posts: bool = True,
    trace_dir: Optional[str | Path] = None,
) -> FastAPI:
    app = FastAPI(title="inquiryloop", version="0.1.0")
    registry = SessionRegistry(queue_concurrent_posts)
    persist_dir = Path(trace_dir) if trace_dir else None
    if persist_dir:
        persist_dir.mkdir(parents=True, exist_ok=True)

    def persist(session: Session, traces) -> None:
        if persist_dir is None:
            return
        path = persist_dir / f"{session.session_id}.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            for t in traces:
                fh.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")

    @app.get("/scenarios", response_model=ScenariosResponse)
    def list_scenarios():
        return ScenariosResponse(
            pack_id=pack.pack_id,
            scenarios=[
                ScenarioSummary(
                    scenario_id=s.scenario_id,
                    title=s.title,
                    sections=list(s.schema.sections),
                    mandatory_slots=[g.slot_id for g in s.goal.mandatory_slots()],
                    hypothesis_count=len(s.hypotheses),
                )
                for s in (pack.scenarios[k] for k in sorted(pack.scenarios))
            ],
        )

    @app.post("/sessions", response_model=SessionCreated, status_code=201)
    def create_session(req: CreateSessionRequest):
        scenario = pack.scenarios.get(req.scenario_id)
        if scenario is None:
            return _error(404, "unknown_scenario", f"no scenario {req.scenario_id!r}")
        try:
            policy = PolicyKind.parse(req.policy)
        except UnknownPolicyError as exc:
            return _error(422, "unknown_policy", str(exc))
        session = Session(
            scenario=scenario,
            kb=kb,
            policy=policy,
            config=pack.engine_config(),
            weights=pack.utility_weights(),
            extraction_mode=pack.extraction_mode(),
            rules=pack.rules,
        )
        registry.add(session)
        return SessionCreated(
            session_id=session.session_id,
            scenario_id=scenario.scenario_id,
            policy=policy.value,
            status=session.status,
        )

    @app.post("/sessions/{session_id}/utterances", response_model=UtteranceResponse)
    def post_utterance(session_id: str, req: UtteranceRequest):
        found = registry.get(session_id)
        if found is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        session, lock = found
        if not registry.queue_concurrent_posts and lock.locked():
            return _error(409, "turn_in_flight", "another turn is being processed")
        with lock:
            try:
                speaker = Role.parse(req.speaker)
                seeds = None
                if req.events is not None:
                    seeds = [
                        EventSeed(
                            field_id=e.field_id,
                            value=e.value,
                            state=StateLabel.parse(e.state),
                            temporality=Temporality.parse(e.temporality),
                            char_start=e.char_start,
                            char_end=e.char_end,
                            role=Role.parse(e.role) if e.role else None,
                            confidence=e.confidence,
                        )
                        for e in req.events
                    ]
            except UnknownLabelError as exc:
                return _error(422, "invalid_label", str(exc))
            emr_before = session.emr
            try:
                traces = session.post_turn(speaker, req.text, seeds)
            except SessionEndedError as exc:
                return _error(409, "session_ended", str(exc))
            except (TurnProcessingError, ValueError) as exc:
                return _error(422, "invalid_turn", str(exc))
            persist(session, traces)
            summaries = []
            for t in traces:
                action = None
                if t.chosen_action_id is not None:
                    raw = next(
                        c for c in t.candidates if c["action_id"] == t.chosen_action_id
                    )
                    action = ActionBody(
                        action_id=raw["action_id"],
                        verb=raw["verb"],
                        target_slot=raw["target_slot"],
                        prompt_text=raw["prompt_text"],
                        utility=raw["utility"],
                        utility_components=raw["utility_components"],
                    )
                summaries.append(
                    TurnSummary(
                        turn_index=t.turn_index,
                        injected=t.injected,
                        events=list(t.events),
                        gaps=list(t.gaps),
                        action=action,
                        trace_hash=t.trace_hash(),
                    )
                )
            return UtteranceResponse(
                session_id=session.session_id,
                status=session.status,
                turns=summaries,
                emr_diff=session.emr_diff_since(emr_before),
                t_goal=session.t_goal,
            )

    @app.get("/sessions/{session_id}/state", response_model=StateResponse)
    def get_state(session_id: str):
        found = registry.get(session_id)
        if found is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        session, lock = found
        with lock:
            return StateResponse(
                session_id=session.session_id,
                turn_index=session.cur.turn_index,
                state_hash=stable_hash(session.cur),
                entries={k: to_plain(v) for k, v in sorted(session.cur.entries.items())},
                contradictions=[to_plain(c) for c in session.cur.contradictions],
                belief=session.belief.to_dict(),
                status=session.status,
            )

    @app.get("/sessions/{session_id}/emr", response_model=EmrResponse)
    def get_emr(session_id: str):
        found = registry.get(session_id)
        if found is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        session, lock = found
        with lock:
            return EmrResponse(session_id=session.session_id, record=session.emr.to_dict())

    @app.get("/sessions/{session_id}/trace", response_model=TraceResponse)
    def get_trace(session_id: str):
        found = registry.get(session_id)
        if found is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        session, lock = found
        with lock:
            return TraceResponse(
                session_id=session.session_id,
                traces=[t.to_dict() for t in session.traces],
                trace_hashes=[t.trace_hash() for t in session.traces],
            )

    return app
