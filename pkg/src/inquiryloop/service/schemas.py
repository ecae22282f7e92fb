"""Request/response bodies for the session service. All payloads carry a
version field ``v`` so clients can pin the contract."""
from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field

API_VERSION = 1


class ErrorBody(BaseModel):
    v: int = API_VERSION
    code: str
    message: str


class CreateSessionRequest(BaseModel):
    v: int = API_VERSION
    scenario_id: str
    policy: str = "full_framework"


class SessionCreated(BaseModel):
    v: int = API_VERSION
    session_id: str
    scenario_id: str
    policy: str
    status: str


class EventSeedBody(BaseModel):
    field_id: str
    value: str
    state: str
    temporality: str
    char_start: int
    char_end: int
    role: Optional[str] = None
    confidence: Optional[float] = None


class UtteranceRequest(BaseModel):
    v: int = API_VERSION
    speaker: str
    text: str
    events: Optional[list[EventSeedBody]] = None


class ActionBody(BaseModel):
    action_id: str
    verb: str
    target_slot: Optional[str]
    prompt_text: str
    utility: float
    utility_components: dict[str, float]


class TurnSummary(BaseModel):
    turn_index: int
    injected: bool
    events: list[dict[str, Any]]
    gaps: list[dict[str, Any]]
    action: Optional[ActionBody]
    trace_hash: str


class UtteranceResponse(BaseModel):
    v: int = API_VERSION
    session_id: str
    status: str
    turns: list[TurnSummary]
    emr_diff: list[dict[str, Any]]
    t_goal: Optional[int] = None


class StateResponse(BaseModel):
    v: int = API_VERSION
    session_id: str
    turn_index: int
    state_hash: str
    entries: dict[str, dict[str, Any]]
    contradictions: list[dict[str, Any]]
    belief: dict[str, Any]
    status: str


class EmrResponse(BaseModel):
    v: int = API_VERSION
    session_id: str
    record: dict[str, Any]


class TraceResponse(BaseModel):
    v: int = API_VERSION
    session_id: str
    traces: list[dict[str, Any]]
    trace_hashes: list[str]


class ScenarioSummary(BaseModel):
    scenario_id: str
    title: str
    sections: list[str]
    mandatory_slots: list[str]
    hypothesis_count: int


class ScenariosResponse(BaseModel):
    v: int = API_VERSION
    pack_id: str
    scenarios: list[ScenarioSummary]
