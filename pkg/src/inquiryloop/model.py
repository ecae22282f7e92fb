"""Shared domain types for the consultation-inquiry engine.

Everything downstream (extraction, state folding, belief updates, retrieval,
planning, record projection, evaluation) depends only on the value types
defined here. All types are plain frozen dataclasses or enums: construct once,
share freely, never mutate.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields as dc_fields
from enum import Enum
from typing import Any, Iterable, Mapping


class UnknownLabelError(ValueError):
    """Raised when parsing a string outside one of the closed label sets."""


class StateLabel(str, Enum):
    """Evidential status of an extracted item. Closed set."""

    OBSERVED_RESULT = "observed_result"
    CONFIRMED = "confirmed"
    VERIFIED = "verified"
    COMPLETED = "completed"
    HISTORICAL_RESULT = "historical_result"
    RECOMMENDED = "recommended"
    PENDING_VERIFICATION = "pending_verification"
    UNCONFIRMED = "unconfirmed"
    NOT_DONE = "not_done"
    NEGATED = "negated"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, raw: str) -> "StateLabel":
        try:
            return cls(raw)
        except ValueError:
            raise UnknownLabelError(f"unknown state label: {raw!r}") from None


class Temporality(str, Enum):
    PRESENT = "present"
    RECENT_PAST = "recent_past"
    PAST = "past"
    FUTURE = "future"

    @classmethod
    def parse(cls, raw: str) -> "Temporality":
        try:
            return cls(raw)
        except ValueError:
            raise UnknownLabelError(f"unknown temporality: {raw!r}") from None


class Role(str, Enum):
    PATIENT = "patient"
    PHYSICIAN = "physician"
    FAMILY = "family"
    REPORT = "report"

    @classmethod
    def parse(cls, raw: str) -> "Role":
        try:
            return cls(raw)
        except ValueError:
            raise UnknownLabelError(f"unknown role: {raw!r}") from None


class GapKind(str, Enum):
    INFORMATION = "information"
    EVIDENCE = "evidence"
    RISK = "risk"
    DIFFERENTIAL = "differential"
    PATH_BLOCKING = "path_blocking"


# Planner consumes gaps most-urgent-first; at equal numeric severity this
# rank breaks the tie (risk ahead of evidence ahead of information, ...).
GAP_KIND_RANK: dict[GapKind, int] = {
    GapKind.RISK: 0,
    GapKind.EVIDENCE: 1,
    GapKind.INFORMATION: 2,
    GapKind.DIFFERENTIAL: 3,
    GapKind.PATH_BLOCKING: 4,
}


class Verb(str, Enum):
    ASK = "ask"
    VERIFY = "verify"
    EXPLAIN = "explain"
    RECOMMEND_EXAM = "recommend_exam"
    RECOMMEND_PLAN = "recommend_plan"

    @classmethod
    def parse(cls, raw: str) -> "Verb":
        try:
            return cls(raw)
        except ValueError:
            raise UnknownLabelError(f"unknown action verb: {raw!r}") from None


# Default control weight per evidential state. The weight encodes how much an
# item in that state counts toward evidence sufficiency; exclusion semantics
# for not_done/negated are handled symbolically in the state engine, so both
# default to 0.0 here and can be overridden via EngineConfig.
_BASE_STATE_WEIGHTS: dict[StateLabel, float] = {
    StateLabel.OBSERVED_RESULT: 1.0,
    StateLabel.CONFIRMED: 1.0,
    StateLabel.VERIFIED: 1.0,
    StateLabel.COMPLETED: 0.7,
    StateLabel.HISTORICAL_RESULT: 0.5,
    StateLabel.RECOMMENDED: 0.2,
    StateLabel.PENDING_VERIFICATION: 0.2,
    StateLabel.UNCONFIRMED: 0.2,
    StateLabel.UNKNOWN: 0.0,
    StateLabel.NOT_DONE: 0.0,
    StateLabel.NEGATED: 0.0,
}


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of the control loop. Defaults are the shipped behaviour."""

    w_min: float = 0.7  # slot counts as satisfied at or above this weight
    differential_delta: float = 0.15  # top-2 belief margin that triggers an explain gap
    w_emr: float = 0.5  # minimum weight for a positive record row
    max_candidates: int = 12
    candidate_pool_k: int = 10  # retrieval ranks eligible to back a risk-closing action
    rule_confidence: float = 0.9
    gold_confidence: float = 1.0
    repeat_window: int = 3  # turns within which a repeated (verb, slot) is penalized
    not_done_weight: float = 0.0
    negated_weight: float = 0.0
    trace_top_k: int = 10  # retrieval ids recorded per turn trace

    def state_weight_overrides(self) -> dict[StateLabel, float]:
        return {
            StateLabel.NOT_DONE: self.not_done_weight,
            StateLabel.NEGATED: self.negated_weight,
        }


def state_weight(state: StateLabel, config: EngineConfig | None = None) -> float:
    """Default control weight of an evidential state; total over StateLabel."""
    if config is not None and state in (StateLabel.NOT_DONE, StateLabel.NEGATED):
        return config.state_weight_overrides()[state]
    return _BASE_STATE_WEIGHTS[state]


@dataclass(frozen=True)
class EvidenceSpan:
    """Character span inside one dialogue turn, with the speaking role."""

    turn_index: int
    char_start: int
    char_end: int
    speaker: Role

    def __post_init__(self) -> None:
        if self.turn_index < 0:
            raise ValueError(f"turn_index must be >= 0, got {self.turn_index}")
        if not (0 <= self.char_start < self.char_end):
            raise ValueError(
                f"invalid span [{self.char_start}, {self.char_end})"
            )


@dataclass(frozen=True)
class StatefulEvent:
    """One extracted evidence item: slot, value, evidential state, provenance."""

    field_id: str
    value: str
    state: StateLabel
    temporality: Temporality
    role: Role
    evidence: EvidenceSpan
    confidence: float
    trace_id: str

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class StateEntry:
    """Winning evidence for one slot plus every trace id ever folded into it."""

    field_id: str
    value: str
    state: StateLabel
    weight: float
    temporality: Temporality
    supporting_trace_ids: tuple[str, ...]
    last_update_turn: int

    def __post_init__(self) -> None:
        if not self.supporting_trace_ids:
            raise ValueError("supporting_trace_ids must be non-empty")


@dataclass(frozen=True)
class Contradiction:
    slot_id: str
    trace_ids: tuple[str, ...]


@dataclass(frozen=True)
class CurrentState:
    """The running case model: one entry per slot plus recorded conflicts."""

    entries: Mapping[str, StateEntry]
    contradictions: tuple[Contradiction, ...]
    turn_index: int

    @classmethod
    def empty(cls) -> "CurrentState":
        return cls(entries={}, contradictions=(), turn_index=-1)

    def weight_of(self, slot_id: str) -> float:
        entry = self.entries.get(slot_id)
        return entry.weight if entry is not None else 0.0

    def all_trace_ids(self) -> set[str]:
        ids: set[str] = set()
        for entry in self.entries.values():
            ids.update(entry.supporting_trace_ids)
        for c in self.contradictions:
            ids.update(c.trace_ids)
        return ids


@dataclass(frozen=True)
class Condition:
    """Conjunctive clause over one CurrentState entry."""

    slot_id: str
    states: tuple[StateLabel, ...] = ()
    value: str | None = None
    min_weight: float | None = None

    def holds(self, cur: CurrentState) -> bool:
        entry = cur.entries.get(self.slot_id)
        if entry is None:
            return False
        if self.states and entry.state not in self.states:
            return False
        if self.value is not None and entry.value != self.value:
            return False
        if self.min_weight is not None and entry.weight < self.min_weight:
            return False
        return True


@dataclass(frozen=True)
class RiskRule:
    """Fires when all antecedent conditions hold; discharged once every
    unresolved slot reaches the threshold weight."""

    rule_id: str
    antecedent: tuple[Condition, ...]
    unresolved_slots: tuple[str, ...]
    severity: float
    threshold: float = 0.7

    def __post_init__(self) -> None:
        if self.severity <= 0:
            raise ValueError(f"risk rule severity must be > 0, got {self.severity}")

    def fired(self, cur: CurrentState) -> bool:
        return all(cond.holds(cur) for cond in self.antecedent)

    def discharged(self, cur: CurrentState) -> bool:
        return all(cur.weight_of(s) >= self.threshold for s in self.unresolved_slots)


@dataclass(frozen=True)
class GoalSlot:
    slot_id: str
    section: str
    mandatory: bool = False
    risk_flag: bool = False


@dataclass(frozen=True)
class GoalState:
    """Target information structure for a scenario."""

    required_slots: tuple[GoalSlot, ...]
    risk_rules: tuple[RiskRule, ...] = ()
    activation: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        known = {s.slot_id for s in self.required_slots}
        for rule in self.risk_rules:
            referenced = {c.slot_id for c in rule.antecedent} | set(rule.unresolved_slots)
            missing = referenced - known
            if missing:
                raise ValueError(
                    f"risk rule {rule.rule_id!r} references unknown slots: {sorted(missing)}"
                )

    def mandatory_slots(self) -> tuple[GoalSlot, ...]:
        return tuple(s for s in self.required_slots if s.mandatory)

    def slot(self, slot_id: str) -> GoalSlot | None:
        for s in self.required_slots:
            if s.slot_id == slot_id:
                return s
        return None

    def is_risk_flagged(self, slot_id: str | None) -> bool:
        if slot_id is None:
            return False
        s = self.slot(slot_id)
        return s.risk_flag if s is not None else False


@dataclass(frozen=True)
class GapSignal:
    """A typed unresolved need derived from state vs goal."""

    kind: GapKind
    slot_id: str | None
    severity: float
    rationale_trace: str
    source: str

    def __post_init__(self) -> None:
        if self.severity < 0:
            raise ValueError(f"severity must be >= 0, got {self.severity}")
        if self.kind is GapKind.RISK and (self.severity <= 0 or not self.source):
            raise ValueError("risk gaps need positive severity and a source rule id")


@dataclass(frozen=True)
class UtilityBreakdown:
    ig: float = 0.0
    rr: float = 0.0
    ps: float = 0.0
    eg: float = 0.0
    rp: float = 0.0
    cl: float = 0.0
    cb: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}


@dataclass(frozen=True)
class ActionCandidate:
    action_id: str
    verb: Verb
    target_slot: str | None
    prompt_text: str
    utility_components: UtilityBreakdown = field(default_factory=UtilityBreakdown)
    utility: float = 0.0


def _encode(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if hasattr(obj, "__dataclass_fields__"):
        return {f.name: _encode(getattr(obj, f.name)) for f in dc_fields(obj)}
    return obj


def to_plain(obj: Any) -> Any:
    """Recursively convert dataclasses/enums/tuples into JSON-ready values."""
    return _encode(obj)


def canonical_json(obj: Any) -> str:
    """Stable, replay-identical JSON encoding (sorted keys, no whitespace)."""
    return json.dumps(to_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def stable_hash(obj: Any) -> str:
    """sha256 over the canonical JSON encoding."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def event_from_dict(raw: Mapping[str, Any]) -> StatefulEvent:
    span = raw["evidence"]
    return StatefulEvent(
        field_id=raw["field_id"],
        value=raw["value"],
        state=StateLabel.parse(raw["state"]),
        temporality=Temporality.parse(raw["temporality"]),
        role=Role.parse(raw["role"]),
        evidence=EvidenceSpan(
            turn_index=int(span["turn_index"]),
            char_start=int(span["char_start"]),
            char_end=int(span["char_end"]),
            speaker=Role.parse(span["speaker"]),
        ),
        confidence=float(raw["confidence"]),
        trace_id=raw["trace_id"],
    )


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; the shared tokenizer for embeddings."""
    out: list[str] = []
    word: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            word.append(ch)
        elif word:
            out.append("".join(word))
            word = []
    if word:
        out.append("".join(word))
    return out


def ordered_unique(items: Iterable[str]) -> tuple[str, ...]:
    seen: set[str] = set()
    out: list[str] = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return tuple(out)
