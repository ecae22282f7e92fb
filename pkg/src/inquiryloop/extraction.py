"""Turning dialogue turns into stateful events.

Two deterministic modes: gold mode replays annotations shipped with a script,
rule mode fires literal-phrase pattern rules. Both produce replay-stable trace
ids of the form ``t{turn_index}e{ordinal}``. The extractor surface is a plain
function so a learned extractor can replace rule mode later without touching
the rest of the loop.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Protocol, Sequence

from .model import (
    EngineConfig,
    EvidenceSpan,
    Role,
    StateLabel,
    StatefulEvent,
    Temporality,
)


class Extractor(Protocol):
    """Anything that maps a dialogue turn to its stateful events. The rule
    and gold extractors below implement it; a learned extractor can slot in
    without touching downstream modules."""

    def __call__(self, turn: "DialogueTurn") -> list[StatefulEvent]: ...


class MissingGoldError(ValueError):
    """Gold-mode extraction on a turn that carries no annotations."""


@dataclass(frozen=True)
class EventSeed:
    """A gold annotation: an event minus its runtime trace id."""

    field_id: str
    value: str
    state: StateLabel
    temporality: Temporality
    char_start: int
    char_end: int
    role: Role | None = None  # defaults to the turn's speaker
    confidence: float | None = None

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "EventSeed":
        return cls(
            field_id=raw["field_id"],
            value=raw["value"],
            state=StateLabel.parse(raw["state"]),
            temporality=Temporality.parse(raw["temporality"]),
            char_start=int(raw["char_start"]),
            char_end=int(raw["char_end"]),
            role=Role.parse(raw["role"]) if raw.get("role") else None,
            confidence=float(raw["confidence"]) if raw.get("confidence") is not None else None,
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "field_id": self.field_id,
            "value": self.value,
            "state": self.state.value,
            "temporality": self.temporality.value,
            "char_start": self.char_start,
            "char_end": self.char_end,
        }
        if self.role is not None:
            out["role"] = self.role.value
        if self.confidence is not None:
            out["confidence"] = self.confidence
        return out


@dataclass(frozen=True)
class DialogueTurn:
    turn_index: int
    speaker: Role
    text: str
    gold_events: tuple[EventSeed, ...] | None = None

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "DialogueTurn":
        gold = raw.get("events")
        return cls(
            turn_index=int(raw["turn_index"]),
            speaker=Role.parse(raw["speaker"]),
            text=raw["text"],
            gold_events=tuple(EventSeed.from_dict(e) for e in gold) if gold is not None else None,
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "turn_index": self.turn_index,
            "speaker": self.speaker.value,
            "text": self.text,
        }
        if self.gold_events is not None:
            out["events"] = [e.to_dict() for e in self.gold_events]
        return out


@dataclass(frozen=True)
class ExtractionRule:
    """Case-insensitive literal trigger -> event template. No regex."""

    rule_id: str
    trigger: str
    field_id: str
    value: str
    state: StateLabel
    temporality: Temporality
    priority: int = 0
    confidence: float | None = None

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ExtractionRule":
        return cls(
            rule_id=raw["rule_id"],
            trigger=raw["trigger"],
            field_id=raw["field_id"],
            value=raw["value"],
            state=StateLabel.parse(raw["state"]),
            temporality=Temporality.parse(raw["temporality"]),
            priority=int(raw.get("priority", 0)),
            confidence=float(raw["confidence"]) if raw.get("confidence") is not None else None,
        )


def trace_id_for(turn_index: int, ordinal: int) -> str:
    return f"t{turn_index}e{ordinal}"


def extract_events(
    turn: DialogueTurn,
    mode: str,
    rules: Sequence[ExtractionRule] = (),
    config: EngineConfig | None = None,
) -> list[StatefulEvent]:
    """Produce the turn's event set in ``gold`` or ``rule`` mode.

    Gold mode passes annotations through verbatim, assigning trace ids in
    annotation order. Rule mode emits one event per matching rule, ordered by
    (priority, rule_id); overlapping matches all emit (the state engine folds
    duplicates later).
    """
    config = config or EngineConfig()
    if mode == "gold":
        if turn.gold_events is None:
            raise MissingGoldError(
                f"turn {turn.turn_index} has no gold annotations"
            )
        events = []
        for ordinal, seed in enumerate(turn.gold_events):
            events.append(
                StatefulEvent(
                    field_id=seed.field_id,
                    value=seed.value,
                    state=seed.state,
                    temporality=seed.temporality,
                    role=seed.role or turn.speaker,
                    evidence=EvidenceSpan(
                        turn_index=turn.turn_index,
                        char_start=seed.char_start,
                        char_end=seed.char_end,
                        speaker=turn.speaker,
                    ),
                    confidence=seed.confidence if seed.confidence is not None else config.gold_confidence,
                    trace_id=trace_id_for(turn.turn_index, ordinal),
                )
            )
        return events
    if mode == "rule":
        lowered = turn.text.lower()
        hits = [r for r in rules if r.trigger.lower() in lowered]
        hits.sort(key=lambda r: (r.priority, r.rule_id))
        events = []
        for ordinal, rule in enumerate(hits):
            start = lowered.index(rule.trigger.lower())
            events.append(
                StatefulEvent(
                    field_id=rule.field_id,
                    value=rule.value,
                    state=rule.state,
                    temporality=rule.temporality,
                    role=turn.speaker,
                    evidence=EvidenceSpan(
                        turn_index=turn.turn_index,
                        char_start=start,
                        char_end=start + len(rule.trigger),
                        speaker=turn.speaker,
                    ),
                    confidence=rule.confidence if rule.confidence is not None else config.rule_confidence,
                    trace_id=trace_id_for(turn.turn_index, ordinal),
                )
            )
        return events
    raise ValueError(f"unknown extraction mode: {mode!r}")


def make_extractor(
    mode: str,
    rules: Sequence[ExtractionRule] = (),
    config: EngineConfig | None = None,
    lenient_gold: bool = True,
) -> Extractor:
    """Bind mode/rules/config into an Extractor. With ``lenient_gold`` a
    gold-mode turn without annotations extracts nothing instead of raising,
    which is what a live session wants for free-text utterances."""

    def extract(turn: DialogueTurn) -> list[StatefulEvent]:
        if mode == "gold" and lenient_gold and turn.gold_events is None:
            return []
        return extract_events(turn, mode, rules, config)

    return extract


def validate_events(
    events: Sequence[StatefulEvent], turn: DialogueTurn
) -> tuple[list[StatefulEvent], list[str]]:
    """Filter events whose span falls outside the turn or whose confidence is
    out of range. Returns (kept, diagnostics); never raises."""
    kept: list[StatefulEvent] = []
    diagnostics: list[str] = []
    for ev in events:
        span = ev.evidence
        if span.turn_index != turn.turn_index:
            diagnostics.append(
                f"{ev.trace_id}: span turn {span.turn_index} != turn {turn.turn_index}"
            )
            continue
        if not (0 <= span.char_start < span.char_end <= len(turn.text)):
            diagnostics.append(
                f"{ev.trace_id}: span [{span.char_start}, {span.char_end}) "
                f"outside turn text of length {len(turn.text)}"
            )
            continue
        if not (0.0 <= ev.confidence <= 1.0):
            diagnostics.append(f"{ev.trace_id}: confidence {ev.confidence} out of range")
            continue
        kept.append(ev)
    return kept, diagnostics
