"""Structured record projection.

The record is a read-only view of the case model, never part of the control
loop: one row per sufficiently-evidenced slot, denials and pending
recommendations surfaced with their own assertion polarity, plus a risk
section summarizing fired rules. Same state in, byte-identical record out.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .model import (
    CurrentState,
    EngineConfig,
    EvidenceSpan,
    GoalState,
    StateLabel,
    StatefulEvent,
)

RISK_SECTION = "Risk"
DEFAULT_SECTIONS = ("HPI", "ROS", "Plan", RISK_SECTION)


class UnmappedSlotError(KeyError):
    """A state entry's slot has no section in the record schema."""


@dataclass(frozen=True)
class RecordSchema:
    """Slot-to-section mapping plus a fixed section order."""

    sections: tuple[str, ...]
    slot_sections: Mapping[str, str]

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "RecordSchema":
        sections = tuple(raw.get("sections", DEFAULT_SECTIONS))
        return cls(sections=sections, slot_sections=dict(raw["slot_sections"]))

    def section_for(self, slot_id: str) -> str:
        try:
            return self.slot_sections[slot_id]
        except KeyError:
            raise UnmappedSlotError(f"slot {slot_id!r} has no record section") from None


@dataclass(frozen=True)
class RecordSlot:
    slot_id: str
    normalized_value: str
    status: StateLabel
    temporality: str
    assertion: str  # positive | negative | proposed
    risk_flag: bool
    evidence: tuple[EvidenceSpan, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "slot_id": self.slot_id,
            "normalized_value": self.normalized_value,
            "status": self.status.value,
            "temporality": self.temporality,
            "assertion": self.assertion,
            "risk_flag": self.risk_flag,
            "evidence": [
                {
                    "turn_index": s.turn_index,
                    "char_start": s.char_start,
                    "char_end": s.char_end,
                    "speaker": s.speaker.value,
                }
                for s in self.evidence
            ],
        }


@dataclass(frozen=True)
class EMRecord:
    sections: Mapping[str, tuple[RecordSlot, ...]]
    generated_at_turn: int

    def rows(self) -> list[RecordSlot]:
        out: list[RecordSlot] = []
        for section in self.sections:
            out.extend(self.sections[section])
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "sections": {
                name: [r.to_dict() for r in rows] for name, rows in self.sections.items()
            },
            "generated_at_turn": self.generated_at_turn,
        }


def assertion_for(state: StateLabel) -> str:
    if state in (StateLabel.NEGATED, StateLabel.NOT_DONE):
        return "negative"
    if state is StateLabel.RECOMMENDED:
        return "proposed"
    return "positive"


def project_record(
    cur: CurrentState,
    goal: GoalState,
    schema: RecordSchema,
    event_index: Mapping[str, StatefulEvent] | None = None,
    config: EngineConfig | None = None,
) -> EMRecord:
    """Project the case model into the sectioned record.

    Included rows: entries at or above w_emr (positive), all denials
    (negative), and recommendations (proposed). Unknown-weight and
    pending/unconfirmed entries stay out. Fired risk rules summarize into the
    risk section. Ordering is schema section order, then slot id.
    """
    config = config or EngineConfig()
    event_index = event_index or {}
    by_section: dict[str, list[RecordSlot]] = {name: [] for name in schema.sections}

    for slot_id in sorted(cur.entries):
        entry = cur.entries[slot_id]
        negative = entry.state in (StateLabel.NEGATED, StateLabel.NOT_DONE)
        proposed = entry.state is StateLabel.RECOMMENDED
        if not (entry.weight >= config.w_emr or negative or proposed):
            continue
        section = schema.section_for(slot_id)
        spans = tuple(
            event_index[t].evidence for t in entry.supporting_trace_ids if t in event_index
        )
        row = RecordSlot(
            slot_id=slot_id,
            normalized_value=entry.value,
            status=entry.state,
            temporality=entry.temporality.value,
            assertion=assertion_for(entry.state),
            risk_flag=goal.is_risk_flagged(slot_id),
            evidence=spans,
        )
        by_section.setdefault(section, []).append(row)

    for rule in sorted(goal.risk_rules, key=lambda r: r.rule_id):
        if not rule.fired(cur):
            continue
        discharged = rule.discharged(cur)
        antecedent_traces: list[EvidenceSpan] = []
        for cond in rule.antecedent:
            entry = cur.entries.get(cond.slot_id)
            if entry is None:
                continue
            for t in entry.supporting_trace_ids:
                if t in event_index:
                    antecedent_traces.append(event_index[t].evidence)
        by_section.setdefault(RISK_SECTION, []).append(
            RecordSlot(
                slot_id=rule.rule_id,
                normalized_value="addressed" if discharged else "open",
                status=StateLabel.COMPLETED if discharged else StateLabel.PENDING_VERIFICATION,
                temporality="present",
                assertion="positive",
                risk_flag=True,
                evidence=tuple(antecedent_traces),
            )
        )

    sections = {
        name: tuple(sorted(rows, key=lambda r: r.slot_id))
        for name, rows in by_section.items()
    }
    return EMRecord(sections=sections, generated_at_turn=cur.turn_index)


def record_diff(old: EMRecord | None, new: EMRecord) -> list[dict[str, Any]]:
    """Rows added or changed between two projections (for per-turn updates)."""
    before: dict[tuple[str, str], RecordSlot] = {}
    if old is not None:
        for name, rows in old.sections.items():
            for r in rows:
                before[(name, r.slot_id)] = r
    changes: list[dict[str, Any]] = []
    for name, rows in new.sections.items():
        for r in rows:
            prev = before.get((name, r.slot_id))
            if prev is None:
                changes.append({"section": name, "change": "added", "row": r.to_dict()})
            elif prev != r:
                changes.append({"section": name, "change": "updated", "row": r.to_dict()})
    return changes
