"""Deterministic consultation-inquiry engine and benchmark harness."""

from .model import (
    ActionCandidate,
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
    UtilityBreakdown,
    Verb,
    state_weight,
)

__version__ = "0.1.0"

__all__ = [
    "ActionCandidate",
    "Condition",
    "CurrentState",
    "EngineConfig",
    "EvidenceSpan",
    "GapKind",
    "GapSignal",
    "GoalSlot",
    "GoalState",
    "RiskRule",
    "Role",
    "StateEntry",
    "StateLabel",
    "StatefulEvent",
    "Temporality",
    "UtilityBreakdown",
    "Verb",
    "state_weight",
    "__version__",
]
