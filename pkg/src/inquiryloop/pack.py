"""Scenario pack loading and validation.

A pack directory is the unit of benchmark data: dialogue scripts, goal
templates, risk rules, likelihood/outcome models, gold audits, retrieval
query points, extraction rules, and a manifest pinning counts and config.
All files are UTF-8 JSON; scripts and query points are JSON-lines.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .belief import (
    Hypothesis,
    LikelihoodModel,
    OutcomeModel,
    likelihood_model_from_dict,
    outcome_model_from_dict,
)
from .emr import RecordSchema
from .extraction import DialogueTurn, EventSeed, ExtractionRule
from .model import (
    Condition,
    EngineConfig,
    GoalSlot,
    GoalState,
    RiskRule,
    Role,
    StateLabel,
    Temporality,
)
from .planner import UtilityWeights


class PackInvalidError(ValueError):
    """The pack failed structural validation; message lists the problems."""


@dataclass(frozen=True)
class ResponderTurn:
    """Scripted reply injected when the system commits a matching action."""

    verbs: tuple[str, ...]
    slot: str
    speaker: Role
    text: str
    events: tuple[EventSeed, ...]

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ResponderTurn":
        return cls(
            verbs=tuple(raw["verbs"]),
            slot=raw["slot"],
            speaker=Role.parse(raw["speaker"]),
            text=raw["text"],
            events=tuple(EventSeed.from_dict(e) for e in raw.get("events", [])),
        )


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    title: str
    goal: GoalState
    schema: RecordSchema
    hypotheses: tuple[Hypothesis, ...]
    likelihood: LikelihoodModel
    outcomes: OutcomeModel
    checklist: tuple[str, ...]
    responder: Mapping[tuple[str, str], ResponderTurn] = field(default_factory=dict)


@dataclass(frozen=True)
class Script:
    script_id: str
    scenario_id: str
    turns: tuple[DialogueTurn, ...]


@dataclass(frozen=True)
class GoldItem:
    slot: str
    value: str
    status: StateLabel
    temporality: Temporality
    assertion: str
    risk_flag: bool = False

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "GoldItem":
        return cls(
            slot=raw["slot"],
            value=raw["value"],
            status=StateLabel.parse(raw["status"]),
            temporality=Temporality.parse(raw["temporality"]),
            assertion=raw["assertion"],
            risk_flag=bool(raw.get("risk_flag", False)),
        )


@dataclass(frozen=True)
class GoldAudit:
    script_id: str
    items: tuple[GoldItem, ...]
    required_slots: tuple[str, ...]

    def risk_items(self) -> tuple[GoldItem, ...]:
        return tuple(i for i in self.items if i.risk_flag)


@dataclass(frozen=True)
class QueryStateEntry:
    slot: str
    value: str
    state: StateLabel


@dataclass(frozen=True)
class RetrievalQueryPoint:
    query_id: str
    scenario_id: str
    state: tuple[QueryStateEntry, ...]
    gold_objects: tuple[str, ...]
    gold_paths: tuple[tuple[str, ...], ...]
    risk_critical: bool

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "RetrievalQueryPoint":
        return cls(
            query_id=raw["query_id"],
            scenario_id=raw["scenario_id"],
            state=tuple(
                QueryStateEntry(
                    slot=e["slot"], value=e["value"], state=StateLabel.parse(e["state"])
                )
                for e in raw["state"]
            ),
            gold_objects=tuple(raw["gold_objects"]),
            gold_paths=tuple(tuple(p) for p in raw.get("gold_paths", [])),
            risk_critical=bool(raw["risk_critical"]),
        )


@dataclass(frozen=True)
class ScenarioPack:
    pack_dir: Path
    manifest: Mapping[str, Any]
    scenarios: Mapping[str, Scenario]
    scripts: Mapping[str, Script]
    gold: Mapping[str, GoldAudit]
    queries: tuple[RetrievalQueryPoint, ...]
    rules: tuple[ExtractionRule, ...]
    canonical_values: Mapping[str, str]

    @property
    def pack_id(self) -> str:
        return self.manifest.get("pack_id", self.pack_dir.name)

    def engine_config(self) -> EngineConfig:
        raw = self.manifest.get("engine", {})
        base = EngineConfig()
        kwargs = {}
        for name in (
            "w_min",
            "differential_delta",
            "w_emr",
            "max_candidates",
            "candidate_pool_k",
            "rule_confidence",
            "gold_confidence",
            "repeat_window",
            "not_done_weight",
            "negated_weight",
            "trace_top_k",
        ):
            if name in raw:
                kwargs[name] = raw[name]
        return EngineConfig(**{**base.__dict__, **kwargs})

    def utility_weights(self) -> UtilityWeights:
        return UtilityWeights.from_dict(self.manifest.get("utility_weights", {}))

    def extraction_mode(self) -> str:
        return self.manifest.get("extraction_mode", "gold")

    def scripts_for_scenario(self, scenario_id: str) -> list[Script]:
        return [s for s in self.scripts.values() if s.scenario_id == scenario_id]


def _goal_from_dict(raw: Mapping[str, Any]) -> GoalState:
    slots = tuple(
        GoalSlot(
            slot_id=s["slot_id"],
            section=s["section"],
            mandatory=bool(s.get("mandatory", False)),
            risk_flag=bool(s.get("risk_flag", False)),
        )
        for s in raw["slots"]
    )
    rules = tuple(
        RiskRule(
            rule_id=r["rule_id"],
            antecedent=tuple(
                Condition(
                    slot_id=c["slot"],
                    states=tuple(StateLabel.parse(s) for s in c.get("states", [])),
                    value=c.get("value"),
                    min_weight=c.get("min_weight"),
                )
                for c in r["antecedent"]
            ),
            unresolved_slots=tuple(r["unresolved"]),
            severity=float(r["severity"]),
            threshold=float(r.get("threshold", 0.7)),
        )
        for r in raw.get("risk_rules", [])
    )
    activation = {k: tuple(v) for k, v in raw.get("activation", {}).items()}
    return GoalState(required_slots=slots, risk_rules=rules, activation=activation)


def _scenario_from_dict(raw: Mapping[str, Any]) -> Scenario:
    goal = _goal_from_dict(raw)
    schema = RecordSchema(
        sections=tuple(raw["sections"]),
        slot_sections={s["slot_id"]: s["section"] for s in raw["slots"]},
    )
    hypotheses = tuple(
        Hypothesis(hypothesis_id=h["hypothesis_id"], label=h["label"], prior=float(h["prior"]))
        for h in raw["hypotheses"]
    )
    responder: dict[tuple[str, str], ResponderTurn] = {}
    for r in raw.get("responder", []):
        rt = ResponderTurn.from_dict(r)
        for verb in rt.verbs:
            responder[(verb, rt.slot)] = rt
    return Scenario(
        scenario_id=raw["scenario_id"],
        title=raw.get("title", raw["scenario_id"]),
        goal=goal,
        schema=schema,
        hypotheses=hypotheses,
        likelihood=likelihood_model_from_dict(raw.get("likelihoods", {})),
        outcomes=outcome_model_from_dict(raw.get("outcomes", {})),
        checklist=tuple(raw.get("checklist", [])),
        responder=responder,
    )


def _read_jsonl(path: Path) -> list[dict[str, Any]]:
    rows = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def load_pack(pack_dir: str | Path) -> ScenarioPack:
    pack_dir = Path(pack_dir)
    manifest = json.loads((pack_dir / "manifest.json").read_text(encoding="utf-8"))
    raw_scenarios = json.loads(
        (pack_dir / "scenarios.json").read_text(encoding="utf-8")
    )["scenarios"]
    scenarios = {s["scenario_id"]: _scenario_from_dict(s) for s in raw_scenarios}

    scripts: dict[str, Script] = {}
    for entry in manifest.get("scripts", []):
        script_id = entry["script_id"]
        turns = tuple(
            DialogueTurn.from_dict(r)
            for r in _read_jsonl(pack_dir / "scripts" / f"{script_id}.jsonl")
        )
        scripts[script_id] = Script(
            script_id=script_id, scenario_id=entry["scenario_id"], turns=turns
        )

    gold: dict[str, GoldAudit] = {}
    for script_id in scripts:
        path = pack_dir / "gold" / f"{script_id}.json"
        if path.exists():
            raw = json.loads(path.read_text(encoding="utf-8"))
            gold[script_id] = GoldAudit(
                script_id=script_id,
                items=tuple(GoldItem.from_dict(i) for i in raw["items"]),
                required_slots=tuple(raw["required_slots"]),
            )

    queries = tuple(
        RetrievalQueryPoint.from_dict(r) for r in _read_jsonl(pack_dir / "queries.jsonl")
    ) if (pack_dir / "queries.jsonl").exists() else ()

    rules: tuple[ExtractionRule, ...] = ()
    rules_path = pack_dir / "rules.json"
    if rules_path.exists():
        raw = json.loads(rules_path.read_text(encoding="utf-8"))
        rules = tuple(ExtractionRule.from_dict(r) for r in raw.get("rules", []))

    return ScenarioPack(
        pack_dir=pack_dir,
        manifest=manifest,
        scenarios=scenarios,
        scripts=scripts,
        gold=gold,
        queries=queries,
        rules=rules,
        canonical_values=manifest.get("canonical_values", {}),
    )


def validate_pack(pack: ScenarioPack, kb=None) -> list[str]:
    """Structural lint: manifest counts match contents and cross-references
    resolve. Returns a list of problems (empty means clean)."""
    problems: list[str] = []
    counts = pack.manifest.get("counts", {})

    def check_count(name: str, actual: int) -> None:
        expected = counts.get(name)
        if expected is not None and expected != actual:
            problems.append(f"manifest counts.{name}={expected} but actual is {actual}")

    check_count("scripts", len(pack.scripts))
    check_count("gold_items", sum(len(g.items) for g in pack.gold.values()))
    check_count("risk_items", sum(len(g.risk_items()) for g in pack.gold.values()))
    check_count(
        "structural_slots", sum(len(g.required_slots) for g in pack.gold.values())
    )
    check_count("query_points", len(pack.queries))

    for script in pack.scripts.values():
        if script.scenario_id not in pack.scenarios:
            problems.append(
                f"script {script.script_id} references unknown scenario {script.scenario_id}"
            )
            continue
        scenario = pack.scenarios[script.scenario_id]
        known_slots = {s.slot_id for s in scenario.goal.required_slots}
        prev = -1
        for turn in script.turns:
            if turn.turn_index <= prev:
                problems.append(
                    f"script {script.script_id}: turn_index {turn.turn_index} not increasing"
                )
            prev = turn.turn_index
            for seed in turn.gold_events or ():
                if not (0 <= seed.char_start < seed.char_end <= len(turn.text)):
                    problems.append(
                        f"script {script.script_id} turn {turn.turn_index}: "
                        f"span [{seed.char_start}, {seed.char_end}) outside text"
                    )
                if seed.field_id not in known_slots:
                    problems.append(
                        f"script {script.script_id} turn {turn.turn_index}: "
                        f"slot {seed.field_id} not in scenario goal"
                    )

    for script_id, audit in pack.gold.items():
        if script_id not in pack.scripts:
            problems.append(f"gold audit for unknown script {script_id}")
            continue
        scenario = pack.scenarios[pack.scripts[script_id].scenario_id]
        known_slots = {s.slot_id for s in scenario.goal.required_slots}
        for item in audit.items:
            if item.slot not in known_slots:
                problems.append(f"gold {script_id}: slot {item.slot} not in scenario goal")
        for slot in audit.required_slots:
            if slot not in known_slots:
                problems.append(
                    f"gold {script_id}: structural slot {slot} not in scenario goal"
                )

    for scenario in pack.scenarios.values():
        total = sum(h.prior for h in scenario.hypotheses)
        if scenario.hypotheses and abs(total - 1.0) > 1e-9:
            problems.append(
                f"scenario {scenario.scenario_id}: priors sum to {total}"
            )
        missing = [s for s in scenario.checklist
                   if s not in {g.slot_id for g in scenario.goal.required_slots}]
        if missing:
            problems.append(
                f"scenario {scenario.scenario_id}: checklist slots not in goal: {missing}"
            )

    seen_queries: set[str] = set()
    for q in pack.queries:
        if q.query_id in seen_queries:
            problems.append(f"duplicate query id {q.query_id}")
        seen_queries.add(q.query_id)
        if q.scenario_id not in pack.scenarios:
            problems.append(f"query {q.query_id}: unknown scenario {q.scenario_id}")
        if kb is not None:
            for oid in q.gold_objects:
                if oid not in kb.objects:
                    problems.append(f"query {q.query_id}: unknown gold object {oid}")
            for path in q.gold_paths:
                for oid in path:
                    if oid not in kb.objects:
                        problems.append(
                            f"query {q.query_id}: unknown object {oid} in gold path"
                        )
    return problems
