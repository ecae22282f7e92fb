"""Pilot metrics and the benchmark runner.

Dialogue-side indicators (coverage, risk recall, structural completeness,
redundancy, turns-to-goal) audit a finished session against its gold audit;
retrieval-side indicators (recall@k, MRR@k, nDCG@k, object/path hit rates)
audit rankings against per-query gold. Everything is count-faithful: each
ratio is reported together with the raw numerator and denominator, and
percentages are ratios times 100 rounded half-up to one decimal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Mapping, Sequence

from .belief import Belief
from .emr import assertion_for
from .knowledge import KnowledgeBase, RetrievalConfig, chunk_profile, retrieve
from .model import (
    CurrentState,
    EngineConfig,
    StateEntry,
    StateLabel,
    Temporality,
    Verb,
    state_weight,
)
from .pack import GoldAudit, GoldItem, RetrievalQueryPoint, ScenarioPack
from .planner import PolicyKind
from .session import SessionResult, run_policy


class EmptyGoldError(ValueError):
    pass


# Which system statuses satisfy a gold status. Stronger verification is
# accepted where it subsumes the gold level; unrelated states never cross.
_STATUS_COMPAT: dict[StateLabel, set[StateLabel]] = {
    StateLabel.OBSERVED_RESULT: {
        StateLabel.OBSERVED_RESULT, StateLabel.CONFIRMED, StateLabel.VERIFIED,
    },
    StateLabel.CONFIRMED: {
        StateLabel.CONFIRMED, StateLabel.VERIFIED, StateLabel.OBSERVED_RESULT,
    },
    StateLabel.VERIFIED: {StateLabel.VERIFIED, StateLabel.CONFIRMED},
    StateLabel.COMPLETED: {StateLabel.COMPLETED, StateLabel.VERIFIED},
    StateLabel.HISTORICAL_RESULT: {StateLabel.HISTORICAL_RESULT},
    StateLabel.RECOMMENDED: {StateLabel.RECOMMENDED},
    StateLabel.PENDING_VERIFICATION: {
        StateLabel.PENDING_VERIFICATION, StateLabel.UNCONFIRMED,
    },
    StateLabel.UNCONFIRMED: {StateLabel.UNCONFIRMED, StateLabel.PENDING_VERIFICATION},
    StateLabel.NOT_DONE: {StateLabel.NOT_DONE},
    StateLabel.NEGATED: {StateLabel.NEGATED, StateLabel.NOT_DONE},
    StateLabel.UNKNOWN: {StateLabel.UNKNOWN},
}

_RISK_CLOSING_VERBS = (Verb.VERIFY, Verb.RECOMMEND_EXAM, Verb.RECOMMEND_PLAN)


def round_half_up(x: float, places: int) -> float:
    q = Decimal("1").scaleb(-places)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def percent(numerator: int, denominator: int) -> float:
    """Ratio x 100 rounded half-up to one decimal, from exact integer counts."""
    if denominator <= 0:
        raise ZeroDivisionError("percent needs a positive denominator")
    value = Decimal(numerator) * 100 / Decimal(denominator)
    return float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def ratio3(numerator: int, denominator: int) -> float:
    value = Decimal(numerator) / Decimal(denominator)
    return float(value.quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def ratio2(numerator: int, denominator: int) -> float:
    value = Decimal(numerator) / Decimal(denominator)
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _canon(value: str, canonical: Mapping[str, str]) -> str:
    v = value.strip().lower()
    return canonical.get(v, v)


@dataclass(frozen=True)
class _SystemRow:
    slot: str
    value: str
    status: StateLabel
    assertion: str


def _system_rows(result: SessionResult) -> list[_SystemRow]:
    """Union of the final record's rows and the final case-model entries."""
    rows = [
        _SystemRow(r.slot_id, r.normalized_value, r.status, r.assertion)
        for r in result.final_record.rows()
    ]
    for slot_id, entry in result.final_state.entries.items():
        rows.append(
            _SystemRow(slot_id, entry.value, entry.state, assertion_for(entry.state))
        )
    return rows


def _item_covered(
    item: GoldItem, rows: Sequence[_SystemRow], canonical: Mapping[str, str]
) -> bool:
    accept = _STATUS_COMPAT[item.status]
    want_value = _canon(item.value, canonical)
    for row in rows:
        if row.slot != item.slot:
            continue
        if _canon(row.value, canonical) != want_value:
            continue
        if row.status not in accept:
            continue
        if row.assertion != item.assertion:
            continue
        return True
    return False


def coverage_counts(
    gold: GoldAudit, result: SessionResult, canonical: Mapping[str, str] = {}
) -> tuple[int, int]:
    if not gold.items:
        raise EmptyGoldError(f"gold audit for {gold.script_id} has no items")
    rows = _system_rows(result)
    covered = sum(1 for item in gold.items if _item_covered(item, rows, canonical))
    return covered, len(gold.items)


def coverage(
    gold: GoldAudit, result: SessionResult, canonical: Mapping[str, str] = {}
) -> float:
    num, den = coverage_counts(gold, result, canonical)
    return num / den


def risk_recall_counts(
    gold: GoldAudit, result: SessionResult, canonical: Mapping[str, str] = {}
) -> tuple[int, int]:
    risk_items = gold.risk_items()
    if not risk_items:
        raise EmptyGoldError(f"gold audit for {gold.script_id} has no risk items")
    rows = _system_rows(result)
    targeted = {
        a.target_slot
        for a in result.actions
        if a.verb in _RISK_CLOSING_VERBS and a.target_slot is not None
    }
    surfaced = sum(
        1
        for item in risk_items
        if _item_covered(item, rows, canonical) or item.slot in targeted
    )
    return surfaced, len(risk_items)


def risk_recall(
    gold: GoldAudit, result: SessionResult, canonical: Mapping[str, str] = {}
) -> float:
    num, den = risk_recall_counts(gold, result, canonical)
    return num / den


def structural_counts(
    gold: GoldAudit, result: SessionResult, canonical: Mapping[str, str] = {}
) -> tuple[int, int]:
    if not gold.required_slots:
        raise EmptyGoldError(f"gold audit for {gold.script_id} has no structural slots")
    rows = _system_rows(result)
    by_slot: dict[str, list[GoldItem]] = {}
    for item in gold.items:
        by_slot.setdefault(item.slot, []).append(item)
    filled = 0
    for slot in gold.required_slots:
        references = by_slot.get(slot, [])
        if any(_item_covered(item, rows, canonical) for item in references):
            filled += 1
    return filled, len(gold.required_slots)


def structural_completeness(
    gold: GoldAudit, result: SessionResult, canonical: Mapping[str, str] = {}
) -> float:
    num, den = structural_counts(gold, result, canonical)
    return num / den


def redundancy_counts(result: SessionResult) -> tuple[int, int]:
    """(low-value actions, all actions); low-value means the target was already
    satisfied when proposed or the (verb, slot) pair repeats."""
    seen: set[tuple[Verb, str | None]] = set()
    low = 0
    for a in result.actions:
        pair = (a.verb, a.target_slot)
        if a.satisfied_at_proposal or pair in seen:
            low += 1
        seen.add(pair)
    return low, len(result.actions)


def redundancy(result: SessionResult) -> float | None:
    low, total = redundancy_counts(result)
    if total == 0:
        return None  # non-interactive session: metric not applicable
    return low / total


def t_goal(result: SessionResult) -> int | None:
    return result.t_goal


# -- retrieval metrics -------------------------------------------------------


def recall_at_k(rankings: Sequence[Sequence[str]], gold: Sequence[set[str]], k: int = 5) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for ranked, g in zip(rankings, gold) if set(ranked[:k]) & g)
    return hits / len(rankings)


def mrr_at_k(rankings: Sequence[Sequence[str]], gold: Sequence[set[str]], k: int = 5) -> float:
    total = 0.0
    for ranked, g in zip(rankings, gold):
        for i, oid in enumerate(ranked[:k], start=1):
            if oid in g:
                total += 1.0 / i
                break
    return total / len(rankings)


def ndcg_at_k(rankings: Sequence[Sequence[str]], gold: Sequence[set[str]], k: int = 5) -> float:
    """Binary gains, DCG = sum rel_i / log2(i + 1), ideal puts gold first."""
    total = 0.0
    for ranked, g in zip(rankings, gold):
        if not g:
            continue
        dcg = sum(
            1.0 / math.log2(i + 1)
            for i, oid in enumerate(ranked[:k], start=1)
            if oid in g
        )
        idcg = sum(1.0 / math.log2(i + 1) for i in range(1, min(len(g), k) + 1))
        total += dcg / idcg
    return total / len(rankings)


def object_hit_count(
    rankings: Sequence[Sequence[str]], primary_gold: Sequence[str], k_hit: int = 5
) -> int:
    """Queries whose primary gold object lands within the top fused ranks."""
    return sum(
        1 for ranked, oid in zip(rankings, primary_gold) if oid in ranked[:k_hit]
    )


def _contains_contiguous(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    n = len(needle)
    if n == 0 or n > len(haystack):
        return False
    return any(tuple(haystack[i : i + n]) == tuple(needle) for i in range(len(haystack) - n + 1))


def path_hit_count(
    returned_paths: Sequence[Sequence[Sequence[str]]],
    gold_paths: Sequence[Sequence[Sequence[str]]],
) -> int:
    """Queries where some returned path contains a gold node sequence
    contiguously."""
    hits = 0
    for returned, golds in zip(returned_paths, gold_paths):
        if any(
            _contains_contiguous(r, g) for g in golds for r in returned
        ):
            hits += 1
    return hits


# -- benchmark runners -------------------------------------------------------


def _query_state(q: RetrievalQueryPoint, config: EngineConfig) -> CurrentState:
    entries = {}
    for i, e in enumerate(q.state):
        entries[e.slot] = StateEntry(
            field_id=e.slot,
            value=e.value,
            state=e.state,
            weight=state_weight(e.state, config),
            temporality=Temporality.PRESENT,
            supporting_trace_ids=(f"q{i}",),
            last_update_turn=0,
        )
    return CurrentState(entries=entries, contradictions=(), turn_index=0)


@dataclass
class RetrievalBenchRow:
    profile: str
    queries: int
    recall_hits: int
    object_hits: int
    path_hits: int
    recall_at_5: float
    mrr_at_5: float
    ndcg_at_5: float
    object_hit_rate: float
    path_hit_rate: float

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def run_retrieval_benchmark(
    pack: ScenarioPack,
    kb: KnowledgeBase,
    profile: RetrievalConfig,
    profile_name: str,
    k: int = 5,
    config: EngineConfig | None = None,
) -> RetrievalBenchRow:
    if not pack.queries:
        raise EmptyGoldError("pack has no retrieval query points")
    config = config or pack.engine_config()
    rankings: list[list[str]] = []
    gold_sets: list[set[str]] = []
    primary: list[str] = []
    returned_paths: list[list[tuple[str, ...]]] = []
    gold_paths: list[tuple[tuple[str, ...], ...]] = []
    for q in pack.queries:
        scenario = pack.scenarios[q.scenario_id]
        cur = _query_state(q, config)
        belief = (
            Belief.from_hypotheses(scenario.hypotheses)
            if scenario.hypotheses
            else Belief(probs={"_": 1.0})
        )
        res = retrieve(cur, scenario.goal, belief, kb, config, profile)
        ranked_ids = [r.object_id for r in res.ranked]
        rankings.append(ranked_ids)
        gold_sets.append(set(q.gold_objects))
        primary.append(q.gold_objects[0] if q.gold_objects else "")
        # the paths a consumer of the ranking sees: those attached to the
        # top-k objects, not every path the pipeline ever scored
        seen: list[tuple[str, ...]] = []
        for oid in ranked_ids[:k]:
            seen.extend(p.nodes for p in res.paths.get(oid, ()))
        returned_paths.append(seen)
        gold_paths.append(q.gold_paths)

    n = len(pack.queries)
    recall_hits = sum(1 for r, g in zip(rankings, gold_sets) if set(r[:k]) & g)
    object_hits = object_hit_count(rankings, primary, k_hit=k)
    path_hits = path_hit_count(returned_paths, gold_paths)
    return RetrievalBenchRow(
        profile=profile_name,
        queries=n,
        recall_hits=recall_hits,
        object_hits=object_hits,
        path_hits=path_hits,
        recall_at_5=ratio3(recall_hits, n),
        mrr_at_5=round_half_up(mrr_at_k(rankings, gold_sets, k), 3),
        ndcg_at_5=round_half_up(ndcg_at_k(rankings, gold_sets, k), 3),
        object_hit_rate=ratio2(object_hits, n),
        path_hit_rate=ratio2(path_hits, n),
    )


# -- pilot runner ------------------------------------------------------------

_POLICY_LABELS = {
    PolicyKind.DIRECT_GENERATION: "Baseline A: Direct generation",
    PolicyKind.CHUNK_RAG: "Baseline B: Chunk-only RAG",
    PolicyKind.RULE_TEMPLATE: "Baseline C: Rule-template questioning",
    PolicyKind.FULL_FRAMEWORK: "Full framework",
}

_DEFAULT_POLICY_ORDER = (
    PolicyKind.DIRECT_GENERATION,
    PolicyKind.CHUNK_RAG,
    PolicyKind.RULE_TEMPLATE,
    PolicyKind.FULL_FRAMEWORK,
)


@dataclass
class PolicyRow:
    policy: PolicyKind
    covered: int
    gold_total: int
    risk_surfaced: int
    risk_total: int
    structural_filled: int
    structural_total: int
    low_actions: int
    total_actions: int
    t_goals: list[int | None] = field(default_factory=list)

    def interactive(self) -> bool:
        return self.policy is not PolicyKind.DIRECT_GENERATION

    def coverage_pct(self) -> float:
        return percent(self.covered, self.gold_total)

    def risk_recall_pct(self) -> float:
        return percent(self.risk_surfaced, self.risk_total)

    def structural_pct(self) -> float:
        return percent(self.structural_filled, self.structural_total)

    def redundancy_pct(self) -> float | None:
        if not self.interactive() or self.total_actions == 0:
            return None
        return percent(self.low_actions, self.total_actions)

    def mean_t_goal(self) -> float | None:
        if not self.interactive():
            return None
        reached = [t for t in self.t_goals if t is not None]
        if not reached:
            return None
        return round_half_up(sum(reached) / len(reached), 1)

    def dnf_count(self) -> int:
        return sum(1 for t in self.t_goals if t is None)

    def to_dict(self) -> dict[str, Any]:
        return {
            "policy": self.policy.value,
            "label": _POLICY_LABELS[self.policy],
            "coverage": {"num": self.covered, "den": self.gold_total,
                         "pct": self.coverage_pct()},
            "risk_recall": {"num": self.risk_surfaced, "den": self.risk_total,
                            "pct": self.risk_recall_pct()},
            "structural_completeness": {
                "num": self.structural_filled, "den": self.structural_total,
                "pct": self.structural_pct()},
            "redundancy": {
                "num": self.low_actions if self.interactive() else None,
                "den": self.total_actions if self.interactive() else None,
                "pct": self.redundancy_pct()},
            "t_goal": {"mean": self.mean_t_goal(),
                       "dnf": self.dnf_count() if self.interactive() else None,
                       "per_script": [t for t in self.t_goals] if self.interactive() else None},
        }


@dataclass
class PilotReport:
    pack_id: str
    rows: list[PolicyRow]
    retrieval: list[RetrievalBenchRow]
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "v": 1,
            "pack_id": self.pack_id,
            "methods": [r.to_dict() for r in self.rows],
            "retrieval": [r.to_dict() for r in self.retrieval],
            "violations": list(self.violations),
        }

    def method_table(self) -> str:
        headers = [
            "Method",
            "Coverage (%)",
            "Risk Recall (%)",
            "Structural Completeness (%)",
            "Redundancy (%)",
            "T_goal",
        ]
        lines = [headers]
        for row in self.rows:
            red = row.redundancy_pct()
            tg = row.mean_t_goal()
            lines.append(
                [
                    _POLICY_LABELS[row.policy],
                    f"{row.coverage_pct():.1f}",
                    f"{row.risk_recall_pct():.1f}",
                    f"{row.structural_pct():.1f}",
                    "N/A" if red is None else f"{red:.1f}",
                    "N/A" if tg is None else f"{tg:.1f}",
                ]
            )
        return _align(lines)

    def retrieval_table(self) -> str:
        headers = ["Metric"] + [r.profile for r in self.retrieval]
        rows = [
            ("Recall@5", "recall_at_5", 3),
            ("MRR@5", "mrr_at_5", 3),
            ("nDCG@5", "ndcg_at_5", 3),
            ("Object hit rate", "object_hit_rate", 2),
            ("Path hit rate", "path_hit_rate", 2),
        ]
        lines = [headers]
        for label, attr, places in rows:
            lines.append(
                [label] + [f"{getattr(r, attr):.{places}f}" for r in self.retrieval]
            )
        return _align(lines)

    def text_report(self) -> str:
        return (
            f"Pilot evaluation - pack {self.pack_id}\n\n"
            + self.method_table()
            + "\n\n"
            + self.retrieval_table()
            + ("\n\nThreshold violations:\n" + "\n".join(f"  - {v}" for v in self.violations)
               if self.violations else "\n\nAll manifest thresholds satisfied.")
            + "\n"
        )


def _align(lines: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in lines) for i in range(len(lines[0]))]
    out = []
    for i, row in enumerate(lines):
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out)


def run_pilot(
    pack: ScenarioPack,
    kb: KnowledgeBase,
    policies: Sequence[PolicyKind] = _DEFAULT_POLICY_ORDER,
    config: EngineConfig | None = None,
) -> PilotReport:
    """Run every policy over every script and aggregate pooled raw counts."""
    if not pack.scripts:
        raise EmptyGoldError("pack has no scripts")
    config = config or pack.engine_config()
    canonical = pack.canonical_values
    rows: list[PolicyRow] = []
    for kind in policies:
        row = PolicyRow(
            policy=kind,
            covered=0, gold_total=0,
            risk_surfaced=0, risk_total=0,
            structural_filled=0, structural_total=0,
            low_actions=0, total_actions=0,
        )
        for script_id in sorted(pack.scripts):
            script = pack.scripts[script_id]
            gold = pack.gold.get(script_id)
            if gold is None:
                continue
            result = run_policy(script, pack, kb, kind, config)
            c_num, c_den = coverage_counts(gold, result, canonical)
            r_num, r_den = risk_recall_counts(gold, result, canonical)
            s_num, s_den = structural_counts(gold, result, canonical)
            a_low, a_all = redundancy_counts(result)
            row.covered += c_num
            row.gold_total += c_den
            row.risk_surfaced += r_num
            row.risk_total += r_den
            row.structural_filled += s_num
            row.structural_total += s_den
            row.low_actions += a_low
            row.total_actions += a_all
            row.t_goals.append(result.t_goal)
        rows.append(row)

    base_rc = kb.config
    retrieval_rows = [
        run_retrieval_benchmark(pack, kb, chunk_profile(base_rc), "Chunk-only RAG", 5, config),
        run_retrieval_benchmark(pack, kb, base_rc, "Hybrid Retrieval", 5, config),
    ]

    report = PilotReport(
        pack_id=pack.pack_id,
        rows=rows,
        retrieval=retrieval_rows,
        violations=check_thresholds(pack, rows, retrieval_rows),
    )
    return report


def check_thresholds(
    pack: ScenarioPack,
    rows: Sequence[PolicyRow],
    retrieval_rows: Sequence[RetrievalBenchRow],
) -> list[str]:
    """Compare measured ratios against manifest thresholds (CI gate)."""
    thresholds = pack.manifest.get("thresholds", {})
    violations: list[str] = []
    by_policy = {r.policy.value: r for r in rows}
    for policy_name, limits in thresholds.get("policies", {}).items():
        row = by_policy.get(policy_name)
        if row is None:
            continue
        checks = {
            "coverage_min": row.covered / row.gold_total,
            "risk_recall_min": row.risk_surfaced / row.risk_total,
            "structural_min": row.structural_filled / row.structural_total,
        }
        for key, actual in checks.items():
            if key in limits and actual < limits[key]:
                violations.append(
                    f"{policy_name}: {key.removesuffix('_min')} {actual:.3f} < {limits[key]}"
                )
        if "redundancy_max" in limits and row.total_actions > 0:
            actual = row.low_actions / row.total_actions
            if actual > limits["redundancy_max"]:
                violations.append(
                    f"{policy_name}: redundancy {actual:.3f} > {limits['redundancy_max']}"
                )
    by_profile = {r.profile: r for r in retrieval_rows}
    for profile_name, limits in thresholds.get("retrieval", {}).items():
        r = by_profile.get(profile_name)
        if r is None:
            continue
        for key, metric in (
            ("recall_at_5_min", r.recall_hits / r.queries),
            ("object_hit_min", r.object_hits / r.queries),
            ("path_hit_min", r.path_hits / r.queries),
        ):
            if key in limits and metric < limits[key]:
                violations.append(
                    f"retrieval {profile_name}: {key.removesuffix('_min')} "
                    f"{metric:.3f} < {limits[key]}"
                )
    return violations
