"""Objectified knowledge base and the three-stage hybrid retrieval pipeline.

Stage 1 narrows candidates by exact cosine over deterministic feature-hashed
embeddings, stage 2 reranks survivors with a seven-part composite score over
case-state structure, and stage 3 enumerates weighted reasoning paths from
anchored objects to the best candidates. The three stage scores fuse linearly
into the final ranking. Everything is exact and replay-identical: no
approximate indexes, no sampling, fixed hash seed pinned in the kb manifest.
"""
from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .belief import Belief
from .model import (
    CurrentState,
    EngineConfig,
    GoalState,
    StateLabel,
    state_weight,
    tokenize,
)


class EmptyInputError(ValueError):
    """Embedding requested for an empty token bag."""


class ZeroVectorError(ValueError):
    """Cosine requested against a zero vector."""


class ObjectKind(str, Enum):
    SYMPTOM_UNIT = "symptom_unit"
    DIAGNOSIS_UNIT = "diagnosis_unit"
    EXAM_UNIT = "exam_unit"
    RISK_RULE_UNIT = "risk_rule_unit"
    CASE_SUMMARY = "case_summary"

    @classmethod
    def parse(cls, raw: str) -> "ObjectKind":
        try:
            return cls(raw)
        except ValueError:
            raise ValueError(f"unknown knowledge object kind: {raw!r}") from None


HASH_NAME = "blake2b64"


@dataclass(frozen=True)
class RetrievalConfig:
    """Pinned by the kb manifest so rankings reproduce across machines."""

    dim: int = 256
    hash_name: str = HASH_NAME
    hash_seed: int = 1315423911
    alpha: tuple[float, ...] = (0.20, 0.10, 0.10, 0.20, 0.20, 0.10, 0.10)
    beta: tuple[float, ...] = (0.3, 0.4, 0.3)
    rho: float = 0.25
    coarse_k: int = 50
    rerank_k: int = 20
    max_path_len: int = 4
    path_source: str = "rerank"  # or "vector": which ranking picks path targets
    paths_per_object: int = 5

    def __post_init__(self) -> None:
        if len(self.alpha) != 7 or any(a < 0 for a in self.alpha):
            raise ValueError("alpha must be seven non-negative weights")
        if len(self.beta) != 3 or any(b < 0 for b in self.beta):
            raise ValueError("beta must be three non-negative weights")
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.path_source not in ("rerank", "vector"):
            raise ValueError(f"unknown path_source: {self.path_source!r}")

    def normalized(self) -> "RetrievalConfig":
        a_sum = sum(self.alpha)
        b_sum = sum(self.beta)
        if a_sum <= 0 or b_sum <= 0:
            raise ValueError("alpha and beta must each have positive mass")
        return replace(
            self,
            alpha=tuple(a / a_sum for a in self.alpha),
            beta=tuple(b / b_sum for b in self.beta),
        )


@dataclass(frozen=True)
class KnowledgeObject:
    object_id: str
    kind: ObjectKind
    fields: Mapping[str, Any]
    text: str
    embedding: np.ndarray | None = None

    def field_values(self, key: str) -> list[str]:
        raw = self.fields.get(key)
        if raw is None:
            return []
        if isinstance(raw, str):
            return [raw]
        return [str(v) for v in raw]

    def primary_slot(self) -> str | None:
        vals = self.field_values("slot")
        return vals[0] if vals else None


@dataclass(frozen=True)
class KnowledgeEdge:
    src: str
    dst: str
    relation: str
    cost: float

    def __post_init__(self) -> None:
        if self.cost <= 0:
            raise ValueError(f"edge cost must be > 0, got {self.cost}")


@dataclass(frozen=True)
class ReasoningPath:
    nodes: tuple[str, ...]
    edges: tuple[KnowledgeEdge, ...]
    cost: float = 0.0
    score: float = 0.0
    precondition_slot: str | None = None

    def __post_init__(self) -> None:
        if len(self.edges) < 1 or len(self.nodes) != len(self.edges) + 1:
            raise ValueError("a path needs L >= 1 edges and L + 1 nodes")
        for node, edge in zip(self.nodes, self.edges):
            if edge.src != node:
                raise ValueError(f"edge {edge} does not start at {node}")
        for node, edge in zip(self.nodes[1:], self.edges):
            if edge.dst != node:
                raise ValueError(f"edge {edge} does not end at {node}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": list(self.nodes),
            "relations": [e.relation for e in self.edges],
            "cost": self.cost,
            "score": self.score,
            "precondition_slot": self.precondition_slot,
        }


@dataclass(frozen=True)
class RankedObject:
    object_id: str
    vector_score: float
    object_score: float
    path_score: float
    fused_score: float

    def to_dict(self) -> dict[str, float | str]:
        return {
            "object_id": self.object_id,
            "vector_score": self.vector_score,
            "object_score": self.object_score,
            "path_score": self.path_score,
            "fused_score": self.fused_score,
        }


@dataclass(frozen=True)
class RetrievalResult:
    ranked: tuple[RankedObject, ...]
    paths: Mapping[str, tuple[ReasoningPath, ...]]  # object id -> paths through it
    all_paths: tuple[ReasoningPath, ...] = ()

    def top_ids(self, k: int) -> list[str]:
        return [r.object_id for r in self.ranked[:k]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "ranked": [r.to_dict() for r in self.ranked],
            "paths": {
                oid: [p.to_dict() for p in ps] for oid, ps in sorted(self.paths.items())
            },
        }


class KnowledgeBase:
    """Immutable after load; shared read-only across sessions."""

    def __init__(
        self,
        objects: Sequence[KnowledgeObject],
        edges: Sequence[KnowledgeEdge],
        config: RetrievalConfig | None = None,
    ) -> None:
        config = (config or RetrievalConfig()).normalized()
        ids = [o.object_id for o in objects]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate object ids in knowledge base")
        known = set(ids)
        for e in edges:
            if e.src not in known or e.dst not in known:
                raise ValueError(f"edge {e.src}->{e.dst} references unknown objects")
        self.config = config
        self.objects: dict[str, KnowledgeObject] = {}
        for obj in sorted(objects, key=lambda o: o.object_id):
            emb = obj.embedding
            if emb is None:
                emb = embed(tokenize(obj.text), dim=config.dim, seed=config.hash_seed)
            self.objects[obj.object_id] = replace(obj, embedding=emb)
        self.edges: tuple[KnowledgeEdge, ...] = tuple(
            sorted(edges, key=lambda e: (e.src, e.dst, e.relation))
        )
        self._out: dict[str, tuple[KnowledgeEdge, ...]] = {}
        self._neighbors: dict[str, tuple[str, ...]] = {}
        out: dict[str, list[KnowledgeEdge]] = {}
        nbr: dict[str, set[str]] = {}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
            nbr.setdefault(e.src, set()).add(e.dst)
            nbr.setdefault(e.dst, set()).add(e.src)
        self._out = {k: tuple(v) for k, v in out.items()}
        self._neighbors = {k: tuple(sorted(v)) for k, v in nbr.items()}
        self._ids = tuple(self.objects)

    def __len__(self) -> int:
        return len(self.objects)

    def out_edges(self, object_id: str) -> tuple[KnowledgeEdge, ...]:
        return self._out.get(object_id, ())

    def neighbors(self, object_id: str) -> tuple[str, ...]:
        return self._neighbors.get(object_id, ())

    def objects_for_slot(self, slot_id: str) -> list[KnowledgeObject]:
        return [o for o in self.objects.values() if o.primary_slot() == slot_id]

    def cosine_scores(self, query: np.ndarray) -> dict[str, float]:
        # per-object cosine, bit-identical to the cosine() operation (a fused
        # matrix product can round differently and flip exact ties)
        return {oid: cosine(query, self.objects[oid].embedding) for oid in self._ids}


def _token_hash(token: str, seed: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "big")
    ).digest()
    return int.from_bytes(digest, "big")


def embed(bag: Iterable[str], dim: int = 256, seed: int = 1315423911) -> np.ndarray:
    """Feature-hash a token multiset into a unit vector.

    Each token maps to (index, sign) through a keyed 64-bit blake2b digest;
    counts accumulate and the result is L2-normalized, so direction depends
    only on token proportions.
    """
    vec = np.zeros(dim, dtype=np.float64)
    n = 0
    for token in bag:
        h = _token_hash(token, seed)
        sign = 1.0 if h & 1 else -1.0
        vec[(h >> 1) % dim] += sign
        n += 1
    if n == 0:
        raise EmptyInputError("cannot embed an empty token bag")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # opposite-sign collisions cancelled everything; fall back to a
        # deterministic single-coordinate direction
        vec[0] = 1.0
        norm = 1.0
    return vec / norm


def cosine(q: np.ndarray, e: np.ndarray) -> float:
    nq = float(np.linalg.norm(q))
    ne = float(np.linalg.norm(e))
    if nq == 0.0 or ne == 0.0:
        raise ZeroVectorError("cosine undefined for zero vectors")
    return float(np.dot(q, e)) / (nq * ne)


def state_query_bag(cur: CurrentState) -> list[str]:
    """Deterministic token bag describing the case state, for coarse retrieval."""
    bag: list[str] = []
    for slot_id in sorted(cur.entries):
        entry = cur.entries[slot_id]
        if entry.weight <= 0.0:
            continue
        bag.extend(tokenize(slot_id))
        bag.extend(tokenize(entry.value))
    return bag


def coarse_retrieve(
    query_bag: Iterable[str], kb: KnowledgeBase, k: int
) -> list[tuple[str, float]]:
    """Exact top-k objects by cosine; ties broken by ascending object id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(kb) == 0:
        raise ValueError("knowledge base is empty")
    tokens = list(query_bag)
    if not tokens:
        scored = [(oid, 0.0) for oid in kb.objects]
    else:
        q = embed(tokens, dim=kb.config.dim, seed=kb.config.hash_seed)
        scored = list(kb.cosine_scores(q).items())
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def _as_string_set(obj: KnowledgeObject) -> set[str]:
    out: set[str] = set()
    for key, raw in obj.fields.items():
        out.add(str(key).lower())
        if isinstance(raw, str):
            out.add(raw.lower())
        elif isinstance(raw, (list, tuple)):
            out.update(str(v).lower() for v in raw)
        else:
            out.add(str(raw).lower())
    return out


def _state_string_set(cur: CurrentState, min_weight: float) -> set[str]:
    out: set[str] = set()
    for slot_id, entry in cur.entries.items():
        if entry.weight >= min_weight:
            out.add(slot_id.lower())
            out.add(entry.value.lower())
    return out


def score_field_similarity(cur: CurrentState, obj: KnowledgeObject) -> float:
    """Jaccard overlap between object field keys/values and well-evidenced state."""
    a = _as_string_set(obj)
    b = _state_string_set(cur, min_weight=0.5)
    if not a or not b:
        return 0.0
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def score_structural_similarity(cur: CurrentState, obj: KnowledgeObject) -> float:
    """Fraction of the slots this object expects that the case already covers."""
    expected = obj.field_values("expects")
    if not expected:
        return 0.0
    hit = sum(1 for s in expected if cur.weight_of(s) > 0.0)
    return hit / len(expected)


def _anchor_ids(cur: CurrentState, kb: KnowledgeBase, min_weight: float = 1.0) -> list[str]:
    anchored = {
        slot for slot, entry in cur.entries.items() if entry.weight >= min_weight
    }
    return sorted(
        oid for oid, obj in kb.objects.items() if obj.primary_slot() in anchored
    )


def score_graph_position(cur: CurrentState, obj: KnowledgeObject, kb: KnowledgeBase) -> float:
    """1 / (1 + d) for the hop distance to the nearest fully-evidenced object."""
    anchors = set(_anchor_ids(cur, kb))
    if not anchors:
        return 0.0
    if obj.object_id in anchors:
        return 1.0
    seen = {obj.object_id}
    frontier = deque([(obj.object_id, 0)])
    while frontier:
        node, d = frontier.popleft()
        for nxt in kb.neighbors(node):
            if nxt in seen:
                continue
            if nxt in anchors:
                return 1.0 / (2.0 + d)
            seen.add(nxt)
            frontier.append((nxt, d + 1))
    return 0.0


def score_goal_distance(
    cur: CurrentState, goal: GoalState, obj: KnowledgeObject, config: EngineConfig
) -> float:
    """Share of the object's addressed slots that are still unmet mandatory slots."""
    addressed = obj.field_values("slot") + obj.field_values("addresses")
    if not addressed:
        return 0.0
    unmet = {
        s.slot_id
        for s in goal.mandatory_slots()
        if cur.weight_of(s.slot_id) < config.w_min
    }
    return sum(1 for s in addressed if s in unmet) / len(addressed)


def score_risk_alignment(cur: CurrentState, goal: GoalState, obj: KnowledgeObject) -> float:
    open_rules = [r for r in goal.risk_rules if r.fired(cur) and not r.discharged(cur)]
    if not open_rules:
        return 0.0
    return 1.0 if any(object_discharges(obj, r) for r in open_rules) else 0.0


def object_discharges(obj: KnowledgeObject, rule) -> bool:
    if rule.rule_id in obj.field_values("discharges"):
        return True
    slot = obj.primary_slot()
    return (
        obj.kind is ObjectKind.EXAM_UNIT
        and slot is not None
        and slot in rule.unresolved_slots
    )


def score_path_utility(obj: KnowledgeObject, paths: Sequence[ReasoningPath]) -> float:
    best = 0.0
    for p in paths:
        if obj.object_id in p.nodes:
            best = max(best, p.score)
    return best


def score_state_compatibility(
    cur: CurrentState, obj: KnowledgeObject, config: EngineConfig
) -> float:
    """Mean fulfilment of the object's required evidence states ('slot:state')."""
    reqs = obj.field_values("requires")
    if not reqs:
        return 1.0
    ratios: list[float] = []
    for raw in reqs:
        slot, _, state_raw = raw.partition(":")
        required = state_weight(StateLabel.parse(state_raw), config) if state_raw else 1.0
        actual = cur.weight_of(slot)
        ratios.append(1.0 if required <= 0.0 else min(1.0, actual / required))
    return sum(ratios) / len(ratios)


def rerank_score(
    cur: CurrentState,
    goal: GoalState,
    belief: Belief,
    obj: KnowledgeObject,
    weights: tuple[float, ...],
    kb: KnowledgeBase,
    config: EngineConfig | None = None,
    paths: Sequence[ReasoningPath] = (),
) -> float:
    """Convex combination of the seven structure-alignment sub-scores.

    The belief argument is part of the stable call contract; the default
    sub-scores are state/goal/graph driven and do not consume it.
    """
    config = config or EngineConfig()
    subs = rerank_subscores(cur, goal, belief, obj, kb, config, paths)
    return float(sum(a * s for a, s in zip(weights, subs)))


def rerank_subscores(
    cur: CurrentState,
    goal: GoalState,
    belief: Belief,
    obj: KnowledgeObject,
    kb: KnowledgeBase,
    config: EngineConfig,
    paths: Sequence[ReasoningPath] = (),
) -> tuple[float, float, float, float, float, float, float]:
    return (
        score_field_similarity(cur, obj),
        score_structural_similarity(cur, obj),
        score_graph_position(cur, obj, kb),
        score_goal_distance(cur, goal, obj, config),
        score_risk_alignment(cur, goal, obj),
        score_path_utility(obj, paths),
        score_state_compatibility(cur, obj, config),
    )


def path_cost(path: ReasoningPath, rho: float) -> float:
    """Edge costs plus rho times the length penalty (path length in edges)."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    return sum(e.cost for e in path.edges) + rho * len(path.edges)


def path_scores(paths: Sequence[ReasoningPath], rho: float) -> list[float]:
    """Min-max normalized, higher-is-better; all 1.0 when costs coincide."""
    if not paths:
        raise ValueError("path_scores needs at least one path")
    costs = [path_cost(p, rho) for p in paths]
    lo, hi = min(costs), max(costs)
    if hi == lo:
        return [1.0 for _ in costs]
    return [1.0 - (c - lo) / (hi - lo) for c in costs]


def _resolve_precondition(nodes: Sequence[str], kb: KnowledgeBase) -> str | None:
    for node in nodes:
        obj = kb.objects.get(node)
        if obj is not None:
            vals = obj.field_values("precondition_slot")
            if vals:
                return vals[0]
    return None


def enumerate_paths(
    kb: KnowledgeBase,
    src_objects: Iterable[str],
    dst_objects: Iterable[str],
    max_len: int = 4,
) -> list[ReasoningPath]:
    """Exhaustive simple paths (no repeated nodes) of 1..max_len edges from any
    source to any destination, in lexicographic node-sequence order."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    dst = set(dst_objects)
    found: list[ReasoningPath] = []

    def walk(node: str, nodes: list[str], edges: list[KnowledgeEdge]) -> None:
        for edge in sorted(kb.out_edges(node), key=lambda e: (e.dst, e.relation)):
            if edge.dst in nodes:
                continue
            nodes.append(edge.dst)
            edges.append(edge)
            if edge.dst in dst:
                found.append(
                    ReasoningPath(
                        nodes=tuple(nodes),
                        edges=tuple(edges),
                        precondition_slot=_resolve_precondition(nodes, kb),
                    )
                )
            if len(edges) < max_len:
                walk(edge.dst, nodes, edges)
            nodes.pop()
            edges.pop()

    for src in sorted(set(src_objects)):
        if src in kb.objects:
            walk(src, [src], [])

    found.sort(key=lambda p: (p.nodes, tuple(e.relation for e in p.edges)))
    return found


def retrieve(
    cur: CurrentState,
    goal: GoalState,
    belief: Belief,
    kb: KnowledgeBase,
    config: EngineConfig | None = None,
    retrieval: RetrievalConfig | None = None,
) -> RetrievalResult:
    """Full hybrid pipeline: coarse cosine -> composite rerank -> path stage ->
    linear fusion. Objects untouched by any scored path keep path score 0."""
    config = config or EngineConfig()
    rc = (retrieval or kb.config).normalized()

    k = min(rc.coarse_k, len(kb))
    coarse = coarse_retrieve(state_query_bag(cur), kb, k)
    vector_score = {oid: (c + 1.0) / 2.0 for oid, c in coarse}

    prelim: dict[str, float] = {}
    for oid in vector_score:
        prelim[oid] = rerank_score(
            cur, goal, belief, kb.objects[oid], rc.alpha, kb, config, paths=()
        )

    if rc.path_source == "vector":
        survivor_order = sorted(vector_score, key=lambda o: (-vector_score[o], o))
    else:
        survivor_order = sorted(prelim, key=lambda o: (-prelim[o], o))
    survivors = survivor_order[: rc.rerank_k]

    anchors = _anchor_ids(cur, kb)
    raw_paths = enumerate_paths(kb, anchors, survivors, rc.max_path_len)
    if raw_paths:
        scores = path_scores(raw_paths, rc.rho)
        scored_paths = tuple(
            replace(p, cost=path_cost(p, rc.rho), score=s)
            for p, s in zip(raw_paths, scores)
        )
    else:
        scored_paths = ()

    survivor_set = set(survivors)
    object_score: dict[str, float] = {}
    path_score: dict[str, float] = {}
    paths_by_object: dict[str, tuple[ReasoningPath, ...]] = {}
    for oid in vector_score:
        through = tuple(p for p in scored_paths if oid in p.nodes)
        if through:
            ordered = sorted(through, key=lambda p: (-p.score, p.nodes))
            paths_by_object[oid] = tuple(ordered[: rc.paths_per_object])
        path_score[oid] = max((p.score for p in through), default=0.0)
        if oid in survivor_set and through:
            object_score[oid] = rerank_score(
                cur, goal, belief, kb.objects[oid], rc.alpha, kb, config, paths=through
            )
        else:
            object_score[oid] = prelim[oid]

    bv, bo, bp = rc.beta
    ranked = [
        RankedObject(
            object_id=oid,
            vector_score=vector_score[oid],
            object_score=object_score[oid],
            path_score=path_score[oid],
            fused_score=bv * vector_score[oid] + bo * object_score[oid] + bp * path_score[oid],
        )
        for oid in vector_score
    ]
    ranked.sort(key=lambda r: (-r.fused_score, r.object_id))
    return RetrievalResult(
        ranked=tuple(ranked), paths=paths_by_object, all_paths=scored_paths
    )


def load_kb(kb_dir: str | Path) -> KnowledgeBase:
    """Load objects.jsonl + edges.jsonl + manifest.json from a directory."""
    kb_dir = Path(kb_dir)
    manifest = json.loads((kb_dir / "manifest.json").read_text(encoding="utf-8"))
    config = retrieval_config_from_dict(manifest)
    objects = []
    with (kb_dir / "objects.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            objects.append(
                KnowledgeObject(
                    object_id=raw["object_id"],
                    kind=ObjectKind.parse(raw["kind"]),
                    fields=raw.get("fields", {}),
                    text=raw["text"],
                )
            )
    edges = []
    with (kb_dir / "edges.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            edges.append(
                KnowledgeEdge(
                    src=raw["src"],
                    dst=raw["dst"],
                    relation=raw["relation"],
                    cost=float(raw["cost"]),
                )
            )
    return KnowledgeBase(objects, edges, config)


def retrieval_config_from_dict(raw: Mapping[str, Any]) -> RetrievalConfig:
    base = RetrievalConfig()
    if raw.get("hash_name", HASH_NAME) != HASH_NAME:
        raise ValueError(f"unsupported hash: {raw.get('hash_name')!r}")
    return RetrievalConfig(
        dim=int(raw.get("dim", base.dim)),
        hash_seed=int(raw.get("hash_seed", base.hash_seed)),
        alpha=tuple(float(a) for a in raw.get("alpha", base.alpha)),
        beta=tuple(float(b) for b in raw.get("beta", base.beta)),
        rho=float(raw.get("rho", base.rho)),
        coarse_k=int(raw.get("coarse_k", base.coarse_k)),
        rerank_k=int(raw.get("rerank_k", base.rerank_k)),
        max_path_len=int(raw.get("max_path_len", base.max_path_len)),
        path_source=raw.get("path_source", base.path_source),
        paths_per_object=int(raw.get("paths_per_object", base.paths_per_object)),
    )


def chunk_profile(rc: RetrievalConfig) -> RetrievalConfig:
    """Coarse-cosine-only profile: fusion collapses to the vector score and
    path targets follow the vector ranking."""
    return replace(rc, beta=(1.0, 0.0, 0.0), path_source="vector")
