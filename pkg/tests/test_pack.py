from __future__ import annotations

import json
from pathlib import Path

import pytest

from inquiryloop.cli import bundled_data_dir
from inquiryloop.knowledge import load_kb
from inquiryloop.pack import load_pack, validate_pack
from inquiryloop.packgen import build_bundled_data


@pytest.fixture(scope="module")
def pack():
    return load_pack(bundled_data_dir("pilot_pack"))


@pytest.fixture(scope="module")
def kb():
    return load_kb(bundled_data_dir("kb"))


def test_bundled_pack_validates_clean(pack, kb):
    assert validate_pack(pack, kb) == []


def test_bundled_pack_counts(pack):
    counts = pack.manifest["counts"]
    assert counts["scripts"] == len(pack.scripts) == 10
    assert counts["gold_items"] == sum(len(g.items) for g in pack.gold.values()) == 180
    assert counts["risk_items"] == sum(len(g.risk_items()) for g in pack.gold.values()) == 60
    assert counts["structural_slots"] == \
        sum(len(g.required_slots) for g in pack.gold.values()) == 140
    assert counts["query_points"] == len(pack.queries) == 300


def test_risk_enrichment_documented(pack):
    notes = pack.manifest["notes"]
    assert notes["risk_item_share"] == "60/180"
    risk_queries = sum(1 for q in pack.queries if q.risk_critical)
    assert notes["query_risk_share"] == f"{risk_queries}/300"


def test_scenario_shapes(pack):
    assert len(pack.scenarios) == 10
    for scenario in pack.scenarios.values():
        assert len(scenario.hypotheses) == 3
        assert scenario.goal.risk_rules
        assert scenario.checklist
        assert abs(sum(h.prior for h in scenario.hypotheses) - 1.0) < 1e-9


def test_scripts_have_monotone_turns_and_valid_spans(pack):
    for script in pack.scripts.values():
        prev = -1
        for turn in script.turns:
            assert turn.turn_index > prev
            prev = turn.turn_index
            for seed in turn.gold_events or ():
                assert 0 <= seed.char_start < seed.char_end <= len(turn.text)


def test_manifest_count_mismatch_detected(pack, tmp_path):
    build_bundled_data(tmp_path)
    manifest_path = tmp_path / "pilot_pack" / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    manifest["counts"]["gold_items"] = 9999
    manifest_path.write_text(json.dumps(manifest))
    broken = load_pack(tmp_path / "pilot_pack")
    problems = validate_pack(broken)
    assert any("gold_items" in p for p in problems)


def test_generator_is_deterministic(tmp_path):
    build_bundled_data(tmp_path / "a")
    build_bundled_data(tmp_path / "b")
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_generator_matches_bundled_data(tmp_path):
    build_bundled_data(tmp_path)
    bundled_root = bundled_data_dir("pilot_pack").parent
    for rel in sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*") if p.is_file()):
        assert (tmp_path / rel).read_bytes() == (Path(bundled_root) / rel).read_bytes(), rel


def test_kb_manifest_pins_embedding_scheme(kb):
    assert kb.config.dim == 256
    assert kb.config.hash_name == "blake2b64"
    assert sum(kb.config.alpha) == pytest.approx(1.0)
    assert sum(kb.config.beta) == pytest.approx(1.0)


def test_queries_reference_known_objects(pack, kb):
    for q in pack.queries:
        assert q.gold_objects
        for oid in q.gold_objects:
            assert oid in kb.objects
        assert q.gold_paths
