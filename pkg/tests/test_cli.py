from __future__ import annotations

import json
from pathlib import Path

from inquiryloop.cli import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from inquiryloop.packgen import build_bundled_data


def test_usage_error_exit_code(capsys):
    assert main(["replay"]) == EXIT_USAGE  # missing --script
    assert main([]) == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE


def test_replay_writes_deterministic_outputs(tmp_path, capsys):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    for out in (out1, out2):
        assert main(["replay", "--script", "chest_01", "--policy", "full_framework",
                     "--out", str(out)]) == EXIT_OK
    name = "chest_01.full_framework.trace.json"
    assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    record = "chest_01.full_framework.record.json"
    assert (out1 / record).read_bytes() == (out2 / record).read_bytes()


def test_replay_unknown_policy_is_usage_error(tmp_path):
    assert main(["replay", "--script", "chest_01", "--policy", "wild",
                 "--out", str(tmp_path)]) == EXIT_USAGE


def test_replay_unknown_script_is_validation_error(tmp_path):
    assert main(["replay", "--script", "missing", "--out", str(tmp_path)]) == EXIT_VALIDATION


def test_replay_direct_generation_has_no_actions(tmp_path):
    assert main(["replay", "--script", "chest_01", "--policy", "direct_generation",
                 "--out", str(tmp_path)]) == EXIT_OK
    payload = json.loads((tmp_path / "chest_01.direct_generation.trace.json").read_text())
    assert payload["actions"] == []
    assert all(t["chosen_action_id"] is None for t in payload["traces"])


def test_validate_pack_bundled_clean(capsys):
    assert main(["validate-pack"]) == EXIT_OK
    assert "is valid" in capsys.readouterr().out


def test_validate_pack_detects_count_mismatch(tmp_path, capsys):
    build_bundled_data(tmp_path)
    manifest_path = tmp_path / "pilot_pack" / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    manifest["counts"]["query_points"] = 7
    manifest_path.write_text(json.dumps(manifest))
    assert main(["validate-pack", "--pack", str(tmp_path / "pilot_pack"),
                 "--kb", str(tmp_path / "kb")]) == EXIT_VALIDATION


def test_bench_retrieval_empty_query_set_is_error(tmp_path):
    build_bundled_data(tmp_path)
    (tmp_path / "pilot_pack" / "queries.jsonl").write_text("")
    manifest_path = tmp_path / "pilot_pack" / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    manifest["counts"]["query_points"] = 0
    manifest_path.write_text(json.dumps(manifest))
    assert main(["bench-retrieval", "--pack", str(tmp_path / "pilot_pack"),
                 "--kb", str(tmp_path / "kb")]) == EXIT_VALIDATION


def test_bench_retrieval_two_rows(tmp_path, capsys):
    out = tmp_path / "bench.json"
    assert main(["bench-retrieval", "--out", str(out), "--format", "json"]) == EXIT_OK
    payload = json.loads(out.read_text())
    profiles = [row["profile"] for row in payload["rows"]]
    assert profiles == ["Chunk-only RAG", "Hybrid Retrieval"]
    for row in payload["rows"]:
        assert row["queries"] == 300


def test_bench_retrieval_k_flag_changes_cutoff(tmp_path):
    out5, out3 = tmp_path / "k5.json", tmp_path / "k3.json"
    assert main(["bench-retrieval", "--out", str(out5), "--k", "5"]) == EXIT_OK
    assert main(["bench-retrieval", "--out", str(out3), "--k", "3"]) == EXIT_OK
    r5 = json.loads(out5.read_text())["rows"][1]
    r3 = json.loads(out3.read_text())["rows"][1]
    assert r3["recall_hits"] <= r5["recall_hits"]


def test_evaluate_report_shape(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["evaluate", "--out", str(out), "--format", "table"])
    assert code == EXIT_OK  # bundled pack satisfies its own thresholds
    stdout = capsys.readouterr().out
    payload = json.loads(out.read_text())
    methods = [row["policy"] for row in payload["methods"]]
    assert methods == ["direct_generation", "chunk_rag", "rule_template", "full_framework"]
    baseline_a = payload["methods"][0]
    assert baseline_a["redundancy"]["pct"] is None
    assert baseline_a["t_goal"]["mean"] is None
    # table renders the N/A cells on the baseline row
    row_a = next(line for line in stdout.splitlines() if "Direct generation" in line)
    assert row_a.count("N/A") == 2
    assert "Recall@5" in stdout and "Path hit rate" in stdout
