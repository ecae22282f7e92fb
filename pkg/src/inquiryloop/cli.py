"""Command-line entry point.

Subcommands: ``replay`` one script, ``bench-retrieval`` over the query points,
``evaluate`` the full four-policy pilot, ``validate-pack`` lint, ``serve`` the
HTTP session service, ``build-pack`` to regenerate the bundled data. Every
command is deterministic given (pack, kb, flags); ``--seed`` exists only for
explicitly randomized generators and changes nothing in the engine.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .evaluation import run_pilot, run_retrieval_benchmark
from .knowledge import chunk_profile, load_kb
from .model import to_plain
from .pack import load_pack, validate_pack
from .planner import PolicyKind, UnknownPolicyError
from .session import run_policy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

PORT_ENV = "INQUIRYLOOP_PORT"


class _UsageError(SystemExit):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage problems, not 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def bundled_data_dir(name: str) -> Path:
    return Path(resources.files("inquiryloop").joinpath("data", name))


def _resolve_pack_dir(arg: str | None) -> Path:
    return Path(arg) if arg else bundled_data_dir("pilot_pack")


def _resolve_kb_dir(arg: str | None) -> Path:
    return Path(arg) if arg else bundled_data_dir("kb")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(to_plain(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pack", help="scenario pack directory (default: bundled)")
    parser.add_argument("--kb", help="knowledge base directory (default: bundled)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized generators; engine output ignores it")
    parser.add_argument("--format", choices=("json", "table"), default="table")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="inquiryloop")
    sub = parser.add_subparsers(dest="command", required=True)

    p_replay = sub.add_parser("replay", help="run one script under one policy")
    _add_common(p_replay)
    p_replay.add_argument("--script", required=True)
    p_replay.add_argument("--policy", default="full_framework")
    p_replay.add_argument("--out", help="output directory for trace + record")

    p_bench = sub.add_parser("bench-retrieval", help="evaluate all query points")
    _add_common(p_bench)
    p_bench.add_argument("--k", type=int, default=5)
    p_bench.add_argument("--out")

    p_eval = sub.add_parser("evaluate", help="full four-policy pilot")
    _add_common(p_eval)
    p_eval.add_argument("--out")

    p_val = sub.add_parser("validate-pack", help="lint a scenario pack")
    _add_common(p_val)

    p_serve = sub.add_parser("serve", help="start the HTTP session service")
    _add_common(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int,
                         default=int(os.environ.get(PORT_ENV, "8234")))
    p_serve.add_argument("--trace-dir", help="append per-session traces here")

    p_build = sub.add_parser("build-pack", help="regenerate the bundled pack and kb")
    p_build.add_argument("--out", required=True, help="directory receiving pack/ and kb/")

    return parser


def cmd_replay(args) -> int:
    pack = load_pack(_resolve_pack_dir(args.pack))
    kb = load_kb(_resolve_kb_dir(args.kb))
    try:
        policy = PolicyKind.parse(args.policy)
    except UnknownPolicyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    script = pack.scripts.get(args.script)
    if script is None:
        print(f"error: pack has no script {args.script!r}", file=sys.stderr)
        return EXIT_VALIDATION
    result = run_policy(script, pack, kb, policy)
    payload = {
        "v": 1,
        "script_id": result.script_id,
        "scenario_id": result.scenario_id,
        "policy": result.policy.value,
        "status": result.status,
        "t_goal": result.t_goal,
        "actions": [to_plain(a) for a in result.actions],
        "traces": [t.to_dict() for t in result.traces],
        "trace_hashes": result.trace_hashes(),
    }
    if args.out:
        out = Path(args.out)
        _write_json(out / f"{args.script}.{policy.value}.trace.json", payload)
        _write_json(out / f"{args.script}.{policy.value}.record.json",
                    result.final_record.to_dict())
    else:
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_bench_retrieval(args) -> int:
    pack = load_pack(_resolve_pack_dir(args.pack))
    kb = load_kb(_resolve_kb_dir(args.kb))
    if not pack.queries:
        print("error: pack has no retrieval query points", file=sys.stderr)
        return EXIT_VALIDATION
    config = pack.engine_config()
    rows = [
        run_retrieval_benchmark(pack, kb, chunk_profile(kb.config), "Chunk-only RAG",
                                args.k, config),
        run_retrieval_benchmark(pack, kb, kb.config, "Hybrid Retrieval", args.k, config),
    ]
    payload = {"v": 1, "k": args.k, "rows": [r.to_dict() for r in rows]}
    if args.out:
        _write_json(Path(args.out), payload)
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        width = max(len(r.profile) for r in rows)
        print("Metric           " + "  ".join(r.profile.ljust(width) for r in rows))
        for label, attr, places in (
            (f"Recall@{args.k}", "recall_at_5", 3),
            (f"MRR@{args.k}", "mrr_at_5", 3),
            (f"nDCG@{args.k}", "ndcg_at_5", 3),
            ("Object hit rate", "object_hit_rate", 2),
            ("Path hit rate", "path_hit_rate", 2),
        ):
            cells = "  ".join(f"{getattr(r, attr):.{places}f}".ljust(width) for r in rows)
            print(f"{label:<17}{cells}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pack = load_pack(_resolve_pack_dir(args.pack))
    kb = load_kb(_resolve_kb_dir(args.kb))
    report = run_pilot(pack, kb)
    if args.out:
        _write_json(Path(args.out), report.to_dict())
    if args.format == "json":
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(report.text_report())
    return EXIT_VALIDATION if report.violations else EXIT_OK


def cmd_validate_pack(args) -> int:
    pack_dir = _resolve_pack_dir(args.pack)
    try:
        pack = load_pack(pack_dir)
        kb = load_kb(_resolve_kb_dir(args.kb)) if args.kb or not args.pack else None
    except (ValueError, KeyError, OSError) as exc:
        print(f"pack failed to load: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    problems = validate_pack(pack, kb)
    if problems:
        for p in problems:
            print(f"problem: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"pack {pack.pack_id} is valid "
          f"({len(pack.scripts)} scripts, {len(pack.queries)} query points)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    pack = load_pack(_resolve_pack_dir(args.pack))
    kb = load_kb(_resolve_kb_dir(args.kb))
    app = create_app(pack, kb, trace_dir=args.trace_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_build_pack(args) -> int:
    from .packgen import build_bundled_data

    out = Path(args.out)
    build_bundled_data(out)
    print(f"wrote pack and kb under {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handlers = {
        "replay": cmd_replay,
        "bench-retrieval": cmd_bench_retrieval,
        "evaluate": cmd_evaluate,
        "validate-pack": cmd_validate_pack,
        "serve": cmd_serve,
        "build-pack": cmd_build_pack,
    }
    try:
        return handlers[args.command](args)
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # surface anything unexpected as a runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
