"""Command-line entry point.

``serve`` and ``stdio`` run the control service; the ``client`` subcommands
are a thin HTTP client for a running service; ``tracegen``, ``bench`` and
``check`` are local tools.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench as bench_mod
from . import tracegen as tracegen_mod
from .engine import MonitorSession, run_virtual
from .errors import AdaptRvError
from .psp import parse_requirement
from .service.manager import ServiceConfig, SessionManager
from .service.protocol import parse_adaptation, stdio_loop


def _load_pattern(spec: str):
    """`spec` is a file of requirement text when such a file exists, else the
    requirement itself."""
    path = Path(spec)
    if path.exists():
        return parse_requirement(path.read_text().strip())
    return parse_requirement(spec)


def _add_service_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (host, port, time_mode, log_level)")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--time-mode", choices=["virtual", "wall"], default=None)
    p.add_argument("--log-level", default=None)


def _service_config(args) -> ServiceConfig:
    return ServiceConfig.load(
        args.config,
        host=args.host,
        port=args.port,
        time_mode=args.time_mode,
        log_level=args.log_level,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptrv")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP control service")
    _add_service_args(serve)

    stdio = sub.add_parser("stdio", help="serve the line protocol on stdin/stdout")
    _add_service_args(stdio)

    client = sub.add_parser("client", help="talk to a running service")
    client.add_argument("--url", default="http://127.0.0.1:8000")
    csub = client.add_subparsers(dest="client_command", required=True)
    c_load = csub.add_parser("load")
    c_load.add_argument("requirement")
    c_event = csub.add_parser("event")
    c_event.add_argument("timestamp_ms", type=int)
    c_event.add_argument("event_type")
    c_event.add_argument("--session", type=int, default=None)
    c_adapt = csub.add_parser("adapt")
    c_adapt.add_argument("session", type=int)
    c_adapt.add_argument("rule", nargs="+", help="e.g. ADD_RESPONSE glucose_reply 2000")
    c_state = csub.add_parser("state")
    c_state.add_argument("session", type=int)
    c_verdict = csub.add_parser("verdict")
    c_verdict.add_argument("session", type=int)
    c_save = csub.add_parser("save")
    c_save.add_argument("session", type=int)
    c_save.add_argument("path")
    c_delete = csub.add_parser("delete")
    c_delete.add_argument("session", type=int)

    tg = sub.add_parser("tracegen", help="generate an oracle-labeled trace")
    tg.add_argument("--pattern", required=True, help="requirement text or a file containing it")
    tg.add_argument("--label", choices=["sat", "viol"], required=True)
    tg.add_argument("--seed", type=int, default=0)
    tg.add_argument("--length", type=int, default=60)
    tg.add_argument("--out", required=True)

    be = sub.add_parser("bench", help="run the evaluation harness")
    be.add_argument("query", choices=["rq1", "rq2", "rq3", "bsn"])
    be.add_argument("--json", dest="json_out", help="also write the report as JSON")
    be.add_argument("--rounds", type=int, default=10, help="rq3 rounds")
    be.add_argument("--changes", type=int, default=3000, help="rq3 changes per round")

    ck = sub.add_parser("check", help="verify a trace file offline")
    ck.add_argument("--pattern", required=True)
    ck.add_argument("--trace", required=True)

    return parser


def _run_client(args) -> int:
    import httpx

    base = args.url.rstrip("/")
    with httpx.Client(base_url=base, timeout=30.0) as http:
        cmd = args.client_command
        if cmd == "load":
            r = http.post("/sessions", json={"requirement": args.requirement})
        elif cmd == "event":
            if args.session is None:
                r = http.post(
                    "/events",
                    json={"event_type": args.event_type, "timestamp_ms": args.timestamp_ms},
                )
            else:
                r = http.post(
                    f"/sessions/{args.session}/events",
                    json={"event_type": args.event_type, "timestamp_ms": args.timestamp_ms},
                )
        elif cmd == "adapt":
            rule = parse_adaptation(args.rule)
            body = {
                "kind": rule.kind.value,
                "new_bound_ms": rule.new_bound_ms,
                "which": rule.which if rule.kind.value == "update_time_guard" else None,
                "old_event": rule.old_event,
                "new_event": rule.new_event,
                "event": rule.event,
                "bound_ms": rule.bound_ms,
                "index": rule.index,
            }
            r = http.post(f"/sessions/{args.session}/adaptations", json=body)
        elif cmd == "state":
            r = http.get(f"/sessions/{args.session}")
        elif cmd == "verdict":
            r = http.get(f"/sessions/{args.session}")
            if r.is_success:
                doc = r.json()
                print(
                    json.dumps(
                        {
                            "id": doc["id"],
                            "verdict": doc["verdict"],
                            "first_violation": doc["first_violation"],
                        },
                        indent=2,
                    )
                )
                return 0
        elif cmd == "save":
            r = http.post(f"/sessions/{args.session}/save", json={"path": args.path})
        elif cmd == "delete":
            r = http.delete(f"/sessions/{args.session}")
        else:  # pragma: no cover
            raise SystemExit(2)
        print(json.dumps(r.json(), indent=2, ensure_ascii=False))
        return 0 if r.is_success else 1


def _run_bench(args) -> int:
    if args.query == "rq1":
        report = bench_mod.run_rq1()
        print(bench_mod.format_rq1(report))
    elif args.query == "rq2":
        report = bench_mod.run_rq2()
        print(bench_mod.format_rq2(report))
    elif args.query == "rq3":
        report = bench_mod.run_rq3(rounds=args.rounds, changes=args.changes)
        print(bench_mod.format_rq3(report))
    else:
        report = bench_mod.run_bsn_scenario()
        print(bench_mod.format_bsn(report))
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report, indent=2, ensure_ascii=False))
    ok = report.get("passed", True) and report.get("all_isomorphic", True)
    if args.query == "rq2":
        ok = report["correct"] == report["total"]
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            import uvicorn

            from .service.api import create_app

            config = _service_config(args)
            logging.basicConfig(level=config.log_level.upper())
            app = create_app(config=config)
            uvicorn.run(app, host=config.host, port=config.port, log_level=config.log_level)
            return 0
        if args.command == "stdio":
            config = _service_config(args)
            logging.basicConfig(level=config.log_level.upper())
            stdio_loop(SessionManager(config))
            return 0
        if args.command == "client":
            return _run_client(args)
        if args.command == "tracegen":
            pattern = _load_pattern(args.pattern)
            label = tracegen_mod.SATISFYING if args.label == "sat" else tracegen_mod.VIOLATING
            trace = tracegen_mod.generate(
                pattern, label, seed=args.seed, approx_length=args.length
            )
            tracegen_mod.write_trace(trace, args.out)
            print(f"wrote {len(trace)} events to {args.out}")
            return 0
        if args.command == "bench":
            return _run_bench(args)
        if args.command == "check":
            pattern = _load_pattern(args.pattern)
            trace = tracegen_mod.read_trace(args.trace)
            result = run_virtual(MonitorSession.for_pattern(pattern), trace)
            print(f"verdict: {result.verdict.value}")
            if result.first_violation is not None:
                print(f"first violation at: {result.first_violation}")
            return 0 if result.verdict.value == "Running" else 3
    except AdaptRvError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
