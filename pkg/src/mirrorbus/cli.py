"""Command-line interface.

A thin HTTP client over the service: by default requests run against an
in-process app instance (no sockets, same determinism), or against a
remote instance with --url. `serve` starts the live service under uvicorn.

Exit codes: 0 success, 1 invariant violation detected, 2 config error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .config import ConfigError, load_config


def _in_process_request(method: str, path: str, body: dict | None) -> httpx.Response:
    from .service import create_app

    app = create_app(live=False)

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://mirrorbus") as client:
            return await client.request(method, path, json=body, timeout=None)

    return asyncio.run(go())


def _request(url: str | None, method: str, path: str, body: dict | None) -> dict:
    if url is None:
        resp = _in_process_request(method, path, body)
    else:
        resp = httpx.request(method, url.rstrip("/") + path, json=body, timeout=None)
    if resp.status_code == 400:
        raise ConfigError(resp.json().get("detail", "bad request"))
    resp.raise_for_status()
    return resp.json()


def _print(data: dict) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def cmd_run(args) -> int:
    body = {
        "experiment": args.experiment,
        "seed": args.seed,
        "out_dir": args.out,
        "config_file": args.config,
    }
    report = _request(args.url, "POST", "/runs", body)
    _print(report)
    return 0


def cmd_audit(args) -> int:
    result = _request(args.url, "POST", "/audits", {"path": args.logfile})
    _print(result)
    if not result["ok"]:
        print(f"FAIL: {len(result['violations'])} invariant violation(s)", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    body = {
        "trace": args.trace,
        "out": args.out,
        "experiment": args.experiment,
        "condition": args.condition,
        "seed": args.seed,
        "config_file": args.config,
    }
    result = _request(args.url, "POST", "/replays", body)
    _print(result)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    app = create_app(config=config, live=True, tick_mode=args.tick_mode)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit:
        # uvicorn exits nonzero itself when it cannot start (port in use etc.)
        print(f"config error: cannot serve on {args.host}:{args.port}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mirrorbus")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a pilot experiment deterministically")
    run.add_argument("--experiment", required=True, choices=["exp1", "exp2", "exp3"])
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--config", default=None, help="YAML config file")
    run.add_argument("--out", required=True, help="output directory for logs/traces/report")
    run.add_argument("--url", default=None, help="remote service URL (default: in-process)")
    run.set_defaults(func=cmd_run)

    serve = sub.add_parser("serve", help="start the live service with bridge endpoint")
    serve.add_argument("--port", type=int, default=8008)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--config", default=None)
    serve.add_argument("--tick-mode", choices=["wall", "manual"], default="wall")
    serve.set_defaults(func=cmd_serve)

    audit = sub.add_parser("audit", help="re-check invariants and recompute metrics from a log")
    audit.add_argument("logfile")
    audit.add_argument("--url", default=None)
    audit.set_defaults(func=cmd_audit)

    replay = sub.add_parser("replay", help="re-run a recorded interlocutor trace")
    replay.add_argument("trace")
    replay.add_argument("--out", required=True, help="output log file")
    replay.add_argument("--experiment", choices=["exp1", "exp2", "exp3"], default=None)
    replay.add_argument("--condition", type=int, default=None)
    replay.add_argument("--seed", type=int, default=None)
    replay.add_argument("--config", default=None)
    replay.add_argument("--url", default=None)
    replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
