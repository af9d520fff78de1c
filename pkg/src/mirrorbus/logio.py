"""JSONL run logs: one header line, then one envelope per line.

Envelope lines are sorted by (sim_time, topic, seq) and serialized with
sorted keys and repr-exact floats, so identical runs produce byte-identical
files and determinism checks can compare bytes directly. The header carries
the effective config so the audit tool is self-contained.
"""

from __future__ import annotations

import json
from pathlib import Path

from .bus import Envelope
from .messages import decode_message, encode_message, kind_of

LOG_FORMAT = "mirrorbus-log"
LOG_VERSION = 1


class LogError(Exception):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def make_header(
    *,
    experiment: str | None,
    condition: int | None,
    mode_dict: dict,
    seed: int,
    duration: float,
    config_dict: dict,
) -> dict:
    return {
        "format": LOG_FORMAT,
        "version": LOG_VERSION,
        "experiment": experiment,
        "condition": condition,
        "mode": mode_dict,
        "seed": seed,
        "duration": duration,
        "config": config_dict,
    }


def envelope_to_dict(env: Envelope) -> dict:
    return {
        "topic": env.topic,
        "seq": env.seq,
        "sim_time": env.sim_time,
        "kind": kind_of(env.payload),
        "msg": encode_message(env.payload),
    }


def sort_key(env: Envelope):
    return (env.sim_time, env.topic, env.seq)


def write_log(path, header: dict, envelopes: list[Envelope]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(dumps(header) + "\n")
        for env in sorted(envelopes, key=sort_key):
            fh.write(dumps(envelope_to_dict(env)) + "\n")


def read_log(path) -> tuple[dict, list[Envelope]]:
    path = Path(path)
    if not path.exists():
        raise LogError(f"log file not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise LogError(f"{path}: empty log")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise LogError(f"{path}:1: bad header: {exc.msg}") from None
    if not isinstance(header, dict) or header.get("format") != LOG_FORMAT:
        raise LogError(f"{path}: not a mirrorbus log")
    if header.get("version") != LOG_VERSION:
        raise LogError(f"{path}: unsupported log version {header.get('version')}")
    envelopes: list[Envelope] = []
    for i, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            payload = decode_message(rec["kind"], rec["msg"])
            envelopes.append(
                Envelope(
                    topic=rec["topic"],
                    seq=int(rec["seq"]),
                    sim_time=float(rec["sim_time"]),
                    payload=payload,
                )
            )
        except Exception as exc:
            raise LogError(f"{path}:{i}: {exc}") from None
    return header, envelopes
