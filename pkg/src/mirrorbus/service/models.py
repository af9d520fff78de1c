"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
    name: str = "mirrorbus"
    version: str
    live: bool
    tick_mode: Literal["wall", "manual"]


class RunRequest(BaseModel):
    experiment: Literal["exp1", "exp2", "exp3"]
    seed: int = 0
    out_dir: str
    config_file: str | None = None
    overrides: dict[str, Any] | None = None


class ConditionReport(BaseModel):
    condition: int
    mode: dict[str, Any]
    duration: float
    log: str
    trace: str
    metrics: dict[str, float | None]


class RunResponse(BaseModel):
    experiment: str
    seed: int
    note: str
    out_dir: str
    conditions: list[ConditionReport]


class AuditRequest(BaseModel):
    path: str


class AuditResponse(BaseModel):
    ok: bool
    violations: list[str]
    metrics: dict[str, float | None]
    experiment: str | None = None
    condition: int | None = None


class ReplayRequest(BaseModel):
    trace: str
    out: str
    experiment: Literal["exp1", "exp2", "exp3"] | None = None
    condition: int | None = None
    seed: int | None = None
    config_file: str | None = None
    overrides: dict[str, Any] | None = None


class ReplayResponse(BaseModel):
    log: str
    ticks: int
    metrics: dict[str, float | None]


class TickRequest(BaseModel):
    ticks: int = Field(default=1, ge=1, le=100_000)


class SessionStats(BaseModel):
    sim_time: float
    tick_index: int
    clients: int
    topics: dict[str, int]


class FaceTemplateResponse(BaseModel):
    version: int
    base_scale: float
    points: list[tuple[float, float]]
