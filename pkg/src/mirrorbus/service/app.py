"""FastAPI service wrapping the simulation core.

Batch endpoints (runs/audits/replays) execute deterministic simulations on
the server and write files server-side. The live session is a single
pipeline whose frames arrive from bridge clients; it advances either with
the wall clock (`serve`) or via explicit tick requests (tests, scripted
drivers). The WebSocket endpoint speaks the bus bridge protocol verbatim.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .. import __version__
from ..bridge import BridgeCore, frame_to_text
from ..config import Config, ConfigError, config_to_dict, load_config, merge_overrides
from ..harness import audit_log, replay_trace, run_experiment
from ..interlocutor import BASE_TEMPLATE_SCALE, FACE_TEMPLATE, TEMPLATE_VERSION, TraceError
from ..logio import LogError
from ..pipeline import Pipeline, fresh_pipeline
from .models import (
    AuditRequest,
    AuditResponse,
    FaceTemplateResponse,
    HealthResponse,
    ReplayRequest,
    ReplayResponse,
    RunRequest,
    RunResponse,
    SessionStats,
    TickRequest,
)

log = logging.getLogger("mirrorbus.service")


class LiveSession:
    """One live pipeline plus its bridge; frames come from clients."""

    def __init__(self, config: Config):
        self.config = config
        self.pipeline: Pipeline = fresh_pipeline(config, config.mimicry.mode, source=None)
        self.bridge = BridgeCore(self.pipeline.bus, delay=config.actuation.latency.delay)

    def step_ticks(self, n: int) -> None:
        for _ in range(n):
            self.pipeline.step()
            self.bridge.flush()

    def stats(self) -> dict:
        bus = self.pipeline.bus
        return {
            "sim_time": bus.now,
            "tick_index": self.pipeline.tick_index,
            "clients": self.bridge.client_count,
            "topics": {name: bus.last_seq(name) for name in bus.topics()},
        }


async def _wall_ticker(session: LiveSession) -> None:
    loop = asyncio.get_running_loop()
    tick = session.pipeline.tick
    t0 = loop.time()
    k = 1
    while True:
        deadline = t0 + k * tick
        delay = deadline - loop.time()
        if delay > 0:
            await asyncio.sleep(delay)
        try:
            session.step_ticks(1)
        except Exception:
            log.exception("live tick %d failed; session halted", k)
            raise
        k += 1


def _resolve_config(config_file: str | None, overrides: dict | None) -> Config:
    cfg = load_config(config_file)
    return merge_overrides(cfg, overrides)


def create_app(
    config: Config | None = None,
    live: bool = True,
    tick_mode: str = "wall",
) -> FastAPI:
    if tick_mode not in ("wall", "manual"):
        raise ValueError(f"tick_mode must be wall|manual, got {tick_mode!r}")
    base_config = config or Config()

    ticker_task: list[asyncio.Task] = []

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        if live and tick_mode == "wall":
            ticker_task.append(asyncio.create_task(_wall_ticker(app.state.session)))
        yield
        for task in ticker_task:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="mirrorbus", version=__version__, lifespan=lifespan)
    app.state.config = base_config
    app.state.session = LiveSession(base_config) if live else None
    app.state.tick_mode = tick_mode

    def session_or_404() -> LiveSession:
        if app.state.session is None:
            raise HTTPException(status_code=404, detail="no live session on this instance")
        return app.state.session

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            version=__version__, live=app.state.session is not None, tick_mode=tick_mode
        )

    @app.get("/config/default")
    def default_config():
        return config_to_dict(Config())

    @app.get("/assets/face-template", response_model=FaceTemplateResponse)
    def face_template():
        return FaceTemplateResponse(
            version=TEMPLATE_VERSION,
            base_scale=BASE_TEMPLATE_SCALE,
            points=list(FACE_TEMPLATE),
        )

    @app.post("/runs", response_model=RunResponse)
    def runs(req: RunRequest):
        try:
            cfg = _resolve_config(req.config_file, req.overrides)
            report = run_experiment(req.experiment, req.seed, cfg, req.out_dir)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return RunResponse(**report)

    @app.post("/audits", response_model=AuditResponse)
    def audits(req: AuditRequest):
        try:
            result = audit_log(req.path)
        except (LogError, ConfigError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return AuditResponse(
            ok=result.ok,
            violations=result.violations,
            metrics=result.metrics,
            experiment=result.header.get("experiment"),
            condition=result.header.get("condition"),
        )

    @app.post("/replays", response_model=ReplayResponse)
    def replays(req: ReplayRequest):
        try:
            cfg = _resolve_config(req.config_file, req.overrides)
            info = replay_trace(
                req.trace, cfg, req.out,
                experiment=req.experiment, condition=req.condition, seed=req.seed,
            )
        except (ConfigError, TraceError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return ReplayResponse(**info)

    # Session endpoints are async so they run on the event loop itself,
    # serialized with bridge frames and the wall ticker; threadpool access
    # would race the asyncio outbound queues.
    @app.get("/session/stats", response_model=SessionStats)
    async def session_stats():
        return SessionStats(**session_or_404().stats())

    @app.post("/session/tick", response_model=SessionStats)
    async def session_tick(req: TickRequest):
        if tick_mode != "manual":
            raise HTTPException(status_code=409, detail="manual ticking requires tick_mode=manual")
        session = session_or_404()
        session.step_ticks(req.ticks)
        return SessionStats(**session.stats())

    @app.websocket("/bridge")
    async def bridge_endpoint(ws: WebSocket):
        session = app.state.session
        if session is None:
            await ws.close(code=1008)
            return
        await ws.accept()
        outbound: asyncio.Queue = asyncio.Queue()
        cid = session.bridge.register(outbound.put_nowait)

        async def sender():
            while True:
                frame = await outbound.get()
                await ws.send_text(frame_to_text(frame))

        sender_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                session.bridge.handle_text(cid, text)
                session.bridge.flush()
        except WebSocketDisconnect:
            pass
        finally:
            sender_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender_task
            session.bridge.unregister(cid)

    return app
