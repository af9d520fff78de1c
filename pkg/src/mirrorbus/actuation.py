"""Embodiment simulation: the pan/tilt head and the on-screen agent face.

The head enforces hard position limits at every instant (the cardinal
safety invariant) and a finite slew rate; commands reach it through a
FIFO delay line standing in for the wireless link. The agent face is a
clamped gaze offset plus the current expression blend.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .bus import Bus, Subscription
from .messages import EcaFaceState, EcaTarget, ExpressionBlend, HeadCommand, HeadState

NEUTRAL = ExpressionBlend()


@dataclass(frozen=True)
class HeadLimits:
    pan_max: float = 35.0
    tilt_max: float = 23.0
    rate_max: float = 60.0  # degrees/second

    def __post_init__(self):
        if self.pan_max <= 0 or self.tilt_max <= 0 or self.rate_max <= 0:
            raise ValueError("head limits must be positive")


@dataclass(frozen=True)
class LatencyConfig:
    delay: float = 0.005

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")


@dataclass(frozen=True)
class EcaClamp:
    pan: float = 15.0
    tilt: float = 10.0

    def __post_init__(self):
        if self.pan <= 0 or self.tilt <= 0:
            raise ValueError("agent gaze clamp must be positive")


def _clip(value: float, bound: float) -> float:
    return min(max(value, -bound), bound)


def clamp(cmd: HeadCommand, limits: HeadLimits) -> HeadCommand:
    """Clip each axis to its position limit; idempotent and monotone."""
    return HeadCommand(pan=_clip(cmd.pan, limits.pan_max), tilt=_clip(cmd.tilt, limits.tilt_max))


def step(state: HeadState, cmd: HeadCommand, dt: float, limits: HeadLimits) -> HeadState:
    """Advance the head by one interval toward the clamped target.

    Each axis moves at most rate_max * dt and lands exactly on the target
    once within reach. The result is always inside the limits.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    target = clamp(cmd, limits)
    max_move = limits.rate_max * dt
    pan = state.pan + _clip(target.pan - state.pan, max_move)
    tilt = state.tilt + _clip(target.tilt - state.tilt, max_move)
    # Belt and braces: moving toward a clamped target cannot exit the box,
    # but keep the invariant independent of float edge cases.
    pan = _clip(pan, limits.pan_max)
    tilt = _clip(tilt, limits.tilt_max)
    return HeadState(pan=pan, tilt=tilt, sim_time=state.sim_time + dt)


class DelayLine:
    """FIFO re-emission of items `delay` seconds later; order preserved."""

    def __init__(self, latency: LatencyConfig):
        self.delay = latency.delay
        self._heap: list[tuple[float, int, object]] = []
        self._order = 0

    def push(self, sent_at: float, item) -> float:
        due = sent_at + self.delay
        heapq.heappush(self._heap, (due, self._order, item))
        self._order += 1
        return due

    def pop_due(self, now: float) -> list:
        out = []
        while self._heap and self._heap[0][0] <= now:
            _, _, item = heapq.heappop(self._heap)
            out.append(item)
        return out

    def __len__(self) -> int:
        return len(self._heap)


def delay_line(stream, latency: LatencyConfig) -> list[tuple[float, object]]:
    """Op form over a finished stream of (sent_at, item) pairs."""
    return [(t + latency.delay, item) for t, item in stream]


def compose_eca(
    gaze: tuple[float, float] | None,
    blend: ExpressionBlend,
    sim_time: float,
    clamp_cfg: EcaClamp,
) -> EcaFaceState:
    """Final agent face: absent gaze recenters; offsets saturate at the
    screen-plausibility clamp; the blend passes through."""
    if gaze is None:
        pan, tilt = 0.0, 0.0
    else:
        pan = _clip(gaze[0], clamp_cfg.pan)
        tilt = _clip(gaze[1], clamp_cfg.tilt)
    return EcaFaceState(gaze_pan=pan, gaze_tilt=tilt, blend=blend, sim_time=sim_time)


class HeadStage:
    """Per-tick head task: latest due command wins; state published every tick."""

    def __init__(
        self,
        bus: Bus,
        commands: Subscription,
        state_topic: str,
        limits: HeadLimits,
        latency: LatencyConfig,
    ):
        self.bus = bus
        self.commands = commands
        self.state_topic = state_topic
        self.limits = limits
        self.line = DelayLine(latency)
        self.state = HeadState(pan=0.0, tilt=0.0, sim_time=0.0)
        self.target: HeadCommand | None = None

    def on_tick(self, now: float) -> None:
        for env in self.commands.drain():
            self.line.push(env.sim_time, env.payload)
        for cmd in self.line.pop_due(now):
            self.target = cmd
        dt = now - self.state.sim_time
        if dt > 0 and self.target is not None:
            self.state = step(self.state, self.target, dt, self.limits)
        else:
            self.state = HeadState(pan=self.state.pan, tilt=self.state.tilt, sim_time=now)
        self.bus.publish(self.state_topic, self.state)


class EcaStage:
    """Per-tick agent task: compose and publish the rendered face state."""

    def __init__(
        self,
        bus: Bus,
        targets: Subscription,
        state_topic: str,
        clamp_cfg: EcaClamp,
        latency: LatencyConfig,
    ):
        self.bus = bus
        self.targets = targets
        self.state_topic = state_topic
        self.clamp_cfg = clamp_cfg
        self.line = DelayLine(latency)
        self.target = EcaTarget(gaze=None, blend=NEUTRAL)

    def on_tick(self, now: float) -> None:
        for env in self.targets.drain():
            self.line.push(env.sim_time, env.payload)
        for target in self.line.pop_due(now):
            self.target = target
        self.bus.publish(
            self.state_topic,
            compose_eca(self.target.gaze, self.target.blend, now, self.clamp_cfg),
        )
