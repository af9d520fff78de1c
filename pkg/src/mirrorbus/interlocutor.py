"""The human side of the interaction.

Produces ground-truth interlocutor states from scripted scenarios and
synthesizes the 68-landmark frames a head-mounted camera would see, with a
deliberately crude geometric model: only the face center and the yaw gate
matter downstream. Also owns the trace format used for deterministic
record/replay.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .bus import Bus, Subscription
from .messages import (
    EmotionLabel,
    HeadState,
    InterlocutorState,
    LandmarkFrame,
    decode_message,
    encode_message,
)
from .perception import CameraModel

DEFAULT_DEPTH = 0.6  # meters; the scripted standing distance

# --- canonical 68-point face template --------------------------------------
#
# Versioned constant. Coordinates are integers on a 1/128 grid, which makes
# them exact binary floats; the layout is built so that both the centroid
# and the bounding-box midpoint are exactly (0, 0) and the extremes are
# symmetric (x in [-56, 56], y in [-56, 56], y grows downward in image
# space). Anatomical niceness is irrelevant downstream: perception only
# consumes the count and the box center.

TEMPLATE_VERSION = 1

_JAW = [
    (-56, -12), (-54, 4), (-50, 18), (-44, 30), (-36, 40), (-26, 48), (-16, 53),
    (-8, 55), (0, 56), (8, 55), (16, 53), (26, 48), (36, 40), (44, 30), (50, 18),
    (54, 4), (56, -12),
]
_BROWS = [
    (-46, -46), (-38, -52), (-30, -56), (-22, -52), (-14, -48),
    (14, -48), (22, -52), (30, -56), (38, -52), (46, -46),
]
_NOSE = [
    (0, -30), (0, -20), (0, -10), (0, -2),
    (-10, 2), (-5, 4), (0, 6), (5, 4), (10, 2),
]
_EYES = [
    (-38, -35), (-32, -39), (-24, -39), (-18, -35), (-24, -31), (-32, -31),
    (18, -35), (24, -39), (32, -39), (38, -35), (32, -31), (24, -31),
]
_MOUTH = [
    (-22, 20), (-14, 16), (-6, 14), (0, 15), (6, 14), (14, 16), (22, 20),
    (14, 28), (6, 32), (0, 33), (-6, 32), (-14, 28),
    (-16, 21), (-6, 19), (0, 20), (6, 19), (16, 21), (6, 25), (0, 26), (-6, 25),
]

FACE_TEMPLATE: tuple[tuple[float, float], ...] = tuple(
    (x / 128.0, y / 128.0) for x, y in (_JAW + _BROWS + _NOSE + _EYES + _MOUTH)
)

# Template units -> normalized image units at the default depth; the face
# then scales inversely with depth.
BASE_TEMPLATE_SCALE = 0.28


# --- projection -------------------------------------------------------------
#
# The camera rides on the pan/tilt head. Image coordinates are linear in the
# angular offset from the optical axis, so a face at relative bearing b maps
# to x_norm = 0.5 - b / fov_h; the controller's inverse of this is exact.


def face_bearing(state: InterlocutorState) -> tuple[float, float]:
    """Ground-truth direction to the face in head-frame degrees (pan, tilt).

    Faces sit at camera height, so the tilt component is zero.
    """
    return (math.degrees(math.atan2(state.x, state.z)), 0.0)


def project_center(
    state: InterlocutorState,
    camera: CameraModel,
    head_pan: float = 0.0,
    head_tilt: float = 0.0,
) -> tuple[float, float]:
    bearing_pan, bearing_tilt = face_bearing(state)
    rel_pan = bearing_pan - head_pan
    rel_tilt = bearing_tilt - head_tilt
    return (0.5 - rel_pan / camera.fov_h, 0.5 - rel_tilt / camera.fov_v)


def synthesize_landmarks(
    state: InterlocutorState,
    camera: CameraModel,
    head_pan: float = 0.0,
    head_tilt: float = 0.0,
    sim_time: float = 0.0,
) -> LandmarkFrame:
    """Place the canonical template at the projected face position.

    The template scales inversely with depth and its x-offsets shrink by
    cos(yaw); a turned-away face collapses toward its vertical midline.
    Points are emitted only when the projected center is inside the image
    and the face is not occluded.
    """
    cx, cy = project_center(state, camera, head_pan, head_tilt)
    in_fov = 0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0
    if state.occluded or not in_fov:
        return LandmarkFrame(
            sim_time=sim_time, points=(), in_fov=in_fov,
            occluded=state.occluded, true_yaw=state.face_yaw,
        )
    scale = BASE_TEMPLATE_SCALE * (DEFAULT_DEPTH / state.z)
    shear = math.cos(math.radians(state.face_yaw))
    points = tuple(
        (cx + scale * shear * tx, cy + scale * ty) for tx, ty in FACE_TEMPLATE
    )
    return LandmarkFrame(
        sim_time=sim_time, points=points, in_fov=True,
        occluded=False, true_yaw=state.face_yaw,
    )


# --- scenarios --------------------------------------------------------------


@dataclass(frozen=True)
class Motion:
    """Parametric pose path within one segment; t is segment-local seconds."""

    def pose_at(self, t: float, duration: float) -> tuple[float, float, float, float]:
        raise NotImplementedError


@dataclass(frozen=True)
class Hold(Motion):
    x: float = 0.0
    z: float = DEFAULT_DEPTH
    yaw: float = 0.0
    pitch: float = 0.0

    def pose_at(self, t, duration):
        return (self.x, self.z, self.yaw, self.pitch)


@dataclass(frozen=True)
class LateralSweep(Motion):
    """Sinusoidal body sway: x = center + amplitude * sin(2*pi*(t+phase)/period)."""

    amplitude: float
    period: float
    z: float = DEFAULT_DEPTH
    center: float = 0.0
    phase: float = 0.0

    def pose_at(self, t, duration):
        x = self.center + self.amplitude * math.sin(2 * math.pi * (t + self.phase) / self.period)
        return (x, self.z, 0.0, 0.0)


@dataclass(frozen=True)
class YawSweep(Motion):
    """Head turning side to side while the body holds position."""

    amplitude: float
    period: float
    x: float = 0.0
    z: float = DEFAULT_DEPTH
    phase: float = 0.0

    def pose_at(self, t, duration):
        yaw = self.amplitude * math.sin(2 * math.pi * (t + self.phase) / self.period)
        return (self.x, self.z, yaw, 0.0)


@dataclass(frozen=True)
class Segment:
    duration: float
    motion: Motion
    expression: EmotionLabel = EmotionLabel.NEUTRAL
    occluded: bool = False

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"segment duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class Scenario:
    id: str
    segments: tuple[Segment, ...]
    seed: int = 0

    def __post_init__(self):
        if not self.segments:
            raise ValueError("scenario needs at least one segment")

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.segments)


def state_at(scenario: Scenario, t: float) -> InterlocutorState:
    """Ground-truth state at time t; pure in (scenario, t).

    Each segment covers [start, start + duration); the final segment also
    covers the scenario's end instant.
    """
    if t < 0 or t > scenario.total_duration:
        raise ValueError(f"t={t} outside scenario [0, {scenario.total_duration}]")
    start = 0.0
    for i, seg in enumerate(scenario.segments):
        end = start + seg.duration
        last = i == len(scenario.segments) - 1
        if t < end or (last and t <= end):
            x, z, yaw, pitch = seg.motion.pose_at(t - start, seg.duration)
            return InterlocutorState(
                x=x, z=z, face_yaw=yaw, face_pitch=pitch,
                expression=seg.expression, occluded=seg.occluded,
            )
        start = end
    raise AssertionError("unreachable")


def bearing_offset_x(bearing_deg: float, z: float = DEFAULT_DEPTH) -> float:
    """Lateral offset placing the face at the given pan bearing."""
    return z * math.tan(math.radians(bearing_deg))


def exp1_scenario(seed: int, depth: float = DEFAULT_DEPTH) -> Scenario:
    """Posture-mimicking pilot: stand centered, sway the body, turn the head.

    At the default standing distance the face stays inside the profile
    limit and the camera view in every condition, so detection never drops.
    """
    return Scenario(
        id="exp1",
        seed=seed,
        segments=(
            Segment(5.0, Hold(z=depth)),
            Segment(5.0, LateralSweep(amplitude=0.22, period=5.0, z=depth)),
            Segment(5.0, YawSweep(amplitude=60.0, period=5.0, z=depth)),
        ),
    )


def exp2_scenario(seed: int, depth: float = DEFAULT_DEPTH) -> Scenario:
    """Expression-mirroring pilot: stand still, portray three expressions
    for 10 s each in seeded random order."""
    rng = Random(f"{seed}/exp2")
    labels = [EmotionLabel.HAPPINESS, EmotionLabel.ANGER, EmotionLabel.NEUTRAL]
    rng.shuffle(labels)
    return Scenario(
        id="exp2",
        seed=seed,
        segments=tuple(Segment(10.0, Hold(z=depth), expression=lab) for lab in labels),
    )


def exp3_scenario(seed: int, duration: float = 30.0, depth: float = DEFAULT_DEPTH) -> Scenario:
    """Combined pilot: walk to the robot's side and back while switching
    among happiness/anger/neutral every 5-10 s (seeded uniform)."""
    rng = Random(f"{seed}/exp3")
    cycle = [EmotionLabel.HAPPINESS, EmotionLabel.ANGER, EmotionLabel.NEUTRAL]
    walk_period = 24.0
    segments = []
    start = 0.0
    i = 0
    while start < duration:
        hold = rng.uniform(5.0, 10.0)
        hold = min(hold, duration + 1.0 - start)  # keep total finite, cover the run
        segments.append(
            Segment(
                hold,
                LateralSweep(amplitude=0.34, period=walk_period, phase=start, z=depth),
                expression=cycle[i % len(cycle)],
            )
        )
        start += hold
        i += 1
    return Scenario(id="exp3", seed=seed, segments=tuple(segments))


def step_scenario(
    bearing_deg: float,
    onset: float = 1.0,
    settle: float = 2.0,
    expression: EmotionLabel = EmotionLabel.NEUTRAL,
) -> Scenario:
    """Centered face that jumps to a fixed bearing at `onset` seconds;
    used to measure onset-to-motion latency and convergence."""
    return Scenario(
        id="custom",
        segments=(
            Segment(onset, Hold(), expression=expression),
            Segment(settle, Hold(x=bearing_offset_x(bearing_deg)), expression=expression),
        ),
    )


def hold_scenario(
    bearing_deg: float,
    duration: float,
    expression: EmotionLabel = EmotionLabel.NEUTRAL,
) -> Scenario:
    """Static face at a fixed bearing for the whole run."""
    return Scenario(
        id="custom",
        segments=(
            Segment(duration, Hold(x=bearing_offset_x(bearing_deg)), expression=expression),
        ),
    )


# --- trace record / replay ---------------------------------------------------

TRACE_FORMAT = "mirrorbus-trace"
TRACE_VERSION = 1


class TraceError(Exception):
    pass


class TraceParseError(TraceError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no


class TraceVersionError(TraceError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class TraceRecorder:
    """Single-writer JSONL recorder for (state, frame) pairs per tick."""

    def __init__(self, path, seed: int, tick: float):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")
        self._fh.write(
            _dumps({"format": TRACE_FORMAT, "version": TRACE_VERSION, "seed": seed, "tick": tick})
            + "\n"
        )

    def add(self, t: float, state: InterlocutorState, frame: LandmarkFrame) -> None:
        line = _dumps({
            "t": t,
            "state": encode_message(state),
            "frame": encode_message(frame),
        })
        self._fh.write(line + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class TracePlayback:
    """Loaded trace: a scenario-equivalent source of (state, frame) ticks."""

    seed: int
    tick: float
    entries: list[tuple[float, InterlocutorState, LandmarkFrame]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


def load_trace(path) -> TracePlayback:
    path = Path(path)
    if not path.exists():
        raise TraceError(f"trace file not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TraceParseError(path, 1, "empty file, missing header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceParseError(path, 1, f"bad header: {exc.msg}") from None
    if not isinstance(header, dict) or header.get("format") != TRACE_FORMAT:
        raise TraceParseError(path, 1, "not a mirrorbus trace")
    version = header.get("version")
    if version != TRACE_VERSION:
        raise TraceVersionError(f"trace version {version} not supported (expected {TRACE_VERSION})")
    playback = TracePlayback(seed=int(header["seed"]), tick=float(header["tick"]))
    for i, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            t = float(rec["t"])
            state = decode_message("InterlocutorState", rec["state"])
            frame = decode_message("LandmarkFrame", rec["frame"])
        except Exception as exc:
            raise TraceParseError(path, i, str(exc)) from None
        playback.entries.append((t, state, frame))
    return playback


# --- pipeline stage ----------------------------------------------------------


class InterlocutorStage:
    """Per-tick source task: publishes ground truth and synthesized frames.

    Frames are rendered through the camera at the head's latest published
    orientation, closing the servo loop. With a TracePlayback source the
    recorded pairs are republished verbatim instead.
    """

    def __init__(
        self,
        bus: Bus,
        head_states: Subscription,
        truth_topic: str,
        frames_topic: str,
        camera: CameraModel,
        source: Scenario | TracePlayback,
    ):
        self.bus = bus
        self.head_states = head_states
        self.truth_topic = truth_topic
        self.frames_topic = frames_topic
        self.camera = camera
        self.source = source
        self._head = HeadState(pan=0.0, tilt=0.0, sim_time=0.0)
        self._tick_index = 0

    def on_tick(self, now: float) -> None:
        for env in self.head_states.drain():
            self._head = env.payload
        k = self._tick_index
        self._tick_index += 1
        if isinstance(self.source, TracePlayback):
            if k >= len(self.source.entries):
                return
            _, state, frame = self.source.entries[k]
        else:
            if now > self.source.total_duration:
                return
            state = state_at(self.source, now)
            frame = synthesize_landmarks(
                state, self.camera,
                head_pan=self._head.pan, head_tilt=self._head.tilt,
                sim_time=now,
            )
        self.bus.publish(self.truth_topic, state)
        self.bus.publish(self.frames_topic, frame)
