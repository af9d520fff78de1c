"""Rapport controller: gaze servoing and expression mirroring.

Converts detected face centers into pan/tilt targets (proportional servoing
toward centering the face, smoothed by an EMA), routes them per condition
(agent-only / head-only / both), gates them continuously or on a duty
cycle, and turns debounced emotion labels into action-unit blends.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .bus import Bus, Subscription
from .messages import (
    EcaTarget,
    EmotionEvent,
    EmotionLabel,
    ExpressionBlend,
    FacePose,
    HeadCommand,
    HeadState,
    MimicryMode,
    Posture,
    ScheduleKind,
)
from .perception import CameraModel


@dataclass(frozen=True)
class GazeTarget:
    """Unclamped absolute pan/tilt target, degrees (pan + = robot's left,
    tilt + = up)."""

    pan: float
    tilt: float


def gaze_from_face(pose: FacePose, camera: CameraModel, head: HeadState) -> GazeTarget:
    """Target that would center the detected face.

    The camera is head-mounted, so the image offset is an angular error
    relative to the current head pose; adding it to that pose yields the
    absolute target.
    """
    pan = head.pan + (0.5 - pose.x) * camera.fov_h
    tilt = head.tilt + (0.5 - pose.y) * camera.fov_v
    return GazeTarget(pan=pan, tilt=tilt)


@dataclass(frozen=True)
class SmootherState:
    """EMA over gaze targets; the first sample passes through unchanged."""

    alpha: float = 0.3
    last: GazeTarget | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")


def smooth(state: SmootherState, target: GazeTarget) -> tuple[SmootherState, GazeTarget]:
    if state.last is None:
        return replace(state, last=target), target
    a = state.alpha
    out = GazeTarget(
        pan=a * target.pan + (1.0 - a) * state.last.pan,
        tilt=a * target.tilt + (1.0 - a) * state.last.tilt,
    )
    return replace(state, last=out), out


@dataclass(frozen=True)
class IntermittentSchedule:
    on_window: float = 4.0
    off_window: float = 4.0
    phase: float = 0.0

    def __post_init__(self):
        if self.on_window <= 0 or self.off_window <= 0:
            raise ValueError("intermittent windows must be positive")


def gate_open(schedule: IntermittentSchedule | None, t: float) -> bool:
    """True when mirroring may act; None means continuous (always open)."""
    if schedule is None:
        return True
    period = schedule.on_window + schedule.off_window
    return (t - schedule.phase) % period < schedule.on_window


def route(
    mode: MimicryMode,
    gaze: GazeTarget,
    is_open: bool,
) -> tuple[HeadCommand | None, tuple[float, float] | None]:
    """Condition routing: which embodiment receives the gaze target."""
    if not is_open or mode.posture is Posture.NONE:
        return (None, None)
    as_cmd = HeadCommand(pan=gaze.pan, tilt=gaze.tilt)
    as_offset = (gaze.pan, gaze.tilt)
    if mode.posture is Posture.ECA_ONLY:
        return (None, as_offset)
    if mode.posture is Posture.HEAD_ONLY:
        return (as_cmd, None)
    return (as_cmd, as_offset)


# --- emotion hold ------------------------------------------------------------


@dataclass(frozen=True)
class EmotionHoldState:
    """Debounce + minimum-hold filter over classifier events.

    A label change needs k_debounce consecutive above-threshold events and
    the previous switch to be at least min_hold old; single-frame classifier
    noise therefore never flips the displayed face.
    """

    current: EmotionLabel = EmotionLabel.NEUTRAL
    candidate: EmotionLabel | None = None
    consecutive: int = 0
    hold_until: float = 0.0
    k_debounce: int = 3
    min_hold: float = 1.0
    conf_threshold: float = 0.5

    def __post_init__(self):
        if self.k_debounce < 1:
            raise ValueError(f"k_debounce must be >= 1, got {self.k_debounce}")
        if self.min_hold < 0:
            raise ValueError(f"min_hold must be >= 0, got {self.min_hold}")


def update_emotion(
    state: EmotionHoldState, event: EmotionEvent, t: float
) -> tuple[EmotionHoldState, EmotionLabel]:
    if event.confidence < state.conf_threshold:
        return state, state.current
    label = event.label
    if label == state.current:
        if state.candidate is not None:
            state = replace(state, candidate=None, consecutive=0)
        return state, state.current
    if label == state.candidate:
        consecutive = state.consecutive + 1
    else:
        consecutive = 1
    if consecutive >= state.k_debounce and t >= state.hold_until:
        new = replace(
            state,
            current=label,
            candidate=None,
            consecutive=0,
            hold_until=t + state.min_hold,
        )
        return new, label
    return replace(state, candidate=label, consecutive=consecutive), state.current


# --- expression table ---------------------------------------------------------
#
# Standard FACS prototype blends; config, not ground truth. Neutral is the
# empty blend.

DEFAULT_AU_TABLE: dict[EmotionLabel, dict[int, float]] = {
    EmotionLabel.HAPPINESS: {6: 0.6, 12: 0.8},
    EmotionLabel.ANGER: {4: 0.8, 5: 0.6, 7: 0.5, 23: 0.6},
    EmotionLabel.SADNESS: {1: 0.7, 4: 0.4, 15: 0.8},
    EmotionLabel.SURPRISE: {1: 0.7, 2: 0.7, 5: 0.6, 26: 0.8},
    EmotionLabel.FEAR: {1: 0.6, 2: 0.5, 4: 0.5, 5: 0.7, 20: 0.6, 26: 0.4},
    EmotionLabel.DISGUST: {9: 0.8, 15: 0.5, 16: 0.4},
    EmotionLabel.CONTEMPT: {12: 0.5, 14: 0.7},
    EmotionLabel.NEUTRAL: {},
}


class AuTableError(ValueError):
    """Raised at startup when the configured AU table is unusable."""


def validate_au_table(table: dict[EmotionLabel, dict[int, float]]) -> None:
    for label in EmotionLabel:
        if label not in table:
            raise AuTableError(f"AU table missing label: {label.value}")
    if table[EmotionLabel.NEUTRAL]:
        raise AuTableError("neutral must map to the empty blend")
    for label, weights in table.items():
        for au, w in weights.items():
            if not isinstance(au, int) or au < 1:
                raise AuTableError(f"{label.value}: bad AU id {au!r}")
            if not (0.0 <= w <= 1.0):
                raise AuTableError(f"{label.value}: AU{au} weight out of [0, 1]: {w}")


def expression_for(label: EmotionLabel, table: dict[EmotionLabel, dict[int, float]]) -> ExpressionBlend:
    return ExpressionBlend(dict(table[label]))


# --- pipeline stage ------------------------------------------------------------


@dataclass
class ControllerConfig:
    camera: CameraModel = field(default_factory=CameraModel)
    smoother_alpha: float = 0.3
    schedule: IntermittentSchedule = field(default_factory=IntermittentSchedule)
    hold: EmotionHoldState = field(default_factory=EmotionHoldState)
    au_table: dict[EmotionLabel, dict[int, float]] = field(
        default_factory=lambda: dict(DEFAULT_AU_TABLE)
    )


class ControllerStage:
    """Per-tick controller task.

    Consumes the previous tick's detector output (poses/emotions), the
    latest head state and mode changes; emits head commands on fresh poses
    and an agent target (gaze + blend) every tick. Mode changes apply at the
    tick after they arrive.
    """

    def __init__(
        self,
        bus: Bus,
        poses: Subscription,
        emotions: Subscription,
        modes: Subscription,
        head_states: Subscription,
        head_cmd_topic: str,
        eca_target_topic: str,
        config: ControllerConfig,
        initial_mode: MimicryMode,
    ):
        validate_au_table(config.au_table)
        self.bus = bus
        self.poses = poses
        self.emotions = emotions
        self.modes = modes
        self.head_states = head_states
        self.head_cmd_topic = head_cmd_topic
        self.eca_target_topic = eca_target_topic
        self.config = config
        self.mode = initial_mode
        self.smoother = SmootherState(alpha=config.smoother_alpha)
        self.hold = config.hold
        self._head = HeadState(pan=0.0, tilt=0.0, sim_time=0.0)
        self._last_target: GazeTarget | None = None

    def _schedule(self) -> IntermittentSchedule | None:
        if self.mode.schedule is ScheduleKind.INTERMITTENT:
            return self.config.schedule
        return None

    def on_tick(self, now: float) -> None:
        for env in self.modes.drain():
            self.mode = env.payload
        for env in self.head_states.drain():
            self._head = env.payload
        for env in self.emotions.drain():
            self.hold, _ = update_emotion(self.hold, env.payload, now)

        is_open = gate_open(self._schedule(), now)

        fresh_pose: FacePose | None = None
        for env in self.poses.drain():
            fresh_pose = env.payload
        if fresh_pose is not None:
            raw = gaze_from_face(fresh_pose, self.config.camera, self._head)
            self.smoother, smoothed = smooth(self.smoother, raw)
            self._last_target = smoothed

        head_cmd = None
        eca_gaze = None
        if self._last_target is not None:
            head_cmd, eca_gaze = route(self.mode, self._last_target, is_open)
        if head_cmd is not None and fresh_pose is not None:
            self.bus.publish(self.head_cmd_topic, head_cmd)

        if self.mode.emotion_mirroring and is_open:
            blend = expression_for(self.hold.current, self.config.au_table)
        else:
            blend = expression_for(EmotionLabel.NEUTRAL, self.config.au_table)
        self.bus.publish(self.eca_target_topic, EcaTarget(gaze=eca_gaze, blend=blend))
