"""Message kinds carried on the bus.

The bus only transports kinds registered here; topics pin one kind at
creation and publishing anything else is rejected. Every kind round-trips
through JSON losslessly (floats serialize via repr), which is what makes
log/trace byte-comparison meaningful.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields


class EmotionLabel(str, enum.Enum):
    """Seven basic emotions plus neutral (meaning: no expression)."""

    HAPPINESS = "happiness"
    ANGER = "anger"
    SADNESS = "sadness"
    FEAR = "fear"
    SURPRISE = "surprise"
    DISGUST = "disgust"
    CONTEMPT = "contempt"
    NEUTRAL = "neutral"


class Posture(str, enum.Enum):
    NONE = "none"
    ECA_ONLY = "eca_only"
    HEAD_ONLY = "head_only"
    BOTH = "both"


class ScheduleKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    INTERMITTENT = "intermittent"


class SchemaError(ValueError):
    """Payload does not decode as the expected message kind."""


@dataclass(frozen=True)
class InterlocutorState:
    """Ground truth about the human side, in the robot frame.

    x is lateral (positive = robot's left), z is depth; both meters.
    face_yaw 0 means facing the camera, positive = turned left.
    """

    x: float
    z: float
    face_yaw: float
    face_pitch: float
    expression: EmotionLabel
    occluded: bool

    def __post_init__(self):
        if self.z <= 0:
            raise ValueError(f"depth must be positive, got {self.z}")
        if abs(self.face_pitch) > 60:
            raise ValueError(f"|face_pitch| must be <= 60, got {self.face_pitch}")


@dataclass(frozen=True)
class LandmarkFrame:
    """One synthesized detector input: 68 2D points in [0,1]^2 image coords.

    points is empty unless the face is in view and unoccluded. true_yaw is
    carried for the detector's profile gate only and must not leak past
    perception.
    """

    sim_time: float
    points: tuple[tuple[float, float], ...]
    in_fov: bool
    occluded: bool
    true_yaw: float

    def __post_init__(self):
        visible = self.in_fov and not self.occluded
        if visible and len(self.points) != 68:
            raise ValueError(f"visible frame must carry 68 points, got {len(self.points)}")
        if not visible and self.points:
            raise ValueError("non-visible frame must carry no points")


@dataclass(frozen=True)
class FacePose:
    """Detected face center in normalized image coordinates."""

    sim_time: float
    x: float
    y: float
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"center must lie in the unit square, got ({self.x}, {self.y})")
        if not (0.0 < self.confidence <= 1.0):
            raise ValueError(f"confidence must be in (0, 1], got {self.confidence}")


@dataclass(frozen=True)
class EmotionEvent:
    sim_time: float
    label: EmotionLabel
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class HeadCommand:
    """Absolute pan/tilt target in degrees; newest command wins."""

    pan: float
    tilt: float


@dataclass(frozen=True)
class HeadState:
    pan: float
    tilt: float
    sim_time: float


@dataclass(frozen=True)
class ExpressionBlend:
    """Action-unit weights by FACS AU number; absent AU means 0."""

    weights: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for au, w in self.weights.items():
            if not (0.0 <= w <= 1.0):
                raise ValueError(f"AU{au} weight out of [0, 1]: {w}")

    def is_neutral(self) -> bool:
        return not self.weights


NEUTRAL_BLEND = ExpressionBlend()


@dataclass(frozen=True)
class EcaTarget:
    """Controller output for the on-screen agent: optional gaze + blend."""

    gaze: tuple[float, float] | None
    blend: ExpressionBlend


@dataclass(frozen=True)
class EcaFaceState:
    """Composite rendered agent face: clamped gaze offset + blend."""

    gaze_pan: float
    gaze_tilt: float
    blend: ExpressionBlend
    sim_time: float


@dataclass(frozen=True)
class MimicryMode:
    posture: Posture = Posture.BOTH
    emotion_mirroring: bool = True
    schedule: ScheduleKind = ScheduleKind.CONTINUOUS


# --- JSON codec -----------------------------------------------------------
#
# Encoding is field-by-field with a couple of structured cases (landmark
# points, blend weights, optional gaze). Decoding is strict: unknown or
# missing fields raise SchemaError, which the bridge maps to its
# schema_mismatch error code.


def _encode_value(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, ExpressionBlend):
        return {str(au): w for au, w in sorted(value.weights.items())}
    if isinstance(value, tuple):
        return [_encode_value(v) for v in value]
    return value


def encode_message(msg) -> dict:
    kind = type(msg).__name__
    if kind not in MESSAGE_KINDS:
        raise SchemaError(f"not a registered message kind: {kind}")
    out = {}
    for f in fields(msg):
        out[f.name] = _encode_value(getattr(msg, f.name))
    return out


def _require_fields(kind: str, data: dict, names: set[str]) -> None:
    got = set(data)
    if got != names:
        missing = names - got
        extra = got - names
        detail = []
        if missing:
            detail.append(f"missing {sorted(missing)}")
        if extra:
            detail.append(f"unexpected {sorted(extra)}")
        raise SchemaError(f"{kind}: {', '.join(detail)}")


def _as_float(kind: str, name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{kind}.{name}: expected number, got {type(value).__name__}")
    return float(value)


def _as_bool(kind: str, name: str, value) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(f"{kind}.{name}: expected bool, got {type(value).__name__}")
    return value


def _as_label(kind: str, name: str, value) -> EmotionLabel:
    try:
        return EmotionLabel(value)
    except (ValueError, TypeError):
        raise SchemaError(f"{kind}.{name}: unknown emotion label {value!r}") from None


def _decode_blend(kind: str, value) -> ExpressionBlend:
    if not isinstance(value, dict):
        raise SchemaError(f"{kind}.blend: expected object")
    weights = {}
    for au, w in value.items():
        try:
            au_num = int(au)
        except (ValueError, TypeError):
            raise SchemaError(f"{kind}.blend: bad AU key {au!r}") from None
        weights[au_num] = _as_float(kind, f"blend[{au}]", w)
    try:
        return ExpressionBlend(weights)
    except ValueError as exc:
        raise SchemaError(f"{kind}.blend: {exc}") from None


def _decode_points(kind: str, value) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, list):
        raise SchemaError(f"{kind}.points: expected list")
    pts = []
    for i, p in enumerate(value):
        if not isinstance(p, list) or len(p) != 2:
            raise SchemaError(f"{kind}.points[{i}]: expected [x, y]")
        pts.append((_as_float(kind, f"points[{i}].x", p[0]), _as_float(kind, f"points[{i}].y", p[1])))
    return tuple(pts)


def decode_message(kind: str, data) -> object:
    if kind not in MESSAGE_KINDS:
        raise SchemaError(f"unknown message kind: {kind}")
    if not isinstance(data, dict):
        raise SchemaError(f"{kind}: payload must be an object")
    try:
        return _DECODERS[kind](data)
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError(f"{kind}: {exc}") from None


def _decode_interlocutor_state(d: dict) -> InterlocutorState:
    k = "InterlocutorState"
    _require_fields(k, d, {"x", "z", "face_yaw", "face_pitch", "expression", "occluded"})
    return InterlocutorState(
        x=_as_float(k, "x", d["x"]),
        z=_as_float(k, "z", d["z"]),
        face_yaw=_as_float(k, "face_yaw", d["face_yaw"]),
        face_pitch=_as_float(k, "face_pitch", d["face_pitch"]),
        expression=_as_label(k, "expression", d["expression"]),
        occluded=_as_bool(k, "occluded", d["occluded"]),
    )


def _decode_landmark_frame(d: dict) -> LandmarkFrame:
    k = "LandmarkFrame"
    _require_fields(k, d, {"sim_time", "points", "in_fov", "occluded", "true_yaw"})
    return LandmarkFrame(
        sim_time=_as_float(k, "sim_time", d["sim_time"]),
        points=_decode_points(k, d["points"]),
        in_fov=_as_bool(k, "in_fov", d["in_fov"]),
        occluded=_as_bool(k, "occluded", d["occluded"]),
        true_yaw=_as_float(k, "true_yaw", d["true_yaw"]),
    )


def _decode_face_pose(d: dict) -> FacePose:
    k = "FacePose"
    _require_fields(k, d, {"sim_time", "x", "y", "confidence"})
    return FacePose(
        sim_time=_as_float(k, "sim_time", d["sim_time"]),
        x=_as_float(k, "x", d["x"]),
        y=_as_float(k, "y", d["y"]),
        confidence=_as_float(k, "confidence", d["confidence"]),
    )


def _decode_emotion_event(d: dict) -> EmotionEvent:
    k = "EmotionEvent"
    _require_fields(k, d, {"sim_time", "label", "confidence"})
    return EmotionEvent(
        sim_time=_as_float(k, "sim_time", d["sim_time"]),
        label=_as_label(k, "label", d["label"]),
        confidence=_as_float(k, "confidence", d["confidence"]),
    )


def _decode_head_command(d: dict) -> HeadCommand:
    k = "HeadCommand"
    _require_fields(k, d, {"pan", "tilt"})
    return HeadCommand(pan=_as_float(k, "pan", d["pan"]), tilt=_as_float(k, "tilt", d["tilt"]))


def _decode_head_state(d: dict) -> HeadState:
    k = "HeadState"
    _require_fields(k, d, {"pan", "tilt", "sim_time"})
    return HeadState(
        pan=_as_float(k, "pan", d["pan"]),
        tilt=_as_float(k, "tilt", d["tilt"]),
        sim_time=_as_float(k, "sim_time", d["sim_time"]),
    )


def _decode_eca_target(d: dict) -> EcaTarget:
    k = "EcaTarget"
    _require_fields(k, d, {"gaze", "blend"})
    gaze = d["gaze"]
    if gaze is not None:
        if not isinstance(gaze, list) or len(gaze) != 2:
            raise SchemaError(f"{k}.gaze: expected null or [pan, tilt]")
        gaze = (_as_float(k, "gaze.pan", gaze[0]), _as_float(k, "gaze.tilt", gaze[1]))
    return EcaTarget(gaze=gaze, blend=_decode_blend(k, d["blend"]))


def _decode_eca_face_state(d: dict) -> EcaFaceState:
    k = "EcaFaceState"
    _require_fields(k, d, {"gaze_pan", "gaze_tilt", "blend", "sim_time"})
    return EcaFaceState(
        gaze_pan=_as_float(k, "gaze_pan", d["gaze_pan"]),
        gaze_tilt=_as_float(k, "gaze_tilt", d["gaze_tilt"]),
        blend=_decode_blend(k, d["blend"]),
        sim_time=_as_float(k, "sim_time", d["sim_time"]),
    )


def _decode_mimicry_mode(d: dict) -> MimicryMode:
    k = "MimicryMode"
    _require_fields(k, d, {"posture", "emotion_mirroring", "schedule"})
    try:
        posture = Posture(d["posture"])
        schedule = ScheduleKind(d["schedule"])
    except (ValueError, TypeError):
        raise SchemaError(f"{k}: bad posture/schedule value") from None
    return MimicryMode(
        posture=posture,
        emotion_mirroring=_as_bool(k, "emotion_mirroring", d["emotion_mirroring"]),
        schedule=schedule,
    )


_DECODERS = {
    "InterlocutorState": _decode_interlocutor_state,
    "LandmarkFrame": _decode_landmark_frame,
    "FacePose": _decode_face_pose,
    "EmotionEvent": _decode_emotion_event,
    "HeadCommand": _decode_head_command,
    "HeadState": _decode_head_state,
    "EcaTarget": _decode_eca_target,
    "EcaFaceState": _decode_eca_face_state,
    "MimicryMode": _decode_mimicry_mode,
}

MESSAGE_KINDS = frozenset(_DECODERS)


def kind_of(msg) -> str:
    return type(msg).__name__
