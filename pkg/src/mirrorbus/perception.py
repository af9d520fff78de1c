"""Simulated detector stage.

Real pixel-level face detection and CNN emotion classification are out of
scope; this stage reproduces their observable behavior instead: detection
fails on occlusion, out-of-view faces and profiles turned past 90 degrees,
and emotion labels are the ground truth corrupted by a seeded confusion
channel. Downstream logic may threshold the confidence values but must not
depend on their distribution.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .bus import Bus, Subscription
from .messages import EmotionEvent, EmotionLabel, FacePose, LandmarkFrame

PROFILE_YAW_LIMIT = 90.0  # degrees; beyond this the detector loses the face
MIN_DETECT_CONFIDENCE = 0.1

CORRECT_CONF_RANGE = (0.7, 1.0)
WRONG_CONF_RANGE = (0.4, 0.7)


@dataclass(frozen=True)
class CameraModel:
    fov_h: float = 58.0
    fov_v: float = 45.0
    rate: float = 30.0

    def __post_init__(self):
        if not (0.0 < self.fov_h < 180.0 and 0.0 < self.fov_v < 180.0):
            raise ValueError(f"fov must be in (0, 180), got {self.fov_h}x{self.fov_v}")
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")

    @property
    def tick(self) -> float:
        return 1.0 / self.rate


@dataclass(frozen=True)
class NoiseConfig:
    """Classifier inaccuracy: with misclassify_prob the emitted label is
    drawn uniformly from the other labels. A fixed seed pins the confusion
    stream independently of the run seed; None derives it from the run."""

    misclassify_prob: float = 0.1
    seed: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.misclassify_prob <= 1.0):
            raise ValueError(f"misclassify_prob out of [0, 1]: {self.misclassify_prob}")


def face_center(points, mode: str = "bbox") -> tuple[float, float]:
    """Face center from 68 landmarks: bounding-box midpoint (default) or
    centroid, per config."""
    if len(points) != 68:
        raise ValueError(f"expected 68 landmarks, got {len(points)}")
    if mode == "bbox":
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        return ((min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0)
    if mode == "centroid":
        sx = sum(p[0] for p in points)
        sy = sum(p[1] for p in points)
        return (sx / 68.0, sy / 68.0)
    raise ValueError(f"unknown center mode: {mode}")


def detect(frame: LandmarkFrame, mode: str = "bbox") -> FacePose | None:
    """Face detection with the simulated failure conditions.

    Returns None when the face is occluded, out of view, or turned past
    90 degrees. Confidence falls off with yaw, floored at 0.1.
    """
    if frame.occluded or not frame.in_fov:
        return None
    if abs(frame.true_yaw) > PROFILE_YAW_LIMIT:
        return None
    cx, cy = face_center(frame.points, mode)
    cx = min(max(cx, 0.0), 1.0)
    cy = min(max(cy, 0.0), 1.0)
    conf = math.cos(math.radians(frame.true_yaw))
    conf = min(max(conf, MIN_DETECT_CONFIDENCE), 1.0)
    return FacePose(sim_time=frame.sim_time, x=cx, y=cy, confidence=conf)


def classify_emotion(
    expression: EmotionLabel,
    noise: NoiseConfig,
    rng: random.Random,
    sim_time: float,
) -> EmotionEvent:
    """One classifier output for a detected face.

    Correct label with probability 1-p (confidence uniform in [0.7, 1.0]);
    otherwise a uniformly chosen different label (confidence in [0.4, 0.7]).
    Draws depend only on (expression, noise, rng state), so replays with the
    same seed reproduce the stream exactly.
    """
    wrong = rng.random() < noise.misclassify_prob
    if wrong:
        others = [lab for lab in EmotionLabel if lab != expression]
        label = others[rng.randrange(len(others))]
        lo, hi = WRONG_CONF_RANGE
    else:
        label = expression
        lo, hi = CORRECT_CONF_RANGE
    confidence = rng.uniform(lo, hi)
    return EmotionEvent(sim_time=sim_time, label=label, confidence=confidence)


class DetectorStage:
    """Per-tick perception task: frames in, poses and emotion events out."""

    def __init__(
        self,
        bus: Bus,
        frames: Subscription,
        truth: Subscription,
        pose_topic: str,
        emotion_topic: str,
        noise: NoiseConfig,
        rng: random.Random,
        center_mode: str = "bbox",
        classify_every: int = 1,
    ):
        if classify_every < 1:
            raise ValueError(f"classify_every must be >= 1, got {classify_every}")
        self.bus = bus
        self.frames = frames
        self.truth = truth
        self.pose_topic = pose_topic
        self.emotion_topic = emotion_topic
        self.noise = noise
        self.rng = rng
        self.center_mode = center_mode
        self.classify_every = classify_every
        self._expression: EmotionLabel | None = None
        self._tick_index = 0

    def on_tick(self) -> None:
        for env in self.truth.drain():
            self._expression = env.payload.expression
        classify_tick = self._tick_index % self.classify_every == 0
        self._tick_index += 1
        for env in self.frames.drain():
            pose = detect(env.payload, self.center_mode)
            if pose is None:
                continue
            self.bus.publish(self.pose_topic, pose)
            if classify_tick and self._expression is not None:
                event = classify_emotion(
                    self._expression, self.noise, self.rng, pose.sim_time
                )
                self.bus.publish(self.emotion_topic, event)
