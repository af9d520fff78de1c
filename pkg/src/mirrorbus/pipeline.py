"""Wires the stages onto a bus and drives them tick by tick.

Within a tick the order is: controller, interlocutor, detector, head,
agent. The controller therefore consumes the previous tick's detector
output while the detector consumes same-tick frames; combined with the
command delay line this reproduces the real pipeline's latency budget
(one detector period + one controller tick + link delay) while keeping
pose cadence locked to the frame cadence.
"""

from __future__ import annotations

from random import Random

from .actuation import EcaStage, HeadStage
from .bus import Bus, SimClock
from .config import Config
from .interlocutor import InterlocutorStage, Scenario, TracePlayback
from .messages import MimicryMode
from .mimicry import ControllerConfig, ControllerStage
from .perception import DetectorStage

TOPIC_TRUTH = "/interlocutor/truth"
TOPIC_FRAMES = "/interlocutor/frames"
TOPIC_POSE = "/face/pose"
TOPIC_EMOTION = "/face/emotion"
TOPIC_MODE = "/control/mode"
TOPIC_HEAD_CMD = "/head/cmd"
TOPIC_ECA_TARGET = "/eca/target"
TOPIC_HEAD_STATE = "/head/state"
TOPIC_ECA_STATE = "/eca/state"

TOPIC_SCHEMAS = {
    TOPIC_TRUTH: "InterlocutorState",
    TOPIC_FRAMES: "LandmarkFrame",
    TOPIC_POSE: "FacePose",
    TOPIC_EMOTION: "EmotionEvent",
    TOPIC_MODE: "MimicryMode",
    TOPIC_HEAD_CMD: "HeadCommand",
    TOPIC_ECA_TARGET: "EcaTarget",
    TOPIC_HEAD_STATE: "HeadState",
    TOPIC_ECA_STATE: "EcaFaceState",
}


def create_topics(bus: Bus) -> None:
    for name, schema in TOPIC_SCHEMAS.items():
        bus.create_topic(name, schema)


class Pipeline:
    """One wired simulation instance on a fresh bus.

    `source` is a Scenario or TracePlayback for scripted runs, or None for
    live sessions where frames arrive over the bridge.
    """

    def __init__(
        self,
        bus: Bus,
        config: Config,
        mode: MimicryMode,
        source: Scenario | TracePlayback | None,
        seed: int = 0,
    ):
        self.bus = bus
        self.config = config
        self.tick = config.effective_tick
        self.tick_index = 0
        create_topics(bus)

        camera = config.perception.camera
        self.controller = ControllerStage(
            bus,
            poses=bus.subscribe(TOPIC_POSE),
            emotions=bus.subscribe(TOPIC_EMOTION),
            modes=bus.subscribe(TOPIC_MODE),
            head_states=bus.subscribe(TOPIC_HEAD_STATE),
            head_cmd_topic=TOPIC_HEAD_CMD,
            eca_target_topic=TOPIC_ECA_TARGET,
            config=ControllerConfig(
                camera=camera,
                smoother_alpha=config.mimicry.smoother_alpha,
                schedule=config.mimicry.schedule,
                hold=config.mimicry.hold_state(),
                au_table=config.mimicry.au_table,
            ),
            initial_mode=mode,
        )
        self.interlocutor: InterlocutorStage | None = None
        if source is not None:
            self.interlocutor = InterlocutorStage(
                bus,
                head_states=bus.subscribe(TOPIC_HEAD_STATE),
                truth_topic=TOPIC_TRUTH,
                frames_topic=TOPIC_FRAMES,
                camera=camera,
                source=source,
            )
        noise_seed = config.perception.noise.seed
        self.detector = DetectorStage(
            bus,
            frames=bus.subscribe(TOPIC_FRAMES),
            truth=bus.subscribe(TOPIC_TRUTH),
            pose_topic=TOPIC_POSE,
            emotion_topic=TOPIC_EMOTION,
            noise=config.perception.noise,
            rng=Random(f"{seed if noise_seed is None else noise_seed}/perception"),
            center_mode=config.perception.center_mode,
            classify_every=config.perception.classify_every,
        )
        self.head = HeadStage(
            bus,
            commands=bus.subscribe(TOPIC_HEAD_CMD),
            state_topic=TOPIC_HEAD_STATE,
            limits=config.actuation.limits,
            latency=config.actuation.latency,
        )
        self.eca = EcaStage(
            bus,
            targets=bus.subscribe(TOPIC_ECA_TARGET),
            state_topic=TOPIC_ECA_STATE,
            clamp_cfg=config.mimicry.eca_clamp,
            latency=config.actuation.latency,
        )

    def tick_time(self, index: int) -> float:
        return index * self.tick

    def step(self) -> None:
        """Advance the bus to the next tick instant and run all stages."""
        now = self.tick_time(self.tick_index)
        self.bus.advance_to(now)
        self.controller.on_tick(now)
        if self.interlocutor is not None:
            self.interlocutor.on_tick(now)
        self.detector.on_tick()
        self.head.on_tick(now)
        self.eca.on_tick(now)
        self.tick_index += 1

    def run_ticks(self, n: int) -> None:
        for _ in range(n):
            self.step()


def fresh_pipeline(
    config: Config,
    mode: MimicryMode,
    source: Scenario | TracePlayback | None,
    seed: int = 0,
) -> Pipeline:
    bus = Bus(SimClock(tick=config.effective_tick))
    return Pipeline(bus, config, mode, source, seed=seed)
