"""Experiment harness: scripted pilot conditions, metrics, logs, audits.

The pilot study's outcome measures were verbal preferences and are not
machine-reproducible; the metrics here are objective surrogates (tracking
error, latency, uptime, match rate, duty cycle) computed from the envelope
log. The audit tool recomputes everything from the log file alone and
re-checks the safety and routing invariants offline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .actuation import clamp
from .bus import Envelope
from .config import Config, ConfigError, config_to_dict
from .interlocutor import (
    Scenario,
    TracePlayback,
    TraceRecorder,
    exp1_scenario,
    exp2_scenario,
    exp3_scenario,
    face_bearing,
    load_trace,
)
from .logio import dumps, make_header, read_log, write_log
from .messages import (
    EcaFaceState,
    EcaTarget,
    EmotionLabel,
    HeadState,
    InterlocutorState,
    MimicryMode,
    Posture,
    ScheduleKind,
    encode_message,
)
from .mimicry import gate_open
from .pipeline import (
    TOPIC_ECA_STATE,
    TOPIC_ECA_TARGET,
    TOPIC_FRAMES,
    TOPIC_HEAD_CMD,
    TOPIC_HEAD_STATE,
    TOPIC_POSE,
    TOPIC_TRUTH,
    fresh_pipeline,
)

METRIC_KEYS = (
    "mean_tracking_error",
    "p95_tracking_error",
    "command_latency",
    "clamp_saturation_fraction",
    "detection_uptime",
    "emotion_match_rate",
    "mirror_duty",
)

SURROGATE_NOTE = (
    "Metrics are objective surrogates computed from the envelope log; the "
    "original pilot's outcome measures were verbal preferences."
)


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    conditions: tuple[MimicryMode, ...]
    duration: float
    scenario: Scenario
    seed: int

    def __post_init__(self):
        expected = {"exp1": 3, "exp2": 2, "exp3": 2}
        if self.id in expected and len(self.conditions) != expected[self.id]:
            raise ValueError(f"{self.id} needs {expected[self.id]} conditions")
        if self.duration <= 0:
            raise ValueError("condition duration must be positive")


def build_experiment(experiment_id: str, seed: int, config: Config) -> ExperimentSpec:
    cont = ScheduleKind.CONTINUOUS
    depth = config.interlocutor.depth
    if experiment_id == "exp1":
        return ExperimentSpec(
            id="exp1",
            conditions=(
                MimicryMode(Posture.ECA_ONLY, False, cont),
                MimicryMode(Posture.HEAD_ONLY, False, cont),
                MimicryMode(Posture.BOTH, False, cont),
            ),
            duration=15.0,
            scenario=exp1_scenario(seed, depth),
            seed=seed,
        )
    if experiment_id == "exp2":
        return ExperimentSpec(
            id="exp2",
            conditions=(
                MimicryMode(Posture.NONE, False, cont),
                MimicryMode(Posture.NONE, True, cont),
            ),
            duration=20.0,
            scenario=exp2_scenario(seed, depth),
            seed=seed,
        )
    if experiment_id == "exp3":
        duration = config.harness.exp3_duration
        return ExperimentSpec(
            id="exp3",
            conditions=(
                MimicryMode(Posture.NONE, False, cont),
                MimicryMode(Posture.BOTH, True, cont),
            ),
            duration=duration,
            scenario=exp3_scenario(seed, duration, depth),
            seed=seed,
        )
    raise ConfigError(f"unknown experiment id: {experiment_id!r}")


# --- single condition execution ------------------------------------------------


def tick_count(duration: float, tick: float) -> int:
    return round(duration / tick)


def run_condition(
    config: Config,
    mode: MimicryMode,
    source: Scenario | TracePlayback,
    seed: int,
    duration: float,
) -> list[Envelope]:
    """Run one condition on a fresh pipeline; returns every envelope."""
    pipeline = fresh_pipeline(config, mode, source, seed=seed)
    envelopes: list[Envelope] = []
    pipeline.bus.publish_hook = envelopes.append
    pipeline.run_ticks(tick_count(duration, pipeline.tick))
    return envelopes


def write_trace_from_envelopes(path, envelopes: list[Envelope], seed: int, tick: float) -> None:
    truths = [e for e in envelopes if e.topic == TOPIC_TRUTH]
    frames = [e for e in envelopes if e.topic == TOPIC_FRAMES]
    with TraceRecorder(path, seed=seed, tick=tick) as rec:
        for te, fe in zip(truths, frames):
            rec.add(te.sim_time, te.payload, fe.payload)


# --- metrics --------------------------------------------------------------------


def tracking_error(head: HeadState, true_direction: tuple[float, float]) -> float:
    """Angular distance between head orientation and the ground-truth
    direction to the face."""
    dpan = head.pan - true_direction[0]
    dtilt = head.tilt - true_direction[1]
    return math.sqrt(dpan * dpan + dtilt * dtilt)


def _by_topic(envelopes: list[Envelope]) -> dict[str, list[Envelope]]:
    out: dict[str, list[Envelope]] = {}
    for env in envelopes:
        out.setdefault(env.topic, []).append(env)
    return out


def _nearest_rank(sorted_values: list[float], q: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(q * n))
    return sorted_values[rank - 1]


def _blend_to_label(blend, reverse_table) -> EmotionLabel | None:
    key = tuple(sorted(blend.weights.items()))
    return reverse_table.get(key)


def _onset_time(truths: list[Envelope]) -> float | None:
    """First instant the ground-truth face direction demands head motion:
    t=0 when it starts off-axis, else the first direction change."""
    if not truths:
        return None
    first_dir = face_bearing(truths[0].payload)
    if math.hypot(*first_dir) > 1e-9:
        return truths[0].sim_time
    for env in truths[1:]:
        d = face_bearing(env.payload)
        if math.hypot(d[0] - first_dir[0], d[1] - first_dir[1]) > 1e-9:
            return env.sim_time
    return None


def grace_window(config: Config) -> float:
    rate = config.perception.camera.rate
    return config.mimicry.k_debounce / rate + config.mimicry.min_hold


def emotion_match_rate(
    envelopes: list[Envelope], config: Config
) -> float | None:
    """Fraction of ticks whose displayed emotion equals ground truth,
    skipping a grace window after every ground-truth switch (and the run
    start)."""
    topics = _by_topic(envelopes)
    truths = topics.get(TOPIC_TRUTH, [])
    faces = topics.get(TOPIC_ECA_STATE, [])
    if not truths or not faces:
        raise ValueError("log has no ground truth or agent face envelopes")
    reverse = {
        tuple(sorted(weights.items())): label
        for label, weights in config.mimicry.au_table.items()
    }
    grace = grace_window(config)
    switches = [truths[0].sim_time]
    for prev, cur in zip(truths, truths[1:]):
        if cur.payload.expression != prev.payload.expression:
            switches.append(cur.sim_time)
    matches = 0
    eligible = 0
    for te, fe in zip(truths, faces):
        t = te.sim_time
        last_switch = max(s for s in switches if s <= t)
        if t - last_switch < grace:
            continue
        eligible += 1
        displayed = _blend_to_label(fe.payload.blend, reverse)
        if displayed == te.payload.expression:
            matches += 1
    if eligible == 0:
        return None
    return matches / eligible


def compute_metrics(envelopes: list[Envelope], config: Config, mode: MimicryMode) -> dict:
    topics = _by_topic(envelopes)
    truths = topics.get(TOPIC_TRUTH, [])
    heads = topics.get(TOPIC_HEAD_STATE, [])
    frames = topics.get(TOPIC_FRAMES, [])
    poses = topics.get(TOPIC_POSE, [])
    cmds = topics.get(TOPIC_HEAD_CMD, [])
    faces = topics.get(TOPIC_ECA_STATE, [])

    errors = [
        tracking_error(he.payload, face_bearing(te.payload))
        for te, he in zip(truths, heads)
    ]
    mean_err = sum(errors) / len(errors) if errors else None
    p95_err = _nearest_rank(sorted(errors), 0.95) if errors else None

    latency = None
    onset = _onset_time(truths)
    if onset is not None and heads:
        initial = heads[0].payload
        for env in heads:
            if env.payload.pan != initial.pan or env.payload.tilt != initial.tilt:
                if env.sim_time >= onset:
                    latency = env.sim_time - onset
                break

    saturated = sum(1 for env in cmds if clamp(env.payload, config.actuation.limits) != env.payload)
    saturation = saturated / len(cmds) if cmds else 0.0

    uptime = len(poses) / len(frames) if frames else 0.0

    match_rate = emotion_match_rate(envelopes, config) if truths and faces else None

    schedule = config.mimicry.schedule if mode.schedule is ScheduleKind.INTERMITTENT else None
    if faces:
        open_ticks = sum(1 for env in faces if gate_open(schedule, env.sim_time))
        duty = open_ticks / len(faces)
    else:
        duty = None

    return {
        "mean_tracking_error": mean_err,
        "p95_tracking_error": p95_err,
        "command_latency": latency,
        "clamp_saturation_fraction": saturation,
        "detection_uptime": uptime,
        "emotion_match_rate": match_rate,
        "mirror_duty": duty,
    }


# --- invariant audit --------------------------------------------------------------

RATE_SLOP = 1e-9  # float slack on the rate bound re-check


def audit_envelopes(envelopes: list[Envelope], config: Config, mode: MimicryMode) -> list[str]:
    """Offline re-check of the safety/routing invariants over a log."""
    violations: list[str] = []
    topics = _by_topic(envelopes)

    for name, envs in topics.items():
        expected = 1
        last_time = None
        for env in envs:
            if env.seq != expected:
                violations.append(f"{name}: seq gap, expected {expected} got {env.seq}")
                expected = env.seq
            expected += 1
            if last_time is not None and env.sim_time < last_time:
                violations.append(f"{name}: sim_time regressed at seq {env.seq}")
            last_time = env.sim_time

    limits = config.actuation.limits
    prev: HeadState | None = None
    for env in topics.get(TOPIC_HEAD_STATE, []):
        st: HeadState = env.payload
        if abs(st.pan) > limits.pan_max or abs(st.tilt) > limits.tilt_max:
            violations.append(f"head limits exceeded at t={env.sim_time}: ({st.pan}, {st.tilt})")
        if prev is not None:
            dt = st.sim_time - prev.sim_time
            bound = limits.rate_max * dt + RATE_SLOP
            if abs(st.pan - prev.pan) > bound or abs(st.tilt - prev.tilt) > bound:
                violations.append(f"head rate bound exceeded at t={env.sim_time}")
        prev = st

    eclamp = config.mimicry.eca_clamp
    for env in topics.get(TOPIC_ECA_STATE, []):
        face: EcaFaceState = env.payload
        if abs(face.gaze_pan) > eclamp.pan or abs(face.gaze_tilt) > eclamp.tilt:
            violations.append(f"agent gaze clamp exceeded at t={env.sim_time}")
        if any(not (0.0 <= w <= 1.0) for w in face.blend.weights.values()):
            violations.append(f"agent blend weight out of range at t={env.sim_time}")

    schedule = config.mimicry.schedule if mode.schedule is ScheduleKind.INTERMITTENT else None
    cmds = topics.get(TOPIC_HEAD_CMD, [])
    if mode.posture in (Posture.NONE, Posture.ECA_ONLY) and cmds:
        violations.append(f"head commands present under posture={mode.posture.value}")
    for env in cmds:
        if not gate_open(schedule, env.sim_time):
            violations.append(f"head command while gate closed at t={env.sim_time}")

    for env in topics.get(TOPIC_ECA_TARGET, []):
        target: EcaTarget = env.payload
        if target.gaze is not None:
            if mode.posture in (Posture.NONE, Posture.HEAD_ONLY):
                violations.append(f"agent gaze present under posture={mode.posture.value}")
            if not gate_open(schedule, env.sim_time):
                violations.append(f"agent gaze while gate closed at t={env.sim_time}")
        if not target.blend.is_neutral():
            if not mode.emotion_mirroring:
                violations.append(f"non-neutral blend with mirroring disabled at t={env.sim_time}")
            if not gate_open(schedule, env.sim_time):
                violations.append(f"non-neutral blend while gate closed at t={env.sim_time}")

    return violations


@dataclass
class AuditResult:
    ok: bool
    violations: list[str]
    metrics: dict
    header: dict


def audit_log(path) -> AuditResult:
    from .config import config_from_dict  # local import keeps module load light

    header, envelopes = read_log(path)
    config = config_from_dict(header["config"])
    mode = MimicryMode(
        posture=Posture(header["mode"]["posture"]),
        emotion_mirroring=header["mode"]["emotion_mirroring"],
        schedule=ScheduleKind(header["mode"]["schedule"]),
    )
    violations = audit_envelopes(envelopes, config, mode)
    metrics = compute_metrics(envelopes, config, mode)
    return AuditResult(ok=not violations, violations=violations, metrics=metrics, header=header)


# --- experiment runs ----------------------------------------------------------------


def condition_header(
    experiment: str | None, condition: int | None, mode: MimicryMode,
    seed: int, duration: float, config: Config,
) -> dict:
    return make_header(
        experiment=experiment,
        condition=condition,
        mode_dict=encode_message(mode),
        seed=seed,
        duration=duration,
        config_dict=config_to_dict(config),
    )


def run_experiment(experiment_id: str, seed: int, config: Config, out_dir) -> dict:
    """Run all conditions of a pilot experiment; write logs, traces and a
    metrics report; return the report."""
    spec = build_experiment(experiment_id, seed, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tick = config.effective_tick
    report_conditions = []
    for i, mode in enumerate(spec.conditions):
        envelopes = run_condition(config, mode, spec.scenario, spec.seed, spec.duration)
        log_path = out / f"{spec.id}_c{i}.jsonl"
        trace_path = out / f"{spec.id}_c{i}_trace.jsonl"
        header = condition_header(spec.id, i, mode, spec.seed, spec.duration, config)
        write_log(log_path, header, envelopes)
        write_trace_from_envelopes(trace_path, envelopes, spec.seed, tick)
        metrics = compute_metrics(envelopes, config, mode)
        report_conditions.append({
            "condition": i,
            "mode": encode_message(mode),
            "duration": spec.duration,
            "log": log_path.name,
            "trace": trace_path.name,
            "metrics": metrics,
        })
    report = {
        "experiment": spec.id,
        "seed": spec.seed,
        "note": SURROGATE_NOTE,
        "conditions": report_conditions,
    }
    # File names inside the report are relative to out_dir, keeping repeat
    # runs byte-comparable regardless of where they land.
    (out / "report.json").write_text(dumps(report) + "\n", encoding="utf-8")
    return {**report, "out_dir": str(out)}


def replay_trace(
    trace_path,
    config: Config,
    out_path,
    experiment: str | None = None,
    condition: int | None = None,
    seed: int | None = None,
) -> dict:
    """Re-run a recorded interlocutor trace through the pipeline.

    With experiment/condition given, the effective mode, duration and
    header match the original condition run, so the output log is
    byte-identical to the original.
    """
    playback = load_trace(trace_path)
    if abs(playback.tick - config.effective_tick) > 1e-12:
        raise ConfigError(
            f"trace tick {playback.tick} does not match configured tick {config.effective_tick}"
        )
    seed = playback.seed if seed is None else seed
    if experiment is not None:
        if condition is None:
            raise ConfigError("replaying an experiment trace requires --condition")
        spec = build_experiment(experiment, seed, config)
        if not (0 <= condition < len(spec.conditions)):
            raise ConfigError(f"{experiment} has no condition {condition}")
        mode = spec.conditions[condition]
        duration = spec.duration
    else:
        mode = config.mimicry.mode
        duration = len(playback) * playback.tick
    envelopes = run_condition(config, mode, playback, seed, duration)
    header = condition_header(experiment, condition, mode, seed, duration, config)
    write_log(out_path, header, envelopes)
    metrics = compute_metrics(envelopes, config, mode)
    return {
        "log": str(out_path),
        "ticks": tick_count(duration, config.effective_tick),
        "metrics": metrics,
    }
