"""Configuration document: one nested mapping, sections per module.

Every tunable defaults to the pilot setup's value; a YAML/JSON file (or an
inline mapping) overrides by deep merge. Unknown keys and out-of-range
values are config errors reported before any simulation starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .actuation import EcaClamp, HeadLimits, LatencyConfig
from .interlocutor import DEFAULT_DEPTH
from .messages import EmotionLabel, MimicryMode, Posture, ScheduleKind
from .mimicry import (
    DEFAULT_AU_TABLE,
    AuTableError,
    EmotionHoldState,
    IntermittentSchedule,
    validate_au_table,
)
from .perception import CameraModel, NoiseConfig


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


@dataclass(frozen=True)
class InterlocutorConfig:
    depth: float = DEFAULT_DEPTH

    def __post_init__(self):
        if self.depth <= 0:
            raise ConfigError(f"interlocutor.depth must be positive, got {self.depth}")


@dataclass(frozen=True)
class PerceptionConfig:
    camera: CameraModel = field(default_factory=CameraModel)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    center_mode: str = "bbox"
    classify_every: int = 1

    def __post_init__(self):
        if self.center_mode not in ("bbox", "centroid"):
            raise ConfigError(f"perception.center_mode must be bbox|centroid, got {self.center_mode!r}")
        if self.classify_every < 1:
            raise ConfigError(f"perception.classify_every must be >= 1, got {self.classify_every}")


@dataclass(frozen=True)
class MimicryConfig:
    mode: MimicryMode = field(default_factory=MimicryMode)
    smoother_alpha: float = 0.3
    schedule: IntermittentSchedule = field(default_factory=IntermittentSchedule)
    k_debounce: int = 3
    min_hold: float = 1.0
    conf_threshold: float = 0.5
    eca_clamp: EcaClamp = field(default_factory=EcaClamp)
    au_table: dict[EmotionLabel, dict[int, float]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_AU_TABLE.items()}
    )

    def __post_init__(self):
        if not (0.0 < self.smoother_alpha <= 1.0):
            raise ConfigError(f"mimicry.smoother_alpha must be in (0, 1], got {self.smoother_alpha}")
        if not (0.0 <= self.conf_threshold <= 1.0):
            raise ConfigError(f"mimicry.conf_threshold must be in [0, 1], got {self.conf_threshold}")
        try:
            validate_au_table(self.au_table)
        except AuTableError as exc:
            raise ConfigError(f"mimicry.au_table: {exc}") from None

    def hold_state(self) -> EmotionHoldState:
        return EmotionHoldState(
            k_debounce=self.k_debounce,
            min_hold=self.min_hold,
            conf_threshold=self.conf_threshold,
        )


@dataclass(frozen=True)
class ActuationConfig:
    limits: HeadLimits = field(default_factory=HeadLimits)
    latency: LatencyConfig = field(default_factory=LatencyConfig)


@dataclass(frozen=True)
class HarnessConfig:
    exp3_duration: float = 30.0

    def __post_init__(self):
        if self.exp3_duration <= 0:
            raise ConfigError(f"harness.exp3_duration must be positive, got {self.exp3_duration}")


@dataclass(frozen=True)
class Config:
    tick: float | None = None  # None derives 1 / perception.camera.rate
    interlocutor: InterlocutorConfig = field(default_factory=InterlocutorConfig)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    mimicry: MimicryConfig = field(default_factory=MimicryConfig)
    actuation: ActuationConfig = field(default_factory=ActuationConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def __post_init__(self):
        if self.tick is not None and self.tick <= 0:
            raise ConfigError(f"tick must be positive, got {self.tick}")

    @property
    def effective_tick(self) -> float:
        return self.tick if self.tick is not None else 1.0 / self.perception.camera.rate


# --- dict <-> config ----------------------------------------------------------


def config_to_dict(cfg: Config) -> dict:
    m = cfg.mimicry
    return {
        "tick": cfg.tick,
        "interlocutor": {"depth": cfg.interlocutor.depth},
        "perception": {
            "camera": {
                "fov_h": cfg.perception.camera.fov_h,
                "fov_v": cfg.perception.camera.fov_v,
                "rate": cfg.perception.camera.rate,
            },
            "noise": {
                "misclassify_prob": cfg.perception.noise.misclassify_prob,
                "seed": cfg.perception.noise.seed,
            },
            "center_mode": cfg.perception.center_mode,
            "classify_every": cfg.perception.classify_every,
        },
        "mimicry": {
            "mode": {
                "posture": m.mode.posture.value,
                "emotion_mirroring": m.mode.emotion_mirroring,
                "schedule": m.mode.schedule.value,
            },
            "smoother_alpha": m.smoother_alpha,
            "schedule": {
                "on_window": m.schedule.on_window,
                "off_window": m.schedule.off_window,
                "phase": m.schedule.phase,
            },
            "k_debounce": m.k_debounce,
            "min_hold": m.min_hold,
            "conf_threshold": m.conf_threshold,
            "eca_clamp": {"pan": m.eca_clamp.pan, "tilt": m.eca_clamp.tilt},
            "au_table": {
                label.value: {str(au): w for au, w in sorted(weights.items())}
                for label, weights in sorted(m.au_table.items(), key=lambda kv: kv[0].value)
            },
        },
        "actuation": {
            "limits": {
                "pan_max": cfg.actuation.limits.pan_max,
                "tilt_max": cfg.actuation.limits.tilt_max,
                "rate_max": cfg.actuation.limits.rate_max,
            },
            "latency": {"delay": cfg.actuation.latency.delay},
        },
        "harness": {"exp3_duration": cfg.harness.exp3_duration},
    }


def _expect_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(value).__name__}")
    return value


def _take(section: dict, where: str, defaults: dict) -> dict:
    unknown = set(section) - set(defaults)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(section)
    return merged


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: expected a boolean, got {value!r}")
    return value


def _parse_mode(d: dict) -> MimicryMode:
    d = _take(_expect_mapping(d, "mimicry.mode"), "mimicry.mode", {
        "posture": Posture.BOTH.value,
        "emotion_mirroring": True,
        "schedule": ScheduleKind.CONTINUOUS.value,
    })
    try:
        posture = Posture(d["posture"])
        schedule = ScheduleKind(d["schedule"])
    except ValueError as exc:
        raise ConfigError(f"mimicry.mode: {exc}") from None
    return MimicryMode(
        posture=posture,
        emotion_mirroring=_bool(d["emotion_mirroring"], "mimicry.mode.emotion_mirroring"),
        schedule=schedule,
    )


def _parse_au_table(d) -> dict[EmotionLabel, dict[int, float]]:
    d = _expect_mapping(d, "mimicry.au_table")
    table: dict[EmotionLabel, dict[int, float]] = {}
    for key, weights in d.items():
        try:
            label = EmotionLabel(key)
        except ValueError:
            raise ConfigError(f"mimicry.au_table: unknown label {key!r}") from None
        weights = _expect_mapping(weights, f"mimicry.au_table.{key}")
        parsed = {}
        for au, w in weights.items():
            try:
                au_id = int(au)
            except (TypeError, ValueError):
                raise ConfigError(f"mimicry.au_table.{key}: bad AU id {au!r}") from None
            parsed[au_id] = _num(w, f"mimicry.au_table.{key}.{au}")
        table[label] = parsed
    return table


def config_from_dict(data: dict | None) -> Config:
    data = _expect_mapping(data, "config")
    top = _take(data, "config", {
        "tick": None, "interlocutor": {}, "perception": {}, "mimicry": {},
        "actuation": {}, "harness": {},
    })
    try:
        inter = _take(_expect_mapping(top["interlocutor"], "interlocutor"), "interlocutor",
                      {"depth": DEFAULT_DEPTH})
        percep = _take(_expect_mapping(top["perception"], "perception"), "perception", {
            "camera": {}, "noise": {}, "center_mode": "bbox", "classify_every": 1,
        })
        cam = _take(_expect_mapping(percep["camera"], "perception.camera"), "perception.camera",
                    {"fov_h": 58.0, "fov_v": 45.0, "rate": 30.0})
        noise = _take(_expect_mapping(percep["noise"], "perception.noise"), "perception.noise",
                      {"misclassify_prob": 0.1, "seed": None})
        mim = _take(_expect_mapping(top["mimicry"], "mimicry"), "mimicry", {
            "mode": {}, "smoother_alpha": 0.3, "schedule": {}, "k_debounce": 3,
            "min_hold": 1.0, "conf_threshold": 0.5, "eca_clamp": {}, "au_table": None,
        })
        sched = _take(_expect_mapping(mim["schedule"], "mimicry.schedule"), "mimicry.schedule",
                      {"on_window": 4.0, "off_window": 4.0, "phase": 0.0})
        eclamp = _take(_expect_mapping(mim["eca_clamp"], "mimicry.eca_clamp"), "mimicry.eca_clamp",
                       {"pan": 15.0, "tilt": 10.0})
        act = _take(_expect_mapping(top["actuation"], "actuation"), "actuation",
                    {"limits": {}, "latency": {}})
        lim = _take(_expect_mapping(act["limits"], "actuation.limits"), "actuation.limits",
                    {"pan_max": 35.0, "tilt_max": 23.0, "rate_max": 60.0})
        lat = _take(_expect_mapping(act["latency"], "actuation.latency"), "actuation.latency",
                    {"delay": 0.005})
        har = _take(_expect_mapping(top["harness"], "harness"), "harness",
                    {"exp3_duration": 30.0})

        tick = top["tick"]
        if tick is not None:
            tick = _num(tick, "tick")
        au_table = (
            {k: dict(v) for k, v in DEFAULT_AU_TABLE.items()}
            if mim["au_table"] is None
            else _parse_au_table(mim["au_table"])
        )
        return Config(
            tick=tick,
            interlocutor=InterlocutorConfig(depth=_num(inter["depth"], "interlocutor.depth")),
            perception=PerceptionConfig(
                camera=CameraModel(
                    fov_h=_num(cam["fov_h"], "perception.camera.fov_h"),
                    fov_v=_num(cam["fov_v"], "perception.camera.fov_v"),
                    rate=_num(cam["rate"], "perception.camera.rate"),
                ),
                noise=NoiseConfig(
                    misclassify_prob=_num(noise["misclassify_prob"], "perception.noise.misclassify_prob"),
                    seed=None if noise["seed"] is None
                    else _int(noise["seed"], "perception.noise.seed"),
                ),
                center_mode=percep["center_mode"],
                classify_every=_int(percep["classify_every"], "perception.classify_every"),
            ),
            mimicry=MimicryConfig(
                mode=_parse_mode(mim["mode"]),
                smoother_alpha=_num(mim["smoother_alpha"], "mimicry.smoother_alpha"),
                schedule=IntermittentSchedule(
                    on_window=_num(sched["on_window"], "mimicry.schedule.on_window"),
                    off_window=_num(sched["off_window"], "mimicry.schedule.off_window"),
                    phase=_num(sched["phase"], "mimicry.schedule.phase"),
                ),
                k_debounce=_int(mim["k_debounce"], "mimicry.k_debounce"),
                min_hold=_num(mim["min_hold"], "mimicry.min_hold"),
                conf_threshold=_num(mim["conf_threshold"], "mimicry.conf_threshold"),
                eca_clamp=EcaClamp(
                    pan=_num(eclamp["pan"], "mimicry.eca_clamp.pan"),
                    tilt=_num(eclamp["tilt"], "mimicry.eca_clamp.tilt"),
                ),
                au_table=au_table,
            ),
            actuation=ActuationConfig(
                limits=HeadLimits(
                    pan_max=_num(lim["pan_max"], "actuation.limits.pan_max"),
                    tilt_max=_num(lim["tilt_max"], "actuation.limits.tilt_max"),
                    rate_max=_num(lim["rate_max"], "actuation.limits.rate_max"),
                ),
                latency=LatencyConfig(delay=_num(lat["delay"], "actuation.latency.delay")),
            ),
            harness=HarnessConfig(
                exp3_duration=_num(har["exp3_duration"], "harness.exp3_duration")
            ),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> Config:
    """Config from a YAML (or JSON) document; None means all defaults."""
    if path is None:
        return Config()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is None:
        return Config()
    return config_from_dict(data)


def merge_overrides(cfg: Config, overrides: dict | None) -> Config:
    """Deep-merge an override mapping onto a config."""
    if not overrides:
        return cfg

    def deep(base: dict, over: dict) -> dict:
        out = dict(base)
        for k, v in over.items():
            if isinstance(v, dict) and isinstance(out.get(k), dict):
                out[k] = deep(out[k], v)
            else:
                out[k] = v
        return out

    return config_from_dict(deep(config_to_dict(cfg), overrides))
