"""Run configuration: one JSON file feeding every subsystem's constants."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .control import AccelConfig, PidState
from .localize import TrainConfig
from .percept import CameraModel
from .reward import RewardConfig
from .sim import SimConfig

LOCALIZATION_MODES = ("off", "segment", "sections", "zones")


@dataclass
class DriverSettings:
    pool_h: int = 12
    pool_w: int = 16
    practice_speed: float = 9.5
    zone2_release_speed: float = 11.0
    zone1_corner_speed: float = 7.0
    creep_speed: float = 3.0
    steer_speed_ref: float = 12.0
    lateral_accel: float = 3.0
    brake_decel: float = 7.0
    blind_speed: float = 6.0


@dataclass
class RunConfig:
    track: str = ""
    sim: SimConfig = field(default_factory=SimConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    pid: PidState = field(default_factory=PidState)
    accel: AccelConfig = field(default_factory=AccelConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    driver: DriverSettings = field(default_factory=DriverSettings)
    localization: str = "off"
    laps: int = 3
    seed: int = 0
    sample_budget: int = 4500
    mask_noise: float = 0.0
    finetune_threshold: float = 0.05

    def __post_init__(self):
        if self.localization not in LOCALIZATION_MODES:
            raise ValueError(f"localization must be one of {LOCALIZATION_MODES}")
        if self.laps < 1:
            raise ValueError("laps must be >= 1")

    def with_seed(self, seed: int) -> "RunConfig":
        cfg = dataclasses.replace(self)
        cfg.seed = seed
        cfg.sim = dataclasses.replace(cfg.sim, rng_seed=seed)
        cfg.train = dataclasses.replace(cfg.train, rng_seed=seed)
        return cfg


_SECTIONS = {
    "sim": SimConfig,
    "camera": CameraModel,
    "pid": PidState,
    "accel": AccelConfig,
    "reward": RewardConfig,
    "train": TrainConfig,
    "driver": DriverSettings,
}


def load_run_config(path) -> RunConfig:
    """Parse a run config JSON file; unknown keys are rejected loudly."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return run_config_from_dict(raw, origin=str(path))


def run_config_from_dict(raw: dict, origin: str = "<dict>") -> RunConfig:
    kwargs = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            cls = _SECTIONS[key]
            valid = {f.name for f in dataclasses.fields(cls)}
            unknown = set(value) - valid
            if unknown:
                raise ValueError(f"{origin}: unknown keys in '{key}': {sorted(unknown)}")
            if key == "accel" and "action_set" in value:
                value = dict(value, action_set=tuple(value["action_set"]))
            kwargs[key] = cls(**value)
        elif key in ("track", "localization", "laps", "seed", "sample_budget", "mask_noise", "finetune_threshold"):
            kwargs[key] = value
        else:
            raise ValueError(f"{origin}: unknown config key '{key}'")
    return RunConfig(**kwargs)
