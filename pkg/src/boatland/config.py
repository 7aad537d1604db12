"""Run configuration: a flat key/value file with sections, strict about
unknown keys so hyperparameter typos fail loudly.

Defaults follow the training protocol values: state 4, action 2, buffer
50000, gamma 0.99, learning rates 1e-4/1e-3, tau 1e-3, batch 512, episode
steps 1000 (train) / 2000 (eval), action bound 0.25 m/s.
"""

import configparser
from dataclasses import dataclass, field

from boatland.ddpg import Hyperparams
from boatland.errors import ConfigError
from boatland.mission import RewardConfig
from boatland.simworld import CameraModel, SceneConfig
from boatland.vision import PipelineConfig

_DEFAULTS = {
    "run": {
        "seed": 0,
        "episodes": 300,
        "max_steps_train": 1000,
        "max_steps_eval": 2000,
        "observation_mode": "ground_truth",  # ground_truth | vision
        "phase1_episodes": 60,
        "phase1_boat_x": 2.0,
        "phase1_boat_y": 1.5,
        "phase1_boat_yaw": 0.8,
        "checkpoint_every": 50,
        "tests": 100,
        "test_episode_limit": 10,
        "eval_workers": 0,  # 0 = one per CPU (capped at 8)
        "dt": 0.25,
        "start_altitude": 12.0,
        "max_offset": 4.0,
    },
    "camera": {
        "f_px": 256.0,
        "width": 256,
        "height": 256,
    },
    "scene": {
        "glint_count": 12,
        "glint_speed": 1.0,
        "ripple_amplitude": 0.05,
        "boat_length": 2.0,
        "boat_width": 1.0,
        "water_base_luminance": 0.33,
        "boat_luminance": 0.78,
        "deck_height": 0.5,
        "descent_rate": 0.1,
    },
    "pipeline": {
        "blur_sigma": 2.0,
        "lk_window": 15,
        "lk_stride": 8,
        "lk_min_eig": 1e-3,
        "flow_threshold": 2.5,
        "mask_radius": 12.0,
        "canny_low": 0.08,
        "canny_high": 0.20,
        "close_radius": 2,
    },
    "agent": {
        "gamma": 0.99,
        "lr_actor": 1e-4,
        "lr_critic": 1e-3,
        "tau": 1e-3,
        "buffer_capacity": 50000,
        "batch_size": 512,
        "action_scale": 0.25,
        "ou_theta": 0.15,
        "ou_sigma": 0.2,
    },
    "reward": {
        "success_threshold": 10.0,
        "success_reward": 250.0,
        "approach_reward": 0.1,
        "neutral_reward": 0.0,
        "lost_penalty": -10.0,
        "lost_sentinel": 1000000.0,
    },
}

_MODES = ("ground_truth", "vision")


@dataclass
class RunConfig:
    seed: int = 0
    episodes: int = 300
    max_steps_train: int = 1000
    max_steps_eval: int = 2000
    observation_mode: str = "ground_truth"
    phase1_episodes: int = 60
    phase1_boat_x: float = 2.0
    phase1_boat_y: float = 1.5
    phase1_boat_yaw: float = 0.8
    checkpoint_every: int = 50
    tests: int = 100
    test_episode_limit: int = 10
    eval_workers: int = 0
    dt: float = 0.25
    start_altitude: float = 12.0
    max_offset: float = 4.0
    camera: CameraModel = field(default_factory=CameraModel)
    scene: SceneConfig = field(default_factory=SceneConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    agent: Hyperparams = field(default_factory=Hyperparams)
    reward: RewardConfig = field(default_factory=RewardConfig)


def _convert(section, key, raw, default):
    try:
        if isinstance(default, int) and not isinstance(default, bool):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {type(default).__name__}"
        ) from None


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from defaults, an optional config file, and
    optional ('section.key', value) overrides. Unknown keys are errors."""
    values = {s: dict(kv) for s, kv in _DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            if section not in values:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in values[section]:
                    raise ConfigError(f"unknown config key [{section}] {key}")
                values[section][key] = _convert(
                    section, key, raw, _DEFAULTS[section][key]
                )
    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        if section not in values or key not in values[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        values[section][key] = _convert(section, key, value, _DEFAULTS[section][key])

    if values["run"]["observation_mode"] not in _MODES:
        raise ConfigError(
            f"observation_mode must be one of {_MODES}, "
            f"got {values['run']['observation_mode']!r}"
        )
    try:
        return RunConfig(
            **values["run"],
            camera=CameraModel(**values["camera"]),
            scene=SceneConfig(**values["scene"]),
            pipeline=PipelineConfig(**values["pipeline"]),
            agent=Hyperparams(**values["agent"]),
            reward=RewardConfig(**values["reward"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def default_config_text() -> str:
    """The full config file with default values, suitable as a template."""
    lines = []
    for section, kv in _DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, value in kv.items():
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)
