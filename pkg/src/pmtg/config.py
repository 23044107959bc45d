"""Experiment configuration: schema, defaults, YAML I/O, dotted overrides.

A run is fully described by one nested config. Every field has a
documented default; loading resolves the file against the schema and
rejects unknown keys or bad types with the offending field path. The
fully resolved config is echoed into the output directory so runs are
self-describing and reproducible from that file plus the master seed.
"""

from __future__ import annotations

import hashlib
import types
import typing
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path

import yaml


class ConfigError(ValueError):
    """Schema violation; the message names the config field path."""


# ---------------------------------------------------------------- env


@dataclass
class PerturbSection:
    enabled: bool = True  # training only; evaluation disables pushes unless asked
    events: int = 4
    duration_s: float = 0.2
    max_fx: float = 10.0  # N
    max_fz: float = 60.0  # N


@dataclass
class QuadTaskSection:
    v_max: float = 0.4  # m/s
    episode_seconds: float = 25.0
    profile_fracs: tuple[float, float, float] = (0.2, 0.45, 0.75)
    perturb: PerturbSection = field(default_factory=PerturbSection)


@dataclass
class QuadModelSection:
    mass: float = 6.0  # kg
    inertia: float = 0.1  # kg m^2
    leg_length: float = 0.25  # m
    extension_gain: float = 0.1  # m/rad
    extension_reference: float = 1.2  # rad
    hip_offsets: tuple[float, float, float, float] = (0.2, 0.2, -0.2, -0.2)
    servo_rate: float = 20.0  # rad/s
    swing_limits: tuple[float, float] = (-1.1, 1.1)  # rad
    extension_limits: tuple[float, float] = (0.2, 2.8)  # rad
    fall_pitch: float = 0.8  # rad
    fall_height_fraction: float = 0.55


@dataclass
class QuadContactSection:
    normal_stiffness: float = 4000.0  # N/m
    normal_damping: float = 120.0  # N s/m
    tangential_stiffness: float = 4000.0  # N/m
    tangential_damping: float = 40.0  # N s/m
    friction: float = 0.8


@dataclass
class QuadrupedSection:
    task: QuadTaskSection = field(default_factory=QuadTaskSection)
    model: QuadModelSection = field(default_factory=QuadModelSection)
    contact: QuadContactSection = field(default_factory=QuadContactSection)
    physics_dt: float = 0.001  # s
    control_dt: float = 0.01  # s
    reset_noise_height: float = 0.005  # m
    reset_noise_pitch: float = 0.01  # rad


@dataclass
class PointmassSection:
    episode_steps: int = 400
    reset_noise: float = 0.05  # m
    rotation_deg: float = 20.0  # target-curve deformation
    scale: tuple[float, float] = (1.3, 0.7)
    base_amplitude: float = 0.6  # m
    offset: tuple[float, float] = (0.2, 0.1)  # m
    period: int = 100  # steps per cycle
    feedback_range: float = 0.5  # m, policy position correction
    amplitude_bounds: tuple[float, float] = (0.0, 1.2)  # squash range for a_x, a_y


@dataclass
class EnvSection:
    kind: str = "quadruped"  # quadruped | pointmass
    wiring: str = "pmtg"  # pmtg | vanilla | vanilla_time (pointmass only)
    quadruped: QuadrupedSection = field(default_factory=QuadrupedSection)
    pointmass: PointmassSection = field(default_factory=PointmassSection)


# ----------------------------------------------------------- tg/policy


@dataclass
class TgSection:
    gait: str = "walk"  # walk | bound
    # None means: use the gait table's default
    swing_center: float | None = None
    extension_swing_amplitude: float | None = None
    extension_asymmetry: float | None = None
    stance_fraction: float | None = None
    leg_phase_offsets: tuple[float, float, float, float] | None = None


@dataclass
class BoundsSection:
    frequency: tuple[float, float] = (0.0, 3.0)  # Hz
    amplitude: tuple[float, float] = (0.0, 0.6)  # rad
    height: tuple[float, float] = (0.8, 1.6)  # rad
    feedback: float = 0.3  # rad, symmetric correction range


@dataclass
class PolicySection:
    kind: str = "linear"  # linear | mlp
    hidden: tuple[int, int] = (32, 32)  # mlp only, each <= 200


# ---------------------------------------------------------------- optim


@dataclass
class ArsSection:
    step_size: float = 0.02
    noise_std: float = 0.025
    num_directions: int = 8
    top_directions: int = 4
    rollouts_per_direction: int = 1
    normalize_obs: bool = True


@dataclass
class PpoSection:
    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 3e-3
    epochs: int = 3
    minibatch_size: int = 256
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    action_std: float = 0.3
    rollouts_per_batch: int = 8
    value_hidden: tuple[int, int] = (32, 32)


@dataclass
class OptimSection:
    algo: str = "ars"  # ars | ppo
    ars: ArsSection = field(default_factory=ArsSection)
    ppo: PpoSection = field(default_factory=PpoSection)


@dataclass
class RunSection:
    master_seed: int = 0
    max_iterations: int = 100
    max_rollouts: int | None = None  # hard rollout budget; None = iterations only
    eval_every: int = 10  # iterations between deterministic evaluations
    eval_episodes: int = 4
    workers: int = 1
    output_dir: str | None = None
    timing: str = "wall"  # wall | zero; "zero" writes 0.0 so logs are byte-reproducible
    checkpoint_every: int = 50  # iterations; 0 disables periodic checkpoints
    early_stop_metric: str | None = None  # tracking_error | mean_return
    early_stop_threshold: float | None = None
    train_episode_steps: int | None = None  # pointmass: shorter episodes during training
    eval_perturbations: bool = False


@dataclass
class RunConfig:
    env: EnvSection = field(default_factory=EnvSection)
    tg: TgSection = field(default_factory=TgSection)
    bounds: BoundsSection = field(default_factory=BoundsSection)
    policy: PolicySection = field(default_factory=PolicySection)
    optim: OptimSection = field(default_factory=OptimSection)
    run: RunSection = field(default_factory=RunSection)


_ENUMS = {
    "env.kind": ("quadruped", "pointmass"),
    "env.wiring": ("pmtg", "vanilla", "vanilla_time"),
    "tg.gait": ("walk", "bound"),
    "policy.kind": ("linear", "mlp"),
    "optim.algo": ("ars", "ppo"),
    "run.timing": ("wall", "zero"),
}


def _coerce(value, hint, path: str):
    origin = typing.get_origin(hint)
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if origin in (typing.Union, types.UnionType):  # Optional[...]
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, args[0], path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        args = typing.get_args(hint)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{path}: expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(v, a, f"{path}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    if is_dataclass(hint):
        return _load_dataclass(hint, value, path)
    raise ConfigError(f"{path}: unsupported config type {hint!r}")


def _load_dataclass(cls, data, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or cls.__name__}: expected a mapping, got {data!r}")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: unknown field (known: {sorted(known)})")
    kwargs = {}
    for f in fields(cls):
        sub_path = f"{path}.{f.name}" if path else f.name
        if f.name in data:
            kwargs[f.name] = _coerce(data[f.name], hints[f.name], sub_path)
    return cls(**kwargs)


def _validate(cfg: RunConfig) -> None:
    def flat(obj, path=""):
        for f in fields(obj):
            v = getattr(obj, f.name)
            p = f"{path}.{f.name}" if path else f.name
            if is_dataclass(v):
                yield from flat(v, p)
            else:
                yield p, v

    values = dict(flat(cfg))
    for path, allowed in _ENUMS.items():
        if values[path] not in allowed:
            raise ConfigError(f"{path}: {values[path]!r} is not one of {allowed}")
    if cfg.env.kind == "quadruped" and cfg.env.wiring == "vanilla_time":
        raise ConfigError("env.wiring: vanilla_time applies to the pointmass task only")
    q = cfg.env.quadruped
    if q.task.v_max <= 0:
        raise ConfigError("env.quadruped.task.v_max: must be > 0")
    if q.task.episode_seconds <= 0:
        raise ConfigError("env.quadruped.task.episode_seconds: must be > 0")
    if q.physics_dt <= 0 or q.control_dt < q.physics_dt:
        raise ConfigError("env.quadruped: need 0 < physics_dt <= control_dt")
    if cfg.env.pointmass.episode_steps < 1:
        raise ConfigError("env.pointmass.episode_steps: must be >= 1")
    if cfg.tg.stance_fraction is not None and not 0.0 < cfg.tg.stance_fraction < 1.0:
        raise ConfigError("tg.stance_fraction: must lie in (0, 1)")
    for name in ("frequency", "amplitude", "height"):
        lo, hi = getattr(cfg.bounds, name)
        if not lo < hi:
            raise ConfigError(f"bounds.{name}: lower bound must be below upper bound")
    if cfg.bounds.frequency[0] < 0:
        raise ConfigError("bounds.frequency: frequency cannot be negative")
    if cfg.bounds.feedback <= 0:
        raise ConfigError("bounds.feedback: must be > 0")
    if cfg.policy.kind == "mlp":
        for h in cfg.policy.hidden:
            if not 1 <= h <= 200:
                raise ConfigError("policy.hidden: hidden sizes must lie in [1, 200]")
    a = cfg.optim.ars
    if not 1 <= a.top_directions <= a.num_directions:
        raise ConfigError("optim.ars.top_directions: must lie in [1, num_directions]")
    r = cfg.run
    if r.max_rollouts is not None and r.max_rollouts < 0:
        raise ConfigError("run.max_rollouts: must be >= 0")
    if r.eval_every < 1 or r.eval_episodes < 1:
        raise ConfigError("run: eval_every and eval_episodes must be >= 1")
    if r.workers < 1:
        raise ConfigError("run.workers: must be >= 1")
    if (r.early_stop_metric is None) != (r.early_stop_threshold is None):
        raise ConfigError("run: early_stop_metric and early_stop_threshold must be set together")
    if r.early_stop_metric not in (None, "tracking_error", "mean_return"):
        raise ConfigError("run.early_stop_metric: must be tracking_error or mean_return")


def config_from_dict(data: dict | None) -> RunConfig:
    cfg = _load_dataclass(RunConfig, data or {}, "")
    _validate(cfg)
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    def conv(v):
        if is_dataclass(v):
            return {f.name: conv(getattr(v, f.name)) for f in fields(v)}
        if isinstance(v, tuple):
            return [conv(x) for x in v]
        return v

    return conv(cfg)


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def config_hash(cfg: RunConfig) -> str:
    """Short stable digest of the resolved config (run section excluded).

    The run section holds orchestration knobs (budgets, workers, output
    paths) that do not change what a checkpointed policy means.
    """
    data = config_to_dict(cfg)
    data.pop("run", None)
    canon = yaml.safe_dump(data, sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply `dotted.path=value` strings on top of a config; values parse as YAML."""
    data = config_to_dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected dotted.path=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        node = data
        for k in keys[:-1]:
            if not isinstance(node, dict) or k not in node:
                raise ConfigError(f"override {dotted}: unknown section {k!r}")
            node = node[k]
        if not isinstance(node, dict) or keys[-1] not in node:
            raise ConfigError(f"override {dotted}: unknown field {keys[-1]!r}")
        try:
            node[keys[-1]] = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {dotted}: bad value {raw!r}: {exc}") from exc
    return config_from_dict(data)
