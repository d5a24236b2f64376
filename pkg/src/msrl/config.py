"""Experiment configuration: one YAML file, one section per component.

Unknown keys are rejected. :meth:`ExperimentConfig.hash` is a SHA-256 of the
canonical JSON form and is embedded in every run output.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from ._io import atomic_write_text
from .contact import GroundPlane
from .dissipation import DampingConfig
from .env import EnvConfig, MagneticRobotEnv, PointMassEnv
from .errors import ConfigurationError
from .magnetics import (DEFAULT_MAGNETIZATION, piecewise_profile, pattern_profile,
                        sinusoidal_profile)
from .rod import GRAVITY, MaterialParams, build_rod
from .statics import StaticScenario
from .td3.agent import Hyperparams, TD3Agent

ENV_KINDS = ("robot", "point_mass")


@dataclass(frozen=True)
class MagnetizationSpec:
    """``kind`` is ``"pattern"`` (built-in ``pattern`` 1 or 2),
    ``"piecewise"`` (``segments`` as ``[[start, stop, direction], ...]``)
    or ``"sinusoidal"``."""

    kind: str = "pattern"
    pattern: int = 1
    magnitude: float = DEFAULT_MAGNETIZATION
    segments: tuple | None = None
    wavelength: float | None = None
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("pattern", "piecewise", "sinusoidal"):
            raise ConfigurationError(f"unknown magnetization kind {self.kind!r}")
        if self.segments is not None:
            segs = []
            for seg in self.segments:
                if len(seg) != 3:
                    raise ConfigurationError("segments are [start, stop, direction]")
                a, b, d = seg
                d = d if isinstance(d, str) else tuple(float(x) for x in d)
                segs.append((float(a), float(b), d))
            object.__setattr__(self, "segments", tuple(segs))
        if self.kind == "piecewise" and not self.segments:
            raise ConfigurationError("piecewise magnetization needs segments")

    def build(self, n_elements, length):
        if self.kind == "pattern":
            return pattern_profile(self.pattern, n_elements, self.magnitude)
        if self.kind == "sinusoidal":
            return sinusoidal_profile(n_elements, length, self.magnitude, self.wavelength,
                                      self.phase)
        segments = [((a, b), d) for a, b, d in self.segments]
        return piecewise_profile(segments, n_elements, self.magnitude)


@dataclass(frozen=True)
class GroundSpec:
    """Ground coefficients; any coefficient left ``None`` is sized from the
    rod by :meth:`GroundPlane.sized_for`."""

    height: float = 0.0
    stiffness: float | None = None
    damping: float | None = None
    static_friction: float = 0.8
    kinetic_friction: float = 0.6
    slip_velocity: float = 1e-4
    reference_depth: float | None = None
    contact_offset: float | None = None
    penetration_fraction: float = 0.01
    damping_ratio: float = 1.0

    def build(self, rod, thickness, gravity):
        overrides = {k: v for k, v in asdict(self).items()
                     if k not in ("penetration_fraction", "damping_ratio") and v is not None}
        return GroundPlane.sized_for(rod, thickness, gravity, self.penetration_fraction,
                                     self.damping_ratio, **overrides)


@dataclass(frozen=True)
class EnvSpec:
    kind: str = "robot"
    horizon: int = 50
    settings: EnvConfig = field(default_factory=EnvConfig)

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise ConfigurationError(f"env kind must be one of {ENV_KINDS}")


@dataclass(frozen=True)
class TrainConfig:
    """Two-phase schedule and evaluation settings.

    ``scale`` is the density/gravity factor of the first phase (it overrides
    the env section during training); the refine phase runs at scale 1 with
    ``refine_dt``. ``eval_horizon=None`` evaluates full episodes. With
    ``stop_ema`` set, a phase ends early once the EMA return reaches it.
    """

    scaled_steps: int = 100_000
    refine_steps: int = 1000
    scale: float = 10.5
    refine_dt: float = 8e-6
    eval_interval: int = 1000
    eval_episodes: int = 1
    eval_horizon: int | None = None
    ema_factor: float = 0.99
    seeds: tuple = (0, 1, 2, 3, 4, 5, 6, 7)
    stability_fraction: float = 0.5
    stability_threshold: float | None = None
    stop_ema: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.scaled_steps < 0 or self.refine_steps < 0:
            raise ConfigurationError("phase steps must be non-negative")
        if not self.scale >= 1:
            raise ConfigurationError("scale must be >= 1")
        if self.eval_interval < 1 or self.eval_episodes < 1:
            raise ConfigurationError("eval_interval and eval_episodes must be >= 1")
        if self.eval_horizon is not None and self.eval_horizon < 1:
            raise ConfigurationError("eval_horizon must be >= 1")
        if not 0 < self.ema_factor <= 1:
            raise ConfigurationError("ema_factor must lie in (0, 1]")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")


_SECTIONS = {
    "material": MaterialParams,
    "magnetization": MagnetizationSpec,
    "damping": DampingConfig,
    "ground": GroundSpec,
    "train": TrainConfig,
    "agent": Hyperparams,
    "static": StaticScenario,
}


def _build(cls, data, section):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {section!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {section}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"bad value in {section}: {exc}") from None


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    material: MaterialParams = field(default_factory=MaterialParams)
    magnetization: MagnetizationSpec = field(default_factory=MagnetizationSpec)
    damping: DampingConfig = field(default_factory=DampingConfig)
    ground: GroundSpec = field(default_factory=GroundSpec)
    env: EnvSpec = field(default_factory=EnvSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    agent: Hyperparams = field(default_factory=Hyperparams)
    static: StaticScenario = field(default_factory=StaticScenario)
    gravity: float = GRAVITY

    @classmethod
    def from_dict(cls, data):
        data = {} if data is None else dict(data)
        allowed = set(_SECTIONS) | {"env", "gravity"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigurationError(f"unknown top-level key(s): {', '.join(unknown)}")
        kw = {name: _build(kind, data.get(name), name) for name, kind in _SECTIONS.items()}
        env = dict(data.get("env") or {})
        kind = env.pop("kind", "robot")
        horizon = env.pop("horizon", 50)
        kw["env"] = EnvSpec(kind, horizon, _build(EnvConfig, env, "env"))
        if "gravity" in data:
            kw["gravity"] = float(data["gravity"])
        return cls(**kw)

    def to_dict(self):
        out = {name: _plain(asdict(getattr(self, name))) for name in _SECTIONS}
        env = _plain(asdict(self.env.settings))
        env.update(kind=self.env.kind, horizon=self.env.horizon)
        out["env"] = env
        out["gravity"] = self.gravity
        return out

    @classmethod
    def from_yaml(cls, text):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"invalid YAML: {exc}".splitlines()[0]) from None
        if data is not None and not isinstance(data, dict):
            raise ConfigurationError("configuration must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_yaml(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def save(self, path):
        atomic_write_text(path, self.to_yaml())

    def hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    # factories ---------------------------------------------------------------
    def env_config(self, phase="scaled"):
        """Env settings for ``"scaled"`` (training), ``"accurate"`` (refine) or
        ``"as_is"`` (the env section unchanged)."""
        s = self.env.settings
        if phase == "scaled":
            return replace(s, scale=self.train.scale)
        if phase == "accurate":
            return replace(s, scale=1.0, dt=self.train.refine_dt)
        if phase == "as_is":
            return s
        raise ConfigurationError(f"unknown phase {phase!r}")

    def make_env(self, phase="scaled", reset_mode=None):
        if self.env.kind == "point_mass":
            mode = reset_mode or self.env.settings.reset_mode
            return PointMassEnv(self.env.horizon, mode)
        cfg = self.env_config(phase)
        if reset_mode is not None:
            cfg = replace(cfg, reset_mode=reset_mode)
        profile = self.magnetization.build(cfg.n_elements, self.material.length)
        scaled = self.material.scaled(cfg.scale)
        rod, _ = build_rod(scaled, cfg.n_elements)
        gravity = self.gravity / cfg.scale
        ground = self.ground.build(rod, scaled.height, gravity)
        return MagneticRobotEnv(cfg, self.material, profile, self.damping, ground, self.gravity)

    def make_agent(self, seed):
        return TD3Agent(**asdict(self.agent), random_state=seed)
