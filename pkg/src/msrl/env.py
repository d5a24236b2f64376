"""Reinforcement-learning environments.

:class:`MagneticRobotEnv` wraps the rod simulator behind a 100 Hz field
controller: every action is an in-plane field increment held for 10 ms.
:class:`PointMassEnv` is a 1D toy with the same interface and a known optimal
return, used to benchmark the learner.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .contact import GroundPlane, contact_indicators
from .dissipation import DampingConfig
from .errors import ConfigurationError
from .magnetics import (MU_T_PER_MT, FieldState, MagnetizationProfile, field_polar,
                        pattern_profile)
from .rod import GRAVITY, MaterialParams, build_rod
from .simulator import RobotSimulator

ACTION_PERIOD = 0.01
ACTION_LIMIT_MT = 0.3
RESET_MODES = ("random", "zero")


@dataclass(frozen=True)
class EnvConfig:
    """Controller, episode and physics settings.

    ``scale`` multiplies the density and divides gravity. ``reset_mode`` picks
    a random initial field inside the amplitude disc (training) or a zero
    field (rollouts). ``sampled_nodes=None`` samples every other node.
    """

    b_max_mT: float = 4.0
    episode_seconds: float = 20.0
    dt: float = 1e-4
    scale: float = 10.5
    reward_coefficient: float = 1000.0
    reset_mode: str = "random"
    n_elements: int = 20
    sampled_nodes: tuple | None = None
    settle_time: float = 0.2
    angular_velocity_scale: float = 10.0
    height_scale: float | None = None

    def __post_init__(self):
        if not self.b_max_mT > 0:
            raise ConfigurationError("b_max_mT must be positive")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        ratio = ACTION_PERIOD / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ConfigurationError(f"dt={self.dt} does not divide the 10 ms action period")
        if not self.scale >= 1:
            raise ConfigurationError("scale must be >= 1")
        if self.reset_mode not in RESET_MODES:
            raise ConfigurationError(f"reset_mode must be one of {RESET_MODES}")
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise ConfigurationError("n_elements must be an integer >= 2")
        steps = self.episode_seconds / ACTION_PERIOD
        if not steps >= 1 or abs(steps - round(steps)) > 1e-9 * steps:
            raise ConfigurationError("episode_seconds must be a positive multiple of 10 ms")
        if self.settle_time < 0:
            raise ConfigurationError("settle_time must be non-negative")
        if not self.angular_velocity_scale > 0:
            raise ConfigurationError("angular_velocity_scale must be positive")
        if self.height_scale is not None and not self.height_scale > 0:
            raise ConfigurationError("height_scale must be positive")
        if self.sampled_nodes is not None:
            nodes = tuple(int(i) for i in self.sampled_nodes)
            if not nodes or min(nodes) < 0 or max(nodes) > self.n_elements:
                raise ConfigurationError("sampled_nodes out of range")
            object.__setattr__(self, "sampled_nodes", nodes)

    @classmethod
    def scaled(cls, **overrides):
        """Training setting: density x10.5, gravity /10.5, dt = 1e-4 s."""
        return replace(cls(), **overrides)

    @classmethod
    def accurate(cls, **overrides):
        """Refinement setting: true density and gravity, dt = 8e-6 s."""
        return replace(cls(dt=8e-6, scale=1.0), **overrides)

    @property
    def substeps(self):
        return int(round(ACTION_PERIOD / self.dt))

    @property
    def max_steps(self):
        return int(round(self.episode_seconds / ACTION_PERIOD))

    @property
    def node_indices(self):
        if self.sampled_nodes is not None:
            return np.array(self.sampled_nodes)
        return np.arange(0, self.n_elements + 1, 2)

    @property
    def observation_size(self):
        return 3 * self.n_elements + 2 * len(self.node_indices) + 3


def clamp_field(b_mT, delta_mT, b_max_mT):
    """Apply an increment and project back into the amplitude disc.

    The sum is rescaled radially onto the circle of radius ``b_max_mT``. When
    that projection would move one axis by more than the increment cap, the
    increment is shortened instead (largest ``lam`` with
    ``|b + lam * delta| <= b_max``), so both the amplitude and the per-axis
    step bounds hold.

    Parameters
    ----------
    b_mT : array_like of shape (2,) or (3,)
        Current field; a third component is kept at zero.
    delta_mT : array_like of shape (2,)
        Increment, already clipped to the action bounds.
    b_max_mT : float

    Returns
    -------
    ndarray of shape (2,)
    """
    b = np.asarray(b_mT, dtype=float)[:2]
    d = np.asarray(delta_mT, dtype=float)[:2]
    cap = max(ACTION_LIMIT_MT, float(np.abs(d).max()))
    out = b + d
    amp = math.hypot(out[0], out[1])
    if amp <= b_max_mT:
        return out
    radial = out * (b_max_mT / amp)
    if np.all(np.abs(radial - b) <= cap):
        return _inside(radial, b_max_mT)
    # largest lam in [0, 1] with |b + lam d| <= b_max
    aa = d @ d
    bb = 2.0 * (b @ d)
    cc = b @ b - b_max_mT**2
    if aa == 0.0:
        return _inside(b, b_max_mT)
    disc = max(bb * bb - 4.0 * aa * cc, 0.0)
    lam = (-bb + math.sqrt(disc)) / (2.0 * aa)
    lam = min(max(lam, 0.0), 1.0)
    return _inside(b + lam * d, b_max_mT)


def _inside(b, b_max):
    # guard against the last ulp of the rescale
    while math.hypot(b[0], b[1]) > b_max:
        b = b * (1.0 - 2.0**-52)
    return b


def middle_x(positions):
    n = positions.shape[0]
    return 0.5 * (positions[(n - 1) // 2, 0] + positions[n // 2, 0])


def build_observation(rod, field, ground, cfg):
    """Observation vector.

    Layout: ``sin theta_j``, ``cos theta_j`` (in-plane tangent angle of every
    element), in-plane angular velocity of every element divided by
    ``cfg.angular_velocity_scale``, heights of the sampled nodes above the
    ground divided by the height scale, contact indicators of the sampled
    nodes, then ``sin phi_B``, ``cos phi_B`` and ``|B| / B_max``.
    """
    Q = rod.element_directors
    tangent = Q[:, 2, :]
    theta = np.arctan2(tangent[:, 1], tangent[:, 0])
    omega_z = np.einsum("na,na->n", Q[:, :, 2], rod.element_angular_velocities)
    nodes = cfg.node_indices
    length = rod.reference_lengths.sum()
    h_scale = length if cfg.height_scale is None else cfg.height_scale
    height = (rod.node_positions[nodes, 1] - ground.height) / h_scale
    indicators = contact_indicators(rod, ground)[nodes]
    phi, amp = field_polar(field)
    return np.concatenate([
        np.sin(theta),
        np.cos(theta),
        omega_z / cfg.angular_velocity_scale,
        height,
        indicators,
        [math.sin(phi), math.cos(phi), min(amp / field.b_max, 1.0)],
    ])


class MagneticRobotEnv:
    """Magnetic soft robot crawling on a flat ground.

    Parameters
    ----------
    cfg : EnvConfig
    material : MaterialParams, optional
        True material; the env applies ``cfg.scale`` itself.
    profile : MagnetizationProfile, optional
        Defaults to pattern 1.
    damping : DampingConfig, optional
    ground : GroundPlane, optional
        Defaults to :meth:`GroundPlane.sized_for` the rod.
    gravity : float
        True gravity; divided by ``cfg.scale``.
    """

    action_dim = 2
    action_scale = ACTION_LIMIT_MT

    def __init__(self, cfg=None, material=None, profile=None, damping=None, ground=None,
                 gravity=GRAVITY):
        self.cfg = EnvConfig() if cfg is None else cfg
        self.material = MaterialParams() if material is None else material
        n = self.cfg.n_elements
        self.profile = pattern_profile(1, n) if profile is None else profile
        if len(self.profile) != n:
            raise ConfigurationError(
                f"profile has {len(self.profile)} elements, env uses {n}"
            )
        self.damping = DampingConfig() if damping is None else damping
        self.gravity = gravity / self.cfg.scale
        scaled = self.material.scaled(self.cfg.scale)
        rod, self.rig = build_rod(scaled, n)
        self.ground = (GroundPlane.sized_for(rod, scaled.height, self.gravity)
                       if ground is None else ground)
        y0 = self.ground.height + self.ground.contact_offset
        self._initial, _ = build_rod(scaled, n, origin=(0.0, y0, 0.0))
        self._settled = None
        self._sim = None
        self._rng = np.random.default_rng()
        self.steps = 0
        self.observation_size = self.cfg.observation_size

    @property
    def field(self):
        return self._sim.field

    @property
    def rod(self):
        return self._sim.state

    @property
    def simulator(self):
        return self._sim

    @property
    def time(self):
        return self.steps * ACTION_PERIOD

    def _new_sim(self, rod, field):
        return RobotSimulator(rod, self.rig, self.cfg.dt, profile=self.profile, field=field,
                              damping=self.damping, ground=self.ground,
                              gravity=self.gravity)

    def settled_state(self):
        """Straight rod settled on the ground at zero field (cached)."""
        if self._settled is None:
            field = FieldState(np.zeros(3), self.cfg.b_max_mT * MU_T_PER_MT)
            sim = self._new_sim(self._initial, field)
            sim.advance(int(round(self.cfg.settle_time / self.cfg.dt)))
            self._settled = sim.state
        return self._settled

    def reset(self, seed=None, mode=None):
        """Start an episode and return the first observation.

        ``mode`` overrides ``cfg.reset_mode``: ``"random"`` draws the field
        uniformly from the amplitude disc, ``"zero"`` starts from no field.
        """
        mode = self.cfg.reset_mode if mode is None else mode
        if mode not in RESET_MODES:
            raise ConfigurationError(f"mode must be one of {RESET_MODES}")
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        b = np.zeros(3)
        if mode == "random":
            b[:2] = sample_disc(self._rng, self.cfg.b_max_mT)
        field = FieldState.from_mT(b, self.cfg.b_max_mT)
        self._sim = self._new_sim(self.settled_state(), field)
        self.steps = 0
        return self.observe()

    def observe(self):
        return build_observation(self._sim.state, self._sim.field, self.ground, self.cfg)

    def step(self, action):
        """Apply a field increment (mT) for 10 ms.

        Returns
        -------
        obs : ndarray
        reward : float
            ``c_r`` times the forward motion of the middle node.
        truncated : bool
            True once the episode time cap is reached.
        info : dict
            ``displacement`` (m) and ``field_mT``.
        """
        if self._sim is None:
            raise ConfigurationError("call reset() before step()")
        a = np.clip(np.asarray(action, dtype=float).reshape(2), -ACTION_LIMIT_MT, ACTION_LIMIT_MT)
        if not np.all(np.isfinite(a)):
            raise ConfigurationError("action must be finite")
        sim = self._sim
        b = clamp_field(sim.field.b_mT, a, self.cfg.b_max_mT)
        sim.field.b = np.array([b[0], b[1], 0.0]) * MU_T_PER_MT
        before = middle_x(sim._x)
        sim.advance(self.cfg.substeps)
        moved = middle_x(sim._x) - before
        self.steps += 1
        reward = self.cfg.reward_coefficient * moved
        truncated = self.steps >= self.cfg.max_steps
        info = {"displacement": moved, "field_mT": np.array([b[0], b[1], 0.0])}
        return self.observe(), float(reward), truncated, info


def sample_disc(rng, radius):
    """Uniform sample inside a disc."""
    r = radius * math.sqrt(rng.uniform())
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([r * math.cos(phi), r * math.sin(phi)])


class PointMassEnv:
    """Bounded-increment point mass on a line.

    The velocity ``v`` lives in ``[-1, 1]``; each action adds an increment in
    ``[-0.3, 0.3]`` and the reward is the new velocity, so the best policy
    always pushes forward. From ``v = 0`` the optimal return over ``H`` steps
    is ``sum_t min(0.3 t, 1)``.
    """

    action_dim = 1
    action_scale = ACTION_LIMIT_MT
    observation_size = 1

    def __init__(self, horizon=50, reset_mode="random"):
        if int(horizon) != horizon or horizon < 1:
            raise ConfigurationError("horizon must be a positive integer")
        if reset_mode not in RESET_MODES:
            raise ConfigurationError(f"reset_mode must be one of {RESET_MODES}")
        self.horizon = int(horizon)
        self.reset_mode = reset_mode
        self._rng = np.random.default_rng()
        self.v = 0.0
        self.steps = 0

    @property
    def optimal_return(self):
        t = np.arange(1, self.horizon + 1)
        return float(np.minimum(ACTION_LIMIT_MT * t, 1.0).sum())

    def reset(self, seed=None, mode=None):
        mode = self.reset_mode if mode is None else mode
        if mode not in RESET_MODES:
            raise ConfigurationError(f"mode must be one of {RESET_MODES}")
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.v = float(self._rng.uniform(-1.0, 1.0)) if mode == "random" else 0.0
        self.steps = 0
        return np.array([self.v])

    def step(self, action):
        a = float(np.clip(np.asarray(action, dtype=float).reshape(-1)[0],
                          -ACTION_LIMIT_MT, ACTION_LIMIT_MT))
        before = self.v
        self.v = min(max(self.v + a, -1.0), 1.0)
        self.steps += 1
        truncated = self.steps >= self.horizon
        info = {"displacement": self.v, "field_mT": np.array([self.v, 0.0, 0.0]),
                "previous": before}
        return np.array([self.v]), float(self.v), truncated, info
