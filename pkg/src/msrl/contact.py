"""Flat ground: penalty normal force, regularized Coulomb friction, gravity."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .rod import GRAVITY


@dataclass(frozen=True)
class GroundPlane:
    """Ground coefficients.

    ``contact_offset`` is the distance from a node (centerline) to the bottom
    face of the band, so a node touches the ground when
    ``y <= height + contact_offset``.
    """

    height: float = 0.0
    stiffness: float = 10.0
    damping: float = 0.0
    static_friction: float = 0.8
    kinetic_friction: float = 0.6
    slip_velocity: float = 1e-4
    reference_depth: float = 8e-6
    contact_offset: float = 0.0

    def __post_init__(self):
        if not self.stiffness > 0:
            raise ConfigurationError("ground stiffness must be positive")
        if self.damping < 0:
            raise ConfigurationError("ground damping must be non-negative")
        if not 0 <= self.kinetic_friction <= self.static_friction:
            raise ConfigurationError("need 0 <= mu_k <= mu_s")
        if not self.slip_velocity > 0:
            raise ConfigurationError("slip velocity must be positive")
        if not self.reference_depth > 0:
            raise ConfigurationError("reference depth must be positive")

    @classmethod
    def sized_for(cls, rod, thickness, gravity=GRAVITY, penetration_fraction=0.01,
                  damping_ratio=1.0, **overrides):
        """Stiffness giving a resting penetration of ``penetration_fraction``
        of the band thickness under the heaviest node, with the indicator
        reference depth set to that penetration."""
        weight = rod.node_masses.max() * gravity
        depth = penetration_fraction * thickness
        k = weight / depth
        c = 2.0 * damping_ratio * math.sqrt(k * rod.node_masses.max())
        base = cls(stiffness=k, damping=c, reference_depth=depth,
                   contact_offset=0.5 * thickness)
        return replace(base, **overrides)

    def penetration(self, rod):
        return self.height + self.contact_offset - rod.node_positions[:, 1]


def normal_forces(rod, ground):
    delta = ground.penetration(rod)
    vy = rod.node_velocities[:, 1]
    fn = ground.stiffness * delta + ground.damping * np.maximum(0.0, -vy)
    return np.where(delta >= 0.0, np.maximum(fn, 0.0), 0.0)


def ground_response(rod, ground, gravity=GRAVITY, applied_forces=None, dt=None):
    """Gravity plus ground reaction on every node (lab frame, N).

    Friction sticks when the tangential speed is below ``slip_velocity`` and
    the holding force does not exceed ``mu_s F_n``. The holding force cancels
    the tangential part of ``applied_forces`` and, when ``dt`` is given, also
    the momentum that would carry the node on during the step. Otherwise
    kinetic friction ``mu_k F_n`` opposes the sliding direction.
    """
    v = rod.node_velocities
    m = rod.node_masses
    f = np.zeros_like(v)
    f[:, 1] = -gravity * m

    fn = normal_forces(rod, ground)
    f[:, 1] += fn

    vt = v.copy()
    vt[:, 1] = 0.0
    hold = np.zeros_like(v)
    if applied_forces is not None:
        hold += applied_forces
        hold[:, 1] = 0.0
    if dt is not None:
        hold += m[:, None] * vt / dt

    speed = np.linalg.norm(vt, axis=1)
    hold_norm = np.linalg.norm(hold, axis=1)
    in_contact = ground.penetration(rod) >= 0.0
    stick = in_contact & (speed < ground.slip_velocity) & (hold_norm <= ground.static_friction * fn)

    direction = np.zeros_like(v)
    moving = speed > 0.0
    direction[moving] = vt[moving] / speed[moving, None]
    pushed = ~moving & (hold_norm > 0.0)
    direction[pushed] = hold[pushed] / hold_norm[pushed, None]

    friction = -ground.kinetic_friction * fn[:, None] * direction
    friction[stick] = -hold[stick]
    friction[~in_contact] = 0.0
    return f + friction


def contact_indicators(rod, ground):
    """0 off the ground, ``1 + delta / reference_depth`` when touching."""
    delta = ground.penetration(rod)
    return np.where(delta >= 0.0, 1.0 + delta / ground.reference_depth, 0.0)
