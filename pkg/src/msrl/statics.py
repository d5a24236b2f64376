"""Static equilibrium scenarios by dynamic relaxation.

The rod is integrated with a uniform velocity drag (which leaves equilibria
unchanged) until its kinetic energy falls below a threshold tied to a 1e-9
relative residual motion. Field angles are
clockwise from +x.
"""

import math
from dataclasses import dataclass

import numpy as np

from .contact import GroundPlane
from .errors import ConfigurationError
from .magnetics import (DEFAULT_MAGNETIZATION, FieldState, sinusoidal_profile,
                        uniform_profile)
from .rod import MaterialParams, build_rod, kinetic_energy, stability_dt
from .simulator import RobotSimulator

PROFILES = ("sinusoidal", "axial")
BOUNDARIES = ("free", "clamped")


@dataclass(frozen=True)
class StaticScenario:
    """Geometry, magnetization, boundary and field of one static test.

    Defaults are the 3.7 x 1.5 x 0.185 mm sinusoidally magnetized robot,
    floating freely without gravity. ``density_scale`` multiplies the density
    and divides gravity.
    """

    length: float = 3.7e-3
    width: float = 1.5e-3
    height: float = 0.185e-3
    youngs_modulus: float = 84.5e3
    density: float = 1860.0
    magnetization: float = DEFAULT_MAGNETIZATION
    profile: str = "sinusoidal"
    boundary: str = "free"
    alpha_deg: float = 0.0
    amplitude_mT: float = 0.0
    gravity: float = 0.0
    ground: bool = False
    density_scale: float = 1.0
    n_elements: int = 20
    drag_factor: float = 1.0
    max_periods: float = 60.0
    motion_tol: float = 1e-9

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigurationError(f"profile must be one of {PROFILES}")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARIES}")
        if self.amplitude_mT < 0:
            raise ConfigurationError("amplitude_mT must be non-negative")
        if not self.density_scale >= 1:
            raise ConfigurationError("density_scale must be >= 1")
        if self.ground and self.gravity <= 0:
            raise ConfigurationError("a ground needs positive gravity to rest on")

    @property
    def material(self):
        return MaterialParams(self.youngs_modulus, self.density * self.density_scale,
                              self.width, self.height, self.length)

    @property
    def field_mT(self):
        a = -math.radians(self.alpha_deg)
        return np.array([math.cos(a), math.sin(a), 0.0]) * self.amplitude_mT

    def first_mode(self):
        """Clamped-free first bending frequency estimate, rad/s."""
        mat = self.material
        ei = mat.youngs_modulus * mat.width * mat.height**3 / 12.0
        return 1.8751**2 / self.length**2 * math.sqrt(ei / (mat.density * mat.area))


@dataclass
class StaticReport:
    positions: np.ndarray
    max_deflection: float
    relative_deflection: float
    converged: bool
    time: float
    kinetic_energy: float


def deflection(positions, boundary, origin=None):
    """Largest distance of a node from the reference straight line.

    Clamped rods are measured from their initial axis (through ``origin``
    along +x); free rods from the chord through their end nodes.
    """
    p = positions[:, :2]
    if boundary == "clamped":
        base = np.zeros(2) if origin is None else np.asarray(origin)[:2]
        return float(np.abs(p[:, 1] - base[1]).max())
    chord = p[-1] - p[0]
    norm = np.linalg.norm(chord)
    if norm == 0:
        return float(np.linalg.norm(p - p[0], axis=1).max())
    n = np.array([-chord[1], chord[0]]) / norm
    return float(np.abs((p - p[0]) @ n).max())


def validate_static(scenario):
    """Relax ``scenario`` to equilibrium and report its shape.

    Returns a :class:`StaticReport`; ``converged`` is False when the time
    budget of ``max_periods`` first-mode periods runs out first.
    """
    sc = scenario
    mat = sc.material
    clamped = sc.boundary == "clamped"
    gravity = sc.gravity / sc.density_scale
    y0 = 0.5 * sc.height if sc.ground else 0.0
    rod, rig = build_rod(mat, sc.n_elements, origin=(0.0, y0, 0.0), clamped=clamped)
    n = sc.n_elements
    if sc.profile == "sinusoidal":
        profile = sinusoidal_profile(n, sc.length, sc.magnetization)
    else:
        profile = uniform_profile(n, "+d3", sc.magnetization)
    ground = GroundPlane.sized_for(rod, sc.height, gravity) if sc.ground else None

    omega = sc.first_mode()
    dt = stability_dt(rod, rig)
    sim = RobotSimulator(rod, rig, dt, profile=profile,
                         field=FieldState.from_mT(sc.field_mT, max(sc.amplitude_mT, 1.0)),
                         ground=ground, gravity=gravity, drag=sc.drag_factor * omega)

    period = 2.0 * math.pi / omega
    chunk = max(1, int(0.05 * period / dt))
    v_tol = sc.motion_tol * sc.length * omega
    ke_tol = 0.5 * rod.total_mass * v_tol**2
    budget = int(sc.max_periods * period / dt)
    converged = False
    ke = float("inf")
    while sim.steps_taken < budget:
        sim.advance(chunk)
        ke = kinetic_energy(sim.state)
        if ke < ke_tol and sim.steps_taken * dt > period:
            converged = True
            break
    x = sim.state.node_positions
    d = deflection(x, sc.boundary, rod.node_positions[0])
    return StaticReport(x, d, d / sc.length, converged, sim.time, ke)
