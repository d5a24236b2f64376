"""Discrete Cosserat rod carried in 3D, loaded in the x-y plane.

Nodes ``i = 0..N`` carry positions and velocities; elements ``j = 0..N-1``
carry a director frame ``Q_j`` (rows ``d1, d2, d3``), an angular velocity in
the material frame and a diagonal material inertia. Elastic loads are the
exact gradients of the discrete energy

    E = sum_j  1/2 l0_j (sigma_j - sigma0_j)^T S (sigma_j - sigma0_j)
      + sum_k  1/2 D_k  (kappa_k - kappa0_k)^T B (kappa_k - kappa0_k)

with ``sigma_j = Q_j t_j / l0_j - e3`` and ``kappa_k = log(Q_{k-1} Q_k^T) / D_k``,
so the symplectic integrator conserves it to second order in ``dt``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _so3
from .errors import ConfigurationError, InstabilityError, NumericalDegeneracyError
from .magnetics import circular_rigidities, equivalent_radius

GRAVITY = 9.81
BLOWUP_SPEED = 1e3
# fixed-point passes for the midpoint gyroscopic term
GYRO_ITERATIONS = 3


@dataclass(frozen=True)
class MaterialParams:
    """Bulk material and band geometry. Defaults are the 20 x 8 x 0.8 mm robot."""

    youngs_modulus: float = 84.5e3
    density: float = 1860.0
    width: float = 8e-3
    height: float = 0.8e-3
    length: float = 20e-3
    shear_modulus: float | None = None

    def __post_init__(self):
        for name in ("youngs_modulus", "density", "width", "height", "length"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be strictly positive")
        if self.shear_modulus is not None and not self.shear_modulus > 0:
            raise ConfigurationError("shear_modulus must be strictly positive")

    @property
    def G(self):
        # incompressible elastomer: nu = 0.5
        return self.youngs_modulus / 3.0 if self.shear_modulus is None else self.shear_modulus

    @property
    def area(self):
        return self.width * self.height

    def scaled(self, density_factor):
        return replace(self, density=self.density * density_factor)


@dataclass(frozen=True)
class RigidityTable:
    bending_rigidity: float
    shear_rigidity: float
    stretch_rigidity: float
    alpha_c: float = 1.0
    twist_rigidity: float | None = None

    @property
    def bend_diag(self):
        twist = self.bending_rigidity if self.twist_rigidity is None else self.twist_rigidity
        return np.array([self.bending_rigidity, self.bending_rigidity, twist])

    @property
    def shear_diag(self):
        return np.array([self.shear_rigidity, self.shear_rigidity, self.stretch_rigidity])


def section_rigidities(material, alpha_c=1.0):
    """Rigidities of the band obtained through the circular-section model.

    Per-area rigidities come from a circle of radius ``h / sqrt(3)`` and are
    multiplied by the true band area, which reproduces ``E w h^3 / 12``,
    ``alpha_c G w h`` and ``E w h``.
    """
    r = equivalent_radius(material.height)
    circle_area = math.pi * r**2
    bend, shear, stretch = circular_rigidities(r, material.youngs_modulus, material.G, alpha_c)
    ratio = material.area / circle_area
    # circular polar moment is twice the bending moment
    twist = material.G * 2.0 * (math.pi * r**4 / 4.0) * ratio
    return RigidityTable(bend * ratio, shear * ratio, stretch * ratio, alpha_c, twist)


@dataclass(frozen=True)
class RodState:
    """Full state of one rod. ``element_inertias`` is the material diagonal,
    column 1 being the in-plane bending axis."""

    node_positions: np.ndarray
    node_velocities: np.ndarray
    element_directors: np.ndarray
    element_angular_velocities: np.ndarray
    reference_lengths: np.ndarray
    node_masses: np.ndarray
    element_inertias: np.ndarray
    element_volumes: np.ndarray
    rest_curvature: np.ndarray | None = None
    rest_shear: np.ndarray | None = None
    clamp_position: np.ndarray | None = None
    clamp_frame: np.ndarray | None = None

    @property
    def n_elements(self):
        return self.reference_lengths.shape[0]

    @property
    def total_mass(self):
        return float(self.node_masses.sum())

    @property
    def voronoi_lengths(self):
        l0 = self.reference_lengths
        return 0.5 * (l0[:-1] + l0[1:])

    def with_(self, **changes):
        return replace(self, **changes)

    def copy(self):
        return replace(
            self,
            node_positions=self.node_positions.copy(),
            node_velocities=self.node_velocities.copy(),
            element_directors=self.element_directors.copy(),
            element_angular_velocities=self.element_angular_velocities.copy(),
        )


@dataclass(frozen=True)
class StrainSet:
    """Material-frame strains; ``kappa_t``, ``sigma_t`` and ``sigma_n`` are the
    three planar modes."""

    curvature: np.ndarray
    shear: np.ndarray
    rest_curvature: np.ndarray
    rest_shear: np.ndarray
    rotation_vectors: np.ndarray
    clamp_curvature: np.ndarray | None = None
    clamp_rotation: np.ndarray | None = None
    material_tangents: np.ndarray = field(default=None, repr=False)

    @property
    def kappa_t(self):
        return self.curvature[:, 1]

    @property
    def sigma_t(self):
        return self.shear[:, 0]

    @property
    def sigma_n(self):
        return self.shear[:, 2]


@dataclass(frozen=True)
class InternalLoads:
    """Internal resultants and the discrete loads they produce.

    ``couples`` (interior nodes) and ``element_forces`` are in the material
    frame; ``node_forces`` is in the lab frame, ``element_torques`` in each
    element's material frame.
    """

    couples: np.ndarray
    element_forces: np.ndarray
    node_forces: np.ndarray
    element_torques: np.ndarray
    clamp_couple: np.ndarray | None = None


def _frame_along(direction):
    d3 = np.asarray(direction, dtype=float)
    d3 = d3 / np.linalg.norm(d3)
    if abs(d3[2]) > 1e-12:
        raise ConfigurationError("rods must start in the x-y plane")
    d2 = np.array([0.0, 0.0, 1.0])
    d1 = np.cross(d2, d3)
    return np.stack([d1, d2, d3])


def build_rod(material, element_count, origin=(0.0, 0.0, 0.0), direction=(1.0, 0.0, 0.0),
              clamped=False, alpha_c=1.0):
    """Straight resting rod plus its rigidities.

    Masses and volumes come from the true ``w h l`` band; rigidities from
    :func:`section_rigidities`. With ``clamped=True`` node 0 and the frame at
    ``s = 0`` are held fixed.
    """
    if not isinstance(material, MaterialParams):
        raise ConfigurationError("material must be a MaterialParams")
    if int(element_count) != element_count or element_count < 2:
        raise ConfigurationError("element_count must be an integer >= 2")
    n = int(element_count)
    frame = _frame_along(direction)
    origin = np.asarray(origin, dtype=float)
    dl = material.length / n

    s = np.arange(n + 1) * dl
    positions = origin + s[:, None] * frame[2]
    lengths = np.full(n, dl)
    volumes = material.area * lengths
    masses = np.zeros(n + 1)
    masses[:-1] += 0.5 * material.density * volumes
    masses[1:] += 0.5 * material.density * volumes

    r = equivalent_radius(material.height)
    per_length = material.density * material.area * r**2 / 4.0
    inertias = np.outer(per_length * lengths, [1.0, 1.0, 2.0])

    rod = RodState(
        node_positions=positions,
        node_velocities=np.zeros((n + 1, 3)),
        element_directors=np.repeat(frame[None], n, axis=0),
        element_angular_velocities=np.zeros((n, 3)),
        reference_lengths=lengths,
        node_masses=masses,
        element_inertias=inertias,
        element_volumes=volumes,
        rest_curvature=np.zeros((n - 1, 3)),
        rest_shear=np.zeros((n, 3)),
        clamp_position=positions[0].copy() if clamped else None,
        clamp_frame=frame.copy() if clamped else None,
    )
    return rod, section_rigidities(material, alpha_c)


def compute_strains(rod):
    Q = rod.element_directors
    x = rod.node_positions
    l0 = rod.reference_lengths
    t = x[1:] - x[:-1]
    lengths = np.linalg.norm(t, axis=1)
    bad = np.flatnonzero(~(lengths > 1e-12 * l0))
    if bad.size:
        raise NumericalDegeneracyError(f"element {bad[0]} has collapsed to zero length")

    q = np.einsum("nij,nj->ni", Q, t)
    shear = q / l0[:, None]
    shear[:, 2] -= 1.0

    rel = Q[:-1] @ np.swapaxes(Q[1:], 1, 2)
    theta = _so3.log_map(rel)
    curvature = theta / rod.voronoi_lengths[:, None]

    clamp_kappa = clamp_theta = None
    if rod.clamp_frame is not None:
        clamp_theta = _so3.log_map(rod.clamp_frame @ Q[0].T)
        clamp_kappa = clamp_theta / (0.5 * l0[0])

    n = rod.n_elements
    rest_k = rod.rest_curvature if rod.rest_curvature is not None else np.zeros((n - 1, 3))
    rest_s = rod.rest_shear if rod.rest_shear is not None else np.zeros((n, 3))
    return StrainSet(curvature, shear, rest_k, rest_s, theta, clamp_kappa, clamp_theta, q)


def internal_loads(rod, strains, rig):
    Q = rod.element_directors
    S = rig.shear_diag
    B = rig.bend_diag

    n_mat = S * (strains.shear - strains.rest_shear)
    f_elem = np.einsum("nji,nj->ni", Q, n_mat)
    node_forces = np.zeros_like(rod.node_positions)
    node_forces[:-1] += f_elem
    node_forces[1:] -= f_elem

    torques = np.cross(strains.material_tangents, n_mat)
    couples = B * (strains.curvature - strains.rest_curvature)
    theta = strains.rotation_vectors
    jl = _so3.inv_left_jacobian(theta)
    jr = _so3.inv_right_jacobian(theta)
    torques[:-1] += np.einsum("nji,nj->ni", jl, couples)
    torques[1:] -= np.einsum("nji,nj->ni", jr, couples)

    clamp_couple = None
    if strains.clamp_curvature is not None:
        clamp_couple = B * strains.clamp_curvature
        jr0 = _so3.inv_right_jacobian(strains.clamp_rotation)
        torques[0] -= jr0.T @ clamp_couple
    return InternalLoads(couples, n_mat, node_forces, torques, clamp_couple)


def stability_dt(rod, rig, safety=0.5):
    """Explicit step bound from the stiffest stretch, shear and bending modes."""
    l0 = rod.reference_lengths
    m = rod.node_masses
    J = rod.element_inertias
    m_min = m.min()
    omega_sq = [
        4.0 * rig.stretch_rigidity / (l0.min() * m_min),
        4.0 * rig.shear_rigidity / (l0.min() * m_min),
        (rig.shear_rigidity * l0 / J[:, 1]).max() * 2.0,
        (4.0 * rig.bending_rigidity * 2.0 / (l0 * J[:, 1])).max(),
    ]
    return safety * 2.0 / math.sqrt(max(omega_sq))


def step(rod, rig, dt, external_forces=None, external_torques=None, loads=None,
         blowup_speed=BLOWUP_SPEED, step_index=None):
    """One position-Verlet (drift-kick-drift) step of the momentum balances.

    ``external_forces`` are lab-frame node forces and ``external_torques``
    lab-frame element torques, held constant over the step. ``loads`` is an
    optional callable ``loads(half_state, internal_node_forces)`` returning
    ``(forces, torques)`` in the same frames, evaluated at the mid-step
    configuration; contact and damping use it.
    """
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    half_dt = 0.5 * dt
    x = rod.node_positions + half_dt * rod.node_velocities
    Q = _so3.exp_map(-half_dt * rod.element_angular_velocities) @ rod.element_directors
    if rod.clamp_position is not None:
        x[0] = rod.clamp_position
    half = replace(rod, node_positions=x, element_directors=Q)

    strains = compute_strains(half)
    internal = internal_loads(half, strains, rig)
    forces = internal.node_forces.copy()
    torques_lab = np.zeros((rod.n_elements, 3))
    if external_forces is not None:
        forces += external_forces
    if external_torques is not None:
        torques_lab += external_torques
    if loads is not None:
        f_cb, t_cb = loads(half, internal.node_forces)
        if f_cb is not None:
            forces += f_cb
        if t_cb is not None:
            torques_lab += t_cb

    omega = rod.element_angular_velocities
    J = rod.element_inertias
    torques = internal.element_torques + np.einsum("nij,nj->ni", Q, torques_lab)
    v_new = rod.node_velocities + dt * forces / rod.node_masses[:, None]
    w_new = omega
    for _ in range(GYRO_ITERATIONS):
        mid = 0.5 * (omega + w_new)
        w_new = omega + dt * (torques + np.cross(J * mid, mid)) / J
    if rod.clamp_position is not None:
        v_new[0] = 0.0
    x_new = x + half_dt * v_new
    Q_new = _so3.orthonormalize(_so3.exp_map(-half_dt * w_new) @ Q)

    speed = np.abs(v_new).max()
    if not (np.isfinite(speed) and speed <= blowup_speed and np.isfinite(w_new).all()):
        where = "" if step_index is None else f" at step {step_index}"
        raise InstabilityError(
            f"integration diverged{where}: max speed {speed:.3g} m/s", step_index
        )
    return replace(
        rod,
        node_positions=x_new,
        node_velocities=v_new,
        element_directors=Q_new,
        element_angular_velocities=w_new,
    )


def total_linear_momentum(rod):
    return (rod.node_masses[:, None] * rod.node_velocities).sum(axis=0)


def kinetic_energy(rod):
    trans = 0.5 * np.sum(rod.node_masses[:, None] * rod.node_velocities**2)
    rot = 0.5 * np.sum(rod.element_inertias * rod.element_angular_velocities**2)
    return float(trans + rot)


def elastic_energy(rod, rig, strains=None):
    strains = compute_strains(rod) if strains is None else strains
    ds = strains.shear - strains.rest_shear
    dk = strains.curvature - strains.rest_curvature
    energy = 0.5 * np.sum(rod.reference_lengths[:, None] * rig.shear_diag * ds**2)
    energy += 0.5 * np.sum(rod.voronoi_lengths[:, None] * rig.bend_diag * dk**2)
    if strains.clamp_curvature is not None:
        energy += 0.25 * rod.reference_lengths[0] * np.sum(rig.bend_diag * strains.clamp_curvature**2)
    return float(energy)


def total_energy(rod, rig, gravity=GRAVITY):
    potential = gravity * np.dot(rod.node_masses, rod.node_positions[:, 1])
    return kinetic_energy(rod) + elastic_energy(rod, rig) + float(potential)


def gravity_forces(rod, gravity=GRAVITY):
    f = np.zeros_like(rod.node_positions)
    f[:, 1] = -gravity * rod.node_masses
    return f
