"""Robot simulator: rod plus magnetic, damping, gravity and ground loads."""

import numpy as np

from . import _kernels
from .contact import GroundPlane, ground_response
from .dissipation import DampingConfig, damping_forces
from .errors import ConfigurationError, InstabilityError
from .magnetics import FieldState, MagnetizationProfile, magnetic_torques
from .rod import BLOWUP_SPEED, GRAVITY, RodState, gravity_forces, step

BACKENDS = ("compiled", "reference")


class RobotSimulator:
    """Advance one rod under a uniform field.

    Parameters
    ----------
    rod : RodState
    rig : RigidityTable
    profile : MagnetizationProfile, optional
        Zero magnetization when omitted.
    field : FieldState, optional
    damping : DampingConfig, optional
        ``None`` disables pair damping.
    ground : GroundPlane, optional
        ``None`` removes the ground (gravity still acts).
    gravity : float
    dt : float
        Substep length, s.
    backend : {"compiled", "reference"}
        ``"reference"`` runs the pure numpy step, used to check the kernel.
    drag : float
        Uniform velocity decay rate (1/s) applied after every step. Zero for
        dynamics; static relaxation uses it to bleed off every mode.
    external_forces : ndarray of shape (n_nodes, 3), optional
        Constant lab-frame node forces, N.
    """

    def __init__(self, rod, rig, dt, profile=None, field=None, damping=None, ground=None,
                 gravity=GRAVITY, backend="compiled", blowup_speed=BLOWUP_SPEED, drag=0.0,
                 external_forces=None):
        if not isinstance(rod, RodState):
            raise ConfigurationError("rod must be a RodState")
        if not dt > 0:
            raise ConfigurationError("dt must be positive")
        if backend not in BACKENDS:
            raise ConfigurationError(f"backend must be one of {BACKENDS}")
        n = rod.n_elements
        if profile is None:
            profile = MagnetizationProfile(np.zeros((n, 3)), 0.0)
        if len(profile) != n:
            raise ConfigurationError(f"profile has {len(profile)} elements, rod has {n}")
        if damping is not None:
            damping.check(n + 1)
        if ground is not None and not isinstance(ground, GroundPlane):
            raise ConfigurationError("ground must be a GroundPlane")
        self.rig = rig
        self.dt = float(dt)
        self.profile = profile
        self.field = field if field is not None else FieldState(np.zeros(3), 1.0)
        self.damping = damping
        self.ground = ground
        self.gravity = float(gravity)
        self.backend = backend
        self.blowup_speed = float(blowup_speed)
        if drag < 0:
            raise ConfigurationError("drag must be non-negative")
        self.drag = float(drag)
        if external_forces is None:
            external_forces = np.zeros((n + 1, 3))
        self.external_forces = np.ascontiguousarray(external_forces, dtype=float)
        if self.external_forces.shape != (n + 1, 3):
            raise ConfigurationError("external_forces must have shape (n_nodes, 3)")
        self.steps_taken = 0
        self.set_state(rod)

    # state -----------------------------------------------------------------
    def set_state(self, rod):
        n = rod.n_elements
        self._template = rod
        self._x = np.ascontiguousarray(rod.node_positions, dtype=float).copy()
        self._v = np.ascontiguousarray(rod.node_velocities, dtype=float).copy()
        self._Q = np.ascontiguousarray(rod.element_directors, dtype=float).copy()
        self._w = np.ascontiguousarray(rod.element_angular_velocities, dtype=float).copy()
        self._rest_k = (np.zeros((n - 1, 3)) if rod.rest_curvature is None
                        else np.ascontiguousarray(rod.rest_curvature, dtype=float))
        self._rest_s = (np.zeros((n, 3)) if rod.rest_shear is None
                        else np.ascontiguousarray(rod.rest_shear, dtype=float))

    @property
    def state(self):
        return self._template.with_(
            node_positions=self._x.copy(),
            node_velocities=self._v.copy(),
            element_directors=self._Q.copy(),
            element_angular_velocities=self._w.copy(),
        )

    @property
    def time(self):
        return self.steps_taken * self.dt

    # loads for the reference path -----------------------------------------
    def _loads(self, half, internal_forces):
        forces = self.external_forces.copy()
        applied = internal_forces + forces
        if self.damping is not None and self.damping.coefficient > 0:
            damp = damping_forces(half, self.damping)
            forces += damp
            applied = applied + damp
        if self.ground is not None:
            forces += ground_response(half, self.ground, self.gravity, applied, self.dt)
        else:
            forces += gravity_forces(half, self.gravity)
        torques = magnetic_torques(half, self.profile, self.field)
        return forces, torques

    # stepping ----------------------------------------------------------------
    def advance(self, n_steps=1):
        """Run ``n_steps`` substeps at the current field.

        Raises
        ------
        InstabilityError
            When a speed exceeds ``blowup_speed`` or becomes non-finite.
        """
        n_steps = int(n_steps)
        if n_steps < 0:
            raise ConfigurationError("n_steps must be non-negative")
        if self.backend == "reference":
            rod = self.state
            decay = np.exp(-self.drag * self.dt)
            for i in range(n_steps):
                rod = step(rod, self.rig, self.dt, loads=self._loads,
                           blowup_speed=self.blowup_speed, step_index=self.steps_taken + i)
                if self.drag > 0:
                    rod = rod.with_(node_velocities=rod.node_velocities * decay,
                                    element_angular_velocities=rod.element_angular_velocities * decay)
            self.set_state(rod)
            self.steps_taken += n_steps
            return
        code = self._run_kernel(n_steps)
        if code:
            index = self.steps_taken + code - 1
            self.steps_taken = index + 1
            raise InstabilityError(f"integration diverged at step {index}", index)
        self.steps_taken += n_steps

    def _run_kernel(self, n_steps):
        rod = self._template
        has_clamp = rod.clamp_position is not None
        clamp_pos = rod.clamp_position if has_clamp else np.zeros(3)
        clamp_frame = rod.clamp_frame if has_clamp else np.eye(3)
        if self.damping is None:
            nu, skip = 0.0, 1
        else:
            nu, skip = float(self.damping.coefficient), int(self.damping.node_skip)
        g = self.ground
        if g is None:
            gp = np.zeros(7)
        else:
            gp = np.array([g.height, g.contact_offset, g.stiffness, g.damping,
                           g.static_friction, g.kinetic_friction, g.slip_velocity])
        return _kernels.advance(
            self._x, self._v, self._Q, self._w,
            rod.node_masses, rod.element_inertias, rod.reference_lengths,
            self._rest_k, self._rest_s, self.rig.shear_diag, self.rig.bend_diag,
            has_clamp, np.asarray(clamp_pos, float), np.asarray(clamp_frame, float),
            rod.element_volumes, self.profile.vectors, self.field.b,
            self.gravity, nu, skip, g is not None, gp, self.dt, n_steps, self.blowup_speed, self.drag,
            self.external_forces,
        )
