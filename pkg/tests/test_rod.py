import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msrl import _so3
from msrl.errors import ConfigurationError, InstabilityError, NumericalDegeneracyError
from msrl.dissipation import DampingConfig, damping_forces
from msrl.rod import (MaterialParams, build_rod, compute_strains, elastic_energy,
                      internal_loads, kinetic_energy, stability_dt, step,
                      total_energy, total_linear_momentum)
from msrl.simulator import RobotSimulator

from conftest import perturbed


def test_robot_total_mass(robot):
    rod, _ = robot
    assert rod.total_mass == pytest.approx(1860 * 0.02 * 0.008 * 0.0008, rel=1e-12)
    assert rod.total_mass == pytest.approx(2.381e-4, rel=1e-3)


def test_minimal_rod():
    rod, _ = build_rod(MaterialParams(), 2)
    assert rod.n_elements == 2
    assert rod.node_positions.shape == (3, 3)
    assert rod.element_directors.shape == (2, 3, 3)


@pytest.mark.parametrize("kw", [{"youngs_modulus": 0}, {"density": -1}, {"width": 0},
                                {"height": -1e-3}, {"length": 0}])
def test_material_rejects_non_positive(kw):
    with pytest.raises(ConfigurationError):
        MaterialParams(**kw)


@pytest.mark.parametrize("n", [1, 0, 2.5])
def test_build_rejects_bad_count(n):
    with pytest.raises(ConfigurationError):
        build_rod(MaterialParams(), n)


def test_rigidities_match_rectangle(robot):
    _, rig = robot
    mat = MaterialParams()
    assert rig.bending_rigidity == pytest.approx(mat.youngs_modulus * 8e-3 * 0.8e-3**3 / 12, rel=1e-12)
    assert rig.stretch_rigidity == pytest.approx(mat.youngs_modulus * 8e-3 * 0.8e-3, rel=1e-12)
    assert rig.shear_rigidity == pytest.approx(mat.youngs_modulus / 3 * 8e-3 * 0.8e-3, rel=1e-12)
    assert rig.alpha_c == 1.0


def test_straight_rod_has_zero_strain(robot):
    rod, _ = robot
    s = compute_strains(rod)
    assert np.all(s.curvature == 0)
    assert np.abs(s.shear).max() < 1e-13


def _arc_rod(radius, n, length):
    rod, rig = build_rod(MaterialParams(length=length), n)
    phi = np.linspace(0.0, length / radius, n + 1)
    x = np.stack([radius * np.sin(phi), radius * (1 - np.cos(phi)), np.zeros_like(phi)], axis=1)
    t = np.diff(x, axis=0)
    d3 = t / np.linalg.norm(t, axis=1)[:, None]
    d2 = np.tile([0.0, 0.0, 1.0], (n, 1))
    d1 = np.cross(d2, d3)
    Q = np.stack([d1, d2, d3], axis=1)
    # keep the centerline unstretched: chord length equals the rest length
    l0 = np.linalg.norm(t, axis=1)
    return rod.with_(node_positions=x, element_directors=Q, reference_lengths=l0), rig


def test_arc_curvature():
    radius, n = 0.05, 50
    rod, _ = _arc_rod(radius, n, 0.02)
    s = compute_strains(rod)
    assert np.allclose(np.abs(s.kappa_t), 1.0 / radius, rtol=0.01)
    assert np.allclose(s.curvature[:, [0, 2]], 0.0, atol=1e-12)
    assert np.allclose(s.sigma_n, 0.0, atol=1e-12)


def test_uniform_stretch():
    rod, _ = build_rod(MaterialParams(), 10)
    rod = rod.with_(node_positions=rod.node_positions * 1.1)
    s = compute_strains(rod)
    assert np.allclose(s.sigma_n, 0.1, atol=1e-12)
    assert np.allclose(s.curvature, 0.0)


def test_collapsed_element_raises(robot):
    rod, _ = robot
    x = rod.node_positions.copy()
    x[3] = x[2]
    with pytest.raises(NumericalDegeneracyError):
        compute_strains(rod.with_(node_positions=x))


def test_zero_strain_zero_loads(robot):
    rod, rig = robot
    loads = internal_loads(rod, compute_strains(rod), rig)
    assert np.abs(loads.node_forces).max() < 1e-12
    assert np.abs(loads.element_torques).max() < 1e-15


def test_linear_bending_law():
    rod, rig = build_rod(MaterialParams(), 5)
    rig = type(rig)(1e-6, rig.shear_rigidity, rig.stretch_rigidity)
    rest = np.zeros((4, 3))
    rest[1, 1] = -2.0
    rod = rod.with_(rest_curvature=rest)
    loads = internal_loads(rod, compute_strains(rod), rig)
    assert loads.couples[1, 1] == pytest.approx(2e-6, rel=1e-12)


def _energy_gradient_fd(rod, rig, h=1e-7):
    x0 = rod.node_positions
    fd_f = np.zeros_like(x0)
    for i in range(x0.shape[0]):
        for c in range(3):
            xp, xm = x0.copy(), x0.copy()
            xp[i, c] += h
            xm[i, c] -= h
            ep = elastic_energy(rod.with_(node_positions=xp), rig)
            em = elastic_energy(rod.with_(node_positions=xm), rig)
            fd_f[i, c] = -(ep - em) / (2 * h)
    Q0 = rod.element_directors
    fd_t = np.zeros((rod.n_elements, 3))
    for j in range(rod.n_elements):
        for a in range(3):
            e = np.zeros(3)
            e[a] = h
            Qp, Qm = Q0.copy(), Q0.copy()
            Qp[j] = _so3.exp_map(-e) @ Q0[j]
            Qm[j] = _so3.exp_map(e) @ Q0[j]
            ep = elastic_energy(rod.with_(element_directors=Qp), rig)
            em = elastic_energy(rod.with_(element_directors=Qm), rig)
            fd_t[j, a] = -(ep - em) / (2 * h)
    return fd_f, fd_t


@pytest.mark.parametrize("clamped", [False, True])
def test_loads_are_exact_energy_gradients(clamped):
    rng = np.random.default_rng(7)
    rod, rig = build_rod(MaterialParams(), 6, clamped=clamped)
    rod = perturbed(rod, rng, scale=2e-4, spin=0.2)
    loads = internal_loads(rod, compute_strains(rod), rig)
    fd_f, fd_t = _energy_gradient_fd(rod, rig)
    scale_f = np.abs(fd_f).max()
    scale_t = np.abs(fd_t).max()
    assert np.abs(loads.node_forces - fd_f).max() < 1e-6 * scale_f
    assert np.abs(loads.element_torques - fd_t).max() < 1e-6 * scale_t


def test_resting_rod_is_a_fixed_point(robot):
    rod, rig = robot
    new = rod
    for _ in range(10):
        new = step(new, rig, 1e-5)
    assert np.abs(new.node_positions - rod.node_positions).max() < 1e-12
    assert np.abs(new.element_directors - rod.element_directors).max() < 1e-12


def test_uniform_force_accelerates_center_of_mass(robot):
    rod, rig = robot
    F = np.array([1e-4, -2e-4, 0.0])
    forces = np.tile(F, (rod.node_positions.shape[0], 1))
    dt = 1e-5
    new = step(rod, rig, dt, external_forces=forces)
    accel = total_linear_momentum(new) / rod.total_mass / dt
    expected = forces.sum(axis=0) / rod.total_mass
    assert np.allclose(accel, expected, rtol=1e-10, atol=1e-10 * np.abs(expected).max())


def test_momentum_with_damping_per_step(rng):
    rod, rig = build_rod(MaterialParams(), 20)
    rod = perturbed(rod, rng)
    cfg = DampingConfig(1e-3)
    dt = 0.5 * stability_dt(rod, rig)
    ref = rod.total_mass * 1.0
    p = total_linear_momentum(rod)
    for _ in range(50):
        rod = step(rod, rig, dt, loads=lambda half, f: (damping_forces(half, cfg), None))
        p_new = total_linear_momentum(rod)
        assert np.abs(p_new - p).max() < 1e-12 * ref
        p = p_new


@pytest.mark.parametrize("clamped", [True, False])
def test_energy_drift_undamped(clamped):
    rod, rig = build_rod(MaterialParams(), 20, clamped=clamped)
    s = np.linspace(-1.0, 1.0, 21) if not clamped else np.linspace(0.0, 1.0, 21)
    v = rod.node_velocities.copy()
    v[:, 1] = 0.01 * (s**2 - (0.0 if clamped else np.mean(s**2)))
    rod = rod.with_(node_velocities=v)
    dt = 0.5 * stability_dt(rod, rig)
    e0 = total_energy(rod, rig, gravity=0.0)
    sim = RobotSimulator(rod, rig, dt, gravity=0.0)
    sim.advance(1000)
    e1 = total_energy(sim.state, rig, gravity=0.0)
    assert abs(e1 - e0) / e0 < 1e-4


def test_resting_momentum_and_energy(robot):
    rod, rig = robot
    assert np.all(total_linear_momentum(rod) == 0)
    assert kinetic_energy(rod) == 0


def test_rigid_translation_momentum(robot):
    rod, _ = robot
    v = np.array([0.3, -0.1, 0.0])
    moving = rod.with_(node_velocities=np.tile(v, (rod.node_positions.shape[0], 1)))
    assert np.allclose(total_linear_momentum(moving), rod.total_mass * v, rtol=1e-15)


def test_stable_at_bound_for_rough_states(rng):
    rod, rig = build_rod(MaterialParams(), 20)
    rod = perturbed(rod, rng, scale=1e-4, spin=0.05)
    e0 = total_energy(rod, rig, gravity=0.0)
    sim = RobotSimulator(rod, rig, stability_dt(rod, rig), gravity=0.0)
    sim.advance(20000)
    assert abs(total_energy(sim.state, rig, gravity=0.0) / e0 - 1) < 0.05


def test_directors_stay_orthonormal(rng):
    rod, rig = build_rod(MaterialParams(), 20)
    rod = perturbed(rod, rng, spin=0.05)
    sim = RobotSimulator(rod, rig, stability_dt(rod, rig), gravity=0.0)
    sim.advance(5000)
    Q = sim.state.element_directors
    err = np.abs(Q @ np.swapaxes(Q, 1, 2) - np.eye(3)).max()
    assert err < 1e-9


def test_blowup_raises_with_step_index(robot):
    rod, rig = robot
    x = rod.node_positions.copy()
    x[5, 1] += 2e-4
    rod = rod.with_(node_positions=x)
    sim = RobotSimulator(rod, rig, 50 * stability_dt(rod, rig), gravity=0.0)
    with pytest.raises(InstabilityError) as info:
        sim.advance(100_000)
    assert info.value.step_index is not None
    assert str(info.value.step_index) in str(info.value)


def test_step_rejects_non_positive_dt(robot):
    rod, rig = robot
    with pytest.raises(ConfigurationError):
        step(rod, rig, 0.0)


def test_dt_halving_converges_second_order():
    mat = MaterialParams()
    rod, rig = build_rod(mat, 20, clamped=True)
    s = np.linspace(0, 1, 21)
    v = rod.node_velocities.copy()
    v[:, 1] = 0.02 * s**2
    rod = rod.with_(node_velocities=v)
    finals = []
    for dt in (2e-5, 1e-5):
        sim = RobotSimulator(rod, rig, dt, damping=DampingConfig(), gravity=9.81)
        sim.advance(int(round(1.0 / dt)))
        finals.append(sim.state.node_positions)
    assert np.abs(finals[0] - finals[1]).max() / mat.length < 1e-4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_internal_forces_sum_to_zero(seed):
    rng = np.random.default_rng(seed)
    rod, rig = build_rod(MaterialParams(), 8)
    rod = perturbed(rod, rng, scale=3e-4, spin=0.3)
    loads = internal_loads(rod, compute_strains(rod), rig)
    scale = np.abs(loads.node_forces).max() + 1e-300
    assert np.abs(loads.node_forces.sum(axis=0)).max() < 1e-12 * scale


def test_stability_dt_positive(robot):
    rod, rig = robot
    dt = stability_dt(rod, rig)
    assert 0 < dt < 1e-3
    assert math.isfinite(dt)
