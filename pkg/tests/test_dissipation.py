import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msrl.dissipation import DEFAULT_COEFFICIENT, DampingConfig, damping_forces
from msrl.errors import ConfigurationError
from msrl.rod import MaterialParams, RigidityTable, build_rod, kinetic_energy, step
from msrl.simulator import RobotSimulator


def _with_velocities(rod, v):
    return rod.with_(node_velocities=np.asarray(v, dtype=float))


def test_rigid_translation_is_undamped(robot):
    rod, _ = robot
    moving = _with_velocities(rod, np.tile([0.2, -0.1, 0.0], (21, 1)))
    assert np.all(damping_forces(moving, DampingConfig(0.1)) == 0)


def test_single_pair_example():
    rod, _ = build_rod(MaterialParams(), 4)
    v = np.zeros((5, 3))
    v[0] = [1.0, 0.0, 0.0]
    f = damping_forces(_with_velocities(rod, v), DampingConfig(0.1, node_skip=4))
    assert np.allclose(f[0], [-0.1, 0, 0], rtol=1e-15)
    assert np.allclose(f[4], [0.1, 0, 0], rtol=1e-15)
    assert np.all(f[1:4] == 0)


def test_nodes_join_several_pairs():
    rod, _ = build_rod(MaterialParams(), 4)
    v = np.zeros((5, 3))
    v[2] = [1.0, 0.0, 0.0]
    f = damping_forces(_with_velocities(rod, v), DampingConfig(1.0, node_skip=1))
    # node 2 pairs with 1 and 3
    assert np.allclose(f[:, 0], [0, 1, -2, 1, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 10))
def test_forces_sum_to_zero(seed, k):
    rng = np.random.default_rng(seed)
    rod, _ = build_rod(MaterialParams(), 12)
    f = damping_forces(_with_velocities(rod, rng.standard_normal((13, 3))), DampingConfig(0.3, k))
    assert np.abs(f.sum(axis=0)).max() <= 1e-15 * np.abs(f).max() + 1e-300


@pytest.mark.parametrize("kw", [{"coefficient": -1.0}, {"node_skip": 0}, {"node_skip": 1.5}])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        DampingConfig(**kw)


def test_skip_must_fit_rod():
    rod, _ = build_rod(MaterialParams(), 4)
    with pytest.raises(ConfigurationError):
        damping_forces(rod, DampingConfig(0.1, node_skip=5))


@pytest.mark.parametrize("k", [1, 4])
def test_kinetic_energy_never_grows(k, rng):
    rod, _ = build_rod(MaterialParams(), 20)
    loose = RigidityTable(0.0, 0.0, 0.0)
    rod = _with_velocities(rod, 1e-2 * rng.standard_normal((21, 3)))
    cfg = DampingConfig(1e-3, k)
    ke = kinetic_energy(rod)
    for _ in range(200):
        rod = step(rod, loose, 1e-5, loads=lambda half, f: (damping_forces(half, cfg), None))
        new = kinetic_energy(rod)
        assert new <= ke * (1 + 1e-14)
        ke = new


def _halving_time(nu, n=20, dt=2e-5, duration=2.0):
    rod, rig = build_rod(MaterialParams(), n, clamped=True)
    s = np.linspace(0.0, 1.0, n + 1)
    v = rod.node_velocities.copy()
    v[:, 1] = 0.01 * s**2
    sim = RobotSimulator(rod.with_(node_velocities=v), rig, dt,
                         damping=DampingConfig(nu), gravity=0.0)
    chunk = int(round(1e-3 / dt))
    tip = []
    for _ in range(int(round(duration / 1e-3))):
        sim.advance(chunk)
        tip.append(sim.state.node_positions[-1, 1])
    tip = np.abs(np.array(tip))
    t = 1e-3 * np.arange(1, tip.size + 1)
    peaks = [i for i in range(1, tip.size - 1) if tip[i] >= tip[i - 1] and tip[i] >= tip[i + 1]]
    slope = np.polyfit(t[peaks], np.log(tip[peaks]), 1)[0]
    return np.log(2.0) / -slope


def test_calibration_halving_time():
    """Clamped 20 mm robot, no gravity: free-oscillation amplitude halves in ~0.3 s."""
    assert DEFAULT_COEFFICIENT == 3.4e-4
    assert _halving_time(DEFAULT_COEFFICIENT) == pytest.approx(0.30, abs=0.015)


def test_more_damping_halves_faster():
    assert _halving_time(2 * DEFAULT_COEFFICIENT, duration=1.0) < _halving_time(DEFAULT_COEFFICIENT, duration=1.0)
