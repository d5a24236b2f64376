import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msrl.contact import GroundPlane
from msrl.env import (ACTION_LIMIT_MT, EnvConfig, MagneticRobotEnv, PointMassEnv,
                      build_observation, clamp_field, middle_x, sample_disc)
from msrl.errors import ConfigurationError
from msrl.magnetics import FieldState


@pytest.fixture(scope="module")
def env():
    return MagneticRobotEnv(EnvConfig.scaled())


# clamp_field ---------------------------------------------------------------

def test_clamp_radial_example():
    assert np.allclose(clamp_field([3.9, 0.0], [0.3, 0.0], 4.0), [4.0, 0.0], atol=1e-15)


def test_clamp_inside_is_plain_sum():
    assert np.array_equal(clamp_field([0.0, 0.0], [0.3, -0.3], 4.0), [0.3, -0.3])


def test_clamp_shortens_when_projection_jumps():
    # radial projection would move x by more than 0.3 mT here
    b, d = np.array([-1.0, math.sqrt(15.0)]), np.array([0.3, 0.3])
    radial = (b + d) * 4.0 / np.linalg.norm(b + d)
    assert np.abs(radial - b).max() > ACTION_LIMIT_MT
    out = clamp_field(b, d, 4.0)
    assert np.linalg.norm(out) <= 4.0
    assert np.abs(out - b).max() <= ACTION_LIMIT_MT + 1e-12


def test_clamp_fuzz():
    rng = np.random.default_rng(0)
    worst_amp, worst_step = 0.0, 0.0
    for _ in range(200):
        b_max = rng.choice([4.0, 10.0])
        b = sample_disc(rng, b_max)
        for d in rng.uniform(-0.3, 0.3, (5000, 2)):
            new = clamp_field(b, d, b_max)
            worst_amp = max(worst_amp, math.hypot(*new) - b_max)
            worst_step = max(worst_step, np.abs(new - b).max())
            b = new
    assert worst_amp <= 0.0
    assert worst_step <= ACTION_LIMIT_MT + 1e-12


@settings(max_examples=300)
@given(st.floats(0.5, 10), st.floats(-math.pi, math.pi), st.floats(0, 1),
       st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_clamp_properties(b_max, phi, frac, dx, dy):
    b = frac * b_max * np.array([math.cos(phi), math.sin(phi)])
    out = clamp_field(b, [dx, dy], b_max)
    assert math.hypot(*out) <= b_max
    assert np.abs(out - b).max() <= ACTION_LIMIT_MT + 1e-12


def test_disc_sampler_is_uniform():
    rng = np.random.default_rng(5)
    pts = np.array([sample_disc(rng, 4.0) for _ in range(20000)])
    r = np.linalg.norm(pts, axis=1)
    assert r.max() <= 4.0
    # P(r < a) = (a / R)^2 for a uniform disc
    for a in (1.0, 2.0, 3.0):
        assert np.mean(r < a) == pytest.approx((a / 4.0) ** 2, abs=0.015)
    assert abs(np.mean(pts[:, 0])) < 0.05 and abs(np.mean(pts[:, 1])) < 0.05


# config --------------------------------------------------------------------

@pytest.mark.parametrize("kw", [{"dt": 3e-4}, {"scale": 0.5}, {"b_max_mT": 0}, {"reset_mode": "x"},
                                {"n_elements": 1}, {"episode_seconds": 0.015},
                                {"sampled_nodes": (0, 99)}])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        EnvConfig(**kw)


def test_config_presets():
    s, a = EnvConfig.scaled(), EnvConfig.accurate()
    assert (s.dt, s.scale, s.substeps) == (1e-4, 10.5, 100)
    assert (a.dt, a.scale, a.substeps) == (8e-6, 1.0, 1250)
    assert s.max_steps == 2000
    assert s.observation_size == 85


# observations --------------------------------------------------------------

def test_straight_rod_observation(env):
    rod = env._initial
    field = FieldState.from_mT([0, 0], 4.0)
    obs = build_observation(rod, field, env.ground, env.cfg)
    n = env.cfg.n_elements
    assert obs.shape == (85,)
    assert np.allclose(obs[:n], 0.0, atol=1e-9)
    assert np.allclose(obs[n:2 * n], 1.0, atol=1e-9)
    assert obs[-1] == 0.0
    # all sampled nodes rest on the ground
    k = len(env.cfg.node_indices)
    assert np.all(obs[3 * n + k:3 * n + 2 * k] >= 1.0)


def test_settled_rod_observation(env):
    obs = build_observation(env.settled_state(), FieldState.from_mT([0, 0], 4.0), env.ground, env.cfg)
    n, k = env.cfg.n_elements, len(env.cfg.node_indices)
    # the penalty ground lets the band sag a little at the ends
    assert np.abs(obs[:n]).max() < 5e-3
    assert np.all(obs[3 * n + k:3 * n + 2 * k] >= 1.0)


def test_zero_mode_starts_without_field(env):
    obs = env.reset(seed=1, mode="zero")
    assert obs[-1] == 0.0
    assert np.all(env.field.b == 0)


def test_random_resets_cover_the_disc():
    env = MagneticRobotEnv(EnvConfig.scaled(n_elements=4, settle_time=0.0))
    env.reset(seed=0)
    amps = []
    for _ in range(10000):
        env.reset()
        amps.append(np.linalg.norm(env.field.b_mT))
    amps = np.array(amps)
    assert amps.max() <= 4.0
    assert np.mean(amps < 2.0) == pytest.approx(0.25, abs=0.02)
    assert amps.max() > 3.95


def test_equal_seeds_identical(env):
    rng = np.random.default_rng(3)
    actions = rng.uniform(-0.3, 0.3, (30, 2))
    runs = []
    for _ in range(2):
        obs = [env.reset(seed=11)]
        for a in actions:
            obs.append(env.step(a)[0])
        runs.append(np.array(obs))
    assert np.array_equal(runs[0], runs[1])


def test_observation_invariants(env):
    env.reset(seed=2)
    rng = np.random.default_rng(2)
    n = env.cfg.n_elements
    for _ in range(50):
        obs = env.step(rng.uniform(-0.3, 0.3, 2))[0]
        assert np.all(np.isfinite(obs)) and obs.shape == (85,)
        assert np.allclose(obs[:n] ** 2 + obs[n:2 * n] ** 2, 1.0, atol=1e-9)
        assert obs[-3] ** 2 + obs[-2] ** 2 == pytest.approx(1.0, abs=1e-9)
        assert 0.0 <= obs[-1] <= 1.0


# stepping --------------------------------------------------------------------

def test_zero_action_at_rest(env):
    env.reset(seed=0, mode="zero")
    _, r, truncated, _ = env.step([0.0, 0.0])
    assert abs(r) < 1e-3 and not truncated


def test_reward_is_scaled_forward_motion():
    env = MagneticRobotEnv(EnvConfig.scaled(settle_time=0.0), ground=GroundPlane(height=-1.0),
                           gravity=0.0)
    env.reset(seed=0, mode="zero")
    rod = env.rod
    v = np.zeros_like(rod.node_velocities)
    v[:, 0] = 0.01  # 0.1 mm per 10 ms
    env.simulator.set_state(rod.with_(node_velocities=v))
    _, r, _, info = env.step([0.0, 0.0])
    assert info["displacement"] == pytest.approx(1e-4, rel=1e-9)
    assert r == pytest.approx(0.1, rel=1e-9)


def test_actions_clipped_and_field_bounded(env):
    env.reset(seed=4)
    b = env.field.b_mT.copy()
    for a in ([5.0, -5.0], [0.3, 0.3], [-1.0, 0.0]):
        _, _, _, info = env.step(a)
        assert np.abs(info["field_mT"][:2] - b[:2]).max() <= ACTION_LIMIT_MT + 1e-12
        assert np.linalg.norm(info["field_mT"]) <= 4.0
        assert info["field_mT"][2] == 0.0
        b = info["field_mT"]


def test_rejects_non_finite_action(env):
    env.reset(seed=0)
    with pytest.raises(ConfigurationError):
        env.step([np.nan, 0.0])


def test_step_before_reset():
    with pytest.raises(ConfigurationError):
        MagneticRobotEnv(EnvConfig.scaled(settle_time=0.0)).step([0, 0])


def test_full_episode_truncates_and_telescopes(env):
    env.reset(seed=8, mode="zero")
    start = middle_x(env.rod.node_positions)
    rng = np.random.default_rng(8)
    total, flags = 0.0, []
    for _ in range(2000):
        _, r, truncated, _ = env.step(rng.uniform(-0.3, 0.3, 2))
        total += r
        flags.append(truncated)
    assert flags[-1] and not any(flags[:-1])
    assert env.time == pytest.approx(20.0)
    moved = middle_x(env.rod.node_positions) - start
    assert total == pytest.approx(1000.0 * moved, rel=1e-9, abs=1e-12)


# toy environment ---------------------------------------------------------------

def test_point_mass_optimum():
    env = PointMassEnv(horizon=50)
    env.reset(seed=0, mode="zero")
    total = sum(env.step([0.3])[1] for _ in range(50))
    assert total == pytest.approx(env.optimal_return, rel=1e-12)
    assert env.optimal_return == pytest.approx(0.3 + 0.6 + 0.9 + 47.0)


def test_point_mass_bounds():
    env = PointMassEnv(horizon=5)
    env.reset(seed=1)
    for _ in range(5):
        obs, r, truncated, _ = env.step([10.0])
        assert -1.0 <= obs[0] <= 1.0
    assert truncated
