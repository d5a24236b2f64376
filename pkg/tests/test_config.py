import numpy as np
import pytest

from msrl.config import ExperimentConfig
from msrl.env import MagneticRobotEnv, PointMassEnv
from msrl.errors import ConfigurationError
from msrl.td3.agent import TD3Agent


def test_defaults_round_trip_idempotent():
    cfg = ExperimentConfig()
    text = cfg.to_yaml()
    again = ExperimentConfig.from_yaml(text)
    assert again == cfg
    assert again.to_yaml() == text


def test_file_round_trip(tmp_path):
    cfg = ExperimentConfig.from_dict({
        "env": {"b_max_mT": 10.0, "kind": "robot"},
        "magnetization": {"kind": "piecewise",
                          "segments": [[0.0, 0.5, "+d1"], [0.5, 1.0, [0.0, -1.0, 0.0]]]},
        "train": {"seeds": [3, 4]},
    })
    path = tmp_path / "c.yaml"
    cfg.save(path)
    back = ExperimentConfig.load(path)
    assert back == cfg
    assert back.hash() == cfg.hash()


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"env": {"bogus": 1}},
    {"agent": {"learning_rat": 1e-3}},
    {"material": [1, 2]},
    {"env": {"kind": "cartpole"}},
    {"train": {"seeds": [1, 1]}},
    {"magnetization": {"kind": "piecewise"}},
])
def test_rejects_bad_input(data):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict(data)


@pytest.mark.parametrize("text", ["[1, 2", "- a\n- b\n"])
def test_rejects_bad_yaml(text):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_yaml(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(tmp_path / "nope.yaml")


def test_hash_is_stable_and_sensitive():
    a = ExperimentConfig()
    assert a.hash() == ExperimentConfig().hash()
    assert len(a.hash()) == 64
    b = ExperimentConfig.from_dict({"env": {"reward_coefficient": 999.0}})
    assert a.hash() != b.hash()


def test_phase_settings():
    cfg = ExperimentConfig()
    assert cfg.env_config("scaled").scale == 10.5
    acc = cfg.env_config("accurate")
    assert acc.scale == 1.0 and acc.dt == 8e-6
    assert cfg.env_config("as_is") == cfg.env.settings
    with pytest.raises(ConfigurationError):
        cfg.env_config("fast")


def test_factories():
    cfg = ExperimentConfig.from_dict({"env": {"n_elements": 4, "settle_time": 0.0}})
    env = cfg.make_env("scaled", reset_mode="zero")
    assert isinstance(env, MagneticRobotEnv)
    assert env.cfg.reset_mode == "zero"
    assert env.gravity == pytest.approx(9.81 / 10.5)
    obs = env.reset(seed=0)
    assert obs.shape == (env.observation_size,)
    agent = cfg.make_agent(5)
    assert isinstance(agent, TD3Agent) and agent.random_state == 5
    pm = ExperimentConfig.from_dict({"env": {"kind": "point_mass", "horizon": 7}}).make_env()
    assert isinstance(pm, PointMassEnv) and pm.horizon == 7


def test_magnetization_kinds_build():
    for spec in ({"kind": "pattern", "pattern": 2}, {"kind": "sinusoidal"}):
        cfg = ExperimentConfig.from_dict({"magnetization": spec})
        prof = cfg.magnetization.build(20, cfg.material.length)
        assert len(prof) == 20
        assert np.all(np.isfinite(prof.vectors))
