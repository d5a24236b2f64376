import numpy as np
import pytest

from msrl.rod import MaterialParams, build_rod


@pytest.fixture
def robot():
    """Default 20 mm robot, 20 elements, free and straight along +x."""
    return build_rod(MaterialParams(), 20)


def perturbed(rod, rng, scale=1e-4, spin=1e-2):
    """Random small deformation with random velocities."""
    from msrl import _so3

    x = rod.node_positions + scale * rng.standard_normal(rod.node_positions.shape)
    Q = _so3.exp_map(spin * rng.standard_normal((rod.n_elements, 3))) @ rod.element_directors
    return rod.with_(
        node_positions=x,
        element_directors=Q,
        node_velocities=1e-3 * rng.standard_normal(x.shape),
        element_angular_velocities=0.1 * rng.standard_normal((rod.n_elements, 3)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def zero_actor(agent):
    """Set every actor weight and bias to zero so the policy outputs 0."""
    actor = agent.nets_.actor
    actor.set_params([np.zeros_like(p) for p in actor.params])
    return agent


def small_config(**sections):
    """Fast robot experiment: 4 elements, no settling, tiny networks."""
    from msrl.config import ExperimentConfig

    data = {
        "env": {"n_elements": 4, "settle_time": 0.0, "episode_seconds": 0.5},
        "agent": {"hidden_sizes": [8, 8], "batch_size": 4, "warmup_steps": 10},
        "train": {"scaled_steps": 30, "refine_steps": 0, "eval_interval": 10,
                  "seeds": [0, 1]},
    }
    for key, value in sections.items():
        data.setdefault(key, {}).update(value)
    return ExperimentConfig.from_dict(data)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
