"""Relative-velocity pair damping between nodes ``j`` and ``j + k``."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

#: N*s/m. Calibrated so the clamped 20 mm robot (true density, no gravity)
#: loses half its free-oscillation amplitude in ~0.3 s
#: (see tests/test_dissipation.py::test_calibration_halving_time).
DEFAULT_COEFFICIENT = 3.4e-4


@dataclass(frozen=True)
class DampingConfig:
    coefficient: float = DEFAULT_COEFFICIENT
    node_skip: int = 4

    def __post_init__(self):
        if self.coefficient < 0:
            raise ConfigurationError("damping coefficient must be non-negative")
        if int(self.node_skip) != self.node_skip or self.node_skip < 1:
            raise ConfigurationError("node_skip must be an integer >= 1")

    def check(self, n_nodes):
        if self.node_skip >= n_nodes:
            raise ConfigurationError(
                f"node_skip {self.node_skip} needs more than {n_nodes} nodes"
            )


def damping_forces(rod, cfg):
    """Equal and opposite forces ``-nu (v_j - v_{j+k})`` on every pair.

    Pairs run over ``j = 0 .. n_nodes - 1 - k`` without wraparound; a node may
    belong to two pairs.
    """
    v = rod.node_velocities
    k = cfg.node_skip
    cfg.check(v.shape[0])
    pair = cfg.coefficient * (v[:-k] - v[k:])
    f = np.zeros_like(v)
    f[:-k] -= pair
    f[k:] += pair
    return f
