"""Ring-buffer experience replay."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, NotReadyError


@dataclass(frozen=True)
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray

    def __len__(self):
        return self.rewards.shape[0]


class ReplayBuffer:
    """Bounded circular store of ``(s, a, r, s')`` transitions.

    Storage grows by doubling up to ``capacity`` so a large capacity costs
    nothing until it is used. Once full, each push overwrites the oldest
    transition.
    """

    def __init__(self, obs_dim, action_dim, capacity=1_000_000):
        if int(capacity) != capacity or capacity < 1:
            raise ConfigurationError("capacity must be a positive integer")
        self.obs_dim = int(obs_dim)
        self.action_dim = int(action_dim)
        self.capacity = int(capacity)
        self.size = 0
        self._next = 0
        self._alloc(min(self.capacity, 1024))

    def _alloc(self, n):
        def grow(old, shape):
            new = np.zeros(shape)
            if old is not None:
                new[: old.shape[0]] = old
            return new

        self._obs = grow(getattr(self, "_obs", None), (n, self.obs_dim))
        self._act = grow(getattr(self, "_act", None), (n, self.action_dim))
        self._rew = grow(getattr(self, "_rew", None), (n,))
        self._nxt = grow(getattr(self, "_nxt", None), (n, self.obs_dim))

    def __len__(self):
        return self.size

    def push(self, obs, action, reward, next_obs):
        obs = np.asarray(obs, dtype=float)
        action = np.asarray(action, dtype=float)
        next_obs = np.asarray(next_obs, dtype=float)
        if obs.shape != (self.obs_dim,) or next_obs.shape != (self.obs_dim,):
            raise ConfigurationError("observation shape mismatch")
        if action.shape != (self.action_dim,):
            raise ConfigurationError("action shape mismatch")
        if not (np.isfinite(obs).all() and np.isfinite(action).all()
                and np.isfinite(reward) and np.isfinite(next_obs).all()):
            raise ConfigurationError("transitions must be finite")
        i = self._next
        if i >= self._obs.shape[0]:
            self._alloc(min(self.capacity, 2 * self._obs.shape[0]))
        self._obs[i] = obs
        self._act[i] = action
        self._rew[i] = reward
        self._nxt[i] = next_obs
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n, rng):
        """Uniform sample of ``n`` transitions, with replacement."""
        if self.size < n:
            raise NotReadyError(f"buffer holds {self.size} transitions, need {n}")
        idx = rng.integers(0, self.size, size=n)
        return Batch(self._obs[idx], self._act[idx], self._rew[idx], self._nxt[idx])

    def transitions(self):
        """All stored transitions, oldest first."""
        if self.size < self.capacity:
            order = np.arange(self.size)
        else:
            order = (np.arange(self.capacity) + self._next) % self.capacity
        return Batch(self._obs[order], self._act[order], self._rew[order], self._nxt[order])
