"""Twin-delayed deterministic policy gradient.

Networks see actions in normalized units ``a / action_scale`` in ``[-1, 1]``;
noise levels are fractions of the action scale. Physical actions only appear
at the environment boundary.
"""

import io
import json
from dataclasses import dataclass, fields

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .._io import atomic_write_bytes
from ..errors import ConfigurationError, DivergenceError
from .buffer import Batch, ReplayBuffer
from .mlp import AdamState, Mlp, adam_step, polyak_update

CHECKPOINT_VERSION = 1
NET_NAMES = ("actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target")


@dataclass(frozen=True)
class Hyperparams:
    gamma: float = 0.99
    learning_rate: float = 3e-4
    batch_size: int = 256
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    exploration_noise: float = 0.1
    warmup_steps: int = 1000
    buffer_capacity: int = 1_000_000
    hidden_sizes: tuple = (256, 256)

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not 0 <= self.gamma < 1:
            raise ConfigurationError("gamma must lie in [0, 1)")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ConfigurationError("batch_size must be a positive integer")
        if not 0 <= self.tau <= 1:
            raise ConfigurationError("tau must lie in [0, 1]")
        if int(self.policy_delay) != self.policy_delay or self.policy_delay < 1:
            raise ConfigurationError("policy_delay must be an integer >= 1")
        for name in ("target_noise", "noise_clip", "exploration_noise"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        if self.warmup_steps < 0:
            raise ConfigurationError("warmup_steps must be non-negative")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigurationError("hidden_sizes must be positive widths")


@dataclass
class AgentNets:
    actor: Mlp
    critic1: Mlp
    critic2: Mlp
    actor_target: Mlp
    critic1_target: Mlp
    critic2_target: Mlp
    actor_opt: AdamState
    critic1_opt: AdamState
    critic2_opt: AdamState

    def named(self):
        return {name: getattr(self, name) for name in NET_NAMES}


def make_nets(obs_dim, action_dim, hidden_sizes, rng):
    """Fresh actor and twin critics; targets start as exact copies."""
    hidden = list(hidden_sizes)
    relus = ["relu"] * len(hidden)
    actor = Mlp([obs_dim, *hidden, action_dim], relus + ["tanh"], rng)
    critic1 = Mlp([obs_dim + action_dim, *hidden, 1], relus + ["identity"], rng)
    critic2 = Mlp([obs_dim + action_dim, *hidden, 1], relus + ["identity"], rng)
    return AgentNets(
        actor, critic1, critic2, actor.copy(), critic1.copy(), critic2.copy(),
        AdamState.zeros_like(actor.params),
        AdamState.zeros_like(critic1.params),
        AdamState.zeros_like(critic2.params),
    )


def critic_input(obs, actions):
    return np.concatenate([np.atleast_2d(obs), np.atleast_2d(actions)], axis=1)


def select_action(actor, obs, sigma_e, scale, rng=None):
    """Actor output plus Gaussian exploration noise, in physical units.

    The tanh output is perturbed by ``N(0, sigma_e)`` (normalized units),
    clipped to ``[-1, 1]`` and multiplied by ``scale``.
    """
    a = actor.forward(obs)
    if sigma_e > 0:
        if rng is None:
            raise ConfigurationError("exploration noise needs a random generator")
        a = a + rng.normal(0.0, sigma_e, size=a.shape)
    return scale * np.clip(a, -1.0, 1.0)


def smoothed_target_actions(nets, next_obs, hp, rng):
    a = nets.actor_target.forward(next_obs)
    if hp.target_noise > 0:
        eps = np.clip(rng.normal(0.0, hp.target_noise, size=a.shape), -hp.noise_clip, hp.noise_clip)
        a = a + eps
    return np.clip(a, -1.0, 1.0)


def td_target(batch, nets, hp, rng=None, target_actions=None):
    """``y = r + gamma * min(Q1'(s', a'), Q2'(s', a'))`` with smoothed ``a'``."""
    if target_actions is None:
        target_actions = smoothed_target_actions(nets, batch.next_obs, hp, rng)
    x = critic_input(batch.next_obs, target_actions)
    q1 = nets.critic1_target.forward(x)[:, 0]
    q2 = nets.critic2_target.forward(x)[:, 0]
    return batch.rewards + hp.gamma * np.minimum(q1, q2)


def critic_loss_and_grads(critic, batch, y):
    q, cache = critic.forward(critic_input(batch.obs, batch.actions), keep=True)
    err = q[:, 0] - y
    loss = float(np.mean(err**2))
    grads, _ = critic.backward(cache, (2.0 / len(y)) * err[:, None])
    return loss, grads


def critic_update(nets, batch, y, hp):
    """One Adam step on each critic toward the shared target ``y``.

    Returns the two mean-squared losses measured before the step.
    """
    losses = []
    for critic, opt in ((nets.critic1, nets.critic1_opt), (nets.critic2, nets.critic2_opt)):
        loss, grads = critic_loss_and_grads(critic, batch, y)
        if not np.isfinite(loss):
            raise DivergenceError("critic loss is not finite")
        adam_step(critic.params, grads, opt, hp.learning_rate)
        losses.append(loss)
    return tuple(losses)


def actor_loss_and_grads(nets, obs):
    a, a_cache = nets.actor.forward(obs, keep=True)
    x = critic_input(obs, a)
    q, q_cache = nets.critic1.forward(x, keep=True)
    n = q.shape[0]
    loss = -float(np.mean(q))
    _, grad_x = nets.critic1.backward(q_cache, np.full((n, 1), -1.0 / n))
    grad_a = grad_x[:, obs.shape[1]:]
    grads, _ = nets.actor.backward(a_cache, grad_a)
    return loss, grads


def actor_update(nets, batch, hp):
    """One Adam step on the actor maximizing ``mean Q1(s, pi(s))``."""
    loss, grads = actor_loss_and_grads(nets, batch.obs)
    if not np.isfinite(loss):
        raise DivergenceError("actor loss is not finite")
    adam_step(nets.actor.params, grads, nets.actor_opt, hp.learning_rate)
    return loss


def train_iteration(nets, batch, hp, rng, iteration):
    """Critic step every call; actor and target updates every ``policy_delay``."""
    y = td_target(batch, nets, hp, rng)
    l1, l2 = critic_update(nets, batch, y, hp)
    out = {"critic1_loss": l1, "critic2_loss": l2, "actor_loss": None}
    if (iteration + 1) % hp.policy_delay == 0:
        out["actor_loss"] = actor_update(nets, batch, hp)
        polyak_update(nets.actor_target, nets.actor, hp.tau)
        polyak_update(nets.critic1_target, nets.critic1, hp.tau)
        polyak_update(nets.critic2_target, nets.critic2, hp.tau)
    return out


class TD3Agent(BaseEstimator):
    """TD3 learner with a scikit-learn style surface.

    ``fit(env)`` runs the interaction loop, ``partial_fit(batch)`` performs a
    single training iteration on given transitions and ``predict(obs)``
    returns deterministic actions in physical units.

    Parameters
    ----------
    gamma, learning_rate, batch_size, tau, policy_delay : see :class:`Hyperparams`
    target_noise, noise_clip, exploration_noise : float
        Fractions of the action scale.
    warmup_steps : int
        Uniform-random actions before the actor takes over.
    buffer_capacity : int
    hidden_sizes : tuple of int
    random_state : int or None
    """

    def __init__(self, gamma=0.99, learning_rate=3e-4, batch_size=256, tau=0.005,
                 policy_delay=2, target_noise=0.2, noise_clip=0.5, exploration_noise=0.1,
                 warmup_steps=1000, buffer_capacity=1_000_000, hidden_sizes=(256, 256),
                 random_state=None):
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.tau = tau
        self.policy_delay = policy_delay
        self.target_noise = target_noise
        self.noise_clip = noise_clip
        self.exploration_noise = exploration_noise
        self.warmup_steps = warmup_steps
        self.buffer_capacity = buffer_capacity
        self.hidden_sizes = hidden_sizes
        self.random_state = random_state

    @property
    def hyperparams(self):
        names = {f.name for f in fields(Hyperparams)}
        return Hyperparams(**{k: v for k, v in self.get_params().items() if k in names})

    def initialize(self, obs_dim, action_dim, action_scale):
        """Build networks, optimizers, buffer and generator from scratch."""
        hp = self.hyperparams
        self.rng_ = np.random.default_rng(self.random_state)
        self.nets_ = make_nets(obs_dim, action_dim, hp.hidden_sizes, self.rng_)
        self.buffer_ = ReplayBuffer(obs_dim, action_dim, hp.buffer_capacity)
        self.n_features_in_ = int(obs_dim)
        self.action_dim_ = int(action_dim)
        self.action_scale_ = float(action_scale)
        self.n_updates_ = 0
        self.n_env_steps_ = 0
        return self

    @property
    def actor_(self):
        return self.nets_.actor

    def predict(self, X):
        """Deterministic actions (physical units) for a batch of observations."""
        check_is_fitted(self, "nets_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ConfigurationError(
                f"expected {self.n_features_in_} observation features, got {X.shape[1]}"
            )
        return select_action(self.nets_.actor, X, 0.0, self.action_scale_)

    def act(self, obs, explore=True):
        """Action for one observation, with exploration noise if requested."""
        check_is_fitted(self, "nets_")
        sigma = self.exploration_noise if explore else 0.0
        return select_action(self.nets_.actor, np.asarray(obs, dtype=float), sigma,
                             self.action_scale_, self.rng_)

    def random_action(self):
        return self.action_scale_ * self.rng_.uniform(-1.0, 1.0, self.action_dim_)

    def remember(self, obs, action, reward, next_obs):
        """Store a transition; ``action`` is in physical units."""
        self.buffer_.push(obs, np.asarray(action, dtype=float) / self.action_scale_, reward, next_obs)

    def partial_fit(self, batch):
        """One TD3 iteration on ``batch`` (normalized actions)."""
        check_is_fitted(self, "nets_")
        if not isinstance(batch, Batch):
            raise ConfigurationError("partial_fit expects a Batch")
        out = train_iteration(self.nets_, batch, self.hyperparams, self.rng_, self.n_updates_)
        self.n_updates_ += 1
        return out

    def update(self):
        """Sample from the buffer and train once (no-op until it is large enough)."""
        if len(self.buffer_) < self.batch_size:
            return None
        return self.partial_fit(self.buffer_.sample(self.batch_size, self.rng_))

    def fit(self, env, n_steps=None, eval_env=None, **train_kw):
        """Interact with ``env`` for ``n_steps`` steps, learning online."""
        from ..trainer import run_steps

        if not hasattr(self, "nets_"):
            self.initialize(env.observation_size, env.action_dim, env.action_scale)
        if n_steps is None:
            n_steps = 10 * self.warmup_steps
        run_steps(self, env, n_steps, eval_env=eval_env, **train_kw)
        return self


def agent_parameters(agent):
    """Name -> array for every network parameter of a fitted agent."""
    out = {}
    for name, net in agent.nets_.named().items():
        for i, p in enumerate(net.params):
            out[f"{name}/{i}"] = p
    return out


def save_checkpoint(agent, path, config_hash=""):
    """Write all networks plus shapes, hyperparameters and the config hash.

    The file is a numpy ``.npz`` archive written atomically.
    """
    check_is_fitted(agent, "nets_")
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "config_hash": config_hash,
        "obs_dim": agent.n_features_in_,
        "action_dim": agent.action_dim_,
        "action_scale": agent.action_scale_,
        "params": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in agent.get_params().items()},
        "shapes": {k: list(v.shape) for k, v in agent_parameters(agent).items()},
        "n_updates": agent.n_updates_,
    }
    arrays = {k.replace("/", "__"): v for k, v in agent_parameters(agent).items()}
    buf = io.BytesIO()
    np.savez(buf, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)
    atomic_write_bytes(path, buf.getvalue())
    return path


def load_checkpoint(path, expect_hash=None):
    """Rebuild an agent from :func:`save_checkpoint` output.

    Raises ConfigurationError on a version, shape or config-hash mismatch.
    """
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ConfigurationError(f"unsupported checkpoint version {meta.get('format_version')}")
        if expect_hash is not None and meta["config_hash"] != expect_hash:
            raise ConfigurationError("checkpoint was produced with a different config")
        params = dict(meta["params"])
        params["hidden_sizes"] = tuple(params["hidden_sizes"])
        agent = TD3Agent(**params)
        agent.initialize(meta["obs_dim"], meta["action_dim"], meta["action_scale"])
        for name, net in agent.nets_.named().items():
            stored = []
            for i in range(len(net.params)):
                key = f"{name}/{i}"
                arr = data[key.replace("/", "__")]
                if list(arr.shape) != meta["shapes"][key]:
                    raise ConfigurationError(f"corrupt checkpoint: {key} has shape {arr.shape}")
                stored.append(arr)
            net.set_params(stored)
        agent.n_updates_ = int(meta["n_updates"])
        agent.config_hash_ = meta["config_hash"]
    return agent
