"""Training schedule, evaluation and seed sweeps."""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write_text
from .env import ACTION_PERIOD
from .errors import ConfigurationError, InstabilityError, MsrlError
from .td3.agent import save_checkpoint

CURVE_HEADER = "step return ema_return"


class TrainingAborted(MsrlError):
    """Raised when the environment diverges during training."""

    def __init__(self, message, step_index, curve=None):
        super().__init__(message)
        self.step_index = step_index
        self.curve = curve


def ema_smooth(series, factor):
    """``y_t = factor * y_{t-1} + (1 - factor) * x_t`` with ``y_0 = x_0``."""
    if not 0 < factor <= 1:
        raise ConfigurationError("EMA factor must lie in (0, 1]")
    x = np.asarray(series, dtype=float)
    y = np.empty_like(x)
    if x.size == 0:
        return y
    y[0] = x[0]
    for t in range(1, x.size):
        y[t] = factor * y[t - 1] + (1.0 - factor) * x[t]
    return y


@dataclass
class LearningCurve:
    """Evaluation points ``(step, return, ema_return)``."""

    ema_factor: float = 0.99
    steps: list = field(default_factory=list)
    returns: list = field(default_factory=list)
    ema: list = field(default_factory=list)

    def add(self, step, ret):
        if self.steps and step <= self.steps[-1]:
            raise ConfigurationError("curve steps must be strictly increasing")
        prev = self.ema[-1] if self.ema else ret
        smoothed = ret if not self.ema else self.ema_factor * prev + (1 - self.ema_factor) * ret
        self.steps.append(int(step))
        self.returns.append(float(ret))
        self.ema.append(float(smoothed))

    def __len__(self):
        return len(self.steps)

    @property
    def final_ema(self):
        return self.ema[-1] if self.ema else float("nan")

    def to_text(self):
        rows = [CURVE_HEADER]
        rows += [f"{s:d} {r:.9e} {e:.9e}" for s, r, e in zip(self.steps, self.returns, self.ema)]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text, ema_factor=0.99):
        lines = text.strip().splitlines()
        if not lines or lines[0].split() != CURVE_HEADER.split():
            raise ConfigurationError("not a learning-curve table")
        curve = cls(ema_factor)
        for line in lines[1:]:
            s, r, e = line.split()
            curve.steps.append(int(s))
            curve.returns.append(float(r))
            curve.ema.append(float(e))
        return curve


@dataclass
class EvalResult:
    mean_return: float
    mean_displacement: float
    field_log: np.ndarray
    returns: list


def rollout(policy, env, horizon=None, seed=0, record=None):
    """One deterministic episode from a zero initial field.

    ``policy(obs) -> action`` in physical units. ``record(env, info)`` is
    called after reset (with ``info=None``) and after every step.

    Returns
    -------
    ret : float
    displacement : float
    fields : ndarray of shape (steps + 1, 4)
        ``t, bx, by, bz`` in s and mT, starting with the reset state.
    """
    obs = env.reset(seed=seed, mode="zero")
    if record is not None:
        record(env, None)
    horizon = _horizon(env, horizon)
    ret = displacement = 0.0
    rows = [[0.0, 0.0, 0.0, 0.0]]
    for k in range(horizon):
        obs, r, truncated, info = env.step(policy(obs))
        ret += r
        displacement += info["displacement"]
        b = info["field_mT"]
        rows.append([(k + 1) * ACTION_PERIOD, b[0], b[1], b[2]])
        if record is not None:
            record(env, info)
        if truncated:
            break
    return ret, displacement, np.array(rows)


def _horizon(env, horizon):
    limit = env.cfg.max_steps if hasattr(env, "cfg") else env.horizon
    return limit if horizon is None else min(int(horizon), limit)


def evaluate(agent, env, episodes=1, horizon=None, seed=0):
    """Mean return and displacement of the deterministic policy.

    Episodes start from a zero field; the field log is from the first one.
    """
    if hasattr(agent, "n_features_in_") and agent.n_features_in_ != env.observation_size:
        raise ConfigurationError("policy and environment observation sizes differ")
    returns, moves, log = [], [], None
    for e in range(episodes):
        ret, disp, fields = rollout(lambda o: agent.act(o, explore=False), env, horizon, seed + e)
        returns.append(ret)
        moves.append(disp)
        if log is None:
            log = fields
    return EvalResult(float(np.mean(returns)), float(np.mean(moves)), log, returns)


def random_policy_return(env, episodes=20, horizon=None, seed=0):
    """Mean return of uniform random increments from a zero field."""
    rng = np.random.default_rng(seed)
    scale = env.action_scale
    returns = []
    for e in range(episodes):
        ret, _, _ = rollout(lambda o: scale * rng.uniform(-1.0, 1.0, env.action_dim),
                            env, horizon, seed + e)
        returns.append(ret)
    return float(np.mean(returns))


def run_steps(agent, env, n_steps, eval_env=None, curve=None, eval_interval=1000,
              eval_episodes=1, eval_horizon=None, ema_factor=0.99, seed=0, step_offset=0,
              stop_ema=None):
    """Interact and learn for ``n_steps`` environment steps.

    Truncating transitions are not stored. Evaluations run every
    ``eval_interval`` global steps on ``eval_env`` (if given) and are appended
    to ``curve``; with ``stop_ema`` the loop ends once the EMA return
    reaches it.
    """
    curve = LearningCurve(ema_factor) if curve is None else curve
    obs = env.reset(seed=seed, mode="random")
    hp = agent.hyperparams
    for k in range(n_steps):
        if agent.n_env_steps_ < hp.warmup_steps:
            action = agent.random_action()
        else:
            action = agent.act(obs)
        try:
            next_obs, reward, truncated, _ = env.step(action)
        except InstabilityError as exc:
            raise TrainingAborted(
                f"environment diverged at training step {step_offset + k}: {exc}",
                step_offset + k, curve,
            ) from exc
        agent.n_env_steps_ += 1
        if truncated:
            obs = env.reset(mode="random")
        else:
            agent.remember(obs, action, reward, next_obs)
            obs = next_obs
        if agent.n_env_steps_ > hp.warmup_steps:
            agent.update()
        global_step = step_offset + k + 1
        if eval_env is not None and global_step % eval_interval == 0:
            res = evaluate(agent, eval_env, eval_episodes, eval_horizon, seed=seed)
            curve.add(global_step, res.mean_return)
            if stop_ema is not None and curve.final_ema >= stop_ema:
                break
    return curve


@dataclass
class TrainResult:
    agent: object
    curve: LearningCurve
    aborted_at: int | None = None
    error: str | None = None


def train(config, seed, out_dir=None):
    """Two-phase training of one seed.

    Phase 1 uses the scaled environment, phase 2 the accurate one, with the
    same networks, optimizer state and replay buffer. With ``out_dir`` the
    config snapshot, checkpoints (``phase1.npz``, ``policy.npz``) and the
    learning curve (``curve.txt``) are written there.
    """
    tc = config.train
    agent = config.make_agent(seed)
    env = config.make_env("scaled")
    agent.initialize(env.observation_size, env.action_dim, env.action_scale)
    curve = LearningCurve(tc.ema_factor)
    chash = config.hash()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        config.save(os.path.join(out_dir, "config.yaml"))
    kw = dict(eval_interval=tc.eval_interval, eval_episodes=tc.eval_episodes,
              eval_horizon=tc.eval_horizon, seed=seed, curve=curve, stop_ema=tc.stop_ema)
    result = TrainResult(agent, curve)
    try:
        run_steps(agent, env, tc.scaled_steps, eval_env=config.make_env("scaled", "zero"), **kw)
        if out_dir is not None:
            save_checkpoint(agent, os.path.join(out_dir, "phase1.npz"), chash)
        if tc.refine_steps > 0 and config.env.kind == "robot":
            fine = config.make_env("accurate")
            run_steps(agent, fine, tc.refine_steps, eval_env=config.make_env("accurate", "zero"),
                      step_offset=tc.scaled_steps, **kw)
    except TrainingAborted as exc:
        result.aborted_at = exc.step_index
        result.error = str(exc)
    if out_dir is not None:
        save_checkpoint(agent, os.path.join(out_dir, "policy.npz"), chash)
        atomic_write_text(os.path.join(out_dir, "curve.txt"), curve.to_text())
        status = {"seed": seed, "config_hash": chash, "aborted_at": result.aborted_at,
                  "error": result.error, "final_ema": curve.final_ema if len(curve) else None}
        atomic_write_text(os.path.join(out_dir, "status.json"),
                          json.dumps(status, indent=1, sort_keys=True) + "\n")
    return result


@dataclass
class SweepReport:
    curves: dict
    final_ema: dict
    stable: dict
    failures: dict
    threshold: float
    average: LearningCurve | None

    def summary_text(self):
        rows = ["seed final_ema stable"]
        for s in sorted(self.curves):
            rows.append(f"{s:d} {self.final_ema[s]:.9e} {int(self.stable[s])}")
        for s in sorted(self.failures):
            rows.append(f"{s:d} nan 0")
        return "\n".join(rows) + "\n"


def classify(final_ema, fraction=0.5, threshold=None):
    """Seeds whose final EMA return reaches ``threshold`` (default: ``fraction``
    of the best seed's)."""
    if not final_ema:
        return {}, float("nan")
    if threshold is None:
        threshold = fraction * max(final_ema.values())
    return {s: v >= threshold for s, v in final_ema.items()}, threshold


def average_curve(curves):
    """Pointwise mean of the EMA curves (they must share evaluation steps)."""
    curves = list(curves)
    if not curves:
        return None
    steps = curves[0].steps
    for c in curves[1:]:
        if c.steps != steps:
            raise ConfigurationError("curves must share evaluation steps to be averaged")
    avg = LearningCurve(curves[0].ema_factor)
    avg.steps = list(steps)
    avg.returns = list(np.mean([c.returns for c in curves], axis=0))
    avg.ema = list(np.mean([c.ema for c in curves], axis=0))
    return avg


def seed_sweep(config, seeds=None, out_dir=None):
    """Train every seed independently and classify the stable ones.

    A failing seed is recorded in ``failures`` and the sweep continues.
    """
    seeds = config.train.seeds if seeds is None else tuple(int(s) for s in seeds)
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError("seeds must be distinct")
    curves, finals, failures = {}, {}, {}
    for s in seeds:
        sub = None if out_dir is None else os.path.join(out_dir, f"seed_{s}")
        res = train(config, s, sub)
        if res.error is not None or not len(res.curve):
            failures[s] = res.error or "no evaluation points"
            continue
        curves[s] = res.curve
        finals[s] = res.curve.final_ema
    stable, threshold = classify(finals, config.train.stability_fraction,
                                 config.train.stability_threshold)
    report = SweepReport(curves, finals, stable, failures, threshold, average_curve(curves.values()))
    if out_dir is not None:
        atomic_write_text(os.path.join(out_dir, "sweep.txt"), report.summary_text())
        if report.average is not None:
            atomic_write_text(os.path.join(out_dir, "average_curve.txt"), report.average.to_text())
    return report
