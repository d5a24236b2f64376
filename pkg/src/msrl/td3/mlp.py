"""Feedforward networks with hand-written reverse mode, and Adam."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

ACTIVATIONS = ("relu", "tanh", "identity")


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name, z, a, g):
    """Backpropagate ``g`` through the activation (``a`` is its output)."""
    if name == "relu":
        return g * (z > 0.0)
    if name == "tanh":
        return g * (1.0 - a * a)
    return g


class Mlp:
    """Affine layers with per-layer activations, float64.

    Parameters
    ----------
    sizes : sequence of int
        Widths ``[in, hidden..., out]``.
    activations : sequence of str
        One entry per layer (``len(sizes) - 1``), each of
        ``"relu"``, ``"tanh"``, ``"identity"``.
    rng : numpy.random.Generator, optional
        Initialization uses ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``; without a
        generator all parameters start at zero.
    """

    def __init__(self, sizes, activations, rng=None):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigurationError("an Mlp needs at least an input and an output width")
        if len(activations) != len(sizes) - 1:
            raise ConfigurationError("need one activation per layer")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {a!r}")
        self.sizes = sizes
        self.activations = tuple(activations)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            if rng is None:
                self.weights.append(np.zeros((fan_in, fan_out)))
                self.biases.append(np.zeros(fan_out))
            else:
                bound = 1.0 / np.sqrt(fan_in)
                self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
                self.biases.append(rng.uniform(-bound, bound, fan_out))

    @property
    def params(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def n_inputs(self):
        return self.sizes[0]

    @property
    def n_outputs(self):
        return self.sizes[-1]

    def copy(self):
        twin = Mlp.__new__(Mlp)
        twin.sizes = list(self.sizes)
        twin.activations = self.activations
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin

    def set_params(self, params):
        params = list(params)
        if len(params) != 2 * len(self.weights):
            raise ConfigurationError("parameter count mismatch")
        for i in range(len(self.weights)):
            w, b = np.asarray(params[2 * i]), np.asarray(params[2 * i + 1])
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ConfigurationError(f"layer {i} shape mismatch")
            self.weights[i] = w.astype(float, copy=True)
            self.biases[i] = b.astype(float, copy=True)

    def forward(self, x, keep=False):
        """Evaluate on a batch ``x`` of shape (n, in) or a single vector.

        With ``keep=True`` also returns the cache needed by :meth:`backward`.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None]
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ConfigurationError(
                f"expected input width {self.sizes[0]}, got shape {x.shape}"
            )
        cache = [(None, x)]
        a = x
        for w, b, name in zip(self.weights, self.biases, self.activations):
            z = a @ w + b
            a = _act(name, z)
            cache.append((z, a))
        out = a[0] if single else a
        return (out, cache) if keep else out

    def backward(self, cache, grad_out):
        """Reverse pass for a scalar loss with ``dL/d(output) = grad_out``.

        Returns
        -------
        grads : list of ndarray
            Same layout as :attr:`params`.
        grad_in : ndarray
            ``dL/d(input)``, shape (n, in).
        """
        g = np.asarray(grad_out, dtype=float)
        if g.ndim == 1:
            g = g[None]
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            z, a = cache[i + 1]
            g = _act_grad(self.activations[i], z, a, g)
            a_prev = cache[i][1]
            grads[2 * i] = a_prev.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, g


@dataclass
class AdamState:
    """First and second moment estimates plus the step counter."""

    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, **kw):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **kw)


def adam_step(params, grads, moments, lr):
    """Bias-corrected Adam update applied in place to ``params``."""
    if len(params) != len(grads) or len(params) != len(moments.m):
        raise ConfigurationError("params, grads and moments must have equal length")
    moments.t += 1
    b1, b2 = moments.beta1, moments.beta2
    c1 = 1.0 - b1**moments.t
    c2 = 1.0 - b2**moments.t
    for p, g, m, v in zip(params, grads, moments.m, moments.v):
        if p.shape != g.shape:
            raise ConfigurationError("gradient shape mismatch")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + moments.eps)
    return params


def polyak_update(targets, online, tau):
    """``theta' <- tau theta + (1 - tau) theta'`` for every parameter."""
    t_params, o_params = targets.params, online.params
    if len(t_params) != len(o_params):
        raise ConfigurationError("target and online networks differ in depth")
    for tp, op in zip(t_params, o_params):
        if tp.shape != op.shape:
            raise ConfigurationError("target and online shapes differ")
        if tau == 1.0:
            tp[...] = op
        elif tau != 0.0:
            tp *= 1.0 - tau
            tp += tau * op
    return targets
