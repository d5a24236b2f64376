"""Trajectory logs and gait tables (height, span, contacts, opening angle)."""

import io
import math
import os
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_bytes, atomic_write_text
from .contact import contact_indicators
from .env import ACTION_PERIOD
from .errors import ConfigurationError
from .trainer import ema_smooth  # noqa: F401  re-exported for gait tables


@dataclass
class TrajectoryLog:
    """Robot state sampled every 10 ms.

    Attributes
    ----------
    t : ndarray of shape (T,)
    positions : ndarray of shape (T, n_nodes, 2)
        In-plane node positions, m.
    indicators : ndarray of shape (T, n_nodes)
    fields : ndarray of shape (T, 3)
        Field in mT.
    ground_height : float
    """

    t: np.ndarray
    positions: np.ndarray
    indicators: np.ndarray
    fields: np.ndarray
    ground_height: float = 0.0

    def __len__(self):
        return self.t.shape[0]

    def save(self, path):
        buf = io.BytesIO()
        np.savez(buf, t=self.t, positions=self.positions, indicators=self.indicators,
                 fields=self.fields, ground_height=np.array(self.ground_height))
        atomic_write_bytes(path, buf.getvalue())

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as d:
            return cls(d["t"], d["positions"], d["indicators"], d["fields"],
                       float(d["ground_height"]))


class TrajectoryRecorder:
    """Callback for :func:`msrl.trainer.rollout` building a TrajectoryLog."""

    def __init__(self):
        self.rows = []

    def __call__(self, env, info):
        rod = env.rod
        self.rows.append((
            env.time,
            rod.node_positions[:, :2].copy(),
            contact_indicators(rod, env.ground),
            env.field.b_mT.copy(),
        ))
        self.ground_height = env.ground.height

    def log(self):
        t, p, ind, f = zip(*self.rows)
        return TrajectoryLog(np.array(t), np.array(p), np.array(ind), np.array(f),
                             self.ground_height)


def regularize(series):
    """Min-max normalization to [0, 1]; a constant series maps to 0."""
    x = np.asarray(series, dtype=float)
    lo, hi = x.min(), x.max()
    if hi - lo <= 1e-12 * max(abs(hi), abs(lo), 1e-300):
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def middle_point(points):
    n = points.shape[0]
    return 0.5 * (points[(n - 1) // 2] + points[n // 2])


def opening_angle(points, length=None):
    """Angle of the vector from the middle node to the midpoint of the ends.

    Measured clockwise from +x (so an upward arch gives ``pi / 2``), range
    ``(-pi, pi]``. A vector shorter than ``1e-9`` of the body length gives 0.
    """
    p = np.asarray(points, dtype=float)[:, :2]
    if length is None:
        length = np.linalg.norm(np.diff(p, axis=0), axis=1).sum()
    o = 0.5 * (p[0] + p[-1]) - middle_point(p)
    if math.hypot(o[0], o[1]) <= 1e-9 * length:
        return 0.0
    beta = math.atan2(-o[1], o[0])
    return math.pi if beta == -math.pi else beta


def forward_velocity(x, dt=ACTION_PERIOD):
    """Mean velocity over each following interval; the last row repeats the
    previous one. Summing ``v[:-1] * dt`` reproduces ``x[-1] - x[0]``."""
    x = np.asarray(x, dtype=float)
    v = np.empty_like(x)
    if x.shape[0] < 2:
        v[...] = 0.0
        return v
    v[:-1] = np.diff(x, axis=0) / dt
    v[-1] = v[-2]
    return v


def analyze_gait(log):
    """Plain-column tables describing the gait in ``log``.

    Returns
    -------
    dict of str -> dict of column name -> ndarray
        ``shape`` (height and span, raw and regularized), ``contacts``
        (front and back end indicators), ``nodes`` (positions and forward
        velocities of every node), ``opening`` (beta) and ``field`` (polar
        samples; angle clockwise from +x in degrees).
    """
    if log is None or len(log) == 0:
        raise ConfigurationError("trajectory log is empty")
    t = log.t
    p = log.positions
    n_nodes = p.shape[1]
    height = p[:, :, 1].max(axis=1) - log.ground_height
    span = p[:, :, 0].max(axis=1) - p[:, :, 0].min(axis=1)
    length = np.linalg.norm(np.diff(p[0], axis=0), axis=1).sum()

    # the front end is the one further along +x at the start
    front = n_nodes - 1 if p[0, -1, 0] >= p[0, 0, 0] else 0
    back = n_nodes - 1 - front

    nodes = {"t": t}
    vel = forward_velocity(p)
    for i in range(n_nodes):
        nodes[f"x{i}"] = p[:, i, 0]
        nodes[f"y{i}"] = p[:, i, 1]
    for i in range(n_nodes):
        nodes[f"vx{i}"] = vel[:, i, 0]
        nodes[f"vy{i}"] = vel[:, i, 1]
    mid = np.array([middle_point(frame) for frame in p])
    nodes["x_mid"] = mid[:, 0]
    nodes["vx_mid"] = forward_velocity(mid[:, 0])

    bx, by = log.fields[:, 0], log.fields[:, 1]
    return {
        "shape": {"t": t, "height": height, "span": span,
                  "height_reg": regularize(height), "span_reg": regularize(span)},
        "contacts": {"t": t, "front": log.indicators[:, front], "back": log.indicators[:, back]},
        "nodes": nodes,
        "opening": {"t": t, "beta": np.array([opening_angle(f, length) for f in p])},
        "field": {"t": t, "angle_deg": np.degrees(-np.arctan2(by, bx)) + 0.0,
                  "amplitude_mT": np.hypot(bx, by)},
    }


def format_table(columns):
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    lines = [" ".join(names)]
    lines += [" ".join(f"{v:.9e}" for v in row) for row in data]
    return "\n".join(lines) + "\n"


def read_table(text):
    lines = text.strip().splitlines()
    names = lines[0].split()
    data = np.array([[float(v) for v in line.split()] for line in lines[1:]]).reshape(-1, len(names))
    return {k: data[:, i] for i, k in enumerate(names)}


def write_tables(tables, out_dir):
    """Write each table to ``<out_dir>/<name>.txt``; returns the paths."""
    paths = []
    for name, cols in tables.items():
        path = os.path.join(out_dir, f"{name}.txt")
        atomic_write_text(path, format_table(cols))
        paths.append(path)
    return paths
