"""Hardware waveform CSV: ``t,bx,by,bz`` sampled at 100 Hz, in s and mT."""

import csv
import io

import numpy as np

from ._io import atomic_write_text
from .env import ACTION_LIMIT_MT, ACTION_PERIOD
from .errors import ConfigurationError, WaveformError

HEADER = ("t", "bx", "by", "bz")
#: Resolution of the 6-decimal format; bounds are checked to this slack.
TOLERANCE = 1e-6


def _fmt(x):
    # round first so tiny negatives do not print as -0.000000
    return f"{round(float(x), 6) + 0.0:.6f}"


def format_rows(table):
    lines = [",".join(HEADER)]
    lines += [",".join(_fmt(v) for v in row) for row in table]
    return "\n".join(lines) + "\n"


def parse_text(text):
    """Parse CSV text into an ``(n, 4)`` array; raises WaveformError."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise WaveformError("empty waveform file", 0) from None
    if tuple(h.strip() for h in header) != HEADER:
        raise WaveformError(f"header must be {','.join(HEADER)}", 0)
    rows = []
    for i, rec in enumerate(reader):
        if len(rec) != 4:
            raise WaveformError(f"row {i} has {len(rec)} fields", i)
        try:
            rows.append([float(v) for v in rec])
        except ValueError:
            raise WaveformError(f"row {i} is not numeric", i) from None
    return np.array(rows, dtype=float).reshape(-1, 4)


def check_table(table, b_max_mT, step_cap_mT=ACTION_LIMIT_MT, tol=TOLERANCE):
    """Raise WaveformError at the first row that breaks a waveform invariant."""
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] != 4 or table.shape[0] == 0:
        raise WaveformError("waveform must be a non-empty (n, 4) table", 0)
    for i, (t, bx, by, bz) in enumerate(table):
        if not np.all(np.isfinite(table[i])):
            raise WaveformError(f"row {i} is not finite", i)
        if abs(t - i * ACTION_PERIOD) > tol:
            raise WaveformError(f"row {i} time {t} is not {i * ACTION_PERIOD:.2f} s", i)
        if bz != 0.0:
            raise WaveformError(f"row {i} has nonzero bz", i)
        if np.hypot(bx, by) > b_max_mT + tol:
            raise WaveformError(f"row {i} amplitude exceeds {b_max_mT} mT", i)
        if i == 0:
            if bx != 0.0 or by != 0.0:
                raise WaveformError("row 0 must be a zero field", 0)
            continue
        step = np.abs(table[i, 1:3] - table[i - 1, 1:3])
        if np.any(step > step_cap_mT + tol):
            raise WaveformError(f"row {i} increment exceeds {step_cap_mT} mT", i)


def waveform_table(policy, env, duration, seed=0):
    """Deterministic zero-initial-field rollout sampled every 10 ms.

    The controller keeps running through the episode time cap, so any
    duration is allowed. Returns ``round(duration * 100)`` rows.
    """
    n_rows = int(round(duration / ACTION_PERIOD))
    if n_rows < 1:
        raise ConfigurationError("duration must cover at least one 10 ms sample")
    obs = env.reset(seed=seed, mode="zero")
    rows = [[0.0, 0.0, 0.0, 0.0]]
    for k in range(1, n_rows):
        obs, _, _, info = env.step(policy(obs))
        b = info["field_mT"]
        rows.append([k * ACTION_PERIOD, b[0], b[1], 0.0])
    return np.array(rows)


def export_waveform(agent, env, duration, path, b_max_mT, seed=0):
    """Roll out ``agent`` and write the CSV atomically.

    Values are validated after formatting; a violation refuses the export
    with the offending row index and nothing is written.
    """
    table = waveform_table(lambda o: agent.act(o, explore=False), env, duration, seed)
    text = format_rows(table)
    check_table(parse_text(text), b_max_mT)
    atomic_write_text(path, text)
    return table


def read_waveform(path, b_max_mT=None):
    """Load (and optionally validate) a waveform CSV."""
    with open(path, encoding="utf-8", newline="") as fh:
        table = parse_text(fh.read())
    if b_max_mT is not None:
        check_table(table, b_max_mT)
    return table
