"""Batched SO(3) helpers: hat map, exponential/log maps and inverse Jacobians.

All functions act on stacks of vectors ``(..., 3)`` or matrices ``(..., 3, 3)``.
"""

import numpy as np

_SMALL = 1e-6


def hat(v):
    """Skew-symmetric matrices ``[v]x`` for a stack of vectors."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def exp_map(v):
    """Rodrigues formula, rotation vectors -> rotation matrices."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    small = theta < _SMALL
    safe = np.where(small, 1.0, theta)
    # series expansions keep the small-angle branch accurate to round-off
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    K = hat(v)
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + a[..., None, None] * K + b[..., None, None] * (K @ K)


def log_map(R):
    """Rotation matrices -> rotation vectors, valid for angles below pi."""
    R = np.asarray(R, dtype=float)
    w = 0.5 * np.stack(
        [
            R[..., 2, 1] - R[..., 1, 2],
            R[..., 0, 2] - R[..., 2, 0],
            R[..., 1, 0] - R[..., 0, 1],
        ],
        axis=-1,
    )
    s = np.linalg.norm(w, axis=-1)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    theta = np.arctan2(s, c)
    small = s < _SMALL
    factor = np.where(small, 1.0 + theta**2 / 6.0, theta / np.where(small, 1.0, s))
    return w * factor[..., None]


def inv_left_jacobian(theta_vec):
    """Inverse left Jacobian of SO(3): d log(exp(-psi) R) = -J_l^-1 psi."""
    return _inv_jacobian(theta_vec, -0.5)


def inv_right_jacobian(theta_vec):
    """Inverse right Jacobian of SO(3): d log(R exp(phi)) = J_r^-1 phi."""
    return _inv_jacobian(theta_vec, 0.5)


def _inv_jacobian(theta_vec, half_sign):
    theta_vec = np.asarray(theta_vec, dtype=float)
    theta = np.linalg.norm(theta_vec, axis=-1)
    small = theta < 1e-4
    safe = np.where(small, 1.0, theta)
    coeff = np.where(
        small,
        1.0 / 12.0 + theta**2 / 720.0,
        (1.0 - 0.5 * safe / np.tan(0.5 * safe)) / safe**2,
    )
    K = hat(theta_vec)
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + half_sign * K + coeff[..., None, None] * (K @ K)


def orthonormalize(Q):
    """One Newton-Schulz polar step, enough to remove round-off drift."""
    return 1.5 * Q - 0.5 * (Q @ np.swapaxes(Q, -1, -2) @ Q)
