"""Compiled substep loop.

Mirrors :func:`msrl.rod.step` with the ``loads`` callback assembled by
:class:`msrl.simulator.RobotSimulator` (magnetic torque, gravity, pair
damping, ground contact). tests/test_simulator.py checks both paths agree.
"""

import math

import numpy as np
from numba import njit

from .rod import GYRO_ITERATIONS


@njit(cache=True)
def _rotation(wx, wy, wz, out):
    theta = math.sqrt(wx * wx + wy * wy + wz * wz)
    if theta < 1e-6:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / (theta * theta)
    out[0, 0] = 1.0 - b * (wy * wy + wz * wz)
    out[0, 1] = -a * wz + b * wx * wy
    out[0, 2] = a * wy + b * wx * wz
    out[1, 0] = a * wz + b * wx * wy
    out[1, 1] = 1.0 - b * (wx * wx + wz * wz)
    out[1, 2] = -a * wx + b * wy * wz
    out[2, 0] = -a * wy + b * wx * wz
    out[2, 1] = a * wx + b * wy * wz
    out[2, 2] = 1.0 - b * (wx * wx + wy * wy)


@njit(cache=True)
def _log(R, out):
    wx = 0.5 * (R[2, 1] - R[1, 2])
    wy = 0.5 * (R[0, 2] - R[2, 0])
    wz = 0.5 * (R[1, 0] - R[0, 1])
    s = math.sqrt(wx * wx + wy * wy + wz * wz)
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    theta = math.atan2(s, c)
    if s < 1e-6:
        f = 1.0 + theta * theta / 6.0
    else:
        f = theta / s
    out[0] = wx * f
    out[1] = wy * f
    out[2] = wz * f


@njit(cache=True)
def _jac_t_dot(theta, half_sign, m, out):
    """out = (I + half_sign [t]x + c [t]x^2)^T m."""
    t2 = theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]
    th = math.sqrt(t2)
    if th < 1e-4:
        c = 1.0 / 12.0 + t2 / 720.0
    else:
        c = (1.0 - 0.5 * th / math.tan(0.5 * th)) / t2
    # [t]x^T = -[t]x and ([t]x^2)^T = [t]x^2
    cx = theta[1] * m[2] - theta[2] * m[1]
    cy = theta[2] * m[0] - theta[0] * m[2]
    cz = theta[0] * m[1] - theta[1] * m[0]
    tdm = theta[0] * m[0] + theta[1] * m[1] + theta[2] * m[2]
    out[0] = m[0] - half_sign * cx + c * (theta[0] * tdm - t2 * m[0])
    out[1] = m[1] - half_sign * cy + c * (theta[1] * tdm - t2 * m[1])
    out[2] = m[2] - half_sign * cz + c * (theta[2] * tdm - t2 * m[2])


@njit(cache=True)
def elastic_loads(x, Q, l0, rest_k, rest_s, S, B, has_clamp, clamp_frame, f, tau):
    n = l0.shape[0]
    f[:, :] = 0.0
    tau[:, :] = 0.0
    q = np.empty(3)
    nm = np.empty(3)
    for j in range(n):
        tx = x[j + 1, 0] - x[j, 0]
        ty = x[j + 1, 1] - x[j, 1]
        tz = x[j + 1, 2] - x[j, 2]
        for a in range(3):
            q[a] = Q[j, a, 0] * tx + Q[j, a, 1] * ty + Q[j, a, 2] * tz
        for a in range(3):
            sig = q[a] / l0[j] - rest_s[j, a]
            if a == 2:
                sig -= 1.0
            nm[a] = S[a] * sig
        for c in range(3):
            fl = Q[j, 0, c] * nm[0] + Q[j, 1, c] * nm[1] + Q[j, 2, c] * nm[2]
            f[j, c] += fl
            f[j + 1, c] -= fl
        tau[j, 0] += q[1] * nm[2] - q[2] * nm[1]
        tau[j, 1] += q[2] * nm[0] - q[0] * nm[2]
        tau[j, 2] += q[0] * nm[1] - q[1] * nm[0]

    R = np.empty((3, 3))
    theta = np.empty(3)
    m = np.empty(3)
    out = np.empty(3)
    for k in range(1, n):
        for a in range(3):
            for b in range(3):
                R[a, b] = (Q[k - 1, a, 0] * Q[k, b, 0] + Q[k - 1, a, 1] * Q[k, b, 1]
                           + Q[k - 1, a, 2] * Q[k, b, 2])
        _log(R, theta)
        d = 0.5 * (l0[k - 1] + l0[k])
        for a in range(3):
            m[a] = B[a] * (theta[a] / d - rest_k[k - 1, a])
        _jac_t_dot(theta, -0.5, m, out)
        for a in range(3):
            tau[k - 1, a] += out[a]
        _jac_t_dot(theta, 0.5, m, out)
        for a in range(3):
            tau[k, a] -= out[a]

    if has_clamp:
        for a in range(3):
            for b in range(3):
                R[a, b] = (clamp_frame[a, 0] * Q[0, b, 0] + clamp_frame[a, 1] * Q[0, b, 1]
                           + clamp_frame[a, 2] * Q[0, b, 2])
        _log(R, theta)
        d = 0.5 * l0[0]
        for a in range(3):
            m[a] = B[a] * theta[a] / d
        _jac_t_dot(theta, 0.5, m, out)
        for a in range(3):
            tau[0, a] -= out[a]


@njit(cache=True)
def _rotate_frames(Q, w, h):
    n = Q.shape[0]
    Rt = np.empty((3, 3))
    P = np.empty((3, 3))
    for j in range(n):
        # exp(-h w)
        _rotation(-h * w[j, 0], -h * w[j, 1], -h * w[j, 2], Rt)
        for a in range(3):
            for b in range(3):
                P[a, b] = Rt[a, 0] * Q[j, 0, b] + Rt[a, 1] * Q[j, 1, b] + Rt[a, 2] * Q[j, 2, b]
        for a in range(3):
            for b in range(3):
                Q[j, a, b] = P[a, b]


@njit(cache=True)
def _orthonormalize(Q):
    n = Q.shape[0]
    G = np.empty((3, 3))
    P = np.empty((3, 3))
    for j in range(n):
        for a in range(3):
            for b in range(3):
                G[a, b] = Q[j, a, 0] * Q[j, b, 0] + Q[j, a, 1] * Q[j, b, 1] + Q[j, a, 2] * Q[j, b, 2]
        for a in range(3):
            for b in range(3):
                P[a, b] = G[a, 0] * Q[j, 0, b] + G[a, 1] * Q[j, 1, b] + G[a, 2] * Q[j, 2, b]
        for a in range(3):
            for b in range(3):
                Q[j, a, b] = 1.5 * Q[j, a, b] - 0.5 * P[a, b]


@njit(cache=True)
def _ground(x, v, m, f_applied, f, gp, dt):
    # gp = [height, offset, k, c, mu_s, mu_k, v_eps]
    level = gp[0] + gp[1]
    for i in range(x.shape[0]):
        delta = level - x[i, 1]
        if delta < 0.0:
            continue
        fn = gp[2] * delta
        if v[i, 1] < 0.0:
            fn -= gp[3] * v[i, 1]
        if fn < 0.0:
            fn = 0.0
        f[i, 1] += fn
        hx = f_applied[i, 0] + m[i] * v[i, 0] / dt
        hz = f_applied[i, 2] + m[i] * v[i, 2] / dt
        hold = math.sqrt(hx * hx + hz * hz)
        speed = math.sqrt(v[i, 0] * v[i, 0] + v[i, 2] * v[i, 2])
        if speed < gp[6] and hold <= gp[4] * fn:
            f[i, 0] -= hx
            f[i, 2] -= hz
        elif speed > 0.0:
            f[i, 0] -= gp[5] * fn * v[i, 0] / speed
            f[i, 2] -= gp[5] * fn * v[i, 2] / speed
        elif hold > 0.0:
            f[i, 0] -= gp[5] * fn * hx / hold
            f[i, 2] -= gp[5] * fn * hz / hold


@njit(cache=True)
def advance(x, v, Q, w, masses, J, l0, rest_k, rest_s, S, B,
            has_clamp, clamp_pos, clamp_frame,
            volumes, mag, bfield, gravity, nu, skip,
            has_ground, gp, dt, n_steps, blowup, drag, f_ext):
    """Advance ``n_steps`` position-Verlet steps in place.

    ``drag`` (1/s) scales all velocities by ``exp(-drag dt)`` at the end of
    each step; it is only used for static relaxation. ``f_ext`` holds
    constant lab-frame node forces.
    Returns 0 on success, otherwise ``1 + index`` of the diverging step.
    """
    decay = math.exp(-drag * dt)
    n = l0.shape[0]
    f = np.empty((n + 1, 3))
    f_int = np.empty((n + 1, 3))
    tau = np.empty((n, 3))
    tau_int = np.empty((n, 3))
    h = 0.5 * dt
    # magnetization in lab frame is recomputed at the half step
    for it in range(n_steps):
        for i in range(n + 1):
            for c in range(3):
                x[i, c] += h * v[i, c]
        if has_clamp:
            for c in range(3):
                x[0, c] = clamp_pos[c]
        _rotate_frames(Q, w, h)

        elastic_loads(x, Q, l0, rest_k, rest_s, S, B, has_clamp, clamp_frame, f_int, tau_int)
        for i in range(n + 1):
            for c in range(3):
                f[i, c] = f_int[i, c] + f_ext[i, c]
            f[i, 1] -= gravity * masses[i]
        if nu > 0.0:
            for i in range(n + 1 - skip):
                for c in range(3):
                    p = nu * (v[i, c] - v[i + skip, c])
                    f[i, c] -= p
                    f[i + skip, c] += p
        if has_ground:
            _ground(x, v, masses, f, f, gp, dt)

        for j in range(n):
            # material torque = Q (V (Q^T M) x B) = V M x (Q B)
            qb0 = Q[j, 0, 0] * bfield[0] + Q[j, 0, 1] * bfield[1] + Q[j, 0, 2] * bfield[2]
            qb1 = Q[j, 1, 0] * bfield[0] + Q[j, 1, 1] * bfield[1] + Q[j, 1, 2] * bfield[2]
            qb2 = Q[j, 2, 0] * bfield[0] + Q[j, 2, 1] * bfield[1] + Q[j, 2, 2] * bfield[2]
            vm = volumes[j]
            t0 = tau_int[j, 0] + vm * (mag[j, 1] * qb2 - mag[j, 2] * qb1)
            t1 = tau_int[j, 1] + vm * (mag[j, 2] * qb0 - mag[j, 0] * qb2)
            t2 = tau_int[j, 2] + vm * (mag[j, 0] * qb1 - mag[j, 1] * qb0)
            # gyroscopic term (J w) x w at the midpoint velocity, by fixed point;
            # keeps the rotational kinetic energy exact for the free spin
            w0, w1, w2 = w[j, 0], w[j, 1], w[j, 2]
            m0, m1, m2 = w0, w1, w2
            n0, n1, n2 = w0, w1, w2
            for _ in range(GYRO_ITERATIONS):
                jw0 = J[j, 0] * m0
                jw1 = J[j, 1] * m1
                jw2 = J[j, 2] * m2
                n0 = w0 + dt * (t0 + jw1 * m2 - jw2 * m1) / J[j, 0]
                n1 = w1 + dt * (t1 + jw2 * m0 - jw0 * m2) / J[j, 1]
                n2 = w2 + dt * (t2 + jw0 * m1 - jw1 * m0) / J[j, 2]
                m0 = 0.5 * (w0 + n0)
                m1 = 0.5 * (w1 + n1)
                m2 = 0.5 * (w2 + n2)
            w[j, 0] = n0
            w[j, 1] = n1
            w[j, 2] = n2

        vmax = 0.0
        for i in range(n + 1):
            for c in range(3):
                v[i, c] += dt * f[i, c] / masses[i]
                a = abs(v[i, c])
                if not a <= vmax:
                    vmax = a
        if has_clamp:
            for c in range(3):
                v[0, c] = 0.0
        for i in range(n + 1):
            for c in range(3):
                x[i, c] += h * v[i, c]
        _rotate_frames(Q, w, h)
        _orthonormalize(Q)
        if drag > 0.0:
            for i in range(n + 1):
                for c in range(3):
                    v[i, c] *= decay
            for j in range(n):
                for c in range(3):
                    w[j, c] *= decay
        if not vmax <= blowup:
            return it + 1
        for j in range(n):
            for c in range(3):
                if not math.isfinite(w[j, c]):
                    return it + 1
    return 0
