import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from msrl import _so3

rotvecs = arrays(np.float64, (3,), elements=st.floats(-2.5, 2.5)).filter(
    lambda v: np.linalg.norm(v) < 3.0)


@given(rotvecs)
def test_exp_is_a_rotation(v):
    R = _so3.exp_map(v)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-13)
    assert np.linalg.det(R) > 0


@given(rotvecs)
def test_log_inverts_exp(v):
    assert np.allclose(_so3.log_map(_so3.exp_map(v)), v, atol=1e-9)


def test_small_angle_branch_is_smooth():
    v = np.array([1e-7, -2e-7, 3e-8])
    R = _so3.exp_map(v)
    assert np.allclose(R, np.eye(3) + _so3.hat(v), atol=1e-13)
    assert np.allclose(_so3.log_map(R), v, atol=1e-15)


def test_hat_is_cross_product():
    a, b = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.1, -4.0])
    assert np.allclose(_so3.hat(a) @ b, np.cross(a, b))


@settings(max_examples=30)
@given(rotvecs, arrays(np.float64, (3,), elements=st.floats(-1, 1)))
def test_inverse_jacobians_are_derivatives_of_log(theta, d):
    # log(exp(theta) exp(eps d)) ~ theta + eps Jr^-1 d ; left version likewise
    eps = 1e-6
    R = _so3.exp_map(theta)
    right = (_so3.log_map(R @ _so3.exp_map(eps * d)) - _so3.log_map(R @ _so3.exp_map(-eps * d))) / (2 * eps)
    left = (_so3.log_map(_so3.exp_map(eps * d) @ R) - _so3.log_map(_so3.exp_map(-eps * d) @ R)) / (2 * eps)
    assert np.allclose(right, _so3.inv_right_jacobian(theta) @ d, atol=1e-6)
    assert np.allclose(left, _so3.inv_left_jacobian(theta) @ d, atol=1e-6)


def test_orthonormalize_repairs_drift():
    R = _so3.exp_map(np.array([0.3, 0.2, -0.1]))
    bad = R + 1e-6 * np.random.default_rng(0).standard_normal((3, 3))
    fixed = _so3.orthonormalize(bad[None])[0]
    assert np.abs(fixed @ fixed.T - np.eye(3)).max() < 1e-11
