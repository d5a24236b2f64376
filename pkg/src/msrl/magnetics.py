"""Magnetization profiles, magnetic body torques and section equivalence.

Material-frame index convention used throughout the package:

* index 0 -- ``d1``, the in-plane normal (thickness direction of the band),
* index 1 -- ``d2``, the out-of-plane axis (width direction, bending axis),
* index 2 -- ``d3``, the cross-section normal (tangent direction).

In-plane magnetization directions are therefore combinations of ``d3`` and
``d1``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

MU_T_PER_MT = 1e-3

#: Remanent magnetization of the NdFeB/Ecoflex composite, A/m.
DEFAULT_MAGNETIZATION = 61.3e3

_AXIS = {
    "+d3": (0.0, 0.0, 1.0),
    "-d3": (0.0, 0.0, -1.0),
    "+d1": (1.0, 0.0, 0.0),
    "-d1": (-1.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class MagnetizationProfile:
    """Per-element magnetization, stored in the element material frame.

    Attributes
    ----------
    vectors : ndarray of shape (n_elements, 3)
        Magnetization of every element in its own material frame, A/m.
    magnitude : float
        Nominal magnitude ``M``; every row has norm ``M`` or zero.
    """

    vectors: np.ndarray
    magnitude: float

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != 3:
            raise ConfigurationError("magnetization vectors must have shape (n, 3)")
        norms = np.linalg.norm(vectors, axis=1)
        ok = np.isclose(norms, self.magnitude, rtol=1e-9) | (norms == 0.0)
        if not ok.all():
            raise ConfigurationError("every magnetization vector must have norm M or 0")
        object.__setattr__(self, "vectors", vectors)

    def __len__(self):
        return self.vectors.shape[0]


@dataclass
class FieldState:
    """Uniform external field. ``b`` is stored in tesla, ``b_max`` too."""

    b: np.ndarray
    b_max: float

    def __post_init__(self):
        self.b = np.array(self.b, dtype=float).reshape(3)
        if self.b_max <= 0:
            raise ConfigurationError("field amplitude cap must be positive")

    @classmethod
    def from_mT(cls, b_mT, b_max_mT):
        b = np.zeros(3)
        b_mT = np.asarray(b_mT, dtype=float)
        b[: b_mT.size] = b_mT
        return cls(b * MU_T_PER_MT, b_max_mT * MU_T_PER_MT)

    @property
    def b_mT(self):
        return self.b / MU_T_PER_MT

    @property
    def b_max_mT(self):
        return self.b_max / MU_T_PER_MT

    def copy(self):
        return FieldState(self.b.copy(), self.b_max)


def magnetic_torques(rod, profile, field):
    """Lab-frame torque ``V (R M) x B`` on every element, N*m."""
    n = rod.element_directors.shape[0]
    if len(profile) != n:
        raise ConfigurationError(
            f"profile has {len(profile)} elements but the rod has {n}"
        )
    # rows of Q are the directors, so Q^T maps material -> lab
    m_lab = np.einsum("nji,nj->ni", rod.element_directors, profile.vectors)
    b = field.b if isinstance(field, FieldState) else np.asarray(field, dtype=float)
    return rod.element_volumes[:, None] * np.cross(m_lab, b)


def field_polar(field):
    """In-plane field angle (rad, atan2 convention) and amplitude (T)."""
    b = field.b if isinstance(field, FieldState) else np.asarray(field, dtype=float)
    amplitude = math.hypot(b[0], b[1])
    if amplitude == 0.0:
        return 0.0, 0.0
    return math.atan2(b[1], b[0]), amplitude


def equivalent_radius(height):
    """Radius of the circular section whose I/A matches a band of this height.

    Solving ``(w h^3 / 12) / (pi r^4 / 4) = w h / (pi r^2)`` gives
    ``r = h / sqrt(3)``.
    """
    if not height > 0:
        raise ConfigurationError("section height must be positive")
    return math.sqrt(3.0) / 3.0 * height


def circular_rigidities(radius, youngs_modulus, shear_modulus, alpha_c=1.0):
    """(bending, shear, stretch) rigidities of a circular section."""
    area = math.pi * radius**2
    second_moment = math.pi * radius**4 / 4.0
    return (
        youngs_modulus * second_moment,
        alpha_c * shear_modulus * area,
        youngs_modulus * area,
    )


def rectangular_rigidities(width, height, youngs_modulus, shear_modulus, alpha_c=1.0):
    """(bending, shear, stretch) rigidities of a ``width x height`` band."""
    area = width * height
    return (
        youngs_modulus * width * height**3 / 12.0,
        alpha_c * shear_modulus * area,
        youngs_modulus * area,
    )


def _material_direction(direction):
    if isinstance(direction, str):
        try:
            return np.array(_AXIS[direction])
        except KeyError:
            raise ConfigurationError(f"unknown direction {direction!r}") from None
    d = np.asarray(direction, dtype=float)
    if d.size == 2:
        # (tangent, normal) components of an in-plane direction
        d = np.array([d[1], 0.0, d[0]])
    norm = np.linalg.norm(d)
    if d.shape != (3,) or norm == 0:
        raise ConfigurationError(f"bad magnetization direction {direction!r}")
    return d / norm


def element_midpoints(n_elements):
    return (np.arange(n_elements) + 0.5) / n_elements


def piecewise_profile(segments, n_elements, magnitude=DEFAULT_MAGNETIZATION):
    """Piecewise-constant profile from ``[((start, stop), direction), ...]``.

    Ranges are fractions of the body length and must tile ``[0, 1]`` exactly.
    Each element takes the direction of the range containing its midpoint.
    Directions are ``"+d3"``-style names, 3-vectors in the material frame or
    ``(tangent, normal)`` pairs.
    """
    if n_elements < 1:
        raise ConfigurationError("profile needs at least one element")
    ordered = sorted(
        (((float(a), float(b)), d) for (a, b), d in segments), key=lambda item: item[0]
    )
    if not ordered:
        raise ConfigurationError("no segments given")
    edge = 0.0
    for (a, b), _ in ordered:
        if not math.isclose(a, edge, abs_tol=1e-12) or b <= a:
            raise ConfigurationError("segments must partition [0, 1] without overlap or gap")
        edge = b
    if not math.isclose(edge, 1.0, abs_tol=1e-12):
        raise ConfigurationError("segments must end at 1")

    mids = element_midpoints(n_elements)
    vectors = np.empty((n_elements, 3))
    last = len(ordered) - 1
    for i, ((a, b), direction) in enumerate(ordered):
        upper = mids <= b if i == last else mids < b
        mask = (mids >= a) & upper
        vectors[mask] = magnitude * _material_direction(direction)
    return MagnetizationProfile(vectors, magnitude)


def sinusoidal_profile(n_elements, length, magnitude=DEFAULT_MAGNETIZATION,
                       wavelength=None, phase=0.0):
    """In-plane magnetization rotating along the body.

    Element ``j`` at arc length ``s_j`` gets
    ``M (cos(2 pi s_j / wavelength + phase), sin(...))`` in the
    ``(d3, d1)`` material basis.
    """
    wavelength = length if wavelength is None else wavelength
    if not wavelength > 0:
        raise ConfigurationError("wavelength must be positive")
    s = element_midpoints(n_elements) * length
    angle = 2.0 * math.pi * s / wavelength + phase
    vectors = np.zeros((n_elements, 3))
    vectors[:, 2] = magnitude * np.cos(angle)
    vectors[:, 0] = magnitude * np.sin(angle)
    return MagnetizationProfile(vectors, magnitude)


def uniform_profile(n_elements, direction="+d3", magnitude=DEFAULT_MAGNETIZATION):
    return piecewise_profile([((0.0, 1.0), direction)], n_elements, magnitude)


def pattern_profile(pattern, n_elements, magnitude=DEFAULT_MAGNETIZATION):
    """Built-in folded patterns.

    Pattern 1 magnetizes the two halves transversely in opposite senses,
    pattern 2 magnetizes them axially with opposite polarity.
    """
    if pattern == 1:
        segments = [((0.0, 0.5), "+d1"), ((0.5, 1.0), "-d1")]
    elif pattern == 2:
        segments = [((0.0, 0.5), "+d3"), ((0.5, 1.0), "-d3")]
    else:
        raise ConfigurationError(f"unknown magnetization pattern {pattern!r}")
    return piecewise_profile(segments, n_elements, magnitude)
