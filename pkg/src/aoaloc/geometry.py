"""Planar geometry: receiver frames, angle arithmetic, covariance transforms.

Conventions used throughout the package:

* All angles are radians, wrapped to (-pi, pi]. Degrees exist only at the
  CLI boundary.
* A receiver's polar frame is centered at the receiver, with the bearing
  measured from the global +x axis (not from the broadside). The broadside
  only defines the feasible cone of local AoA measurements.
* Covariances are 2x2 symmetric matrices stored as (a11, a12, a22); they are
  symmetrized by construction and checked positive semidefinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRange

TWO_PI = 2.0 * math.pi

# Below this range the polar<->cartesian Jacobian is treated as singular.
MIN_RANGE = 1e-9


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(theta, TWO_PI)
    return w if w > -math.pi else w + TWO_PI


def angular_error(measured: float, predicted: float) -> float:
    """Smallest absolute angular difference, in [0, pi].

    Equals min over integer k of |measured - predicted + 2*pi*k|.
    """
    return abs(wrap_angle(measured - predicted))


@dataclass(frozen=True)
class Point2:
    """A point in the global cartesian frame."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Point2 components must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class ReceiverPose:
    """A receiver's identity, position and antenna broadside direction."""

    id: int
    position: Point2
    broadside: float  # global-frame direction the array faces, (-pi, pi]

    def __post_init__(self):
        if not -math.pi < self.broadside <= math.pi + 1e-15:
            raise ValueError(f"broadside must lie in (-pi, pi], got {self.broadside}")


@dataclass(frozen=True)
class Sym2:
    """2x2 symmetric PSD matrix stored as upper-triangle entries."""

    a11: float
    a12: float
    a22: float

    def __post_init__(self):
        for name in ("a11", "a12", "a22"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Sym2.{name} must be finite")
        # Tolerance scaled with entry magnitude so the check stays meaningful
        # when variances are large (absolute 1e-12 is below rounding noise there).
        tol = 1e-12 * max(1.0, abs(self.a11 * self.a22))
        if self.a11 < -tol or self.a22 < -tol or self.det() < -tol:
            raise ValueError(
                f"Sym2 not positive semidefinite: a11={self.a11}, a12={self.a12}, a22={self.a22}"
            )

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a12

    def trace(self) -> float:
        return self.a11 + self.a22

    def min_eigenvalue(self) -> float:
        half_tr = 0.5 * (self.a11 + self.a22)
        radius = math.hypot(0.5 * (self.a11 - self.a22), self.a12)
        return half_tr - radius

    def to_matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    @staticmethod
    def from_matrix(m) -> "Sym2":
        """Build from any 2x2 array, symmetrizing the off-diagonal entries."""
        m = np.asarray(m, dtype=float)
        return Sym2(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))


@dataclass(frozen=True)
class PolarEstimate:
    """Source location estimate in a receiver's polar frame: (range, bearing)."""

    range: float
    bearing: float
    cov: Sym2  # over (range, bearing)

    def __post_init__(self):
        if not math.isfinite(self.range) or self.range < 0.0:
            raise ValueError(f"range must be finite and >= 0, got {self.range}")
        if not -math.pi < self.bearing <= math.pi + 1e-15:
            raise ValueError(f"bearing must lie in (-pi, pi], got {self.bearing}")


@dataclass(frozen=True)
class CartesianEstimate:
    """Source location estimate in the global cartesian frame."""

    mean: Point2
    cov: Sym2  # over (x, y)


def pol_to_cart_cov(range_: float, bearing: float, cov: Sym2) -> Sym2:
    """Map a (range, bearing) covariance to (x, y) via the polar Jacobian.

    The Jacobian of (R, theta) -> X_c + R*(cos theta, sin theta) is
    T = [[cos, -R sin], [sin, R cos]]; the result is T cov T^T. Valid for
    signed ranges (used by the bootstrap, whose algebraic range may be < 0).
    """
    c = math.cos(bearing)
    s = math.sin(bearing)
    rs = range_ * s
    rc = range_ * c
    # rows of T @ cov
    b11 = c * cov.a11 - rs * cov.a12
    b12 = c * cov.a12 - rs * cov.a22
    b21 = s * cov.a11 + rc * cov.a12
    b22 = s * cov.a12 + rc * cov.a22
    return Sym2(
        b11 * c - b12 * rs,
        b11 * s + b12 * rc,  # == row2 . row1 by symmetry of cov
        b21 * s + b22 * rc,
    )


def cart_to_pol_cov(range_: float, bearing: float, cov: Sym2) -> Sym2:
    """Map an (x, y) covariance to (range, bearing); inverse of pol_to_cart_cov."""
    if range_ < MIN_RANGE:
        raise DegenerateRange(f"range {range_} below {MIN_RANGE}; polar Jacobian singular")
    c = math.cos(bearing)
    s = math.sin(bearing)
    sr = s / range_
    cr = c / range_
    # T_car = [[c, s], [-s/R, c/R]]
    b11 = c * cov.a11 + s * cov.a12
    b12 = c * cov.a12 + s * cov.a22
    b21 = -sr * cov.a11 + cr * cov.a12
    b22 = -sr * cov.a12 + cr * cov.a22
    return Sym2(
        b11 * c + b12 * s,
        -b11 * sr + b12 * cr,
        -b21 * sr + b22 * cr,
    )


def polar_to_cart(receiver: ReceiverPose, est: PolarEstimate) -> CartesianEstimate:
    """Transform a polar-frame estimate at `receiver` to the global frame."""
    mean = Point2(
        receiver.position.x + est.range * math.cos(est.bearing),
        receiver.position.y + est.range * math.sin(est.bearing),
    )
    return CartesianEstimate(mean, pol_to_cart_cov(est.range, est.bearing, est.cov))


def cart_to_polar(receiver: ReceiverPose, est: CartesianEstimate) -> PolarEstimate:
    """Transform a global-frame estimate to `receiver`'s polar frame.

    Bearing convention: arg(mean - receiver position), consistent with the
    forward map in polar_to_cart so that round trips are exact.
    """
    dx = est.mean.x - receiver.position.x
    dy = est.mean.y - receiver.position.y
    r = math.hypot(dx, dy)
    if r < MIN_RANGE:
        raise DegenerateRange(
            f"estimate coincides with receiver {receiver.id} (range {r}); cannot invert Jacobian"
        )
    bearing = wrap_angle(math.atan2(dy, dx))
    return PolarEstimate(r, bearing, cart_to_pol_cov(r, bearing, est.cov))


def true_bearing(receiver: ReceiverPose, source: Point2) -> float:
    """Global-frame bearing of `source` as seen from `receiver`, in (-pi, pi]."""
    dx = source.x - receiver.position.x
    dy = source.y - receiver.position.y
    if math.hypot(dx, dy) < MIN_RANGE:
        raise DegenerateRange(f"source coincides with receiver {receiver.id}")
    return wrap_angle(math.atan2(dy, dx))
