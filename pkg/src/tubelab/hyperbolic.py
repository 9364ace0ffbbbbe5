"""Hyperboloid-model arithmetic around a fixed geodesic axis.

Points of H^n live on {q(x) = -1, x0 > 0} in Minkowski space R^{1,n}.  The
axis is the geodesic t -> (cosh t, sinh t, 0, ..., 0); the remaining n-1
coordinates span the normal space, where the rotation part of a loxodromic
isometry acts.  Cylinder coordinates (R, theta, t) place a point at distance
R from the axis, in normal direction theta, above the axis point t:

    x = (cosh R cosh t, cosh R sinh t, sinh R * theta)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "HPoint",
    "TubeIsometry",
    "CylinderCoords",
    "basepoint",
    "axis_point",
    "mink_inner",
    "dist",
    "cylinder_to_point",
    "point_to_cylinder",
    "apply_isometry",
    "cylinder_intrinsic_dist",
    "radial_comparison",
    "RADIAL_C0",
]

# sup over R' >= 2 of (sinh R / sinh R') e^{R'-R} is 1/(1 - e^{-4}) = 1.0187...
RADIAL_C0 = 1.02

_AXIS_EPS = 1e-12


def _minkowski(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


@dataclass(frozen=True)
class HPoint:
    """A point of H^n in Minkowski coordinates (length n+1)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 3:
            raise ValueError("HPoint needs a 1-d coordinate vector of length n+1 >= 3")
        q = _minkowski(c, c)
        if abs(q + 1.0) > 1e-9 * max(1.0, c[0] ** 2):
            raise ValueError(f"not on the hyperboloid: q(x) = {q!r}")
        if c[0] < 1.0 - 1e-12:
            raise ValueError("x0 must be >= 1 (upper sheet)")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.size - 1


@dataclass(frozen=True)
class CylinderCoords:
    """Fermi-type coordinates about the axis.

    ``theta`` is ``None`` only for points on the axis (R == 0), where the
    normal direction is undefined.
    """

    R: float
    theta: np.ndarray | None
    t: float

    def __post_init__(self):
        if self.R < 0:
            raise ValueError("R must be nonnegative")
        if self.theta is not None:
            th = np.asarray(self.theta, dtype=float)
            if abs(np.linalg.norm(th) - 1.0) > 1e-12:
                raise ValueError("theta must be a unit vector")
            object.__setattr__(self, "theta", th)
        elif self.R > _AXIS_EPS:
            raise ValueError("theta may only be unset on the axis")


def _polar_orthonormalize(m: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(m)
    return u @ vt


@dataclass(frozen=True)
class TubeIsometry:
    """Loxodromic isometry: translation by ``ell`` along the axis composed with
    the rotation ``rot`` in SO(n-1) of the normal space."""

    n: int
    ell: float
    rot: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("ambient dimension n must be >= 4")
        if not self.ell > 0:
            raise ValueError("translation length must be positive")
        rot = np.asarray(self.rot, dtype=float)
        if rot.shape != (self.n - 1, self.n - 1):
            raise ValueError(f"rotation part must be {(self.n - 1,) * 2}, got {rot.shape}")
        err = np.max(np.abs(rot.T @ rot - np.eye(self.n - 1)))
        if err > 1e-10 or abs(np.linalg.det(rot) - 1.0) > 1e-10:
            raise ValueError("rotation part must lie in SO(n-1)")
        if err > 1e-12:
            rot = _polar_orthonormalize(rot)
        object.__setattr__(self, "rot", rot)

    @classmethod
    def pure_translation(cls, n: int, ell: float) -> "TubeIsometry":
        return cls(n, ell, np.eye(n - 1))

    @classmethod
    def from_angles(cls, n: int, ell: float, angles) -> "TubeIsometry":
        """Block-diagonal rotation with the given plane angles (first planes)."""
        rot = np.eye(n - 1)
        angles = list(angles)
        if 2 * len(angles) > n - 1:
            raise ValueError("too many rotation angles for dimension")
        for j, a in enumerate(angles):
            c, s = np.cos(a), np.sin(a)
            rot[2 * j:2 * j + 2, 2 * j:2 * j + 2] = [[c, -s], [s, c]]
        return cls(n, ell, rot)

    @cached_property
    def normal_form(self):
        from .rotations import so_normal_form

        return so_normal_form(self.rot)

    def rot_power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.rot, int(k)) if k >= 0 else \
            np.linalg.matrix_power(self.rot.T, int(-k))


def basepoint(n: int) -> HPoint:
    c = np.zeros(n + 1)
    c[0] = 1.0
    return HPoint(c)


def axis_point(n: int, t: float) -> HPoint:
    c = np.zeros(n + 1)
    c[0], c[1] = np.cosh(t), np.sinh(t)
    return HPoint(c)


def mink_inner(x: HPoint, y: HPoint) -> float:
    return float(_minkowski(x.coords, y.coords))


def dist_coords(x, y):
    """Vectorised distance between coordinate arrays of shape (..., n+1).

    Nearby points use sinh(d/2) = sqrt(q(x - y)) / 2, which keeps full
    relative accuracy where arccosh(-<x,y>) would not; far apart points use
    arccosh, since the chord form cancels once the coordinates are large.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    diff = x - y
    q = np.maximum(_minkowski(diff, diff), 0.0)
    near = 2.0 * np.arcsinh(0.5 * np.sqrt(q))
    c = -_minkowski(x, y)
    far = np.arccosh(np.maximum(c, 1.0))
    return np.where(c > 2.0, far, near)


def dist(x: HPoint, y: HPoint) -> float:
    # arccosh(-<x,y>) clamped at 1, in its cancellation-free form
    return float(dist_coords(x.coords, y.coords))


def cylinder_to_point(c: CylinderCoords, n: int | None = None) -> HPoint:
    if c.theta is None:
        if n is None:
            raise ValueError("dimension required for an axis point without theta")
        theta = np.zeros(n - 1)
    else:
        theta = c.theta
    x = np.empty(theta.size + 2)
    x[0] = np.cosh(c.R) * np.cosh(c.t)
    x[1] = np.cosh(c.R) * np.sinh(c.t)
    x[2:] = np.sinh(c.R) * theta
    return HPoint(x)


def point_to_cylinder(x: HPoint) -> CylinderCoords:
    normal = x.coords[2:]
    s = float(np.linalg.norm(normal))
    R = float(np.arcsinh(s))
    t = float(np.arcsinh(x.coords[1] / np.cosh(R)))
    if R < _AXIS_EPS:
        return CylinderCoords(0.0, None, t)
    return CylinderCoords(R, normal / s, t)


def apply_isometry(phi: TubeIsometry, k: int, x: HPoint) -> HPoint:
    """phi^k(x): boost by k*ell in the (x0, x1) plane, rot^k on the normal part."""
    c = x.coords
    a = k * phi.ell
    ch, sh = np.cosh(a), np.sinh(a)
    y = np.empty_like(c)
    y[0] = ch * c[0] + sh * c[1]
    y[1] = sh * c[0] + ch * c[1]
    y[2:] = phi.rot_power(k) @ c[2:]
    return HPoint(y)


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    # unit vectors; accurate at both ends of [0, pi]
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def cylinder_intrinsic_dist(R: float, c1: CylinderCoords, c2: CylinderCoords) -> float:
    """Distance inside Z(R), isometric to S^{n-2}_{sinh R} x R with the axial
    coordinate stretched by cosh R."""
    if abs(c1.R - R) > 1e-9 or abs(c2.R - R) > 1e-9:
        raise ValueError("both points must lie on the cylinder of radius R")
    if c1.theta is None or c2.theta is None:
        ang = 0.0
    else:
        ang = _angle(c1.theta, c2.theta)
    return float(np.hypot(np.sinh(R) * ang, np.cosh(R) * abs(c1.t - c2.t)))


def radial_comparison(R_prime: float, R: float, c1: CylinderCoords,
                      c2: CylinderCoords) -> tuple[float, float]:
    """Intrinsic distances of a (theta, t) pair on Z(R') and on Z(R).

    The outward radial projection Z(R') -> Z(R) fixes (theta, t), so the pair
    is re-placed at both radii.  Guarantees d_low <= d_high <= C0 e^{R-R'} d_low.
    """
    if R_prime < 2.0:
        raise ValueError("radial comparison needs R' >= 2")
    if R < R_prime:
        raise ValueError("need R' <= R")
    lo = cylinder_intrinsic_dist(R_prime, CylinderCoords(R_prime, c1.theta, c1.t),
                                 CylinderCoords(R_prime, c2.theta, c2.t))
    hi = cylinder_intrinsic_dist(R, CylinderCoords(R, c1.theta, c1.t),
                                 CylinderCoords(R, c2.theta, c2.t))
    return lo, hi
