"""Tube quotients H^n / <phi>: injectivity radius, Margulis radius, depth and
orbit counts.

All orbit quantities reduce to the displacement of phi^k at a point with
cylinder coordinates (R, theta, t).  Writing P_j, F for the squared weights of
theta in the j-th rotation plane and in the flip block of the rotation part,

    sinh^2(d_k / 2) = cosh^2 R sinh^2(k ell / 2)
                      + sinh^2 R (sum_j P_j sin^2(k theta_j / 2) + F [k odd]),

which is independent of t and free of cancellation for small displacements.
Every truncation of a k-search below rests on d_k >= |k| ell: the nearest-point
projection onto the axis is 1-Lipschitz and moves by k ell under phi^k.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .hyperbolic import HPoint, TubeIsometry, point_to_cylinder

__all__ = [
    "EmptyThinPart",
    "TubeQuotient",
    "OrbitCountRecord",
    "count_exponent",
    "displacement",
    "displacements",
    "injectivity_radius",
    "inj_at",
    "margulis_radius",
    "depth",
    "orbit_count_ambient",
    "orbit_count_at",
    "preimage_bound_check",
    "rez_length_bound_check",
]

MAX_K_BUDGET = 10**8
_CHUNK = 1 << 16


class EmptyThinPart(ValueError):
    """Raised when ell/2 >= mu, so no point of the tube has inj <= mu."""


def count_exponent(n: int) -> int:
    return (n + 1) // 2


@dataclass(frozen=True)
class TubeQuotient:
    phi: TubeIsometry
    mu: float = 0.1
    # normal direction used for radius-valued quantities; e_1 when unset
    direction: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("Margulis constant must be positive")
        if self.phi.ell < 1e-9:
            raise ValueError("translation length below 1e-9: k-search truncation explodes")
        d = self.phi.n - 1
        th = np.zeros(d) if self.direction is None else np.asarray(self.direction, float)
        if self.direction is None:
            th[0] = 1.0
        th = th / np.linalg.norm(th)
        object.__setattr__(self, "direction", th)

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def ell(self) -> float:
        return self.phi.ell

    @property
    def thin_empty(self) -> bool:
        return self.phi.ell / 2 >= self.mu

    @cached_property
    def boundary_radius(self) -> float:
        """R_mu along ``direction``; 0 when the thin part is empty."""
        if self.thin_empty:
            return 0.0
        return margulis_radius(self)


@dataclass
class OrbitCountRecord:
    n: int
    ell: float
    angles: tuple
    R: float
    r: float
    count: int
    inj: float
    depth: float
    bound: float
    ratio: float

    def to_row(self) -> dict:
        row = asdict(self)
        row["angles"] = ";".join(repr(float(a)) for a in self.angles)
        return row


def _sin2_half(x):
    s = np.sin(0.5 * x)
    return s * s


def displacements(phi: TubeIsometry, R: float, theta, ks) -> np.ndarray:
    """d(phi^k y, y) for each k in ``ks`` at a point of radius R, direction theta."""
    ks = np.asarray(ks, dtype=float)
    nf = phi.normal_form
    sh2 = math.sinh(R) ** 2
    ch2 = 1.0 + sh2
    s = ch2 * np.sinh(0.5 * phi.ell * ks) ** 2
    if sh2 > 0.0 and theta is not None:
        planes, _fixed, flip = nf.plane_weights(np.asarray(theta, dtype=float))
        rot_term = np.zeros_like(ks)
        for pj, aj in zip(planes, nf.angles):
            if pj > 0.0:
                rot_term += pj * _sin2_half(ks * aj)
        if flip > 0.0:
            rot_term += flip * (np.mod(ks, 2.0) == 1.0)
        s = s + sh2 * rot_term
    return 2.0 * np.arcsinh(np.sqrt(s))


def _cyl(x: HPoint):
    c = point_to_cylinder(x)
    return c.R, c.theta


def displacement(phi: TubeIsometry, k: int, x: HPoint) -> float:
    R, theta = _cyl(x)
    return float(displacements(phi, R, theta, [k])[0])


def inj_at(phi: TubeIsometry, R: float, theta) -> float:
    """Half the minimal nonzero displacement at radius R, direction theta."""
    d1 = float(displacements(phi, R, theta, [1])[0])
    best = d1
    # d_k >= k ell, so only k < best / ell can improve on ``best``
    k0 = 2
    while k0 * phi.ell < best:
        kmax = min(int(math.floor(best / phi.ell)), k0 + _CHUNK - 1)
        if kmax - 1 > MAX_K_BUDGET:
            raise ValueError("k-search exceeds budget")
        ks = np.arange(k0, kmax + 1)
        best = min(best, float(np.min(displacements(phi, R, theta, ks))))
        k0 = kmax + 1
    return 0.5 * best


def injectivity_radius(tube: TubeQuotient, x: HPoint) -> float:
    R, theta = _cyl(x)
    return inj_at(tube.phi, R, theta)


def margulis_radius(tube: TubeQuotient, theta=None, level: float | None = None,
                    tol: float = 1e-10) -> float:
    """Radius where inj reaches ``level`` (default mu) along direction theta.

    Bisection is valid because inj is nondecreasing along radial rays: each
    d_k grows with R by the displacement formula.
    """
    level = tube.mu if level is None else level
    theta = tube.direction if theta is None else theta
    phi = tube.phi
    if phi.ell / 2 >= level:
        raise EmptyThinPart(f"ell/2 = {phi.ell / 2:g} >= {level:g}: thin part is empty")
    lo, hi = 0.0, 1.0
    while inj_at(phi, hi, theta) < level:
        lo, hi = hi, 2.0 * hi
        if hi > 1e3:
            raise RuntimeError("Margulis radius bracketing failed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if inj_at(phi, mid, theta) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def depth(tube: TubeQuotient, x: HPoint, level: float | None = None) -> float:
    """Radial distance from x to the boundary {inj = level} of the thin part."""
    R, theta = _cyl(x)
    if theta is None:
        theta = tube.direction
    level = tube.mu if level is None else level
    if tube.phi.ell / 2 >= level:
        return 0.0
    return max(0.0, margulis_radius(tube, theta, level) - R)


def orbit_count_at(phi: TubeIsometry, R: float, theta, r: float) -> int:
    """#{k in Z : d(phi^k y, y) <= r}, k = 0 included."""
    kmax = int(math.floor(r / phi.ell))
    if kmax > MAX_K_BUDGET:
        raise ValueError(f"r/ell = {r / phi.ell:.3g} exceeds the sweep budget")
    hits = 0
    for k0 in range(1, kmax + 1, _CHUNK):
        ks = np.arange(k0, min(kmax, k0 + _CHUNK - 1) + 1)
        hits += int(np.count_nonzero(displacements(phi, R, theta, ks) <= r))
    return 1 + 2 * hits


def orbit_count_ambient(tube: TubeQuotient, x: HPoint, r: float) -> int:
    if not r > 0:
        raise ValueError("search radius must be positive")
    R, theta = _cyl(x)
    return orbit_count_at(tube.phi, R, theta, r)


def _angles_of(phi: TubeIsometry) -> tuple:
    return tuple(float(a) for a in phi.normal_form.angles)


def preimage_bound_check(tube: TubeQuotient, x: HPoint, r: float = 1.0) -> OrbitCountRecord:
    R, theta = _cyl(x)
    count = orbit_count_at(tube.phi, R, theta, r)
    dep = depth(tube, x)
    bound = math.exp(count_exponent(tube.n) * dep)
    return OrbitCountRecord(
        n=tube.n, ell=tube.ell, angles=_angles_of(tube.phi), R=R, r=r, count=count,
        inj=inj_at(tube.phi, R, theta), depth=dep, bound=bound, ratio=count / bound)


def rez_length_bound_check(tube: TubeQuotient):
    """(1/ell, exp(floor((n+1)/2) R_mu)), or None when the thin part is empty."""
    if tube.thin_empty:
        return None
    return 1.0 / tube.ell, math.exp(count_exponent(tube.n) * tube.boundary_radius)
