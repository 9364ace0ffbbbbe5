"""Reduction of an orbit on the cylinder Z(R) to a flat torus times a line.

In the normal form of the rotation part, the orbit of a direction v0 stays on
the product of circles of radii sinh(R) |v0_j| (one per rotation plane), while
the axial coordinate advances by ell cosh R per step.  A flip block (-1
eigenvalues) is carried as one more circle with angle pi.  Distances on this
flat torus x line bound the cylinder distance from above, which in turn bounds
the ambient distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hyperbolic import HPoint, point_to_cylinder
from .rotations import RotationNormalForm, so_normal_form
from .tube import MAX_K_BUDGET, TubeQuotient, count_exponent, inj_at

__all__ = [
    "RotationNormalForm",
    "so_normal_form",
    "TorusModel",
    "build_torus_model",
    "angdist",
    "torus_orbit_count",
    "cylinder_orbit_count",
    "Lemma32Check",
    "lemma32_bound_check",
    "torus_vs_chordal_check",
]


def angdist(x):
    """Principal angular distance in [0, pi]."""
    return np.abs(np.mod(np.asarray(x) + np.pi, 2.0 * np.pi) - np.pi)


@dataclass(frozen=True)
class TorusModel:
    radii: np.ndarray
    axial_step: float
    angles: np.ndarray
    axial_extra_dim: bool = False

    @property
    def dim(self) -> int:
        """Dimension of the flat torus x line actually carrying the orbit."""
        return int(np.count_nonzero(self.radii > 0)) + 1


def build_torus_model(nf: RotationNormalForm, v0, ell: float, R: float) -> TorusModel:
    v0 = np.asarray(v0, dtype=float)
    planes, _fixed, flip = nf.plane_weights(v0 / np.linalg.norm(v0))
    sh = math.sinh(R)
    radii = list(sh * np.sqrt(planes))
    angles = list(nf.angles)
    if nf.flip_dims:
        radii.append(sh * math.sqrt(flip))
        angles.append(math.pi)
    return TorusModel(radii=np.array(radii), axial_step=ell * math.cosh(R),
                      angles=np.array(angles), axial_extra_dim=nf.fixed_dims > 0)


def _torus_dists(tm: TorusModel, ks: np.ndarray) -> np.ndarray:
    sq = (ks * tm.axial_step) ** 2
    for rho, a in zip(tm.radii, tm.angles):
        if rho > 0:
            sq = sq + (rho * angdist(ks * a)) ** 2
    return np.sqrt(sq)


def torus_orbit_count(tm: TorusModel, r: float) -> int:
    """#{k : d_{T x R}(phi^k y, y) <= r}; |k| <= r / tau is exhaustive."""
    if not tm.axial_step > 0:
        raise ValueError("axial step must be positive")
    kmax = int(math.floor(r / tm.axial_step))
    if kmax > MAX_K_BUDGET:
        raise ValueError("r / tau exceeds the sweep budget")
    ks = np.arange(1, kmax + 1, dtype=float)
    return 1 + 2 * int(np.count_nonzero(_torus_dists(tm, ks) <= r))


def cylinder_orbit_count(nf: RotationNormalForm, theta, ell: float, R: float, r: float) -> int:
    """Same count with the intrinsic distance of Z(R) itself (great-circle angle)."""
    tau = ell * math.cosh(R)
    kmax = int(math.floor(r / tau))
    if kmax > MAX_K_BUDGET:
        raise ValueError("r / tau exceeds the sweep budget")
    ks = np.arange(1, kmax + 1, dtype=float)
    planes, _fixed, flip = nf.plane_weights(np.asarray(theta, dtype=float))
    a = np.zeros_like(ks)
    for pj, aj in zip(planes, nf.angles):
        a += pj * np.sin(0.5 * ks * aj) ** 2
    if nf.flip_dims:
        a += flip * (np.mod(ks, 2.0) == 1.0)
    ang = 2.0 * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    d = np.hypot(math.sinh(R) * ang, ks * tau)
    return 1 + 2 * int(np.count_nonzero(d <= r))


class Lemma32Check(NamedTuple):
    count: int
    bound: float
    ratio: float
    inj: float
    cylinder_count: int


def lemma32_bound_check(tube: TubeQuotient, x: HPoint, r: float) -> Lemma32Check:
    """Torus count against (r / inj)^floor((n+1)/2); requires r >= inj(x)."""
    c = point_to_cylinder(x)
    theta = c.theta if c.theta is not None else tube.direction
    inj = inj_at(tube.phi, c.R, c.theta)
    if r < inj * (1 - 1e-12):
        raise ValueError(f"r = {r:g} below inj = {inj:g}")
    nf = tube.phi.normal_form
    tm = build_torus_model(nf, theta, tube.ell, c.R)
    count = torus_orbit_count(tm, r)
    cyl = cylinder_orbit_count(nf, theta, tube.ell, c.R, r)
    bound = (r / inj) ** count_exponent(tube.n)
    return Lemma32Check(count, bound, count / bound, inj, cyl)


def torus_vs_chordal_check(tm: TorusModel, samples: int, rng: np.random.Generator | None = None) -> float:
    """Max ratio of intrinsic torus distance to chordal distance in C^m."""
    radii = tm.radii[tm.radii > 0]
    if radii.size == 0:
        raise ValueError("torus is a point")
    rng = np.random.default_rng(0) if rng is None else rng
    a = rng.uniform(-np.pi, np.pi, size=(samples, radii.size))
    b = rng.uniform(-np.pi, np.pi, size=(samples, radii.size))
    ad = angdist(a - b)
    intrinsic = np.sqrt(np.sum((radii * ad) ** 2, axis=1))
    chordal = np.sqrt(np.sum((2.0 * radii * np.sin(0.5 * ad)) ** 2, axis=1))
    ok = chordal > 0
    return float(np.max(intrinsic[ok] / chordal[ok]))
