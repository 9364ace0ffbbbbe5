"""Integral inequalities and identities on tube segments.

Quadrature is the tensor-product trapezoid rule of the grid times the
analytic volume density sinh^{n-2} r cosh r (the angular volume of S^{n-2}
is a common constant and cancels from every ratio).  The only Monte Carlo
step is the lifted-ball integral of :func:`transfer_check`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .grids import FDGrid
from .hyperbolic import HPoint, point_to_cylinder
from .tube import EmptyThinPart, TubeQuotient, count_exponent, depth, margulis_radius
from .warped import (ScalarField, SupportError, WarpedField, WarpedMetric, background,
                     covariant_laplacian, grad_norm2, inner, nabla_components, norm2,
                     scalar_grad_norm2, scalar_laplacian, sup_norm, trace, twice_L_reduced)

__all__ = [
    "GapConstants",
    "gap_constants",
    "QuadratureGrid",
    "scalar_rayleigh",
    "sullivan_constant",
    "GapCheck",
    "tensor_gap_check",
    "KatoCheck",
    "kato_check",
    "IdentityReport",
    "weighted_identity_check",
    "CutoffReport",
    "cutoff_eta",
    "smoothstep5",
    "weighted_seminorm",
    "hybrid_norm_desk",
    "TransferReport",
    "transfer_check",
    "ConditioningReport",
    "discrete_L_conditioning",
    "quotient_distance",
]


# ---------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class GapConstants:
    n: int
    lambda0: float
    beta: float
    margulis: float = 0.1

    @property
    def m(self) -> int:
        return count_exponent(self.n)


def gap_constants(n: int, mu: float = 0.1) -> GapConstants:
    if n < 4:
        raise ValueError("gap constants need n >= 4")
    lam0 = max(n - 2.0, (n - 1) ** 2 / 4.0 - 2.0)
    m = count_exponent(n)
    lo, hi = m / 2.0, math.sqrt(lam0)
    if not 2.0 * math.sqrt(lam0) > m:
        raise AssertionError(f"2 sqrt(lambda0) <= floor((n+1)/2) at n = {n}")
    return GapConstants(n, lam0, 0.5 * (lo + hi), mu)


def sullivan_constant(n: int) -> float:
    return (n - 1) ** 2 / 4.0


@dataclass
class QuadratureGrid:
    """A grid together with the volume weights of dimension n."""

    grid: object
    n: int

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights * self.grid.volume_density(self.n)

    def integrate(self, f):
        return self.grid.integrate(f, self.n)


def _hyp(grid, n):
    return background(WarpedMetric.hyperbolic(grid, n))


def _support_ok(u: np.ndarray, layers: int = 2) -> bool:
    return bool(np.all(u[..., :layers, :] == 0) and np.all(u[..., -layers:, :] == 0))


# ---------------------------------------------------------------------------
# scalar and tensor gaps


def scalar_rayleigh(u: ScalarField, n: int) -> float:
    """(int |grad u|^2) / (int u^2) for a compactly supported u."""
    a = np.asarray(u.u)
    if not np.any(a != 0):
        raise ValueError("Rayleigh quotient of the zero function")
    if not _support_ok(a):
        raise SupportError("u must vanish on the two outermost radial layers")
    bg = _hyp(u.grid, n)
    num = u.grid.integrate(np.real(scalar_grad_norm2(bg, a)), n)
    return float(num / u.grid.integrate(a * a, n))


class GapCheck(NamedTuple):
    lhs: float
    rhs: float
    l2: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def _nonzero_supported(h: WarpedField):
    if not np.any(h.stack() != 0):
        raise ValueError("field is identically zero")
    if not h.support_ok():
        raise SupportError("field must vanish on the two outermost radial layers")


def tensor_gap_check(h: WarpedField, lam: float | None = None) -> GapCheck:
    """lhs = lam int|h|^2 with lam = (n-1)^2/4 - 2 by default;
    rhs = int|grad h|^2 - 2 int|h|^2 + 2 int (tr h)^2 = 2 int <L h, h>."""
    _nonzero_supported(h)
    n, grid = h.n, h.grid
    lam = sullivan_constant(n) - 2.0 if lam is None else lam
    bg = _hyp(grid, n)
    s = h.coord()
    l2 = grid.integrate(norm2(bg, s), n)
    rhs = grid.integrate(grad_norm2(bg, s), n) - 2.0 * l2 + 2.0 * grid.integrate(trace(bg, s) ** 2, n)
    return GapCheck(float(lam * l2), float(rhs), float(l2))


class KatoCheck(NamedTuple):
    lhs: float
    rhs: float
    skipped: int


def kato_check(h: WarpedField, floor: float = 1e-8) -> KatoCheck:
    """int |grad |h||^2 against int |grad h|^2.

    Nodes inside the support where |h| < floor * max|h| sit on the kink of |h|
    and are skipped; their number is reported.
    """
    _nonzero_supported(h)
    n, grid = h.n, h.grid
    bg = _hyp(grid, n)
    s = h.coord()
    a = np.sqrt(np.maximum(norm2(bg, s), 0.0))
    g_abs = scalar_grad_norm2(bg, a)
    in_supp = np.any(h.stack() != 0, axis=-3)
    kink = in_supp & (a < floor * np.max(a))
    g_abs = np.where(kink, 0.0, g_abs)
    lhs = grid.integrate(g_abs, n)
    rhs = grid.integrate(grad_norm2(bg, s), n)
    return KatoCheck(float(lhs), float(rhs), int(np.count_nonzero(kink)))


# ---------------------------------------------------------------------------
# weighted identity


@dataclass
class IdentityReport:
    lhs: float
    rhs: float
    residual: float
    div_pointwise: float
    div_integral: float


def weighted_identity_check(h: WarpedField, phi: ScalarField) -> IdentityReport:
    """2 int <L(phi h), phi h> against 2 int phi^2 <L h, h> + int |d phi|^2 |h|^2.

    Also evaluates V = phi |h|^2 grad phi and compares its divergence with
    |d phi|^2 |h|^2 + phi <d phi, d|h|^2> - phi (nabla^* nabla phi) |h|^2;
    the middle term is 2 phi <nabla_{grad phi} h, h>.
    """
    n, grid = h.n, h.grid
    f = np.asarray(phi.u)
    ph = h * f
    if not ph.support_ok():
        raise SupportError("phi h must vanish on the two outermost radial layers")
    m = WarpedMetric.hyperbolic(grid, n)
    bg = background(m)
    hc = h.coord()
    lhs = grid.integrate(inner(bg, twice_L_reduced(ph, m).coord(), ph.coord()), n)
    h2 = norm2(bg, hc)
    dphi2 = scalar_grad_norm2(bg, f)
    rhs = grid.integrate(f * f * inner(bg, twice_L_reduced(h, m).coord(), hc), n) \
        + grid.integrate(dphi2 * h2, n)
    lhs, rhs = float(lhs), float(rhs)
    res = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)

    # divergence identity, pointwise and integrated
    df = [bg.d_(f, 0), bg.d_(f, 1)]
    V = bg.raise_([f * h2 * df[0], f * h2 * df[1]])
    vol = bg.sqrt_det() * bg.B ** (bg.d / 2.0)
    div = (bg.d_(vol * V[0], 0) + bg.d_(vol * V[1], 1)) / vol
    dh2 = [bg.d_(h2, 0), bg.d_(h2, 1)]
    pt = dphi2 * h2 + f * bg.pair(df, dh2) - f * scalar_laplacian(bg, f) * h2
    # compare on nodes where both one-sided stencils stay inside the support
    scale = float(np.max(np.abs(div))) or 1.0
    div_pt = float(np.max(np.abs(div - pt)[..., 2:-2, :])) / scale
    div_int = abs(float(grid.integrate(div, n))) / max(float(grid.integrate(np.abs(div), n)), 1e-300)
    return IdentityReport(lhs, rhs, res, div_pt, div_int)


# ---------------------------------------------------------------------------
# cut-off and weighted norms


def smoothstep5(x):
    """Quintic smoothstep: 0 for x <= 0, 1 for x >= 1, C^2 at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x)


@dataclass
class CutoffReport:
    eta: ScalarField
    r_quarter: float
    r_half: float
    r_mu: float
    c0: float
    c1: float
    c2: float
    grid_c1: float = 0.0
    grid_c2: float = 0.0

    @property
    def c2_norm(self) -> float:
        return max(self.c0, self.c1, self.c2)

    def __call__(self, r):
        return 1.0 - smoothstep5((np.asarray(r) - self.r_quarter) / (self.r_half - self.r_quarter))


def cutoff_eta(tube: TubeQuotient, dr: float = 1.0 / 64, theta=None) -> CutoffReport:
    """eta = 1 where inj <= mu/4, 0 where inj >= mu/2, quintic in between.

    The radii are taken along ``theta`` (default: the tube direction).
    """
    mu = tube.mu
    if tube.ell / 2 >= mu / 4:
        raise EmptyThinPart("no point with inj <= mu/4")
    r1 = margulis_radius(tube, theta, level=mu / 4)
    r2 = margulis_radius(tube, theta, level=mu / 2)
    r_mu = margulis_radius(tube, theta)
    if r2 - r1 < 4 * dr:
        raise ValueError(f"radius window {r2 - r1:.3g} narrower than 4 dr; refine the grid")
    grid = FDGrid(dr, max(r_mu, r2 + 8 * dr), dr)
    w = r2 - r1
    # sup |s'| = 15/8 and sup |s''| = 10/sqrt(3) for the quintic smoothstep
    rep = CutoffReport(None, r1, r2, r_mu, 1.0, 15.0 / (8.0 * w), 10.0 / (math.sqrt(3.0) * w * w))
    eta = rep(grid.rr) * np.ones(grid.shape)
    rep.eta = ScalarField(grid, eta)
    d1 = grid.dr(eta)
    rep.grid_c1 = float(np.max(np.abs(d1)))
    rep.grid_c2 = float(np.max(np.abs(grid.dr(d1))))
    return rep


def _cosh_dist(Rx, thx, tx, Ry, thy, ty, ell, nf, ks):
    """cosh d(x, phi^k y) for arrays of y (shape S) and shifts ks (shape S + (K,)
    or (K,)).  The rotation power acts through the normal form of phi."""
    Ry = np.asarray(Ry)[..., None]
    ty = np.asarray(ty)[..., None]
    ks = np.asarray(ks, dtype=float)
    val = math.cosh(Rx) * np.cosh(Ry) * np.cosh(ty + ks * ell - tx)
    if Rx > 0:
        qa = np.asarray(thx) @ nf.q
        qb = (np.asarray(thy) @ nf.q)[..., None, :]
        acc = 0.0
        for j, th in enumerate(nf.angles):
            a1, a2 = qa[2 * j], qa[2 * j + 1]
            b1, b2 = qb[..., 2 * j], qb[..., 2 * j + 1]
            acc = acc + np.cos(ks * th) * (a1 * b1 + a2 * b2) + np.sin(ks * th) * (a2 * b1 - a1 * b2)
        k0, k1 = 2 * nf.m, 2 * nf.m + nf.fixed_dims
        acc = acc + np.sum(qa[k0:k1] * qb[..., k0:k1], axis=-1)
        flip = np.sum(qa[k1:] * qb[..., k1:], axis=-1)
        acc = acc + np.where(np.mod(ks, 2.0) == 1.0, -flip, flip)
        val = val - math.sinh(Rx) * np.sinh(Ry) * acc
    return np.maximum(val, 1.0)


def quotient_distance(tube: TubeQuotient, x: HPoint, R, theta, t, reach: float = 50.0):
    """min_k d(x, phi^k y) for y = (R, theta, t) given as broadcastable arrays.

    Since d(x, phi^k y) >= |t + k ell - t_x| and the nearest translate lies
    within R_x + R + ell of x, only a bounded window of k around the nearest
    axial translate is searched.
    """
    cx = point_to_cylinder(x)
    thx = cx.theta if cx.theta is not None else np.eye(tube.n - 1)[0]
    ell, nf = tube.ell, tube.phi.normal_form
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(R.shape, t.shape, np.shape(theta)[:-1])
    R = np.broadcast_to(R, shape)
    t = np.broadcast_to(t, shape)
    k_near = np.round((cx.t - t) / ell)
    bound = float(np.max(cx.R + R)) + ell
    K = int(math.ceil(min(bound, reach) / ell)) + 1
    best = np.full(shape, np.inf)
    for k0 in range(-K, K + 1, 4096):
        off = np.arange(k0, min(K, k0 + 4095) + 1, dtype=float)
        cd = _cosh_dist(cx.R, thx, cx.t, R, theta, t, ell, nf, k_near[..., None] + off)
        best = np.minimum(best, np.min(cd, axis=-1))
    return np.arccosh(best)


def _sphere_dirs(d: int, count: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal((count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _weight(tube: TubeQuotient, x: HPoint, grid, beta: float, dirs: int, seed: int):
    """Angular mean of exp(-2 beta r_x) on the (r, t) nodes."""
    cx = point_to_cylinder(x)
    d = tube.n - 1
    R = grid.rr * np.ones(grid.shape)
    t = np.ones((grid.r.size, 1)) * grid.t[None, :]
    if cx.theta is None:
        # from the axis the distance ignores the direction of y
        return np.exp(-2.0 * beta * quotient_distance(tube, x, R, tube.direction, t))
    ths = _sphere_dirs(d, dirs, seed)
    acc = np.zeros(grid.shape)
    for th in ths:
        acc += np.exp(-2.0 * beta * quotient_distance(tube, x, R, th, t))
    return acc / dirs


def weighted_seminorm(h: WarpedField, tube: TubeQuotient, x: HPoint, beta: float,
                      order: int = 0, dirs: int = 16, seed: int = 0) -> float:
    """(int e^{-2 beta r_x} (|h|^2 [+ |nabla h|^2 + |nabla^* nabla h|^2]))^{1/2}."""
    if order not in (0, 2):
        raise ValueError("order must be 0 or 2")
    grid, n = h.grid, h.n
    if not np.any(h.stack() != 0):
        return 0.0
    w = _weight(tube, x, grid, beta, dirs, seed)
    m = WarpedMetric.hyperbolic(grid, n)
    bg = background(m)
    s = h.coord()
    dens = np.real(norm2(bg, s))
    if order == 2:
        lap = covariant_laplacian(h, m)
        dens = dens + np.real(grad_norm2(bg, s)) + np.real(norm2(bg, lap.coord()))
    return float(math.sqrt(max(grid.integrate(w * dens, n), 0.0)))


def _global_norm(h: WarpedField, kind: int) -> float:
    grid, n = h.grid, h.n
    m = WarpedMetric.hyperbolic(grid, n)
    bg = background(m)
    s = h.coord()
    dens = np.real(norm2(bg, s))
    if kind == 2:
        dens = dens + np.real(grad_norm2(bg, s)) + np.real(norm2(bg, covariant_laplacian(h, m).coord()))
    return float(math.sqrt(max(grid.integrate(dens, n), 0.0)))


def hybrid_norm_desk(h: WarpedField, tube: TubeQuotient, basepoints: Sequence[HPoint],
                     kind: int = 0, beta: float | None = None, eta: Callable | None = None,
                     dirs: int = 16, seed: int = 0) -> float:
    """max(sup|h|, ||h||_{L^2 or H^2}, max_x e^{m depth(x)/2} ||eta h||_{x,beta})."""
    if kind not in (0, 2):
        raise ValueError("kind must be 0 or 2")
    if not tube.thin_empty and len(basepoints) == 0:
        raise ValueError("nonempty thin part needs at least one basepoint")
    beta = gap_constants(tube.n, tube.mu).beta if beta is None else beta
    if eta is None:
        try:
            eta = cutoff_eta(tube)
        except (EmptyThinPart, ValueError):
            eta = None
    val = max(sup_norm(h), _global_norm(h, kind))
    if eta is None:
        return val
    eh = h * (eta(h.grid.rr) * np.ones(h.grid.shape))
    m = count_exponent(tube.n)
    for x in basepoints:
        pre = math.exp(0.5 * m * depth(tube, x, level=tube.mu / 4))
        val = max(val, pre * weighted_seminorm(eh, tube, x, beta, kind, dirs, seed))
    return val


# ---------------------------------------------------------------------------
# transfer of local L^2 norms


@dataclass
class TransferReport:
    lhs: float
    rhs: float
    volume: float
    max_sheets: int
    max_omega: int
    samples: int

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def _ball_volume(n: int, rad: float) -> float:
    from scipy.integrate import quad

    sphere = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    return sphere * quad(lambda s: math.sinh(s) ** (n - 1), 0.0, rad)[0]


def _sample_ball(x: np.ndarray, n: int, rad: float, count: int, rng: np.random.Generator):
    """Stratified uniform samples of the hyperbolic ball B(x, rad) (Minkowski coords)."""
    tab = np.linspace(0.0, rad, 4097)
    dens = np.sinh(tab) ** (n - 1)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(tab))])
    cdf /= cdf[-1]
    u = (np.arange(count) + rng.random(count)) / count
    rho = np.interp(u, cdf, tab)
    v = rng.standard_normal((count, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    # boost taking e0 to x
    x0, xv = x[0], x[1:]
    L = np.empty((n + 1, n + 1))
    L[0, 0], L[0, 1:], L[1:, 0] = x0, xv, xv
    L[1:, 1:] = np.eye(n) + np.outer(xv, xv) / (1.0 + x0)
    y0 = np.concatenate([np.cosh(rho)[:, None], np.sinh(rho)[:, None] * v], axis=1)
    return y0 @ L.T


def _cyl_arrays(y: np.ndarray):
    normal = y[:, 2:]
    s = np.linalg.norm(normal, axis=1)
    R = np.arcsinh(s)
    t = np.arcsinh(y[:, 1] / np.cosh(R))
    th = np.where(s[:, None] > 0, normal / np.where(s > 0, s, 1.0)[:, None], 0.0)
    return R, th, t


def _orbit_counts(tube: TubeQuotient, R, th, r: float, chunk: int = 1 << 20):
    """#{k : d(phi^k y, y) <= r} for many y at once."""
    phi = tube.phi
    nf = phi.normal_form
    K = int(math.floor(r / phi.ell))
    planes, _fixed, flip = nf.plane_weights(th)
    thr = math.sinh(0.5 * r) ** 2
    sh2 = np.sinh(R) ** 2
    hits = np.zeros(R.shape, dtype=np.int64)
    step = max(1, chunk // max(R.size, 1))
    for k0 in range(1, K + 1, step):
        ks = np.arange(k0, min(K, k0 + step - 1) + 1, dtype=float)
        s = (1.0 + sh2)[:, None] * np.sinh(0.5 * phi.ell * ks) ** 2
        rot = np.zeros((R.size, ks.size))
        for j, a in enumerate(nf.angles):
            rot += planes[:, j, None] * np.sin(0.5 * ks * a) ** 2
        rot += flip[:, None] * (np.mod(ks, 2.0) == 1.0)
        s = s + sh2[:, None] * rot
        hits += np.count_nonzero(s <= thr, axis=1)
    return 1 + 2 * hits


def _sheets(tube: TubeQuotient, x: HPoint, R, th, t, rad: float, chunk: int = 1 << 20):
    """#{k : d(phi^k y, x) < rad}: preimages of pi(y) inside the lifted ball."""
    cx = point_to_cylinder(x)
    thx = cx.theta if cx.theta is not None else tube.direction
    ell = tube.ell
    K = int(math.ceil(2.0 * rad / ell)) + 1
    thr = math.cosh(rad)
    cnt = np.zeros(R.shape, dtype=np.int64)
    step = max(1, chunk // max(R.size, 1))
    for k0 in range(-K, K + 1, step):
        ks = np.arange(k0, min(K, k0 + step - 1) + 1, dtype=float)
        cd = _cosh_dist(cx.R, thx, cx.t, R, th, t, ell, tube.phi.normal_form, ks)
        cnt += np.count_nonzero(cd < thr, axis=1)
    return cnt


def transfer_check(tube: TubeQuotient, x: HPoint, u, samples: int = 20000, seed: int = 0,
                   rad: float = 0.5) -> TransferReport:
    """Monte Carlo for int_{B(x~, 1/2)} u~  <=  int_{B(x, 1/2)} omega u.

    ``u`` is a nonnegative function of the cylinder coordinates, either a
    callable ``u(R, t)`` or a :class:`ScalarField` (interpolated in r and t).
    The quotient integral is written over the lifted ball with each point
    weighted by 1 / #(preimages in the ball), and omega(y) counts orbit points
    within distance 1 of y.
    """
    n = tube.n
    f = _as_function(u)
    rng = np.random.default_rng(seed)
    y = _sample_ball(x.coords, n, rad, samples, rng)
    R, th, t = _cyl_arrays(y)
    vals = f(R, t)
    if np.any(vals < 0):
        raise ValueError("u must be nonnegative")
    omega = _orbit_counts(tube, R, th, 2.0 * rad)
    sheets = _sheets(tube, x, R, th, t, rad)
    vol = _ball_volume(n, rad)
    lhs = vol * float(np.mean(vals))
    rhs = vol * float(np.mean(omega * vals / sheets))
    return TransferReport(lhs, rhs, vol, int(sheets.max()), int(omega.max()), samples)


def _as_function(u):
    if callable(u):
        return lambda R, t: np.asarray(u(R, t), dtype=float)
    grid = u.grid
    a = np.asarray(u.u)
    if a.shape[-1] == 1:
        return lambda R, t: np.interp(R, grid.r, a[:, 0], left=a[0, 0], right=a[-1, 0])
    from scipy.interpolate import RegularGridInterpolator

    tt = np.concatenate([grid.t, [grid.Lt]])
    aa = np.concatenate([a, a[:, :1]], axis=1)
    itp = RegularGridInterpolator((grid.r, tt), aa, bounds_error=False, fill_value=None)
    return lambda R, t: itp(np.stack([np.clip(R, grid.r[0], grid.r[-1]),
                                      np.mod(t, grid.Lt)], axis=-1))


# ---------------------------------------------------------------------------
# conditioning of the discrete linearised operator


@dataclass
class ConditioningReport:
    n: int
    dr: float
    min_eig: float
    per_mode: dict
    lambda0: float
    iterations: int

    @property
    def bound(self) -> float:
        return self.lambda0 * (1.0 - 10.0 * self.dr)


def _form_matrices(grid: FDGrid, n: int):
    """Hermitian forms Q (of 2L) and M (of the L^2 product) on interior unknowns."""
    nr = grid.r.size
    inner = np.arange(1, nr - 1)
    m = 4 * inner.size
    E = np.zeros((m, 4, nr, 1))
    for c in range(4):
        E[c * inner.size + np.arange(inner.size), c, inner, 0] = 1.0
    dtype = complex if grid.wavenumber else float
    h = WarpedField(grid, n, E[:, 0].astype(dtype), E[:, 1].astype(dtype),
                    E[:, 2].astype(dtype), E[:, 3].astype(dtype))
    bg = _hyp(grid, n)
    s = h.coord()
    DH, dsig, v = nabla_components(bg, s)
    gi = [bg.ginv[0][0], bg.ginv[1][1]]
    sq = [np.sqrt(gi[0]), np.sqrt(gi[1])]
    d = bg.d
    Z = []
    for i in range(2):
        for j in range(2):
            for k in range(2):
                Z.append(DH[i][j][k] * sq[i] * sq[j] * sq[k])
    for a in range(2):
        Z.append(math.sqrt(d) * dsig[a] * sq[a])
        Z.append(math.sqrt(2 * d) * v[a] * sq[a] / bg.B)
    H = [[s.rr, s.rt], [s.rt, s.tt]]
    sigma = s.ss / bg.B
    Y = [H[i][j] * sq[i] * sq[j] for i in range(2) for j in range(2)] + [math.sqrt(d) * sigma]
    T = trace(bg, s)
    w = (grid.weights * grid.volume_density(n))[None]
    wf = w.reshape(1, -1)

    def gram(parts):
        acc = np.zeros((m, m), dtype=dtype)
        for P in parts:
            A = np.broadcast_to(P, (m,) + grid.shape).reshape(m, -1)
            acc = acc + (np.conj(A) * wf) @ A.T
        return acc

    Mm = gram(Y)
    Q = gram(Z) - 2.0 * Mm + 2.0 * gram([T])
    return 0.5 * (Q + Q.conj().T), 0.5 * (Mm + Mm.conj().T)


def _inverse_iteration(Q, M, tol: float = 1e-13, max_iter: int = 10_000):
    """Smallest eigenvalue of Q v = lam M v (Q, M Hermitian, M > 0)."""
    lu = scipy.linalg.lu_factor(Q)
    v = np.ones(Q.shape[0], dtype=Q.dtype)
    v /= math.sqrt(abs(np.vdot(v, M @ v)))
    lam = np.inf
    for it in range(1, max_iter + 1):
        w = scipy.linalg.lu_solve(lu, M @ v)
        w /= math.sqrt(abs(np.vdot(w, M @ w)))
        new = float(np.real(np.vdot(w, Q @ w)))
        v = w
        if abs(new - lam) <= tol * abs(new):
            return new, it
        lam = new
    raise RuntimeError(f"inverse iteration did not converge in {max_iter} steps")


def discrete_L_conditioning(n: int, r0: float = 0.5, r1: float = 2.5, dr: float = 1.0 / 16,
                            Lt: float = 1.0, modes: Sequence[int] = (0, 1)) -> ConditioningReport:
    """Smallest eigenvalue of the discrete form of 2L with Dirichlet data on [r0, r1].

    Each axial Fourier mode e^{2 pi i k t / Lt} decouples; the minimum over the
    listed modes is reported.
    """
    lam0 = gap_constants(n).lambda0
    per, iters = {}, 0
    for k in modes:
        grid = FDGrid(r0, r1, dr, Lt=Lt, wavenumber=int(k) if k else None) if k else FDGrid(r0, r1, dr)
        if not k:
            grid.weights = grid.weights * Lt
        Q, M = _form_matrices(grid, n)
        lam, it = _inverse_iteration(Q, M)
        per[int(k)] = lam
        iters += it
    return ConditioningReport(n, dr, min(per.values()), per, lam0, iters)
