r"""Rotation-invariant symmetric 2-tensors on tube segments.

The model metric is the Fermi form of H^n about a geodesic,

    g_hyp = dr^2 + sinh^2 r * ghat + cosh^2 r * dt^2,

with ghat the round metric of S^{n-2}.  Every metric and tensor here has the
shape  A dr^2 + 2E dr dt + D dt^2 + s * ghat  with coefficients depending on
(r, t) only, i.e. it is a warped product of a 2-d base (r, t) with the round
sphere of dimension d = n - 2.  Angular derivatives contract analytically
through ghat, so all operators reduce to (r, t) arrays.  Stored fields use
components normalised by the hyperbolic scales:

    h = p dr^2 + q sinh^2 r ghat + w cosh^2 r dt^2 + c (dr dt + dt dr).

Warped-product identities used (B = s of the background, phi = sqrt(B)):

* Christoffels: base ones; Gamma^a_{al be} = -1/2 grad^a B ghat;
  Gamma^al_{a be} = dB_a / (2B) delta.
* Ric_ab = K gamma_ab - (d / phi) Hess(phi)_ab,
  Ric_fibre = (d - 1) - phi Lap(phi) - (d - 1) |d phi|^2   (times ghat).
* For h with base part H and fibre part s = sigma B, the only nonzero blocks
  of nabla h are  D_c H_ab,  (nabla_c h)_{al be} = B d_c sigma ghat  and
  (nabla_al h)_{a be} = v_a ghat  with  v = 1/2 (H - sigma gamma)(grad B).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Sym2",
    "WarpedField",
    "WarpedMetric",
    "ScalarField",
    "Background",
    "background",
    "warped_ricci",
    "weitzenboeck_pointwise",
    "weitzenboeck_general",
    "covariant_laplacian",
    "lichnerowicz",
    "linearized_einstein",
    "twice_L_reduced",
    "bianchi",
    "lie_derivative_metric",
    "einstein_operator",
    "inner",
    "norm2",
    "trace",
    "grad_norm2",
    "nabla_components",
    "scalar_grad_norm2",
    "scalar_laplacian",
    "sup_norm",
    "SupportError",
]

_IDX = ("r", "t")


class SupportError(ValueError):
    """A field required to be compactly supported touches the grid boundary."""


@dataclass
class Sym2:
    """Coordinate components of a rotation-invariant symmetric 2-tensor."""

    rr: np.ndarray
    rt: np.ndarray
    tt: np.ndarray
    ss: np.ndarray

    def base(self, a: int, b: int) -> np.ndarray:
        if a == 0 and b == 0:
            return self.rr
        if a == 1 and b == 1:
            return self.tt
        return self.rt

    def __add__(self, o: "Sym2") -> "Sym2":
        return Sym2(self.rr + o.rr, self.rt + o.rt, self.tt + o.tt, self.ss + o.ss)

    def __sub__(self, o: "Sym2") -> "Sym2":
        return Sym2(self.rr - o.rr, self.rt - o.rt, self.tt - o.tt, self.ss - o.ss)

    def scale(self, f) -> "Sym2":
        return Sym2(f * self.rr, f * self.rt, f * self.tt, f * self.ss)

    @classmethod
    def from_base(cls, m, ss) -> "Sym2":
        return cls(m[0][0], m[0][1], m[1][1], ss)


@dataclass
class WarpedField:
    """h = p dr^2 + q sinh^2 r ghat + w cosh^2 r dt^2 + c (dr dt + dt dr)."""

    grid: object
    n: int
    p: np.ndarray
    q: np.ndarray
    w: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        shape = np.broadcast_shapes(*(np.shape(a) for a in (self.p, self.q, self.w, self.c)),
                                    self.grid.shape)
        for name in ("p", "q", "w", "c"):
            setattr(self, name, np.broadcast_to(getattr(self, name), shape).copy())

    @classmethod
    def zeros(cls, grid, n: int) -> "WarpedField":
        z = grid.zeros()
        return cls(grid, n, z, z, z, z)

    @classmethod
    def metric_multiple(cls, grid, n: int, f) -> "WarpedField":
        """f * g_hyp."""
        f = np.broadcast_to(f, grid.shape)
        return cls(grid, n, f, f, f, np.zeros(grid.shape))

    def coord(self) -> Sym2:
        r = self.grid.rr
        return Sym2(self.p, self.c, self.w * np.cosh(r) ** 2, self.q * np.sinh(r) ** 2)

    @classmethod
    def from_coord(cls, grid, n: int, s: Sym2) -> "WarpedField":
        r = grid.rr
        return cls(grid, n, s.rr, s.ss / np.sinh(r) ** 2, s.tt / np.cosh(r) ** 2, s.rt)

    def _new(self, p, q, w, c) -> "WarpedField":
        return type(self)(self.grid, self.n, p, q, w, c)

    def __add__(self, o):
        return self._new(self.p + o.p, self.q + o.q, self.w + o.w, self.c + o.c)

    def __sub__(self, o):
        return self._new(self.p - o.p, self.q - o.q, self.w - o.w, self.c - o.c)

    def __mul__(self, f):
        return self._new(f * self.p, f * self.q, f * self.w, f * self.c)

    __rmul__ = __mul__

    def stack(self) -> np.ndarray:
        return np.stack([self.p, self.q, self.w, self.c], axis=-3)

    def trace_hyp(self) -> np.ndarray:
        """tr with respect to g_hyp: p + (n-2) q + w."""
        return self.p + (self.n - 2) * self.q + self.w

    def support_ok(self, layers: int = 2, axis: str = "r") -> bool:
        a = self.stack()
        edge = np.concatenate([a[..., :layers, :], a[..., -layers:, :]], axis=-2)
        return bool(np.all(edge == 0))


class WarpedMetric(WarpedField):
    """A metric in the warped class (same storage as a field)."""

    @classmethod
    def hyperbolic(cls, grid, n: int) -> "WarpedMetric":
        one = np.ones(grid.shape)
        return cls(grid, n, one, one, one, np.zeros(grid.shape))

    @classmethod
    def from_warps(cls, grid, n: int, a, b) -> "WarpedMetric":
        """dr^2 + a^2 ghat + b^2 dt^2."""
        r = grid.rr
        a = np.broadcast_to(a, grid.shape)
        b = np.broadcast_to(b, grid.shape)
        if np.any(np.real(a) <= 0) or np.any(np.real(b) <= 0):
            raise ValueError("warping functions must be positive")
        return cls(grid, n, np.ones(grid.shape), a ** 2 / np.sinh(r) ** 2,
                   b ** 2 / np.cosh(r) ** 2, np.zeros(grid.shape))

    def is_hyperbolic(self) -> bool:
        return bool(np.all(self.p == 1) and np.all(self.q == 1) and np.all(self.w == 1)
                    and np.all(self.c == 0))

    def check_positive(self):
        s = self.coord()
        det = np.real(s.rr * s.tt - s.rt ** 2)
        bad = (np.real(s.rr) <= 0) | (det <= 0) | (np.real(s.ss) <= 0)
        if np.any(bad):
            idx = np.argwhere(bad)[0]
            raise ValueError(f"metric not positive definite at grid index {tuple(idx)}")


@dataclass
class ScalarField:
    grid: object
    u: np.ndarray


# ---------------------------------------------------------------------------
# background geometry


@dataclass
class Background:
    """Base metric gamma, its inverse and Christoffels, and fibre factor B."""

    grid: object
    n: int
    g: list          # g[a][b]
    ginv: list       # ginv[a][b]
    gamma: list      # gamma[a][b][c] = Gamma^a_bc
    B: np.ndarray
    dB: list         # dB[a]

    @property
    def d(self) -> int:
        return self.n - 2

    def d_(self, f, a: int):
        return self.grid.dr(f) if a == 0 else self.grid.dt(f)

    def raise_(self, w):
        return [self.ginv[a][0] * w[0] + self.ginv[a][1] * w[1] for a in range(2)]

    def pair(self, u, v):
        """gamma^{ab} u_a v_b for covectors."""
        return sum(self.ginv[a][b] * u[a] * v[b] for a in range(2) for b in range(2))

    @property
    def gradB(self):
        return self.raise_(self.dB)

    def sqrt_det(self):
        return np.sqrt(self.g[0][0] * self.g[1][1] - self.g[0][1] ** 2)


def _christoffel(grid, g, ginv):
    dg = [[[grid.dr(g[a][b]) if c == 0 else grid.dt(g[a][b]) for c in range(2)]
           for b in range(2)] for a in range(2)]
    gam = [[[None] * 2 for _ in range(2)] for _ in range(2)]
    for a in range(2):
        for b in range(2):
            for c in range(b, 2):
                val = 0.0
                for e in range(2):
                    val = val + 0.5 * ginv[a][e] * (dg[e][b][c] + dg[e][c][b] - dg[b][c][e])
                gam[a][b][c] = gam[a][c][b] = val
    return gam


def background(metric: WarpedMetric) -> Background:
    """Background data; closed forms for the hyperbolic metric."""
    grid, n = metric.grid, metric.n
    r = grid.rr
    if isinstance(metric, WarpedMetric) and metric.is_hyperbolic():
        z = np.zeros(grid.shape)
        one = np.ones(grid.shape)
        ch, sh = np.cosh(r) * one, np.sinh(r) * one
        g = [[one, z], [z, ch ** 2]]
        ginv = [[one, z], [z, 1.0 / ch ** 2]]
        th = sh / ch
        gam = [[[z, z], [z, -sh * ch]], [[z, th], [th, z]]]
        return Background(grid, n, g, ginv, gam, sh ** 2, [2.0 * sh * ch, z])
    s = metric.coord()
    g = [[s.rr, s.rt], [s.rt, s.tt]]
    det = s.rr * s.tt - s.rt ** 2
    ginv = [[s.tt / det, -s.rt / det], [-s.rt / det, s.rr / det]]
    gam = _christoffel(grid, g, ginv)
    return Background(grid, n, g, ginv, gam, s.ss, [grid.dr(s.ss), grid.dt(s.ss)])


# ---------------------------------------------------------------------------
# curvature


def _gauss_curvature(bg: Background):
    G = bg.gamma
    # R^a_{bcd} = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
    def riem(a, b, c, d):
        val = bg.d_(G[a][d][b], c) - bg.d_(G[a][c][b], d)
        for e in range(2):
            val = val + G[a][c][e] * G[e][d][b] - G[a][d][e] * G[e][c][b]
        return val

    r_rtrt = bg.g[0][0] * riem(0, 1, 0, 1) + bg.g[0][1] * riem(1, 1, 0, 1)
    det = bg.g[0][0] * bg.g[1][1] - bg.g[0][1] ** 2
    return r_rtrt / det


def _hessian(bg: Background, f):
    df = [bg.d_(f, 0), bg.d_(f, 1)]
    H = [[None, None], [None, None]]
    for a in range(2):
        for b in range(a, 2):
            val = bg.d_(df[b], a)
            for c in range(2):
                val = val - bg.gamma[c][a][b] * df[c]
            H[a][b] = H[b][a] = val
    return H, df


def warped_ricci_coord(metric: WarpedMetric) -> Sym2:
    bg = background(metric)
    d = bg.d
    K = _gauss_curvature(bg)
    phi = np.sqrt(bg.B)
    H, dphi = _hessian(bg, phi)
    base = [[K * bg.g[a][b] - (d / phi) * H[a][b] for b in range(2)] for a in range(2)]
    lap = sum(bg.ginv[a][b] * H[a][b] for a in range(2) for b in range(2))
    fib = (d - 1) - phi * lap - (d - 1) * bg.pair(dphi, dphi)
    return Sym2.from_base(base, fib)


def warped_ricci(metric: WarpedMetric) -> WarpedField:
    if len(metric.grid.r) < 8:
        raise ValueError("grid too coarse: fewer than 8 radial nodes")
    return WarpedField.from_coord(metric.grid, metric.n, warped_ricci_coord(metric))


# ---------------------------------------------------------------------------
# pointwise algebra at sectional curvature -1


def weitzenboeck_pointwise(h: np.ndarray, n: int) -> np.ndarray:
    """Curvature term of the Lichnerowicz Laplacian at sec = -1 (orthonormal frame).

    Constant-curvature closed form: Ric(h) = -2 (n h - tr(h) g).
    """
    h = np.asarray(h)
    tr = np.trace(h, axis1=-2, axis2=-1)[..., None, None]
    return -2.0 * (n * h - tr * np.eye(n))


def weitzenboeck_general(h: np.ndarray, n: int) -> np.ndarray:
    """Same operator from the general formula
    Ric(h)(x,y) = h(Ric x, y) + h(x, Ric y) - 2 sum_i h(e_i, R(e_i, x) y),
    with R(x,y)z = -(<y,z> x - <x,z> y) assembled as a full 4-tensor."""
    h = np.asarray(h)
    I = np.eye(n)
    # Rt[i,x,y,m] = m-th component of R(e_i, e_x) e_y
    Rt = -(np.einsum("xy,im->ixym", I, I) - np.einsum("iy,xm->ixym", I, I))
    ric = np.einsum("ixyi->xy", Rt)
    term = np.einsum("...ma,mb->...ab", h, ric) + np.einsum("...am,mb->...ab", h, ric.T)
    curv = np.einsum("...im,ixym->...xy", h, Rt)
    return term - 2.0 * curv


# ---------------------------------------------------------------------------
# tensor calculus in the class


def _parts(bg: Background, h: Sym2):
    H = [[h.rr, h.rt], [h.rt, h.tt]]
    sigma = h.ss / bg.B
    return H, sigma


def _D_tensor(bg: Background, H):
    """(D_c H)_ab for a symmetric base 2-tensor: DH[c][a][b]."""
    G = bg.gamma
    out = [[[None] * 2 for _ in range(2)] for _ in range(2)]
    for c in range(2):
        for a in range(2):
            for b in range(a, 2):
                val = bg.d_(H[a][b], c)
                for e in range(2):
                    val = val - G[e][c][a] * H[e][b] - G[e][c][b] * H[a][e]
                out[c][a][b] = out[c][b][a] = val
    return out


def nabla_components(bg: Background, h: Sym2):
    """(DH, dsigma, v): the three independent blocks of nabla h."""
    H, sigma = _parts(bg, h)
    DH = _D_tensor(bg, H)
    dsig = [bg.d_(sigma, 0), bg.d_(sigma, 1)]
    gB = bg.gradB
    v = [0.5 * sum((H[a][e] - sigma * bg.g[a][e]) * gB[e] for e in range(2)) for a in range(2)]
    return DH, dsig, v


def _base_inner2(bg, X, Y):
    gi = bg.ginv
    return sum(gi[a][c] * gi[b][e] * X[a][b] * Y[c][e]
               for a in range(2) for b in range(2) for c in range(2) for e in range(2))


def _base_inner3(bg, X, Y):
    gi = bg.ginv
    tot = 0.0
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for i2 in range(2):
                    for j2 in range(2):
                        for k2 in range(2):
                            tot = tot + gi[i][i2] * gi[j][j2] * gi[k][k2] * X[i][j][k] * Y[i2][j2][k2]
    return tot


def inner(bg: Background, h: Sym2, k: Sym2):
    Hh, sh = _parts(bg, h)
    Hk, sk = _parts(bg, k)
    return _base_inner2(bg, Hh, Hk) + bg.d * sh * sk


def norm2(bg: Background, h: Sym2):
    return inner(bg, h, h)


def trace(bg: Background, h: Sym2):
    H, sigma = _parts(bg, h)
    return sum(bg.ginv[a][b] * H[a][b] for a in range(2) for b in range(2)) + bg.d * sigma


def grad_norm2(bg: Background, h: Sym2):
    """|nabla h|^2 = |DH|^2 + d |dsigma|^2 + 2 d |v|^2 / B^2."""
    DH, dsig, v = nabla_components(bg, h)
    return (_base_inner3(bg, DH, DH) + bg.d * bg.pair(dsig, dsig)
            + 2.0 * bg.d * bg.pair(v, v) / bg.B ** 2)


def _rough_laplacian(bg: Background, h: Sym2) -> Sym2:
    d, B, G = bg.d, bg.B, bg.gamma
    H, sigma = _parts(bg, h)
    DH, dsig, v = nabla_components(bg, h)
    gB = bg.gradB

    base = [[None, None], [None, None]]
    for a in range(2):
        for b in range(a, 2):
            tr_dd = 0.0
            for c in range(2):
                for e in range(2):
                    val = bg.d_(DH[e][a][b], c)
                    for f in range(2):
                        val = val - G[f][c][e] * DH[f][a][b] - G[f][c][a] * DH[e][f][b] \
                              - G[f][c][b] * DH[e][a][f]
                    tr_dd = tr_dd + bg.ginv[c][e] * val
            fib = 0.5 * sum(gB[e] * DH[e][a][b] for e in range(2)) \
                - (bg.dB[a] * v[b] + bg.dB[b] * v[a]) / (2.0 * B)
            base[a][b] = base[b][a] = -(tr_dd + (d / B) * fib)

    tau = [B * dsig[0], B * dsig[1]]
    div_tau = 0.0
    for c in range(2):
        for e in range(2):
            val = bg.d_(tau[e], c)
            for f in range(2):
                val = val - G[f][c][e] * tau[f]
            div_tau = div_tau + bg.ginv[c][e] * val
    dB_tau = bg.pair(bg.dB, tau)
    ss = -(div_tau - dB_tau / B + (d / (2.0 * B)) * dB_tau + bg.pair(bg.dB, v) / B)
    return Sym2.from_base(base, ss)


def _check_support(h: WarpedField):
    if not h.support_ok():
        raise SupportError("field must vanish on the two outermost radial layers")


def covariant_laplacian(h: WarpedField, m: WarpedMetric, check_support: bool = True) -> WarpedField:
    """Connection Laplacian nabla^* nabla h (nonnegative convention)."""
    if check_support:
        _check_support(h)
    bg = background(m)
    return WarpedField.from_coord(h.grid, h.n, _rough_laplacian(bg, h.coord()))


def _weitzenboeck_hyp(bg: Background, h: Sym2, n: int) -> Sym2:
    tr = trace(bg, h)
    return Sym2(-2.0 * (n * h.rr - tr * bg.g[0][0]), -2.0 * (n * h.rt - tr * bg.g[0][1]),
                -2.0 * (n * h.tt - tr * bg.g[1][1]), -2.0 * (n * h.ss - tr * bg.B))


def lichnerowicz(h: WarpedField, m: WarpedMetric, check_support: bool = True) -> WarpedField:
    if not m.is_hyperbolic():
        raise ValueError("Lichnerowicz Laplacian is implemented on the hyperbolic background")
    if check_support:
        _check_support(h)
    bg = background(m)
    s = h.coord()
    out = _rough_laplacian(bg, s) + _weitzenboeck_hyp(bg, s, h.n)
    return WarpedField.from_coord(h.grid, h.n, out)


def linearized_einstein_coord(bg: Background, s: Sym2, n: int) -> Sym2:
    """L h = 1/2 Delta_L h + (n-1) h on the hyperbolic background."""
    lap = _rough_laplacian(bg, s) + _weitzenboeck_hyp(bg, s, n)
    return lap.scale(0.5) + s.scale(float(n - 1))


def linearized_einstein(h: WarpedField, m: WarpedMetric, check_support: bool = True) -> WarpedField:
    if not m.is_hyperbolic():
        raise ValueError("linearisation is taken at the hyperbolic background")
    if check_support:
        _check_support(h)
    bg = background(m)
    return WarpedField.from_coord(h.grid, h.n, linearized_einstein_coord(bg, h.coord(), h.n))


def twice_L_reduced(h: WarpedField, m: WarpedMetric) -> WarpedField:
    """2 L h = nabla^* nabla h - 2 h + 2 tr(h) g at constant curvature -1."""
    bg = background(m)
    s = h.coord()
    tr = trace(bg, s)
    gs = Sym2(bg.g[0][0], bg.g[0][1], bg.g[1][1], bg.B)
    out = _rough_laplacian(bg, s) - s.scale(2.0) + gs.scale(2.0 * tr)
    return WarpedField.from_coord(h.grid, h.n, out)


# ---------------------------------------------------------------------------
# gauge terms


def _bianchi_coord(bg: Background, h: Sym2):
    H, sigma = _parts(bg, h)
    DH = _D_tensor(bg, H)
    gB = bg.gradB
    div = []
    for a in range(2):
        val = sum(bg.ginv[c][e] * DH[c][e][a] for c in range(2) for e in range(2))
        val = val + (bg.d / (2.0 * bg.B)) * (sum(gB[c] * H[c][a] for c in range(2))
                                             - sigma * bg.dB[a])
        div.append(val)
    tr = trace(bg, h)
    return [-div[a] + 0.5 * bg.d_(tr, a) for a in range(2)]


def bianchi(m_bar: WarpedMetric, h: WarpedField):
    """beta(h) = delta h + 1/2 d tr h relative to m_bar: components (beta_r, beta_t)."""
    bg = background(m_bar)
    return tuple(_bianchi_coord(bg, h.coord()))


def _lie_derivative(grid, g: Sym2, X):
    gm = [[g.rr, g.rt], [g.rt, g.tt]]
    dX = [[grid.dr(X[e]), grid.dt(X[e])] for e in range(2)]  # dX[e][a] = d_a X^e
    base = [[None, None], [None, None]]
    for a in range(2):
        for b in range(a, 2):
            val = X[0] * grid.dr(gm[a][b]) + X[1] * grid.dt(gm[a][b])
            for e in range(2):
                val = val + gm[e][b] * dX[e][a] + gm[a][e] * dX[e][b]
            base[a][b] = base[b][a] = val
    ss = X[0] * grid.dr(g.ss) + X[1] * grid.dt(g.ss)
    return Sym2.from_base(base, ss)


def lie_derivative_metric(g: WarpedMetric, X) -> WarpedField:
    """L_X g for a base vector field X = (X^r, X^t)."""
    return WarpedField.from_coord(g.grid, g.n, _lie_derivative(g.grid, g.coord(), X))


def einstein_operator_coord(bg_bar: Background, g: WarpedMetric) -> Sym2:
    n = g.n
    s = g.coord()
    ric = warped_ricci_coord(g)
    beta = _bianchi_coord(bg_bar, s)
    det = s.rr * s.tt - s.rt ** 2
    # sharp with respect to g itself
    X = [(s.tt * beta[0] - s.rt * beta[1]) / det, (-s.rt * beta[0] + s.rr * beta[1]) / det]
    lie = _lie_derivative(g.grid, s, X)
    return ric + s.scale(float(n - 1)) + lie.scale(0.5)


def einstein_operator(m_bar: WarpedMetric, g: WarpedMetric, check: bool = True) -> WarpedField:
    """Phi(g) = Ric(g) + (n-1) g + 1/2 L_{beta(g)^sharp} g, beta relative to m_bar."""
    if check:
        g.check_positive()
    bg_bar = background(m_bar)
    return WarpedField.from_coord(g.grid, g.n, einstein_operator_coord(bg_bar, g))


# ---------------------------------------------------------------------------
# scalars and norms


def scalar_grad_norm2(bg: Background, u):
    du = [bg.d_(u, 0), bg.d_(u, 1)]
    return bg.pair(du, du)


def scalar_laplacian(bg: Background, u):
    """nabla^* nabla u = -(1/sqrt g) d_a (sqrt g g^{ab} d_b u)."""
    vol = bg.sqrt_det() * bg.B ** (bg.d / 2.0)
    du = [bg.d_(u, 0), bg.d_(u, 1)]
    up = bg.raise_(du)
    return -(bg.d_(vol * up[0], 0) + bg.d_(vol * up[1], 1)) / vol


def sup_norm(h: WarpedField) -> float:
    """Sup over the grid of the pointwise g_hyp-norm."""
    r = h.grid.rr
    v = (np.abs(h.p) ** 2 + np.abs(h.w) ** 2 + 2.0 * np.abs(h.c / np.cosh(r)) ** 2
         + (h.n - 2) * np.abs(h.q) ** 2)
    return float(np.sqrt(np.max(v)))
