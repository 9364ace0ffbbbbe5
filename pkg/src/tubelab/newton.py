"""Damped Newton solve of Phi_gbar(g) = 0 in the t-independent warped class.

Unknowns are (p, q, w) at the Chebyshev nodes; the cross term c stays zero
because every t-independent diagonal field has vanishing (r, t) component of
Phi.  At each end of the segment the tangential data q, w are pinned to those
of gbar, and the normal gauge condition beta_r = 0 replaces the rr-equation.
Pinning p as well would over-determine the gauge: the Bianchi 1-form of a
zero of Phi satisfies a second-order equation and only vanishes when its
boundary values do.

The Jacobian is assembled column by column with complex-step derivatives,
which is exact to round-off since every operator is analytic.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grids import ChebGrid
from .warped import (WarpedField, WarpedMetric, _bianchi_coord, background,
                     einstein_operator, einstein_operator_coord,
                     warped_ricci_coord)

__all__ = ["NewtonError", "NewtonResult", "EinsteinReport", "newton_solve", "detect_einstein",
           "bump_profile", "perturbed_background", "phi_residual"]

log = logging.getLogger(__name__)

_H = 1e-30
_COND_MAX = 1e12


class NewtonError(RuntimeError):
    def __init__(self, msg: str, history: list | None = None, **diag):
        super().__init__(msg)
        self.history = history or []
        self.diagnostics = diag


@dataclass
class EinsteinReport:
    ricci_residual: float
    bianchi_residual: float
    phi_residual: float
    max_ricci_eig: float
    negative: bool
    warning: str | None = None


@dataclass
class NewtonResult:
    metric: WarpedMetric
    iterations: int
    residual: float
    history: list = field(default_factory=list)
    report: EinsteinReport | None = None


def bump_profile(grid) -> np.ndarray:
    """256 (s (1 - s))^4 in the normalised coordinate s; 1 at the centre, flat to order 3 at the ends."""
    s = (grid.rr - grid.r[0]) / (grid.r[-1] - grid.r[0])
    return 256.0 * (s * (1.0 - s)) ** 4 * np.ones(grid.shape)


def perturbed_background(grid, n: int, eps: float, weights=(1.0, -0.7, 0.5)) -> WarpedMetric:
    """g_hyp + eps * bump in the (p, q, w) slots."""
    b = bump_profile(grid)
    one = np.ones(grid.shape)
    return WarpedMetric(grid, n, one + eps * weights[0] * b, one + eps * weights[1] * b,
                        one + eps * weights[2] * b, np.zeros(grid.shape))


def _metric_from(x, grid, n):
    return WarpedMetric(grid, n, x[..., 0, :, None], x[..., 1, :, None], x[..., 2, :, None],
                        np.zeros(x.shape[:-2] + grid.shape, dtype=x.dtype))


def _residual(x, grid, n, bg_bar, bc):
    """Stacked system: Phi rows in the interior, boundary rows at the two ends."""
    g = _metric_from(x, grid, n)
    phi = WarpedField.from_coord(grid, n, einstein_operator_coord(bg_bar, g))
    F = np.stack([phi.p[..., 0], phi.q[..., 0], phi.w[..., 0]], axis=-2)
    beta_r = _bianchi_coord(bg_bar, g.coord())[0][..., 0]
    for e in (0, -1):
        F[..., 1, e] = x[..., 1, e] - bc[1, e]
        F[..., 2, e] = x[..., 2, e] - bc[2, e]
        F[..., 0, e] = beta_r[..., e]
    return F


def _residual_full_dirichlet(x, grid, n, bg_bar, bc):
    g = _metric_from(x, grid, n)
    phi = WarpedField.from_coord(grid, n, einstein_operator_coord(bg_bar, g))
    F = np.stack([phi.p[..., 0], phi.q[..., 0], phi.w[..., 0]], axis=-2)
    for e in (0, -1):
        F[..., :, e] = x[..., :, e] - bc[:, e]
    return F


def _jacobian(fun, x):
    m = x.size
    E = np.eye(m).reshape((m,) + x.shape)
    Fc = fun(x[None] + 1j * _H * E)
    return (Fc.imag / _H).reshape(m, m).T


def phi_residual(m_bar: WarpedMetric, g: WarpedMetric) -> float:
    """sup over nodes and components of |Phi(g)| in normalised components."""
    phi = einstein_operator(m_bar, g)
    return float(np.max(np.abs(phi.stack()[..., :3, :, :])))


def newton_solve(m_bar: WarpedMetric, g_start: WarpedMetric, dirichlet: str = "mixed",
                 damping: bool = True, tol: float = 1e-9, max_iter: int = 30,
                 max_halvings: int = 20) -> NewtonResult:
    """Damped Newton for Phi_{m_bar}(g) = 0 with boundary data taken from m_bar.

    ``dirichlet="mixed"``: q, w pinned and beta_r = 0 at both ends (default).
    ``dirichlet="full"``: p, q, w all pinned.
    """
    grid, n = m_bar.grid, m_bar.n
    if not isinstance(grid, ChebGrid):
        raise TypeError("the Newton solver runs on a ChebGrid (t-independent fields)")
    if np.any(g_start.c != 0) or np.any(m_bar.c != 0):
        raise ValueError("cross term must vanish in the t-independent class")
    g_start.check_positive()
    m_bar.check_positive()
    bg_bar = background(m_bar)
    bc = np.stack([m_bar.p[:, 0], m_bar.q[:, 0], m_bar.w[:, 0]])
    resfun = {"mixed": _residual, "full": _residual_full_dirichlet}[dirichlet]

    def F(x):
        return resfun(x, grid, n, bg_bar, bc)

    x = np.stack([g_start.p[:, 0], g_start.q[:, 0], g_start.w[:, 0]]).astype(float)
    res = float(np.max(np.abs(F(x))))
    history = [{"iter": 0, "residual": res, "step_norm": 0.0, "damping": 1.0}]
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NewtonError(f"no convergence after {max_iter} iterations", history, residual=res)
        J = _jacobian(F, x)
        cond = float(np.linalg.cond(J))
        if cond > _COND_MAX:
            raise NewtonError(f"Jacobian condition number {cond:.3e} exceeds 1e12", history,
                              condition=cond, residual=res)
        dx = np.linalg.solve(J, -F(x).ravel()).reshape(x.shape)
        lam = 1.0
        for _ in range(max_halvings + 1):
            x_new = x + lam * dx
            try:
                res_new = float(np.max(np.abs(F(x_new))))
                ok = np.isfinite(res_new) and (res_new < res or not damping)
            except FloatingPointError:
                ok = False
            if ok:
                break
            lam *= 0.5
        else:
            raise NewtonError("residual did not decrease after maximal backtracking", history,
                              residual=res, condition=cond)
        it += 1
        x, res = x_new, res_new
        step = float(np.max(np.abs(lam * dx)))
        history.append({"iter": it, "residual": res, "step_norm": step, "damping": lam})
        log.debug("newton iter %d residual %.3e step %.3e", it, res, step)

    g = _metric_from(x, grid, n)
    g = WarpedMetric(grid, n, g.p, g.q, g.w, g.c)
    return NewtonResult(metric=g, iterations=it, residual=res, history=history,
                        report=detect_einstein(g, m_bar))


def detect_einstein(g: WarpedMetric, m_bar: WarpedMetric) -> EinsteinReport:
    """Split the residual of Phi into the Einstein and gauge parts."""
    n = g.n
    s = g.coord()
    ric = warped_ricci_coord(g)
    E = ric + s.scale(float(n - 1))
    e = WarpedField.from_coord(g.grid, n, E)
    ric_res = float(np.max(np.abs(e.stack())))
    beta = _bianchi_coord(background(m_bar), s)
    beta_res = float(max(np.max(np.abs(b)) for b in beta))
    phi_res = phi_residual(m_bar, g)
    # Ric <= lambda g < 0: eigenvalues of g^{-1} Ric on base and fibre blocks
    det = s.rr * s.tt - s.rt ** 2
    a11 = (s.tt * ric.rr - s.rt * ric.rt) / det
    a12 = (s.tt * ric.rt - s.rt * ric.tt) / det
    a21 = (-s.rt * ric.rr + s.rr * ric.rt) / det
    a22 = (-s.rt * ric.rt + s.rr * ric.tt) / det
    tr, dt = a11 + a22, a11 * a22 - a12 * a21
    disc = np.sqrt(np.maximum((tr / 2) ** 2 - dt, 0.0))
    lam_max = float(max(np.max(tr / 2 + disc), np.max(ric.ss / s.ss)))
    neg = lam_max < 0
    warn = None if neg else "Ricci is not negative definite; the detection criterion does not apply"
    if warn:
        log.warning(warn)
    return EinsteinReport(ric_res, beta_res, phi_res, lam_max, neg, warn)
