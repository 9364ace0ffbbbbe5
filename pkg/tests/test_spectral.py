import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tubelab.grids import FDGrid
from tubelab.hyperbolic import (CylinderCoords, TubeIsometry, apply_isometry, axis_point,
                                cylinder_to_point, dist)
from tubelab.rotations import random_so
from tubelab.spectral import (cutoff_eta, discrete_L_conditioning, gap_constants, hybrid_norm_desk,
                              kato_check, quotient_distance, scalar_rayleigh, smoothstep5,
                              sullivan_constant, tensor_gap_check, transfer_check,
                              weighted_identity_check, weighted_seminorm)
from tubelab.spectral import _inverse_iteration, _form_matrices
from tubelab.tube import TubeQuotient, inj_at
from tubelab.warped import ScalarField, SupportError, WarpedField, WarpedMetric


def bump(x, a, b, power=4):
    s = (x - a) / (b - a)
    return np.where((s > 0) & (s < 1), np.sin(np.pi * np.clip(s, 0, 1)) ** power, 0.0)


def radial_field(g, f):
    return ScalarField(g, f[:, None] * np.ones(g.shape))


def rayleigh_1d(f, r, n):
    """Independent 1-d oracle: trapezoid quotient with weight sinh^{n-2} cosh."""
    w = np.sinh(r) ** (n - 2) * np.cosh(r)
    fp = np.gradient(f, r, edge_order=2)
    return np.trapezoid(fp ** 2 * w, r) / np.trapezoid(f ** 2 * w, r)


# --- constants

def test_gap_constants_values():
    assert gap_constants(4).lambda0 == 2.0
    assert gap_constants(13).lambda0 == 34.0
    assert sullivan_constant(4) == 2.25
    with pytest.raises(ValueError):
        gap_constants(3)


@pytest.mark.parametrize("n", range(4, 65))
def test_gap_constants_invariants(n):
    c = gap_constants(n)
    assert c.lambda0 == max(n - 2, (n - 1) ** 2 / 4 - 2)
    assert 2 * math.sqrt(c.lambda0) > c.m
    assert c.m / 2 < c.beta < math.sqrt(c.lambda0)


# --- scalar gap

def test_rayleigh_scale_invariant():
    g = FDGrid(2.5, 6.5, 1 / 64)
    u = radial_field(g, bump(g.r, 3, 6))
    v = scalar_rayleigh(u, 4)
    assert scalar_rayleigh(ScalarField(g, -3.7 * u.u), 4) == pytest.approx(v, rel=1e-13)


@pytest.mark.parametrize("dr", [1 / 32, 1 / 64])
def test_rayleigh_bump_36(dr):
    g = FDGrid(2.5, 6.5, dr)
    f = bump(g.r, 3, 6)
    v = scalar_rayleigh(radial_field(g, f), 4)
    assert v >= 2.25
    assert v == pytest.approx(rayleigh_1d(f, g.r, 4), rel=5e-3)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_rayleigh_tail_near_sharp(n):
    dr = 1 / 64
    L = 20.0
    g = FDGrid(0.5, 1.5 + L, dr)
    f = np.exp(-(n - 1) * g.r / 2) * bump(g.r, 1.0, 1.0 + L, 1)
    v = scalar_rayleigh(radial_field(g, f), n)
    lam = sullivan_constant(n)
    assert lam * (1 - 5 * dr) <= v <= 1.1 * lam


def test_rayleigh_rejects():
    g = FDGrid(1, 4, 1 / 16)
    with pytest.raises(ValueError):
        scalar_rayleigh(ScalarField(g, np.zeros(g.shape)), 4)
    with pytest.raises(SupportError):
        scalar_rayleigh(ScalarField(g, np.ones(g.shape)), 4)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.6, 4.0), st.floats(0.5, 4.0), st.integers(4, 7))
def test_rayleigh_above_sullivan(a, width, n):
    dr = 1 / 64
    g = FDGrid(a - 0.1, a + width + 0.1, dr)
    v = scalar_rayleigh(radial_field(g, bump(g.r, a, a + width, 3)), n)
    assert v >= sullivan_constant(n) * (1 - 5 * dr)


# --- tensor gap and Kato

GRID2 = FDGrid(0.5, 3.0, 1 / 32, Lt=1.0, dt=1 / 16)


def test_tensor_gap_pure_trace():
    n = 5
    f = bump(GRID2.r, 0.7, 2.8)
    h = WarpedField.metric_multiple(GRID2, n, f[:, None] * np.ones(GRID2.shape))
    chk = tensor_gap_check(h)
    R = scalar_rayleigh(radial_field(GRID2, f), n)
    assert chk.rhs / chk.l2 == pytest.approx(R - 2 + 2 * n, rel=1e-3)
    assert chk.margin > 0


@pytest.mark.parametrize("n", [4, 5, 6])
def test_tensor_gap_traceless(n):
    f = bump(GRID2.r, 0.7, 2.8)[:, None] * np.ones(GRID2.shape)
    a, c = 1.0, 0.5
    b = -(a + c) / (n - 2)
    h = WarpedField(GRID2, n, a * f, b * f, c * f, 0 * f)
    chk = tensor_gap_check(h)
    R = scalar_rayleigh(ScalarField(GRID2, f), n)
    # Kato: int |grad h|^2 >= |T|^2 int |df|^2, so rhs / l2 >= R(f) - 2
    assert chk.rhs / chk.l2 >= (R - 2) * (1 - 1e-3)
    assert chk.rhs >= chk.lhs


@pytest.mark.parametrize("n", [4, 5, 6])
def test_tensor_gap_random_sweep(n):
    rng = np.random.default_rng(100 + n)
    lam0 = gap_constants(n).lambda0
    r, t = GRID2.rr, GRID2.t[None, :]
    for _ in range(20):
        lo, hi = np.sort(rng.uniform(0.6, 2.9, 2))
        hi = max(hi, lo + 0.3)
        f = bump(r, lo, min(hi, 2.9))
        comps = [f * (rng.standard_normal() + rng.standard_normal() * np.cos(2 * np.pi * t)
                      + rng.standard_normal() * np.sin(4 * np.pi * t)) for _ in range(4)]
        h = WarpedField(GRID2, n, *comps)
        chk = tensor_gap_check(h)
        assert chk.rhs >= chk.lhs * (1 - 1e-6)
        assert chk.rhs / chk.l2 >= lam0 * (1 - 1e-6)
        k = kato_check(h)
        assert k.lhs <= k.rhs * (1 + 1e-6)


def test_tensor_gap_rejects():
    with pytest.raises(ValueError):
        tensor_gap_check(WarpedField.zeros(GRID2, 4))
    with pytest.raises(SupportError):
        tensor_gap_check(WarpedField.metric_multiple(GRID2, 4, np.ones(GRID2.shape)))


def test_kato_equality_for_trace_fields():
    gaps = []
    for dr in (1 / 32, 1 / 64, 1 / 128):
        g = FDGrid(0.5, 3.0, dr)
        f = bump(g.r, 0.7, 2.8)[:, None]
        k = kato_check(WarpedField.metric_multiple(g, 5, f * np.ones(g.shape)))
        gaps.append(abs(k.rhs - k.lhs) / k.rhs)
    assert gaps[-1] < 1e-3
    assert gaps[0] / gaps[1] > 3 and gaps[1] / gaps[2] > 3


# --- weighted identity

def identity_case(dr, n=4, power=3):
    g = FDGrid(0.5, 3.0, dr, Lt=6.0, dt=dr)
    r, t = g.rr, g.t[None, :]
    b = bump(r, 0.6, 2.9, power) * bump(t, 0.5, 5.5, power)
    h = WarpedField(g, n, b, b, b, 0 * b)
    phi = np.exp(-gap_constants(n).beta * np.arccosh(np.cosh(r) * np.cosh(t - 3.0)))
    return h, ScalarField(g, phi)


def test_identity_constant_phi():
    h, _ = identity_case(1 / 32)
    rep = weighted_identity_check(h, ScalarField(h.grid, 2.5 * np.ones(h.grid.shape)))
    assert rep.residual < 1e-13


def test_identity_converges_second_order():
    res = [weighted_identity_check(*identity_case(dr)).residual for dr in (1 / 32, 1 / 64, 1 / 128)]
    assert res[1] < 1e-4
    orders = [math.log2(res[0] / res[1]), math.log2(res[1] / res[2])]
    assert all(abs(o - 2) < 0.3 for o in orders)


@pytest.mark.slow
def test_identity_fine_grid():
    assert weighted_identity_check(*identity_case(1 / 256)).residual < 1e-5


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_divergence_integral(seed):
    rng = np.random.default_rng(seed)
    dr = 1 / 32
    g = FDGrid(0.5, 3.0, dr, Lt=2.0, dt=dr)
    r, t = g.rr, g.t[None, :]
    b = bump(r, 0.7, 2.8) * (1 + 0.5 * rng.uniform() * np.cos(np.pi * t))
    h = WarpedField(g, 4, b, rng.uniform(0.5, 1.5) * b, rng.uniform(0.5, 1.5) * b, 0.2 * b)
    phi = np.exp(-rng.uniform(0.5, 1.5) * r + 0.3 * np.sin(np.pi * t))
    rep = weighted_identity_check(h, ScalarField(g, phi))
    assert rep.div_integral < 10 * dr ** 2


def test_identity_support():
    g = FDGrid(0.5, 3.0, 1 / 16)
    with pytest.raises(SupportError):
        weighted_identity_check(WarpedField.metric_multiple(g, 4, np.ones(g.shape)),
                                ScalarField(g, np.ones(g.shape)))


# --- cut-off

def test_smoothstep():
    x = np.linspace(-1, 2, 301)
    s = smoothstep5(x)
    assert s[0] == 0 and s[-1] == 1 and np.all(np.diff(s) >= 0)


def test_cutoff_shape():
    tube = TubeQuotient(TubeIsometry.pure_translation(5, 1e-2))
    rep = cutoff_eta(tube)
    assert rep(0.0) == 1.0 and rep(rep.r_half) == 0.0 and rep(rep.r_mu) == 0.0
    th = tube.direction
    assert inj_at(tube.phi, rep.r_quarter, th) == pytest.approx(0.025, abs=1e-8)
    assert inj_at(tube.phi, rep.r_half, th) == pytest.approx(0.05, abs=1e-8)
    # gradient supported where mu/4 <= inj <= mu/2
    g = rep.eta.grid
    d = np.abs(g.dr(rep.eta.u))[:, 0]
    grad_r = g.r[d > 1e-12]
    inj = np.array([inj_at(tube.phi, r, th) for r in grad_r])
    dr = g.hr
    assert np.all(inj >= 0.025 - 2 * dr) and np.all(inj <= 0.05 + 2 * dr)


def test_cutoff_c2_stable():
    tube = TubeQuotient(TubeIsometry.pure_translation(5, 1e-3))
    reps = [cutoff_eta(tube, dr) for dr in (1 / 64, 1 / 128, 1 / 256)]
    assert len({(r.c1, r.c2) for r in reps}) == 1
    assert math.isfinite(reps[0].c2_norm)
    for r in reps:
        assert r.grid_c1 <= r.c1 * 1.01 and r.grid_c2 <= r.c2 * 1.1
    assert reps[-1].grid_c2 == pytest.approx(reps[-1].c2, rel=0.05)


def test_cutoff_empty():
    with pytest.raises(ValueError):
        cutoff_eta(TubeQuotient(TubeIsometry.pure_translation(4, 0.06)))


# --- quotient distance and weighted norms

def test_quotient_distance_brute_force():
    rng = np.random.default_rng(4)
    phi = TubeIsometry(5, 0.05, random_so(4, rng))
    tube = TubeQuotient(phi)
    x = cylinder_to_point(CylinderCoords(0.4, np.eye(4)[0], 0.01))
    for _ in range(20):
        v = rng.standard_normal(4)
        c = CylinderCoords(float(rng.uniform(0, 2)), v / np.linalg.norm(v), float(rng.uniform(-1, 1)))
        y = cylinder_to_point(c)
        ref = min(dist(x, apply_isometry(phi, k, y)) for k in range(-200, 201))
        assert quotient_distance(tube, x, c.R, c.theta, c.t) == pytest.approx(ref, abs=1e-7)


@pytest.fixture(scope="module")
def norm_setup():
    tube = TubeQuotient(TubeIsometry.pure_translation(4, 0.02))
    g = FDGrid(0.5, 3.0, 1 / 16, Lt=1.0, dt=1 / 8)
    f = bump(g.rr, 1.5, 2.5) * np.ones(g.shape)
    return tube, g, WarpedField.metric_multiple(g, 4, f)


def test_seminorm_zero_and_homogeneous(norm_setup):
    tube, g, h = norm_setup
    x = axis_point(4, 0.0)
    assert weighted_seminorm(WarpedField.zeros(g, 4), tube, x, 1.2) == 0.0
    for order in (0, 2):
        a = weighted_seminorm(h, tube, x, 1.2, order)
        assert weighted_seminorm(h * -2.5, tube, x, 1.2, order) == pytest.approx(2.5 * a, rel=1e-12)
    with pytest.raises(ValueError):
        weighted_seminorm(h, tube, x, 1.2, order=1)


def test_seminorm_sandwich(norm_setup):
    tube, g, h = norm_setup
    beta = 1.2
    x = axis_point(4, 0.0)
    from tubelab.spectral import _global_norm

    l2 = _global_norm(h, 0)
    v = weighted_seminorm(h, tube, x, beta)
    # distance from x to supp h lies in [1.5, 2.5]
    assert math.exp(-beta * 2.5) * l2 * 0.999 <= v <= math.exp(-beta * 1.5) * l2 * 1.001


def test_hybrid_norm_properties(norm_setup):
    tube, g, h = norm_setup
    pts = [axis_point(4, 0.0), cylinder_to_point(CylinderCoords(0.3, np.eye(3)[0], 0.0))]
    assert hybrid_norm_desk(WarpedField.zeros(g, 4), tube, pts) == 0.0
    a = hybrid_norm_desk(h, tube, pts[:1])
    b = hybrid_norm_desk(h, tube, pts)
    assert b >= a
    from tubelab.spectral import _global_norm
    from tubelab.warped import sup_norm

    # support in the thick part: the weighted pieces vanish after the cut-off
    assert a == pytest.approx(max(sup_norm(h), _global_norm(h, 0)), rel=1e-12)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3).filter(lambda c: abs(c) > 1e-6))
def test_hybrid_norm_is_a_norm(seed, c):
    rng = np.random.default_rng(seed)
    tube = TubeQuotient(TubeIsometry.pure_translation(4, 0.01))
    g = FDGrid(0.1, 1.2, 1 / 32)
    pts = [axis_point(4, 0.0)]
    b = bump(g.rr, 0.15, 1.1) * np.ones(g.shape)
    h1 = WarpedField(g, 4, *(rng.standard_normal() * b for _ in range(4)))
    h2 = WarpedField(g, 4, *(rng.standard_normal() * b for _ in range(4)))
    n1 = hybrid_norm_desk(h1, tube, pts, dirs=4)
    n2 = hybrid_norm_desk(h2, tube, pts, dirs=4)
    assert hybrid_norm_desk(h1 + h2, tube, pts, dirs=4) <= (n1 + n2) * (1 + 1e-12)
    assert hybrid_norm_desk(h1 * c, tube, pts, dirs=4) == pytest.approx(abs(c) * n1, rel=1e-12)


# --- transfer

def test_transfer_thick_equality():
    tube = TubeQuotient(TubeIsometry(4, 1.5, random_so(3, np.random.default_rng(0))))
    rep = transfer_check(tube, axis_point(4, 0.2), lambda R, t: np.exp(-R * R), samples=5000)
    assert rep.max_sheets == 1 and rep.max_omega == 1
    assert rep.lhs == rep.rhs


def test_transfer_thin():
    rng = np.random.default_rng(1)
    tube = TubeQuotient(TubeIsometry(5, 1e-2, random_so(4, rng)))
    x = cylinder_to_point(CylinderCoords(0.2, np.eye(4)[1], 0.0))
    rep = transfer_check(tube, x, lambda R, t: np.exp(-R * R) * (1 + 0.5 * np.cos(200 * np.pi * t)),
                         samples=10000, seed=3)
    assert rep.lhs <= rep.rhs and rep.slack > 0
    assert rep.max_omega > rep.max_sheets > 1


def test_transfer_field_input():
    tube = TubeQuotient(TubeIsometry.pure_translation(4, 1e-2))
    g = FDGrid(0.05, 2.0, 1 / 32)
    u = ScalarField(g, np.exp(-g.rr ** 2) * np.ones(g.shape))
    a = transfer_check(tube, axis_point(4, 0), u, samples=4000, seed=2)
    b = transfer_check(tube, axis_point(4, 0), lambda R, t: np.exp(-np.maximum(R, 0.05) ** 2),
                       samples=4000, seed=2)
    assert a.lhs == pytest.approx(b.lhs, rel=1e-3)
    with pytest.raises(ValueError):
        transfer_check(tube, axis_point(4, 0), lambda R, t: -np.ones_like(R), samples=100)


def test_transfer_localisation():
    tube = TubeQuotient(TubeIsometry.pure_translation(4, 1e-2))
    ratios = []
    for s in (0.3, 0.1, 0.03):
        rep = transfer_check(tube, axis_point(4, 0.0), lambda R, t, s=s: np.exp(-(R / s) ** 2),
                             samples=40000, seed=1)
        ratios.append(rep.rhs / rep.lhs)
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[-1] == pytest.approx(rep.max_omega / rep.max_sheets, rel=0.02)


# --- conditioning

@pytest.mark.parametrize("n", [4, 5])
def test_trace_direction(n):
    g = FDGrid(0.5, 2.5, 1 / 32)
    f = bump(g.r, 0.6, 2.4)[:, None] * np.ones(g.shape)
    chk = tensor_gap_check(WarpedField.metric_multiple(g, n, f))
    assert chk.rhs / chk.l2 >= 2 * (n - 1)


def test_conditioning_n4():
    dr = 1 / 32
    rep = discrete_L_conditioning(4, dr=dr)
    assert rep.min_eig >= 2 * (1 - 10 * dr)
    assert rep.min_eig >= rep.bound
    assert set(rep.per_mode) == {0, 1}


def test_conditioning_domain_monotone():
    vals = [discrete_L_conditioning(5, 0.5, r1, dr=1 / 32).min_eig for r1 in (3.0, 2.5, 2.0, 1.5)]
    assert all(b >= a * (1 - 1e-9) for a, b in zip(vals, vals[1:]))


def test_conditioning_matches_dense_solver():
    import scipy.linalg

    g = FDGrid(0.5, 2.5, 1 / 16)
    Q, M = _form_matrices(g, 4)
    lam, _ = _inverse_iteration(Q, M)
    assert lam == pytest.approx(scipy.linalg.eigh(Q, M, eigvals_only=True)[0], rel=1e-9)
    with pytest.raises(RuntimeError):
        _inverse_iteration(Q, M, tol=0.0, max_iter=3)
