"""Acceptance criteria, one test each.

Every test prints (and records for the terminal summary) a single
``criterion k: PASS|FAIL`` line with its runtime and the key numbers.
Run alone with ``pytest tests/test_acceptance.py -s``.
"""
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from tubelab.cli import main
from tubelab.experiments import run_cells, validate
from tubelab.hyperbolic import (RADIAL_C0, CylinderCoords, TubeIsometry, apply_isometry,
                                cylinder_to_point, dist, point_to_cylinder, radial_comparison)
from tubelab.rotations import random_so
from tubelab.spectral import gap_constants
from tubelab.tube import count_exponent
from tubelab.warped import weitzenboeck_general, weitzenboeck_pointwise

SEED = 20240601
JOBS = min(4, os.cpu_count() or 1)


def report(k, ok, elapsed, limit, detail):
    ok = bool(ok) and elapsed < limit
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s / {limit:g}s) {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def sweep(name, **extra):
    cfg = validate(name, {"seed": SEED, **extra})
    return run_cells(name, cfg, JOBS)


def rand_cyl(rng, n, Rmax, tmax):
    v = rng.standard_normal(n - 1)
    return CylinderCoords(float(rng.uniform(0, Rmax)), v / np.linalg.norm(v),
                          float(rng.uniform(-tmax, tmax)))


def test_1_constants():
    t0 = time.perf_counter()
    ok = gap_constants(4).lambda0 == 2 and gap_constants(13).lambda0 == 34
    for n in range(4, 17):
        c = gap_constants(n)
        m = count_exponent(n)
        ok &= c.lambda0 == max(n - 2, (n - 1) ** 2 / 4 - 2) and c.m == m
        ok &= c.beta < math.sqrt(c.lambda0) and 2 * c.beta > m
    report(1, ok, time.perf_counter() - t0, 1, "lambda0(4)=2, lambda0(13)=34, beta constraints n=4..16")


def test_2_hyperbolic_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_iso = worst_rt = 0.0
    for _ in range(10_000):
        n = int(rng.integers(4, 10))
        ell = float(rng.uniform(1e-3, 0.3))
        phi = TubeIsometry(n, ell, random_so(n - 1, rng))
        # coordinates grow like e^{|k| ell}; stay where double precision holds 1e-9
        kmax = max(1, int(3.0 / ell))
        k = int(rng.integers(-kmax, kmax + 1))
        cx, cy = rand_cyl(rng, n, 3.0, 3.0), rand_cyl(rng, n, 3.0, 3.0)
        x, y = cylinder_to_point(cx, n), cylinder_to_point(cy, n)
        d = abs(dist(apply_isometry(phi, k, x), apply_isometry(phi, k, y)) - dist(x, y))
        back = point_to_cylinder(x)
        rt = max(abs(back.R - cx.R), abs(back.t - cx.t), float(np.max(np.abs(back.theta - cx.theta))))
        worst_iso, worst_rt = max(worst_iso, d), max(worst_rt, rt)
    report(2, worst_iso < 1e-9 and worst_rt < 1e-10, time.perf_counter() - t0, 5,
           f"max isometry error {worst_iso:.2e}, max round-trip error {worst_rt:.2e}")


def test_3_radial_comparison():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 3)
    ok = True
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(4, 10))
        Rp, R = np.sort(rng.uniform(2.0, 12.0, 2))
        a, b = rand_cyl(rng, n, 1.0, 3.0), rand_cyl(rng, n, 1.0, 3.0)
        lo, hi = radial_comparison(float(Rp), float(R), a, b)
        ok &= lo <= hi * (1 + 1e-12)
        if lo > 0:
            worst = max(worst, hi / (lo * math.exp(R - Rp)))
    ok &= worst <= RADIAL_C0
    report(3, ok, time.perf_counter() - t0, 5,
           f"max d_R / (e^(R-R') d_R') = {worst:.6f} <= {RADIAL_C0}")


def _drift(base, dense):
    out = {}
    for n, f in base["fits"].items():
        c0, c1 = f["empirical_C"], dense["fits"][n]["empirical_C"]
        out[n] = max(c0, c1) / min(c0, c1)
    return out


DOUBLED = {"angle_spec": "random:40", "ell_list": [float(x) for x in np.logspace(-4, -1, 8)]}


@pytest.mark.slow
def test_4_torus_sweep():
    t0 = time.perf_counter()
    rows, s, _ = sweep("torus")
    _, s2, _ = sweep("torus", **DOUBLED)
    drift = _drift(s, s2)
    viol = sum(r["ratio"] > 1 for r in rows)
    Cs = {n: round(f["empirical_C"], 3) for n, f in s["fits"].items()}
    report(4, viol == 0 and max(drift.values()) < 2, time.perf_counter() - t0, 300,
           f"{len(rows)} rows, violations {viol}, C_n {Cs}, max drift {max(drift.values()):.3f}")


@pytest.mark.slow
def test_5_count_sweep():
    t0 = time.perf_counter()
    rows, s, _ = sweep("count")
    _, s2, _ = sweep("count", **DOUBLED)
    drift = _drift(s, s2)
    viol = sum(r["ratio"] > 1 for r in rows)
    Cs = {n: round(f["empirical_C"], 1) for n, f in s["fits"].items()}
    report(5, viol == 0 and max(drift.values()) < 2, time.perf_counter() - t0, 300,
           f"{len(rows)} rows, violations {viol}, C {Cs}, max drift {max(drift.values()):.3f}")


def test_6_weitzenboeck():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 6)
    worst = 0.0
    per = 10 ** 5 // 6 + 1
    for n in range(4, 10):
        a = rng.standard_normal((per, n, n))
        h = a + np.swapaxes(a, 1, 2)
        worst = max(worst, float(np.max(np.abs(weitzenboeck_general(h, n) - weitzenboeck_pointwise(h, n)))))
    report(6, worst < 1e-12, time.perf_counter() - t0, 5,
           f"{6 * per} matrices, max deviation {worst:.2e}")


def test_7_weighted_identity():
    t0 = time.perf_counter()
    rows, s, _ = sweep("identity")
    res = {r["grid_dr"]: r["value"] for r in rows if r["op"] == "identity_residual"}
    orders = s["orders"]["4"]
    ok = res[1 / 64] < 1e-4 and all(abs(o - 2) <= 0.3 for o in orders)
    report(7, ok, time.perf_counter() - t0, 60,
           f"residual at dr=1/64 {res[1 / 64]:.2e}, orders {[round(o, 4) for o in orders]}")


def test_8_gap():
    t0 = time.perf_counter()
    rows, s, _ = sweep("gap")
    ops = s["ops"]
    viol = sum(r["margin"] < 0 for r in rows)
    tensor = ops["tensor_gap_lambda0"]["rows"]
    n4 = {r["op"]: r["value"] for r in sorted(rows, key=lambda r: -r["value"])
          if r["n"] == 4 and r["op"].startswith("scalar")}
    ok = viol == 0 and tensor == 300 and n4["scalar_tail"] <= 1.1 * 2.25
    report(8, ok, time.perf_counter() - t0, 120,
           f"violations {viol}, tensor fields {tensor}, n=4 min bump quotient {n4['scalar_bump']:.4f}, "
           f"n=4 tail quotient {n4['scalar_tail']:.4f}")


@pytest.mark.slow
def test_9_transfer():
    t0 = time.perf_counter()
    rows, s, _ = sweep("transfer")
    thick = [r for r in rows if r["case"] == "thick"]
    thin = [r for r in rows if r["case"] == "thin"]
    ok = all(abs(r["lhs"] - r["rhs"]) <= 1e-6 * r["lhs"] for r in thick)
    ok &= len(thin) == 50 and all(r["lhs"] <= r["rhs"] for r in thin)
    report(9, ok, time.perf_counter() - t0, 120,
           f"thick max gap {s['thick_max_abs_gap']:.1e}, thin configs {len(thin)}, "
           f"min slack {s['thin_min_slack']:.3f}")


@pytest.mark.slow
def test_10_conditioning():
    t0 = time.perf_counter()
    rows, s, _ = sweep("conditioning")
    cond = [r for r in rows if r["op"] == "conditioning"]
    ok = all(r["value"] >= r["bound"] for r in cond)
    ok &= all(d["nonincreasing"] and d["relative_drift"] < 0.05 for d in s["drift"].values())
    detail = {n: [round(v, 4) for v in d["values"]] for n, d in s["drift"].items()}
    report(10, ok, time.perf_counter() - t0, 120, f"min eigenvalues {detail}")


def test_11_newton():
    t0 = time.perf_counter()
    rows, s, _ = sweep("newton")
    ok = all(r["final_residual"] < 1e-8 and r["ricci_residual"] < 1e-7 and r["bianchi_residual"] < 1e-7
             for r in rows)
    ok &= len(rows) == 6 and all(v <= 3 for v in s["ratio_spread"].values())
    worst = max(max(r["ricci_residual"], r["bianchi_residual"]) for r in rows)
    report(11, ok, time.perf_counter() - t0, 180,
           f"ratio spread {({n: round(v, 4) for n, v in s['ratio_spread'].items()})}, "
           f"worst Einstein residual {worst:.1e}")


@pytest.mark.slow
@pytest.mark.parametrize("name", ["count", "gap", "newton"])
def test_12_determinism(tmp_path, name):
    t0 = time.perf_counter()
    cfg = os.path.join(os.path.dirname(__file__), os.pardir, "configs", f"{name}.json")
    blobs = []
    for i in range(2):
        out = tmp_path / str(i)
        assert main([name, "--config", cfg, "--out", str(out)]) == 0
        blobs.append(sorted((p.name, p.read_bytes()) for p in out.glob("*.csv")))
    report(12, blobs[0] == blobs[1], time.perf_counter() - t0, 600,
           f"{name}: byte-identical CSV across two runs")
