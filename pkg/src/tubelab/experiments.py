"""Experiment definitions: config validation, sweep cells and row assembly.

Every experiment is split into independent cells (pure functions of the
validated config and a cell key) so that a worker pool can run them in any
order; rows are merged and sorted afterwards.  Random rotation specs come
from ``numpy.random.PCG64`` seeded by ``SeedSequence([seed, n, index])``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import ChebGrid, FDGrid
from .hyperbolic import CylinderCoords, TubeIsometry, axis_point, cylinder_to_point
from .newton import NewtonError, newton_solve, perturbed_background
from .reports import fit_constant
from .rotations import random_so
from .spectral import (discrete_L_conditioning, gap_constants, kato_check, scalar_rayleigh,
                       sullivan_constant, tensor_gap_check, transfer_check,
                       weighted_identity_check)
from .torus import lemma32_bound_check
from .tube import TubeQuotient, count_exponent, inj_at, orbit_count_at
from .warped import ScalarField, WarpedField, WarpedMetric

__all__ = ["ConfigError", "EXPERIMENTS", "Experiment", "validate", "GENERATOR"]

GENERATOR = "numpy.random.PCG64"


class ConfigError(ValueError):
    pass


@dataclass
class Experiment:
    name: str
    columns: list
    defaults: dict
    cells: Callable          # cfg -> list of keys
    run_cell: Callable       # (cfg, key) -> list of rows
    sort_key: Callable
    finish: Callable = None  # (cfg, rows) -> (extra rows, summary dict)
    violates: Callable = None
    files: dict = field(default_factory=dict)


def _rng(seed: int, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


def _n_list(cfg):
    return cfg["n_list"]


def _specs(cfg, n: int, i_ell: int):
    """Rotation matrices and normal directions for one (n, ell) cell."""
    spec = cfg["angle_spec"]
    rng = _rng(cfg["seed"], n, i_ell)
    out = []
    if isinstance(spec, str):
        k = int(spec.split(":", 1)[1])
        for _ in range(k):
            rot = random_so(n - 1, rng)
            v = rng.standard_normal(n - 1)
            out.append((rot, v / np.linalg.norm(v)))
    else:
        for angles in spec:
            rot = TubeIsometry.from_angles(n, 1.0, angles).rot
            v = rng.standard_normal(n - 1)
            out.append((rot, v / np.linalg.norm(v)))
    return out


def _bound_constant(cfg, n: int) -> float:
    C = cfg.get("C")
    if C is None:
        # default: twice the torus-count constant times (1/mu)^m
        return 2.0 * (1.0 / cfg["mu"]) ** count_exponent(n)
    if isinstance(C, dict):
        return float(C[str(n)])
    return float(C)


def _angles(rot) -> tuple:
    from .rotations import so_normal_form

    return tuple(float(a) for a in so_normal_form(rot).angles)


# ---------------------------------------------------------------------------
# count / torus


COUNT_COLUMNS = ["n", "ell", "angles", "R", "r", "count", "inj", "depth", "bound", "ratio"]


def _ell_cells(cfg):
    return [(n, i, ell) for n in _n_list(cfg) for i, ell in enumerate(cfg["ell_list"])]


def _count_cell(cfg, key):
    n, i_ell, ell = key
    m = count_exponent(n)
    C = _bound_constant(cfg, n)
    rows = []
    for rot, theta in _specs(cfg, n, i_ell):
        tube = TubeQuotient(TubeIsometry(n, ell, rot), cfg["mu"], direction=theta)
        if tube.thin_empty:
            continue
        R_mu = tube.boundary_radius
        angles = _angles(rot)
        for dep in np.linspace(0.0, R_mu, cfg["depth_steps"]):
            R = max(R_mu - float(dep), 0.0)
            count = orbit_count_at(tube.phi, R, theta, cfg["r"])
            bound = C * math.exp(m * (R_mu - R))
            rows.append(dict(n=n, ell=ell, angles=angles, R=R, r=cfg["r"], count=count,
                             inj=inj_at(tube.phi, R, theta), depth=R_mu - R, bound=bound,
                             ratio=count / bound))
    return rows


def _radius_token(tok, inj: float) -> float:
    if isinstance(tok, str):
        return (float(tok[:-3]) if tok[:-3] else 1.0) * inj
    return float(tok)


def _torus_cell(cfg, key):
    n, i_ell, ell = key
    m = count_exponent(n)
    C = cfg.get("C_torus", 2.0)
    rows = []
    for rot, theta in _specs(cfg, n, i_ell):
        tube = TubeQuotient(TubeIsometry(n, ell, rot), cfg["mu"], direction=theta)
        R_mu = tube.boundary_radius
        angles = _angles(rot)
        for R in cfg["R_list"]:
            x = cylinder_to_point(CylinderCoords(float(R), theta, 0.0))
            inj = inj_at(tube.phi, float(R), theta)
            for tok in cfg["r_list"]:
                r = _radius_token(tok, inj)
                if r < inj:
                    continue
                chk = lemma32_bound_check(tube, x, r)
                bound = C * chk.bound
                rows.append(dict(n=n, ell=ell, angles=angles, R=float(R), r=r, count=chk.count,
                                 inj=chk.inj, depth=max(R_mu - float(R), 0.0), bound=bound,
                                 ratio=chk.count / bound))
    return rows


def _count_sort(r):
    return (r["n"], r["ell"], r["R"], r["r"], r["angles"])


def _count_finish(cfg, rows, x_col):
    fits = {}
    for n in _n_list(cfg):
        sub = [r for r in rows if r["n"] == n]
        if len(sub) < 8:
            continue
        m = count_exponent(n)
        if x_col == "depth":
            pts = [dict(x=math.exp(r["depth"]), y=r["count"]) for r in sub]
        else:
            pts = [dict(x=r["r"] / r["inj"], y=r["count"]) for r in sub]
        fit = fit_constant(pts, "x", "y", exponent=m)
        free = fit_constant(pts, "x", "y")
        fits[str(n)] = {"exponent": m, "empirical_C": fit.max_ratio,
                        "fitted_exponent": free.exponent, "fitted_constant": free.constant,
                        "max_ratio": max(r["ratio"] for r in sub), "rows": len(sub)}
    return [], {"fits": fits}


def _ratio_violates(r):
    return r["ratio"] > 1.0


# ---------------------------------------------------------------------------
# gap


GAP_COLUMNS = ["op", "n", "grid_dr", "value", "bound", "margin"]


def _bump(x, a, b, power=4):
    s = (x - a) / (b - a)
    return np.where((s > 0) & (s < 1), np.sin(np.pi * np.clip(s, 0.0, 1.0)) ** power, 0.0)


def _gap_cell(cfg, key):
    n, part = key
    dr = cfg["grid"]["dr"]
    lam_s = sullivan_constant(n)
    rows = []
    if part == "scalar":
        lower = lam_s * (1.0 - 5.0 * dr)
        for a, b in cfg["scalar_supports"]:
            g = FDGrid(max(a - 4 * dr, dr), b + 4 * dr, dr)
            u = _bump(g.rr, a, b) * np.ones(g.shape)
            v = scalar_rayleigh(ScalarField(g, u), n)
            rows.append(dict(op="scalar_bump", n=n, grid_dr=dr, value=v, bound=lower, margin=v - lower))
        L = cfg["tail_length"]
        g = FDGrid(0.5, 1.0 + L + 0.5, dr)
        u = np.exp(-(n - 1) * g.rr / 2.0) * _bump(g.rr, 1.0, 1.0 + L, 1) * np.ones(g.shape)
        v = scalar_rayleigh(ScalarField(g, u), n)
        rows.append(dict(op="scalar_tail", n=n, grid_dr=dr, value=v, bound=1.1 * lam_s,
                         margin=1.1 * lam_s - v))
        rows.append(dict(op="scalar_tail_lower", n=n, grid_dr=dr, value=v, bound=lower,
                         margin=v - lower))
        return rows
    rng = _rng(cfg["seed"], n, 1000 + part)
    gr = cfg["grid"]
    g = FDGrid(gr["r0"], gr["r1"], dr, Lt=gr["Lt"], dt=gr.get("dt", 2 * dr))
    r, t = g.rr, g.t[None, :]
    lam0 = gap_constants(n).lambda0
    tol = cfg["tolerance"]
    per_cell = cfg["fields"] // cfg["gap_chunks"]
    lo, hi = gr["r0"] + 3 * dr, gr["r1"] - 3 * dr
    for _ in range(per_cell):
        a, b = np.sort(rng.uniform(lo, hi, 2))
        b = min(max(b, a + 0.3), hi)
        a = min(a, b - 0.3)
        bump = _bump(r, a, b)
        comps = []
        for _c in range(4):
            c = rng.standard_normal(5)
            comps.append(bump * (c[0] + c[1] * np.cos(2 * np.pi * t / gr["Lt"])
                                 + c[2] * np.sin(2 * np.pi * t / gr["Lt"])
                                 + c[3] * np.cos(4 * np.pi * t / gr["Lt"]) + c[4] * (r - a)))
        h = WarpedField(g, n, *comps)
        chk = tensor_gap_check(h)
        q = chk.rhs / chk.l2
        lam_t = lam_s - 2.0
        rows.append(dict(op="tensor_gap", n=n, grid_dr=dr, value=q, bound=lam_t * (1 - tol),
                         margin=q - lam_t * (1 - tol)))
        rows.append(dict(op="tensor_gap_lambda0", n=n, grid_dr=dr, value=q, bound=lam0 * (1 - tol),
                         margin=q - lam0 * (1 - tol)))
        k = kato_check(h)
        rows.append(dict(op="kato", n=n, grid_dr=dr, value=k.lhs / k.rhs, bound=1.0 + tol,
                         margin=1.0 + tol - k.lhs / k.rhs))
    return rows


def _gap_cells(cfg):
    return [(n, "scalar") for n in cfg["n_list"]] + \
        [(n, i) for n in cfg["n_list"] for i in range(cfg["gap_chunks"])]


def _gap_sort(r):
    return (r["op"], r["n"], r["grid_dr"], r["value"])


def _margin_violates(r):
    return r["margin"] < 0


def _gap_finish(cfg, rows):
    summ = {}
    for op in sorted({r["op"] for r in rows}):
        sub = [r for r in rows if r["op"] == op]
        summ[op] = {"rows": len(sub), "min_value": min(r["value"] for r in sub),
                    "max_value": max(r["value"] for r in sub),
                    "min_margin": min(r["margin"] for r in sub)}
    return [], {"ops": summ}


# ---------------------------------------------------------------------------
# weighted identity


def _identity_fields(cfg, n, dr):
    gr = cfg["grid"]
    Lt = gr["Lt"]
    g = FDGrid(gr["r0"], gr["r1"], dr, Lt=Lt, dt=dr)
    r, t = g.rr, g.t[None, :]
    tc, half = Lt / 2.0, cfg["t_halfwidth"]
    a, b = cfg["support"]
    bump = _bump(r, a, b, cfg["power"]) * _bump(t, tc - half, tc + half, cfg["power"])
    h = WarpedField(g, n, bump, bump, bump, np.zeros(g.shape))
    beta = cfg.get("beta_override") or gap_constants(n).beta
    phi = np.exp(-beta * np.arccosh(np.cosh(r) * np.cosh(t - tc)))
    return h, ScalarField(g, phi)


def _identity_cell(cfg, key):
    n, dr = key
    h, phi = _identity_fields(cfg, n, dr)
    rep = weighted_identity_check(h, phi)
    tol = cfg["tolerance"] if dr == max(cfg["dr_list"]) else 10.0 * dr * dr
    return [dict(op="identity_residual", n=n, grid_dr=dr, value=rep.residual, bound=tol,
                 margin=tol - rep.residual),
            dict(op="identity_div_integral", n=n, grid_dr=dr, value=rep.div_integral,
                 bound=10.0 * dr * dr, margin=10.0 * dr * dr - rep.div_integral),
            dict(op="identity_div_pointwise", n=n, grid_dr=dr, value=rep.div_pointwise,
                 bound=100.0 * dr * dr, margin=100.0 * dr * dr - rep.div_pointwise)]


def _identity_finish(cfg, rows):
    extra, orders = [], {}
    for n in cfg["n_list"]:
        res = sorted(((r["grid_dr"], r["value"]) for r in rows
                      if r["n"] == n and r["op"] == "identity_residual"), reverse=True)
        for (d0, v0), (d1, v1) in zip(res, res[1:]):
            order = math.log(v0 / v1) / math.log(d0 / d1)
            extra.append(dict(op="identity_order", n=n, grid_dr=d1, value=order, bound=2.0,
                              margin=0.3 - abs(order - 2.0)))
            orders.setdefault(str(n), []).append(order)
    return extra, {"orders": orders}


# ---------------------------------------------------------------------------
# transfer


TRANSFER_COLUMNS = ["case", "n", "ell", "R", "lhs", "rhs", "slack", "sheets", "omega"]


def _u_test(ell):
    return lambda R, t: np.exp(-R * R) * (1.0 + 0.5 * np.cos(2.0 * np.pi * t / ell))


def _transfer_cell(cfg, key):
    case, i = key
    ns, ells = cfg["n_list"], cfg["ell_list"]
    n = ns[i % len(ns)]
    rng = _rng(cfg["seed"], n, 2000 + i)
    if case == "thick":
        ell = cfg["thick_ell"]
        tube = TubeQuotient(TubeIsometry(n, ell, random_so(n - 1, rng)), cfg["mu"])
        x = axis_point(n, float(rng.uniform(0, ell)))
        R = 0.0
    else:
        ell = ells[(i // len(ns)) % len(ells)]
        v = rng.standard_normal(n - 1)
        v /= np.linalg.norm(v)
        tube = TubeQuotient(TubeIsometry(n, ell, random_so(n - 1, rng)), cfg["mu"], direction=v)
        R = float(rng.uniform(0.0, 0.5 * tube.boundary_radius))
        x = cylinder_to_point(CylinderCoords(R, v, float(rng.uniform(0, ell))), n) if R > 0 \
            else axis_point(n, 0.0)
    rep = transfer_check(tube, x, _u_test(ell), samples=cfg["samples"], seed=cfg["seed"] + i)
    return [dict(case=case, n=n, ell=ell, R=R, lhs=rep.lhs, rhs=rep.rhs, slack=rep.slack,
                 sheets=rep.max_sheets, omega=rep.max_omega, index=i)]


def _transfer_cells(cfg):
    return [("thick", i) for i in range(cfg["thick_configs"])] + \
        [("thin", i) for i in range(cfg["configs"])]


def _transfer_violates(r):
    if r["case"] == "thick":
        return abs(r["lhs"] - r["rhs"]) > 1e-6 * abs(r["lhs"])
    return r["lhs"] > r["rhs"] * (1.0 + 1e-12)


def _transfer_finish(cfg, rows):
    thin = [r for r in rows if r["case"] == "thin"]
    thick = [r for r in rows if r["case"] == "thick"]
    return [], {"thin_min_slack": min((r["slack"] for r in thin), default=None),
                "thick_max_abs_gap": max((abs(r["lhs"] - r["rhs"]) for r in thick), default=None)}


# ---------------------------------------------------------------------------
# conditioning


def _cond_cell(cfg, key):
    n, dr = key
    gr = cfg["grid"]
    rep = discrete_L_conditioning(n, gr["r0"], gr["r1"], dr, gr["Lt"], tuple(cfg["modes"]))
    return [dict(op="conditioning", n=n, grid_dr=dr, value=rep.min_eig, bound=rep.bound,
                 margin=rep.min_eig - rep.bound)]


def _cond_finish(cfg, rows):
    extra, drift = [], {}
    for n in cfg["n_list"]:
        vals = [r["value"] for r in sorted((r for r in rows if r["n"] == n and r["op"] == "conditioning"),
                                          key=lambda r: -r["grid_dr"])]
        if len(vals) < 2:
            continue
        rel = (max(vals) - min(vals)) / max(vals)
        mono = all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
        drift[str(n)] = {"relative_drift": rel, "nonincreasing": mono, "values": vals}
        extra.append(dict(op="conditioning_drift", n=n, grid_dr=min(cfg["dr_list"]), value=rel,
                          bound=0.05, margin=0.05 - rel))
    return extra, {"drift": drift, "lambda0": {str(n): gap_constants(n).lambda0 for n in cfg["n_list"]}}


# ---------------------------------------------------------------------------
# newton


NEWTON_COLUMNS = ["eps", "iters", "final_residual", "dist_to_hyperbolic", "ratio_dist_over_eps",
                  "n", "dist_to_background", "ricci_residual", "bianchi_residual"]


def _newton_cell(cfg, key):
    n, eps = key
    gr = cfg["grid"]
    grid = ChebGrid(gr["r0"], gr["r1"], gr["N"])
    mb = perturbed_background(grid, n, eps)
    try:
        res = newton_solve(mb, mb, tol=cfg["tol"])
    except NewtonError as e:
        return [dict(eps=eps, n=n, iters=len(e.history) - 1, final_residual=float("nan"),
                     dist_to_hyperbolic=float("nan"), ratio_dist_over_eps=float("nan"),
                     dist_to_background=float("nan"), ricci_residual=float("nan"),
                     bianchi_residual=float("nan"), history=e.history)]
    g = res.metric
    hyp = WarpedMetric.hyperbolic(grid, n)
    from .warped import sup_norm

    d_h = sup_norm(g - hyp)
    d_b = sup_norm(g - mb)
    return [dict(eps=eps, n=n, iters=res.iterations, final_residual=res.residual,
                 dist_to_hyperbolic=d_h, ratio_dist_over_eps=d_h / eps, dist_to_background=d_b,
                 ricci_residual=res.report.ricci_residual,
                 bianchi_residual=res.report.bianchi_residual, history=res.history)]


def _newton_violates(r):
    return not (r["final_residual"] < 1e-8 and r["ricci_residual"] < 1e-7
                and r["bianchi_residual"] < 1e-7)


def _newton_finish(cfg, rows):
    spread = {}
    extra_viol = 0
    for n in cfg["n_list"]:
        ratios = [r["ratio_dist_over_eps"] for r in rows if r["n"] == n]
        if ratios and all(math.isfinite(x) for x in ratios):
            s = max(ratios) / min(ratios)
            spread[str(n)] = s
            extra_viol += s > 3.0
    return [], {"ratio_spread": spread, "spread_violations": int(extra_viol)}


# ---------------------------------------------------------------------------
# constants


CONST_COLUMNS = ["n", "lambda0", "beta", "m", "sqrt_lambda0", "beta_below_sqrt", "two_beta_above_m"]


def _const_cell(cfg, key):
    n = key
    gc = gap_constants(n)
    s = math.sqrt(gc.lambda0)
    return [dict(n=n, lambda0=gc.lambda0, beta=gc.beta, m=gc.m, sqrt_lambda0=s,
                 beta_below_sqrt=0 < gc.beta < s, two_beta_above_m=2 * gc.beta > gc.m)]


def _const_violates(r):
    return not (r["beta_below_sqrt"] and r["two_beta_above_m"])


# ---------------------------------------------------------------------------
# registry and validation


_SWEEP = {"n_list": [4, 5, 6, 7, 8, 9], "ell_list": [1e-4, 1e-3, 1e-2, 1e-1],
          "angle_spec": "random:20", "mu": 0.1}

EXPERIMENTS = {
    "count": Experiment("count", COUNT_COLUMNS, {**_SWEEP, "r": 1.0, "depth_steps": 10},
                        _ell_cells, _count_cell, _count_sort,
                        lambda c, r: _count_finish(c, r, "depth"), _ratio_violates),
    "torus": Experiment("torus", COUNT_COLUMNS,
                        {**_SWEEP, "R_list": [0.5, 1.0, 3.0, 6.0, 10.0],
                         "r_list": ["inj", "2inj", "10inj", 1.0], "C_torus": 2.0},
                        _ell_cells, _torus_cell, _count_sort,
                        lambda c, r: _count_finish(c, r, "r"), _ratio_violates),
    "gap": Experiment("gap", GAP_COLUMNS,
                      {"n_list": [4, 5, 6], "fields": 100, "gap_chunks": 4, "tolerance": 1e-6,
                       "grid": {"r0": 0.5, "r1": 3.0, "dr": 1.0 / 32, "Lt": 1.0},
                       "scalar_supports": [[3.0, 6.0], [0.6, 2.0], [1.0, 8.0]],
                       "tail_length": 20.0},
                      _gap_cells, _gap_cell, _gap_sort, _gap_finish, _margin_violates),
    "identity": Experiment("identity", GAP_COLUMNS,
                           {"n_list": [4], "dr_list": [1.0 / 64, 1.0 / 128, 1.0 / 256],
                            "tolerance": 1e-4, "grid": {"r0": 0.5, "r1": 3.0, "Lt": 6.0},
                            "support": [0.6, 2.9], "t_halfwidth": 2.5, "power": 3},
                           lambda c: [(n, d) for n in c["n_list"] for d in c["dr_list"]],
                           _identity_cell, _gap_sort, _identity_finish, _margin_violates),
    "transfer": Experiment("transfer", TRANSFER_COLUMNS,
                           {"n_list": [4, 5, 6], "ell_list": [1e-2, 1e-3], "mu": 0.1,
                            "configs": 50, "thick_configs": 3, "thick_ell": 1.5,
                            "samples": 20000},
                           _transfer_cells, _transfer_cell,
                           lambda r: (r["case"], r["n"], r["ell"], r["R"], r["index"]),
                           _transfer_finish, _transfer_violates),
    "conditioning": Experiment("conditioning", GAP_COLUMNS,
                               {"n_list": [4, 5], "dr_list": [1.0 / 64, 1.0 / 128, 1.0 / 256],
                                "modes": [0, 1], "grid": {"r0": 0.5, "r1": 2.5, "Lt": 1.0}},
                               lambda c: [(n, d) for n in c["n_list"] for d in c["dr_list"]],
                               _cond_cell, _gap_sort, _cond_finish, _margin_violates),
    "newton": Experiment("newton", NEWTON_COLUMNS,
                         {"n_list": [4, 5], "eps_list": [1e-2, 1e-3, 1e-4], "tol": 1e-9,
                          "grid": {"r0": 0.5, "r1": 2.5, "N": 40}},
                         lambda c: [(n, e) for n in c["n_list"] for e in c["eps_list"]],
                         _newton_cell, lambda r: (r["n"], -r["eps"]), _newton_finish,
                         _newton_violates),
    "constants": Experiment("constants", CONST_COLUMNS, {"n_list": list(range(4, 17))},
                            lambda c: list(c["n_list"]), _const_cell, lambda r: r["n"],
                            None, _const_violates),
}


def _need(cond, msg):
    if not cond:
        raise ConfigError(msg)


def validate(name: str, raw: dict) -> dict:
    """Merge defaults and check admissible ranges; raises ConfigError."""
    _need(name in EXPERIMENTS, f"unknown experiment {name!r}")
    _need(isinstance(raw, dict), "config must be a JSON object")
    if "experiment" in raw:
        _need(raw["experiment"] == name, "config experiment does not match the command")
    if "schema" in raw:
        _need(raw["schema"] == 1, "unsupported config schema")
    exp = EXPERIMENTS[name]
    cfg = {**exp.defaults, **{k: v for k, v in raw.items() if k not in ("experiment", "schema", "out")}}
    if "grid" in raw:
        _need(isinstance(raw["grid"], dict), "grid must be an object")
        cfg["grid"] = {**exp.defaults.get("grid", {}), **raw["grid"]}
    if "n" in raw:
        cfg["n_list"] = [raw["n"]]
    _need("seed" in cfg and isinstance(cfg["seed"], int) and not isinstance(cfg["seed"], bool)
          and cfg["seed"] >= 0, "a nonnegative integer seed is required")
    ns = cfg.get("n_list", [])
    _need(isinstance(ns, list) and ns and all(isinstance(n, int) and 4 <= n <= 64 for n in ns),
          "n_list must hold integers in [4, 64]")
    for e in cfg.get("ell_list", []):
        _need(isinstance(e, (int, float)) and 1e-9 <= e <= 10.0, "ell values must lie in [1e-9, 10]")
    if "mu" in cfg:
        _need(isinstance(cfg["mu"], (int, float)) and 0 < cfg["mu"] <= 1.0, "mu must lie in (0, 1]")
    spec = cfg.get("angle_spec")
    if isinstance(spec, str):
        _need(spec.startswith("random:") and spec[7:].isdigit() and int(spec[7:]) > 0,
              "angle_spec must be 'random:k' or a list of angle lists")
    elif spec is not None:
        _need(isinstance(spec, list) and all(isinstance(a, list) for a in spec),
              "angle_spec must be 'random:k' or a list of angle lists")
    for key in ("dr_list", "eps_list"):
        for v in cfg.get(key, []):
            _need(isinstance(v, (int, float)) and 0 < v < 1, f"{key} entries must lie in (0, 1)")
    g = cfg.get("grid")
    if g:
        _need(0 < g.get("r0", 1) < g.get("r1", 2), "grid needs 0 < r0 < r1")
        if "dr" in g:
            _need(0 < g["dr"] <= 0.25, "grid.dr must lie in (0, 0.25]")
    if "beta_override" in cfg and cfg["beta_override"] is not None:
        _need(isinstance(cfg["beta_override"], (int, float)) and cfg["beta_override"] > 0,
              "beta_override must be positive")
    if name == "gap":
        _need(cfg["fields"] % cfg["gap_chunks"] == 0, "fields must be a multiple of gap_chunks")
    return cfg


def run_cells(name: str, cfg: dict, jobs: int = 1):
    exp = EXPERIMENTS[name]
    keys = exp.cells(cfg)
    t0 = time.perf_counter()
    if jobs > 1 and len(keys) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_call, [(name, cfg, k) for k in keys]))
    else:
        parts = [exp.run_cell(cfg, k) for k in keys]
    rows = [r for p in parts for r in p]
    rows.sort(key=exp.sort_key)
    extra, summary = exp.finish(cfg, rows) if exp.finish else ([], {})
    rows = rows + sorted(extra, key=exp.sort_key)
    return rows, summary, time.perf_counter() - t0


def _call(args):
    name, cfg, key = args
    return EXPERIMENTS[name].run_cell(cfg, key)
