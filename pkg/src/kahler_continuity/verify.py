"""Built-in property suites run by ``kahler-continuity verify``.

Each check returns ``(name, passed, detail)``.  The suites use small grids
so that ``verify --suite all`` finishes in seconds.
"""
from __future__ import annotations

import math

import numpy as np

from . import geometry as geo
from . import ma_core as ma
from .config import RunConfig
from .continuation import REACHED_TMAX, BREAKDOWN, initial_solution, picard_bootstrap, run
from .gauge import default_gauge, manufactured_gauge, shifted_gauge

SUITES = ("geometry", "ma", "monitors", "bootstrap")

TORUS_MODES = [(1, 0, 0.02, 0.0), (0, 2, 0.005, 0.003)]


def _check(name, value, bound, cmp="<="):
    ok = value <= bound if cmp == "<=" else value >= bound
    return name, bool(ok), f"{value:.3e} {cmp} {bound:.1e}"


def _torus(N=32, n=1, modes=TORUS_MODES):
    geom = geo.build_geometry(geo.FLAT_TORUS, n, N)
    return geom, default_gauge(geom, geo.mode_field(geom, modes if n == 1 else []))


def _sphere(M=128):
    return geo.build_geometry(geo.AXISYM_SPHERE, 1, M, 4 * math.pi)


def geometry_suite(rng):
    out = []
    torus, _ = _torus()
    X, Y = torus.coords()
    f = np.cos(2 * np.pi * X)
    H = geo.ddbar(torus, f)
    out.append(_check("torus ddbar single mode", float(np.max(np.abs(H[..., 0, 0] + np.pi**2 * f))), 1e-10))
    out.append(_check("ddbar kills constants", float(np.max(np.abs(geo.ddbar(torus, np.full(torus.grid_shape, 3.0))))), 1e-12))
    g = geo.reference_metric(torus) + geo.ddbar(torus, geo.mode_field(torus, TORUS_MODES))
    h = geo.mode_field(torus, [(1, 1, rng.normal(), rng.normal()), (2, -1, rng.normal(), 0.0)])
    k = geo.mode_field(torus, [(0, 1, rng.normal(), rng.normal()), (1, 2, 0.0, rng.normal())])
    ibp = geo.integrate(torus, k * geo.laplacian(torus, g, h), g) + geo.dirichlet_pairing(torus, g, k, h)
    out.append(_check("torus integration by parts", abs(ibp), torus.tol_disc))
    out.append(_check("torus divergence structure", abs(geo.integrate(torus, geo.laplacian(torus, g, h), g)), torus.tol_disc))

    sphere = _sphere()
    out.append(_check("sphere total area", abs(geo.integrate(sphere, np.ones(sphere.grid_shape)) - sphere.area) / sphere.area, 1e-10))
    lap_x = geo.laplacian(sphere, geo.reference_metric(sphere), sphere.x)
    out.append(_check("sphere l=1 eigenfunction", float(np.max(np.abs(lap_x + sphere.ricci_scale * sphere.x))), 1e-10))
    rho = geo.scalar_to_form(sphere, np.exp(0.2 * sphere.x + 0.1 * sphere.x**3))
    ric = geo.ricci_form(sphere, rho)
    gb = geo.integrate(sphere, ric[..., 0, 0].real)
    out.append(_check("sphere Gauss-Bonnet", abs(gb - 4 * math.pi), sphere.tol_disc))
    return out


def ma_suite(rng):
    out = []
    geom, gauge = _torus()
    p = ma.MAProblem(geom, gauge, 0.5)
    u = 0.01 * geo.mode_field(geom, [(1, 1, rng.normal(), rng.normal()), (2, 0, rng.normal(), 0.0)])
    d = geo.mode_field(geom, [(0, 1, rng.normal(), rng.normal()), (1, 2, rng.normal(), 0.0)])
    J = ma.apply_linearization(p, u, d)
    errs = []
    for eps in (1e-3, 1e-4, 1e-6):
        fd = (ma.ma_residual(p, u + eps * d) - ma.ma_residual(p, u - eps * d)) / (2 * eps)
        errs.append(float(np.max(np.abs(fd - J)) / np.max(np.abs(J))))
    out.append(_check("Jacobian relative error", errs[-1], 1e-6))
    out.append(_check("Jacobian second-order ratio", errs[0] / errs[1], 80.0, ">="))

    u_star = 0.01 * geo.mode_field(geom, [(1, 0, 1.0, 0.0), (1, 1, 0.0, 1.0)])
    man = manufactured_gauge(geom, gauge, 0.5, u_star)
    pm = ma.MAProblem(geom, man, 0.5)
    start = u_star + 0.005 * geo.mode_field(geom, [(2, 1, rng.normal(), rng.normal())])
    sol = ma.newton_correct(pm, start, 1e-12)
    out.append(_check("manufactured solution recovered", float(np.max(np.abs(sol - u_star))), 1e-8))

    t = 1e-2
    worst = -np.inf
    for _ in range(20):
        f = geo.mode_field(geom, [(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)), rng.normal(), rng.normal())
                                  for _ in range(3)])
        v = ma.solve_shifted_laplace(geom, gauge.omega0, t, t * f)
        worst = max(worst, float(np.max(np.abs(v)) - t**2 * np.max(np.abs(f))))
    out.append(_check("shifted Laplace maximum principle excess", worst, 1e-10))
    return out


def monitors_suite(rng):
    out = []
    cfg = RunConfig(kind=geo.FLAT_TORUS, grid=32, perturbation_modes=TORUS_MODES, t_max=5.0)
    rec = run(cfg)
    out.append(("torus run reaches t_max", rec.termination == REACHED_TMAX, rec.termination))
    out.append(_check("torus volume identity", max(r["volume_rel_err"] for r in rec.rows), 1e-7))
    out.append(_check("torus Ricci identity", max(r["ricci_identity_err"] for r in rec.rows), 1e-6))
    out.append(_check("torus C0 upper gap", min(r["c0_gap"] for r in rec.rows), -1e-8, ">="))
    out.append(_check("torus energy identity", max(r["energy_identity_rel_err"] for r in rec.rows), 1e-6))

    cfg = RunConfig(kind=geo.AXISYM_SPHERE, grid=64, area=4 * math.pi, t_max=2.0)
    rec = run(cfg)
    out.append(("sphere run breaks down", rec.termination == BREAKDOWN, rec.termination))
    T = rec.extrapolated_T if rec.extrapolated_T is not None else math.inf
    out.append(_check("sphere extrapolated T", abs(T - 1.0), 0.02))
    track = max(abs(r["sup_u"] - math.log1p(-r["t"])) for r in rec.rows if r["t"] <= 0.9)
    out.append(_check("sphere closed-form tracking", track, 1e-6))
    return out


def bootstrap_suite(rng):
    out = []
    geom, gauge = _torus()
    p = ma.MAProblem(geom, gauge, 0.0)
    ratios = []
    for t in (1e-2, 1e-3, 1e-4):
        res = picard_bootstrap(p, t)
        ratios.append(res.contraction_ratio)
        if t == 1e-3:
            newton = ma.newton_correct(p.at(t), initial_solution(p), 1e-12)
            out.append(_check("Picard vs Newton at t=1e-3", float(np.max(np.abs(res.u - newton))), 1e-8))
    mono = all(a > b for a, b in zip(ratios, ratios[1:]))
    out.append(("contraction ratios decrease with t", mono, ", ".join(f"{r:.2e}" for r in ratios)))

    v = geo.mode_field(geom, [(1, 1, 0.03, 0.01)])
    hat = shifted_gauge(geom, gauge, v)
    u = ma.newton_solve(ma.MAProblem(geom, gauge, 1.0), np.zeros(geom.grid_shape), 1e-12)
    uh = ma.newton_solve(ma.MAProblem(geom, hat, 1.0), -v, 1e-12)
    out.append(_check("gauge covariance", float(np.max(np.abs(uh.u - (u.u - v)))), 1e-8))
    return out


def run_suite(name, seed=0):
    """Run one suite (or ``all``) and return the list of check tuples."""
    rng = np.random.default_rng(seed)
    names = SUITES if name == "all" else (name,)
    table = {"geometry": geometry_suite, "ma": ma_suite, "monitors": monitors_suite, "bootstrap": bootstrap_suite}
    results = []
    for nm in names:
        if nm not in table:
            raise ValueError(f"unknown suite {nm!r}")
        results += [(f"{nm}: {c}", ok, detail) for c, ok, detail in table[nm](rng)]
    return results
