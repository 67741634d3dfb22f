import math

import numpy as np
import pytest

from kahler_continuity import continuation as co
from kahler_continuity import geometry as geo
from kahler_continuity import ma_core as ma
from kahler_continuity.config import RunConfig
from kahler_continuity.errors import Breakdown
from kahler_continuity.gauge import default_gauge

PI = math.pi
MODES = [(1, 0, 0.02, 0.0), (0, 2, 0.005, 0.003)]


@pytest.fixture(scope="module")
def torus():
    geom = geo.build_geometry(geo.FLAT_TORUS, 1, 32)
    return ma.MAProblem(geom, default_gauge(geom, geo.mode_field(geom, MODES)), 0.0)


@pytest.fixture(scope="module")
def sphere():
    geom = geo.build_geometry(geo.AXISYM_SPHERE, 1, 64, 4 * PI)
    return ma.MAProblem(geom, default_gauge(geom), 0.0)


def sphere_state(p, t):
    q = p.at(t)
    u = np.full(p.geom.grid_shape, math.log(1 - t))
    return co.ContinuationState(q, u, ma.metric_of(q, u), 0.0)


def test_initial_solution(torus, sphere):
    expected = np.log(geo.det(torus.gauge.omega0))
    np.testing.assert_array_equal(co.initial_solution(torus), expected)
    assert np.max(np.abs(co.initial_solution(sphere))) < 1e-14
    with pytest.raises(ValueError):
        co.initial_solution(torus.at(0.5))
    st = co.initial_state(torus)
    assert st.t == 0.0 and st.residual_norm < 1e-14


def test_sphere_tangent_closed_form(sphere):
    # v = t log(1 - t), so dv/dt = log(1 - t) - t / (1 - t)
    for t in (0.2, 0.5, 0.8):
        vdot = co.tangent(sphere_state(sphere, t))
        np.testing.assert_allclose(vdot, math.log(1 - t) - t / (1 - t), atol=1e-10)


def test_tangent_at_zero_returns_u(torus):
    st = co.initial_state(torus)
    np.testing.assert_array_equal(co.tangent(st), st.u)


def test_predictor_second_order_local_error(sphere):
    st = sphere_state(sphere, 0.5)
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        pred = co.predictor(st, dt)
        errs.append(np.max(np.abs(pred - math.log(1 - 0.5 - dt))))
    # v'' = -6 at t = 1/2, so the error in u is close to 6 dt^2
    assert errs[0] == pytest.approx(6e-4, rel=0.1)
    assert all(1.9 < math.log2(a / b) < 2.1 for a, b in zip(errs, errs[1:]))


def test_picard_bootstrap_matches_newton(torus):
    res = co.picard_bootstrap(torus, 1e-3)
    newton = ma.newton_solve(torus.at(1e-3), co.initial_solution(torus), 1e-12).u
    assert np.max(np.abs(res.u - newton)) < 1e-8
    assert res.contraction_ratio < 0.1
    assert res.iterations == len(res.ratios) + 1


def test_picard_ratios_decrease(torus):
    ratios = [co.picard_bootstrap(torus, t).contraction_ratio for t in (1e-2, 1e-3, 1e-4)]
    assert ratios[0] > ratios[1] > ratios[2]


def test_picard_rejects_large_t(torus):
    with pytest.raises(ValueError):
        co.picard_bootstrap(torus, 0.5)
    with pytest.raises(ValueError):
        co.picard_bootstrap(torus, 0.0)


def test_extrapolate_T():
    hist = [(t, 2.0 * (0.8 - t)) for t in (0.0, 0.5, 0.6, 0.7, 0.75, 0.78)]
    assert co.extrapolate_T(hist) == pytest.approx(0.8, abs=1e-12)
    assert co.extrapolate_T([(0.1, 1.0)]) is None
    assert co.extrapolate_T([(0.1, 1.0), (0.2, 1.1)]) is None


def test_advance_halves_step(sphere):
    st = sphere_state(sphere, 0.9)
    ctl = co.StepControl(dt_min=1e-9, tol_newton=1e-9)
    new = co.advance(st, 0.4, ctl)
    assert new.dt < 0.1
    assert new.t < 1.0
    np.testing.assert_allclose(new.u, math.log(1 - new.t), atol=1e-8)


def test_advance_breakdown(sphere):
    st = sphere_state(sphere, 0.999)
    ctl = co.StepControl(dt_min=0.01, tol_newton=1e-9)
    hist = [(t, 1 - t) for t in (0.99, 0.995, 0.999)]
    with pytest.raises(Breakdown) as info:
        co.advance(st, 0.05, ctl, hist)
    assert info.value.t_last == 0.999
    assert info.value.extrapolated_T == pytest.approx(1.0)


def test_run_sphere_breakdown():
    rec = co.run(RunConfig(kind=geo.AXISYM_SPHERE, grid=64, area=8 * PI, t_max=5.0))
    assert rec.termination == co.BREAKDOWN
    assert abs(rec.extrapolated_T - 2.0) < 0.04
    assert rec.t_break < 2.0
    for row in rec.rows:
        assert row["sup_u"] == pytest.approx(math.log(1 - row["t"] / 2), abs=1e-6)


def test_run_snapshots_land_exactly():
    cfg = RunConfig(kind=geo.FLAT_TORUS, grid=16, perturbation_modes=MODES, t_max=1.0,
                    snapshot_times=[0.0, 0.3, 0.7])
    rec = co.run(cfg)
    assert sorted(rec.snapshots) == [0.0, 0.3, 0.7]
    assert rec.rows[-1]["t"] == 1.0
    ts = [r["t"] for r in rec.rows]
    assert 0.3 in ts and 0.7 in ts
    assert all(a < b for a, b in zip(ts, ts[1:]))


def test_run_restart_is_deterministic():
    cfg = RunConfig(kind=geo.FLAT_TORUS, grid=16, perturbation_modes=MODES, t_max=2.0, snapshot_times=[0.5])
    full = co.run(cfg)
    snap = full.snapshots[0.5]
    resumed = co.run(cfg, start=snap)
    tail = [r for r in full.rows if r["t"] > 0.5]
    assert len(tail) == len(resumed.rows)
    for a, b in zip(tail, resumed.rows):
        assert a["t"] == b["t"]
        assert a["sup_u"] == pytest.approx(b["sup_u"], abs=1e-12)


def test_run_monitor_failure_is_error():
    cfg = RunConfig(kind=geo.FLAT_TORUS, grid=16, perturbation_modes=MODES, t_max=1.0, tol_vol=1e-30)
    rec = co.run(cfg)
    assert rec.termination == co.ERROR
    assert "MonitorFailure" in rec.message


def test_bootstrap_check_recorded():
    cfg = RunConfig(kind=geo.FLAT_TORUS, grid=16, perturbation_modes=MODES, t_max=0.01, bootstrap_check=True)
    rec = co.run(cfg)
    assert rec.bootstrap["max_abs_diff"] < 1e-8
