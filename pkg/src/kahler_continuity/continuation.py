"""Predictor-corrector continuation of the path omega = omega_0 - t Ric(omega).

The path starts from the exact t = 0 solution u = log(omega_0^n / Omega),
advances with an Euler predictor built from the t-differentiated equation
and a damped Newton corrector, and stops at ``t_max`` or when the step
size collapses near the maximal time T.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import monitors
from .class_tracker import ClassPath, class_path
from .errors import Breakdown, MonitorFailure, NewtonStall, NoContraction, NonPositiveMetric, LinearSolveError
from .ma_core import MAProblem, MetricReport, metric_of, newton_solve, solve_shifted_laplace

log = logging.getLogger(__name__)

T_BOOTSTRAP_MAX = 1e-2
# the residual's rounding floor on the sphere grows like 1 / positivity_margin
DEFAULT_TOL_NEWTON = {geo.FLAT_TORUS: 1e-11, geo.AXISYM_SPHERE: 1e-9}
EXTRAPOLATION_WINDOW = 5

REACHED_TMAX = "reached_tmax"
BREAKDOWN = "breakdown"
ERROR = "error"


@dataclass(eq=False)
class ContinuationState:
    """One accepted point on the solution path."""

    problem: MAProblem
    u: np.ndarray
    metric_report: MetricReport
    residual_norm: float
    newton_iters: int = 0
    dt: float = 0.0
    step_accepted: bool = True
    vdot: np.ndarray | None = None
    diagnostics: monitors.MonitorReport | None = None

    @property
    def t(self) -> float:
        return self.problem.t


@dataclass
class BootstrapResult:
    u: np.ndarray
    w: np.ndarray
    ratios: list
    iterations: int

    @property
    def contraction_ratio(self) -> float:
        """Largest measured ratio |w_{i+1} - w_i| / |w_i - w_{i-1}|."""
        return max(self.ratios) if self.ratios else 0.0


@dataclass
class PathRecord:
    rows: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    termination: str = ""
    t_break: float | None = None
    extrapolated_T: float | None = None
    message: str = ""
    class_data: ClassPath | None = None
    bootstrap: dict | None = None
    last_state: ContinuationState | None = None
    descriptor: dict | None = None
    tolerances: dict | None = None
    states: list | None = None


# ---------------------------------------------------------------------------
# path start


def initial_solution(p: MAProblem) -> np.ndarray:
    """u = log(omega_0^n / Omega), the exact solution at t = 0."""
    if p.t != 0:
        raise ValueError("initial_solution is the t = 0 solution")
    return np.log(geo.det(p.gauge.omega0)) - p.gauge.log_omega_density


def initial_state(p: MAProblem) -> ContinuationState:
    p0 = p.at(0.0)
    u = initial_solution(p0)
    rep = metric_of(p0, u)
    res = float(np.max(np.abs(np.log(geo.det(rep.metric)) - p0.gauge.log_omega_density - u)))
    return ContinuationState(p0, u, rep, res)


def picard_bootstrap(p: MAProblem, t_small, max_iter=60, tol=1e-10, tol_lin=1e-12,
                     t_max=T_BOOTSTRAP_MAX) -> BootstrapResult:
    """Small-t fixed-point iteration started from w_0 = 0.

    Iterates

        Delta_0 w_i - w_i / t = Delta_0 w_{i-1} - log((omega_0 + ddbar w_{i-1} + t eta)^n / omega_0^n)

    with eta = ddbar log(omega_0^n / Omega) - psi; a fixed point gives the
    solution u = log(omega_0^n / Omega) + w / t.  ``tol`` applies to u.

    Raises
    ------
    NoContraction
        If a successive-difference ratio reaches 1.
    """
    t = float(t_small)
    if not 0 < t <= t_max:
        raise ValueError(f"bootstrap needs 0 < t <= {t_max}, got {t}")
    geom, gauge = p.geom, p.gauge
    u0 = initial_solution(p.at(0.0))
    omega0 = gauge.omega0
    logdet0 = np.log(geo.det(omega0))
    eta = geo.ddbar(geom, u0) - gauge.psi
    w = np.zeros(geom.grid_shape)
    ratios = []
    prev = None
    for it in range(1, max_iter + 1):
        X = omega0 + geo.ddbar(geom, w) + t * eta
        try:
            geo.require_positive(X)
        except NonPositiveMetric as exc:
            raise NoContraction(float("inf"), it) from exc
        rhs = geo.laplacian(geom, omega0, w) - (np.log(geo.det(X)) - logdet0)
        w_new = solve_shifted_laplace(geom, omega0, t, rhs, tol=tol_lin)
        diff = float(np.max(np.abs(w_new - w)))
        w = w_new
        if prev is not None and prev > 0:
            ratio = diff / prev
            ratios.append(ratio)
            if ratio >= 1.0:
                raise NoContraction(ratio, it)
        prev = diff
        if diff <= tol * t:
            return BootstrapResult(u0 + w / t, w, ratios, it)
    raise NoContraction(ratios[-1] if ratios else float("nan"), max_iter)


# ---------------------------------------------------------------------------
# predictor


def tangent(state: ContinuationState, tol_lin=1e-10) -> np.ndarray:
    """vdot = d(t u)/dt from Delta_t vdot - vdot / t = tr_{omega_t} psi - u / t."""
    p = state.problem
    if not p.t > 0:
        # v = t u so vdot(0) = u(0)
        return state.u.copy()
    g = state.metric_report.metric
    rhs = geo.trace(g, p.gauge.psi) - state.u / p.t
    return solve_shifted_laplace(p.geom, g, p.t, rhs, tol=tol_lin)


def predictor(state: ContinuationState, dt, vdot=None) -> np.ndarray:
    """Euler prediction u(t + dt) = (t u + dt vdot) / (t + dt)."""
    if vdot is None:
        vdot = state.vdot if state.vdot is not None else tangent(state)
    t = state.t
    return (t * state.u + dt * vdot) / (t + dt)


# ---------------------------------------------------------------------------
# stepping


@dataclass
class StepControl:
    dt_min: float
    tol_newton: float = 1e-11
    tol_lin: float = 1e-10
    easy_iters: int = 3
    easy_needed: int = 2


def _try_step(state, dt, ctl: StepControl):
    t_new = state.t + dt
    p_new = state.problem.at(t_new)
    guesses = [predictor(state, dt)]
    if state.t > 0:
        guesses.append(state.u)
    last_exc = None
    for guess in guesses:
        try:
            res = newton_solve(p_new, guess, ctl.tol_newton, tol_lin=ctl.tol_lin)
        except (NewtonStall, NonPositiveMetric, LinearSolveError) as exc:
            last_exc = exc
            continue
        return ContinuationState(p_new, res.u, res.report, res.residual_norm, res.iterations, dt)
    raise last_exc


def extrapolate_T(history) -> float | None:
    """Root of a linear fit of positivity_margin(t) over the last accepted states."""
    pts = [(t, m) for t, m in history if t > 0][-EXTRAPOLATION_WINDOW:]
    if len(pts) < 2:
        return None
    ts, ms = np.array(pts).T
    slope, icpt = np.polyfit(ts, ms, 1)
    if not slope < 0:
        return None
    return float(-icpt / slope)


def advance(state: ContinuationState, dt, ctl: StepControl, history=()):
    """Predictor + Newton corrector at t + dt, halving dt on failure.

    Returns the new accepted state (its ``dt`` holds the step actually used).

    Raises
    ------
    Breakdown
        When dt falls below ``ctl.dt_min``; carries the last good t and the
        positivity margins used for extrapolating T.
    """
    while dt >= ctl.dt_min:
        try:
            return _try_step(state, dt, ctl)
        except (NewtonStall, NonPositiveMetric, LinearSolveError) as exc:
            log.debug("step t=%.9g dt=%.3g rejected: %s", state.t, dt, exc)
            dt *= 0.5
    hist = list(history) or [(state.t, state.metric_report.positivity_margin)]
    raise Breakdown(state.t, [m for _, m in hist], extrapolate_T(hist))


def finish_state(state, cp, tol: monitors.MonitorTolerances, tol_lin=1e-10):
    """Attach the tangent and monitor diagnostics; raise MonitorFailure on hard violations."""
    state.vdot = tangent(state, tol_lin)
    if state.t > 0:
        state.diagnostics = monitors.evaluate(state, state.vdot, cp)
        bad = monitors.hard_failures(state.diagnostics, tol, state.problem.gauge.in_gauge)
        if bad:
            raise MonitorFailure(f"t={state.t:.9g}: " + "; ".join(bad))
    return state


def state_row(state: ContinuationState) -> dict:
    d = state.diagnostics or monitors.MonitorReport()
    return {
        "t": state.t,
        "dt": state.dt,
        "sup_u": float(np.max(state.u)),
        "inf_u": float(np.min(state.u)),
        "residual_norm": state.residual_norm,
        "positivity_margin": state.metric_report.positivity_margin,
        "volume_lhs": d.volume_lhs,
        "volume_rel_err": d.volume_rel_err,
        "ricci_identity_err": d.ricci_identity_err,
        "ricci_min_eig": d.ricci_min_eigenvalue_normalized,
        "trace_C": d.trace_constant_C,
        "c0_gap": d.c0_upper_gap,
        "energy_value": d.energy_value,
        "energy_identity_rel_err": d.energy_identity_rel_err,
        "newton_iters": state.newton_iters,
        # extras kept in memory only
        "c0_abs_gap": d.c0_abs_gap,
        "energy_literal_rel_defect": d.energy_literal_rel_defect,
        "metric_dev_flat": float(np.max(np.abs(state.metric_report.metric - geo.reference_metric(state.problem.geom)))),
    }


def _is_time(a, b):
    return abs(a - b) <= 1e-12 * max(1.0, abs(b))


def run(config, start=None, keep_states=False) -> PathRecord:
    """Continue from t = 0 (or from ``start``) to ``config.t_max`` or breakdown.

    Parameters
    ----------
    config : RunConfig
    start : dict, optional
        Restart data with keys ``t``, ``u`` and optionally ``dt`` and
        ``streak`` (the step-controller state stored in snapshots).
    keep_states : bool
        Keep every accepted :class:`ContinuationState` in ``record.states``.
    """
    geom = config.build_geometry()
    gauge = config.build_gauge(geom)
    cp = class_path(geom, gauge)
    tol = monitors.MonitorTolerances.for_geometry(geom, config.tol_vol, config.tol_disc)
    T_est = cp.T if math.isfinite(cp.T) else 1.0
    tol_newton = DEFAULT_TOL_NEWTON[geom.kind] if config.tol_newton is None else config.tol_newton
    ctl = StepControl(dt_min=1e-9 * max(1.0, T_est), tol_newton=tol_newton, tol_lin=config.tol_lin)

    record = PathRecord(class_data=cp, descriptor=geom.descriptor())
    record.tolerances = {"newton": tol_newton, "lin": config.tol_lin, "vol": tol.vol, "disc": tol.disc}
    if keep_states:
        record.states = []
    p0 = MAProblem(geom, gauge, 0.0)

    if start is None:
        state = finish_state(initial_state(p0), cp, tol, ctl.tol_lin)
        dt_base, streak = config.dt_init, 0
    else:
        t0 = float(start["t"])
        u0 = geo.check_scalar(geom, start["u"]).copy()
        if t0 == 0:
            state = initial_state(p0)
            state.u = u0
        else:
            res = newton_solve(p0.at(t0), u0, tol_newton, tol_lin=config.tol_lin)
            state = ContinuationState(p0.at(t0), res.u, res.report, res.residual_norm, res.iterations)
        state = finish_state(state, cp, tol, ctl.tol_lin)
        dt_base = float(start.get("dt", config.dt_init))
        streak = int(start.get("streak", 0))

    targets = sorted({float(s) for s in config.snapshot_times if s > state.t} | {float(config.t_max)})
    if any(_is_time(state.t, s) for s in config.snapshot_times):
        record.snapshots[state.t] = _snapshot(state, dt_base, streak)
    history = [(state.t, state.metric_report.positivity_margin)]
    if keep_states:
        record.states.append(state)

    try:
        while not state.t >= config.t_max and not _is_time(state.t, config.t_max):
            target = next(s for s in targets if s > state.t and not _is_time(state.t, s))
            dt_req = min(dt_base, target - state.t)
            clipped = dt_req < dt_base
            new = advance(state, dt_req, ctl, history)
            if _is_time(new.t, target) and new.t != target:
                new.problem = new.problem.at(target)
            halved = new.dt < dt_req
            state = finish_state(new, cp, tol, ctl.tol_lin)
            history.append((state.t, state.metric_report.positivity_margin))
            record.rows.append(state_row(state))
            if keep_states:
                record.states.append(state)

            if halved:
                dt_base, streak = new.dt, 0
            elif state.newton_iters <= ctl.easy_iters:
                streak += 1
                if streak >= ctl.easy_needed and not clipped:
                    dt_base, streak = 2.0 * dt_base, 0
            else:
                streak = 0
            for s in config.snapshot_times:
                if _is_time(state.t, s):
                    record.snapshots[float(s)] = _snapshot(state, dt_base, streak)
            if config.bootstrap_check and record.bootstrap is None and state.t > 0:
                record.bootstrap = _bootstrap_check(state, config)
        record.termination = REACHED_TMAX
    except Breakdown as exc:
        record.termination = BREAKDOWN
        record.t_break = exc.t_last
        record.extrapolated_T = exc.extrapolated_T
        record.message = str(exc)
    except (MonitorFailure, NoContraction, NewtonStall, LinearSolveError, NonPositiveMetric) as exc:
        record.termination = ERROR
        record.message = f"{type(exc).__name__}: {exc}"
    record.last_state = state
    return record


def _snapshot(state, dt_base, streak):
    return {"t": state.t, "u": state.u.copy(), "dt": dt_base, "streak": streak,
            "residual_norm": state.residual_norm}


def _bootstrap_check(state, config):
    t = min(state.t, T_BOOTSTRAP_MAX)
    try:
        if t != state.t:
            return {"t": t, "skipped": "first step beyond bootstrap regime"}
        res = picard_bootstrap(state.problem, t)
    except NoContraction as exc:
        return {"t": t, "error": str(exc)}
    return {"t": t, "max_abs_diff": float(np.max(np.abs(res.u - state.u))),
            "ratios": res.ratios, "iterations": res.iterations}
