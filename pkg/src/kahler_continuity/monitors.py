"""A-priori estimates and identities evaluated on accepted path states.

Every function takes a state object exposing ``problem`` (an
:class:`~kahler_continuity.ma_core.MAProblem`), ``u`` and
``metric_report``.  Hard monitors are exact identities and gate the run;
soft monitors are reported only.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import geometry as geo
from .class_tracker import ClassPath, class_path
from .ma_core import background_form

NAN = float("nan")


@dataclass
class MonitorReport:
    c0_upper_gap: float = NAN
    volume_rel_err: float = NAN
    ricci_identity_err: float = NAN
    ricci_min_eigenvalue_normalized: float = NAN
    trace_constant_C: float = NAN
    energy_identity_rel_err: float = NAN
    energy_value: float = NAN
    # extras, not part of series.csv
    volume_lhs: float = NAN
    c0_abs_gap: float = NAN
    energy_literal_rel_defect: float = NAN

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MonitorTolerances:
    disc: float
    vol: float

    @classmethod
    def for_geometry(cls, geom, vol=None, disc=None):
        default_vol = 1e-7 if geom.is_torus else 1e-4
        return cls(geom.tol_disc if disc is None else disc, default_vol if vol is None else vol)


def _background_positive(p):
    bg = background_form(p)
    return bg if np.all(geo.min_eigenvalue(bg) > 0) else None


def check_c0(state) -> float:
    """sup log(omega_tilde_t^n / Omega) - sup u, or NaN when omega_tilde_t is not positive."""
    p = state.problem
    bg = _background_positive(p)
    if bg is None:
        return NAN
    bound = np.max(np.log(geo.det(bg)) - p.gauge.log_omega_density)
    return float(bound - np.max(state.u))


def check_c0_closedness(state) -> float:
    """sup |log(omega_0^n / Omega)| - sup |u|; NaN unless psi = 0 (omega_tilde_t = omega_0)."""
    p = state.problem
    if np.any(p.gauge.psi != 0):
        return NAN
    bound = np.max(np.abs(np.log(geo.det(p.gauge.omega0)) - p.gauge.log_omega_density))
    return float(bound - np.max(np.abs(state.u)))


def volume_lhs(state) -> float:
    p = state.problem
    return geo.integrate(p.geom, np.exp(state.u + p.gauge.log_omega_density))


def check_volume(state, cp: ClassPath | None = None) -> float:
    """|int e^u Omega - V(t)| / V(t)."""
    p = state.problem
    cp = class_path(p.geom, p.gauge) if cp is None else cp
    V = cp.volume(p.t)
    return abs(volume_lhs(state) - V) / V


def check_ricci_identity(state):
    """(normalized sup |Ric(omega_t) - (omega_0 - omega_t)/t|, min eig of t Ric + omega_t against omega_t).

    The first value is normalized by max(1, sup |Ric(omega_t)|) in the
    reference frame.
    """
    p = state.problem
    if not p.t > 0:
        return NAN, NAN
    g = state.metric_report.metric
    ric = geo.ricci_form(p.geom, g)
    target = (p.gauge.omega0 - g) / p.t
    scale = max(1.0, float(np.max(np.abs(ric))))
    err = float(np.max(np.abs(ric - target))) / scale
    lam, _ = geo.relative_eig_extremes(g, p.t * ric + g)
    return err, float(np.min(lam))


def trace_bounds(state) -> float:
    """max(sup tr_{omega_t} omega_tilde_t, sup tr_{omega_tilde_t} omega_t) / n."""
    p = state.problem
    bg = _background_positive(p)
    if bg is None:
        return NAN
    g = state.metric_report.metric
    return float(max(np.max(geo.trace(g, bg)), np.max(geo.trace(bg, g))) / p.geom.n)


def energy_identity(state, vdot):
    """Defect of the integrated tangent identity.

    Returns ``(relative defect, energy, literal relative defect)`` where the
    identity is

        int (|grad vdot|^2 + vdot^2 / t) omega_t^n = int vdot (u / t - tr psi) omega_t^n,

    the energy is int vdot^2 omega_t^n, and the literal defect compares the
    left side with (1/t^2) int vdot u omega_t^n instead (reported, never gated).
    """
    p = state.problem
    if not p.t > 0 or vdot is None:
        return NAN, NAN, NAN
    geom, t, u = p.geom, p.t, state.u
    g = state.metric_report.metric
    grad = geo.dirichlet_pairing(geom, g, vdot, vdot)
    energy = geo.integrate(geom, vdot**2, g)
    lhs = grad + energy / t
    rhs = geo.integrate(geom, vdot * (u / t - geo.trace(g, p.gauge.psi)), g)
    literal = geo.integrate(geom, vdot * u, g) / t**2
    scale = max(abs(lhs), abs(rhs))
    if scale == 0.0:
        return 0.0, energy, 0.0
    lit_scale = max(abs(lhs), abs(literal))
    return abs(lhs - rhs) / scale, energy, abs(lhs - literal) / lit_scale


def evaluate(state, vdot=None, cp: ClassPath | None = None) -> MonitorReport:
    rep = MonitorReport()
    rep.c0_upper_gap = check_c0(state)
    rep.c0_abs_gap = check_c0_closedness(state)
    rep.volume_lhs = volume_lhs(state)
    rep.volume_rel_err = check_volume(state, cp)
    rep.ricci_identity_err, rep.ricci_min_eigenvalue_normalized = check_ricci_identity(state)
    rep.trace_constant_C = trace_bounds(state)
    rep.energy_identity_rel_err, rep.energy_value, rep.energy_literal_rel_defect = energy_identity(state, vdot)
    return rep


def hard_failures(report: MonitorReport, tol: MonitorTolerances, in_gauge=True) -> list:
    """Names of violated hard monitors (identities; NaN means not applicable)."""
    bad = []
    if report.volume_rel_err > tol.vol:
        bad.append(f"volume_rel_err={report.volume_rel_err:.3e} > {tol.vol:.1e}")
    if not math.isnan(report.c0_upper_gap) and report.c0_upper_gap < -tol.disc:
        bad.append(f"c0_upper_gap={report.c0_upper_gap:.3e} < 0")
    if in_gauge:
        if report.ricci_identity_err > tol.disc:
            bad.append(f"ricci_identity_err={report.ricci_identity_err:.3e} > {tol.disc:.1e}")
        if report.ricci_min_eigenvalue_normalized < -tol.disc:
            bad.append(f"ricci_min_eig={report.ricci_min_eigenvalue_normalized:.3e} < 0")
    return bad
