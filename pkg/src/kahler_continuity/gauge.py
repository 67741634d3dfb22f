"""Gauge data (psi, Omega) fixing the scalar Monge-Ampère reduction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import GaugeError, NonPositiveMetric


@dataclass(frozen=True, eq=False)
class Gauge:
    """Representative psi of c_1 together with a volume form Omega.

    ``log_omega_density`` is log(Omega / dV_ref).  ``phi0`` is the
    potential of the initial metric: omega_0 = omega_ref + ddbar phi0.
    ``in_gauge`` is False for manufactured data where Ric(Omega) = psi is
    deliberately not imposed.
    """

    psi: np.ndarray
    log_omega_density: np.ndarray
    phi0: np.ndarray
    omega0: np.ndarray
    in_gauge: bool = True

    def consistency_error(self, geom) -> float:
        """sup |psi - Ric(Omega)| in the reference frame."""
        ric_omega = geo.reference_ricci(geom) - geo.ddbar(geom, self.log_omega_density)
        return float(np.max(np.abs(self.psi - ric_omega)))


def make_gauge(geom, psi, log_omega_density, phi0=None, check=True, tol=None) -> Gauge:
    """Assemble and validate a gauge.

    Raises
    ------
    GaugeError
        If omega_0 is not positive, or (with ``check``) if Ric(Omega)
        differs from psi by more than ``tol`` (default ``geom.tol_disc``).
    """
    phi0 = np.zeros(geom.grid_shape) if phi0 is None else geo.check_scalar(geom, phi0)
    psi = geo.check_hermitian(geom, np.asarray(psi, dtype=complex))
    logd = geo.check_scalar(geom, log_omega_density)
    if not np.all(np.isfinite(logd)) or not np.all(np.isfinite(psi)):
        raise GaugeError("gauge data must be finite")
    omega0 = geo.reference_metric(geom) + geo.ddbar(geom, phi0)
    try:
        geo.require_positive(omega0)
    except NonPositiveMetric as exc:
        raise GaugeError(f"omega_0 is not positive definite (margin {exc.margin:.3e})") from exc
    for arr in (psi, logd, phi0, omega0):
        arr.setflags(write=False)
    gauge = Gauge(psi, logd, phi0, omega0, in_gauge=check)
    if check:
        err = gauge.consistency_error(geom)
        tol = geom.tol_disc if tol is None else tol
        if err > tol:
            raise GaugeError(f"Ric(Omega) != psi: error {err:.3e} exceeds {tol:.1e}")
    return gauge


def default_gauge(geom, phi0=None) -> Gauge:
    """Working gauge for each geometry.

    Torus: psi = 0 and Omega = flat volume (c_1 = 0).  Sphere:
    psi = Ric(omega_0) and Omega = omega_0-volume, so that u(0) = 0.
    """
    phi0 = np.zeros(geom.grid_shape) if phi0 is None else geo.check_scalar(geom, phi0)
    if geom.is_torus:
        return make_gauge(geom, np.zeros(geom.hermitian_shape, dtype=complex),
                          np.zeros(geom.grid_shape), phi0)
    omega0 = geo.reference_metric(geom) + geo.ddbar(geom, phi0)
    try:
        geo.require_positive(omega0)
    except NonPositiveMetric as exc:
        raise GaugeError(f"omega_0 is not positive definite (margin {exc.margin:.3e})") from exc
    return make_gauge(geom, geo.ricci_form(geom, omega0), np.log(geo.det(omega0)), phi0)


def shifted_gauge(geom, gauge: Gauge, v) -> Gauge:
    """Gauge change psi -> psi - ddbar v, Omega -> e^v Omega.

    A solution u for ``gauge`` becomes u - v for the shifted gauge, with
    the same metric omega_t and the same total int e^u Omega.
    """
    v = geo.check_scalar(geom, v)
    return make_gauge(geom, gauge.psi - geo.ddbar(geom, v), gauge.log_omega_density + v,
                      gauge.phi0, check=gauge.in_gauge)


def manufactured_gauge(geom, gauge: Gauge, t, u_star) -> Gauge:
    """Out-of-gauge data whose exact discrete solution at ``t`` is ``u_star``.

    Omega* := (omega_tilde_t + t ddbar u*)^n e^{-u*}; psi is kept, so
    Ric(Omega*) = psi generally fails.
    """
    from .ma_core import MAProblem, metric_of  # local: ma_core depends on this module

    rep = metric_of(MAProblem(geom, gauge, t), u_star)
    logd = np.log(geo.det(rep.metric)) - u_star
    return make_gauge(geom, gauge.psi, logd, gauge.phi0, check=False)
