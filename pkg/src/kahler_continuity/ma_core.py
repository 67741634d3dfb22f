"""Scalar Monge-Ampère equation (omega_tilde_t + t ddbar u)^n = e^u Omega.

The residual is taken in log form,

    F(u) = log((omega_tilde_t + t ddbar u)^n / Omega) - u,

whose Fréchet derivative is exactly ``t * Delta_{omega(u)} - 1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from . import geometry as geo
from .errors import LinearSolveError, NewtonStall, NonPositiveMetric
from .gauge import Gauge

log = logging.getLogger(__name__)

NEWTON_MAX_ITER = 50
LINE_SEARCH_MAX = 30
TOL_LIN = 1e-10
INNER_RTOL = 1e-7
REFINE_MAX = 8


@dataclass(frozen=True, eq=False)
class MAProblem:
    geom: geo.Geometry
    gauge: Gauge
    t: float

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"path parameter must be >= 0, got {self.t}")

    def at(self, t) -> "MAProblem":
        return MAProblem(self.geom, self.gauge, float(t))


@dataclass(frozen=True, eq=False)
class MetricReport:
    """Assembled metric omega_t with its positivity diagnostics."""

    metric: np.ndarray
    positivity_margin: float
    det_ratio: np.ndarray
    worst_index: tuple


@dataclass
class NewtonResult:
    u: np.ndarray
    iterations: int
    residual_norm: float
    report: MetricReport


def background_form(p: MAProblem) -> np.ndarray:
    """omega_tilde_t = omega_0 - t psi (not required to be positive)."""
    return p.gauge.omega0 - p.t * p.gauge.psi


def metric_of(p: MAProblem, u) -> MetricReport:
    """Assemble omega_t = omega_tilde_t + t ddbar u and check positivity.

    Raises
    ------
    NonPositiveMetric
        If the smallest eigenvalue against the reference metric is <= 0
        anywhere on the grid.
    """
    u = geo.check_scalar(p.geom, u)
    if not np.all(np.isfinite(u)):
        raise ValueError("potential has non-finite entries")
    g = background_form(p)
    if p.t != 0.0:
        g = g + p.t * geo.ddbar(p.geom, u)
    lam = geo.min_eigenvalue(g)
    idx = np.unravel_index(np.argmin(lam), lam.shape)
    margin = float(lam[idx])
    if not margin > 0:
        raise NonPositiveMetric(idx, margin)
    ratio = geo.det(g) * np.exp(-p.gauge.log_omega_density)
    return MetricReport(g, margin, ratio, tuple(int(i) for i in idx))


def _residual(p, u, report):
    return np.log(geo.det(report.metric)) - p.gauge.log_omega_density - u


def ma_residual(p: MAProblem, u) -> np.ndarray:
    """F(u) = log(omega_t^n / Omega) - u."""
    return _residual(p, u, metric_of(p, u))


def apply_linearization(p: MAProblem, u, delta) -> np.ndarray:
    """DF(u)[delta] = t Delta_{omega(u)} delta - delta."""
    g = metric_of(p, u).metric
    return p.t * geo.laplacian(p.geom, g, delta) - delta


# ---------------------------------------------------------------------------
# linear solver


def _torus_symbol(geom, coef):
    """Fourier symbol of f -> tr(coef . ddbar f) for a constant Hermitian coef."""
    m = geom.wave
    s = 0.0
    for j in range(geom.n):
        xj, yj = 2 * j, 2 * j + 1
        for k in range(geom.n):
            xk, yk = 2 * k, 2 * k + 1
            hjk = 0.25 * (m[xj] * m[xk] + m[yj] * m[yk] + 1j * (m[xj] * m[yk] - m[yj] * m[xk]))
            s = s + coef[k, j] * hjk
    return np.real(s)


def _solve_torus(geom, g, t, rhs, rtol, maxiter):
    adj = geo.adjugate(g)
    dg = geo.det(g)
    shape = geom.grid_shape

    def matvec(x):
        v = x.reshape(shape)
        H = geo.ddbar(geom, v)
        lap = np.einsum("...kj,...jk->...", adj, H).real if geom.n > 1 else H[..., 0, 0].real
        return (lap - dg * v / t).ravel()

    symbol = _torus_symbol(geom, adj.reshape(-1, geom.n, geom.n).mean(axis=0)) - dg.mean() / t

    axes = tuple(range(len(shape)))

    def precond(x):
        X = np.fft.rfftn(x.reshape(shape))
        return np.fft.irfftn(X / symbol, s=shape, axes=axes).ravel()

    N = geom.size
    A = spla.LinearOperator((N, N), matvec=matvec, dtype=float)
    P = spla.LinearOperator((N, N), matvec=precond, dtype=float)
    b = (dg * rhs).ravel()
    v, info = spla.gmres(A, b, M=P, rtol=rtol, atol=0.0, restart=60, maxiter=maxiter)
    if info < 0:
        raise LinearSolveError(f"GMRES breakdown (info={info})")
    return v.reshape(shape)


def _solve_sphere(geom, g, t, rhs):
    rho = g[..., 0, 0].real
    c = 2.0 * np.pi / geom.area
    off = c * geom.face_coef / geom.h**2
    diag = -np.concatenate([off, [0.0]]) - np.concatenate([[0.0], off]) - rho / t
    ab = np.zeros((3, geom.grid_shape[0]))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    try:
        return scipy.linalg.solve_banded((1, 1), ab, rho * rhs)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError(f"banded solve failed: {exc}") from exc


def solve_shifted_laplace(geom, g, t, rhs, tol=TOL_LIN, maxiter=20) -> np.ndarray:
    """Solve Delta_g v - v / t = rhs.

    The operator is strictly negative definite, so the solution is unique.
    The equation is multiplied by det g (the volume-weighted form, in which
    the operator is a divergence minus a positive multiple of v).  On the
    torus it is solved by GMRES preconditioned with the constant-coefficient
    operator (inverted by FFT) inside an iterative-refinement loop; on the
    sphere the tridiagonal system is solved directly and refined once.

    ``tol`` bounds the relative residual of the volume-weighted equation.

    Raises
    ------
    LinearSolveError
        If the relative residual does not reach ``tol``.
    """
    if not t > 0:
        raise ValueError("shifted Laplace solve needs t > 0")
    g = geo.check_hermitian(geom, g)
    rhs = geo.check_scalar(geom, rhs)
    weight = geo.det(g)
    b = weight * rhs
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(geom.grid_shape)

    def residual(v):
        return weight * (geo.laplacian(geom, g, v) - v / t) - b

    def correction(r):
        if geom.is_torus:
            return _solve_torus(geom, g, t, r / weight, INNER_RTOL, maxiter)
        return _solve_sphere(geom, g, t, r / weight)

    v = np.zeros(geom.grid_shape)
    r = -b
    for _ in range(REFINE_MAX):
        v = v - correction(r)
        r = residual(v)
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return v
    raise LinearSolveError(f"relative residual {res:.3e} above {tol:.1e}")


# ---------------------------------------------------------------------------
# Newton corrector


def newton_solve(p: MAProblem, u0, tol, tol_lin=TOL_LIN, max_iter=NEWTON_MAX_ITER,
                 max_backtrack=LINE_SEARCH_MAX) -> NewtonResult:
    """Damped Newton iteration for F(u) = 0 at fixed t > 0.

    Each step solves Delta_{omega(u)} delta - delta / t = -F(u) / t and
    backtracks s = 1, 1/2, 1/4, ... until the metric stays positive and
    sup |F| decreases.

    Raises
    ------
    NewtonStall
        When no admissible step exists or the iteration cap is reached.
    NonPositiveMetric
        If the starting point itself is not admissible.
    """
    if not p.t > 0:
        raise ValueError("Newton corrector needs t > 0")
    u = np.array(u0, dtype=float)
    report = metric_of(p, u)
    F = _residual(p, u, report)
    rnorm = float(np.max(np.abs(F)))
    for it in range(max_iter + 1):
        if rnorm <= tol:
            return NewtonResult(u, it, rnorm, report)
        if it == max_iter:
            break
        try:
            delta = solve_shifted_laplace(p.geom, report.metric, p.t, -F / p.t, tol=tol_lin)
        except LinearSolveError as exc:
            raise NewtonStall(f"linear solve failed: {exc}", report.positivity_margin, rnorm, it) from exc
        s = 1.0
        for _ in range(max_backtrack):
            trial = u + s * delta
            try:
                rep = metric_of(p, trial)
            except NonPositiveMetric:
                s *= 0.5
                continue
            Fn = _residual(p, trial, rep)
            rn = float(np.max(np.abs(Fn)))
            if rn < rnorm:
                u, report, F, rnorm = trial, rep, Fn, rn
                break
            s *= 0.5
        else:
            raise NewtonStall("no admissible damped step", report.positivity_margin, rnorm, it)
        log.debug("newton t=%.6g it=%d step=%.3g |F|=%.3e", p.t, it + 1, s, rnorm)
    raise NewtonStall("iteration cap reached", report.positivity_margin, rnorm, max_iter)


def newton_correct(p: MAProblem, u0, tol) -> np.ndarray:
    """Return u with sup |F(u)| <= tol, starting from ``u0``."""
    return newton_solve(p, u0, tol).u
