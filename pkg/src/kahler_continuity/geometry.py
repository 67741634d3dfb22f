"""Discretized model Kähler manifolds and their differential calculus.

Two geometries are supported:

``flat_torus``
    C^n / (Z^n + iZ^n) for n in {1, 2}, sampled on a periodic grid with one
    axis per real coordinate in the order (x1, y1, x2, y2).  Derivatives are
    Fourier multipliers; the Nyquist mode is dropped from every first
    derivative and second derivatives are composed from first derivatives,
    so summation by parts holds exactly on the grid.

``axisym_sphere``
    The round 2-sphere restricted to S^1-invariant data, parametrized by
    x = cos(theta) on a uniform cell-centred grid of M cells.  The
    Laplacian is the conservative stencil for d/dx((1 - x^2) d/dx); the
    coefficient vanishes on the two polar faces so no boundary condition
    is imposed.

Conventions
-----------
A real (1,1)-form is stored as a Hermitian matrix field ``g[..., j, k]``
(the coefficients g_{j kbar}) in a fixed frame in which the reference
metric is the identity.  The volume form of ``g`` is ``det(g) * dV_ref``
where ``dV_ref = omega_ref^n / n!``.  With omega = i g dz ^ dzbar this
makes

* ``ddbar(f)[j, k] = d^2 f / dz_j dzbar_k``; on the torus this is
  1/4 of the real Hessian combination, on the sphere it is half the
  Riemannian Laplacian of the round metric (times the reference frame);
* ``laplacian = tr_g ddbar``, i.e. half the Riemannian Laplace-Beltrami
  operator, with non-positive spectrum;
* ``Ric(omega) = -ddbar log det g + Ric(omega_ref)`` equals the Gauss
  curvature times omega in complex dimension one, so the total Ricci
  integral of the sphere is 4 pi and Ric(round) = (4 pi / A0) omega_round.

The flat unit torus therefore has reference volume 2^n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from .errors import GeometryError, NonPositiveMetric

FLAT_TORUS = "flat_torus"
AXISYM_SPHERE = "axisym_sphere"
KINDS = (FLAT_TORUS, AXISYM_SPHERE)

DEFAULT_TOL_DISC = {FLAT_TORUS: 1e-8, AXISYM_SPHERE: 1e-5}


@dataclass(frozen=True, eq=False)
class Geometry:
    """Immutable discretized manifold with precomputed differentiation data.

    Attributes
    ----------
    kind : str
        ``"flat_torus"`` or ``"axisym_sphere"``.
    n : int
        Complex dimension.
    grid_shape : tuple of int
        Shape of a scalar field on this geometry.
    area : float
        Total reference volume ``int dV_ref`` (A0 for the sphere, 2^n for
        the unit torus).
    """

    kind: str
    n: int
    grid_shape: tuple
    area: float
    tol_disc: float
    # torus: one broadcastable 2*pi*i*k array per real axis (rfft layout)
    wave: tuple = field(default=(), repr=False)
    # sphere: cell centres, face coefficients (1 - x_f^2), cell width
    x: np.ndarray | None = field(default=None, repr=False)
    face_coef: np.ndarray | None = field(default=None, repr=False)
    h: float = field(default=0.0, repr=False)

    @property
    def is_torus(self) -> bool:
        return self.kind == FLAT_TORUS

    @property
    def size(self) -> int:
        return int(np.prod(self.grid_shape))

    @property
    def hermitian_shape(self) -> tuple:
        return self.grid_shape + (self.n, self.n)

    @property
    def ricci_scale(self) -> float:
        """Constant Ricci eigenvalue of the reference metric (0 on the torus)."""
        return 0.0 if self.is_torus else 4.0 * math.pi / self.area

    def descriptor(self) -> dict:
        grid = list(self.grid_shape)
        return {"kind": self.kind, "n": self.n, "grid": grid, "area": self.area}

    def coords(self):
        """Grid coordinates: real axes (torus, in [0, 1)) or cell centres x (sphere)."""
        if not self.is_torus:
            return (self.x,)
        axes = [np.arange(N) / N for N in self.grid_shape]
        return tuple(np.meshgrid(*axes, indexing="ij"))


def build_geometry(kind, n=1, grid=64, area=None, tol_disc=None) -> Geometry:
    """Construct a :class:`Geometry`.

    Parameters
    ----------
    kind : str
        ``"flat_torus"`` or ``"axisym_sphere"``.
    n : int
        Complex dimension; 1 or 2 on the torus, 1 on the sphere.
    grid : int or sequence of int
        Torus: points per real axis (a single int is repeated over all 2n
        axes), each even and >= 8.  Sphere: number of cells M >= 8.
    area : float, optional
        Sphere only: total area A0 of the round reference metric
        (default 4 pi).
    """
    if kind not in KINDS:
        raise GeometryError(f"unknown geometry kind {kind!r}")
    n = int(n)
    tol = DEFAULT_TOL_DISC[kind] if tol_disc is None else float(tol_disc)

    if kind == FLAT_TORUS:
        if n not in (1, 2):
            raise GeometryError(f"torus supports complex dimension 1 or 2, got {n}")
        shape = (int(grid),) * (2 * n) if np.isscalar(grid) else tuple(int(N) for N in grid)
        if len(shape) != 2 * n:
            raise GeometryError(f"torus of dimension {n} needs {2 * n} grid sizes, got {len(shape)}")
        for N in shape:
            if N < 8 or N % 2:
                raise GeometryError(f"torus grid sizes must be even and >= 8, got {N}")
        if area is not None and not math.isclose(float(area), 2.0**n):
            raise GeometryError("the torus lattice is fixed; its reference volume is 2^n")
        wave = []
        for a, N in enumerate(shape):
            last = a == len(shape) - 1
            k = np.fft.rfftfreq(N, 1.0 / N) if last else np.fft.fftfreq(N, 1.0 / N)
            k = k.copy()
            k[np.abs(k) == N // 2] = 0.0
            bshape = [1] * len(shape)
            bshape[a] = k.size
            m = (2j * np.pi * k).reshape(bshape)
            m.setflags(write=False)
            wave.append(m)
        return Geometry(FLAT_TORUS, n, shape, 2.0**n, tol, wave=tuple(wave))

    if n != 1:
        raise GeometryError("the axisymmetric sphere has complex dimension 1")
    M = int(grid if np.isscalar(grid) else grid[0])
    if M < 8:
        raise GeometryError(f"sphere grid needs at least 8 cells, got {M}")
    A0 = 4.0 * math.pi if area is None else float(area)
    if not (A0 > 0 and math.isfinite(A0)):
        raise GeometryError(f"sphere area must be positive, got {area}")
    h = 2.0 / M
    x = -1.0 + h * (np.arange(M) + 0.5)
    faces = -1.0 + h * np.arange(1, M)
    coef = 1.0 - faces**2
    x.setflags(write=False)
    coef.setflags(write=False)
    return Geometry(AXISYM_SPHERE, 1, (M,), A0, tol, x=x, face_coef=coef, h=h)


def from_descriptor(desc: dict) -> Geometry:
    grid = desc["grid"]
    if isinstance(grid, (list, tuple)) and desc["kind"] == AXISYM_SPHERE:
        grid = grid[0]
    area = desc.get("area") if desc["kind"] == AXISYM_SPHERE else None
    return build_geometry(desc["kind"], desc.get("n", 1), grid, area)


# ---------------------------------------------------------------------------
# field helpers


def check_scalar(geom: Geometry, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != geom.grid_shape:
        raise GeometryError(f"scalar field shape {f.shape} does not match grid {geom.grid_shape}")
    return f


def check_hermitian(geom: Geometry, g) -> np.ndarray:
    g = np.asarray(g)
    if g.shape != geom.hermitian_shape:
        raise GeometryError(f"Hermitian field shape {g.shape} does not match {geom.hermitian_shape}")
    return g


def scalar_to_form(geom: Geometry, rho) -> np.ndarray:
    """The form rho * omega_ref for a scalar field rho."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros(geom.hermitian_shape, dtype=complex)
    for j in range(geom.n):
        out[..., j, j] = rho
    return out


def reference_metric(geom: Geometry) -> np.ndarray:
    return scalar_to_form(geom, np.ones(geom.grid_shape))


def reference_ricci(geom: Geometry) -> np.ndarray:
    """Ricci form of the reference metric (zero on the torus)."""
    return scalar_to_form(geom, np.full(geom.grid_shape, geom.ricci_scale))


def det(g) -> np.ndarray:
    """Pointwise determinant of a Hermitian field (real)."""
    n = g.shape[-1]
    if n == 1:
        return g[..., 0, 0].real.copy()
    return (g[..., 0, 0].real * g[..., 1, 1].real - np.abs(g[..., 0, 1]) ** 2)


def inverse(g) -> np.ndarray:
    n = g.shape[-1]
    if n == 1:
        return 1.0 / g
    d = det(g)
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1] / d
    out[..., 1, 1] = g[..., 0, 0] / d
    out[..., 0, 1] = -g[..., 0, 1] / d
    out[..., 1, 0] = -g[..., 1, 0] / d
    return out


def adjugate(g) -> np.ndarray:
    n = g.shape[-1]
    if n == 1:
        return np.ones_like(g)
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1]
    out[..., 1, 1] = g[..., 0, 0]
    out[..., 0, 1] = -g[..., 0, 1]
    out[..., 1, 0] = -g[..., 1, 0]
    return out


def eig_extremes(g):
    """Pointwise (smallest, largest) eigenvalue of a Hermitian field."""
    n = g.shape[-1]
    if n == 1:
        lam = g[..., 0, 0].real
        return lam, lam
    a = g[..., 0, 0].real
    d = g[..., 1, 1].real
    mid = 0.5 * (a + d)
    rad = np.sqrt(0.25 * (a - d) ** 2 + np.abs(g[..., 0, 1]) ** 2)
    return mid - rad, mid + rad


def min_eigenvalue(g) -> np.ndarray:
    return eig_extremes(g)[0]


def relative_eig_extremes(gA, gB):
    """Pointwise extreme eigenvalues of gB measured against gA (gA > 0)."""
    if gA.shape[-1] == 1:
        lam = gB[..., 0, 0].real / gA[..., 0, 0].real
        return lam, lam
    # gA^{-1/2} gB gA^{-1/2} has the same spectrum as gA^{-1} gB
    m = inverse(gA) @ gB
    tr = np.trace(m, axis1=-2, axis2=-1).real
    dt = np.linalg.det(m).real
    rad = np.sqrt(np.maximum(0.25 * tr**2 - dt, 0.0))
    return 0.5 * tr - rad, 0.5 * tr + rad


def require_positive(g, what="metric"):
    """Raise NonPositiveMetric if ``g`` is not pointwise positive definite."""
    lam = min_eigenvalue(g)
    idx = np.unravel_index(np.argmin(lam), lam.shape)
    if not lam[idx] > 0:
        raise NonPositiveMetric(idx, lam[idx])
    return float(lam[idx])


# ---------------------------------------------------------------------------
# differential operators


def _torus_transform(geom, f):
    return np.fft.rfftn(f)


def _torus_inverse(geom, F):
    return np.fft.irfftn(F, s=geom.grid_shape, axes=tuple(range(len(geom.grid_shape))))


def _torus_real_hessian(geom, f):
    F = _torus_transform(geom, f)
    m = geom.wave
    out = {}
    for a in range(len(m)):
        for b in range(a, len(m)):
            out[a, b] = out[b, a] = _torus_inverse(geom, F * (m[a] * m[b]))
    return out


def _sphere_stencil(geom, f):
    """Conservative d/dx((1 - x^2) df/dx) on cell centres."""
    flux = geom.face_coef * np.diff(f) / geom.h
    out = np.zeros_like(f)
    out[:-1] += flux
    out[1:] -= flux
    return out / geom.h


def ddbar(geom: Geometry, f) -> np.ndarray:
    """Complex Hessian d^2 f / dz_j dzbar_k as a Hermitian field."""
    f = check_scalar(geom, f)
    out = np.zeros(geom.hermitian_shape, dtype=complex)
    if not geom.is_torus:
        out[..., 0, 0] = (2.0 * math.pi / geom.area) * _sphere_stencil(geom, f)
        return out
    D = _torus_real_hessian(geom, f)
    for j in range(geom.n):
        xj, yj = 2 * j, 2 * j + 1
        out[..., j, j] = 0.25 * (D[xj, xj] + D[yj, yj])
        for k in range(j + 1, geom.n):
            xk, yk = 2 * k, 2 * k + 1
            z = 0.25 * ((D[xj, xk] + D[yj, yk]) + 1j * (D[xj, yk] - D[yj, xk]))
            out[..., j, k] = z
            out[..., k, j] = np.conj(z)
    return out


def dbar_components(geom: Geometry, f):
    """Holomorphic derivatives df/dz_j on the torus (list of complex arrays)."""
    F = _torus_transform(geom, f)
    m = geom.wave
    return [0.5 * (_torus_inverse(geom, F * m[2 * j]) - 1j * _torus_inverse(geom, F * m[2 * j + 1]))
            for j in range(geom.n)]


def ricci_form(geom: Geometry, g) -> np.ndarray:
    """Ricci form -ddbar log det g plus the reference-frame curvature."""
    g = check_hermitian(geom, g)
    require_positive(g)
    return reference_ricci(geom) - ddbar(geom, np.log(det(g)))


def trace(gA, gB) -> np.ndarray:
    """Pointwise tr(gA^{-1} gB)."""
    if gA.shape[-1] == 1:
        return gB[..., 0, 0].real / gA[..., 0, 0].real
    return np.einsum("...ij,...ji->...", inverse(gA), gB).real


def laplacian(geom: Geometry, g, f) -> np.ndarray:
    """Delta_g f = tr_g ddbar f (non-positive spectrum)."""
    return trace(check_hermitian(geom, g), ddbar(geom, f))


def integrate(geom: Geometry, f, g=None) -> float:
    """Integral of ``f`` against the volume form of ``g`` (reference if None)."""
    f = check_scalar(geom, f)
    w = f if g is None else f * det(check_hermitian(geom, g))
    if geom.is_torus:
        return float(geom.area * np.mean(w))
    return float(0.5 * geom.area * geom.h * np.sum(w))


def dirichlet_pairing(geom: Geometry, g, f, h) -> float:
    """Integral of <grad f, grad h>_g against the volume form of g.

    Normalized so that ``integrate(f * laplacian(g, h), g) = -dirichlet_pairing``.
    """
    f = check_scalar(geom, f)
    h = check_scalar(geom, h)
    if not geom.is_torus:
        # conformally invariant in complex dimension one: g drops out
        return float(math.pi * np.sum(geom.face_coef * np.diff(f) * np.diff(h)) / geom.h)
    g = check_hermitian(geom, g)
    df = dbar_components(geom, f)
    dh = dbar_components(geom, h)
    if geom.n == 1:
        dens = (df[0] * np.conj(dh[0])).real
    else:
        adj = adjugate(g)
        dens = sum(adj[..., k, j] * df[j] * np.conj(dh[k]) for j in range(2) for k in range(2)).real
    return float(geom.area * np.mean(dens))


def mode_field(geom: Geometry, modes) -> np.ndarray:
    """Smooth scalar field from a finite list of modes.

    Torus modes are ``(k_1, ..., k_2n, a_cos, a_sin)`` and contribute
    ``a_cos cos(2 pi k.x) + a_sin sin(2 pi k.x)``.  Sphere modes are
    ``(l, a)`` and contribute ``a P_l(x)``.
    """
    f = np.zeros(geom.grid_shape)
    if not geom.is_torus:
        for mode in modes:
            ell, amp = int(mode[0]), float(mode[1])
            c = np.zeros(ell + 1)
            c[ell] = amp
            f += legendre.legval(geom.x, c)
        return f
    X = geom.coords()
    dim = len(X)
    for mode in modes:
        if len(mode) != dim + 2:
            raise GeometryError(f"torus mode needs {dim} wave numbers and two amplitudes: {mode!r}")
        phase = 2.0 * math.pi * sum(float(k) * x for k, x in zip(mode[:dim], X))
        f += float(mode[dim]) * np.cos(phase) + float(mode[dim + 1]) * np.sin(phase)
    return f
