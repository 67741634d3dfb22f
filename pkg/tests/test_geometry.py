import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kahler_continuity import geometry as geo
from kahler_continuity.errors import GeometryError, NonPositiveMetric

PI = math.pi


@pytest.fixture(scope="module")
def torus():
    return geo.build_geometry(geo.FLAT_TORUS, 1, 32)


@pytest.fixture(scope="module")
def torus2():
    return geo.build_geometry(geo.FLAT_TORUS, 2, 8)


@pytest.fixture(scope="module")
def sphere():
    return geo.build_geometry(geo.AXISYM_SPHERE, 1, 128, 4 * PI)


def test_build_rejects_bad_input():
    with pytest.raises(GeometryError):
        geo.build_geometry("klein_bottle")
    with pytest.raises(GeometryError):
        geo.build_geometry(geo.FLAT_TORUS, 1, 31)
    with pytest.raises(GeometryError):
        geo.build_geometry(geo.FLAT_TORUS, 3, 8)
    with pytest.raises(GeometryError):
        geo.build_geometry(geo.FLAT_TORUS, 1, 32, area=3.0)
    with pytest.raises(GeometryError):
        geo.build_geometry(geo.AXISYM_SPHERE, 1, 4)
    with pytest.raises(GeometryError):
        geo.build_geometry(geo.AXISYM_SPHERE, 2, 64)
    with pytest.raises(GeometryError):
        geo.build_geometry(geo.AXISYM_SPHERE, 1, 64, area=-1.0)


def test_descriptor_round_trip(torus, sphere):
    for g in (torus, sphere):
        back = geo.from_descriptor(g.descriptor())
        assert back.descriptor() == g.descriptor()
    assert sphere.descriptor() == {"kind": "axisym_sphere", "n": 1, "grid": [128], "area": 4 * PI}


def test_shape_checks(torus):
    with pytest.raises(GeometryError):
        geo.check_scalar(torus, np.zeros((16, 16)))
    with pytest.raises(GeometryError):
        geo.check_hermitian(torus, np.zeros((32, 32, 2, 2)))


def test_ddbar_single_mode_torus(torus):
    X, Y = torus.coords()
    f = np.cos(2 * PI * X)
    H = geo.ddbar(torus, f)
    # (1/4)(d_xx + d_yy) cos(2 pi x) = -pi^2 cos(2 pi x)
    np.testing.assert_allclose(H[..., 0, 0].real, -PI**2 * f, atol=1e-11)
    np.testing.assert_allclose(H[..., 0, 0].imag, 0.0, atol=1e-12)
    g = np.cos(2 * PI * (X + Y))
    np.testing.assert_allclose(geo.ddbar(torus, g)[..., 0, 0].real, -2 * PI**2 * g, atol=1e-10)


def test_ddbar_off_diagonal_n2(torus2):
    x1, y1, x2, y2 = torus2.coords()
    f = np.cos(2 * PI * (x1 + x2))
    H = geo.ddbar(torus2, f)
    for j in range(2):
        for k in range(2):
            np.testing.assert_allclose(H[..., j, k].real, -PI**2 * f, atol=1e-11)
            np.testing.assert_allclose(H[..., j, k].imag, 0.0, atol=1e-11)
    # Hermitian
    np.testing.assert_allclose(H[..., 0, 1], np.conj(H[..., 1, 0]), atol=1e-12)


def test_ddbar_constant_is_zero(torus, sphere):
    for g in (torus, sphere):
        assert np.max(np.abs(geo.ddbar(g, np.full(g.grid_shape, 7.5)))) == 0.0


def test_sphere_first_harmonic_exact(sphere):
    # x = cos(theta) is a first harmonic: Delta x = -(4 pi / A0) x, exactly on the grid
    lap = geo.laplacian(sphere, geo.reference_metric(sphere), sphere.x)
    np.testing.assert_allclose(lap, -sphere.ricci_scale * sphere.x, atol=1e-11)


def test_sphere_second_harmonic_converges():
    errs = []
    for M in (64, 128, 256):
        s = geo.build_geometry(geo.AXISYM_SPHERE, 1, M, 4 * PI)
        p2 = 1.5 * s.x**2 - 0.5
        lap = geo.laplacian(s, geo.reference_metric(s), p2)
        errs.append(np.max(np.abs(lap + 3.0 * p2)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(o > 0.9 for o in orders), orders


def test_integrate(torus, torus2, sphere):
    X, _ = torus.coords()
    assert geo.integrate(torus, np.ones(torus.grid_shape)) == pytest.approx(2.0, abs=1e-14)
    assert geo.integrate(torus2, np.ones(torus2.grid_shape)) == pytest.approx(4.0, abs=1e-14)
    assert geo.integrate(torus, np.cos(2 * PI * X)) == pytest.approx(0.0, abs=1e-14)
    # midpoint rule for x^2 on [-1, 1] gives 2/3 - h^2/6; total area factor A0/2
    h = 2.0 / 128
    assert geo.integrate(sphere, sphere.x**2) == pytest.approx(2 * PI * (2 / 3 - h**2 / 6), rel=1e-13)
    assert geo.integrate(sphere, np.ones(128)) == pytest.approx(4 * PI, rel=1e-14)


def test_integrate_with_metric_weight(torus):
    g = geo.scalar_to_form(torus, np.full(torus.grid_shape, 3.0))
    assert geo.integrate(torus, np.ones(torus.grid_shape), g) == pytest.approx(6.0, rel=1e-14)


def test_divergence_free_laplacian(torus, torus2, sphere):
    rng = np.random.default_rng(1)
    for geom, phi_modes, f_modes in (
        (torus, [(1, 0, 0.02, 0.0), (0, 2, 0.005, 0.003)], [(1, 1, 1.0, 0.3), (2, -1, 0.2, 0.0)]),
        (torus2, [(1, 0, 0, 0, 0.01, 0.0), (0, 1, 1, 0, 0.0, 0.005)], [(1, 0, 1, 1, 0.5, 0.4)]),
    ):
        g = geo.reference_metric(geom) + geo.ddbar(geom, geo.mode_field(geom, phi_modes))
        geo.require_positive(g)
        f = geo.mode_field(geom, f_modes) * rng.normal()
        assert abs(geo.integrate(geom, geo.laplacian(geom, g, f), g)) < 1e-12
    rho = np.exp(0.3 * sphere.x)
    g = geo.scalar_to_form(sphere, rho)
    assert abs(geo.integrate(sphere, geo.laplacian(sphere, g, sphere.x**3), g)) < 1e-12


def test_integration_by_parts(torus, torus2, sphere):
    cases = [
        (torus, [(1, 0, 0.02, 0.0)], [(1, 1, 1.0, 0.3)], [(0, 1, 0.4, -0.2), (2, 1, 0.1, 0.0)]),
        (torus2, [(1, 0, 1, 0, 0.01, 0.0)], [(1, 0, 1, 1, 0.5, 0.4)], [(0, 1, 0, 1, 0.3, 0.0)]),
    ]
    for geom, phi, fm, hm in cases:
        g = geo.reference_metric(geom) + geo.ddbar(geom, geo.mode_field(geom, phi))
        f, h = geo.mode_field(geom, fm), geo.mode_field(geom, hm)
        lhs = geo.integrate(geom, f * geo.laplacian(geom, g, h), g)
        assert lhs == pytest.approx(-geo.dirichlet_pairing(geom, g, f, h), abs=1e-12)
        assert geo.dirichlet_pairing(geom, g, f, h) == pytest.approx(geo.dirichlet_pairing(geom, g, h, f), abs=1e-12)
    g = geo.scalar_to_form(sphere, 1.0 + 0.2 * sphere.x**2)
    f, h = np.sin(sphere.x), sphere.x**2
    lhs = geo.integrate(sphere, f * geo.laplacian(sphere, g, h), g)
    assert lhs == pytest.approx(-geo.dirichlet_pairing(sphere, g, f, h), abs=1e-12)


def test_gauss_bonnet_conformal(sphere):
    for rho in (np.exp(0.2 * sphere.x + 0.1 * sphere.x**3), 2.0 + sphere.x**2, np.full(128, 0.25)):
        g = geo.scalar_to_form(sphere, rho)
        ric = geo.ricci_form(sphere, g)
        assert geo.integrate(sphere, ric[..., 0, 0].real) == pytest.approx(4 * PI, abs=1e-12)


def test_ricci_scaling(sphere, torus):
    # Ric(c omega) = Ric(omega)
    ric = geo.ricci_form(sphere, geo.scalar_to_form(sphere, np.full(128, 3.0)))
    np.testing.assert_allclose(ric[..., 0, 0].real, 1.0, atol=1e-12)
    assert np.max(np.abs(geo.ricci_form(torus, geo.reference_metric(torus)))) == 0.0
    big = geo.build_geometry(geo.AXISYM_SPHERE, 1, 64, 8 * PI)
    np.testing.assert_allclose(geo.reference_ricci(big)[..., 0, 0].real, 0.5)


def test_ricci_of_conformal_torus(torus):
    X, _ = torus.coords()
    logrho = 0.1 * np.cos(2 * PI * X)
    ric = geo.ricci_form(torus, geo.scalar_to_form(torus, np.exp(logrho)))
    # Ric = -ddbar log rho = 0.1 pi^2 cos(2 pi x)
    np.testing.assert_allclose(ric[..., 0, 0].real, 0.1 * PI**2 * np.cos(2 * PI * X), atol=1e-11)


def test_linear_algebra_n2():
    g = np.array([[2.0, 1 + 1j], [1 - 1j, 3.0]], dtype=complex)
    assert geo.det(g) == pytest.approx(4.0)
    np.testing.assert_allclose(geo.inverse(g) @ g, np.eye(2), atol=1e-14)
    lo, hi = geo.eig_extremes(g)
    np.testing.assert_allclose([lo, hi], np.linalg.eigvalsh(g), atol=1e-14)
    lo, hi = geo.relative_eig_extremes(g, 2 * g)
    assert lo == pytest.approx(2.0) and hi == pytest.approx(2.0)


def test_require_positive_reports_index(torus):
    g = geo.reference_metric(torus).copy()
    g[3, 5, 0, 0] = -0.5
    with pytest.raises(NonPositiveMetric) as info:
        geo.require_positive(g)
    assert info.value.index == (3, 5)
    assert info.value.margin == -0.5


def test_mode_field(torus, sphere):
    X, Y = torus.coords()
    f = geo.mode_field(torus, [(1, 2, 0.5, -0.25)])
    np.testing.assert_allclose(f, 0.5 * np.cos(2 * PI * (X + 2 * Y)) - 0.25 * np.sin(2 * PI * (X + 2 * Y)), atol=1e-14)
    np.testing.assert_allclose(geo.mode_field(sphere, [(2, 2.0)]), 3 * sphere.x**2 - 1, atol=1e-14)
    with pytest.raises(GeometryError):
        geo.mode_field(torus, [(1, 0.5)])


_coef = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(a=_coef, b=_coef, c=_coef, d=_coef, s=st.floats(-3, 3))
def test_laplacian_linear(a, b, c, d, s):
    geom = geo.build_geometry(geo.FLAT_TORUS, 1, 16)
    g = geo.reference_metric(geom) + geo.ddbar(geom, geo.mode_field(geom, [(1, 0, 0.02, 0.0)]))
    f = geo.mode_field(geom, [(1, 1, a, b)])
    h = geo.mode_field(geom, [(0, 2, c, d)])
    lhs = geo.laplacian(geom, g, f + s * h)
    rhs = geo.laplacian(geom, g, f) + s * geo.laplacian(geom, g, h)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(coefs=st.lists(_coef, min_size=4, max_size=4))
def test_sphere_ddbar_integrates_to_zero(coefs):
    geom = geo.build_geometry(geo.AXISYM_SPHERE, 1, 32)
    f = geo.mode_field(geom, [(ell + 1, c) for ell, c in enumerate(coefs)])
    assert abs(geo.integrate(geom, geo.ddbar(geom, f)[..., 0, 0].real)) < 1e-12
