import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_gegenbauer

from qcurv.problem import sphere_volume
from qcurv.spectral import (
    SpectralError,
    SpectralField,
    analyze,
    build_basis,
    build_quadrature,
    paneitz_spectrum,
    plane_radius,
    sphere_height,
    synthesize,
)


def product_formula(n, ell):
    lam = ell * (ell + n - 1)
    if n % 2 == 0:
        return math.prod(lam + k * (n - k - 1) for k in range(n // 2))
    rest = math.prod(lam + k * (n - k - 1) for k in range((n - 1) // 2))
    return math.sqrt(lam + ((n - 1) / 2) ** 2) * rest


def test_paneitz_small_tables():
    np.testing.assert_array_equal(paneitz_spectrum(3, 3).mu, [0, 6, 24, 60])
    np.testing.assert_array_equal(paneitz_spectrum(4, 3).mu, [0, 24, 120, 360])
    np.testing.assert_array_equal(paneitz_spectrum(4, 3).lam, [0, 4, 10, 18])


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_paneitz_matches_products(n):
    sp = paneitz_spectrum(n, 30)
    for ell in range(31):
        assert sp.mu[ell] == pytest.approx(product_formula(n, ell), rel=1e-12, abs=0)
    np.testing.assert_allclose(sp.mu_sqrt ** 2, sp.mu, rtol=1e-12)
    assert np.all(np.diff(sp.mu) > 0)
    assert sp.mu[0] == 0.0


def test_paneitz_n3_is_cubic():
    # n = 3: mu = l(l+1)(l+2) and mu_sqrt^2 = mu
    sp = paneitz_spectrum(3, 10)
    ell = np.arange(11)
    np.testing.assert_allclose(sp.mu, ell * (ell + 1) * (ell + 2), rtol=1e-14)


def test_paneitz_read_only():
    sp = paneitz_spectrum(3, 4)
    with pytest.raises(ValueError):
        sp.mu[1] = 0.0


@pytest.mark.parametrize("n", [3, 4, 5, 8])
def test_quadrature_total_mass(n):
    q = build_quadrature(n, 40)
    assert q.weights.sum() == pytest.approx(sphere_volume(n), rel=1e-12)
    assert np.all(np.abs(q.nodes) < 1)


def test_quadrature_exact_on_polynomials():
    # int_{S^3} t^2 = |S^2| int t^2 (1-t^2)^{1/2} dt = 4 pi * pi/8
    q = build_quadrature(3, 12)
    assert q.integrate(q.nodes ** 2) == pytest.approx(math.pi ** 2 / 2, rel=1e-13)


def test_quadrature_too_small():
    with pytest.raises(SpectralError):
        build_quadrature(3, 1)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_basis_orthonormal(n):
    q = build_quadrature(n, 80)
    b = build_basis(n, 60, q)
    gram = (b.table * q.weights) @ b.table.T
    np.testing.assert_allclose(gram, np.eye(61), atol=1e-11)


def test_basis_is_gegenbauer():
    # zonal harmonics on S^n are Gegenbauer C^{(n-1)/2}_l up to normalization
    n = 4
    q = build_quadrature(n, 30)
    b = build_basis(n, 8, q)
    t = np.linspace(-0.9, 0.9, 11)
    vals = b.evaluate(t)
    for ell in range(9):
        ref = eval_gegenbauer(ell, (n - 1) / 2, t)
        ratio = vals[ell] / ref
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-11)


def test_basis_needs_more_nodes():
    q = build_quadrature(3, 10)
    with pytest.raises(SpectralError):
        build_basis(3, 10, q)


def test_series_matches_table():
    q = build_quadrature(3, 70)
    b = build_basis(3, 50, q)
    a = np.random.default_rng(0).normal(size=51)
    t = np.linspace(-0.999, 0.999, 37)
    np.testing.assert_allclose(b.series(a, t), a @ b.evaluate(t), atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 6), st.integers(0, 40), st.integers(0, 2 ** 31))
def test_round_trip_and_parseval(n, L, seed):
    q = build_quadrature(n, 2 * L + 16)
    b = build_basis(n, L, q)
    a = np.random.default_rng(seed).normal(size=L + 1)
    g = synthesize(SpectralField(a), b)
    np.testing.assert_allclose(analyze(g, b, q).coeffs, a, atol=1e-10)
    assert q.integrate(g.values ** 2) == pytest.approx(float(a @ a), rel=1e-9)


def test_fields_reject_nonfinite():
    with pytest.raises(SpectralError):
        SpectralField(np.array([0.0, np.nan]))
    with pytest.raises(SpectralError):
        SpectralField(np.zeros((2, 2)))


def test_field_embed_and_add():
    a = SpectralField(np.array([1.0, 2.0]))
    e = a.embed(4)
    np.testing.assert_array_equal(e.coeffs, [1, 2, 0, 0, 0])
    np.testing.assert_array_equal((a + a).coeffs, [2, 4])
    assert SpectralField.zeros(3).L == 3


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e6))
def test_stereographic_inverse(r):
    # 1 -/+ t loses digits like r^-2 (resp. r^2) near the poles
    assert plane_radius(sphere_height(r)) == pytest.approx(r, rel=1e-14 * (1 + r * r + 1 / (r * r)))


def test_stereographic_edges():
    assert sphere_height(0.0) == -1.0
    assert sphere_height(np.inf) == 1.0
    with pytest.raises(SpectralError):
        plane_radius(1.0)
    with pytest.raises(SpectralError):
        sphere_height(-1.0)
