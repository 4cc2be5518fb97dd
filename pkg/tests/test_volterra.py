import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cllfokas.core import SIGMA3, lam_of, theta_density
from cllfokas.errors import IllConditionedFit, OutOfDomain, RegionViolation
from cllfokas.volterra import (
    LADDER_RAYS,
    WHICH,
    asymptotic_coeffs,
    build_A1,
    build_B1,
    fit_parity,
    ladder,
    solve_H,
    t_leg,
)

small = st.floats(-1, 1, allow_nan=False)
cplx = st.builds(complex, small, small)


def _bracket(a, b):
    return a @ b - b @ a


def _zero_curvature(r, rz, rzz, k, theta, form="compatible", pde_sign=1.0):
    """|D_t A1 - D_z B1 + [A1, B1]| at a point, derivatives by the chain rule.

    ``pde_sign=-1`` replaces the flow term |r|^2 r_z by -i |r|^2 r_z.
    """
    m2 = abs(r) ** 2
    drift = m2 * rz if pde_sign > 0 else -1j * m2 * rz
    rt = 1j * rzz + 1j * m2 * r + drift
    th1, th2 = theta_density(r, rz)
    eps = 1e-5
    A = lambda s: build_A1(r + s * rt, k, theta + s * th2, form)
    B = lambda s: build_B1(r + s * rz, rz + s * rzz, k, theta + s * th1, form)
    At = (A(eps) - A(-eps)) / (2 * eps)
    Bz = (B(eps) - B(-eps)) / (2 * eps)
    A0, B0 = A(0.0), B(0.0)
    lam = complex(lam_of(k))
    DtA = At + 2j * lam**2 * _bracket(SIGMA3, A0)
    DzB = Bz - 1j * lam * _bracket(SIGMA3, B0)
    scale = 1 + abs(k) ** 4
    return np.abs(DtA - DzB + _bracket(A0, B0)).max() / scale


@settings(max_examples=60, deadline=None)
@given(cplx, cplx, cplx, cplx, st.floats(-3, 3))
def test_zero_curvature_compatible_form(r, rz, rzz, k, theta):
    k = k + 0.1
    assert _zero_curvature(r, rz, rzz, k, theta) < 1e-7


def test_zero_curvature_rejects_printed_variants():
    r, rz, rzz, k, theta = 0.4 + 0.2j, -0.3 + 0.1j, 0.2 - 0.5j, 0.9 + 0.3j, 0.7
    assert _zero_curvature(r, rz, rzz, k, theta) < 1e-8
    assert _zero_curvature(r, rz, rzz, k, theta, form="printed") > 1e-2
    assert _zero_curvature(r, rz, rzz, k, theta, pde_sign=-1.0) > 1e-2


def test_lax_matrices_traceless():
    r, rz, k, th = 0.3 - 0.1j, 0.2j, 1.3 - 0.2j, 0.4
    assert abs(np.trace(build_A1(r, k, th))) < 1e-15
    assert abs(np.trace(build_B1(r, rz, k, th))) < 1e-15
    with pytest.raises(ValueError):
        build_A1(r, k, th, form="other")


@pytest.mark.parametrize("which", WHICH)
def test_zero_field_gives_identity(zero_small, which):
    H = solve_H(which, zero_small, 3.0, 0.5, np.array([0.7, 2.0 + 0.1j])).H
    np.testing.assert_array_equal(H, np.broadcast_to(np.eye(2), H.shape))


@pytest.mark.parametrize("which", WHICH)
def test_unimodular(gauss_small, which, rng):
    for _ in range(4):
        z, t = rng.uniform(0, 12), rng.uniform(0, 1)
        lam = rng.uniform(-3, 3, 6) + 1j * rng.uniform(-0.25, 0.25, 6)
        e = solve_H(which, gauss_small, z, t, np.sqrt(lam + 0.5))
        assert e.det_err.max() < 1e-7


@pytest.mark.parametrize("which", WHICH)
def test_parity_in_k(gauss_small, which):
    # H(-k) = sigma3 H(k) sigma3 since k enters only through k r and k^2
    k = np.array([0.8 + 0.05j, 1.9 - 0.1j])
    a = solve_H(which, gauss_small, 1.3, 0.6, k).H
    b = solve_H(which, gauss_small, 1.3, 0.6, -k).H
    np.testing.assert_allclose(b, SIGMA3 @ a @ SIGMA3, atol=1e-13)


def test_normalisation_at_base_points(gauss_small):
    k = np.array([0.9 + 0.01j])
    np.testing.assert_array_equal(solve_H("H3", gauss_small, 12.0, 0.3, k).H[0], np.eye(2))
    np.testing.assert_array_equal(solve_H("H1", gauss_small, 0.0, 0.0, k).H[0], np.eye(2))
    np.testing.assert_array_equal(solve_H("H2", gauss_small, 0.0, 1.0, k).H[0], np.eye(2))


def test_region_and_domain_guards(gauss_small):
    with pytest.raises(RegionViolation):
        # column 2 of H3 grows like exp(2 Im(lam) (Z - z))
        solve_H("H3", gauss_small, 0.0, 0.0, np.sqrt(np.array([3j + 0.5])), columns=(1,))
    with pytest.raises(OutOfDomain):
        solve_H("H1", gauss_small, 13.0, 0.0, np.array([1.0]))
    with pytest.raises(ValueError):
        solve_H("H4", gauss_small, 0.0, 0.0, np.array([1.0]))


def test_ratio_and_linear_t_legs_agree(gauss_small):
    k = ladder(LADDER_RAYS[("H1", 0)], [5.0, 6.0])
    y0 = np.zeros((2, 2), dtype=complex)
    y0[:, 0] = 1.0
    a = t_leg(gauss_small, 0.0, 0.5, k, 0, y0, method="ratio")
    b = t_leg(gauss_small, 0.0, 0.5, k, 0, y0, method="linear", step=2e-5)
    assert np.abs(a - b).max() < 1e-6


@given(st.lists(st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)), min_size=3, max_size=3), st.booleans())
def test_fit_parity_recovers_series(coef, odd):
    ks = ladder(-np.pi / 4)
    p = np.array([1, 3, 5]) if odd else np.array([2, 4, 6])
    vals = sum(c * ks ** (-q) for c, q in zip(coef, p))
    c, res = fit_parity(ks, vals, odd)
    np.testing.assert_allclose(c, coef, atol=1e-8 * max(1.0, max(abs(x) for x in coef)) * 40**6)
    assert res < 1e-12


def test_ladder_geometry():
    ks = ladder(0.3, [8.0, 12.0])
    np.testing.assert_allclose(ks**2 - 0.5, np.array([64.0, 144.0]) * np.exp(0.3j))


def test_clustered_ladder_rejected(gauss_small):
    with pytest.raises(IllConditionedFit):
        asymptotic_coeffs("H3", gauss_small, 1.0, 0.5, ladder_k=ladder(-np.pi / 4, [8, 8.1, 8.2, 8.3, 8.4]))


def test_asymptotic_h1_matches_potential(gauss_small):
    # r = -2i (h1)_12 e^{2i theta} in this gauge
    z, t = 1.5, gauss_small.t[8]
    co = asymptotic_coeffs("H3", gauss_small, z, t, columns=(1,))
    r, _, th = gauss_small.sample(z, t)
    assert abs(-2j * co.h1[0, 1] * np.exp(2j * th) - r) < 1e-4 * abs(r) + 1e-7
    assert (("H3", 1) in LADDER_RAYS) and co.kmax == pytest.approx(np.abs(ladder(LADDER_RAYS[("H3", 1)])).max())
