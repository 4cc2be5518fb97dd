import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cllfokas.core import (
    IDENTITY,
    Region,
    det2,
    inv2,
    lam_of,
    mat2,
    phase_eta,
    phase_phi,
    phase_psi,
    region_of,
    sigma_conj,
    theta_density,
    trace2,
)

finite = st.floats(-10, 10, allow_nan=False)
cplx = st.builds(complex, finite, finite)


@given(cplx, cplx, cplx, cplx)
def test_inverse_is_inverse(a, b, c, d):
    m = mat2(a, b, c, d)
    if abs(det2(m)) < 1e-3:
        return
    np.testing.assert_allclose(m @ inv2(m), IDENTITY, atol=1e-8 * max(1.0, np.abs(m).max() ** 2 / abs(det2(m))))


def test_mat2_batches():
    m = mat2(np.arange(3), 1, 2, 3)
    assert m.shape == (3, 2, 2)
    np.testing.assert_allclose(det2(m), np.arange(3) * 3 - 2)
    np.testing.assert_allclose(trace2(m), np.arange(3) + 3)


def test_phases_relations():
    k = np.array([0.3 + 0.2j, 1.7 - 0.4j, -2.0 + 1j])
    lam = lam_of(k)
    np.testing.assert_allclose(phase_phi(k), 1j * lam)
    np.testing.assert_allclose(phase_psi(k), 2j * lam**2)
    z, t = 0.7, 0.3
    np.testing.assert_allclose(phase_eta(k, z, t), -lam * z + 2 * lam**2 * t)


@pytest.mark.parametrize(
    "arg,region",
    [(7 * np.pi / 4, Region.D1), (5 * np.pi / 4, Region.D2), (np.pi / 4, Region.D3), (3 * np.pi / 4, Region.D4)],
)
def test_region_quadrants(arg, region):
    # regions are the quadrants of the lam-plane
    k = np.sqrt(2.0 * np.exp(1j * arg) + 0.5)
    assert region_of(k) is region
    assert region_of(-k) is region


@pytest.mark.parametrize("arg", [0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
def test_region_boundary(arg):
    k = np.sqrt(1.3 * np.exp(1j * arg) + 0.5)
    assert region_of(k) is Region.BOUNDARY


def test_region_rejects_negative_tol():
    with pytest.raises(ValueError):
        region_of(1.0 + 1j, tol=-1.0)


@given(cplx, st.floats(-3, 3))
def test_sigma_conj_matches_definition(x, y):
    m = mat2(1 + 2j, 3 - 1j, -0.5j, 2.0)
    xx = complex(x.real / 10, y)
    e = np.diag([np.exp(xx), np.exp(-xx)])
    np.testing.assert_allclose(sigma_conj(xx, m), e @ m @ np.linalg.inv(e), rtol=1e-10, atol=1e-12)


def test_sigma_conj_overflow():
    with pytest.raises(OverflowError):
        sigma_conj(400.0, IDENTITY)


@settings(max_examples=50)
@given(cplx, cplx)
def test_theta_density_real_forms(r, rz):
    d = theta_density(r, rz)
    m2 = abs(r) ** 2
    assert d.theta1 == pytest.approx(m2 / 4)
    bracket = np.conj(r) * rz - r * np.conj(rz)
    expected = m2**2 / 8 + (0.25j * bracket).real
    assert d.theta2 == pytest.approx(expected, abs=1e-9)
    assert abs((0.25j * bracket).imag) < 1e-9 * max(1.0, abs(bracket))
