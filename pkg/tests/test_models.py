import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semispec.errors import ConfigError
from semispec.models import (
    airy_ai, airy_zeros, critical_current, davies_spectrum, gl_stability, halfline_airy_spectrum,
    halfplane_decay_envelope, lanczos_gamma, mu1, quad_tensor_spectrum,
)
from semispec.potentials import kappa_of

# Tabulated reference values (independent of the series implementation).
AI_REF = {
    -8.0: -0.05270505035638643, -5.0: 0.3507610090241142, -2.5: -0.11232506769296623,
    -1.0: 0.5355608832923522, 0.0: 0.3550280538878172, 0.5: 0.23169360648083343,
    1.0: 0.13529241631288147, 2.0: 0.03492413042327436,
}
AIP_REF = {-8.0: 0.9355609381983064, -1.0: -0.010160567116645175, 1.0: -0.15914744129679328}
ZEROS_REF = [-2.3381074104597674, -4.08794944413097, -5.520559828095515, -6.786708090071912,
             -7.944133587112781, -9.022650853340979, -10.040174341558087, -11.008524303733262]


def test_ai_at_zero():
    assert airy_ai(0.0) == pytest.approx(0.3550280539, abs=1e-10)


@pytest.mark.parametrize("x", sorted(AI_REF))
def test_ai_reference_values(x):
    assert airy_ai(x) == pytest.approx(AI_REF[x], abs=1e-13)


@pytest.mark.parametrize("x", sorted(AIP_REF))
def test_ai_derivative_reference_values(x):
    assert airy_ai(x, derivative=1) == pytest.approx(AIP_REF[x], abs=1e-13)


def test_ai_vanishes_at_first_zero():
    # the 7-digit zero sits 4e-7 from the true one, where |Ai'| ~ 0.70
    assert abs(airy_ai(-2.338107)) < 1e-6
    assert abs(airy_ai(ZEROS_REF[0])) < 1e-8


def test_ai_deterministic():
    assert airy_ai(1.0) == airy_ai(1.0)


def test_ai_window():
    with pytest.raises(ConfigError):
        airy_ai(12.5)


def test_ode_residual_on_sample_grid():
    for x in np.linspace(-8, 2, 101):
        assert abs(airy_ai(x, derivative=2) - x * airy_ai(x)) <= 1e-10


def test_lanczos_gamma():
    assert lanczos_gamma(1 / 3) == pytest.approx(math.gamma(1 / 3), rel=1e-13)
    assert lanczos_gamma(2 / 3) == pytest.approx(math.gamma(2 / 3), rel=1e-13)
    assert lanczos_gamma(5.0) == pytest.approx(24.0, rel=1e-13)


def test_zero_examples():
    assert airy_zeros(1).zeros[0] == pytest.approx(-2.338107, abs=1e-6)
    z2 = airy_zeros(2).zeros
    assert z2[0] == pytest.approx(-2.338107, abs=1e-6) and z2[1] == pytest.approx(-4.087949, abs=1e-6)


def test_all_zeros_against_table():
    z = airy_zeros(8)
    assert np.allclose(z.zeros, ZEROS_REF, rtol=0, atol=1e-11)
    for v in z.zeros:
        assert abs(airy_ai(v)) <= 1e-12


@pytest.mark.parametrize("k", [0, 9])
def test_zero_count_contract(k):
    with pytest.raises(ConfigError):
        airy_zeros(k)


def test_mu1():
    assert mu1() == pytest.approx(2.3381074104597674, rel=1e-12)


def test_halfline_examples():
    s = halfline_airy_spectrum(1.0, 1)
    assert s.eigenvalues[0] == pytest.approx(1.169054 + 2.024860j, abs=1e-6)
    assert halfline_airy_spectrum(8.0, 1).min_real == pytest.approx(4.676215, abs=1e-6)
    assert halfline_airy_spectrum(1.0, 2).eigenvalues[1] == pytest.approx(2.043975 + 3.540268j, abs=1e-6)


@given(st.floats(0.01, 100))
def test_halfline_scaling(J):
    ratio = halfline_airy_spectrum(J, 1).min_real / halfline_airy_spectrum(1.0, 1).min_real
    assert ratio == pytest.approx(J ** (2 / 3), rel=1e-14)


def test_davies_examples():
    e = davies_spectrum(1.0, 2).eigenvalues
    s = 1 / math.sqrt(2)
    assert np.allclose(e, [s * (1 + 1j), 3 * s * (1 + 1j), 5 * s * (1 + 1j)], atol=1e-15)
    assert davies_spectrum(-1.0, 0).eigenvalues[0] == pytest.approx(s * (1 - 1j), abs=1e-15)
    assert davies_spectrum(4.0, 0).eigenvalues[0] == pytest.approx(math.sqrt(2) * (1 + 1j), abs=1e-15)
    with pytest.raises(ConfigError):
        davies_spectrum(0.0, 2)


@given(st.floats(0.01, 50), st.integers(0, 6))
def test_davies_conjugation(alpha, kmax):
    a = davies_spectrum(alpha, kmax).eigenvalues
    b = davies_spectrum(-alpha, kmax).eigenvalues
    assert all(x.conjugate() == y for x, y in zip(a, b))


def test_tensor_examples():
    assert quad_tensor_spectrum([1, 2], 2).min_real == pytest.approx(1.707107, abs=1e-6)
    assert quad_tensor_spectrum([1], 0).eigenvalues[0] == pytest.approx(davies_spectrum(1, 0).eigenvalues[0])
    assert quad_tensor_spectrum([1, -1], 0).eigenvalues[0] == pytest.approx(math.sqrt(2), abs=1e-15)
    with pytest.raises(ConfigError):
        quad_tensor_spectrum([1, 0], 1)


@given(st.floats(-20, 20).filter(lambda v: abs(v) > 1e-3), st.integers(0, 5))
def test_tensor_single_factor_is_davies(lam, kmax):
    t = sorted(quad_tensor_spectrum([lam], kmax).eigenvalues, key=lambda z: z.real)
    d = sorted(davies_spectrum(lam, kmax).eigenvalues, key=lambda z: z.real)
    assert t == d


@given(st.lists(st.one_of(st.floats(-5, -0.1), st.floats(0.1, 5)), min_size=1, max_size=3))
def test_tensor_min_real_is_half_kappa(hess):
    spec = quad_tensor_spectrum([v / 2 for v in hess], 1)
    assert spec.min_real == pytest.approx(kappa_of(hess) / 2, abs=1e-12)
    assert min(z.real for z in spec.eigenvalues) == pytest.approx(spec.min_real, abs=1e-12)


def test_halfplane_envelope_examples():
    assert halfplane_decay_envelope(0.0, 2) == 1.0
    assert halfplane_decay_envelope(1.0, 2) == pytest.approx(0.920044, abs=1e-6)
    assert halfplane_decay_envelope(1.0, 3) == pytest.approx(0.846482, abs=1e-6)


def test_critical_current_and_stability():
    assert critical_current() == pytest.approx((2 / 2.3381074104597674) ** 1.5, rel=1e-12)
    assert critical_current() == pytest.approx(0.791126, abs=1e-5)
    assert gl_stability(None).stable
    assert gl_stability(1.0).stable
    assert not gl_stability(0.5).stable
    assert gl_stability(1.0).predicted_rate == pytest.approx(0.16905, abs=1e-4)
    # same rate formula at half the current
    assert gl_stability(0.5).predicted_rate == pytest.approx(-0.26354, abs=1e-4)
