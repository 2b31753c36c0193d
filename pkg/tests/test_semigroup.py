import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semispec.discretize import Axis, Grid, HalfPlane, Oscillator, assemble, assemble_model
from semispec.eigensolve import dense_spectrum
from semispec.errors import ConfigError, NumericalError
from semispec.models import halfplane_decay_envelope
from semispec.potentials import PotentialProfile
from semispec.semigroup import (
    DecayCurve, decay_curve, decay_rate_fit, default_window, gp_envelope, propagator_norm, write_decay_csv,
)


def test_identity_at_zero():
    assert propagator_norm(np.diag([1.0, 2 + 1j]), 0.0) == 1.0


def test_normal_diagonal():
    assert propagator_norm(np.diag([1.0, 2 + 1j]), 1.0) == pytest.approx(math.exp(-1), rel=1e-12)


def test_jordan_transient_growth():
    a = 10.0
    n = propagator_norm(np.array([[1.0, a], [0.0, 1.0]], dtype=complex), 1.0)
    # exp(-A) = e^{-1} [[1, -a], [0, 1]]
    assert n == pytest.approx(math.exp(-1) * (a + math.sqrt(a * a + 4)) / 2, rel=1e-10)
    assert n > math.exp(-1)


def test_dense_cap_enforced():
    with pytest.raises(ConfigError):
        propagator_norm(assemble_model(Oscillator(1.0, 4.0), 50), 1.0, dense_cap=10)


def test_fit_exact_exponential():
    ts = np.linspace(0, 2, 21)
    assert decay_rate_fit(DecayCurve(tuple(ts), tuple(np.exp(-3 * ts))), (0, 2)) == pytest.approx(3.0, rel=1e-12)


def test_fit_constant_curve():
    ts = np.linspace(0, 2, 21)
    assert decay_rate_fit(DecayCurve(tuple(ts), tuple(np.ones_like(ts))), (0, 2)) == pytest.approx(0.0, abs=1e-12)


def test_fit_needs_five_samples():
    ts = np.linspace(0, 2, 21)
    with pytest.raises(ConfigError):
        decay_rate_fit(DecayCurve(tuple(ts), tuple(np.exp(-ts))), (0, 0.3))


def test_fit_underflow():
    ts = np.linspace(0, 40, 41)
    with pytest.raises(NumericalError):
        decay_rate_fit(DecayCurve(tuple(ts), tuple(np.exp(-3 * ts))), (0, 40))


def test_davies_decay_rate():
    op = assemble_model(Oscillator(1.0, 8.0), 160)
    min_re = dense_spectrum(op).eigenvalues.real.min()
    curve = decay_curve(op, np.linspace(0, 6, 61))
    rate = decay_rate_fit(curve, (2, 6))
    assert rate == pytest.approx(0.7071, rel=0.02)
    assert rate == pytest.approx(min_re, rel=0.02)


def test_uniform_and_pointwise_curves_agree():
    op = assemble_model(Oscillator(1.0, 5.0), 60)
    ts = np.linspace(0, 3, 7)
    fast = decay_curve(op, ts)
    slow = [propagator_norm(op, t) for t in ts]
    assert np.allclose(fast.norms, slow, rtol=1e-10)


def test_gp_envelope_example():
    env = gp_envelope(1.0, 1.0, 1.0)
    assert env.M1 == pytest.approx(2 / (1 - math.exp(-1)), rel=1e-12)
    assert env.M1 == pytest.approx(3.164, abs=1e-3)
    assert env.M2 == pytest.approx(math.exp(2), rel=1e-12)
    assert env.M == pytest.approx(7.389, abs=1e-3)
    assert env(0.0) == env.M >= 1


def test_gp_envelope_values_and_validation():
    env, vals = gp_envelope(3.0, 0.5, 2.0, ts=[0.0, 1.0])
    assert vals[1] == pytest.approx(env.M * math.exp(-0.5))
    for args in [(0.0, 1.0), (1.0, 0.0), (1.0, 1.0, 0.0)]:
        with pytest.raises(ConfigError):
            gp_envelope(*args)


def test_default_window():
    assert default_window(0.5) == (4.0, 12.0)


_coef = st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 2))


def _op(a, b, n, h):
    return assemble(Grid((Axis(-1.0, 1.0, n),)), PotentialProfile.from_text(f"{a}*x + {b}*x^2", 1), h)


@given(_coef, _coef, st.integers(3, 40), st.floats(0.05, 1.0), st.floats(0, 20))
def test_contraction(a, b, n, h, t):
    assert propagator_norm(_op(a, b, n, h), t) <= 1 + 1e-12


@given(_coef, _coef, st.integers(3, 40), st.floats(0.05, 1.0), st.floats(0, 5), st.floats(0, 5))
def test_semigroup_submultiplicative(a, b, n, h, t1, t2):
    op = _op(a, b, n, h)
    lhs = propagator_norm(op, t1 + t2)
    assert lhs <= propagator_norm(op, t1) * propagator_norm(op, t2) * (1 + 1e-9) + 1e-300


def test_halfplane_parallel_field_superexponential_onset():
    # theta = pi/2: the potential J x1 is parallel to the wall x2 = 0
    op = assemble_model(HalfPlane(J=1.0, theta=math.pi / 2, Lx=12.0, Ly=12.0), (28, 28))
    ts = np.linspace(0, 3, 7)
    curve = decay_curve(op, ts)
    for t, n in zip(curve.ts, curve.norms):
        assert n <= halfplane_decay_envelope(t, 2) * math.exp(0.5)


def test_decay_csv(tmp_path):
    curve = DecayCurve((0.0, 1.0), (1.0, 0.5))
    env = gp_envelope(1.0, 1.0, 1.0)
    path = tmp_path / "d.csv"
    write_decay_csv(curve, env, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,norm,envelope"
    assert float(lines[1].split(",")[2]) == env.M
