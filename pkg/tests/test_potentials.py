import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semispec.errors import RegimeError
from semispec.potentials import (
    Interval, PotentialProfile, Rectangle, boundary_data, find_critical_points, kappa_of, predicted_limit,
)

MU1 = 2.3381074104597674  # first Airy zero, tabulated reference


def test_single_well_critical_point():
    cps = find_critical_points(PotentialProfile.from_text("x^2", 1), Interval(-1, 2))
    assert len(cps) == 1
    c = cps[0]
    assert abs(c.location[0]) < 1e-12
    assert c.hess_eigenvalues == pytest.approx((2.0,))
    assert c.kappa == pytest.approx(math.sqrt(2), rel=1e-12)
    assert not c.degenerate


def test_linear_potential_has_no_critical_point():
    cps = find_critical_points(PotentialProfile.from_text("x", 1), Interval(0, 1))
    assert len(cps) == 0 and not cps.boundary and not cps.flagged_cells


def test_two_dimensional_bowl():
    cps = find_critical_points(PotentialProfile.from_text("x^2 + 2*y^2", 2), Rectangle((-1, 1), (-1, 1)))
    assert len(cps) == 1
    assert np.allclose(cps[0].location, (0, 0), atol=1e-12)
    assert cps[0].hess_eigenvalues == pytest.approx((2.0, 4.0))
    assert cps[0].kappa == pytest.approx(math.sqrt(2) + 2, rel=1e-12)


def test_seed_count_precondition():
    with pytest.raises(ValueError):
        find_critical_points(PotentialProfile.from_text("x", 1), Interval(0, 1), seeds_per_axis=4)


def test_boundary_critical_point_reported_separately():
    cps = find_critical_points(PotentialProfile.from_text("x^2", 1), Interval(0, 1))
    assert len(cps) == 0 and len(cps.boundary) == 1


def test_saddle_and_multiple_wells():
    cps = find_critical_points(PotentialProfile.from_text("x^4 - 2*x^2", 1), Interval(-2, 2.5))
    locs = sorted(round(c.location[0], 9) for c in cps)
    assert locs == [-1.0, 0.0, 1.0]


@pytest.mark.parametrize("lams,expected", [([2], 1.414214), ([2, 4], 3.414214), ([1], 1.0)])
def test_kappa_examples(lams, expected):
    assert kappa_of(lams) == pytest.approx(expected, abs=1e-6)


def test_kappa_needs_input():
    with pytest.raises(ValueError):
        kappa_of([])


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=3), st.floats(0.1, 10), st.randoms())
def test_kappa_permutation_and_homogeneity(lams, t, rnd):
    shuffled = list(lams)
    rnd.shuffle(shuffled)
    assert kappa_of(shuffled) == pytest.approx(kappa_of(lams), rel=1e-12, abs=1e-300)
    assert kappa_of([t * t * v for v in lams]) == pytest.approx(t * kappa_of(lams), rel=1e-12, abs=1e-300)


def test_boundary_data_one_dimensional():
    assert boundary_data(PotentialProfile.from_text("x", 1), Interval(0, 1)).J == 1.0
    bd = boundary_data(PotentialProfile.from_text("x^2", 1), Interval(-1, 2))
    assert bd.endpoint_gradients == (2.0, 4.0) and bd.J == 2.0


def test_boundary_data_vanishing_gradient_is_regime_error():
    with pytest.raises(RegimeError):
        boundary_data(PotentialProfile.from_text("x^2", 1), Interval(0, 1))


def test_boundary_classification_on_square():
    bd = boundary_data(PotentialProfile.from_text("x", 2), Rectangle((0, 1), (0, 1)))
    kinds = bd.edge_kinds()
    assert kinds["left"] == {"perp"} and kinds["right"] == {"perp"}
    assert kinds["top"] == {"parallel"} and kinds["bottom"] == {"parallel"}
    assert bd.J_m == 1.0


def test_predicted_limit_airy():
    p = predicted_limit(PotentialProfile.from_text("x", 1), Interval(0, 1))
    assert p.regime == "NoCriticalPoint" and p.h_exponent == Fraction(2, 3)
    assert p.prefactor == pytest.approx(MU1 / 2, rel=1e-12)
    assert p.prefactor == pytest.approx(1.169054, abs=1e-6)


def test_predicted_limit_morse_1d():
    p = predicted_limit(PotentialProfile.from_text("x^2", 1), Interval(-1, 2))
    assert p.regime == "Morse" and p.h_exponent == 1
    assert p.prefactor == pytest.approx(0.707107, abs=1e-6)
    assert p.imag_center == pytest.approx(0.0, abs=1e-12)


def test_predicted_limit_morse_2d():
    p = predicted_limit(PotentialProfile.from_text("x^2 + 2*y^2", 2), Rectangle((-1, 1), (-1, 1)))
    assert p.prefactor == pytest.approx(1.707107, abs=1e-6)


def test_predicted_limit_rejects_degenerate_point():
    with pytest.raises(RegimeError):
        predicted_limit(PotentialProfile.from_text("x^3", 1), Interval(-1, 2))


def test_predicted_limit_picks_smallest_kappa_and_warns_on_shared_level():
    p = predicted_limit(PotentialProfile.from_text("x^4 - 2*x^2", 1), Interval(-2, 2.5))
    # wells at +-1 have V'' = 8, the saddle at 0 has |V''| = 4: the saddle wins
    assert p.prefactor == pytest.approx(1.0, rel=1e-9)
    assert p.imag_center == pytest.approx(0.0, abs=1e-12)



def test_shared_level_of_minimizing_points_warns():
    # V' = x(x^2 - 1)(10 - 9x^2): V'' = 2 at +-1 (smallest kappa), -10 at 0; V is even
    prof = PotentialProfile.from_text("-1.5*x^6 + 4.75*x^4 - 5*x^2", 1)
    p = predicted_limit(prof, Interval(-1.02, 1.02))
    assert p.prefactor == pytest.approx(math.sqrt(2) / 2, rel=1e-9)
    assert any("resonance" in w for w in p.warnings)


def test_two_dimensional_without_perpendicular_points_is_lower_bound():
    p = predicted_limit(PotentialProfile.from_text("x + y", 2), Rectangle((0, 1), (0, 1)))
    assert p.lower_bound_only


@given(st.floats(0.2, 5.0))
def test_airy_prefactor_scales_with_two_thirds_power(c):
    base = PotentialProfile.from_text("x", 1)
    p1 = predicted_limit(base, Interval(0, 1))
    p2 = predicted_limit(base.scaled(2.0 * c), Interval(0, 1))
    p3 = predicted_limit(base.scaled(c), Interval(0, 1))
    assert p2.prefactor / p3.prefactor == pytest.approx(2 ** (2 / 3), rel=1e-12)
    assert p3.prefactor / p1.prefactor == pytest.approx(c ** (2 / 3), rel=1e-12)


_coef = st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 2))


@given(_coef, _coef, _coef, _coef, st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_hessian_symmetric(a, b, c, d, p):
    prof = PotentialProfile.from_text(f"{a}*x^3*y + {b}*x*y^2 + {c}*x^2 + {d}*y^4", 2)
    H = prof.hessian(p)
    assert H[0, 1] == pytest.approx(H[1, 0], rel=1e-12, abs=1e-12)


@given(_coef, _coef, st.floats(0.5, 3))
def test_critical_points_satisfy_root_test(a, b, w):
    prof = PotentialProfile.from_text(f"x^4 + {a}*x^3 + {b}*x^2 + x", 1)
    cps = find_critical_points(prof, Interval(-w - 2, w + 2))
    for c in list(cps) + list(cps.boundary):
        g = prof.gradient(c.location)
        H = prof.hessian(c.location)
        assert np.linalg.norm(g) <= 1e-10 * (1 + np.linalg.norm(H, 2) * np.linalg.norm(c.location))


def test_degenerate_point_in_two_dimensions():
    cps = find_critical_points(PotentialProfile.from_text("x^2 + y^4", 2), Rectangle((-1, 1), (-1, 1)))
    assert len(cps) == 1 and cps[0].degenerate
