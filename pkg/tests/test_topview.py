from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from crpc_helix import profile as pr
from crpc_helix import topview as tv
from crpc_helix.errors import InvalidK


@pytest.fixture(scope="module")
def sextic():
    return tv.build_implicit_polynomial(3, 1)


def test_golden_sextic_exact(sextic):
    assert sextic == tv.normalize(tv.golden_sextic())
    assert sextic.degree(("x", "y")) == 6
    assert sextic.degree(("C",)) == 2


def test_golden_sextic_vanishes_on_profile(sextic):
    samples = tv.topview_samples(pr.glued_profile(3.0, 2.0), 200)
    assert samples.shape == (200, 2)
    assert tv.residual(sextic, samples, C=2.0) <= 1e-9
    assert tv.residual(tv.golden_sextic(), samples, C=2.0) <= 1e-9


def test_s_squared_branches_for_k_three():
    A, B2 = tv.s_squared_branches(3, 1)
    for t, g in [(0.3, 0.2), (1.5, -0.7), (0.0, 1.0)]:
        D = t * t + 1
        point = {"t": t, "g": g, "C": 0.0}
        assert A(**point) == pytest.approx((18 * g * g + 2 * t * t + 2) / D, rel=1e-14)
        assert B2(**point) == pytest.approx(36 * g * g * (9 * g * g + 2 * t * t + 2) / D**2, rel=1e-14)
        # the two s^2 roots multiply to ((k+1)/(k-1))^2
        assert A(**point) ** 2 - B2(**point) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("k, C, s", [(3.0, 1.0, 3.0), (3.0, 10.0, 5.0), (2.0, 1.0, 4.0)])
def test_s_squared_upper_branch_numerically(k, C, s):
    n, m = Fraction(k).numerator, Fraction(k).denominator
    A, B2 = tv.s_squared_branches(n, m)
    point = {"t": pr.t_of_s(s, k, C), "g": pr.g_of_s(s, k, C), "C": 0.0}
    assert s * s - A(**point) - math.sqrt(B2(**point)) == pytest.approx(0.0, abs=1e-10 * s * s)


@pytest.mark.parametrize("n, m, C", [(2, 1, 1), (1, 2, 2), (3, 1, Fraction(3, 8))])
def test_numeric_C_polynomial_vanishes_on_profile(n, m, C):
    poly = tv.build_implicit_polynomial(n, m, Fraction(C))
    assert poly.degree(("x", "y")) <= tv.degree_bound(n, m)
    assert poly.degree(("C",)) == 0
    samples = tv.topview_samples(pr.glued_profile(n / m, float(C)), 200)
    assert tv.residual(poly, samples) <= 1e-9


def test_elimination_is_generic_in_C(sextic):
    for value in (Fraction(1, 8), Fraction(3, 2), Fraction(7)):
        numeric = tv.build_implicit_polynomial(3, 1, value)
        assert tv.normalize(sextic.substitute("C", value)) == numeric


@pytest.mark.slow
def test_degree_bound_for_five_thirds():
    poly = tv.build_implicit_polynomial(5, 3, 1)
    assert 0 < poly.degree(("x", "y")) <= tv.degree_bound(5, 3)
    samples = tv.topview_samples(pr.glued_profile(5 / 3, 1.0), 50)
    assert tv.residual(poly, samples) <= 1e-9


@pytest.mark.parametrize("n, m", [(1, 1), (4, 2), (0, 3), (-3, 1)])
def test_invalid_ratios(n, m):
    with pytest.raises(InvalidK):
        tv.build_implicit_polynomial(n, m)


def test_residual_conventions(sextic):
    assert tv.residual(sextic, []) == 0.0
    samples = tv.topview_samples(pr.glued_profile(3.0, 2.0), 50)
    x, y, _ = tv.MultiPoly.gens()
    assert tv.residual(x * x + y * y - 1, samples) >= 1e-2
    with pytest.raises(ValueError):
        tv.residual(x * 0, samples)
    with pytest.raises(ValueError):
        tv.residual(sextic, samples)


def test_topview_sample_sides():
    one_sided = tv.topview_samples(pr.glued_profile(3.0, 0.125), 101)
    touching = tv.topview_samples(pr.glued_profile(3.0, 0.375), 101)
    crossing = tv.topview_samples(pr.glued_profile(3.0, 10.0), 101)
    assert (one_sided[:, 1] > 0).all()
    assert np.abs(touching[:, 1]).min() < 1e-10
    assert (touching[:, 1] > -1e-12).all()
    assert crossing[:, 1].min() < 0 < crossing[:, 1].max()


def test_random_draws_are_seeded():
    profile = pr.glued_profile(3.0, 2.0)
    first = tv.topview_samples(profile, 20, rng=np.random.default_rng(7))
    second = tv.topview_samples(profile, 20, rng=np.random.default_rng(7))
    np.testing.assert_array_equal(first, second)


def test_polynomial_arithmetic():
    x, y, C = tv.MultiPoly.gens()
    p = 3 * x * y - C + Fraction(1, 2)
    q = x * x + 1
    assert not (p + (-p))
    assert (p * q).degree() == p.degree() + q.degree()
    square = (x + y) ** 2
    assert square == x * x + 2 * x * y + y * y
    assert p(x=1.0, y=2.0, C=0.5) == pytest.approx(6.0)


def test_divide_out_strips_every_power():
    x, y, C = tv.MultiPoly.gens()
    D = 4 * x * x + 1
    base = x * y + C
    cofactor, count = (base * D * D).divide_out(D)
    assert cofactor == base
    assert count == 2


def test_text_and_json_serialization():
    x, y, _ = tv.MultiPoly.gens()
    poly = x * x - 2 * y
    assert tv.poly_to_text(poly) == "1 * x^2 - 2 * y"
    assert tv.poly_to_text(x * 0) == "0"
    data = tv.poly_to_json(poly)
    assert data["variables"] == ["x", "y", "C"]
    assert data["terms"] == [
        {"monomial": [2, 0, 0], "coefficient": "1"},
        {"monomial": [0, 1, 0], "coefficient": "-2"},
    ]


def test_normalized_leading_coefficient_is_positive(sextic):
    coefficients = list(sextic.coefficients().values())
    assert coefficients[0] > 0
    assert all(c.denominator == 1 for c in coefficients)
    assert math.gcd(*(int(c) for c in coefficients)) == 1
