from __future__ import annotations

import math

import numpy as np
import pytest

from crpc_helix import params as pc
from crpc_helix.errors import EXIT_CONFIG, EXIT_MATH, BranchMismatch, ConfigError, DegenerateRatio, EmptyDomain, InvalidK


@pytest.mark.parametrize("a", [-0.5, -2.0, 0.25, 4.0, -0.125, 8.0])
def test_k_is_agnostic_to_exact_reciprocal(a):
    assert pc.k_from_a(a) == pc.k_from_a(1.0 / a)


def test_k_is_agnostic_to_rounded_reciprocal():
    rng = np.random.default_rng(7)
    magnitudes = rng.uniform(0.01, 0.99, 2000)
    signs = rng.choice([-1.0, 1.0], 2000)
    for a in magnitudes * signs:
        a = float(a)
        # 1/a is itself rounded; k amplifies that by 2|a| / (1 - a^2), below 100 here
        assert pc.k_from_a(1.0 / a) == pytest.approx(pc.k_from_a(a), rel=1e-13, abs=0.0)


@pytest.mark.parametrize("a", [-0.5, 0.3, 1.7, -7.25])
def test_pair_contains_input_ratio(a):
    low, high = pc.a_pair_from_k(pc.k_from_a(a))
    assert min(abs(low - a) / abs(a), abs(high - a) / abs(a)) <= 1e-14


@pytest.mark.parametrize(
    "a, case",
    [(0.0, "developable"), (1.0, "sphere_plane"), (-1.0, "minimal"), (math.inf, "nonfinite"), (math.nan, "nonfinite")],
)
def test_degenerate_ratios(a, case):
    with pytest.raises(DegenerateRatio) as info:
        pc.k_from_a(a)
    assert info.value.case == case
    assert info.value.exit_code == EXIT_CONFIG
    assert info.value.to_dict()["case"] == case


def test_pairs_for_reference_k():
    assert pc.a_pair_from_k(0.5) == pytest.approx((1 / 3, 3.0), rel=1e-15)
    assert pc.a_pair_from_k(3.0) == pytest.approx((-0.5, -2.0), rel=1e-15)
    with pytest.raises(DegenerateRatio):
        pc.a_pair_from_k(1.0)


def test_gauss_sign_follows_k():
    assert pc.CurvatureSpec.from_a(-0.5).gauss_sign is pc.GaussSign.NEGATIVE
    assert pc.CurvatureSpec.from_k(0.5).gauss_sign is pc.GaussSign.POSITIVE
    assert pc.CurvatureSpec.from_k(3.0).a == pytest.approx(-0.5)


def test_critical_C_golden_values():
    assert pc.critical_C(3.0) == 0.375
    assert pc.critical_C(2.0) == pytest.approx(2.0 / 3.0**1.5, rel=1e-14)
    assert pc.critical_C(1.0 + 1e-6) == pytest.approx(0.5, rel=1e-4)
    with pytest.raises(InvalidK):
        pc.critical_C(0.5)


def test_cusp_parameter_and_min_C():
    assert pc.cusp_parameter(0.5) == pytest.approx(math.sqrt(3.0), rel=1e-14)
    assert pc.cusp_parameter(0.6) == pytest.approx(2.0, rel=1e-14)
    assert pc.min_C(0.5) == pytest.approx(2.0 * 3.0**-0.75, rel=1e-14)
    assert pc.min_C(0.6) == pytest.approx(5.0 / (2.0 * 2.0**1.6), rel=1e-14)
    with pytest.raises(InvalidK):
        pc.min_C(3.0)


def test_special_constants_are_monotone():
    above = [pc.critical_C(1.1 + 0.5 * i) for i in range(20)]
    below = [pc.min_C(0.05 + 0.045 * i) for i in range(20)]
    assert all(b != a for a, b in zip(above, above[1:]))
    assert sorted(above) in (above, above[::-1])
    assert sorted(below) in (below, below[::-1])


@pytest.mark.parametrize("k, C, s0", [(3.0, 0.375, math.sqrt(2.0)), (2.0, 1.0, 1.0)])
def test_domain_root_golden(k, C, s0):
    domain = pc.compute_domain(k, C)
    assert domain.s0 == pytest.approx(s0, rel=1e-12)
    assert domain.s0_prime is None
    assert domain.interval == (domain.s0, math.inf)


def test_domain_for_k_below_one():
    domain = pc.compute_domain(0.5, 2.0)
    assert domain.s0 == pytest.approx(0.45, abs=0.01)
    assert domain.s0_prime == pytest.approx(15.8, abs=0.1)
    assert domain.s0 < domain.s_k < domain.s0_prime
    for root in (domain.s0, domain.s0_prime):
        assert abs(2.0 * 2.0 * root**1.5 / (root * root + 1.0) - 1.0) <= 1e-12
    assert domain.contains(domain.s_k)
    assert not domain.contains(2.0 * domain.s0_prime)


def test_empty_domain_below_min_C():
    with pytest.raises(EmptyDomain) as info:
        pc.compute_domain(0.5, 0.5)
    assert info.value.exit_code == EXIT_MATH
    assert "hint" in info.value.to_dict()


def test_near_critical_C_is_rejected():
    with pytest.raises(EmptyDomain):
        pc.compute_domain(0.5, pc.min_C(0.5) * (1.0 + 1e-12))


@pytest.mark.parametrize("k, C", [(1.0001, 1e-6), (0.999, 1e3)])
def test_unrepresentable_root_is_an_empty_domain(k, C):
    with pytest.raises(EmptyDomain) as info:
        pc.compute_domain(k, C)
    assert info.value.exit_code == EXIT_MATH
    assert "move k away from 1" in info.value.to_dict()["hint"]


@pytest.mark.parametrize("C", [0.0, -1.0, math.inf])
def test_shape_constant_must_be_positive(C):
    with pytest.raises(ConfigError):
        pc.ShapeParams(3.0, C)


def test_shape_params_scale():
    assert pc.ShapeParams(3.0, 1.0, pitch=0.8).scale == pytest.approx(1.6)
    with pytest.raises(ConfigError):
        pc.ShapeParams(3.0, 1.0, pitch=0.0)


def test_branch_resolution():
    assert pc.resolve_branch(3.0) is pc.Branch.FULL
    assert pc.resolve_branch(0.5) is pc.Branch.MINUS
    assert pc.resolve_branch(0.5, "plus") is pc.Branch.PLUS
    with pytest.raises(BranchMismatch):
        pc.resolve_branch(3.0, "minus")
    with pytest.raises(BranchMismatch):
        pc.resolve_branch(0.5, "full")
