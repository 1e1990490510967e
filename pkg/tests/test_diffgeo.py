from __future__ import annotations

import math

import numpy as np
import pytest

from crpc_helix import diffgeo as dg
from crpc_helix import params as pc
from crpc_helix import profile as pr
from crpc_helix.errors import DegenerateRatio, InvalidK, UmbilicPoint
from crpc_helix.params import GaussSign
from crpc_helix.surface import fd_partials, make_patch, surface_normal, surface_partials

from conftest import CERTIFIED


def _forms_at(patch, v, t, fd=False):
    partials = fd_partials(patch, v, t, 1e-4) if fd else surface_partials(patch, v, t)
    normal = surface_normal(patch, partials)
    return partials, normal, dg.fundamental_forms(partials, normal)


def test_forms_match_finite_differences():
    patch = make_patch(2.0, 1.0)
    _, _, exact = _forms_at(patch, 0.3, 0.8)
    _, _, approx = _forms_at(patch, 0.3, 0.8, fd=True)
    for name, value in exact.to_dict().items():
        assert getattr(approx, name) == pytest.approx(value, rel=1e-5, abs=1e-7), name


def test_glue_point_forms_at_critical_C():
    k, C = 3.0, 0.375
    s0 = math.sqrt(2.0)
    m0 = ((k + 1) * s0 * s0 - (k - 1)) / (4 * k * s0)
    forms = dg.glue_point_forms(k, C)
    assert forms.L == pytest.approx(0.0, abs=1e-12)
    assert forms.E == pytest.approx(0.25, abs=1e-12)
    assert forms.F == pytest.approx(m0 / 2.0, rel=1e-10)
    assert forms.G == pytest.approx(0.25 + m0 * m0, rel=1e-10)
    assert forms.M == pytest.approx(0.5, rel=1e-10)
    assert forms.N == pytest.approx(m0, rel=1e-10)


@pytest.mark.parametrize("k, C, branch, sign", [(3.0, 1.0, "full", GaussSign.NEGATIVE), (0.5, 2.0, "minus", GaussSign.POSITIVE)])
def test_gauss_sign_and_ratio(k, C, branch, sign):
    patch = make_patch(k, C, branch=branch)
    a_low, a_high = pc.a_pair_from_k(k)
    for v, t in [(0.0, 0.3), (1.0, -0.7), (2.5, 0.9 * patch.extent)]:
        _, _, forms = _forms_at(patch, v, t)
        report = dg.principal_curvatures(forms)
        assert report.gauss_sign is sign
        assert report.kappa1 * report.kappa2 * (1 if sign is GaussSign.POSITIVE else -1) > 0
        assert min(abs(report.ratio - a_low), abs(report.ratio - a_high)) <= 1e-9
        K, _ = dg.gauss_mean_curvature(forms)
        assert K == pytest.approx(report.kappa1 * report.kappa2, rel=1e-9)


def test_path_first_ordering():
    patch = make_patch(3.0, 1.0)
    _, _, forms = _forms_at(patch, 0.5, 0.4)
    default = dg.principal_curvatures(forms)
    along = dg.principal_curvatures(forms, path_first=True)
    assert {default.kappa1, default.kappa2} == {along.kappa1, along.kappa2}


def test_glue_point_orders_along_the_path_by_default():
    forms = dg.glue_point_forms(3.0, 1.0)
    at_glue = dg.principal_curvatures(forms, t=0.0)
    along = dg.principal_curvatures(forms, path_first=True)
    assert (at_glue.kappa1, at_glue.kappa2) == (along.kappa1, along.kappa2)

    patch = make_patch(3.0, 1.0)
    _, _, forms = _forms_at(patch, 0.5, 0.4)
    off_glue = dg.principal_curvatures(forms, t=0.4)
    by_modulus = dg.principal_curvatures(forms)
    assert (off_glue.kappa1, off_glue.kappa2) == (by_modulus.kappa1, by_modulus.kappa2)
    assert abs(off_glue.kappa1) <= abs(off_glue.kappa2)


def test_umbilic_point_is_reported():
    forms = dg.FundamentalForms(E=1.0, F=0.0, G=1.0, L=2.0, M=0.0, N=2.0)
    with pytest.raises(UmbilicPoint):
        dg.principal_curvatures(forms)


def test_characteristic_angle():
    assert dg.characteristic_angle(-0.5) == pytest.approx(math.atan(math.sqrt(0.5)))
    with pytest.raises(DegenerateRatio):
        dg.characteristic_angle(0.0)


@pytest.mark.parametrize("k, C, branch", [(3.0, 1.0, "full"), (0.5, 2.0, "plus")])
def test_path_tangent_is_conjugate_to_steepest_descent(k, C, branch):
    patch = make_patch(k, C, branch=branch)
    for v, t in [(0.2, 0.4), (3.0, -0.5 * patch.extent), (5.5, 0.8 * patch.extent)]:
        partials, normal, forms = _forms_at(patch, v, t)
        assert dg.conjugacy_defect(partials, normal, forms) <= 1e-8


@pytest.mark.parametrize("k, C, branch", CERTIFIED)
def test_ode_residual_and_steiner_ratio(k, C, branch):
    profile = pr.glued_profile(k, C, branch)
    for t in np.linspace(0.02, 0.98, 40) * profile.default_extent():
        s = profile.s_of_t(float(t))
        assert dg.ode_residual(s, k, C) <= 1e-9
        assert dg.steiner_diagnostic(s, k, C).ratio == pytest.approx(k, rel=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("k, C, branch", CERTIFIED)
def test_ode_residual_and_steiner_ratio_dense(k, C, branch):
    profile = pr.glued_profile(k, C, branch)
    for t in np.linspace(0.02, 0.98, 1000) * profile.default_extent():
        s = profile.s_of_t(float(t))
        assert dg.ode_residual(s, k, C) <= 1e-9, t
        assert dg.steiner_diagnostic(s, k, C).ratio == pytest.approx(k, rel=1e-8), t


def test_ode_residual_detects_perturbation():
    s = pr.glued_profile(3.0, 1.0).s_of_t(0.8)
    assert dg.ode_residual(s, 3.0, 1.0, g_scale=1.01) > 1e-4
    with pytest.raises(InvalidK):
        dg.ode_residual(s, 1.0, 1.0)


@pytest.mark.parametrize(
    "k, C, branch, expected, rel",
    [
        (0.5, 1e6, "minus", 1.0 / 3.0, 0.01),
        (0.5, 1e6, "plus", 3.0, 0.01),
        (3.0, 1e-4, "full", -2.0, 0.02),
        (3.0, 1e6, "full", -0.5, 0.02),
    ],
)
def test_axis_point_ratio_limits(k, C, branch, expected, rel):
    assert dg.axis_point_ratio(k, C, branch) == pytest.approx(expected, rel=rel)


def test_axis_point_ratio_converges_for_large_C():
    k = 3.0
    limit = -(k - 1.0) / (k + 1.0)
    errors = [abs(dg.axis_point_ratio(k, C) / limit - 1.0) for C in (1e4, 1e6, 1e8)]
    assert errors[0] > errors[1] > errors[2]
    # the glue root shrinks like C^(-1/4), so the error falls like C^(-1/2)
    assert errors[1] / errors[0] == pytest.approx(0.1, rel=0.3)
    assert errors[2] / errors[1] == pytest.approx(0.1, rel=0.3)


def test_axis_point_ratio_matches_forms():
    forms = dg.glue_point_forms(3.0, 1.0)
    assert dg.axis_point_ratio(3.0, 1.0) == pytest.approx(forms.L * forms.G / (forms.N * forms.E), rel=1e-10)


@pytest.mark.parametrize("k, C, branch", CERTIFIED)
def test_certificate_passes(k, C, branch):
    report = dg.crpc_certificate(k, C, grid=(24, 24), branch=branch)
    assert report.max_rel_deviation <= 1e-8
    assert report.passed
    assert report.gauss_sign_consistent
    assert report.argmax is not None


@pytest.mark.slow
@pytest.mark.parametrize("k, C, branch", CERTIFIED)
def test_certificate_passes_full_grid(k, C, branch):
    report = dg.crpc_certificate(k, C, grid=(64, 64), branch=branch, workers=4)
    assert report.grid["n_v"] == report.grid["n_t"] == 64
    assert report.max_rel_deviation <= 1e-8
    assert report.passed
    assert report.gauss_sign_consistent


def test_certificate_reference_grid():
    report = dg.crpc_certificate(3.0, 1.0, grid=(64, 64), workers=4)
    assert report.max_rel_deviation <= 1e-8
    assert report.grid["n_v"] == 64
    assert report.partials == "analytic"


@pytest.mark.slow
def test_certificate_finite_difference_mode():
    report = dg.crpc_certificate(3.0, 1.0, grid=(12, 12), fd_only=True)
    assert report.partials == "fd"
    assert report.bound == 1e-4
    assert report.max_rel_deviation <= 1e-4


def test_certificate_rejects_perturbed_profile():
    report = dg.crpc_certificate(3.0, 1.0, grid=(16, 16), g_scale=1.01)
    assert report.max_rel_deviation > 1e-3
    assert not report.passed
