import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germforge.background import lshape_background, torus_background
from germforge.errors import ConvergenceError
from germforge.gauss_solver import GeometrySetting, Setting, Solution, assemble, solve
from germforge.germ import (assemble_germ, diagnostics, face_phi, germ_from_json,
                            traceless_part)
from germforge.mesh import face_exp_integrals


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_traceless_part_is_symmetric_traceless_with_norm_abs_t(t):
    h = traceless_part(t)
    assert h[0, 0] + h[1, 1] == 0
    assert h[0, 1] == h[1, 0]
    assert -np.linalg.det(h) == pytest.approx(abs(t) ** 2, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name,H", [("hyp-cmc", 0.4), ("ads-cmc", 0.3), ("ds-cmc", 1.6),
                                    ("mink-cmc", 0.8), ("ads-max", 0.0)])
def test_shape_operator_structure(name, H):
    mesh, hqd = torus_background(1j, 0.7 + 0.2j, 3) if name != "hyp-cmc" else lshape_background(refinement=2)
    prob = assemble(GeometrySetting.parse(name, H), mesh, hqd, scale=0.3 if name == "hyp-cmc" else 1.0)
    germ = assemble_germ(solve(prob), prob)
    np.testing.assert_allclose(np.trace(germ.B, axis1=1, axis2=2), 2 * H, atol=1e-12)
    np.testing.assert_allclose(germ.B, np.swapaxes(germ.B, 1, 2), atol=1e-15)
    # principal curvatures are H +- k
    np.testing.assert_allclose(germ.detB, H * H - germ.k ** 2, atol=1e-12)


def test_area_is_p1_integral(ads_lshape_germ):
    germ, prob = ads_lshape_germ
    assert germ.area == pytest.approx(face_exp_integrals(germ.mesh, 2 * germ.u).sum(), rel=1e-12)
    np.testing.assert_allclose(face_phi(germ.mesh, np.zeros(germ.mesh.n_vertices)), 0, atol=1e-14)


def test_lumped_gauss_bonnet_at_solver_tolerance(ads_lshape_germ, hyp_lshape_germ):
    for germ, prob in (ads_lshape_germ, hyp_lshape_germ):
        rep = diagnostics(germ, prob)
        assert rep.gauss_bonnet_residual < 1e-8
        assert rep.gauss_bonnet_target == pytest.approx(-4 * math.pi)


def test_hyperbolic_identity_and_af_flag(hyp_lshape_germ):
    germ, prob = hyp_lshape_germ
    rep = diagnostics(germ, prob)
    assert rep.almost_fuchsian == (rep.k_max < 1)
    assert rep.af_integral <= rep.af_bound
    # identity holds up to the face-vs-vertex discretization gap
    assert abs(rep.curvature_identity) <= rep.gauss_bonnet_residual_faces + 1e-8


def test_nonconverged_solution_refused(lshape3):
    mesh, hqd = lshape3
    prob = assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd)
    with pytest.raises(ConvergenceError):
        assemble_germ(Solution(np.zeros(prob.n), 1.0, 3, False), prob)


def test_json_round_trip(ads_lshape_germ):
    germ, _ = ads_lshape_germ
    back = germ_from_json(germ.to_json(), germ.mesh)
    np.testing.assert_array_equal(back.B, germ.B)
    np.testing.assert_array_equal(back.phi, germ.phi)
    np.testing.assert_allclose(back.t, germ.t, atol=1e-12)
