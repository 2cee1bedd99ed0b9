import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germforge.errors import DegenerateTransportError, MeshError, SettingError
from germforge.gauss_solver import GeometrySetting, Setting, assemble, solve
from germforge.germ import assemble_germ
from germforge.background import lshape_background, torus_background
from germforge.teichmaps import (MorphismField, Metric2Field, discrete_curvature, dual_surface,
                                 first_form, labourie_morphism, pullback, reconstruct_from_pair,
                                 sharp_metrics, star_metrics)


def test_flat_metric_has_zero_curvature_and_cone_defects(lshape3):
    mesh, _ = lshape3
    G = np.broadcast_to(np.eye(2), (mesh.n_faces, 2, 2))
    rep = discrete_curvature(Metric2Field(mesh, G), target=0.0)
    np.testing.assert_allclose(rep.defects, mesh.angle_defects, atol=1e-9)
    assert rep.glued_disagreement < 1e-12


def test_first_form_curvature_converges_to_gauss_equation():
    errors = []
    for r in (3, 4):
        mesh, hqd = lshape_background(refinement=r)
        prob = assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd)
        germ = assemble_germ(solve(prob), prob)
        rep = discrete_curvature(first_form(germ), germ.K)
        # the sum of defects is topological; per-vertex error is a discretization error
        assert rep.defects.sum() == pytest.approx(2 * math.pi * mesh.euler_characteristic, abs=1e-8)
        errors.append(rep.l1_error)
    assert errors[1] < 0.75 * errors[0]


def test_derived_metrics_positive_definite(ads_lshape_germ):
    germ, _ = ads_lshape_germ
    for m in sharp_metrics(germ) + star_metrics(germ):
        assert np.all(np.linalg.eigvalsh(m.G) > 0)
        assert m.lengths is not None and np.all(m.lengths > 0)
        rep = discrete_curvature(m)
        assert rep.degenerate_faces == 0
        assert rep.defects.sum() == pytest.approx(2 * math.pi * germ.mesh.euler_characteristic, abs=1e-8)


def test_derived_metrics_need_ads(hyp_lshape_germ):
    with pytest.raises(SettingError):
        sharp_metrics(hyp_lshape_germ[0])
    with pytest.raises(SettingError):
        labourie_morphism(hyp_lshape_germ[0])


def test_ads_torus_is_degenerate(ads_torus_germ):
    # k = 1 everywhere on the flat maximal torus
    with pytest.raises(DegenerateTransportError):
        sharp_metrics(ads_torus_germ[0])


def test_morphism_properties(ads_lshape_germ):
    germ, _ = ads_lshape_germ
    b = labourie_morphism(germ)
    g_plus, g_minus = star_metrics(germ)
    rep = b.check(g_plus)
    assert rep["det_error"] < 1e-12 and rep["eigen_real_positive"]
    assert rep["self_adjoint_error"] < 1e-12
    np.testing.assert_allclose(pullback(g_plus.G, b.b), g_minus.G, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(0, math.pi), st.floats(0.2, 3), st.floats(-1, 1))
def test_round_trip_is_algebraic(k, angle, lam, shear):
    # one random face: B symmetric w.r.t. g with eigenvalues +-k
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    P = np.array([[lam, shear], [0.0, 1.0 / lam]])
    g = P.T @ P
    B0 = R @ np.diag([k, -k]) @ R.T
    B = np.linalg.solve(P, B0 @ P)
    mesh, _ = torus_background(1j, 1.0, 0)
    G = np.broadcast_to(g, (mesh.n_faces, 2, 2))
    Bf = np.broadcast_to(B, (mesh.n_faces, 2, 2))
    E = np.eye(2)
    g_plus = Metric2Field(mesh, pullback(G, E + Bf))
    b = MorphismField(np.linalg.solve(E + Bf, E - Bf))
    back, B_back = reconstruct_from_pair(g_plus, b)
    np.testing.assert_allclose(B_back, Bf, atol=1e-9)
    np.testing.assert_allclose(back.G, G, atol=1e-9 * max(1, np.abs(g).max()))


def test_round_trip_rejects_bad_morphism(ads_lshape_germ):
    germ, _ = ads_lshape_germ
    g_plus, _ = star_metrics(germ)
    with pytest.raises(DegenerateTransportError):
        reconstruct_from_pair(g_plus, MorphismField(2 * labourie_morphism(germ).b))


def test_dual_surface_flags_zero_faces(ads_lshape_germ):
    germ, _ = ads_lshape_germ
    d = dual_surface(germ)
    zero_faces = np.isin(germ.mesh.faces, list(germ.zeros)).any(axis=1)
    assert np.all(d.flagged[zero_faces])
    ok = ~d.flagged
    np.testing.assert_allclose(d.K_dual[ok], -1 - 1 / germ.detB[ok], rtol=1e-12)
    assert np.all(np.isnan(d.K_dual[d.flagged]))


def test_strict_glue_check(ads_lshape_germ):
    germ, _ = ads_lshape_germ
    m = first_form(germ)
    L = m.chart_lengths.copy()
    g = germ.mesh.gluings[0]
    L[g.face_a, g.edge_a] *= 1.5
    bad = Metric2Field(germ.mesh, m.G, L)
    assert bad.glued_disagreement > 0.3
    discrete_curvature(bad)
    with pytest.raises(MeshError):
        discrete_curvature(bad, strict=True)
