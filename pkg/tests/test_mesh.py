import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germforge.errors import MeshError
from germforge.mesh import (ConeMesh, build_mesh, cotan_laplacian, face_exp_integrals,
                            lshape_gluing, torus_gluing)


@pytest.mark.parametrize("refinement", [0, 1, 2, 3])
def test_flat_torus_topology(refinement):
    m = build_mesh(torus_gluing(), refinement)
    assert m.euler_characteristic == 0
    assert m.genus == 1
    assert m.total_area == pytest.approx(1.0, abs=1e-12)
    assert np.abs(m.angle_defects).max() < 1e-10


@pytest.mark.parametrize("refinement", [1, 2, 3])
def test_lshape_is_genus_two_with_one_six_pi_cone(refinement):
    m = build_mesh(lshape_gluing(2.0, 1.0), refinement, 1.5)
    assert m.genus == 2
    assert m.total_area == pytest.approx(3.0, abs=1e-12)
    d = m.angle_defects
    cones = d[np.abs(d) > 1e-9]
    np.testing.assert_allclose(cones, [-4 * math.pi], atol=1e-9)
    # Gauss-Bonnet for the flat cone metric
    assert d.sum() == pytest.approx(2 * math.pi * m.euler_characteristic, abs=1e-9)


def test_cone_grading_keeps_area_and_defects():
    a = build_mesh(lshape_gluing(), 3, 1.0)
    b = build_mesh(lshape_gluing(), 3, 2.0)
    assert a.n_faces == b.n_faces
    assert b.total_area == pytest.approx(a.total_area, abs=1e-12)
    np.testing.assert_allclose(np.sort(a.angle_defects), np.sort(b.angle_defects), atol=1e-9)
    assert b.edge_lengths.min() < a.edge_lengths.min()


def test_cotan_laplacian_symmetric_psd_with_constant_kernel():
    m = build_mesh(lshape_gluing(), 2)
    L = cotan_laplacian(m).toarray()
    np.testing.assert_allclose(L, L.T, atol=1e-12)
    np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)
    assert np.linalg.eigvalsh(L).min() > -1e-10


def test_laplacian_rayleigh_quotient_of_first_torus_mode():
    m = build_mesh(torus_gluing(), 5)
    pos = m.info["vertex_positions"]
    u = np.sin(2 * np.pi * pos.real)
    rq = u @ cotan_laplacian(m) @ u / (m.vertex_areas @ u ** 2)
    assert rq == pytest.approx(4 * np.pi ** 2, rel=5e-3)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_face_exp_integrals_against_quadrature(w):
    m = build_mesh(torus_gluing(), 0)
    w = np.resize(np.array(w), m.n_vertices)
    exact = face_exp_integrals(m, w)
    # fine barycentric midpoint quadrature on each face
    n = 80
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    keep = i + j < n
    l1, l2 = (i[keep] + 1 / 3) / n, (j[keep] + 1 / 3) / n
    l0 = 1 - l1 - l2
    wf = w[m.faces]
    vals = np.exp(np.outer(wf[:, 0], l0) + np.outer(wf[:, 1], l1) + np.outer(wf[:, 2], l2))
    approx = m.face_areas * vals.mean(axis=1)
    np.testing.assert_allclose(exact, approx, rtol=2e-3)


def test_face_exp_integrals_constant():
    m = build_mesh(torus_gluing(), 1)
    np.testing.assert_allclose(face_exp_integrals(m, np.full(m.n_vertices, 0.7)),
                               m.face_areas * math.exp(0.7), rtol=1e-12)


def test_json_round_trip(tmp_path):
    m = build_mesh(torus_gluing(0.3 + 1.1j, [(0.5 + 0.55j, math.pi)]), 2)
    m.save(tmp_path / "mesh.json")
    back = ConeMesh.load(tmp_path / "mesh.json")
    np.testing.assert_array_equal(back.faces, m.faces)
    np.testing.assert_allclose(back.charts, m.charts, atol=0)
    assert back.marked == m.marked and back.genus == m.genus
    assert len(back.gluings) == len(m.gluings)


def test_degenerate_modulus_rejected():
    with pytest.raises(MeshError):
        build_mesh(torus_gluing(1.0 + 0j), 1)


def test_inverted_face_rejected():
    m = build_mesh(torus_gluing(), 0)
    charts = m.charts.copy()
    charts[0] = charts[0][[0, 2, 1]]
    with pytest.raises(MeshError):
        ConeMesh(m.faces, charts, m.gluings, m.genus)
