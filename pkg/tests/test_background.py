import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germforge.background import (HQDField, edge_midpoint_mismatch, lshape_background,
                                  pole_pair_function, residue, scale_hqd, torus_background,
                                  weierstrass_pole_pair, weierstrass_zeta,
                                  weierstrass_zeta_direct)
from germforge.errors import HQDError, MeshError

TAU = 0.2 + 1.1j


def test_zeta_truncation_converges():
    z = np.array([0.3 + 0.2j, -0.1 + 0.45j, 0.7 + 0.9j])
    a, b = weierstrass_zeta(z, TAU, 8), weierstrass_zeta(z, TAU, 16)
    assert np.abs(a - b).max() / np.abs(b).max() < 1e-10


def test_zeta_matches_direct_lattice_sum():
    z = np.array([0.3 + 0.2j, 0.7 + 0.9j])
    ref = weierstrass_zeta(z, TAU, 16)
    assert np.abs(weierstrass_zeta_direct(z, TAU, 200) - ref).max() < 1e-3


def test_zeta_is_odd_with_simple_pole():
    z = np.array([0.31 + 0.17j])
    np.testing.assert_allclose(weierstrass_zeta(-z, TAU), -weierstrass_zeta(z, TAU), atol=1e-12)
    eps = 1e-4
    assert abs(weierstrass_zeta(np.array([eps]), TAU)[0] * eps - 1) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=0.4), st.complex_numbers(min_magnitude=0.2, max_magnitude=2))
def test_pole_pair_is_doubly_periodic_with_opposite_residues(z, c):
    p1, p2 = 0.1 + 0.0j, 0.5 + 0.4j
    fn = pole_pair_function(TAU, p1, p2, c)
    z = np.array([0.3 + 0.25j + 0.1 * z])
    if min(abs(z[0] - p1), abs(z[0] - p2)) < 0.05:
        return
    scale = abs(fn(z)[0]) + abs(c)
    assert abs(fn(z + 1)[0] - fn(z)[0]) < 1e-8 * scale
    assert abs(fn(z + TAU)[0] - fn(z)[0]) < 1e-8 * scale
    assert abs(residue(fn, p1) - c) < 1e-6 * abs(c)
    assert abs(residue(fn, p2) + c) < 1e-6 * abs(c)


def test_pole_pair_background_marks_and_orders():
    mesh, hqd = weierstrass_pole_pair(TAU, 0.1, 0.5 + 0.4j, 1.0, refinement=3)
    assert sorted(hqd.poles) == sorted(mesh.marked)
    assert all(th == pytest.approx(math.pi) for th in mesh.marked.values())
    assert max(mesh.info["snap_distances"]) <= 1 / 8
    fn = pole_pair_function(TAU, *mesh.info["poles"], 1.0)
    assert edge_midpoint_mismatch(mesh, lambda w: fn(np.array([w]))[0]) < 1e-8


def test_pole_pair_rejects_coincident_poles():
    with pytest.raises(HQDError):
        weierstrass_pole_pair(1j, 0.0, 1.0 + 1j, refinement=2)


def test_torus_background_constant_field():
    mesh, hqd = torus_background(1j, 0.5 - 0.25j, 2)
    np.testing.assert_allclose(hqd.t, 0.5 - 0.25j)
    assert hqd.Q.sum() == pytest.approx(abs(0.5 - 0.25j) ** 2 * mesh.total_area)
    with pytest.raises(MeshError):
        torus_background(2.0, 1.0, 1)


def test_lshape_cone_is_a_double_zero():
    mesh, hqd = lshape_background(refinement=2)
    assert list(hqd.orders.values()) == [2]
    assert hqd.poles == []


def test_scaling_law():
    mesh, hqd = torus_background(1j, 1.0 + 1j, 2)
    sd = scale_hqd((mesh, hqd), 0.5)
    np.testing.assert_allclose(sd.field.t, 0.5 * hqd.t)
    np.testing.assert_allclose(sd.field.Q, 0.25 * hqd.Q)
    assert scale_hqd(sd, 2.0).s == pytest.approx(1.0)
    with pytest.raises(HQDError):
        scale_hqd((mesh, hqd), -1.0)


def test_json_round_trip_and_q_rebuild(tmp_path):
    mesh, hqd = lshape_background(refinement=2)
    hqd.save(tmp_path / "h.json")
    back = HQDField.load(tmp_path / "h.json")
    np.testing.assert_array_equal(back.t, hqd.t)
    np.testing.assert_array_equal(back.Q, hqd.Q)
    assert back.orders == hqd.orders
    data = hqd.to_json()
    del data["Q"]
    np.testing.assert_allclose(HQDField.from_json(data, mesh).Q, hqd.Q)
    with pytest.raises(HQDError):
        HQDField.from_json(data)


def test_invalid_fields_rejected():
    with pytest.raises(HQDError):
        HQDField([np.nan], [0.0])
    with pytest.raises(HQDError):
        HQDField([1.0], [-1.0])
    with pytest.raises(HQDError):
        HQDField([1.0], [1.0], {0: -2})
