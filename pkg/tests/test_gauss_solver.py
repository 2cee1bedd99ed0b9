import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germforge.background import torus_background
from germforge.errors import (ConvergenceError, InfeasibleError, PoleAngleError,
                              SettingError)
from germforge.gauss_solver import (GeometrySetting, Setting, Solution, assemble, continuation,
                                    solve, stability_spectrum)
from germforge.background import HQDField, lumped_weights, weierstrass_pole_pair

SETTINGS = [("hyp-min", 0.0), ("hyp-cmc", 0.5), ("ads-max", 0.0), ("ads-cmc", 0.5),
            ("ds-cmc", 1.5), ("mink-cmc", 0.7)]


@pytest.mark.parametrize("name,H,err", [("ads-cmc", 1.2, SettingError), ("ds-cmc", 0.9, SettingError),
                                        ("mink-cmc", 0.0, SettingError), ("nope", 0.0, SettingError)])
def test_invalid_settings(name, H, err):
    with pytest.raises(err):
        GeometrySetting.parse(name, H)


def test_coefficients_table():
    H = 0.5
    table = {"hyp-min": (-1, -1), "hyp-cmc": (H * H - 1, -1), "ads-max": (-1, 1),
             "ads-cmc": (-(1 + H * H), 1), "ds-cmc": (1 - 1.5 ** 2, 1), "mink-cmc": (-0.49, 1)}
    for name, h in SETTINGS:
        a, b = GeometrySetting.parse(name, h).coefficients
        assert (a, b) == pytest.approx(table[name])


@pytest.mark.parametrize("name,H", SETTINGS)
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_gradient_and_hessian_match_energy(name, H, seed):
    mesh, hqd = torus_background(0.1 + 1.05j, 0.8 - 0.3j, 1)
    prob = assemble(GeometrySetting.parse(name, H), mesh, hqd, check_feasibility=False)
    rng = np.random.default_rng(seed)
    u, d = 0.3 * rng.standard_normal(prob.n), rng.standard_normal(prob.n)
    h = 1e-5
    fd = (prob.energy(u + h * d) - prob.energy(u - h * d)) / (2 * h)
    assert fd == pytest.approx(prob.gradient(u) @ d, rel=1e-6, abs=1e-8)
    fd2 = (prob.gradient(u + h * d) - prob.gradient(u - h * d)) / (2 * h)
    np.testing.assert_allclose(fd2, prob.hessian(u) @ d, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_ads_torus_constant_root(c):
    mesh, hqd = torus_background(1j, c, 3)
    sol = solve(assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd))
    assert np.abs(sol.u - 0.5 * math.log(c)).max() < 1e-9
    assert sol.converged and sol.lambda_min > 0


def test_convex_settings_have_positive_spectrum(ads_lshape_germ):
    germ, prob = ads_lshape_germ
    vals = stability_spectrum(prob, germ.u, k=4)
    assert vals[0] > 0 and np.all(np.diff(vals) >= -1e-12)


def test_hyperbolic_torus_with_nonzero_t_is_infeasible():
    mesh, hqd = torus_background(1j, 0.3, 2)
    with pytest.raises(InfeasibleError, match="AM-GM"):
        assemble(GeometrySetting(Setting.HYP_MINIMAL), mesh, hqd)


def test_flat_torus_without_differential_is_infeasible_for_ads():
    mesh, hqd = torus_background(1j, 0.0, 2)
    with pytest.raises(InfeasibleError):
        assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd)


def test_pole_above_pi_rejected():
    mesh, hqd = weierstrass_pole_pair(refinement=2, theta=1.5 * math.pi)
    with pytest.raises(PoleAngleError):
        assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd)


def test_newton_iteration_cap_raises_with_last_iterate(lshape3):
    mesh, hqd = lshape3
    prob = assemble(GeometrySetting(Setting.HYP_MINIMAL), mesh, hqd, scale=0.0)
    with pytest.raises(ConvergenceError) as info:
        solve(prob, max_iter=1)
    assert info.value.solution is not None
    assert info.value.solution.u.shape == (prob.n,)


def test_warm_start_agrees_with_cold_start(lshape3):
    mesh, hqd = lshape3
    prob = assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd, scale=0.5)
    cold = solve(prob)
    warm = solve(prob, cold.u + 0.01)
    assert np.abs(cold.u - warm.u).max() < 1e-8
    assert np.abs(prob.gradient(cold.u)).max() < 1e-9


def test_solution_json_round_trip(tmp_path, lshape3):
    mesh, hqd = lshape3
    sol = solve(assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd))
    sol.save(tmp_path / "s.json")
    back = Solution.load(tmp_path / "s.json")
    np.testing.assert_array_equal(back.u, sol.u)
    assert back.residual == sol.residual and back.iterations == sol.iterations


def test_hyperbolic_continuation_reports_fold(lshape3):
    mesh, hqd = lshape3
    rep = continuation(GeometrySetting(Setting.HYP_MINIMAL), mesh, hqd,
                       np.round(np.arange(0, 2.21, 0.2), 10), bisect=2)
    assert rep.folded and rep.fold_s is not None
    assert rep.points[0].s == 0.0
    assert np.all(np.diff(rep.lambda_mins) < 1e-8)
    with pytest.raises(ValueError):
        continuation(GeometrySetting(Setting.HYP_MINIMAL), mesh, hqd, [0.5, 1.0])


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.7])
def test_conformal_covariance(lam, lshape3):
    mesh, hqd = lshape3
    setting = GeometrySetting(Setting.ADS_MAXIMAL)
    base = solve(assemble(setting, mesh, hqd))
    # q = t dz^2 is invariant under z -> lam z when t -> t / lam^2
    big = mesh.scaled(lam)
    t = hqd.t / lam ** 2
    scaled = solve(assemble(setting, big, HQDField(t, lumped_weights(big, t), hqd.orders)))
    assert np.abs(scaled.u - (base.u - math.log(lam))).max() < 1e-9


def test_fuchsian_spectrum_lower_bound(lshape3):
    mesh, hqd = lshape3
    prob = assemble(GeometrySetting(Setting.HYP_MINIMAL), mesh, hqd, scale=0.0)
    sol = solve(prob)
    assert sol.lambda_min >= 2 * np.exp(2 * sol.u).min() * (1 - 1e-9)


def test_ads_branch_never_folds(lshape3):
    mesh, hqd = lshape3
    rep = continuation(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd, np.linspace(0.5, 10, 8))
    assert not rep.folded and np.all(rep.lambda_mins > 0)
