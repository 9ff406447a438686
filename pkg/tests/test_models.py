import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from spdedist.bounds import varphi
from spdedist.models import (
    SvenssonParams,
    build_gbm,
    build_halfline_ode,
    build_hjmm,
    build_rate_model,
    default_rate_params,
    hjm_drift,
    hjmm_epsilon_closed_form,
    hjmm_epsilon_quadrature,
    negative_rate_diagnostics,
    projected_state_process,
    rate_eigenfunction,
    rate_eigenvalue,
    svensson_curve,
    unbounded_functional_demo,
)
from spdedist.spaces import Curve, Filipovic, Grid
from spdedist.stochastic import sample_brownian_panel


@pytest.fixture(scope="module")
def rate():
    return build_rate_model(default_rate_params(Grid.interior(255)))


def test_halfline_setup():
    s = build_halfline_ode(-0.5, 2.0)
    assert s.epsilon == 1.0
    assert s.distance_at_a(1.0) == pytest.approx(2.0 * (1 - math.exp(-0.5)))
    assert build_halfline_ode(0.3, 1.0).epsilon == 0.0
    with pytest.raises(ValueError):
        build_halfline_ode(-0.5, 0.0)


def test_gbm_setup():
    g = build_gbm(0.1, 0.5)
    assert g.gamma == 0.5
    assert g.rho(2.0) == pytest.approx(0.25)
    assert g.exact_solution(2.0, 1.0, 0.0) == pytest.approx(2.0 * math.exp(0.1 - 0.125))
    assert g.kset.distance(-1.0) == 0.0 and g.kset.distance(1.5) == 1.5


def test_hjmm_epsilon_closed_form_against_quadrature():
    z6, z7, g = 0.8, 1.9, 0.2
    f = lambda x: (-2 * z6 * math.exp(-2 * z6 * x) + z7 * math.exp(-z7 * x)) ** 2 * math.exp(g * x)
    oracle = math.sqrt(quad(f, 0, math.inf, limit=200)[0]) / z6
    assert hjmm_epsilon_closed_form(z6, z7, g) == pytest.approx(oracle, rel=1e-10)
    space = Filipovic(g, Grid.log_spaced())
    assert hjmm_epsilon_quadrature(z6, z7, space) == pytest.approx(oracle, rel=1e-5)
    assert hjmm_epsilon_closed_form(1.0, 2.0, 0.3) == 0.0


def test_hjmm_epsilon_grows_with_mismatch():
    eps = [hjmm_epsilon_closed_form(1.0, z7, 0.2) for z7 in (2.0, 2.5, 3.0, 4.0)]
    assert eps[0] == 0 and np.all(np.diff(eps) > 0)


def test_hjm_drift_matches_closed_form():
    grid = Grid.log_spaced()
    z6 = 0.7
    sig = Curve(grid, np.exp(-z6 * grid.points), 0.0)
    x = grid.points
    expected = (np.exp(-z6 * x) - np.exp(-2 * z6 * x)) / z6
    assert np.max(np.abs(hjm_drift([sig]).values - expected)) < 1e-6
    with pytest.raises(ValueError):
        hjm_drift([Curve(grid, np.ones_like(x), 1.0)])


def test_hjmm_setup_drift_distance_and_shift_invariance():
    s = build_hjmm(1.0, 2.5, 0.2)
    assert s.kset.distance(s.alpha) <= s.epsilon * (1 + 1e-4)
    assert s.kset.distance(s.sigma) < 1e-12
    for h in s.kset.basis:
        shifted = s.model.deterministic.semigroup(0.5, h)
        assert s.kset.distance(shifted) < 1e-5 * max(1.0, s.space.norm(h))


def test_svensson_curve_lies_in_subspace():
    s = build_hjmm(1.0, 2.0, 0.2)
    h = svensson_curve(s.space.grid, SvenssonParams(0.03, -0.01, 0.02, 0.01, -0.02, 1.0, 2.0))
    assert s.kset.distance(h) < 1e-10
    assert np.allclose(s.kset.coefficients(h), [0.03, -0.01, 0.02, 0.01, -0.02], atol=1e-9)


def test_rate_eigenvalues():
    assert rate_eigenvalue(1, 0.5) == pytest.approx(-3.4674011, abs=1e-7)
    lam = rate_eigenvalue(np.arange(1, 5), 0.5)
    assert np.all(np.diff(lam) < 0)


def test_spectral_semigroup_is_exact_on_eigenfunctions(rate):
    u = rate_eigenfunction(rate.space.grid, 3, 0.5)
    out = rate.semigroup(0.2, u)
    assert np.max(np.abs(out.values - math.exp(0.2 * rate_eigenvalue(3, 0.5)) * u.values)) < 1e-12
    h = rate.params.alpha_curve
    a = rate.semigroup(0.1, rate.semigroup(0.25, h))
    assert np.max(np.abs(a.values - rate.semigroup(0.35, h).values)) < 1e-12
    integ = rate.semigroup.integral(0.3, u)
    assert np.max(np.abs(integ.values - varphi(rate_eigenvalue(3, 0.5), 0.3) * u.values)) < 1e-12


def test_spectral_semigroup_is_contractive(rate, rng):
    for _ in range(5):
        h = Curve(rate.space.grid, rng.standard_normal(len(rate.space.grid)))
        assert rate.space.norm(rate.semigroup(0.05, h)) <= rate.space.norm(h)


def test_rate_setup_epsilons(rate):
    assert rate.epsilon > 0 and rate.epsilon_graph >= rate.epsilon
    assert rate.kset.distance(rate.params.sigma_curve) < 1e-10
    assert rate.kset.distance(rate.projected_alpha) < 1e-10
    params = default_rate_params(Grid.interior(255))
    with pytest.raises(ValueError):
        build_rate_model(type(params)(0.5, params.alpha_curve, params.alpha_curve, (1, 2)))


def test_projected_state_zero_path_closed_form(rate):
    panel = sample_brownian_panel(1, 1.0, 64, seed=0, paths=1)
    zero = type(panel)(panel.T, panel.m, panel.levels, 0 * panel.values, panel.path_ids, panel.seed)
    res = projected_state_process(rate, [1.0, -0.5], zero)
    lam = rate.eigenvalues
    t = res.times[:, None]
    exact = np.exp(lam * t) * np.array([1.0, -0.5]) + varphi(lam[None, :], t) * rate.b
    assert np.max(np.abs(res.z_explicit - exact)) < 1e-13


def test_projected_state_euler_converges(rate):
    gaps = []
    for sub in (4, 8):
        panel = sample_brownian_panel(1, 1.0, 64, seed=3, substeps=sub, paths=1)
        gaps.append(projected_state_process(rate, [0.2, 0.1], panel).sup_gap)
    assert gaps[1] < gaps[0]


def test_negative_rate_diagnostics_shapes():
    grid = Grid.log_spaced()
    space = Filipovic(0.1, grid)
    neg = negative_rate_diagnostics(Curve(grid, np.full(len(grid), -0.05), -0.05), space=space)
    assert neg["shape"] == "negative" and neg["cone_distance"] == pytest.approx(0.05, abs=1e-6)
    pos = negative_rate_diagnostics(svensson_curve(grid, SvenssonParams(0.02, 0.01)), space=space)
    assert pos["shape"] == "nonnegative" and pos["cone_distance"] < 1e-10
    sv = negative_rate_diagnostics(svensson_curve(grid, SvenssonParams(0.02, -0.03, 0, 0, 0, 1, 2)),
                                   space=space)
    assert sv["shape"] == "single sign change"
    assert sv["x0"] == pytest.approx(math.log(1.5), abs=1e-4)
    assert sv["passed"]
    assert sv["cone_distance"] <= sv["negative_part_integral"] * (1 + 1e-3)


def test_unbounded_functional_demo():
    rows = unbounded_functional_demo(0.5, 10000)
    ratios = [r["ratio"] for r in rows]
    assert all(r["passed"] for r in rows)
    assert np.all(np.diff(ratios) > 0) and ratios[-1] > 100
    for r in rows:
        assert r["norm_sq"] == pytest.approx(r["norm_sq_exact"], rel=1e-5)
    with pytest.raises(ValueError):
        unbounded_functional_demo(0.5, 3)


@settings(max_examples=30)
@given(st.floats(0.05, 1.5), st.floats(0.05, 3.0))
def test_hjmm_epsilon_zero_only_on_matched_rates(z6, dz):
    g = 0.1
    eps = hjmm_epsilon_closed_form(z6, 2 * z6 + dz, g)
    assert eps > 0
