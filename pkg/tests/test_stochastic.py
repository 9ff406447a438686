import math

import numpy as np
import pytest

from spdedist.evolution import scalar_model, solve_mild
from spdedist.models import build_gbm
from spdedist.sets import HalfLineBelow
from spdedist.stochastic import (
    NoiseSpec,
    StochModel,
    mc_distance,
    path_distances,
    pathwise_wz_bound_check,
    sample_brownian_panel,
    solve_spde,
    solve_wong_zakai,
    stratonovich_correction,
    verify_spde_bound,
)
from spdedist.bounds import StochasticBoundTable


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec([1.0, -1.0], [abs, abs])
    with pytest.raises(ValueError):
        NoiseSpec([1.0], [abs, abs])
    assert NoiseSpec([1.0, 0.5], [abs, abs], modes_r=1).r == 1


def test_panel_paths_do_not_depend_on_batch():
    a = sample_brownian_panel(2, 1.0, 8, seed=5, substeps=4, paths=10)
    b = sample_brownian_panel(2, 1.0, 8, seed=5, substeps=4, paths=[7, 3])
    assert np.array_equal(a.values[7], b.values[0])
    assert np.array_equal(a.values[3], b.values[1])
    c = sample_brownian_panel(2, 1.0, 8, seed=5, substeps=4, paths=10, threads=3)
    assert np.array_equal(a.values, c.values)


def test_panel_refinement_keeps_coarse_nodes():
    coarse = sample_brownian_panel(1, 1.0, 8, seed=2, substeps=1, paths=3)
    fine = sample_brownian_panel(1, 1.0, 8, seed=2, substeps=8, paths=3)
    assert np.array_equal(fine.nodes(8), coarse.values)
    assert fine.coarsen(4).m == 4 and fine.coarsen(4).cell_slopes().shape == (3, 1, 4)
    with pytest.raises(ValueError):
        fine.nodes(7)


def test_panel_increment_variance():
    p = sample_brownian_panel(1, 2.0, 16, seed=11, paths=4000)
    inc = p.increments(16)
    assert np.var(inc) == pytest.approx(2.0 / 16, rel=0.03)


def test_stratonovich_correction_affine_field():
    gbm = build_gbm(0.05, 0.2)
    m = StochModel(gbm.model.deterministic, gbm.model.noise)
    assert stratonovich_correction(m, 3.0) == pytest.approx(0.5 * 0.04 * 3.0, rel=1e-10)


def test_zero_noise_matches_deterministic():
    det = scalar_model(-0.3, drift=lambda x: 0.1 * x, lipschitz=0.1)
    m = StochModel(det, NoiseSpec([1.0], [lambda x: 0.0 * x]))
    panel = sample_brownian_panel(1, 1.0, 20, seed=0, paths=3)
    a = solve_spde(m, 1.0, 1.0, 20, panel).array()
    b = solve_mild(det, 1.0, 1.0, 20).array()
    assert np.allclose(a, b[:, None], rtol=1e-15)


def test_gbm_euler_strong_convergence():
    gbm = build_gbm(0.05, 0.4)
    panel = sample_brownian_panel(1, 1.0, 16, seed=9, substeps=32, paths=200)
    exact = gbm.exact_solution(1.0, 1.0, panel.values[:, 0, -1])
    errs = []
    for steps in (64, 256):
        x = solve_spde(gbm.model, 1.0, 1.0, steps, panel).final
        errs.append(np.sqrt(np.mean((x - exact) ** 2)))
    assert errs[1] < errs[0]


def test_wong_zakai_matches_ito_solution_at_nodes():
    # commutative scalar noise: the piecewise-linear problem is solved exactly
    # by x exp((mu - sigma^2/2) t + sigma B(t)), so only substep error remains
    gbm = build_gbm(0.05, 0.4)
    panel = sample_brownian_panel(1, 1.0, 8, seed=1, paths=100)
    exact = gbm.exact_solution(1.0, 1.0, panel.values[:, 0, -1])
    errs = []
    for sub in (32, 64, 128):
        x = solve_wong_zakai(gbm.model, 1.0, panel, sub).final
        errs.append(np.sqrt(np.mean((x - exact) ** 2)))
    assert 1.8 < errs[0] / errs[1] < 2.2 and 1.8 < errs[1] / errs[2] < 2.2


def test_pathwise_bound_gbm():
    gbm = build_gbm(0.05, 0.2)
    panel = sample_brownian_panel(1, 1.0, 16, seed=3, paths=64)
    tr = solve_wong_zakai(gbm.model, 1.0, panel, 4)
    rep = pathwise_wz_bound_check(tr, gbm.kset, panel, gbm.gamma, 0.0, gbm.model.L)
    assert rep.passed and rep.lhs.shape == (64, len(tr.times))


def test_mc_distance_thread_independent_and_checks():
    gbm = build_gbm(0.05, 0.2)
    a = mc_distance(gbm.model, gbm.kset, 1.0, [0.5, 1.0], 300, seed=1, steps=20, threads=1, block_size=64)
    b = mc_distance(gbm.model, gbm.kset, 1.0, [0.5, 1.0], 300, seed=1, steps=20, threads=4, block_size=64)
    assert a.to_csv() == b.to_csv()
    assert np.all(a.values >= a.mean_values)
    with pytest.raises(ValueError):
        mc_distance(gbm.model, gbm.kset, 1.0, [1.0], 50, seed=1)
    with pytest.raises(ValueError):
        mc_distance(gbm.model, gbm.kset, 1.0, [0.33, 1.0], 100, seed=1, steps=10)


def test_verify_spde_bound_and_path_distances():
    gbm = build_gbm(0.05, 0.2)
    mc = mc_distance(gbm.model, HalfLineBelow(0.0), 1.0, [0.5, 1.0], 2000, seed=2, steps=20)
    tab = StochasticBoundTable.from_functions([0.5, 1.0], lambda t: np.exp(0.3 * t), lambda t: t)
    rep = verify_spde_bound(mc, tab, 1.0, 0.0, 0.0, p=2)
    assert rep.passed
    d = path_distances(gbm.model, gbm.kset, -1.0, 1.0, 10, seed=2, paths=5)
    assert d.shape == (5, 11) and d.max() == 0.0


def test_panel_increment_variance_within_3se():
    p = sample_brownian_panel(1, 1.0, 4, seed=21, paths=25000)
    inc = p.increments(4).ravel()
    sq = inc ** 2
    se = np.std(sq, ddof=1) / math.sqrt(sq.size)
    assert abs(np.mean(sq) - 0.25) <= 3 * se
    assert np.all(p.values[:, :, 0] == 0.0)


def test_mc_standard_errors_shrink_with_paths():
    gbm = build_gbm(0.05, 0.2)
    a = mc_distance(gbm.model, gbm.kset, 1.0, [1.0], 1000, seed=4, steps=10)
    b = mc_distance(gbm.model, gbm.kset, 1.0, [1.0], 4000, seed=4, steps=10)
    ratio = a.standard_errors[0] / b.standard_errors[0]
    assert 1.6 < ratio < 2.5
