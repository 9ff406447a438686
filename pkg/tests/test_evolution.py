import math

import numpy as np
import pytest

from spdedist.errors import DivergenceError
from spdedist.evolution import (
    EvolutionModel,
    PiecewiseDrift,
    TranslationSemigroup,
    scalar_model,
    semigroup_growth,
    solve_mild,
    solve_mild_inhomogeneous,
    verify_pde_bound,
)
from spdedist.sets import HalfLineAbove
from spdedist.spaces import Curve, Filipovic, TranslationGenerator


def test_zero_drift_reproduces_semigroup():
    m = scalar_model(-0.7)
    tr = solve_mild(m, 2.0, 1.5, 30)
    assert np.allclose(tr.array(), 2.0 * np.exp(-0.7 * tr.times), rtol=1e-14)


def test_exponential_euler_first_order():
    m = scalar_model(-0.5, drift=lambda x: 0.3 * x, lipschitz=0.3)
    exact = math.exp(-0.2)
    errs = [abs(solve_mild(m, 1.0, 1.0, n).final - exact) for n in (100, 200, 400)]
    assert 1.9 < errs[0] / errs[1] < 2.1 and 1.9 < errs[1] / errs[2] < 2.1


def test_batched_states():
    m = scalar_model(0.2)
    tr = solve_mild(m, np.array([1.0, -2.0]), 1.0, 10)
    assert tr.array().shape == (11, 2)


def test_piecewise_drift_inserts_breakpoints():
    m = scalar_model(0.0)
    drift = PiecewiseDrift([0.0, 0.35], [lambda x: 1.0 + 0.0 * x, lambda x: -1.0 + 0.0 * x])
    tr = solve_mild_inhomogeneous(m, drift, 0.0, 0.0, 1.0, 10)
    assert np.any(np.isclose(tr.times, 0.35))
    # integral of the drift: 0.35 - 0.65
    assert tr.final == pytest.approx(-0.3, abs=1e-12)
    assert drift.index(0.35) == 1 and drift.index(0.3499) == 0


def test_piecewise_drift_validation():
    with pytest.raises(ValueError):
        PiecewiseDrift([0.0, 0.0], [abs, abs])


def test_divergence_is_reported():
    m = scalar_model(0.0, drift=lambda x: 1e300 * x)
    with pytest.raises(DivergenceError) as info:
        solve_mild(m, 1e10, 1.0, 5)
    assert info.value.step >= 1


def test_halfline_bound_equality():
    beta, a = -0.5, 1.0
    m = scalar_model(beta)
    eps = -beta * a
    rep = verify_pde_bound(m, HalfLineAbove(a), a, eps, 2.0, 1000, flow=lambda t: a * math.exp(beta * t))
    assert rep.passed
    assert np.max(np.abs(rep.lhs - rep.rhs)) < 1e-12


def test_bound_with_drift_bound():
    m = scalar_model(0.0, drift=lambda x: 0.1 * np.sin(x), lipschitz=0.1, bound=0.1)
    rep = verify_pde_bound(m, HalfLineAbove(1.0), 0.0, 0.1, 1.0, 200)
    assert rep.rhs_bounded is not None and rep.passed


def test_trajectory_csv_and_lookup():
    tr = solve_mild(scalar_model(-1.0), 1.0, 1.0, 4)
    assert tr.at(0.5) == pytest.approx(math.exp(-0.5))
    with pytest.raises(KeyError):
        tr.index_of(0.3)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,value" and len(lines) == 6


def test_translation_semigroup(log_grid, filipovic):
    S = TranslationSemigroup(filipovic)
    h = Curve(log_grid, 0.2 + np.exp(-log_grid.points), 0.2)
    shifted = S(0.7, h)
    expected = 0.2 + np.exp(-0.7) * np.exp(-log_grid.points)
    assert np.max(np.abs(shifted.values - expected)) < 1e-6
    twice = S(0.3, S(0.4, h))
    assert np.max(np.abs(twice.values - expected)) < 1e-6
    model = EvolutionModel(filipovic, S, TranslationGenerator())
    assert semigroup_growth(model, [h], [0.1, 1.0, 5.0]) <= 1.0 + 1e-6
    with pytest.raises(ValueError):
        S(-1.0, h)
