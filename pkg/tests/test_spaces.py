import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from spdedist.errors import (
    BoundaryConditionError,
    DegenerateGridError,
    GridMismatchError,
    IncompleteCurveError,
)
from spdedist.spaces import (
    Curve,
    Filipovic,
    GraphNorm,
    Grid,
    L2UnitInterval,
    RateGenerator,
    ScalarGenerator,
    ScalarLine,
    TranslationGenerator,
    apply_generator,
    differentiate,
    inner_product,
    norm,
)


def exp_curve(grid, b, c=0.0):
    return Curve(grid, c + np.exp(-b * grid.points), c)


# ---------------------------------------------------------------- grids


def test_grid_constructors():
    g = Grid.interior(4)
    assert np.allclose(g.points, [0.2, 0.4, 0.6, 0.8])
    lg = Grid.log_spaced(x_max=30.0, n=2048)
    assert lg.points[0] == 0.0 and lg.x_max == pytest.approx(30.0)
    assert len(lg) == 2048 and np.all(np.diff(lg.points) > 0)
    with pytest.raises(AttributeError):
        lg.points = None


def test_grid_rejects_unsorted():
    with pytest.raises(ValueError):
        Grid([0.0, 2.0, 1.0])


# --------------------------------------------------------------- curves


def test_curve_arithmetic_and_immutability(small_grid):
    a = exp_curve(small_grid, 1.0, 0.5)
    b = exp_curve(small_grid, 2.0, -0.25)
    s = 2.0 * a - b / 4.0
    assert np.allclose(s.values, 2 * a.values - b.values / 4)
    assert s.value_at_infinity == pytest.approx(1.0 + 0.0625)
    with pytest.raises(AttributeError):
        a.values = None
    with pytest.raises(ValueError):
        a.values[0] = 1.0


def test_curve_grid_mismatch(small_grid, log_grid):
    with pytest.raises(GridMismatchError):
        exp_curve(small_grid, 1.0) + exp_curve(log_grid, 1.0)
    with pytest.raises(GridMismatchError):
        Curve(small_grid, np.zeros(3))


def test_curve_csv_round_trip_is_exact(small_grid, rng):
    c = Curve(small_grid, rng.standard_normal(len(small_grid)), math.pi)
    back = Curve.from_csv(c.to_csv())
    assert np.array_equal(back.values, c.values)
    assert np.array_equal(back.grid.points, small_grid.points)
    assert back.value_at_infinity == c.value_at_infinity


def test_scalar_line():
    s = ScalarLine()
    assert s.inner(2.0, -3.0) == -6.0
    assert s.norm(-4.0) == 4.0


# ----------------------------------------------------- Filipovic space


@pytest.mark.parametrize("b,gamma", [(1.0, 0.1), (2.0, 0.1), (0.6, 0.2), (3.0, 1.0)])
def test_filipovic_norm_of_exponential(log_grid, b, gamma):
    # |e^{-b.}|^2 = int b^2 e^{(gamma - 2b) x} dx = b^2 / (2b - gamma)
    space = Filipovic(gamma, log_grid)
    exact = b * b / (2 * b - gamma)
    assert space.norm(exp_curve(log_grid, b)) ** 2 == pytest.approx(exact, rel=2e-6)


def test_filipovic_point_terms(log_grid):
    eq = Filipovic(0.1, log_grid)
    orig = Filipovic(0.1, log_grid, "original")
    h = exp_curve(log_grid, 1.0, 0.3)
    energy = 1.0 / (2 - 0.1)
    assert eq.inner(h, h) == pytest.approx(0.09 + energy, rel=2e-6)
    # the original norm uses h(0) = 1.3
    assert orig.inner(h, h) == pytest.approx(1.69 + energy, rel=2e-6)


def test_filipovic_against_quadrature(log_grid):
    gamma = 0.3
    space = Filipovic(gamma, log_grid)
    f = lambda x: (1 + x) * np.exp(-x) + 0.1 * np.sin(x) * np.exp(-0.5 * x)  # noqa: E731
    df = lambda x: -x * np.exp(-x) + 0.1 * np.exp(-0.5 * x) * (np.cos(x) - 0.5 * np.sin(x))  # noqa: E731
    energy, _ = quad(lambda x: df(x) ** 2 * math.exp(gamma * x), 0, 80, limit=400)
    h = Curve(log_grid, f(log_grid.points), 0.0)
    assert space.norm(h) ** 2 == pytest.approx(energy, rel=1e-5)


def test_filipovic_needs_value_at_infinity(small_grid):
    with pytest.raises(IncompleteCurveError):
        Filipovic(0.1, small_grid).norm(Curve(small_grid, np.zeros(len(small_grid))))


@pytest.mark.parametrize("kind", ["equivalent", "original"])
def test_filipovic_gram_matches_inner(small_grid, rng, kind):
    space = Filipovic(0.2, small_grid, kind)
    for _ in range(5):
        h = Curve(small_grid, rng.standard_normal(len(small_grid)), rng.standard_normal())
        g = Curve(small_grid, rng.standard_normal(len(small_grid)), rng.standard_normal())
        if kind == "original":
            h = h.with_values(h.values, h.values[-1])
            g = g.with_values(g.values, g.values[-1])
        q = space.coords(h) @ (space.gram @ space.coords(g))
        assert q == pytest.approx(space.inner(h, g), rel=1e-12, abs=1e-12)


vectors = st.lists(st.floats(-10, 10), min_size=65, max_size=65)


@given(vectors, vectors, st.floats(-3, 3))
def test_filipovic_inner_product_axioms(u, v, c):
    grid = Grid.log_spaced(x_max=20.0, n=64, scale=0.5)
    space = Filipovic(0.2, grid)
    h = Curve(grid, u[:64], u[64])
    g = Curve(grid, v[:64], v[64])
    assert space.inner(h, g) == pytest.approx(space.inner(g, h), rel=1e-12, abs=1e-9)
    lhs = space.inner(c * h + g, g)
    assert lhs == pytest.approx(c * space.inner(h, g) + space.inner(g, g), rel=1e-9, abs=1e-6)
    assert space.inner(h, h) >= 0
    assert abs(space.inner(h, g)) <= space.norm(h) * space.norm(g) * (1 + 1e-12) + 1e-9


def test_filipovic_is_positive_definite(small_grid):
    q = Filipovic(0.2, small_grid).gram.toarray()
    assert np.linalg.eigvalsh(q).min() > 0


# ------------------------------------------------------------ L2(0, 1)


def test_l2_sine_norm():
    grid = Grid.interior(1024)
    space = L2UnitInterval(grid)
    s = Curve(grid, np.sin(math.pi * grid.points))
    assert space.norm(s) ** 2 == pytest.approx(0.5, rel=1e-10)
    assert inner_product(space, s, s) == pytest.approx(norm(space, s) ** 2)


def test_l2_eigenfunctions_not_orthogonal():
    # u_n = e^{-x/k} sin(n pi x) are eigenfunctions of a non-self-adjoint operator
    kappa = 0.5
    grid = Grid.interior(1024)
    space = L2UnitInterval(grid)
    u = [Curve(grid, np.exp(-grid.points / kappa) * np.sin(n * math.pi * grid.points)) for n in (1, 2)]
    oracle, _ = quad(lambda x: math.exp(-2 * x / kappa) * math.sin(math.pi * x) * math.sin(2 * math.pi * x), 0, 1)
    assert abs(oracle) > 0.01
    assert space.inner(u[0], u[1]) == pytest.approx(oracle, rel=1e-5)


# ------------------------------------------------------------ generators


def test_scalar_generator():
    g = ScalarGenerator(-0.5)
    assert g.apply(2.0) == -1.0
    assert g.semigroup(2.0, 3.0) == pytest.approx(3.0 * math.exp(-1.0))


def test_differentiate_second_order(log_grid):
    h = exp_curve(log_grid, 1.0, 0.2)
    d = differentiate(Filipovic(0.1, log_grid), h)
    assert np.max(np.abs(d.values + np.exp(-log_grid.points))) < 1e-4
    assert d.value_at_infinity == 0.0
    assert apply_generator(TranslationGenerator(), h).values == pytest.approx(d.values)


def test_differentiate_degenerate_grid():
    g = Grid([0.0, 1.0])
    with pytest.raises(DegenerateGridError):
        differentiate(Filipovic(0.1, g), Curve(g, [1.0, 2.0], 2.0))


def test_rate_generator_boundary_check():
    grid = Grid.interior(256)
    gen = RateGenerator(0.5, grid)
    with pytest.raises(BoundaryConditionError):
        gen.apply(Curve(grid, np.ones(len(grid))))


@pytest.mark.parametrize("n", [1, 3, 8])
def test_rate_generator_eigenrelation(n):
    kappa = 0.5
    lam = -(1 + n * n * math.pi ** 2 * kappa ** 2) / (2 * kappa)
    errs = []
    for pts in (255, 511):
        grid = Grid.interior(pts)
        u = Curve(grid, np.exp(-grid.points / kappa) * np.sin(n * math.pi * grid.points))
        au = RateGenerator(kappa, grid).apply(u, check=False)
        errs.append(np.max(np.abs(au.values - lam * u.values)) / np.max(np.abs(lam * u.values)))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_rate_generator_adjoint_consistency():
    kappa = 0.5
    grid = Grid.interior(512)
    space = L2UnitInterval(grid)
    gen = RateGenerator(kappa, grid)
    adj = gen.adjoint_operator
    u = [Curve(grid, np.exp(-grid.points / kappa) * np.sin(n * math.pi * grid.points)) for n in range(1, 6)]
    for a in u:
        for b in u:
            lhs = space.inner(gen.apply(a, check=False), b)
            rhs = space.inner(a, adj.apply(b, check=False))
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_graph_norm_gram():
    grid = Grid.interior(256)
    space = GraphNorm(L2UnitInterval(grid), RateGenerator(0.5, grid))
    h = Curve(grid, np.sin(math.pi * grid.points))
    g = Curve(grid, np.sin(2 * math.pi * grid.points) * grid.points)
    direct = space.inner(h, g)
    via_gram = space.coords(h) @ (space.gram @ space.coords(g))
    assert direct == pytest.approx(via_gram, rel=1e-8)  # stencil entries ~ 1e4 amplify rounding
