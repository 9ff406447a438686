"""Ready-made models with closed-form reference quantities.

* half-line ODE ``xi' = beta xi`` with ``K = [a, inf)``;
* geometric Brownian motion with ``K = (-inf, 0]``;
* HJMM forward-rate equation on the Filipovic space with the extended
  Svensson subspace;
* the interest-rate SPDE ``dX = ((kappa/2) X'' + X' + alpha) dt + sigma dW``
  on L^2((0,1)), solved spectrally, with ``K = span{u_n : n in I}``;
* the sequence ``g_n`` showing that ``g -> g'(0)`` is unbounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
from scipy.integrate import cumulative_simpson

from .bounds import varphi
from .errors import SpaceMismatchError
from .evolution import EvolutionModel, TranslationSemigroup, scalar_model
from .sets import (
    HalfLineAbove,
    HalfLineBelow,
    NonnegativeCone,
    Subspace,
    graph_norm_projection,
    negative_part_norm,
)
from .spaces import (
    Curve,
    Filipovic,
    GraphNorm,
    Grid,
    L2UnitInterval,
    RateGenerator,
    TranslationGenerator,
)
from . import rng as _rng
from .parallel import blocks, map_ordered
from .stochastic import (
    BrownianPanel,
    NoiseSpec,
    StochModel,
    rms_with_jackknife,
    sample_brownian_panel,
    solve_spde,
)

__all__ = [
    "HalflineSetup",
    "GbmSetup",
    "HjmmSetup",
    "SvenssonParams",
    "RateModelParams",
    "RateSetup",
    "SpectralSemigroup",
    "build_halfline_ode",
    "build_gbm",
    "build_hjmm",
    "hjmm_epsilon_closed_form",
    "hjmm_epsilon_quadrature",
    "hjm_drift",
    "svensson_curve",
    "extended_svensson_basis",
    "negative_rate_diagnostics",
    "rate_eigenvalue",
    "rate_eigenfunction",
    "default_rate_params",
    "build_rate_model",
    "projected_state_process",
    "rate_projection_gap",
    "unbounded_functional_demo",
    "projection_operator_norms",
]


# ------------------------------------------------------------- half-line


@dataclass(frozen=True, eq=False)
class HalflineSetup:
    """``xi' = beta xi`` on the real line with ``K = [a, inf)``.

    ``model`` puts ``beta`` in the semigroup (``S_t = e^{beta t}``, no
    drift); ``drift_model`` uses ``A = 0`` and ``alpha(x) = beta x``.
    """

    beta: float
    a: float
    model: EvolutionModel
    drift_model: EvolutionModel
    kset: HalfLineAbove
    epsilon: float

    def flow(self, x):
        """Closed-form solution ``t -> x e^{beta t}``."""
        return lambda t: x * math.exp(self.beta * t)

    def distance_at_a(self, t):
        """``d_K(xi(t; a)) = a (1 - e^{beta t})^+``."""
        return max(self.a * (1.0 - math.exp(self.beta * t)), 0.0)


def build_halfline_ode(beta: float, a: float) -> HalflineSetup:
    if not a > 0:
        raise ValueError("a must be positive")
    semi = scalar_model(beta, name="halfline-semigroup")
    drift = scalar_model(0.0, drift=lambda x: beta * x, lipschitz=abs(beta), name="halfline-drift")
    return HalflineSetup(beta, a, semi, drift, HalfLineAbove(a), max(-beta, 0.0) * a)


# ------------------------------------------------------------------- GBM


@dataclass(frozen=True, eq=False)
class GbmSetup:
    """``dX = mu X dt + sigma X dW`` with ``K = (-inf, 0]``."""

    mu: float
    sigma: float
    model: StochModel
    kset: HalfLineBelow

    def exact_solution(self, x, t, w):
        """``x exp((mu - sigma^2/2) t + sigma W(t))``."""
        return x * np.exp((self.mu - 0.5 * self.sigma ** 2) * t + self.sigma * w)

    def expected_distance(self, x, t):
        """``E[d_K(X(t; x))] = e^{mu t} d_K(x)``."""
        return math.exp(self.mu * t) * max(x, 0.0)

    def rho(self, x):
        return 0.5 * self.sigma ** 2 * x

    @property
    def gamma(self):
        """``beta + L`` with ``beta = 0``."""
        return self.model.L


def build_gbm(mu: float, sigma: float) -> GbmSetup:
    # common Lipschitz constant of alpha, alpha - rho and sigma^1
    L = max(abs(mu), abs(mu - 0.5 * sigma ** 2), abs(sigma))
    det = scalar_model(0.0, drift=lambda x: mu * x, lipschitz=L, name="gbm")
    noise = NoiseSpec([1.0], [lambda x: sigma * x])

    def exact(x, t, w):
        return x * np.exp((mu - 0.5 * sigma ** 2) * t + sigma * w)

    model = StochModel(det, noise, correction_rho=lambda x: 0.5 * sigma ** 2 * x,
                       lipschitz=L, exact_solution=exact, name="gbm")
    return GbmSetup(mu, sigma, model, HalfLineBelow(0.0))


# ----------------------------------------------------------------- HJMM


@dataclass(frozen=True)
class SvenssonParams:
    """``F(x) = z1 + (z2 + z3 x) e^{-z6 x} + (z4 + z5 x) e^{-z7 x}``."""

    z1: float = 0.0
    z2: float = 0.0
    z3: float = 0.0
    z4: float = 0.0
    z5: float = 0.0
    z6: float = 1.0
    z7: float = 2.0

    def check(self, gamma):
        if not (self.z6 > gamma / 2 and self.z7 > gamma / 2):
            raise ValueError("need z6, z7 > gamma/2 for membership in the Filipovic space")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.z1 + (self.z2 + self.z3 * x) * np.exp(-self.z6 * x)
                + (self.z4 + self.z5 * x) * np.exp(-self.z7 * x))


def svensson_curve(grid: Grid, p: SvenssonParams) -> Curve:
    return Curve(grid, p(grid.points), p.z1)


def extended_svensson_basis(grid: Grid, z6: float, z7: float):
    """``1, e^{-z6 x}, x e^{-z6 x}, e^{-z7 x}, x e^{-z7 x}`` as Filipovic curves."""
    x = grid.points
    return [
        Curve(grid, np.ones_like(x), 1.0),
        Curve(grid, np.exp(-z6 * x), 0.0),
        Curve(grid, x * np.exp(-z6 * x), 0.0),
        Curve(grid, np.exp(-z7 * x), 0.0),
        Curve(grid, x * np.exp(-z7 * x), 0.0),
    ]


def hjmm_epsilon_closed_form(z6, z7, gamma):
    """``(1/z6) |e^{-2 z6 .} - e^{-z7 .}|`` in the equivalent norm.

    Uses ``|e^{-a.} - e^{-b.}|^2 = a^2/(2a-g) + b^2/(2b-g) - 2ab/(a+b-g)``.
    """
    a, b, g = 2.0 * z6, float(z7), float(gamma)
    if not (a > g / 2 and b > g / 2):
        raise ValueError("need 2 z6, z7 > gamma/2")
    sq = a * a / (2 * a - g) + b * b / (2 * b - g) - 2 * a * b / (a + b - g)
    return math.sqrt(max(sq, 0.0)) / z6


def hjmm_epsilon_quadrature(z6, z7, space: Filipovic):
    """The same quantity measured by the discretized Filipovic norm."""
    x = space.grid.points
    diff = Curve(space.grid, np.exp(-2 * z6 * x) - np.exp(-z7 * x), 0.0)
    return space.norm(diff) / z6


def hjm_drift(sigmas: Sequence[Curve]) -> Curve:
    """No-arbitrage drift ``sum_j sigma^j(x) int_0^x sigma^j(y) dy``.

    The integral uses cumulative Simpson quadrature on the curve's grid.
    Volatilities must vanish at infinity (otherwise the drift diverges).
    """
    out = None
    for s in sigmas:
        if s.value_at_infinity not in (None, 0.0):
            raise ValueError("volatility must vanish at infinity")
        integral = cumulative_simpson(s.values, x=s.grid.points, initial=0.0)
        term = Curve(s.grid, s.values * integral, 0.0)
        out = term if out is None else out + term
    return out


@dataclass(frozen=True, eq=False)
class HjmmSetup:
    """HJMM equation with constant volatility ``e^{-z6 x}``."""

    z6: float
    z7: float
    gamma: float
    space: Filipovic
    model: StochModel
    kset: Subspace
    alpha: Curve
    sigma: Curve
    epsilon: float
    epsilon_quadrature: float

    def point(self, z):
        """Element ``sum_i z_i h_i`` of K."""
        return _combine(z, self.kset.basis)


def build_hjmm(z6: float, z7: float, gamma: float, grid: Optional[Grid] = None,
               norm_kind="equivalent") -> HjmmSetup:
    """Translation-semigroup HJMM model, extended Svensson subspace and its epsilon."""
    if not (z6 > gamma / 2 and z7 > gamma / 2):
        raise ValueError("need z6, z7 > gamma/2")
    grid = grid or Grid.log_spaced()
    space = Filipovic(gamma, grid, norm_kind)
    x = grid.points
    sigma = Curve(grid, np.exp(-z6 * x), 0.0)
    alpha = Curve(grid, (np.exp(-z6 * x) - np.exp(-2 * z6 * x)) / z6, 0.0)
    det = EvolutionModel(
        space, TranslationSemigroup(space), TranslationGenerator(),
        drift=lambda h: alpha, lipschitz=0.0, beta=0.0, bound=space.norm(alpha), name="hjmm",
    )
    noise = NoiseSpec([1.0], [lambda h: sigma])
    model = StochModel(det, noise, correction_rho=lambda h: 0.0 * h, lipschitz=0.0, name="hjmm")
    kset = Subspace(space, extended_svensson_basis(grid, z6, z7))
    return HjmmSetup(
        z6, z7, gamma, space, model, kset, alpha, sigma,
        hjmm_epsilon_closed_form(z6, z7, gamma), hjmm_epsilon_quadrature(z6, z7, space),
    )


def negative_rate_diagnostics(curve: Curve, gamma=None, space: Optional[Filipovic] = None,
                              tol=1e-10) -> dict:
    """Cone distance of a forward curve against the negative-part bound.

    Reports the sign-change location ``x0`` when the curve is negative
    before ``x0`` and nonnegative after, the grid negative-part norm (a
    rigorous bound for the discrete problem), the integral
    ``sqrt(int_0^{x0} |h'|^2 e^{gamma x} dx)`` of the piecewise-linear
    curve, and the cone distance from the QP.
    """
    if space is None:
        if gamma is None:
            raise ValueError("give gamma or a Filipovic space")
        space = Filipovic(gamma, curve.grid)
    if not isinstance(space, Filipovic):
        raise SpaceMismatchError("negative-rate diagnostics need a Filipovic space")
    x, v = curve.grid.points, curve.values
    neg = v < 0
    x0, integral = None, None
    if not neg.any() and curve.value_at_infinity >= 0:
        shape = "nonnegative"
    elif neg.all():
        shape = "negative"
    else:
        k = int(np.argmin(neg))  # first nonnegative node
        if neg[:k].all() and not neg[k:].any() and curve.value_at_infinity >= 0:
            shape = "single sign change"
            x0 = float(x[k] if v[k] == 0 else x[k - 1] - v[k - 1] * (x[k] - x[k - 1]) / (v[k] - v[k - 1]))
            slopes = np.diff(v) / np.diff(x)
            g = space.gamma
            hi = np.minimum(x[1:], x0)
            lo = x[:-1]
            use = lo < x0
            integral = math.sqrt(float(np.sum(
                slopes[use] ** 2 * (np.exp(g * hi[use]) - np.exp(g * lo[use])) / g
            )))
        else:
            shape = "multiple sign changes"
    res = NonnegativeCone(space).project(curve)
    grid_bound = negative_part_norm(space, curve)
    return {
        "shape": shape,
        "x0": x0,
        "negative_part_norm": grid_bound,
        "negative_part_integral": integral,
        "cone_distance": res.distance,
        "converged": res.converged,
        "kkt": res.info.get("kkt"),
        "passed": bool(res.distance <= grid_bound + tol),
    }


# ------------------------------------------------------------ rate model


def rate_eigenvalue(n, kappa):
    """``lambda_n = -(1 + n^2 pi^2 kappa^2) / (2 kappa)``."""
    n = np.asarray(n, dtype=float)
    return -(1.0 + n * n * math.pi ** 2 * kappa ** 2) / (2.0 * kappa)


def rate_eigenfunction(grid: Grid, n: int, kappa: float) -> Curve:
    """``u_n(x) = e^{-x/kappa} sin(n pi x)``."""
    x = grid.points
    return Curve(grid, np.exp(-x / kappa) * np.sin(n * math.pi * x))


@dataclass(frozen=True, eq=False)
class SpectralSemigroup:
    """Exact semigroup of the rate generator in its eigenbasis.

    On the interior grid ``x_i = i/(M+1)`` the vectors ``u_n`` (n = 1..M)
    form a basis; ``h / e^{-x/kappa}`` is expanded in sines by a type-I DST
    and mode ``n`` is multiplied by ``e^{lambda_n t}``. With
    ``n_modes < M`` higher modes are discarded.
    """

    kappa: float
    grid: Grid
    n_modes: Optional[int] = None

    def __post_init__(self):
        if self.n_modes is not None and not 1 <= self.n_modes <= len(self.grid):
            raise ValueError("n_modes must be between 1 and the grid size")

    @property
    def weight(self):
        return np.exp(-self.grid.points / self.kappa)

    def multiply(self, h: Curve, factors) -> Curve:
        w = self.weight
        c = sfft.dst(h.values / w, type=1)
        k = len(c) if self.n_modes is None else self.n_modes
        c[k:] = 0.0
        c[:k] *= factors[:k]
        return Curve(h.grid, w * sfft.idst(c, type=1))

    def eigenvalues(self):
        return rate_eigenvalue(np.arange(1, len(self.grid) + 1), self.kappa)

    def __call__(self, t, h):
        if t == 0 and self.n_modes is None:
            return h
        return self.multiply(h, np.exp(self.eigenvalues() * t))

    def integral(self, t, h):
        """``int_0^t S_u h du``."""
        return self.multiply(h, varphi(self.eigenvalues(), t))


@dataclass(frozen=True, eq=False)
class RateModelParams:
    """kappa, constant drift and volatility curves, and the index set I."""

    kappa: float
    alpha_curve: Curve
    sigma_curve: Curve
    index_set: tuple

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not self.index_set or min(self.index_set) < 1:
            raise ValueError("index_set must contain positive integers")


def default_rate_params(grid: Optional[Grid] = None, kappa=0.5, index_set=(1, 2),
                        alpha_scale=0.2, sigma_scale=0.3) -> RateModelParams:
    """``alpha = c x^2 (1-x)^2`` (not in K) and ``sigma = s u_1`` (in K)."""
    grid = grid or Grid.interior(1024)
    x = grid.points
    alpha = Curve(grid, alpha_scale * x ** 2 * (1 - x) ** 2)
    sigma = sigma_scale * rate_eigenfunction(grid, 1, kappa)
    return RateModelParams(kappa, alpha, sigma, tuple(sorted(index_set)))


@dataclass(frozen=True, eq=False)
class RateSetup:
    """Everything needed to run the interest-rate SPDE experiments.

    Attributes
    ----------
    model : StochModel
        Full model on L^2((0,1)) with the spectral semigroup.
    projected_model : StochModel
        Projected dynamics on K: since ``A K`` is contained in K,
        ``pi(A h + alpha) = A h + pi(alpha)`` for ``h`` in K, so the drift
        is the graph-norm projection of alpha.
    kset : Subspace
        K in the L^2 norm.
    graph_space : GraphNorm
    epsilon_graph : float
        ``d_K`` of alpha in the graph norm.
    epsilon : float
        ``d_K`` of alpha in L^2.
    b, c : ndarray
        Coordinates of ``pi(alpha)`` and of sigma in the basis ``u_n``.
    """

    params: RateModelParams
    space: L2UnitInterval
    generator: RateGenerator
    semigroup: SpectralSemigroup
    model: StochModel
    projected_model: StochModel
    kset: Subspace
    graph_space: GraphNorm
    basis: tuple
    eigenvalues: np.ndarray
    epsilon: float
    epsilon_graph: float
    projected_alpha: Curve
    b: np.ndarray
    c: np.ndarray

    def phi(self, z) -> Curve:
        return _combine(z, self.basis)

    def phi_inverse(self, h):
        return self.kset.coefficients(h)


def build_rate_model(params: RateModelParams, grid: Optional[Grid] = None,
                     n_modes: Optional[int] = None) -> RateSetup:
    """Spectral interest-rate SPDE, ``K = span{u_n : n in I}`` and epsilon."""
    grid = grid or params.alpha_curve.grid
    kappa = params.kappa
    space = L2UnitInterval(grid)
    gen = RateGenerator(kappa, grid)
    for c in (params.alpha_curve, params.sigma_curve):
        gen.apply(c)  # raises on boundary violation
    if max(params.index_set) > len(grid):
        raise ValueError("index set exceeds the number of grid modes")
    semi = SpectralSemigroup(kappa, grid, n_modes)
    basis = tuple(rate_eigenfunction(grid, n, kappa) for n in params.index_set)
    kset = Subspace(space, basis)
    gspace = GraphNorm(space, gen)
    gproj = graph_norm_projection(gspace, basis, params.alpha_curve)
    c = kset.coefficients(params.sigma_curve)
    if kset.distance(params.sigma_curve) > 1e-8 * max(1.0, space.norm(params.sigma_curve)):
        raise ValueError("sigma_curve must lie in span{u_n : n in I}")
    alpha, sigma, pi_alpha = params.alpha_curve, params.sigma_curve, gproj.point
    det = EvolutionModel(space, semi, gen, drift=lambda h: alpha, lipschitz=0.0, beta=0.0,
                         bound=space.norm(alpha), name="rate-spde")
    noise = NoiseSpec([1.0], [lambda h: sigma])
    zero = lambda h: 0.0 * h  # noqa: E731
    model = StochModel(det, noise, correction_rho=zero, lipschitz=0.0, name="rate-spde")
    pdet = EvolutionModel(space, semi, gen, drift=lambda h: pi_alpha, lipschitz=0.0, beta=0.0,
                          bound=space.norm(pi_alpha), name="rate-spde-projected")
    pmodel = StochModel(pdet, noise, correction_rho=zero, lipschitz=0.0, name="rate-spde-projected")
    return RateSetup(
        params, space, gen, semi, model, pmodel, kset, gspace, basis,
        rate_eigenvalue(np.array(params.index_set), kappa),
        kset.distance(alpha), gproj.distance, pi_alpha, gproj.info["coefficients"], c,
    )


@dataclass
class ProjectedStateResult:
    """State process ``Z`` from the explicit formula and from Euler-Maruyama."""

    times: np.ndarray
    z_explicit: np.ndarray
    z_euler: np.ndarray

    @property
    def sup_gap(self):
        return float(np.max(np.abs(self.z_explicit - self.z_euler)))


def projected_state_process(setup: RateSetup, z0, panel: BrownianPanel, steps=None) -> ProjectedStateResult:
    """``dZ = (B Z + b) dt + c dW`` with ``B = diag(lambda_n)``, one path.

    The explicit solution
    ``Z(t) = e^{Bt} z + c W(t) + int_0^t e^{B(t-s)} (b + B c W(s)) ds``
    is evaluated with the ``b`` term in closed form and the ``W`` term by
    the trapezoid rule on the step grid.
    """
    if panel.n_paths != 1:
        raise ValueError("projected_state_process needs a single-path panel")
    steps = steps or panel.n_fine
    W = panel.nodes(steps)[0, 0]
    T = panel.T
    dt = T / steps
    t = np.linspace(0.0, T, steps + 1)
    lam, b, c = setup.eigenvalues, np.asarray(setup.b), np.asarray(setup.c)
    z0 = np.asarray(z0, dtype=float)
    decay = np.exp(lam * dt)
    J = np.zeros((steps + 1, lam.size))
    for k in range(steps):
        J[k + 1] = decay * J[k] + 0.5 * dt * (decay * lam * c * W[k] + lam * c * W[k + 1])
    explicit = (np.exp(np.outer(t, lam)) * z0 + np.outer(W, c)
                + varphi(lam[None, :], t[:, None]) * b + J)
    euler = np.empty_like(explicit)
    euler[0] = z0
    dW = np.diff(W)
    for k in range(steps):
        euler[k + 1] = euler[k] + dt * (lam * euler[k] + b) + c * dW[k]
    return ProjectedStateResult(t, explicit, euler)


def rate_projection_gap(setup: RateSetup, x0_coeffs, horizon: float, steps: int, n_paths: int,
                        seed: int, radius: Optional[float] = None, threads=None) -> dict:
    """Monte Carlo ``E[|X(t;x) - Y(t;x)|^2]^{1/2}`` for starting points near ``x0``.

    The full SPDE ``X`` and the projected SPDE ``Y`` are driven by the
    same Brownian path. Starting points are ``x0 + phi(w)`` with ``w``
    drawn so that the graph norm of the perturbation is at most ``radius``
    (default: the neighborhood radius ``eta`` of the X-Y estimate).

    Reported constants: ``delta = horizon * epsilon_graph`` (contractive
    semigroup, ``|X - Y|(t) <= t |alpha - pi alpha|``), ``|pi|`` (operator
    norm of the extended projection in L^2), ``|B|`` (norm of ``A`` on K),
    ``K1``, ``K2`` and ``eta``.
    """

    space = setup.space
    L = 0.0
    T = float(horizon)
    pi_norm, B_norm = projection_operator_norms(setup)
    K1 = 6 * T ** 2 * pi_norm ** 2 * (1 + L ** 2) + 6 * T * L ** 2
    K2 = 6 * T * pi_norm ** 2 * (B_norm ** 2 + L ** 2) + 6 * L ** 2
    delta = T * setup.epsilon_graph
    # log form: K2 T is in the thousands for stiff generators
    log_eta = math.log(delta / 2) - 0.5 * (math.log(K1) + K2 * T) if delta > 0 else -math.inf
    eta = min(math.exp(log_eta) if log_eta > -745 else 0.0, delta / 2)
    radius = eta if radius is None else radius
    x0 = setup.phi(x0_coeffs)

    def start(p):
        g = _rng.stream(seed, _rng.STARTS, p)
        w = g.standard_normal(len(setup.basis))
        pert = setup.phi(w)
        scale = setup.graph_space.norm(pert)
        return x0 + (radius * g.uniform() / scale) * pert

    def work(ab):
        a, b = ab
        out = []
        for p in range(a, b):
            x = start(p)
            panel = sample_brownian_panel(1, T, steps, seed, paths=[p])
            X = solve_spde(setup.model, x, T, steps, panel)
            Y = solve_spde(setup.projected_model, x, T, steps, panel)
            out.append([space.norm(xs - ys) for xs, ys in zip(X.states, Y.states)])
        return np.array(out)

    D = np.concatenate(map_ordered(work, blocks(n_paths, 32), threads), axis=0)
    rms, se = rms_with_jackknife(D)
    times = np.linspace(0.0, T, steps + 1)
    return {
        "times": times,
        "rms": rms,
        "rms_se": se,
        "delta": delta,
        "eta": eta,
        "log_eta": log_eta,
        "radius": radius,
        "K1": K1,
        "K2": K2,
        "pi_norm": pi_norm,
        "B_norm": B_norm,
        "epsilon_graph": setup.epsilon_graph,
        "n_paths": n_paths,
        "passed": bool(np.all(rms <= delta)),
    }


def projection_operator_norms(setup: RateSetup):
    """L^2 operator norms of the extended graph projection and of A on K.

    The extended projection is ``pi(x) = sum_i <x, w_i> e_i`` with a
    graph-orthonormal basis ``e_i`` and ``w_i = e_i + A* A e_i``. With
    ``G_e``, ``G_w`` the L^2 Gram matrices, ``|pi|^2`` is the top
    eigenvalue of ``G_w^{1/2} G_e G_w^{1/2}``. ``|B|`` is the top
    generalized eigenvalue of ``(Gram(A u), Gram(u))``, square-rooted.
    """
    space, gen = setup.space, setup.generator
    basis = list(setup.basis)
    sub = Subspace(setup.graph_space, basis)
    Linv = sla.solve_triangular(np.linalg.cholesky(sub.gram_matrix), np.eye(len(basis)), lower=True)
    E = [_combine(row, basis) for row in Linv]
    adj = gen.adjoint_operator
    W = [e + adj.apply(gen.apply(e, check=False), check=False) for e in E]
    Ge = _gram(space, E)
    ew, V = np.linalg.eigh(_gram(space, W))
    half = (V * np.sqrt(np.maximum(ew, 0.0))) @ V.T
    pi_norm = math.sqrt(float(np.max(np.linalg.eigvalsh(half @ Ge @ half))))
    Ab = [gen.apply(u) for u in basis]
    B_norm = math.sqrt(float(np.max(sla.eigh(_gram(space, Ab), _gram(space, basis), eigvals_only=True))))
    return pi_norm, B_norm


def _combine(coeffs, vectors):
    out = float(coeffs[0]) * vectors[0]
    for c, v in zip(coeffs[1:], vectors[1:]):
        out = out + float(c) * v
    return out


def _gram(space, vs):
    return np.array([[space.inner(a, b) for b in vs] for a in vs])


# -------------------------------------------------- unbounded functional


def _g_n(n, x):
    """``int_0^x f_n - int_0^inf f_n`` with ``f_n = sqrt((n - n^2 x)^+)``."""
    inner = np.maximum(n - n * n * x, 0.0)
    return -(2.0 / (3.0 * n * n)) * inner ** 1.5


def _excess_exp(c):
    """``(e^c - 1 - c) / c^2`` without cancellation for small ``c``."""
    if abs(c) > 0.1:
        return (math.expm1(c) - c) / (c * c)
    term, total, k = 0.5, 0.0, 2
    while abs(term) > 1e-18 * abs(total) or total == 0.0:
        total += term
        k += 1
        term *= c / k
    return total


def unbounded_functional_demo(gamma: float, n_max: int, ns=None, cells=4096) -> list:
    """Table of ``(n, |g_n|, |g_n|^2, g_n'(0), ratio, bound)``.

    ``g_n`` is built on a grid with ``cells`` uniform cells over its
    support ``[0, 1/n]`` plus one point beyond it, where ``g_n`` is zero.
    ``g_n'(0) = f_n(0) = sqrt(n)`` holds by construction.
    """
    if n_max < 4:
        raise ValueError("n_max must be >= 4")
    if ns is None:
        ns = sorted({int(round(v)) for v in np.logspace(0, math.log10(n_max), 13)})
    bound = math.exp(gamma) / 2.0
    rows = []
    for n in ns:
        pts = np.append(np.linspace(0.0, 1.0 / n, cells + 1), 2.0 / n)
        grid = Grid(pts)
        space = Filipovic(gamma, grid)
        g = Curve(grid, _g_n(n, pts), 0.0)
        nrm = space.norm(g)
        deriv0 = math.sqrt(n - n * n * 0.0)
        exact_sq = _excess_exp(gamma / n)
        rows.append({
            "n": n,
            "norm": nrm,
            "norm_sq": nrm * nrm,
            "norm_sq_exact": exact_sq,
            "derivative_at_0": deriv0,
            "ratio": deriv0 / nrm,
            "bound": bound,
            "passed": bool(nrm * nrm <= bound * (1 + 1e-3) and deriv0 == math.sqrt(n)),
        })
    return rows
