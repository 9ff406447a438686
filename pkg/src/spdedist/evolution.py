"""Deterministic mild solutions and distance-bound verification.

The solver is exponential Euler,

    xi_{k+1} = S_dt (xi_k + dt * alpha(xi_k)),

which reproduces ``S_t x`` exactly when the drift vanishes and is first
order in ``dt`` otherwise. States are floats (or arrays of floats for a
batch of scalar trajectories) or :class:`~spdedist.spaces.Curve` objects.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bounds import varphi
from .errors import DivergenceError
from .spaces import Curve, Filipovic, ScalarGenerator, ScalarLine

__all__ = [
    "EvolutionModel",
    "Trajectory",
    "PiecewiseDrift",
    "BoundReport",
    "TranslationSemigroup",
    "solve_mild",
    "solve_mild_inhomogeneous",
    "verify_pde_bound",
    "scalar_model",
    "semigroup_growth",
]


def _zero_drift(h):
    return 0.0 * h


@dataclass(frozen=True, eq=False)
class EvolutionModel:
    """Semilinear evolution ``d xi = (A xi + alpha(xi)) dt``.

    Parameters
    ----------
    space : SpaceDescriptor
    semigroup : callable ``(t, h) -> state``
        Action of ``S_t``.
    generator : object with ``apply(h)``, optional
        Finite-difference action of ``A`` (for generator-form quotients).
    drift : callable ``h -> state``
        The drift ``alpha``.
    lipschitz : float
        Lipschitz constant ``L`` of the drift.
    beta : float
        Growth exponent, ``|S_t| <= e^{beta t}``.
    bound : float, optional
        A uniform bound ``B`` on ``|alpha|``, if known.
    """

    space: object
    semigroup: Callable
    generator: object = None
    drift: Callable = _zero_drift
    lipschitz: float = 0.0
    beta: float = 0.0
    bound: Optional[float] = None
    name: str = "model"

    def with_drift(self, drift, lipschitz=None, bound=None):
        return EvolutionModel(
            self.space, self.semigroup, self.generator, drift,
            self.lipschitz if lipschitz is None else lipschitz, self.beta,
            bound, self.name,
        )


def scalar_model(generator_beta=0.0, drift=None, lipschitz=0.0, bound=None, name="scalar"):
    """Model on the real line with ``A = generator_beta`` (so ``S_t = e^{beta t}``)."""
    gen = ScalarGenerator(generator_beta)
    return EvolutionModel(
        ScalarLine(), gen.semigroup, gen, drift or _zero_drift, lipschitz,
        generator_beta, bound, name,
    )


@dataclass(frozen=True, eq=False)
class TranslationSemigroup:
    """Left shift ``(S_t h)(x) = h(x + t)`` on a Filipovic grid.

    Values at shifted nodes inside the grid come from monotone cubic
    (PCHIP) interpolation. Beyond ``x_max`` the curve is continued by the
    same tail the norm uses: ``h(inf) + (h(x_max) - h(inf)) e^{-gamma (x - x_max)}``
    for the equivalent norm, the constant ``h(inf)`` for the original one.
    """

    space: Filipovic

    def __call__(self, t, h: Curve) -> Curve:
        if t == 0:
            return h
        if t < 0:
            raise ValueError("translation semigroup needs t >= 0")
        x = h.grid.points
        xs = x + t
        inside = xs <= x[-1]
        out = np.empty_like(x)
        out[inside] = PchipInterpolator(x, h.values, extrapolate=False)(xs[inside])
        h_inf = h.value_at_infinity
        if self.space.norm_kind == "equivalent":
            gap = h.values[-1] - h_inf
            out[~inside] = h_inf + gap * np.exp(-self.space.gamma * (xs[~inside] - x[-1]))
        else:
            out[~inside] = h_inf
        return Curve(h.grid, out, h_inf)


@dataclass
class Trajectory:
    """Time grid and states of a solved trajectory."""

    times: np.ndarray
    states: list
    scheme: str
    step: float
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]

    def index_of(self, t, rtol=1e-9):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > rtol * max(1.0, abs(t)):
            raise KeyError(f"time {t} is not on the trajectory grid")
        return k

    def at(self, t):
        return self.states[self.index_of(t)]

    def array(self):
        """Stack scalar (or batched scalar) states into an array."""
        return np.array([np.asarray(s, dtype=float) for s in self.states])

    def to_csv(self, path=None):
        """``t`` then one column per state component (17 significant digits)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        first = self.states[0]
        if isinstance(first, Curve):
            head = [f"x={x:.17g}" for x in first.grid.points]
            if first.value_at_infinity is not None:
                head.append("x=inf")
            w.writerow(["t"] + head)
            for t, s in zip(self.times, self.states):
                vals = list(s.values)
                if s.value_at_infinity is not None:
                    vals.append(s.value_at_infinity)
                w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in vals])
        else:
            arr = self.array()
            cols = 1 if arr.ndim == 1 else arr.shape[1]
            w.writerow(["t"] + (["value"] if cols == 1 else [f"path{i}" for i in range(cols)]))
            for t, row in zip(self.times, arr.reshape(len(self.times), cols)):
                w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


@dataclass(frozen=True)
class PiecewiseDrift:
    """Drift ``alpha(t, x) = pieces[n](x)`` for ``t`` in ``[t_n, t_{n+1})``."""

    breakpoints: Sequence[float]
    pieces: Sequence[Callable]

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if len(bp) != len(self.pieces):
            raise ValueError("need one piece per breakpoint")
        if len(bp) == 0 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")

    def index(self, t):
        bp = np.asarray(self.breakpoints)
        t = t + 1e-12 * max(1.0, abs(t))  # grid nodes snapped onto breakpoints
        return max(int(np.searchsorted(bp, t, side="right")) - 1, 0)

    def __call__(self, t, h):
        return self.pieces[self.index(t)](h)


def _finite(state):
    if isinstance(state, Curve):
        ok = np.all(np.isfinite(state.values))
        return ok and (state.value_at_infinity is None or math.isfinite(state.value_at_infinity))
    return bool(np.all(np.isfinite(state)))


def _time_grid(s, T, steps, extra=()):
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if T < s:
        raise ValueError("need s <= T")
    grid = np.linspace(s, T, steps + 1)
    pts = [b for b in extra if s < b < T]
    if pts:
        tol = 1e-12 * max(1.0, abs(T))
        new = [b for b in pts if np.min(np.abs(grid - b)) > tol]
        grid = np.union1d(grid, new)
    return grid


def _run(model, x, times, drift_at, scheme):
    states = [x]
    h = x
    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        h = model.semigroup(dt, h + dt * drift_at(times[k], h))
        if not _finite(h):
            raise DivergenceError(k + 1, float(times[k + 1]))
        states.append(h)
    step = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return Trajectory(np.asarray(times), states, scheme, step)


def solve_mild(model: EvolutionModel, x, T: float, steps: int) -> Trajectory:
    """Exponential Euler on ``steps`` equal steps of ``[0, T]``."""
    times = _time_grid(0.0, T, steps)
    return _run(model, x, times, lambda t, h: model.drift(h), "exponential-euler")


def solve_mild_inhomogeneous(
    model: EvolutionModel, drift: PiecewiseDrift, s: float, x, T: float, steps: int
) -> Trajectory:
    """Exponential Euler from time ``s`` with a piecewise-constant-in-time drift.

    The uniform grid of ``steps`` steps on ``[s, T]`` is refined to include
    every breakpoint, and each step uses the piece active at its left end.
    """
    times = _time_grid(s, T, steps, drift.breakpoints)
    return _run(model, x, times, drift, "exponential-euler-piecewise")


@dataclass
class BoundReport:
    """Distance along a trajectory against the exponential bounds."""

    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    rhs_bounded: Optional[np.ndarray]
    d0: float
    epsilon: float
    gamma: float
    tolerance: float
    max_violation: float
    max_violation_bounded: Optional[float]

    @property
    def passed(self):
        ok = self.max_violation <= self.tolerance
        if self.max_violation_bounded is not None:
            ok = ok and self.max_violation_bounded <= self.tolerance
        return bool(ok)

    def rows(self):
        rb = self.rhs_bounded if self.rhs_bounded is not None else [float("nan")] * len(self.times)
        return [
            (float(t), float(a), float(b), float(c))
            for t, a, b, c in zip(self.times, self.lhs, self.rhs, rb)
        ]


def verify_pde_bound(
    model: EvolutionModel,
    kset,
    x,
    epsilon: float,
    T: float,
    steps: int,
    flow: Optional[Callable] = None,
    drift: Optional[PiecewiseDrift] = None,
    start: float = 0.0,
    tol: float = 1e-8,
) -> BoundReport:
    """Compare ``d_K(xi(t))`` with ``e^{(beta+L)(t-s)} d_K(x) + varphi_{beta+L}(t-s) eps``.

    When the model carries a drift bound ``B`` the second bound
    ``e^{beta (t-s)} d_K(x) + varphi_beta(t-s) (eps + 2B)`` is reported too.
    The trajectory comes from the closed-form ``flow(t)`` if given, else
    from the exponential Euler solver (piecewise when ``drift`` is given).
    """
    if flow is not None:
        times = _time_grid(start, T, steps)
        states = [flow(t) for t in times]
    elif drift is not None:
        traj = solve_mild_inhomogeneous(model, drift, start, x, T, steps)
        times, states = traj.times, traj.states
    else:
        traj = solve_mild(model, x, T, steps)
        times, states = traj.times, traj.states
    lhs = np.array([kset.distance(h) for h in states], dtype=float)
    d0 = float(kset.distance(x))
    gamma = model.beta + model.lipschitz
    tau = times - start
    rhs = np.exp(gamma * tau) * d0 + varphi(gamma, tau) * epsilon
    rhs_b, viol_b = None, None
    if model.bound is not None:
        rhs_b = np.exp(model.beta * tau) * d0 + varphi(model.beta, tau) * (epsilon + 2 * model.bound)
        viol_b = float(np.max(lhs - rhs_b))
    return BoundReport(
        times, lhs, rhs, rhs_b, d0, epsilon, gamma, tol, float(np.max(lhs - rhs)), viol_b
    )


def semigroup_growth(model: EvolutionModel, samples, times):
    """Largest ratio ``|S_t h| / (e^{beta t} |h|)`` over samples and times."""
    worst = 0.0
    for h in samples:
        nh = model.space.norm(h)
        if nh == 0:
            continue
        for t in times:
            worst = max(worst, model.space.norm(model.semigroup(t, h)) / (math.exp(model.beta * t) * nh))
    return worst
