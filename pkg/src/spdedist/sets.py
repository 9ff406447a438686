"""Closed sets, distance functions and projections.

Every set exposes ``distance(h)`` (a float, or an array for batches of
scalar states) and ``project(h)`` returning a :class:`ProjectionResult`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .errors import (
    BoundaryConditionError,
    ChartError,
    ConditionError,
    DomainError,
    SpaceMismatchError,
)
from .spaces import Curve, Filipovic, GraphNorm, L2UnitInterval, ScalarLine

__all__ = [
    "ProjectionResult",
    "HalfLineAbove",
    "HalfLineBelow",
    "NonnegativeCone",
    "Subspace",
    "ParametrizedManifold",
    "distance",
    "project_subspace",
    "project_nonnegative_cone",
    "negative_part_norm",
    "graph_norm_projection",
    "tangent_distance",
]

GRAM_CONDITION_LIMIT = 1e12
JITTER = 1e-12


@dataclass
class ProjectionResult:
    """Nearest point found, its distance and solver diagnostics.

    ``upper_bound`` is set when ``distance`` is only an upper bound on
    the true distance (local search over a non-convex set).
    """

    point: object
    distance: float
    iterations: int = 0
    converged: bool = True
    upper_bound: bool = False
    info: dict = field(default_factory=dict)


def _as_scalar_state(h):
    if isinstance(h, Curve):
        raise SpaceMismatchError("half-line sets live on the real line")
    return h


# ----------------------------------------------------------- half-lines


@dataclass(frozen=True)
class HalfLineAbove:
    """K = [a, inf) on the real line."""

    a: float
    space: ScalarLine = field(default_factory=ScalarLine, compare=False)

    def distance(self, h):
        h = _as_scalar_state(h)
        d = np.maximum(self.a - np.asarray(h, dtype=float), 0.0)
        return float(d) if d.ndim == 0 else d

    def project(self, h):
        h = _as_scalar_state(h)
        p = np.maximum(np.asarray(h, dtype=float), self.a)
        p = float(p) if p.ndim == 0 else p
        return ProjectionResult(p, self.distance(h))

    def contains(self, h, tol=0.0):
        return bool(np.all(np.asarray(h) >= self.a - tol))


@dataclass(frozen=True)
class HalfLineBelow:
    """K = (-inf, b] on the real line."""

    b: float
    space: ScalarLine = field(default_factory=ScalarLine, compare=False)

    def distance(self, h):
        h = _as_scalar_state(h)
        d = np.maximum(np.asarray(h, dtype=float) - self.b, 0.0)
        return float(d) if d.ndim == 0 else d

    def project(self, h):
        h = _as_scalar_state(h)
        p = np.minimum(np.asarray(h, dtype=float), self.b)
        p = float(p) if p.ndim == 0 else p
        return ProjectionResult(p, self.distance(h))

    def contains(self, h, tol=0.0):
        return bool(np.all(np.asarray(h) <= self.b + tol))


# ------------------------------------------------------------- subspaces


class Subspace:
    """Span of finitely many curves, with orthogonal projection.

    The Gram matrix is factorized once. Linear independence is judged on
    the diagonally scaled Gram matrix (so it does not depend on how the
    basis vectors are normalized); above ``cond_limit`` the basis is
    rejected. One step of iterative refinement keeps the residual
    orthogonal to the basis to near machine precision.

    Parameters
    ----------
    space : SpaceDescriptor
    basis : sequence of Curve
    cond_limit : float, optional
    """

    def __init__(self, space, basis: Sequence, cond_limit=GRAM_CONDITION_LIMIT):
        if len(basis) == 0:
            raise ValueError("subspace basis must not be empty")
        for b in basis:
            space.check(b)
        self.space = space
        self.basis = tuple(basis)
        self._fast = False
        try:
            Q = space.gram
            B = np.array([space.coords(b) for b in self.basis])
            self._Q, self._B = Q, B
            self._QB = np.asarray((Q @ B.T).T)
            G = self._QB @ B.T
            self._fast = True
        except AttributeError:
            k = len(self.basis)
            G = np.empty((k, k))
            for i in range(k):
                for j in range(i, k):
                    G[i, j] = G[j, i] = space.inner(self.basis[i], self.basis[j])
        G = 0.5 * (G + G.T)
        d = np.sqrt(np.diag(G))
        if np.any(d == 0):
            raise ConditionError("basis contains a zero vector")
        scaled = G / np.outer(d, d)
        self.condition_number = float(np.linalg.cond(scaled))
        if not self.condition_number <= cond_limit:
            raise ConditionError(
                f"Gram condition number {self.condition_number:.3g} exceeds {cond_limit:.3g}"
            )
        self.gram_matrix = G
        self.jittered = False
        try:
            self._chol = sla.cho_factor(G)
        except np.linalg.LinAlgError:
            self.jittered = True
            self._chol = sla.cho_factor(G + JITTER * np.trace(G) / len(G) * np.eye(len(G)))

    @property
    def dim(self):
        return len(self.basis)

    def _rhs(self, h):
        if self._fast:
            return self._QB @ self.space.coords(h)
        return np.array([self.space.inner(h, b) for b in self.basis])

    def _combine(self, c):
        if self._fast:
            return self.space.from_coords(c @ self._B)
        out = float(c[0]) * self.basis[0]
        for ci, b in zip(c[1:], self.basis[1:]):
            out = out + float(ci) * b
        return out

    def coefficients(self, h):
        """Coordinates of the orthogonal projection of ``h`` in the basis."""
        self.space.check(h)
        c = sla.cho_solve(self._chol, self._rhs(h))
        if self._fast:
            r = self.space.coords(h) - c @ self._B
            c = c + sla.cho_solve(self._chol, self._QB @ r)
        else:
            r = h - self._combine(c)
            c = c + sla.cho_solve(self._chol, self._rhs(r))
        return c

    def project(self, h):
        c = self.coefficients(h)
        point = self._combine(c)
        resid = h - point
        dist = self.space.norm(resid)
        return ProjectionResult(point, dist, info={"coefficients": c})

    def distance(self, h):
        return self.project(h).distance

    def contains(self, h, tol=1e-10):
        return self.distance(h) <= tol * max(1.0, self.space.norm(h))


# ----------------------------------------------------------------- cone


def negative_part_norm(space, h):
    """Norm of the grid-wise negative part ``min(h, 0)``.

    ``h - min(h, 0)`` is nonnegative at every node (and at infinity), so
    this is a rigorous upper bound on the discrete cone distance.
    """
    v = h.values
    inf = h.value_at_infinity
    neg = Curve(h.grid, np.minimum(v, 0.0), None if inf is None else min(inf, 0.0))
    return space.norm(neg)


def _kkt_residual(v, mu, diag, scale):
    mu_s = mu / diag
    return max(
        float(np.max(np.maximum(-v, 0.0), initial=0.0)),
        float(np.max(np.maximum(-mu_s, 0.0), initial=0.0)),
        float(np.max(np.abs(mu_s * v), initial=0.0)) / scale,
    ) / scale


def _upper_hull(x, y):
    """Vertices of the upper concave hull of points sorted by x."""
    hx, hy = [], []
    for px, py in zip(x.tolist(), y.tolist()):
        while len(hx) >= 2 and (
            (hx[-1] - hx[-2]) * (py - hy[-2]) - (hy[-1] - hy[-2]) * (px - hx[-2]) >= 0
        ):
            hx.pop()
            hy.pop()
        hx.append(px)
        hy.append(py)
    return np.array(hx), np.array(hy)


def _cone_by_envelope(space, hv):
    """Exact solution of the Filipovic cone QP.

    The quadratic form is a chain of resistors: cell i has resistance
    ``1/cell_weight_i``, the tail cell ``1/tail_weight`` and the point
    term is a unit resistor to a grounded node. In cumulative-resistance
    coordinates ``s`` the energy of ``u = v - h`` is the Dirichlet energy
    of its piecewise-linear interpolant, and the constraint is
    ``u >= -h`` at the nodes. The minimizer of a 1-D Dirichlet energy
    above an obstacle is its least concave majorant; the free end adds
    the natural condition of zero slope, so the majorant is flattened
    (made monotone) towards that end.
    """
    res = 1.0 / space.cell_weights
    psi = -hv
    if space.norm_kind == "equivalent":
        res = np.append(res, [1.0 / space.tail_weight, 1.0])
        s = np.concatenate(([0.0], np.cumsum(res)))
        pts = np.append(psi, 0.0)  # grounded node last
        hx, hy = _upper_hull(s, pts)
        u = np.interp(s, hx, hy)
        u = np.maximum.accumulate(u[::-1])[::-1]  # free left end
        u = u[:-1]
    else:
        res = np.concatenate(([1.0], res))
        s = np.concatenate(([0.0], np.cumsum(res)))
        pts = np.concatenate(([0.0], psi))  # grounded node first
        hx, hy = _upper_hull(s, pts)
        u = np.interp(s, hx, hy)
        u = np.maximum.accumulate(u)  # free right end
        u = u[1:]
    u = np.maximum(u, psi)
    return np.maximum(hv + u, 0.0)


def _projected_gradient(Q, h, v0, tol, max_iter):
    """Projected gradient with Barzilai-Borwein steps (small grids only)."""
    diag = Q.diagonal()
    scale = max(1.0, float(np.max(np.abs(h))))
    v = np.maximum(v0, 0.0)
    g = Q @ (v - h)
    step = 1.0 / float(np.max(diag))
    for it in range(1, max_iter + 1):
        v_new = np.maximum(v - step * g, 0.0)
        g_new = Q @ (v_new - h)
        s, y = v_new - v, g_new - g
        sy = float(s @ y)
        v, g = v_new, g_new
        # diagonally scaled projected-gradient step as stationarity measure
        res = float(np.max(np.abs(v - np.maximum(v - g / diag, 0.0)))) / scale
        if res <= tol:
            return v, it, True
        step = float(s @ s) / sy if sy > 0 else 1.0 / float(np.max(diag))
    return v, max_iter, False


def project_nonnegative_cone(space, h: Curve, tol=1e-10, max_iter=500, method="envelope"):
    """Project onto ``{h : h >= 0}`` in the Filipovic or L^2 space.

    The discrete problem is the convex QP ``min (v-h)' Q (v-h)`` over
    nonnegative coordinate vectors v, with Q the space's Gram matrix.
    On L^2 the Gram matrix is diagonal and the answer is clipping. On
    the Filipovic space the default ``method="envelope"`` solves the QP
    exactly in one pass (see ``_cone_by_envelope``); ``method="pg"``
    runs projected gradient with Barzilai-Borwein steps instead, which
    is only practical on small grids and serves as a cross-check.

    Returns
    -------
    ProjectionResult
        ``info["kkt"]`` is the scaled KKT residual of the returned point.
    """
    if isinstance(space, L2UnitInterval):
        space.check(h)
        point = Curve(h.grid, np.maximum(h.values, 0.0))
        d = space.norm(h - point)
        return ProjectionResult(point, d, 0, True, info={"kkt": 0.0, "method": "clip"})
    if not isinstance(space, Filipovic):
        raise SpaceMismatchError("the nonnegative cone needs a Filipovic or L2 space")
    hv = space.coords(h)
    if np.all(hv >= 0):
        return ProjectionResult(h, 0.0, 0, True, info={"kkt": 0.0, "method": method})
    Q = space.gram
    if method == "envelope":
        v, it = _cone_by_envelope(space, hv), 1
    elif method == "pg":
        v, it, _ = _projected_gradient(Q, hv, np.maximum(hv, 0.0), tol, max_iter)
    else:
        raise ValueError(f"unknown cone method {method!r}")
    point = space.from_coords(v)
    r = hv - v
    d = math.sqrt(max(float(r @ (Q @ r)), 0.0))
    mu = Q @ v - Q @ hv
    kkt = _kkt_residual(v, mu, Q.diagonal(), max(1.0, float(np.max(np.abs(hv)))))
    return ProjectionResult(point, d, it, kkt <= tol, info={"kkt": kkt, "method": method})


class NonnegativeCone:
    """K = {h : h(x) >= 0 for all x} in a Filipovic or L^2 space."""

    def __init__(self, space, tol=1e-10, max_iter=500, method="envelope"):
        if not isinstance(space, (Filipovic, L2UnitInterval)):
            raise SpaceMismatchError("the nonnegative cone needs a Filipovic or L2 space")
        self.space = space
        self.tol = tol
        self.max_iter = max_iter
        self.method = method

    def project(self, h):
        return project_nonnegative_cone(self.space, h, self.tol, self.max_iter, self.method)

    def distance(self, h):
        return self.project(h).distance

    def contains(self, h, tol=0.0):
        ok = bool(np.all(h.values >= -tol))
        if h.value_at_infinity is not None:
            ok = ok and h.value_at_infinity >= -tol
        return ok


# -------------------------------------------------------------- manifolds


class ParametrizedManifold:
    """Image of a chart ``y -> chart(y)`` with ``y`` in R^dim.

    With ``boundary=True`` the parameter domain is ``{y : y[0] >= 0}``
    and points with ``y[0] = 0`` form the boundary.

    The distance is computed by local minimization of ``|h - chart(y)|``
    from ``n_starts`` starting points (the center plus Gaussian draws of
    scale ``spread``), so it is only an upper bound on the true distance.
    """

    def __init__(
        self,
        space,
        chart: Callable,
        dim: int,
        boundary=False,
        center=None,
        spread=1.0,
        n_starts=16,
        seed=0,
        fd_step=1e-6,
    ):
        self.space = space
        self.chart = chart
        self.dim = int(dim)
        self.boundary = bool(boundary)
        self.center = np.zeros(dim) if center is None else np.asarray(center, float)
        self.spread = float(spread)
        self.n_starts = int(n_starts)
        self.seed = seed
        self.fd_step = fd_step

    def starts(self):
        rng = np.random.default_rng(self.seed)
        pts = self.center + self.spread * rng.standard_normal((self.n_starts - 1, self.dim))
        pts = np.vstack([self.center, pts])
        if self.boundary:
            pts[:, 0] = np.abs(pts[:, 0])
        return pts

    def project(self, h):
        def obj(y):
            return self.space.norm(h - self.chart(y)) ** 2

        bounds = [(0.0, None)] + [(None, None)] * (self.dim - 1) if self.boundary else None
        best, minima, n_ok, iters = None, [], 0, 0
        for y0 in self.starts():
            res = minimize(obj, y0, method="L-BFGS-B", bounds=bounds)
            iters += res.nit
            n_ok += bool(res.success)
            minima.append((res.x.copy(), float(res.fun)))
            if best is None or res.fun < best.fun:
                best = res
        point = self.chart(best.x)
        return ProjectionResult(
            point,
            self.space.norm(h - point),
            iters,
            bool(best.success),
            upper_bound=True,
            info={
                "coords": best.x,
                "starts": self.starts(),
                "local_minima": minima,
                "n_converged": n_ok,
            },
        )

    def distance(self, h):
        return self.project(h).distance

    def jacobian(self, y):
        """Central finite-difference chart derivative, one curve per column."""
        y = np.asarray(y, dtype=float)
        cols = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = self.fd_step
            lo = y - e
            if self.boundary and i == 0 and lo[0] < 0:
                cols.append((self.chart(y + e) - self.chart(y)) / self.fd_step)
            else:
                cols.append((self.chart(y + e) - self.chart(lo)) / (2 * self.fd_step))
        return cols


def tangent_distance(manifold: ParametrizedManifold, y, v, at_boundary=False):
    """Distance of ``v`` to the tangent space (or boundary half-cone) at chart(y).

    Interior points use ``range(D chart(y))``. At the boundary the
    half-cone ``{D chart(y) w : w[0] >= 0}`` is used: if the unconstrained
    projection has a negative first coefficient, the optimum lies on
    ``w[0] = 0`` and the remaining columns are used instead.
    """
    cols = manifold.jacobian(y)
    try:
        tangent = Subspace(manifold.space, cols)
    except ConditionError as exc:
        raise ChartError(f"chart Jacobian is rank deficient: {exc}") from exc
    res = tangent.project(v)
    if not at_boundary or res.info["coefficients"][0] >= 0:
        return res.distance
    if len(cols) == 1:
        return manifold.space.norm(v)
    return Subspace(manifold.space, cols[1:]).distance(v)


# ----------------------------------------------------------- graph norm


def graph_norm_projection(space: GraphNorm, basis, h, form="gram"):
    """Orthogonal projection onto span(basis) in the graph norm of A.

    ``form="gram"`` solves the graph-norm Gram system and needs ``h`` in
    the domain of A. ``form="extended"`` uses the continuous extension
    ``pi(x) = sum_i <x, e_i + A*A e_i> e_i`` with a graph-orthonormal
    basis ``e_i``, which is defined for every ``h`` in the base space;
    the reported distance is then measured in the base norm.
    """
    if not isinstance(space, GraphNorm):
        raise SpaceMismatchError("graph_norm_projection needs a GraphNorm space")
    gen = space.generator
    try:
        for b in basis:
            gen.apply(b)
    except BoundaryConditionError as exc:
        raise DomainError(f"basis element outside the generator domain: {exc}") from exc
    sub = Subspace(space, list(basis))
    if form == "gram":
        try:
            return sub.project(h)
        except BoundaryConditionError as exc:
            raise DomainError(str(exc)) from exc
    if form != "extended":
        raise ValueError(f"unknown form {form!r}")
    # graph-orthonormal basis e = L^{-1} b with G = L L'
    L = np.linalg.cholesky(sub.gram_matrix)
    Linv = sla.solve_triangular(L, np.eye(len(basis)), lower=True)
    ortho = []
    for row in Linv:
        e = float(row[0]) * basis[0]
        for c, b in zip(row[1:], basis[1:]):
            e = e + float(c) * b
        ortho.append(e)
    adj = gen.adjoint_operator
    base = space.base
    coeffs = []
    point = None
    for e in ortho:
        ae = gen.apply(e, check=False) if hasattr(gen, "matrix") else gen.apply(e)
        w = e + (adj.apply(ae, check=False) if hasattr(adj, "matrix") else adj.apply(ae))
        c = base.inner(h, w)
        coeffs.append(c)
        point = c * e if point is None else point + c * e
    d = base.norm(h - point)
    return ProjectionResult(point, d, info={"coefficients": np.array(coeffs), "form": form})


# ------------------------------------------------------------- dispatch


def distance(kset, h):
    """d_K(h) for any supported closed set."""
    return kset.distance(h)


def project_subspace(space, basis, h):
    """Orthogonal projection of ``h`` onto span(basis) in ``space``."""
    return Subspace(space, basis).project(h)
