"""Discretized Hilbert spaces of curves.

Four state spaces are supported:

* ``ScalarLine``: the real line, states are floats or arrays of floats
  (arrays are treated as independent samples, never as vectors).
* ``L2UnitInterval``: L^2((0, 1)) sampled on interior nodes, with the
  Dirichlet boundary values 0 implied at x = 0 and x = 1.
* ``Filipovic``: forward curves on [0, inf) with the weighted norm
  ``h(inf)^2 + int |h'|^2 e^{gamma x} dx`` (or the original norm with
  ``h(0)^2`` in place of ``h(inf)^2``).
* ``GraphNorm``: the domain of a generator A with ``|h|^2 + |Ah|^2``.

Filipovic curves are read as the piecewise-linear interpolant of their
grid values, so the weighted energy of each cell is integrated exactly.
Beyond ``x_max`` (equivalent norm only) a curve is continued by the
energy-minimising tail ``h(inf) + (h(x_max) - h(inf)) e^{-gamma (x - x_max)}``
whose energy is ``gamma e^{gamma x_max} (h(x_max) - h(inf))^2``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import (
    BoundaryConditionError,
    DegenerateGridError,
    GridMismatchError,
    IncompleteCurveError,
    SpaceMismatchError,
)

__all__ = [
    "Grid",
    "Curve",
    "ScalarLine",
    "L2UnitInterval",
    "Filipovic",
    "GraphNorm",
    "ScalarGenerator",
    "TranslationGenerator",
    "RateGenerator",
    "inner_product",
    "norm",
    "differentiate",
    "apply_generator",
]


# ---------------------------------------------------------------- grids


class Grid:
    """Strictly increasing, nonnegative sample points.

    Parameters
    ----------
    points : array_like
        Sample coordinates.
    kind : {"uniform", "log", "custom"}
        Informational tag describing how the points were generated.
    """

    __slots__ = ("points", "kind")

    def __init__(self, points, kind="custom"):
        pts = np.array(points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise DegenerateGridError("grid needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if pts[0] < 0:
            raise ValueError("grid points must be nonnegative")
        if pts.size > 1 and np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("Grid is immutable")

    @classmethod
    def uniform(cls, start, stop, n):
        """``n`` equally spaced points including both ends."""
        return cls(np.linspace(start, stop, n), kind="uniform")

    @classmethod
    def interior(cls, n):
        """``n`` interior nodes ``i/(n+1)`` of the unit interval."""
        return cls(np.arange(1, n + 1) / (n + 1.0), kind="uniform")

    @classmethod
    def log_spaced(cls, x_max=30.0, n=2048, scale=0.1):
        """Points ``scale*expm1(u)`` with ``u`` uniform, from 0 to ``x_max``.

        The spacing is about ``scale*du`` near 0 and grows linearly in x,
        which suits curves that vary fastest at short maturities.
        """
        u = np.linspace(0.0, math.log1p(x_max / scale), n)
        pts = scale * np.expm1(u)
        pts[0] = 0.0
        pts[-1] = x_max
        return cls(pts, kind="log")

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.points.size, float(self.points[0]), float(self.points[-1])))

    def __repr__(self):
        return (
            f"Grid(n={len(self)}, kind={self.kind!r}, "
            f"[{self.points[0]:g}, {self.points[-1]:g}])"
        )

    @property
    def x_max(self):
        return float(self.points[-1])


def _same_grid(a, b):
    return a is b or a == b


# --------------------------------------------------------------- curves


class Curve:
    """Grid samples of a function plus an optional limit at infinity.

    Curves are immutable. They support addition, subtraction, negation
    and multiplication/division by scalars; operands must share a grid.

    Parameters
    ----------
    grid : Grid
    values : array_like
        Samples aligned with ``grid.points``.
    value_at_infinity : float, optional
        The limit ``h(inf)``; required for curves in the Filipovic space.
    """

    __slots__ = ("grid", "values", "value_at_infinity")
    __array_ufunc__ = None  # keep ``scalar * curve`` on our side

    def __init__(self, grid: Grid, values, value_at_infinity: Optional[float] = None):
        vals = np.array(values, dtype=float)
        if vals.shape != (len(grid),):
            raise GridMismatchError(
                f"values have shape {vals.shape}, grid has {len(grid)} points"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)
        object.__setattr__(
            self,
            "value_at_infinity",
            None if value_at_infinity is None else float(value_at_infinity),
        )

    def __setattr__(self, name, value):
        raise AttributeError("Curve is immutable")

    @classmethod
    def from_function(cls, grid, f: Callable, value_at_infinity=None):
        """Sample ``f`` (vectorized) on ``grid``."""
        return cls(grid, f(grid.points), value_at_infinity)

    @classmethod
    def zeros(cls, grid, with_infinity=False):
        return cls(grid, np.zeros(len(grid)), 0.0 if with_infinity else None)

    def with_values(self, values, value_at_infinity="keep"):
        if isinstance(value_at_infinity, str):
            value_at_infinity = self.value_at_infinity
        return Curve(self.grid, values, value_at_infinity)

    # arithmetic ---------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, Curve):
            return False
        if not _same_grid(self.grid, other.grid):
            raise GridMismatchError("curves live on different grids")
        if (self.value_at_infinity is None) != (other.value_at_infinity is None):
            raise IncompleteCurveError("only one operand has a value at infinity")
        return True

    @staticmethod
    def _inf(a, b, op):
        return None if a is None else op(a, b)

    def __add__(self, other):
        if not self._check(other):
            return NotImplemented
        return Curve(
            self.grid,
            self.values + other.values,
            self._inf(self.value_at_infinity, other.value_at_infinity, float.__add__),
        )

    def __sub__(self, other):
        if not self._check(other):
            return NotImplemented
        return Curve(
            self.grid,
            self.values - other.values,
            self._inf(self.value_at_infinity, other.value_at_infinity, float.__sub__),
        )

    def __neg__(self):
        v = self.value_at_infinity
        return Curve(self.grid, -self.values, None if v is None else -v)

    def __mul__(self, c):
        if isinstance(c, Curve) or np.ndim(c) != 0:
            return NotImplemented
        c = float(c)
        v = self.value_at_infinity
        return Curve(self.grid, c * self.values, None if v is None else c * v)

    __rmul__ = __mul__

    def __truediv__(self, c):
        if isinstance(c, Curve) or np.ndim(c) != 0:
            return NotImplemented
        return self * (1.0 / float(c))

    def __repr__(self):
        return (
            f"Curve(n={len(self.grid)}, min={self.values.min():.6g}, "
            f"max={self.values.max():.6g}, inf={self.value_at_infinity})"
        )

    # serialization --------------------------------------------------------

    def to_csv(self, path=None):
        """Write ``x,value`` rows (17 significant digits), then ``inf,<value>``.

        Returns the CSV text when ``path`` is None.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(self.grid.points, self.values):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])
        if self.value_at_infinity is not None:
            w.writerow(["inf", f"{self.value_at_infinity:.17g}"])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, source, grid: Optional[Grid] = None):
        """Read a curve written by :meth:`to_csv` (path or text)."""
        if "\n" in str(source):
            text = str(source)
        else:
            with open(source, newline="") as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] and rows[0][0].strip().lower() == "x":
            rows = rows[1:]
        xs, vs, v_inf = [], [], None
        for row in rows:
            if not row:
                continue
            if row[0].strip().lower() == "inf":
                v_inf = float(row[1])
            else:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
        if grid is None:
            grid = Grid(xs)
        elif not np.array_equal(grid.points, np.asarray(xs)):
            raise GridMismatchError("CSV abscissae differ from the supplied grid")
        return cls(grid, vs, v_inf)


# --------------------------------------------------------------- spaces


def _require_curve(space, h):
    if not isinstance(h, Curve):
        raise SpaceMismatchError(f"{type(space).__name__} expects Curve states")
    if not _same_grid(h.grid, space.grid):
        raise GridMismatchError("curve grid differs from the space grid")


@dataclass(frozen=True, eq=False)
class ScalarLine:
    """The real line. Inner products act elementwise on arrays."""

    name: str = field(default="scalar", init=False)

    def inner(self, h, g):
        return h * g

    def norm(self, h):
        return np.abs(h)

    def check(self, h):
        if isinstance(h, Curve):
            raise SpaceMismatchError("ScalarLine expects real states")

    def zero(self):
        return 0.0


@dataclass(frozen=True, eq=False)
class L2UnitInterval:
    """L^2((0,1)) on interior nodes with zero Dirichlet padding.

    The inner product is the trapezoid rule on the padded grid, i.e.
    ``sum_i w_i h_i g_i`` with ``w_i = (x_{i+1} - x_{i-1})/2``.
    """

    grid: Grid
    name: str = field(default="L2", init=False)

    def __post_init__(self):
        pts = self.grid.points
        if pts[0] <= 0.0 or pts[-1] >= 1.0:
            raise ValueError("L2 grid points must lie in (0, 1)")

    @cached_property
    def weights(self):
        padded = np.concatenate(([0.0], self.grid.points, [1.0]))
        w = 0.5 * (padded[2:] - padded[:-2])
        w.flags.writeable = False
        return w

    def check(self, h):
        _require_curve(self, h)
        if h.value_at_infinity is not None:
            raise SpaceMismatchError("L2 curves carry no value at infinity")

    def inner(self, h, g):
        self.check(h)
        self.check(g)
        return float(np.dot(self.weights * h.values, g.values))

    def norm(self, h):
        return math.sqrt(max(self.inner(h, h), 0.0))

    def zero(self):
        return Curve.zeros(self.grid)

    # coordinate form used by the cone projection
    def coords(self, h):
        self.check(h)
        return np.array(h.values)

    def from_coords(self, v):
        return Curve(self.grid, v)

    @cached_property
    def gram(self):
        return sp.diags(self.weights).tocsr()


@dataclass(frozen=True, eq=False)
class Filipovic:
    """Weighted Sobolev space of forward curves.

    Parameters
    ----------
    gamma : float
        Weight exponent, ``w(x) = e^{gamma x}``; must be positive.
    grid : Grid
        Starts at 0 and ends at ``x_max``.
    norm_kind : {"equivalent", "original"}
        ``"equivalent"`` uses ``h(inf) g(inf)`` as the point term and adds
        the exponential tail energy; ``"original"`` uses ``h(0) g(0)`` and
        treats curves as constant beyond ``x_max``.
    """

    gamma: float
    grid: Grid
    norm_kind: str = "equivalent"
    name: str = field(default="filipovic", init=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("Filipovic weight exponent gamma must be positive")
        if self.norm_kind not in ("equivalent", "original"):
            raise ValueError("norm_kind must be 'equivalent' or 'original'")
        pts = self.grid.points
        if len(pts) < 2 or pts[0] != 0.0:
            raise ValueError("Filipovic grid must start at 0 and have >= 2 points")

    @cached_property
    def cell_weights(self):
        """``int_{cell} e^{gamma x} dx / dx^2`` for each grid cell."""
        x = self.grid.points
        dx = np.diff(x)
        g = self.gamma
        w = np.exp(g * x[:-1]) * np.expm1(g * dx) / (g * dx * dx)
        w.flags.writeable = False
        return w

    @cached_property
    def tail_weight(self):
        if self.norm_kind == "original":
            return 0.0
        return self.gamma * math.exp(self.gamma * self.grid.x_max)

    def check(self, h):
        _require_curve(self, h)
        if h.value_at_infinity is None:
            raise IncompleteCurveError("Filipovic curves need value_at_infinity")

    def inner(self, h, g):
        self.check(h)
        self.check(g)
        dh = np.diff(h.values)
        dg = np.diff(g.values)
        energy = float(np.dot(self.cell_weights * dh, dg))
        if self.norm_kind == "original":
            return h.values[0] * g.values[0] + energy
        hi, gi = h.value_at_infinity, g.value_at_infinity
        tail = self.tail_weight * (h.values[-1] - hi) * (g.values[-1] - gi)
        return hi * gi + energy + tail

    def norm(self, h):
        return math.sqrt(max(self.inner(h, h), 0.0))

    def zero(self):
        return Curve.zeros(self.grid, with_infinity=True)

    # coordinate form: grid values, then h(inf) for the equivalent norm
    def coords(self, h):
        self.check(h)
        if self.norm_kind == "original":
            return np.array(h.values)
        return np.append(h.values, h.value_at_infinity)

    def from_coords(self, v):
        n = len(self.grid)
        if self.norm_kind == "original":
            return Curve(self.grid, v[:n], v[n - 1])
        return Curve(self.grid, v[:n], v[n])

    @cached_property
    def gram(self):
        """Sparse symmetric matrix Q with ``<h, g> = coords(h) Q coords(g)``.

        Q is tridiagonal in the coordinate ordering (the point at infinity
        couples only to the last grid node).
        """
        n = len(self.grid)
        w = self.cell_weights
        size = n if self.norm_kind == "original" else n + 1
        main = np.zeros(size)
        off = np.zeros(size - 1)
        main[:n - 1] += w
        main[1:n] += w
        off[:n - 1] = -w
        if self.norm_kind == "original":
            main[0] += 1.0
        else:
            t = self.tail_weight
            main[n - 1] += t
            main[n] += 1.0 + t
            off[n - 1] = -t
        return sp.diags([off, main, off], [-1, 0, 1], format="csr")


@dataclass(frozen=True, eq=False)
class GraphNorm:
    """Domain of ``generator`` with the inner product ``<h,g> + <Ah,Ag>``."""

    base: object
    generator: object
    name: str = field(default="graph", init=False)

    @property
    def grid(self):
        return self.base.grid

    def check(self, h):
        self.base.check(h)

    def inner(self, h, g):
        ah = self.generator.apply(h)
        ag = ah if g is h else self.generator.apply(g)
        return self.base.inner(h, g) + self.base.inner(ah, ag)

    def norm(self, h):
        return math.sqrt(max(self.inner(h, h), 0.0))

    def zero(self):
        return self.base.zero()

    def coords(self, h):
        return self.base.coords(h)

    def from_coords(self, v):
        return self.base.from_coords(v)

    @cached_property
    def gram(self):
        """``W + M^T W M`` when the base has a Gram matrix W and the generator a matrix M."""
        m = getattr(self.generator, "matrix", None)
        w = getattr(self.base, "gram", None)
        if m is None or w is None or not hasattr(self.base, "coords"):
            raise AttributeError("graph norm has no matrix form")
        return (w + m.T @ w @ m).tocsr()


# ------------------------------------------------------------ generators


@dataclass(frozen=True)
class ScalarGenerator:
    """Multiplication by ``beta`` on the real line."""

    beta: float

    def apply(self, h):
        return self.beta * h

    def semigroup(self, t, h):
        return math.exp(self.beta * t) * h


@dataclass(frozen=True)
class TranslationGenerator:
    """``d/dx`` on forward curves (the generator of left translation)."""

    def apply(self, h):
        return differentiate(None, h)


@dataclass(frozen=True, eq=False)
class RateGenerator:
    """``(kappa/2) d^2/dx^2 + d/dx`` with Dirichlet conditions on (0, 1).

    With ``adjoint=True`` the first-order term changes sign, giving the
    L^2 adjoint. Uses three-point stencils on a uniform interior grid
    padded with zeros, so the discrete adjoint is the exact transpose.
    """

    kappa: float
    grid: Grid
    adjoint: bool = False
    boundary_tol: float = 1e-3

    def __post_init__(self):
        pts = self.grid.points
        if len(pts) < 3:
            raise DegenerateGridError("rate generator needs >= 3 grid points")
        dx = 1.0 / (len(pts) + 1)
        if not np.allclose(pts, np.arange(1, len(pts) + 1) * dx, rtol=0, atol=1e-12):
            raise ValueError("rate generator needs Grid.interior(n)")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def dx(self):
        return 1.0 / (len(self.grid) + 1)

    @cached_property
    def matrix(self):
        n = len(self.grid)
        dx = self.dx
        k2 = 0.5 * self.kappa / (dx * dx)
        c1 = (-1.0 if self.adjoint else 1.0) / (2.0 * dx)
        main = np.full(n, -2.0 * k2)
        upper = np.full(n - 1, k2 + c1)
        lower = np.full(n - 1, k2 - c1)
        return sp.diags([lower, main, upper], [-1, 0, 1], format="csr")

    @property
    def adjoint_operator(self):
        return RateGenerator(self.kappa, self.grid, not self.adjoint, self.boundary_tol)

    def boundary_defect(self, h):
        """Quadratic extrapolations of h to x=0 and x=1, relative to max|h|."""
        v = h.values
        scale = max(float(np.max(np.abs(v))), 1e-300)
        left = 3 * v[0] - 3 * v[1] + v[2]
        right = 3 * v[-1] - 3 * v[-2] + v[-3]
        return max(abs(left), abs(right)) / scale

    def apply(self, h, check=True):
        if not _same_grid(h.grid, self.grid):
            raise GridMismatchError("curve grid differs from the generator grid")
        if check and np.any(h.values):
            d = self.boundary_defect(h)
            if d > self.boundary_tol:
                raise BoundaryConditionError(
                    f"curve does not vanish at the boundary (relative defect {d:.3g})"
                )
        return Curve(self.grid, self.matrix @ h.values)


# ----------------------------------------------------------- functional API


def inner_product(space, h, g) -> float:
    """Discretized inner product of ``h`` and ``g`` in ``space``."""
    return space.inner(h, g)


def norm(space, h) -> float:
    """Norm of ``h`` in ``space``."""
    return space.norm(h)


def differentiate(space, h: Curve) -> Curve:
    """Second-order finite-difference derivative on the curve's own grid.

    Central differences in the interior and one-sided second-order
    formulas at both ends. The derivative of a curve with a limit at
    infinity is given the limit 0.
    """
    if not isinstance(h, Curve):
        raise SpaceMismatchError("differentiate expects a Curve")
    if space is not None:
        _require_curve(space, h)
    if len(h.grid) < 3:
        raise DegenerateGridError("differentiation needs >= 3 grid points")
    d = np.gradient(h.values, h.grid.points, edge_order=2)
    return Curve(h.grid, d, None if h.value_at_infinity is None else 0.0)


def apply_generator(op, h):
    """Finite-difference action of the generator ``op`` on ``h``."""
    return op.apply(h)
