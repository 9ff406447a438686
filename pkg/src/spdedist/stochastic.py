"""Stochastic evolution: Brownian panels, Ito and Wong-Zakai solvers, Monte Carlo.

The noise is ``sum_j sigma^j(X) dB^j`` with independent standard Brownian
motions ``B^j`` (the eigen-coordinates of a Q-Wiener process, with the
factors ``sqrt(lambda_j)`` absorbed into ``sigma^j``).

Random numbers
--------------
Path ``p`` of a panel draws its coarse increments from the stream
``(seed, PANEL, p, 0)`` and the Brownian-bridge midpoints of dyadic
refinement level ``l`` from ``(seed, PANEL, p, l)``. A path is therefore
identical whatever the batch it is generated in, and refining a panel
never changes its coarse nodes.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng as _rng
from .bounds import StochasticBoundTable, varphi
from .errors import DivergenceError
from .evolution import EvolutionModel, PiecewiseDrift, Trajectory, solve_mild_inhomogeneous
from .parallel import blocks, map_ordered
from .spaces import Curve

__all__ = [
    "NoiseSpec",
    "BrownianPanel",
    "StochModel",
    "McEstimate",
    "WzBoundReport",
    "SpdeBoundReport",
    "sample_brownian_panel",
    "solve_spde",
    "stratonovich_correction",
    "solve_wong_zakai",
    "pathwise_wz_bound_check",
    "mc_distance",
    "verify_spde_bound",
    "path_distances",
    "RHO_STEP",
]

RHO_STEP = 1e-5
MAX_FAILURE_RATE = 1e-3


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Finitely many noise directions ``sigma^j`` with covariance eigenvalues.

    Parameters
    ----------
    eigenvalues : sequence of float
        ``lambda_j > 0`` of the stored modes.
    volatility_fields : sequence of callables ``h -> state``
        ``sigma^j = sigma g_j`` with ``g_j = sqrt(lambda_j) e_j``.
    modes_r : int, optional
        Truncation level ``r`` (default: all stored modes).
    """

    eigenvalues: Sequence[float]
    volatility_fields: Sequence[Callable]
    modes_r: Optional[int] = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.size == 0 or np.any(lam <= 0) or not np.isfinite(lam.sum()):
            raise ValueError("eigenvalues must be positive with a finite sum")
        if len(self.volatility_fields) != lam.size:
            raise ValueError("need one volatility field per eigenvalue")
        if self.modes_r is not None and not 1 <= self.modes_r <= lam.size:
            raise ValueError("modes_r must be between 1 and the number of stored modes")

    @property
    def r(self):
        return len(self.eigenvalues) if self.modes_r is None else self.modes_r

    @property
    def fields(self):
        return tuple(self.volatility_fields[: self.r])

    def tail_norm(self, space, h):
        """``(sum_{j > r} |sigma^j(h)|^2)^{1/2}`` over the stored modes beyond ``r``."""
        rest = self.volatility_fields[self.r:]
        return math.sqrt(math.fsum(space.norm(s(h)) ** 2 for s in rest))


@dataclass(frozen=True, eq=False)
class BrownianPanel:
    """Brownian paths on a dyadically refined grid of ``[0, T]``.

    Attributes
    ----------
    T : float
    m : int
        Number of interpolation cells of length ``delta_m = T/m``.
    levels : int
        Each cell is split into ``2**levels`` fine steps.
    values : ndarray, shape (P, r, m * 2**levels + 1)
        ``B^j`` at the fine nodes for each of the ``P`` paths.
    path_ids : ndarray of int
        Global path indices (stream keys).
    seed : int
    """

    T: float
    m: int
    levels: int
    values: np.ndarray
    path_ids: np.ndarray
    seed: int

    @property
    def n_paths(self):
        return self.values.shape[0]

    @property
    def r(self):
        return self.values.shape[1]

    @property
    def n_fine(self):
        return self.values.shape[2] - 1

    @property
    def delta(self):
        return self.T / self.m

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.n_fine + 1)

    def nodes(self, steps):
        """B at ``steps + 1`` equally spaced times (``steps`` must divide the fine grid)."""
        if steps < 1 or self.n_fine % steps:
            raise ValueError(f"{steps} steps do not align with {self.n_fine} fine steps")
        return self.values[:, :, :: self.n_fine // steps]

    def increments(self, steps):
        return np.diff(self.nodes(steps), axis=2)

    def cell_slopes(self):
        """``eta_{j,k} = (B^j(k delta) - B^j((k-1) delta)) / delta``, shape (P, r, m)."""
        return self.increments(self.m) / self.delta

    def coarsen(self, m):
        """Same paths, interpolated on ``m`` cells (``m`` must divide the fine grid)."""
        if self.n_fine % m:
            raise ValueError(f"m={m} does not divide {self.n_fine} fine steps")
        ratio = self.n_fine // m
        lv = int(round(math.log2(ratio)))
        if 2 ** lv != ratio:
            raise ValueError("fine steps per cell must be a power of two")
        return BrownianPanel(self.T, m, lv, self.values, self.path_ids, self.seed)

    def path(self, i):
        """Single-path view."""
        return BrownianPanel(
            self.T, self.m, self.levels, self.values[i: i + 1], self.path_ids[i: i + 1], self.seed
        )

    def to_csv(self, path=None):
        """Long format: path, mode, t, B."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "mode", "t", "B"])
        t = self.times
        for p, pid in enumerate(self.path_ids):
            for j in range(self.r):
                for tk, b in zip(t, self.values[p, j]):
                    w.writerow([int(pid), j + 1, f"{tk:.17g}", f"{b:.17g}"])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


def _one_path(seed, pid, r, m, levels, T):
    delta = T / m
    g = _rng.stream(seed, _rng.PANEL, pid, 0)
    b = np.zeros((r, m + 1))
    b[:, 1:] = np.cumsum(g.standard_normal((r, m)) * math.sqrt(delta), axis=1)
    h = delta
    for lv in range(1, levels + 1):
        g = _rng.stream(seed, _rng.PANEL, pid, lv)
        mid = 0.5 * (b[:, :-1] + b[:, 1:]) + math.sqrt(h / 4.0) * g.standard_normal((r, b.shape[1] - 1))
        fine = np.empty((r, 2 * b.shape[1] - 1))
        fine[:, 0::2] = b
        fine[:, 1::2] = mid
        b = fine
        h /= 2.0
    return b


def sample_brownian_panel(noise, T: float, m: int, seed: int, substeps=1, paths=1, threads=None):
    """Independent standard Brownian motions for each noise mode.

    Parameters
    ----------
    noise : NoiseSpec or int
        Mode count ``r`` (taken from ``noise.r`` for a NoiseSpec).
    T : float
    m : int
        Interpolation cells.
    seed : int
    substeps : int
        Fine steps per cell (a power of two), filled by Brownian bridges.
    paths : int or sequence of int
        Number of paths (ids ``0..paths-1``) or explicit path ids.
    """
    r = noise if isinstance(noise, (int, np.integer)) else noise.r
    if m < 1 or r < 1:
        raise ValueError("m and r must be >= 1")
    levels = int(round(math.log2(substeps)))
    if substeps < 1 or 2 ** levels != substeps:
        raise ValueError("substeps must be a power of two")
    ids = np.arange(paths) if isinstance(paths, (int, np.integer)) else np.asarray(paths, dtype=np.int64)
    chunks = [ids[a:b] for a, b in blocks(len(ids), 1024)]

    def work(chunk):
        return np.array([_one_path(seed, int(p), r, m, levels, T) for p in chunk])

    vals = np.concatenate(map_ordered(work, chunks, threads), axis=0)
    return BrownianPanel(float(T), int(m), levels, vals, ids, int(seed))


@dataclass(frozen=True, eq=False)
class StochModel:
    """``dX = (AX + alpha(X)) dt + sum_j sigma^j(X) dB^j``.

    ``lipschitz`` is a common Lipschitz constant of ``alpha - rho`` and of
    every ``sigma^j``. ``correction_rho`` defaults to the finite-difference
    Stratonovich correction.
    """

    deterministic: EvolutionModel
    noise: NoiseSpec
    correction_rho: Optional[Callable] = None
    lipschitz: Optional[float] = None
    exact_solution: Optional[Callable] = None
    name: str = "stochastic model"

    @property
    def space(self):
        return self.deterministic.space

    @property
    def L(self):
        return self.deterministic.lipschitz if self.lipschitz is None else self.lipschitz

    def rho(self, h):
        if self.correction_rho is not None:
            return self.correction_rho(h)
        return stratonovich_correction(self, h)


def stratonovich_correction(model: StochModel, h, eps=RHO_STEP):
    """``rho(h) = 1/2 sum_{j<=r} D sigma^j(h) sigma^j(h)`` by central differences.

    The directional derivative uses ``(sigma(h + eps s) - sigma(h - eps s))/(2 eps)``
    with ``s = sigma^j(h)`` and ``eps = 1e-5``: exact for affine fields, and
    second-order accurate otherwise.
    """
    out = None
    for sig in model.noise.fields:
        s = sig(h)
        term = (sig(h + eps * s) - sig(h - eps * s)) * (0.25 / eps)
        out = term if out is None else out + term
    return out


def _scalar_state(x):
    return not isinstance(x, Curve)


def _align(panel, steps):
    if steps % panel.m:
        raise ValueError(f"steps={steps} must be a multiple of m={panel.m}")
    return panel.increments(steps)


def solve_spde(model: StochModel, x, T: float, steps: int, panel: BrownianPanel) -> Trajectory:
    """Exponential Euler-Maruyama on ``steps`` equal steps.

    ``X_{k+1} = S_dt (X_k + dt alpha(X_k) + sum_j sigma^j(X_k) dB^j_k)``.
    Scalar models run all panel paths at once (states of shape (P,));
    curve models need a single-path panel.
    """
    if abs(panel.T - T) > 1e-12 * max(1.0, T):
        raise ValueError("panel horizon differs from T")
    dB = _align(panel, steps)
    det = model.deterministic
    fields = model.noise.fields
    if len(fields) > panel.r:
        raise ValueError("panel has fewer modes than the noise truncation")
    scalar = _scalar_state(x)
    if not scalar and panel.n_paths != 1:
        raise ValueError("curve-valued models need a single-path panel")
    if scalar and panel.n_paths > 1:
        x = np.broadcast_to(np.asarray(x, dtype=float), (panel.n_paths,)).copy()
    times = np.linspace(0.0, T, steps + 1)
    dt = T / steps
    states = [x]
    h = x
    for k in range(steps):
        move = h + dt * det.drift(h)
        for j, sig in enumerate(fields):
            inc = dB[:, j, k] if scalar and panel.n_paths > 1 else float(dB[0, j, k])
            move = move + sig(h) * inc
        h = det.semigroup(dt, move)
        if not _finite(h):
            raise DivergenceError(k + 1, float(times[k + 1]))
        states.append(h)
    return Trajectory(times, states, "exponential-euler-maruyama", dt,
                      info={"path_ids": panel.path_ids.tolist()})


def _finite(h):
    if isinstance(h, Curve):
        return bool(np.all(np.isfinite(h.values)))
    return bool(np.all(np.isfinite(h)))


def solve_wong_zakai(model: StochModel, x, panel: BrownianPanel, substeps_per_cell=4) -> Trajectory:
    """Random PDE driven by the piecewise-linear interpolation of the panel.

    On cell k the drift is ``alpha - rho + sum_j sigma^j eta_{j,k}``; the
    problem is solved with ``substeps_per_cell`` exponential Euler steps
    per cell. Scalar models run all paths at once.
    """
    if substeps_per_cell < 1:
        raise ValueError("substeps_per_cell must be >= 1")
    det = model.deterministic
    fields = model.noise.fields
    scalar = _scalar_state(x)
    if not scalar and panel.n_paths != 1:
        raise ValueError("curve-valued models need a single-path panel")
    eta = panel.cell_slopes()
    if scalar and panel.n_paths > 1:
        x = np.broadcast_to(np.asarray(x, dtype=float), (panel.n_paths,)).copy()
        slopes = [[eta[:, j, k] for j in range(len(fields))] for k in range(panel.m)]
    else:
        slopes = [[float(eta[0, j, k]) for j in range(len(fields))] for k in range(panel.m)]

    def piece(ek):
        def a(h):
            out = det.drift(h) - model.rho(h)
            for sig, e in zip(fields, ek):
                out = out + sig(h) * e
            return out
        return a

    drift = PiecewiseDrift(
        [k * panel.delta for k in range(panel.m)], [piece(ek) for ek in slopes]
    )
    traj = solve_mild_inhomogeneous(det, drift, 0.0, x, panel.T, panel.m * substeps_per_cell)
    traj.scheme = "wong-zakai"
    traj.info["path_ids"] = panel.path_ids.tolist()
    traj.info["m"] = panel.m
    return traj


@dataclass
class WzBoundReport:
    """Pathwise comparison of ``d_K`` along Wong-Zakai paths with the bound."""

    times: np.ndarray
    lhs: np.ndarray  # (P, nt)
    rhs: np.ndarray  # (P, nt)
    z: np.ndarray  # (P,)
    tolerance: float

    @property
    def max_violation(self):
        return float(np.max(self.lhs - self.rhs))

    @property
    def n_violations(self):
        return int(np.count_nonzero(np.any(self.lhs - self.rhs > self.tolerance, axis=1)))

    @property
    def passed(self):
        return self.n_violations == 0


def _distances(kset, states):
    """(values, failures) of d_K over a list of states."""
    out, fails = [], 0
    for h in states:
        if isinstance(h, Curve):
            res = kset.project(h)
            fails += not res.converged
            out.append(res.distance)
        else:
            out.append(np.asarray(kset.distance(h), dtype=float))
    return np.array(out), fails


def pathwise_wz_bound_check(
    trajectory, kset, panel: BrownianPanel, gamma: float, epsilon: float, lipschitz: float,
    tol=1e-6, trajectories=None,
) -> WzBoundReport:
    """Check ``d_K(xi(t)) <= e^{(gamma+Z) t} d_K(x) + varphi_{gamma+Z}(t) eps`` pathwise.

    ``Z = L sum_j max_k |eta_{j,k}|`` is computed exactly from the panel.
    Pass a batched scalar trajectory, or a list of single-path trajectories
    via ``trajectories`` (in panel path order).
    """
    trajs = [trajectory] if trajectories is None else list(trajectories)
    z = lipschitz * np.abs(panel.cell_slopes()).max(axis=2).sum(axis=1)
    lhs = []
    for tr in trajs:
        d, _ = _distances(kset, tr.states)
        lhs.append(d.T if d.ndim == 2 else d[None, :])
    lhs = np.concatenate(lhs, axis=0)
    times = trajs[0].times
    d0 = lhs[:, :1]
    rate = gamma + z[:, None]
    with np.errstate(over="ignore"):
        rhs = np.exp(rate * times[None, :]) * d0 + varphi(rate, times[None, :]) * epsilon
    return WzBoundReport(times, lhs, rhs, z, tol)


@dataclass
class McEstimate:
    """Monte Carlo moments of ``d_K(X(t; x))``.

    ``values`` are RMS estimates ``E[d_K^2]^{1/2}`` with jackknife standard
    errors; ``mean_values`` are ``E[d_K]`` with the usual standard error.
    """

    times: np.ndarray
    values: np.ndarray
    standard_errors: np.ndarray
    mean_values: np.ndarray
    mean_standard_errors: np.ndarray
    n_paths: int
    seed: int
    steps: int
    failures: int = 0
    evaluations: int = 0
    samples: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def max_distance(self):
        return float(np.max(self.samples)) if self.samples is not None else float("nan")

    def rows(self):
        return [
            (float(t), float(a), float(b), float(c), float(d))
            for t, a, b, c, d in zip(
                self.times, self.values, self.standard_errors,
                self.mean_values, self.mean_standard_errors,
            )
        ]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "rms", "rms_se", "mean", "mean_se"])
        for row in self.rows():
            w.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


def _column_fsum(a):
    return np.array([math.fsum(a[:, i]) for i in range(a.shape[1])])


def rms_with_jackknife(d):
    """RMS over axis 0 and its jackknife standard error."""
    n = d.shape[0]
    sq = d * d
    s2 = _column_fsum(sq)
    rms = np.sqrt(s2 / n)
    loo = np.sqrt(np.maximum((s2[None, :] - sq) / (n - 1), 0.0))
    mean_loo = _column_fsum(loo) / n
    se = np.sqrt((n - 1) / n * _column_fsum((loo - mean_loo) ** 2))
    return rms, se


def mean_with_se(d):
    n = d.shape[0]
    mean = _column_fsum(d) / n
    var = _column_fsum((d - mean) ** 2) / (n - 1)
    return mean, np.sqrt(var / n)


def mc_distance(
    model: StochModel,
    kset,
    x,
    times,
    n_paths: int,
    seed: int,
    steps: Optional[int] = None,
    threads=None,
    block_size: Optional[int] = None,
) -> McEstimate:
    """Monte Carlo estimate of ``E[d_K(X(t;x))^p]^{1/p}`` for p = 1, 2.

    Paths are split into fixed blocks (independent of ``threads``), each
    path keyed by its global index, so the estimate is bit-identical for
    any worker count.

    Raises
    ------
    RuntimeError
        If more than 0.1% of distance evaluations fail to converge.
    """
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100")
    times = np.asarray(times, dtype=float)
    T = float(np.max(times))
    steps = steps or max(100, 1)
    idx = np.rint(times / T * steps).astype(int)
    if np.any(np.abs(idx * T / steps - times) > 1e-9 * max(1.0, T)):
        raise ValueError("times must lie on the step grid")
    scalar = _scalar_state(x)
    bs = block_size or (4096 if scalar else 16)
    r = model.noise.r

    def work(ab):
        a, b = ab
        panel = sample_brownian_panel(r, T, steps, seed, paths=range(a, b))
        if scalar:
            traj = solve_spde(model, x, T, steps, panel)
            d, f = _distances(kset, [traj.states[i] for i in idx])
            d = np.broadcast_to(d.reshape(len(idx), -1), (len(idx), b - a)).T
            return np.array(d), f
        rows, fails = [], 0
        for p in range(b - a):
            traj = solve_spde(model, x, T, steps, panel.path(p))
            d, f = _distances(kset, [traj.states[i] for i in idx])
            rows.append(d)
            fails += f
        return np.array(rows), fails

    parts = map_ordered(work, blocks(n_paths, bs), threads)
    D = np.concatenate([p[0] for p in parts], axis=0)
    failures = sum(p[1] for p in parts)
    evals = D.size
    if failures > MAX_FAILURE_RATE * evals:
        raise RuntimeError(f"{failures} of {evals} distance evaluations failed")
    rms, rms_se = rms_with_jackknife(D)
    mean, mean_se = mean_with_se(D)
    return McEstimate(times, rms, rms_se, mean, mean_se, n_paths, seed, steps,
                      failures, evals, D)


def path_distances(model: StochModel, kset, x, T: float, steps: int, seed: int, paths,
                   threads=None, block_size=16):
    """``d_K`` along individual Euler-Maruyama paths, shape (P, steps + 1).

    ``paths`` is a path count or a list of path ids. Unlike
    :func:`mc_distance` there is no minimum path count, since no moment
    is estimated.
    """
    ids = list(range(paths)) if isinstance(paths, (int, np.integer)) else [int(p) for p in paths]
    r = model.noise.r

    def work(ab):
        a, b = ab
        panel = sample_brownian_panel(r, T, steps, seed, paths=ids[a:b])
        rows = []
        for p in range(b - a):
            traj = solve_spde(model, x, T, steps, panel.path(p))
            d, _ = _distances(kset, traj.states)
            rows.append(np.broadcast_to(d, (steps + 1,)) if d.ndim == 1 else d[:, 0])
        return np.array(rows)

    return np.concatenate(map_ordered(work, blocks(len(ids), block_size), threads), axis=0)


@dataclass
class SpdeBoundReport:
    """``E[d_K^p]^{1/p} <= delta + phi(t) d0 + psi(t) eps`` per time."""

    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    allowance: np.ndarray
    p: int

    @property
    def slack(self):
        return self.rhs + self.allowance - self.lhs

    @property
    def passed(self):
        return bool(np.all(self.slack >= 0))

    def rows(self):
        return [
            (float(t), float(a), float(b), float(c))
            for t, a, b, c in zip(self.times, self.lhs, self.rhs, self.allowance)
        ]


def verify_spde_bound(
    mc: McEstimate, bound_table: StochasticBoundTable, d0: float, epsilon: float, delta: float, p=2
) -> SpdeBoundReport:
    """Compare Monte Carlo distance moments with the linear bound.

    The allowance is three combined standard errors of the estimate and
    the bound-table entries. ``p=1`` uses the mean, ``p=2`` the RMS.
    """
    t_mc = mc.times
    t_b = np.asarray(bound_table.times)
    pos = []
    for t in t_mc:
        k = int(np.argmin(np.abs(t_b - t)))
        if abs(t_b[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"bound table has no entry for t={t}")
        pos.append(k)
    phi = bound_table.phi_values[pos]
    psi = bound_table.psi_values[pos]
    lhs, se = (mc.values, mc.standard_errors) if p == 2 else (mc.mean_values, mc.mean_standard_errors)
    comb = np.sqrt(se ** 2 + (d0 * bound_table.phi_se[pos]) ** 2 + (epsilon * bound_table.psi_se[pos]) ** 2)
    rhs = delta + phi * d0 + psi * epsilon
    return SpdeBoundReport(t_mc, lhs, rhs, 3.0 * comb, p)
