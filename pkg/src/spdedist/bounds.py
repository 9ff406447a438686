"""Error functions of the distance bounds and their stochastic versions.

``varphi(gamma, t) = int_0^t e^{gamma (t-s)} ds`` and
``big_phi = e^{gamma t} d + varphi(gamma, t) (e + delta)`` are exact
closed forms. ``estimate_stochastic_bounds`` estimates

    phi_{r,m}(t) = E[e^{2 (gamma + Z) t}]^{1/2},
    psi_{r,m}(t) = E[varphi(gamma + Z, t)^2]^{1/2},

where ``Z = L * sum_j max_k |eta_{j,k}|`` and ``eta_{j,k}`` are the
slopes of the piecewise-linear interpolation of ``r`` independent
Brownian motions on ``m`` cells of ``[0, T]``.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .parallel import blocks, map_ordered

__all__ = [
    "BoundParams",
    "StochasticBoundTable",
    "varphi",
    "big_phi",
    "estimate_stochastic_bounds",
    "SERIES_THRESHOLD",
]

SERIES_THRESHOLD = 1e-8
BLOCK_SIZE = 2048


@dataclass(frozen=True)
class BoundParams:
    """Constants of the distance bounds.

    gamma : growth exponent; delta : additive inflation; epsilon : Nagumo
    slack; beta : semigroup exponent; lipschitz : Lipschitz constant L.
    Fields may be arrays to evaluate :func:`big_phi` over many parameter
    sets at once.
    """

    gamma: float = 0.0
    delta: float = 0.0
    epsilon: float = 0.0
    beta: float = 0.0
    lipschitz: float = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.delta) < 0) or np.any(np.asarray(self.epsilon) < 0) \
                or np.any(np.asarray(self.lipschitz) < 0):
            raise ValueError("delta, epsilon and lipschitz must be nonnegative")


def varphi(gamma, t):
    """``(e^{gamma t} - 1)/gamma``, or ``t`` when ``gamma = 0``.

    Vectorized over both arguments. For ``|gamma t| < 1e-8`` the cubic
    Taylor polynomial ``t (1 + gamma t/2 + (gamma t)^2/6)`` is used.
    """
    g = np.asarray(gamma, dtype=float)
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("varphi needs t >= 0")
    x = g * tt
    small = np.abs(x) < SERIES_THRESHOLD
    safe_g = np.where(small, 1.0, g)
    with np.errstate(over="ignore"):
        out = np.where(small, tt * (1.0 + x / 2.0 + x * x / 6.0), np.expm1(x) / safe_g)
    return float(out) if out.ndim == 0 else out


def big_phi(params: BoundParams, d, e, t):
    """``e^{gamma t} d + varphi(gamma, t) (e + delta)``."""
    tt = np.asarray(t, dtype=float)
    out = np.exp(params.gamma * tt) * d + varphi(params.gamma, tt) * (e + params.delta)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class StochasticBoundTable:
    """Estimates of phi_{r,m} and psi_{r,m} on a time grid."""

    times: np.ndarray
    phi_values: np.ndarray
    psi_values: np.ndarray
    phi_se: np.ndarray
    psi_se: np.ndarray
    samples: int
    r: int = 1
    m: int = 1
    gamma: float = 0.0
    lipschitz: float = 0.0
    horizon: float = 1.0
    seed: int = 0
    eta_iid_checked: int = 0
    eta_iid_violations: int = 0
    warnings: list = field(default_factory=list)

    @property
    def standard_errors(self):
        return self.phi_se, self.psi_se

    @classmethod
    def from_functions(cls, times, phi, psi, label="closed form"):
        """Deterministic table from callables ``phi(t)``, ``psi(t)`` (zero SE)."""
        t = np.asarray(times, dtype=float)
        z = np.zeros_like(t)
        return cls(t, np.asarray(phi(t), float), np.asarray(psi(t), float), z, z.copy(),
                   samples=0, warnings=[label])

    def rows(self):
        return [
            (float(t), float(a), float(b), float(c), float(d))
            for t, a, b, c, d in zip(
                self.times, self.phi_values, self.phi_se, self.psi_values, self.psi_se
            )
        ]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "phi", "phi_se", "psi", "psi_se"])
        for row in self.rows():
            w.writerow([f"{x:.17g}" for x in row])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


def _block_moments(args):
    seed, block, n, r, m, delta_m, L, gamma, times = args
    g = _rng.stream(seed, _rng.BOUNDS, block)
    incr = g.standard_normal((n, r, m)) * math.sqrt(delta_m)
    eta = np.abs(incr / delta_m)
    y = eta.max(axis=2)  # (n, r)
    violations = int(np.count_nonzero(y > eta.sum(axis=2)))
    z = L * y.sum(axis=1)
    rate = gamma + z
    with np.errstate(over="ignore"):
        e = np.exp(2.0 * np.outer(rate, times))  # (n, nt)
        p = varphi(rate[:, None], times[None, :]) ** 2
    return (e.sum(axis=0), (e * e).sum(axis=0), p.sum(axis=0), (p * p).sum(axis=0),
            violations, n)


def _fsum_columns(parts, k):
    return np.array([math.fsum(col) for col in zip(*(p[k] for p in parts))])


def _sqrt_mean_with_se(s1, s2, n):
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    se_mean = np.sqrt(var / n)
    root = np.sqrt(mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(root > 0, se_mean / (2.0 * root), 0.0)
    return root, se


def estimate_stochastic_bounds(
    r: int,
    m: int,
    gamma: float,
    L: float,
    T: float,
    n_samples: int,
    seed: int,
    times=None,
    threads=None,
) -> StochasticBoundTable:
    """Monte Carlo estimate of phi_{r,m} and psi_{r,m}.

    Parameters
    ----------
    r, m : int
        Number of noise modes and of interpolation cells on ``[0, T]``.
    gamma, L : float
        Growth exponent ``beta + L`` and Lipschitz constant.
    T : float
        Horizon.
    n_samples : int
        At least 100.
    seed : int
    times : array_like, optional
        Evaluation times in ``[0, T]``; default 11 equispaced points.
    threads : int, optional
        Worker count; does not affect the result.

    Returns
    -------
    StochasticBoundTable
        Square roots of the sample means with delta-method standard
        errors. The slope maximum is checked against the sum of absolute
        slopes on every sample.
    """
    if r < 1 or m < 1:
        raise ValueError("r and m must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    if n_samples < 100:
        raise ValueError("n_samples < 100 gives statistically meaningless bounds")
    t = np.linspace(0.0, T, 11) if times is None else np.asarray(times, dtype=float)
    if np.any(t < 0) or np.any(t > T * (1 + 1e-12)):
        raise ValueError("times must lie in [0, T]")
    jobs = [
        (seed, i, b - a, r, m, T / m, L, gamma, t)
        for i, (a, b) in enumerate(blocks(n_samples, BLOCK_SIZE))
    ]
    parts = map_ordered(_block_moments, jobs, threads)
    e1, e2 = _fsum_columns(parts, 0), _fsum_columns(parts, 1)
    p1, p2 = _fsum_columns(parts, 2), _fsum_columns(parts, 3)
    viol = sum(p[4] for p in parts)
    phi, phi_se = _sqrt_mean_with_se(e1, e2, n_samples)
    psi, psi_se = _sqrt_mean_with_se(p1, p2, n_samples)
    notes = []
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.concatenate([
            np.where(phi > 0, phi_se / phi, 0.0), np.where(psi > 0, psi_se / psi, 0.0)
        ])
    if np.any(rel > 0.1):
        msg = f"relative standard error up to {np.nanmax(rel):.3g} (> 10%)"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    return StochasticBoundTable(
        times=t, phi_values=phi, psi_values=psi, phi_se=phi_se, psi_se=psi_se,
        samples=n_samples, r=r, m=m, gamma=gamma, lipschitz=L, horizon=T, seed=seed,
        eta_iid_checked=n_samples * r, eta_iid_violations=viol, warnings=notes,
    )
