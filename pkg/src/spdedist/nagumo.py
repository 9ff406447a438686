"""Liminf quotients of the semigroup Nagumo conditions.

For a closed set K and a model with semigroup ``S_t`` and drift alpha,

* semigroup form: ``q(t) = d_K(S_t x + t alpha(x)) / t``;
* generator form: ``q(t) = d_K(x + t (A x + alpha(x))) / t``;
* stochastic form: ``q(t) = d_K(S_t h + t (alpha(h) - rho(h) + sigma(h) u)) / t``.

Each quotient is evaluated at ``t_k = t0 2^{-k}`` and the liminf is
approximated by the minimum over the last half of the sequence.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .parallel import map_ordered

__all__ = [
    "LiminfEstimate",
    "SsncBatchReport",
    "estimate_snc",
    "estimate_snc_generator_form",
    "estimate_ssnc",
    "estimate_ssnc_batch",
    "differentiability_defect",
    "DEFAULT_LEVELS",
    "MEMBERSHIP_TOL",
]

DEFAULT_LEVELS = 24
MEMBERSHIP_TOL = 1e-8


@dataclass
class LiminfEstimate:
    """Quotients on a geometric time sequence and their tail minimum.

    ``flags`` collects ``"start-outside-set"`` (the base point is not in
    K) and ``"nonconverged"`` (some distance evaluation did not converge).
    """

    t_sequence: np.ndarray
    quotients: np.ndarray
    estimate: float
    form: str
    flags: list = field(default_factory=list)

    @property
    def tail(self):
        return self.quotients[len(self.quotients) // 2:]

    @property
    def tail_times(self):
        return self.t_sequence[len(self.t_sequence) // 2:]

    @property
    def flagged(self):
        return bool(self.flags)

    def to_dict(self):
        return {
            "form": self.form,
            "estimate": self.estimate,
            "flags": list(self.flags),
            "t": [float(t) for t in self.t_sequence],
            "quotient": [float(q) for q in self.quotients],
        }


def _t_sequence(t0, levels):
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    if levels < 4:
        raise ValueError("levels must be >= 4")
    return t0 * 2.0 ** -np.arange(levels)


def _dist(kset, h):
    """Distance and convergence flag."""
    if hasattr(kset, "project"):
        res = kset.project(h)
        return float(res.distance), bool(res.converged)
    return float(kset.distance(h)), True


def _membership_flags(kset, x, tol):
    d, ok = _dist(kset, x)
    flags = [] if ok else ["nonconverged"]
    if d > tol:
        warnings.warn(f"base point is at distance {d:.3g} from the set", RuntimeWarning, stacklevel=3)
        flags.append("start-outside-set")
    return flags


def _estimate(kset, step, x, t0, levels, form, tol):
    ts = _t_sequence(t0, levels)
    flags = _membership_flags(kset, x, tol)
    q = np.empty(levels)
    for k, t in enumerate(ts):
        d, ok = _dist(kset, step(float(t)))
        if not ok and "nonconverged" not in flags:
            flags.append("nonconverged")
        q[k] = d / t
    est = float(np.min(q[levels // 2:]))
    return LiminfEstimate(ts, q, est, form, flags)


def estimate_snc(kset, model, x, t0=1.0, levels=DEFAULT_LEVELS, tol=MEMBERSHIP_TOL) -> LiminfEstimate:
    """Semigroup-form quotient ``d_K(S_t x + t alpha(x)) / t``."""
    a = model.drift(x)
    return _estimate(kset, lambda t: model.semigroup(t, x) + t * a, x, t0, levels, "semigroup", tol)


def estimate_snc_generator_form(kset, model, x, t0=1.0, levels=DEFAULT_LEVELS,
                                tol=MEMBERSHIP_TOL) -> LiminfEstimate:
    """Generator-form quotient ``d_K(x + t (A x + alpha(x))) / t``.

    Needs ``model.generator`` with an ``apply`` method; boundary-condition
    errors of the finite-difference generator propagate.
    """
    if model.generator is None:
        raise ValueError("model has no generator")
    v = model.generator.apply(x) + model.drift(x)
    return _estimate(kset, lambda t: x + t * v, x, t0, levels, "generator", tol)


def estimate_ssnc(kset, model, h, u, t0=1.0, levels=DEFAULT_LEVELS, tol=MEMBERSHIP_TOL) -> LiminfEstimate:
    """Stochastic quotient ``d_K(S_t h + t (alpha(h) - rho(h) + sigma(h) u)) / t``.

    ``model`` is a :class:`~spdedist.stochastic.StochModel`; ``u`` holds
    one coefficient per retained noise direction.
    """
    det = model.deterministic
    fields = model.noise.fields
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.size != len(fields):
        raise ValueError(f"u needs {len(fields)} coefficients")
    v = det.drift(h) - model.rho(h)
    for sig, c in zip(fields, u):
        if c != 0:
            v = v + float(c) * sig(h)
    return _estimate(kset, lambda t: det.semigroup(t, h) + t * v, h, t0, levels, "stochastic", tol)


@dataclass
class SsncBatchReport:
    """Stochastic Nagumo quotients over sampled ``(h, u)`` pairs.

    The sample of ``u`` (coefficients in ``{-2, -1, 1, 2}`` per noise
    direction) covers finitely many directions only, so the batch maximum
    is a heuristic check of the condition, not a certificate.
    """

    rows: list
    maximum: float
    flagged: int
    heuristic: bool = True
    note: str = "finitely many (h, u) samples; heuristic, not a certificate"

    def to_dict(self):
        return {
            "maximum": self.maximum,
            "flagged": self.flagged,
            "heuristic": self.heuristic,
            "note": self.note,
            "rows": self.rows,
        }


def estimate_ssnc_batch(kset, model, points: Sequence, coefficients=(-2.0, -1.0, 1.0, 2.0),
                        t0=1.0, levels=DEFAULT_LEVELS, threads=None) -> SsncBatchReport:
    """Maximum of :func:`estimate_ssnc` over ``points`` and sampled ``u``."""
    r = len(model.noise.fields)
    us = [np.array(c) for c in itertools.product(coefficients, repeat=r)]
    pairs = [(i, j) for i in range(len(points)) for j in range(len(us))]

    def work(pair):
        i, j = pair
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            est = estimate_ssnc(kset, model, points[i], us[j], t0, levels)
        return {"point": i, "u": us[j].tolist(), "estimate": est.estimate, "flags": est.flags}

    rows = map_ordered(work, pairs, threads)
    maximum = max((row["estimate"] for row in rows), default=0.0)
    return SsncBatchReport(rows, float(maximum), sum(1 for row in rows if row["flags"]))


def differentiability_defect(model, x, t_values) -> float:
    """``max_t |A x - (S_t x - x) / t|`` over ``t_values``.

    Bounds the difference between semigroup-form and generator-form
    quotients at each ``t``.
    """
    ax = model.generator.apply(x)
    norm = model.space.norm
    return float(max(norm(ax - (model.semigroup(float(t), x) - x) * (1.0 / t)) for t in t_values))
