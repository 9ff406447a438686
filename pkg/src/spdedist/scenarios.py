"""Named experiment scenarios run by the command-line interface.

Each scenario takes a resolved config (``model``, ``set`` and ``numerics``
blocks with defaults filled in), a seed and a thread count, and returns
tables plus a list of pass/fail assertions. Hard assertions decide the
exit status of ``spdedist run``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .bounds import estimate_stochastic_bounds, varphi
from .models import (
    SvenssonParams,
    build_gbm,
    build_halfline_ode,
    build_hjmm,
    build_rate_model,
    default_rate_params,
    hjmm_epsilon_closed_form,
    hjmm_epsilon_quadrature,
    negative_rate_diagnostics,
    projected_state_process,
    rate_eigenfunction,
    rate_eigenvalue,
    rate_projection_gap,
    svensson_curve,
    unbounded_functional_demo,
)
from .nagumo import (
    differentiability_defect,
    estimate_snc,
    estimate_snc_generator_form,
    estimate_ssnc_batch,
)
from .evolution import verify_pde_bound
from .parallel import map_ordered
from .sets import NonnegativeCone, negative_part_norm
from .spaces import Curve, Filipovic, Grid, RateGenerator
from .stochastic import (
    mc_distance,
    path_distances,
    pathwise_wz_bound_check,
    sample_brownian_panel,
    solve_wong_zakai,
    verify_spde_bound,
)

__all__ = ["Table", "Assertion", "ScenarioResult", "Scenario", "SCENARIOS"]


@dataclass
class Table:
    header: list
    rows: list


@dataclass
class Assertion:
    name: str
    passed: bool
    hard: bool = True
    detail: dict = field(default_factory=dict)


@dataclass
class ScenarioResult:
    tables: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def check(self, name, passed, hard=True, **detail):
        self.assertions.append(Assertion(name, bool(passed), hard, detail))

    @property
    def passed(self):
        return all(a.passed for a in self.assertions if a.hard)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    defaults: dict
    runner: object
    constraints: dict = field(default_factory=dict)


# ------------------------------------------------------------ halfline


def run_halfline(cfg, seed, threads):
    m, n = cfg["model"], cfg["numerics"]
    setup = build_halfline_ode(m["beta"], m["a"])
    x = setup.a if n["x"] is None else n["x"]
    T, steps = n["T"], n["steps"]
    closed = verify_pde_bound(setup.model, setup.kset, x, setup.epsilon, T, steps, flow=setup.flow(x))
    numeric = verify_pde_bound(setup.model, setup.kset, x, setup.epsilon, T, steps)
    res = ScenarioResult()
    stride = max(steps // n["table_rows"], 1)
    res.tables["bound"] = Table(
        ["t", "distance_closed_form", "distance_numeric", "bound"],
        [(closed.times[k], closed.lhs[k], numeric.lhs[k], closed.rhs[k])
         for k in range(0, len(closed.times), stride)],
    )
    err_c = float(np.max(np.abs(closed.lhs - closed.rhs)))
    err_n = float(np.max(np.abs(numeric.lhs - numeric.rhs)))
    res.check("bound holds (closed-form flow)", closed.max_violation <= 1e-8, violation=closed.max_violation)
    res.check("bound holds (numeric solver)", numeric.max_violation <= 1e-5, violation=numeric.max_violation)
    if x == setup.a:
        res.check("equality (closed-form flow)", err_c < 1e-8, max_error=err_c, tolerance=1e-8)
        res.check("equality (numeric solver)", err_n < 1e-5, max_error=err_n, tolerance=1e-5)
    res.summary = {"epsilon": setup.epsilon, "x": x}
    return res


# -------------------------------------------------------- nagumo sweep


def run_nagumo(cfg, seed, threads):
    m, n = cfg["model"], cfg["numerics"]
    t0, levels = n["t0"], n["levels"]
    res = ScenarioResult()
    rows = []
    a = m["a"]
    for beta in m["beta_values"]:
        setup = build_halfline_ode(beta, a)
        for x in (a, a * n["interior_factor"]):
            est = estimate_snc(setup.kset, setup.drift_model, x, t0, levels)
            expected = abs(beta) * a if (beta < 0 and x == a) else 0.0
            rows.append((beta, x, est.estimate, expected, abs(est.estimate - expected)))
    res.tables["halfline"] = Table(["beta", "x", "estimate", "expected", "abs_error"], rows)
    worst = max(r[4] for r in rows)
    res.check("half-line estimates match {0, |beta| a}", worst <= 1e-8, max_error=worst)

    params = default_rate_params(Grid.interior(m["grid_points"]), m["kappa"], tuple(m["index_set"]))
    setup = build_rate_model(params)
    det = setup.model.deterministic
    rate_rows = []
    ok = True
    for i, u in zip(setup.params.index_set, setup.basis):
        sg = estimate_snc(setup.kset, det, u, t0, levels)
        gf = estimate_snc_generator_form(setup.kset, det, u, t0, levels)
        defect = differentiability_defect(det, u, sg.tail_times)
        diff = abs(sg.estimate - gf.estimate)
        ok &= diff <= defect
        rate_rows.append((i, sg.estimate, gf.estimate, diff, defect, setup.epsilon))
    res.tables["rate_forms"] = Table(
        ["n", "semigroup_form", "generator_form", "abs_difference", "defect", "distance_alpha"], rate_rows
    )
    res.check("semigroup and generator forms agree within the defect", ok)

    gbm = build_gbm(m["mu"], m["sigma"])
    pts = [-float(v) for v in np.linspace(0.0, 1.0, n["ssnc_points"])]
    batch_g = estimate_ssnc_batch(gbm.kset, gbm.model, pts, t0=t0, levels=levels, threads=threads)
    starts = [setup.phi(c) for c in _rate_points(setup, n["ssnc_points"], seed)]
    batch_p = estimate_ssnc_batch(setup.kset, setup.projected_model, starts, t0=t0, levels=levels,
                                  threads=threads)
    batch_f = estimate_ssnc_batch(setup.kset, setup.model, starts, t0=t0, levels=levels, threads=threads)
    res.tables["ssnc"] = Table(
        ["model", "pairs", "maximum", "reference_epsilon"],
        [("gbm", len(batch_g.rows), batch_g.maximum, 0.0),
         ("rate-projected", len(batch_p.rows), batch_p.maximum, 0.0),
         ("rate-full", len(batch_f.rows), batch_f.maximum, setup.epsilon)],
    )
    tol = 1e-10
    res.check("gbm stochastic quotient vanishes on (-inf, 0]", batch_g.maximum <= tol, maximum=batch_g.maximum)
    res.check("projected rate model: stochastic quotient vanishes on K", batch_p.maximum <= 1e-9,
              maximum=batch_p.maximum)
    res.check("full rate model: stochastic quotient <= d_K(alpha)", batch_f.maximum <= setup.epsilon + 1e-9,
              maximum=batch_f.maximum, epsilon=setup.epsilon)
    res.summary = {"ssnc_sampling": batch_g.note}
    return res


def _rate_points(setup, k, seed):
    g = _rng.stream(seed, _rng.NAGUMO, 0)
    return [g.uniform(-1.0, 1.0, len(setup.basis)) for _ in range(k)]


# ------------------------------------------------------------------ GBM


def run_gbm(cfg, seed, threads):
    m, n = cfg["model"], cfg["numerics"]
    setup = build_gbm(m["mu"], m["sigma"])
    times = np.asarray(n["times"], dtype=float)
    T = float(times.max())
    res = ScenarioResult()
    rows, bound_rows = [], []
    table = estimate_stochastic_bounds(1, n["m"], setup.gamma, setup.model.L, T, n["bound_samples"], seed,
                                       times=times, threads=threads)
    for x in n["x_values"]:
        mc = mc_distance(setup.model, setup.kset, x, times, n["n_paths"], seed, n["steps"], threads)
        for k, t in enumerate(times):
            exact = setup.expected_distance(x, t)
            rows.append((x, t, mc.mean_values[k], mc.mean_standard_errors[k], exact,
                         mc.values[k], mc.standard_errors[k]))
        if x > 0:
            dev = np.abs(mc.mean_values - [setup.expected_distance(x, t) for t in times])
            res.check(f"exact law within 3 SE (x={x:g})", bool(np.all(dev <= 3 * mc.mean_standard_errors)),
                      max_z=float(np.max(dev / mc.mean_standard_errors)))
        else:
            res.check(f"invariance: every path distance is 0 (x={x:g})", mc.max_distance == 0.0,
                      max_distance=mc.max_distance)
        d0 = setup.kset.distance(x)
        for p in (1, 2):
            rep = verify_spde_bound(mc, table, float(d0), 0.0, 0.0, p=p)
            for row in rep.rows():
                bound_rows.append((x, p) + row)
            res.check(f"moment bound p={p} (x={x:g})", rep.passed)
    # neighborhood of K: d_K(x) <= eta = delta / (2 phi(T)) with phi(t) = e^{mu t}
    delta = n["neighborhood_delta"]
    x_eta = delta / (2.0 * math.exp(m["mu"] * T))
    mc = mc_distance(setup.model, setup.kset, x_eta, times, max(n["n_paths"] // 10, 100), seed, n["steps"],
                     threads)
    slack = delta + 3 * mc.standard_errors - mc.values
    res.tables["neighborhood"] = Table(
        ["t", "x", "delta", "rms", "rms_se"],
        [(t, x_eta, delta, v, e) for t, v, e in zip(times, mc.values, mc.standard_errors)])
    res.check("start within eta of K keeps the rms distance <= delta", bool(np.all(slack >= 0)),
              eta=x_eta, max_rms=float(np.max(mc.values)))
    res.tables["expected_distance"] = Table(
        ["x", "t", "mean", "mean_se", "exact_mean", "rms", "rms_se"], rows)
    res.tables["moment_bound"] = Table(["x", "p", "t", "estimate", "bound", "allowance"], bound_rows)
    res.tables["bound_functions"] = Table(["t", "phi", "phi_se", "psi", "psi_se"], table.rows())
    res.summary = {"gamma": setup.gamma, "lipschitz": setup.model.L}
    return res


# ------------------------------------------------------- Wong-Zakai


def run_wz(cfg, seed, threads):
    m, n = cfg["model"], cfg["numerics"]
    res = ScenarioResult()
    gbm = build_gbm(m["mu"], m["sigma"])
    params = default_rate_params(Grid.interior(m["grid_points"]), m["kappa"], tuple(m["index_set"]))
    rate = build_rate_model(params)
    T, P, sub, tol = n["T"], n["n_paths"], n["substeps_per_cell"], n["tolerance"]
    m_max = max(n["m_values"])
    fine = 2 ** int(math.ceil(math.log2(max(n["exact_steps"] // m_max, 1))))
    rows, err_rows = [], []
    x_rate = rate.phi(np.ones(len(rate.basis))) + n["rate_offset"] * params.alpha_curve
    for mm in n["m_values"]:
        panel = sample_brownian_panel(1, T, m_max, seed, substeps=fine, paths=P, threads=threads).coarsen(mm)
        traj = solve_wong_zakai(gbm.model, n["x_gbm"], panel, sub)
        rep = pathwise_wz_bound_check(traj, gbm.kset, panel, gbm.gamma, 0.0, gbm.model.L, tol)
        rows.append(("gbm", mm, P, rep.n_violations, rep.max_violation, float(rep.z.max())))
        res.check(f"gbm pathwise bound (m={mm})", rep.passed, violations=rep.n_violations)
        wt = panel.values[:, 0, -1]
        exact = gbm.exact_solution(n["x_gbm"], T, wt)
        err = float(np.sqrt(np.mean((np.asarray(traj.final) - exact) ** 2)))
        err_rows.append(("gbm", mm, err))

        rp = sample_brownian_panel(1, T, mm, seed, paths=P, threads=threads)
        trajs = [solve_wong_zakai(rate.model, x_rate, rp.path(i), sub) for i in range(P)]
        rep = pathwise_wz_bound_check(None, rate.kset, rp, 0.0, rate.epsilon, rate.model.L, tol,
                                      trajectories=trajs)
        rows.append(("rate-spde", mm, P, rep.n_violations, rep.max_violation, float(rep.z.max())))
        res.check(f"rate-spde pathwise bound (m={mm})", rep.passed, violations=rep.n_violations)
    gbm_errs = [e for _, _, e in sorted(r for r in err_rows if r[0] == "gbm")]
    res.check("gbm Ito-WZ gap does not grow with m", all(b <= a for a, b in zip(gbm_errs, gbm_errs[1:])),
              hard=False, rms_errors=gbm_errs)
    res.tables["pathwise"] = Table(["model", "m", "paths", "violations", "max_excess", "max_Z"], rows)
    res.tables["strong_error"] = Table(["model", "m", "rms_error_at_T"], err_rows)
    res.summary = {"rate_epsilon": rate.epsilon, "fine_steps_per_cell_at_max_m": fine}
    return res


# ----------------------------------------------------------------- HJMM


def run_hjmm(cfg, seed, threads):
    m, s, n = cfg["model"], cfg["set"], cfg["numerics"]
    grid = Grid.log_spaced(n["x_max"], n["grid_points"], n["grid_scale"])
    setup = build_hjmm(m["z6"], m["z7"], m["gamma"], grid, s["norm"])
    res = ScenarioResult()
    eps_rows = []
    for z6, z7, gam in [(m["z6"], m["z7"], m["gamma"])] + [tuple(t) for t in n["epsilon_cases"]]:
        space = Filipovic(gam, grid, s["norm"])
        closed = hjmm_epsilon_closed_form(z6, z7, gam)
        quad = hjmm_epsilon_quadrature(z6, z7, space)
        rel = abs(quad - closed) / closed if closed > 0 else abs(quad - closed)
        eps_rows.append((z6, z7, gam, closed, quad, rel))
        ok = rel <= 1e-6 if closed > 1e-10 else (closed <= 1e-10 and quad <= 1e-10)
        res.check(f"closed-form vs quadrature epsilon ({z6:g}, {z7:g}, {gam:g})", ok, relative=rel)
    res.tables["epsilon"] = Table(["z6", "z7", "gamma", "closed_form", "quadrature", "relative_difference"],
                                  eps_rows)
    sweep = [hjmm_epsilon_closed_form(m["z6"], z, m["gamma"]) for z in n["z7_sweep"]]
    res.tables["epsilon_sweep"] = Table(["z7", "epsilon"], list(zip(n["z7_sweep"], sweep)))
    res.check("epsilon decreases as z7 approaches 2 z6", bool(np.all(np.diff(sweep) < 0)))
    d_alpha = setup.kset.distance(setup.alpha)
    res.check("d_K(alpha) <= closed-form epsilon", d_alpha <= setup.epsilon * (1 + 1e-6) + 1e-12,
              distance=d_alpha, epsilon=setup.epsilon)

    x = setup.point(n["start"])
    T, steps = n["T"], n["steps"]
    D = path_distances(setup.model, setup.kset, x, T, steps, seed, n["n_paths"], threads)
    times = np.linspace(0.0, T, steps + 1)
    stride = max(steps // n["table_rows"], 1)
    res.tables["paths"] = Table(
        ["t", "max_distance", "rms_distance", "bound_t_epsilon"],
        [(times[k], D[:, k].max(), math.sqrt(float(np.mean(D[:, k] ** 2))), times[k] * setup.epsilon)
         for k in range(0, steps + 1, stride)],
    )
    if abs(m["z7"] - 2 * m["z6"]) <= 1e-12:
        res.check("invariance: max distance <= 1e-4", D.max() <= 1e-4, max_distance=float(D.max()))
    else:
        excess = float(np.max(D - times[None, :] * setup.epsilon))
        res.check("pathwise distance <= t * epsilon + 1e-4", excess <= 1e-4, max_excess=excess)
    res.summary = {"epsilon": setup.epsilon, "epsilon_quadrature": setup.epsilon_quadrature,
                   "distance_alpha": d_alpha, "norm": s["norm"]}
    return res


# ------------------------------------------------------- negative rates


def random_forward_curve(grid, seed, index):
    """Svensson curve with random parameters, negative at the short end."""
    g = _rng.stream(seed, _rng.CURVES, index)
    z6, z7 = g.uniform(0.3, 1.5), g.uniform(1.6, 3.0)
    z1 = g.uniform(0.005, 0.05)
    z2 = -z1 - g.uniform(0.001, 0.05)
    p = SvenssonParams(z1, z2, g.normal(0, 0.02), g.normal(0, 0.01), g.normal(0, 0.01), z6, z7)
    return svensson_curve(grid, p)


def run_negative_rates(cfg, seed, threads):
    m, s, n = cfg["model"], cfg["set"], cfg["numerics"]
    grid = Grid.log_spaced(n["x_max"], n["grid_points"], n["grid_scale"])
    space = Filipovic(m["gamma"], grid, s["norm"])
    cone = NonnegativeCone(space)
    res = ScenarioResult()
    const_rows = []
    for eta in n["eta_values"]:
        d = cone.distance(Curve(grid, np.full(len(grid), -eta), -eta))
        const_rows.append((eta, d, abs(d - eta)))
        res.check(f"d_K(-{eta:g}) = {eta:g}", abs(d - eta) <= 1e-6, error=abs(d - eta))
    res.tables["constant_curves"] = Table(["eta", "distance", "abs_error"], const_rows)
    diag = negative_rate_diagnostics(svensson_curve(grid, SvenssonParams(*n["svensson"])), space=space)
    res.tables["svensson"] = Table(
        ["x0", "negative_part_norm", "negative_part_integral", "cone_distance"],
        [(diag["x0"], diag["negative_part_norm"], diag["negative_part_integral"], diag["cone_distance"])],
    )
    res.check("Svensson example: cone distance <= |h^-|", diag["passed"])

    def work(i):
        h = random_forward_curve(grid, seed, i)
        r = cone.project(h)
        return (i, r.distance, negative_part_norm(space, h), r.converged)

    rows = map_ordered(work, range(n["n_random"]), threads)
    bad = sum(1 for r in rows if r[1] > r[2] + 1e-12 or not r[3])
    res.tables["random_curves"] = Table(["index", "cone_distance", "negative_part_norm", "converged"], rows)
    res.check("random curves: cone distance <= |h^-|", bad == 0, exceptions=bad, n=len(rows))
    res.summary = {"svensson": diag}
    return res


# ------------------------------------------------------------ rate SPDE


def eigenrelation_error(n_points, n, kappa):
    grid = Grid.interior(n_points)
    u = rate_eigenfunction(grid, n, kappa)
    lam = float(rate_eigenvalue(n, kappa))
    au = RateGenerator(kappa, grid).apply(u, check=False)  # u_n vanishes at 0 and 1 exactly
    return float(np.max(np.abs(au.values - lam * u.values)) / np.max(np.abs(lam * u.values)))


def run_rate(cfg, seed, threads):
    m, n = cfg["model"], cfg["numerics"]
    res = ScenarioResult()
    kappa = m["kappa"]
    coarse, fine = n["eig_points"], 2 * n["eig_points"] + 1
    eig_rows = []
    for k in range(1, n["eig_n_max"] + 1):
        e1, e2 = eigenrelation_error(coarse, k, kappa), eigenrelation_error(fine, k, kappa)
        eig_rows.append((k, float(rate_eigenvalue(k, kappa)), e1, e2, e1 / e2))
    res.tables["eigenrelation"] = Table(["n", "lambda", "error_coarse", "error_fine", "ratio"], eig_rows)
    ratios = [r[4] for r in eig_rows]
    res.check("eigenrelation error is second order", all(3.5 <= q <= 4.5 for q in ratios),
              ratios=ratios)

    grid = Grid.interior(m["grid_points"])
    params = default_rate_params(grid, kappa, tuple(m["index_set"]), m["alpha_scale"], m["sigma_scale"])
    setup = build_rate_model(params, n_modes=n["n_modes"])
    T = n["T"]
    s1, s2 = n["state_steps"], 2 * n["state_steps"]
    ref_rows = []
    z0 = np.asarray(n["z0"], dtype=float)
    for p in range(n["state_paths"]):
        panel = sample_brownian_panel(1, T, s2, seed, paths=[p])
        g1 = projected_state_process(setup, z0, panel, steps=s1).sup_gap
        g2 = projected_state_process(setup, z0, panel, steps=s2).sup_gap
        ref_rows.append((p, g1, g2, g1 / g2))
    res.tables["state_refinement"] = Table(["path", "gap_coarse", "gap_fine", "ratio"], ref_rows)
    mean_ratio = float(np.mean([r[3] for r in ref_rows]))
    res.check("explicit vs Euler gap halves with the step", 1.7 <= mean_ratio <= 2.3, mean_ratio=mean_ratio)

    gap = rate_projection_gap(setup, np.asarray(n["x0"], dtype=float), T, n["gap_steps"], n["n_paths"],
                              seed, radius=n["radius"], threads=threads)
    res.tables["projection_gap"] = Table(
        ["t", "rms", "rms_se", "delta"],
        [(t, a, b, gap["delta"]) for t, a, b in zip(gap["times"], gap["rms"], gap["rms_se"])],
    )
    consts = ["delta", "eta", "log_eta", "radius", "K1", "K2", "pi_norm", "B_norm", "epsilon_graph"]
    res.tables["constants"] = Table(["name", "value"], [(c, gap[c]) for c in consts])
    res.check("E|X - Y|^2 ^(1/2) <= delta", gap["passed"], max_rms=float(np.max(gap["rms"])),
              delta=gap["delta"])
    res.summary = {"epsilon_L2": setup.epsilon, "epsilon_graph": setup.epsilon_graph,
                   "b": setup.b.tolist(), "c": setup.c.tolist()}
    return res


# ---------------------------------------------------- stochastic bounds


def run_bounds(cfg, seed, threads):
    m, n = cfg["model"], cfg["numerics"]
    T = n["T"]
    times = np.linspace(0.0, T, n["n_times"])
    res = ScenarioResult()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        tab = estimate_stochastic_bounds(n["r"], n["m"], m["gamma"], m["lipschitz"], T, n["n_samples"], seed,
                                         times=times, threads=threads)
        zero = estimate_stochastic_bounds(n["r"], n["m"], m["gamma"], 0.0, T, n["n_samples"], seed,
                                          times=times, threads=threads)
    res.tables["bound_functions"] = Table(["t", "phi", "phi_se", "psi", "psi_se"], tab.rows())
    res.check("phi(0) = 1 within SE", abs(tab.phi_values[0] - 1.0) <= max(3 * tab.phi_se[0], 1e-15))
    res.check("psi(0) = 0 within SE", abs(tab.psi_values[0]) <= max(3 * tab.psi_se[0], 1e-15))
    e_phi = float(np.max(np.abs(zero.phi_values - np.exp(m["gamma"] * times))))
    e_psi = float(np.max(np.abs(zero.psi_values - varphi(m["gamma"], times))))
    res.tables["closed_form_check"] = Table(["function", "max_abs_error"], [("phi", e_phi), ("psi", e_psi)])
    res.check("L = 0 reproduces the closed forms to 1e-12", max(e_phi, e_psi) <= 1e-12,
              phi_error=e_phi, psi_error=e_psi)
    res.check("slope maximum <= slope sum on every sample", tab.eta_iid_violations == 0,
              checked=tab.eta_iid_checked)
    res.summary = {"warnings": tab.warnings}
    return res


# ----------------------------------------------- unbounded functional


def run_unbounded(cfg, seed, threads):
    m, n = cfg["model"], cfg["numerics"]
    rows = unbounded_functional_demo(m["gamma"], n["n_max"], cells=n["cells"])
    res = ScenarioResult()
    res.tables["sequence"] = Table(
        ["n", "norm", "norm_sq", "norm_sq_exact", "derivative_at_0", "ratio", "bound"],
        [(r["n"], r["norm"], r["norm_sq"], r["norm_sq_exact"], r["derivative_at_0"], r["ratio"], r["bound"])
         for r in rows],
    )
    res.check("|g_n|^2 <= e^gamma/2 (1 + 1e-3) and g_n'(0) = sqrt(n)", all(r["passed"] for r in rows))
    ratios = [r["ratio"] for r in rows]
    res.check("g_n'(0)/|g_n| increases", bool(np.all(np.diff(ratios) > 0)))
    return res


SCENARIOS = {
    s.name: s
    for s in [
        Scenario(
            "halfline-ode", "xi' = beta xi with K = [a, inf): distance bound holds with equality",
            {"model": {"beta": -0.5, "a": 1.0}, "set": {},
             "numerics": {"x": None, "T": 2.0, "steps": 10000, "table_rows": 200}},
            run_halfline,
            {"numerics/steps": {"minimum": 1}, "model/a": {"exclusiveMinimum": 0}},
        ),
        Scenario(
            "nagumo-sweep", "liminf quotients of the Nagumo conditions (half-line, rate SPDE, GBM)",
            {"model": {"beta_values": [-0.5, 0.0, 0.5], "a": 1.0, "kappa": 0.5, "index_set": [1, 2],
                       "grid_points": 1024, "mu": 0.05, "sigma": 0.2},
             "set": {},
             "numerics": {"t0": 1.0, "levels": 24, "interior_factor": 1.5, "ssnc_points": 4}},
            run_nagumo,
            {"numerics/levels": {"minimum": 4}, "numerics/t0": {"exclusiveMinimum": 0}},
        ),
        Scenario(
            "gbm", "geometric Brownian motion with K = (-inf, 0]: exact expected distance",
            {"model": {"mu": 0.05, "sigma": 0.2}, "set": {},
             "numerics": {"x_values": [1.0, -1.0], "times": [0.25, 0.5, 1.0], "n_paths": 100000,
                          "steps": 100, "m": 8, "bound_samples": 20000, "neighborhood_delta": 0.1}},
            run_gbm,
            {"numerics/n_paths": {"minimum": 100}, "numerics/bound_samples": {"minimum": 100}},
        ),
        Scenario(
            "wz-convergence", "Wong-Zakai paths against the pathwise distance bound",
            {"model": {"mu": 0.05, "sigma": 0.2, "kappa": 0.5, "index_set": [1, 2], "grid_points": 1024},
             "set": {},
             "numerics": {"m_values": [8, 32], "n_paths": 256, "substeps_per_cell": 4, "T": 1.0,
                          "x_gbm": 1.0, "rate_offset": 0.5, "tolerance": 1e-6, "exact_steps": 1024}},
            run_wz,
            {"numerics/n_paths": {"minimum": 1}},
        ),
        Scenario(
            "hjmm", "HJMM equation with the extended Svensson subspace",
            {"model": {"z6": 1.0, "z7": 2.0, "gamma": 0.1}, "set": {"norm": "equivalent"},
             "numerics": {"grid_points": 2048, "x_max": 30.0, "grid_scale": 0.1, "T": 1.0, "steps": 100,
                          "n_paths": 64, "start": [0.02, -0.01, 0.01, 0.005, 0.0], "table_rows": 20,
                          "epsilon_cases": [[1.0, 2.5, 0.1], [0.6, 1.0, 0.2]],
                          "z7_sweep": [2.5, 2.25, 2.1, 2.05, 2.01, 2.001]}},
            run_hjmm,
            {"set/norm": {"enum": ["equivalent", "original"]}},
        ),
        Scenario(
            "negative-rates", "cone of nonnegative forward curves: QP distance against |h^-|",
            {"model": {"gamma": 0.1}, "set": {"norm": "equivalent"},
             "numerics": {"grid_points": 2048, "x_max": 30.0, "grid_scale": 0.1, "eta_values": [0.01, 0.1],
                          "svensson": [0.02, -0.03, 0.0, 0.0, 0.0, 1.0, 2.0], "n_random": 1000}},
            run_negative_rates,
            {"set/norm": {"enum": ["equivalent", "original"]}},
        ),
        Scenario(
            "rate-spde", "second-order interest-rate SPDE: eigenrelation, state process, X - Y gap",
            {"model": {"kappa": 0.5, "index_set": [1, 2], "alpha_scale": 0.2, "sigma_scale": 0.3,
                       "grid_points": 1024},
             "set": {},
             "numerics": {"n_modes": None, "eig_points": 511, "eig_n_max": 8, "T": 1.0, "state_steps": 256,
                          "state_paths": 16, "z0": [1.0, 0.0], "x0": [1.0, 0.0],
                          "gap_steps": 50, "n_paths": 1000, "radius": 0.05}},
            run_rate,
            {"numerics/n_paths": {"minimum": 2}},
        ),
        Scenario(
            "stochastic-bounds", "Monte Carlo phi_{r,m} and psi_{r,m}",
            {"model": {"gamma": 0.1, "lipschitz": 0.5}, "set": {},
             "numerics": {"r": 1, "m": 8, "T": 1.0, "n_samples": 20000, "n_times": 11}},
            run_bounds,
            {"numerics/n_samples": {"minimum": 100}, "numerics/r": {"minimum": 1}, "numerics/m": {"minimum": 1},
             "model/lipschitz": {"minimum": 0}},
        ),
        Scenario(
            "unbounded-functional", "g_n with bounded norm and g_n'(0) = sqrt(n)",
            {"model": {"gamma": 1.0}, "set": {}, "numerics": {"n_max": 10000, "cells": 4096}},
            run_unbounded,
            {"numerics/n_max": {"minimum": 4}},
        ),
    ]
}
