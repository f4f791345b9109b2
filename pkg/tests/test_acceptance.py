"""One test per acceptance criterion. Each records a PASS/FAIL line for the terminal summary."""
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import degenerate
from conftest import ACCEPTANCE
from instances import config_suite
from mvgames.closed_forms import lambda_inf_mf, lambda_inf_n, state_indep_zero_rate_n
from mvgames.coefficients import cubic_residual
from mvgames.convergence import convergence_curve
from mvgames.equilibrium import (INFINITE, NONEXISTENT, UNIQUE, direct_solve, evaluate_G, evaluate_H, evaluate_value,
                                 g_equation_residuals, residuals_for, solve_n_agent, vgh_deviation)
from mvgames.errors import SolverError
from mvgames.feedback import LinearFeedback
from mvgames.figures import RECIPES, SweepSpec, figure_population, relative_change, run_sweep
from mvgames.mean_field import TypeMeasure, solve_mfg
from mvgames.model import AgentType, GameConfig, MarketParams, leave_one_out_means, load_config, replace_agent
from mvgames.simulator import SimConfig, deviation_test, estimate_G_H, estimate_J, simulate_paths

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, detail


@pytest.fixture(scope="module")
def suite():
    t = time.perf_counter()
    out = []
    for cfg in config_suite():
        try:
            out.append((cfg, solve_n_agent(cfg)))
        except SolverError:
            out.append((cfg, None))
    return out, time.perf_counter() - t


def solved(suite):
    return [(cfg, res) for cfg, res in suite[0] if res is not None and res.solution is not None]


def test_criterion_1_coefficient_residuals(suite):
    t = time.perf_counter()
    worst = dict(cubic=0.0, geq=0.0, A=0.0)
    for _, res in solved(suite):
        for c in res.solution.per_agent:
            worst["cubic"] = max(worst["cubic"], cubic_residual(c))
            worst["geq"] = max(worst["geq"], max(g_equation_residuals(c)))
            a = c.agent
            A = a.mu1 * c.a - a.gamma * c.a_tilde + a.gamma * c.a * c.a
            worst["A"] = max(worst["A"], abs(c.A - A) / max(1.0, abs(c.A)))
    runtime = suite[1] + time.perf_counter() - t
    n = len(solved(suite))
    ok = (n == 200 and worst["cubic"] <= 1e-9 and worst["geq"] <= 1e-10 and worst["A"] <= 1e-12 and runtime < 5)
    record(1, ok, f"{n}/200 solved, cubic {worst['cubic']:.1e}, G-equations {worst['geq']:.1e}, "
                  f"A identity {worst['A']:.1e}, {runtime:.2f} s")


def test_criterion_2_oracle_equivalence(suite):
    worst = 0.0
    for _, res in solved(suite):
        sol = res.solution
        pd, _ = direct_solve(res.coeffs, sol.frozen_profile)
        pr = sol.pi_at_frozen()
        worst = max(worst, np.abs(pd - pr).max() / (1 + np.abs(pr).max()))
    record(2, worst <= 1e-8, f"worst reduced vs direct gap {worst:.1e} (relative to 1 + |pi|)")


def test_criterion_3_extended_hjb(suite):
    hjb = vgh = 0.0
    second_order_ok = True
    for _, res in solved(suite):
        for c in res.solution.per_agent:
            r = residuals_for(c)
            hjb = max(hjb, r.lg, r.lh, r.ehjb3, r.ehjb)
            vgh = max(vgh, vgh_deviation(c))
            second_order_ok &= c.a_tilde > 0 and r.second_order < 0
    c = solve_n_agent(load_config(CONFIGS / "three_agents.json")).solution.per_agent[1]
    bad_q = residuals_for(replace(c, q=c.q * 1.01 + 1e-3))
    bad_e = replace(c, E=c.E * 1.01 + 1e-3)
    controls = bad_q.lg > 1e-8 and residuals_for(bad_e).ehjb3 > 1e-8 and vgh_deviation(bad_e) > 1e-9
    ok = hjb <= 1e-8 and vgh <= 1e-9 and second_order_ok and controls
    record(3, ok, f"HJB/LG/LH {hjb:.1e}, VGH {vgh:.1e}, second order {'ok' if second_order_ok else 'violated'}, "
                  f"negative controls {'rejected' if controls else 'accepted'}")


def test_criterion_4_limits(suite):
    worst = 0.0
    for cfg, _ in suite[0][:50]:
        lim = lambda_inf_n(cfg.agents, cfg.market.r)
        sol = solve_n_agent(cfg.with_market(lam=1e6)).solution
        worst = max(worst, np.max(np.abs(sol.pi_at_frozen() / lim.pi - 1)))
    ags = [AgentType(1.0, 0.1, 0.0, 0.2, 0.5, 2.0, 0.0, 2.0),
           AgentType(-0.3, 0.15, 0.1, 0.1, 0.3, 1.0, 0.0, 2.0),
           AgentType(2.0, 0.05, 0.3, 0.05, 0.9, 4.0, 0.0, 2.0)]
    ref = state_indep_zero_rate_n(ags, 1.0).pi
    drift = max(np.max(np.abs(solve_n_agent(GameConfig(ags, MarketParams(0.0, lam))).solution.pi_at_frozen() - ref)
                       / np.abs(ref)) for lam in (0.1, 1.0, 10.0, 1e3))
    # four identical agents: psi = sigma^2, Psi = phi, Phi0 = sigma b / (gamma psi)
    psi, Psi = 0.04, 0.5
    hand = (0.5 * 0.2 / psi) * (0.2 * 0.1 / (2.0 * psi)) / (1 - Psi) + 0.1 / (2.0 * psi)
    ident = load_config(CONFIGS / "identical_agents.json")
    got = solve_n_agent(ident).solution.pi_at_frozen()
    bench = max(abs(hand - 2.5), np.max(np.abs(got - hand)))
    ok = worst <= 1e-3 and drift <= 1e-9 and bench <= 1e-9
    record(4, ok, f"large-hazard rel gap {worst:.1e}, zero-rate lambda drift {drift:.1e}, "
                  f"benchmark |pi - 2.5| {bench:.1e}")


@pytest.mark.slow
def test_criterion_5_monte_carlo():
    cfg = load_config(CONFIGS / "three_agents.json")
    sol = solve_n_agent(cfg).solution
    t = time.perf_counter()
    ens = simulate_paths(cfg, sol.feedback, SimConfig(dt=1e-3, n_paths=100_000, seed=11))
    x = sol.frozen_profile
    y = leave_one_out_means(x)
    zs = []
    for i in range(cfg.n):
        J = estimate_J(i, ens, cfg)
        G, H = estimate_G_H(i, ens, cfg)
        for est, th in ((J, evaluate_value(sol, i, x[i], y[i])), (G, evaluate_G(sol, i, x[i], y[i])),
                        (H, evaluate_H(sol, i, x[i], y[i]))):
            zs.append((est.mean - th) / est.std_error)
    runtime = time.perf_counter() - t
    worst = float(np.max(np.abs(zs)))
    record(5, worst <= 3 and runtime < 60, f"max |z| over J, G, H of 3 agents {worst:.2f}, {runtime:.1f} s")


def _deviation_pass(cfg, sim):
    sol = solve_n_agent(cfg).solution
    reps = deviation_test(0, cfg, sol, sim=sim)
    fb = sol.feedback
    bad = LinearFeedback(fb.d * 1.5, fb.U * 1.5, fb.W, fb.m0 * 1.5)
    rejected = not all(r.passes for r in deviation_test(0, cfg, sol, sim=sim, baseline=bad))
    worst = min(r.normalized_gap.mean / r.normalized_gap.std_error for r in reps if r.normalized_gap.std_error > 0)
    return len(reps) == 6 and all(r.passes for r in reps), rejected, worst


@pytest.mark.slow
def test_criterion_6_deviation():
    sim = SimConfig(n_paths=200_000, antithetic=True, seed=11)
    single = load_config(CONFIGS / "single_agent.json")
    three = load_config(CONFIGS / "three_agents.json").with_market(lam=4.0)
    s_ok, s_rej, s_w = _deviation_pass(single, sim)
    t_ok, t_rej, t_w = _deviation_pass(three, sim)
    ok = s_ok and t_ok and s_rej and t_rej
    record(6, ok, f"single agent min gap/SE {s_w:.2f}, n=3 min gap/SE {t_w:.2f}, "
                  f"scaled control rejected {s_rej and t_rej}")


FIG_SEED = 7


def _sweep(fig):
    cfg = figure_population(fig, seed=FIG_SEED)
    t = time.perf_counter()
    rows = run_sweep(cfg, SweepSpec(RECIPES[fig].parameter, RECIPES[fig].grid(), 499))
    return np.array([r.pi_hat for r in rows]), np.array([r.pi_tilde for r in rows]), time.perf_counter() - t


@pytest.mark.slow
def test_criterion_7_figures():
    h1, t1, s1 = _sweep(1)
    h2, t2, s2 = _sweep(2)
    h3, t3, s3 = _sweep(3)
    h4, t4, s4 = _sweep(4)
    checks = {
        "fig1": bool(np.all(np.diff(h1) >= 0) and np.ptp(t1) <= 1e-12 * abs(t1[0])),
        "fig2": bool(np.all(np.diff(h2) < 0) and np.all(np.diff(t2) < 0) and np.all(h2 >= t2)),
        "fig3": bool(np.all(np.diff(h3) > 0) and np.all(np.diff(t3) > 0)),
        "fig4": bool(np.all(np.diff(h4) >= 0) and np.all(np.diff(t4) >= 0)
                     and relative_change(h4) < relative_change(h3)),
        "runtime": max(s1, s2, s3, s4) < 120,
    }
    detail = ", ".join(f"{k} {'ok' if v else 'no'}" for k, v in checks.items())
    detail += (f"; fig2 pi_hat {h2[0]:.3g}->{h2[-1]:.3g}, fig3 min step {np.diff(h3).min():.2g}, "
               f"rel change mu2 {relative_change(h4):.2f} vs mu1 {relative_change(h3):.2f}, "
               f"slowest sweep {max(s1, s2, s3, s4):.0f} s")
    record(7, all(checks.values()), detail)


def test_criterion_8_convergence():
    mkt = MarketParams(0.03, 2.0)
    A = AgentType(0.5, 0.12, 0.2, 0.15, 0.6, 2.0, 0.5, 1.0)
    B = AgentType(0.8, 0.10, 0.1, 0.25, 0.3, 3.0, 0.2, 1.5)
    t = time.perf_counter()
    pm = convergence_curve(TypeMeasure.point_mass(A), (10, 100, 1000), 0, 0, mkt)
    ratio = pm.errors[-1] / pm.errors[0]
    trend = sum(convergence_curve(TypeMeasure((A, B), (0.5, 0.5)), (10, 100, 1000), 0, s, mkt).decreasing_trend
                for s in (1, 2, 3))
    runtime = time.perf_counter() - t
    ok = pm.monotone and ratio <= 0.05 and trend >= 2 and runtime < 60
    record(8, ok, f"point-mass ratio {ratio:.4f}, monotone {pm.monotone}, two-atom trend in {trend}/3 seeds, "
                  f"{runtime:.1f} s")


def test_criterion_9_degenerate_branches():
    cfg, xc, xb, kappa = degenerate.singular_n_agent()
    n_kinds = (solve_n_agent(GameConfig(degenerate.N_AGENTS, degenerate.N_MARKET)).outcome.kind,
               solve_n_agent(cfg, x=xc).outcome, solve_n_agent(cfg, x=xb).outcome.kind)
    good, bad, mf_kappa = degenerate.singular_mf()
    mf_kinds = (solve_mfg(TypeMeasure(degenerate.MF_ATOMS, degenerate.MF_WEIGHTS), degenerate.MF_MARKET).outcome.kind,
                solve_mfg(good, degenerate.MF_MARKET).outcome, solve_mfg(bad, degenerate.MF_MARKET).outcome.kind)
    ok = (n_kinds[0] == UNIQUE and n_kinds[1].kind == INFINITE and n_kinds[2] == NONEXISTENT
          and n_kinds[1].kappa == pytest.approx(kappa, rel=1e-6)
          and mf_kinds[0] == UNIQUE and mf_kinds[1].kind == INFINITE and mf_kinds[2] == NONEXISTENT
          and mf_kinds[1].kappa == pytest.approx(mf_kappa, rel=1e-6))
    # the closed-form limit solvers share the same trichotomy
    a = AgentType(0.0, 0.1, 0.0, 0.2, 1.0, 2.0, 1.0, 0.5)
    fam = TypeMeasure((replace_agent(a, x0=-0.2), replace_agent(a, x0=-0.8)), (0.5, 0.5))
    ok = (ok and lambda_inf_mf(fam, 0.05).kind == INFINITE
          and lambda_inf_mf(TypeMeasure.point_mass(a), 0.05).kind == NONEXISTENT)
    record(9, ok, f"n-agent {n_kinds[0]}/{n_kinds[1].kind} (kappa {n_kinds[1].kappa:.4g})/{n_kinds[2]}, "
                  f"mean field {mf_kinds[0]}/{mf_kinds[1].kind} (kappa {mf_kinds[1].kappa:.4g})/{mf_kinds[2]}")
