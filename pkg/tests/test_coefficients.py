import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import agents, configs, markets
from mvgames.coefficients import (admissibility_margin, build_agent_coefficients, build_all, compute_a_atilde,
                                  compute_rho, cubic_residual, slope_cubic_coefficients, solve_slope)
from mvgames.cubic import horner
from mvgames.equilibrium import complete_coefficients, g_equation_residuals
from mvgames.errors import NoAdmissibleRoot, SolverError
from mvgames.model import AgentType, MarketParams, replace_agent

FIG1 = AgentType(x0=0.35, b=0.16, xi=0.03, sigma=0.01, phi=0.5, gamma=4.24, mu1=0.16, mu2=0.98)
FIG2 = AgentType(x0=0.39, b=0.14, xi=0.03, sigma=0.04, phi=0.25, gamma=5.5, mu1=0.28, mu2=0.52)
FIG3 = AgentType(x0=0.94, b=0.19, xi=0.03, sigma=0.05, phi=0.97, gamma=7.87, mu1=5.5, mu2=0.67)
FIG4 = AgentType(x0=0.29, b=0.14, xi=0.04, sigma=0.01, phi=0.74, gamma=9.53, mu1=0.73, mu2=5.5)
M1, M2, M3, M4 = MarketParams(0.05, 0.04), MarketParams(0.05, 0.04), MarketParams(0.05, 0.5), MarketParams(0.05, 1.0)


@pytest.mark.parametrize("xi, sigma, want", [(0.03, 0.01, 500.0), (0.0, 0.5, 2.0), (0.03, 0.04, 200.0)])
def test_rho(xi, sigma, want):
    assert compute_rho(xi, sigma) == pytest.approx(want, rel=1e-12)


def test_rho_rejects_zero_volatility():
    with pytest.raises(ValueError):
        compute_rho(0.0, 0.0)


def test_zero_mu1_zero_rate_cubic():
    a = replace_agent(FIG1, mu1=0.0)
    m = MarketParams(0.0, 1.0)
    n = 3
    g, phn = a.gamma, 1 - a.phi / n
    rho = compute_rho(a.xi, a.sigma)
    want = (g * phn, g * phn * (2 * rho * a.b ** 2 - 1.0), g * phn, 0.0)
    assert slope_cubic_coefficients(a, m, n) == pytest.approx(want, rel=1e-13)
    assert solve_slope(a, m, n).selected == 0.0


def test_leading_coefficient_cancels():
    n = 4
    a = replace_agent(FIG2, mu1=2 * FIG2.gamma * (1 - FIG2.phi / n), xi=0.3, sigma=0.3)
    m = MarketParams(0.05, 2.0)
    assert slope_cubic_coefficients(a, m, n)[0] == pytest.approx(0.0, abs=1e-15)
    c = build_agent_coefficients(a, m, n)
    assert cubic_residual(c) < 1e-12


def x2_equation(z, agent, market, n):
    """x^2 coefficient of the expanded value equation with A, a, a_tilde substituted; zero at the slope."""
    lam, r, g, mu1 = market.lam, market.r, agent.gamma, agent.mu1
    phn = 1 - agent.phi / n
    rho, beta = compute_rho(agent.xi, agent.sigma), agent.b - r
    p = z / (rho * beta)
    a = lam * phn / (lam - r - rho * p * beta)
    at = lam * phn ** 2 / (lam - (2 * r + 2 * rho * p * beta + 0.5 * rho * p * p))
    A = mu1 * a - g * at + g * a * a
    return 2 * A * r - mu1 * a * r - lam * (A + g * (a - phn) ** 2 - mu1 * phn) + 0.5 * rho * g * at * p * p, \
        (lam - r - z) ** 2 * (lam - 2 * r - 2 * z - z * z / (2 * rho * beta ** 2))


@pytest.mark.parametrize("phi", [0.0, 0.3, 1.0])
def test_cubic_matches_unexpanded_equation(phi):
    # cleared of denominators the x^2 equation is z times the cubic, up to a constant factor
    a, n = replace_agent(FIG1, phi=phi), 1000
    cs = slope_cubic_coefficients(a, M1, n)
    ratios = []
    for z in np.random.default_rng(5).uniform(-0.5, 0.5, 4):
        f, den = x2_equation(z, a, M1, n)
        ratios.append(z * horner(cs, z) / (f * den))
    assert np.ptp(ratios) <= 1e-9 * abs(np.mean(ratios))


def test_a_atilde_forced_values():
    a = FIG2
    m = MarketParams(0.0, 1.0)
    n = 5
    phn = 1 - a.phi / n
    assert compute_a_atilde(0.0, a, m, n) == pytest.approx((phn, phn * phn), rel=1e-14)
    z = 0.01
    aa, _ = compute_a_atilde(z, replace_agent(a, phi=0.0), M3, 1)
    assert aa == pytest.approx(M3.lam / (M3.lam - M3.r - z), rel=1e-14)


@pytest.mark.parametrize("agent, market, n", [(FIG1, M1, 1000), (FIG2, M2, 1000), (FIG3, M3, 1000),
                                              (FIG4, M4, 1000), (FIG2, M4, 3)])
def test_figure_agents_residuals(agent, market, n):
    c = build_agent_coefficients(agent, market, n)
    assert cubic_residual(c) <= 1e-9
    assert max(g_equation_residuals(c)) <= 1e-10
    assert c.a_tilde > 0 and admissibility_margin(c.z, agent, market) > 0
    g, mu1, rho, beta = agent.gamma, agent.mu1, c.rho, c.beta
    # q equation in its unsolved form
    lhs = (g * c.a_tilde * (market.lam - market.r) * (2 * market.r - market.lam + beta * rho * c.p)
           - (2 * g * market.lam * (c.a - c.phi_n) + mu1 * (market.lam - market.r)) * c.a * rho * beta ** 2) * c.q
    rhs = -2 * g * market.lam * agent.phi * market.r * (c.a - c.phi_n) * beta
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
    # xy coefficient of the value equation
    lam, r = market.lam, market.r
    t = (2 * c.D * r, -mu1 * c.c * r, -lam * (c.D + 2 * g * (c.a - c.phi_n) * (c.c + agent.phi) + mu1 * agent.phi),
         rho * g * c.a_tilde * c.p * c.q)
    assert abs(math.fsum(t)) <= 1e-10 * max(1.0, max(map(abs, t)))
    # slope and cross term from their unreduced ratios
    den = mu1 * c.a + g * c.a ** 2 - c.A
    assert c.p == pytest.approx((2 * c.A - mu1 * c.a) * beta / den, rel=1e-9)
    assert c.q == pytest.approx(beta * (c.D - mu1 * c.c) / den, rel=1e-9, abs=1e-14)


def test_intercept_forms_agree():
    # constant of the strategy from k1, k2, k3 versus the unreduced ratio with E and alpha
    c = build_agent_coefficients(FIG1, M1, 1000)
    a = FIG1
    for sh, bh in np.random.default_rng(3).normal(size=(5, 2)):
        done = complete_coefficients(c, c.k1 * sh + c.k2 * bh + c.k3, sh, bh, sh * sh + 0.1)
        den = a.mu1 * c.a + a.gamma * c.a ** 2 - c.A
        vr = (c.beta * (done.E - a.mu1 * done.alpha) + a.sigma * sh * (c.D - a.mu1 * c.c - 2 * a.gamma * c.a * c.c)) / den
        assert vr == pytest.approx(done.varrho, rel=1e-9)


def test_no_competition_collapse():
    c = build_agent_coefficients(replace_agent(FIG3, phi=0.0), M3, 7)
    assert (c.q, c.c, c.D, c.k1, c.k2, c.N) == (0.0, 0.0, 0.0, 0.0, 0.0, 1.0)


def test_zero_rate_collapse():
    a = replace_agent(FIG2, mu1=0.0)
    c = build_agent_coefficients(a, MarketParams(0.0, 1.0), 3)
    assert c.q == 0.0
    assert c.c == pytest.approx(-a.phi, abs=1e-15)
    c = build_agent_coefficients(FIG2, MarketParams(0.0, 0.7), 3)
    assert c.q == 0.0


def test_k3_vanishes_without_mu2():
    assert build_agent_coefficients(replace_agent(FIG4, mu2=0.0), M4, 10).k3 == 0.0


def test_wealth_only_single_agent_has_no_intercept():
    a = AgentType(x0=1.0, b=0.12, xi=0.2, sigma=0.15, phi=0.0, gamma=3.0, mu1=2.0, mu2=0.0)
    c = build_agent_coefficients(a, MarketParams(0.03, 2.0), 1)
    assert c.k3 == 0.0 and c.q == 0.0


@given(agents(), markets())
def test_admissible_roots_satisfy_condition(agent, market):
    agent = replace_agent(agent, b=market.r + (agent.b - 0.05))
    try:
        roots = solve_slope(agent, market, 3)
    except NoAdmissibleRoot:
        return
    for z in roots.admissible:
        _, at = compute_a_atilde(z, agent, market, 3)
        assert at > 0 and admissibility_margin(z, agent, market) > 0
    cs = slope_cubic_coefficients(agent, market, 3)
    scale = 1 + max(map(abs, cs))
    for z in roots.all_real_roots:
        assert abs(horner(cs, z)) <= 1e-9 * scale * max(1.0, abs(z)) ** 3


@given(configs())
def test_identities_on_random_agents(cfg):
    try:
        cs = build_all(cfg.agents, cfg.market, cfg.n)
    except SolverError:
        return
    for c in cs:
        g, mu1 = c.agent.gamma, c.agent.mu1
        assert abs(c.A - (mu1 * c.a - g * c.a_tilde + g * c.a * c.a)) <= 1e-12 * (1 + abs(c.A))
        assert c.a_tilde > 0
        assert c.A - mu1 * c.a - g * c.a * c.a < 0
        assert max(g_equation_residuals(c)) <= 1e-10
        assert cubic_residual(c) <= 1e-9


@given(agents(), markets(), st.sampled_from([0.0, 0.5, 2.0]))
def test_q_and_c_proportional_to_phi_when_mu1_zero(agent, market, t):
    # exact in the mean-field normalisation, where the slope does not depend on phi
    agent = replace_agent(agent, mu1=0.0, b=market.r + (agent.b - 0.05), phi=min(agent.phi, 0.5))
    try:
        base = build_agent_coefficients(agent, market, None)
        scaled = build_agent_coefficients(replace_agent(agent, phi=t * agent.phi), market, None)
    except SolverError:
        return
    assert scaled.q == pytest.approx(t * base.q, rel=1e-10, abs=1e-12)
    assert scaled.c == pytest.approx(t * base.c, rel=1e-10, abs=1e-12)


@given(agents(), markets(), st.integers(1, 20))
def test_q_vanishes_at_phi_zero(agent, market, n):
    agent = replace_agent(agent, phi=0.0, b=market.r + (agent.b - 0.05))
    try:
        c = build_agent_coefficients(agent, market, n)
    except SolverError:
        return
    assert c.q == 0.0 and c.c == 0.0


@given(configs(sizes=(3, 5)), st.randoms())
def test_permutation_equivariance(cfg, rnd):
    try:
        cs = build_all(cfg.agents, cfg.market, cfg.n)
    except SolverError:
        return
    perm = list(range(cfg.n))
    rnd.shuffle(perm)
    ps = build_all([cfg.agents[k] for k in perm], cfg.market, cfg.n)
    for j, k in enumerate(perm):
        assert ps[j] == cs[k]


def test_identical_agents_identical_records():
    cs = build_all([FIG2] * 4, M2, 4)
    assert all(c == cs[0] for c in cs)
