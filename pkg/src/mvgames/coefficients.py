"""Per-agent coefficient pipeline: slope cubic, G/V coefficients, feedback constants.

Notation: beta = b - r, rho = 1 / (2 (xi^2 + sigma^2)), s = rho beta^2 and z = rho beta p.
``n=None`` selects the mean-field version, where 1 - phi/n is replaced by 1 and N = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .cubic import horner, real_roots
from .errors import DegenerateN, DegenerateQ, NoAdmissibleRoot, PoleAtDenominator, SingularQ
from .model import AgentType, MarketParams, NumericTolerances

NAN = float("nan")


@dataclass(frozen=True)
class SlopeRoots:
    all_real_roots: tuple
    admissible: tuple
    selected: float
    z_inf: float


@dataclass(frozen=True)
class AgentCoefficients:
    agent: AgentType
    market: MarketParams
    n: int | None
    phi_n: float
    rho: float
    roots: SlopeRoots
    z: float
    p: float
    a: float
    a_tilde: float
    q: float
    c: float
    A: float
    C: float
    D: float
    Q: float
    k1: float
    k2: float
    k3: float
    N: float
    # filled once aggregates are known
    alpha: float = NAN
    varrho: float = NAN
    E: float = NAN
    F: float = NAN
    I: float = NAN
    c_tilde: float = NAN
    d_tilde: float = NAN
    e_tilde: float = NAN
    beta_tilde: float = NAN
    l_tilde: float = NAN
    hats: dict = field(default=None, compare=False, repr=False)

    @property
    def beta(self) -> float:
        return self.agent.b - self.market.r

    @property
    def completed(self) -> bool:
        return not math.isnan(self.I)

    def with_completion(self, **kw) -> "AgentCoefficients":
        return replace(self, **kw)


def phi_n_of(agent: AgentType, n) -> float:
    return 1.0 if n is None else 1.0 - agent.phi / n


def compute_rho(xi: float, sigma: float) -> float:
    v = xi * xi + sigma * sigma
    if not v > 0:
        raise ValueError("xi and sigma cannot both be zero")
    return 1.0 / (2.0 * v)


def slope_cubic_coefficients(agent: AgentType, market: MarketParams, n) -> tuple:
    r, lam = market.r, market.lam
    g, mu1, phn = agent.gamma, agent.mu1, phi_n_of(agent, n)
    s = compute_rho(agent.xi, agent.sigma) * (agent.b - r) ** 2
    c3 = g * phn - mu1 / 2.0
    c2 = mu1 * ((lam - r) / 2.0 - 2.0 * s) + g * phn * (2.0 * s - lam + 2.0 * r)
    c1 = s * (mu1 * (3.0 * lam - 4.0 * r) + 4.0 * r * g * phn) + g * phn * (lam - r) ** 2
    c0 = s * (2.0 * g * r * r * phn - mu1 * (lam - r) * (lam - 2.0 * r))
    return (c3, c2, c1, c0)


def admissibility_margin(z: float, agent: AgentType, market: MarketParams) -> float:
    """lambda - 2r - 2z - z^2/(2s); positive exactly when a_tilde > 0."""
    s = compute_rho(agent.xi, agent.sigma) * (agent.b - market.r) ** 2
    return market.lam - 2.0 * market.r - 2.0 * z - z * z / (2.0 * s)


def limit_slope(agent: AgentType, market: MarketParams, n) -> float:
    """Slope z as lambda -> infinity: s mu1 / (gamma phi_n)."""
    s = compute_rho(agent.xi, agent.sigma) * (agent.b - market.r) ** 2
    phn = phi_n_of(agent, n)
    if phn == 0.0:
        return math.inf
    return s * agent.mu1 / (agent.gamma * phn)


def solve_slope(agent: AgentType, market: MarketParams, n, tol: NumericTolerances | None = None,
                root_index: int | None = None) -> SlopeRoots:
    tol = tol or NumericTolerances()
    coeffs = slope_cubic_coefficients(agent, market, n)
    roots = real_roots(coeffs, tol.root_tol)
    eps = market.eps_excl(tol)
    adm = tuple(z for z in roots if admissibility_margin(z, agent, market) > eps)
    z_inf = limit_slope(agent, market, n)
    if not adm:
        raise NoAdmissibleRoot(f"no admissible slope root among {roots}", roots=roots)
    if root_index is None:
        sel = min(adm, key=lambda z: (abs(z - z_inf), z))
    else:
        if not -len(adm) <= root_index < len(adm):
            raise NoAdmissibleRoot(f"root index {root_index} out of range ({len(adm)} admissible)")
        sel = adm[root_index]
    return SlopeRoots(tuple(roots), adm, sel, z_inf)


def compute_a_atilde(z: float, agent: AgentType, market: MarketParams, n, tol=None):
    tol = tol or NumericTolerances()
    eps = market.eps_excl(tol)
    lam, r, phn = market.lam, market.r, phi_n_of(agent, n)
    den_a = lam - r - z
    den_at = admissibility_margin(z, agent, market)
    if abs(den_a) <= eps:
        raise PoleAtDenominator("lambda - r - z vanishes")
    if abs(den_at) <= eps:
        raise PoleAtDenominator("a_tilde denominator vanishes")
    return lam * phn / den_a, lam * phn * phn / den_at


def q_multiplier(z, a, a_tilde, agent, market, n) -> tuple:
    """Returns (multiplier, scale) of q in its linear equation."""
    lam, r = market.lam, market.r
    g, mu1, phn = agent.gamma, agent.mu1, phi_n_of(agent, n)
    rho, beta = compute_rho(agent.xi, agent.sigma), agent.b - r
    t1 = g * a_tilde * (lam - r) * (2.0 * r - lam + z)
    t2 = (2.0 * g * lam * (a - phn) + mu1 * (lam - r)) * a * rho * beta ** 2
    return t1 - t2, max(abs(t1), abs(t2))


def compute_q(z, a, a_tilde, agent: AgentType, market: MarketParams, n=None, tol=None) -> float:
    tol = tol or NumericTolerances()
    lam, r = market.lam, market.r
    g, phn = agent.gamma, phi_n_of(agent, n)
    mult, scale = q_multiplier(z, a, a_tilde, agent, market, n)
    if abs(mult) <= tol.excl_tol * max(1.0, scale):
        raise SingularQ("multiplier of q vanishes")
    return -2.0 * g * lam * agent.phi * r * (a - phn) * (agent.b - r) / mult


def compute_c_D(q, a, a_tilde, z, agent: AgentType, market: MarketParams, n=None):
    lam, r = market.lam, market.r
    g, mu1, phi, phn = agent.gamma, agent.mu1, agent.phi, phi_n_of(agent, n)
    rho, beta = compute_rho(agent.xi, agent.sigma), agent.b - r
    p = z / (rho * beta)
    c = (a * rho * q * beta - lam * phi) / (lam - r)
    D = (mu1 * c * r - g * a_tilde * rho * p * q + 2.0 * g * lam * (a - phn) * (c + phi)
         + lam * mu1 * phi) / (2.0 * r - lam)
    return c, D


def compute_C(q, a_tilde, c, agent: AgentType, market: MarketParams) -> float:
    # the competition term enters squared; see the y^2 coefficient of the value equation
    lam, r, g = market.lam, market.r, agent.gamma
    rho = compute_rho(agent.xi, agent.sigma)
    return (lam * g * (c + agent.phi) ** 2 - 0.5 * rho * g * a_tilde * q * q) / (2.0 * r - lam)


def compute_Q_k_N(z, a, a_tilde, c, D, agent: AgentType, market: MarketParams, n, tol=None):
    tol = tol or NumericTolerances()
    lam, r = market.lam, market.r
    g, mu1, mu2, phn = agent.gamma, agent.mu1, agent.mu2, phi_n_of(agent, n)
    rho, beta, sig = compute_rho(agent.xi, agent.sigma), agent.b - r, agent.sigma
    t1 = g * a_tilde * (r - lam + z)
    t2 = a * rho * beta ** 2 * (2.0 * g * (a - phn) + mu1)
    Q = t1 - t2
    if abs(Q) <= tol.excl_tol * max(1.0, abs(t1), abs(t2)):
        raise DegenerateQ("Q vanishes")
    k1 = rho * sig * (r - lam) * (D - mu1 * c - 2.0 * g * a * c) / Q
    k2 = rho * beta * (2.0 * g * (a - phn) * c + mu1 * c - D) / Q
    k3 = -mu2 * rho * lam * phn * beta / Q
    if n is None:
        N = 1.0
    else:
        N = (k2 * beta + k1 * sig + n) / n
        if abs(N) <= tol.excl_tol:
            raise DegenerateN("N vanishes")
    return Q, k1, k2, k3, N


def build_agent_coefficients(agent: AgentType, market: MarketParams, n, tol=None, root_index=None,
                             index=None) -> AgentCoefficients:
    tol = tol or NumericTolerances()
    try:
        roots = solve_slope(agent, market, n, tol, root_index)
        z = roots.selected
        rho = compute_rho(agent.xi, agent.sigma)
        beta = agent.b - market.r
        a, a_t = compute_a_atilde(z, agent, market, n, tol)
        q = compute_q(z, a, a_t, agent, market, n, tol)
        c, D = compute_c_D(q, a, a_t, z, agent, market, n)
        Q, k1, k2, k3, N = compute_Q_k_N(z, a, a_t, c, D, agent, market, n, tol)
    except (NoAdmissibleRoot, PoleAtDenominator, SingularQ, DegenerateQ, DegenerateN) as exc:
        if index is None:
            raise
        raise type(exc)(str(exc), agent=index, **exc.info) from exc
    A = agent.mu1 * a - agent.gamma * a_t + agent.gamma * a * a
    C = compute_C(q, a_t, c, agent, market)
    return AgentCoefficients(
        agent=agent, market=market, n=n, phi_n=phi_n_of(agent, n), rho=rho, roots=roots,
        z=z, p=z / (rho * beta), a=a, a_tilde=a_t, q=q, c=c, A=A, C=C, D=D,
        Q=Q, k1=k1, k2=k2, k3=k3, N=N,
    )


def build_all(agents, market, n, tol=None, root_index=None) -> list[AgentCoefficients]:
    return [build_agent_coefficients(a, market, n, tol, root_index, index=i) for i, a in enumerate(agents)]


def cubic_residual(coeffs: AgentCoefficients) -> float:
    """Relative residual of the slope cubic at the selected root."""
    cs = slope_cubic_coefficients(coeffs.agent, coeffs.market, coeffs.n)
    scale = 1.0 + max(abs(v) for v in cs)
    return abs(horner(cs, coeffs.z)) / (scale * max(1.0, abs(coeffs.z)) ** 3)
