"""Closed-form regimes: lambda -> infinity, zero rate with constant risk aversion, no competition."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cubic import real_roots
from .equilibrium import INFINITE, NONEXISTENT, UNIQUE
from .errors import NoAdmissibleRoot, PreconditionError
from .model import AgentType, MarketParams


@dataclass(frozen=True)
class LimitScalars:
    psi: np.ndarray
    Psi: float
    Phi: float
    Phi0: float
    Upsilon: float


@dataclass(frozen=True)
class LimitResult:
    regime: str
    kind: str
    scalars: LimitScalars
    pi: np.ndarray | None = None
    slope: np.ndarray | None = None
    intercept: np.ndarray | None = None
    family_loading: np.ndarray | None = None  # pi = slope x + intercept + loading * free value
    value: dict = field(default_factory=dict)  # name -> per-agent array (A, C, D, E, F, I)


@dataclass(frozen=True)
class NoCompetitionScalars:
    iota: float
    zeta: float
    varsigma: float
    nu: float | None
    frak_z: float
    frak_o: float | None


def _arr(agents, f):
    return np.array([f(a) for a in agents], dtype=float)


def limit_scalars(agents, r, x=None, weights=None) -> LimitScalars:
    """Population scalars of the large-lambda regime.

    ``weights=None`` means n agents with phi_n = 1 - phi/n; otherwise mean-field expectations.
    """
    n = len(agents)
    x = _arr(agents, lambda a: a.x0) if x is None else np.asarray(x, dtype=float)
    xi, sig, phi = _arr(agents, lambda a: a.xi), _arr(agents, lambda a: a.sigma), _arr(agents, lambda a: a.phi)
    b, g = _arr(agents, lambda a: a.b), _arr(agents, lambda a: a.gamma)
    mu1, mu2 = _arr(agents, lambda a: a.mu1), _arr(agents, lambda a: a.mu2)
    if weights is None:
        phn = 1.0 - phi / n
        w = np.full(n, 1.0 / n)
    else:
        phn = np.ones(n)
        w = np.asarray(weights, dtype=float)
    psi = phn * xi ** 2 + sig ** 2
    beta = b - r
    s = lambda v: math.fsum(w * v)
    return LimitScalars(psi=psi, Psi=s(phi * sig ** 2 / psi), Phi=s(mu2 * sig * beta / (2 * g * psi)),
                        Phi0=s(sig * b / (g * psi)), Upsilon=s(mu1 * sig * x * beta / (2 * g * psi)))


def _lambda_inf(agents, r, x, weights, tol):
    sc = limit_scalars(agents, r, x, weights)
    n = len(agents)
    sig, phi = _arr(agents, lambda a: a.sigma), _arr(agents, lambda a: a.phi)
    g, mu1, mu2 = _arr(agents, lambda a: a.gamma), _arr(agents, lambda a: a.mu1), _arr(agents, lambda a: a.mu2)
    beta = _arr(agents, lambda a: a.b) - r
    x = _arr(agents, lambda a: a.x0) if x is None else np.asarray(x, dtype=float)
    phn = np.ones(n) if weights is not None else 1.0 - phi / n
    slope = mu1 * beta / (2 * g * sc.psi)
    base = mu2 * beta / (2 * g * sc.psi)
    loading = phi * sig / sc.psi
    value = {"A": mu1 * phn, "C": np.zeros(n), "D": -mu1 * phi, "E": mu2 * phn, "F": -mu2 * phi, "I": np.zeros(n)}
    regime = "lambda_inf"
    if abs(1.0 - sc.Psi) > tol:
        sbar = (sc.Upsilon + sc.Phi) / (1.0 - sc.Psi)
        intercept = loading * sbar + base
        return LimitResult(regime, UNIQUE, sc, slope * x + intercept, slope, intercept, None, value)
    if abs(sc.Upsilon + sc.Phi) <= tol * max(1.0, abs(sc.Upsilon), abs(sc.Phi)):
        return LimitResult(regime, INFINITE, sc, None, slope, base, loading, value)
    return LimitResult(regime, NONEXISTENT, sc)


def lambda_inf_n(agents, r, wealth=None, tol=1e-10) -> LimitResult:
    return _lambda_inf(list(agents), r, wealth, None, tol)


def lambda_inf_mf(measure, r, wealth=None, tol=1e-10) -> LimitResult:
    return _lambda_inf(list(measure.atoms), r, wealth, measure.weights, tol)


def _check_zero_rate(agents, r=0.0):
    bad = [i for i, a in enumerate(agents) if not (a.mu1 == 0.0 and a.mu2 == 2.0)]
    if bad or r != 0.0:
        raise PreconditionError(f"regime needs mu1=0, mu2=2 for all agents and r=0 (offending agents {bad}, r={r})")


def state_indep_zero_rate_n(agents, lam, wealth=None, tol=1e-10, r=0.0) -> LimitResult:
    agents = list(agents)
    _check_zero_rate(agents, r)
    n = len(agents)
    sc = limit_scalars(agents, 0.0, wealth)
    xi, sig, phi = _arr(agents, lambda a: a.xi), _arr(agents, lambda a: a.sigma), _arr(agents, lambda a: a.phi)
    b, g = _arr(agents, lambda a: a.b), _arr(agents, lambda a: a.gamma)
    if abs(1.0 - sc.Psi) <= tol:
        return LimitResult("state_indep_r0", NONEXISTENT, sc)
    pi = phi * sig / sc.psi * sc.Phi0 / (1.0 - sc.Psi) + b / (g * sc.psi)
    phn = 1.0 - phi / n
    rho = 1.0 / (2 * (xi ** 2 + sig ** 2))
    # peer averages exclude the agent itself; divisor n
    sig_hat = (math.fsum(sig * pi) - sig * pi) / n
    b_hat = (math.fsum(b * pi) - b * pi) / n
    xi2_hat = (math.fsum((xi * pi) ** 2) - (xi * pi) ** 2) / n ** 2
    varrho = pi / rho
    alpha = (-phi * b_hat + phn * b * pi) / lam
    I = (-g * phi ** 2 * (xi2_hat + sig_hat ** 2) + 0.5 * rho * g * phn ** 2 * varrho ** 2
         - 2 * phi * b_hat - lam * g * alpha ** 2) / lam
    value = {"A": np.zeros(n), "C": np.zeros(n), "D": np.zeros(n), "E": 2 * phn, "F": -2 * phi, "I": I,
             "alpha": alpha, "varrho": varrho}
    return LimitResult("state_indep_r0", UNIQUE, sc, pi.copy(), np.zeros(n), pi, None, value)


def state_indep_zero_rate_mf(measure, lam, tol=1e-10, r=0.0) -> LimitResult:
    agents = list(measure.atoms)
    _check_zero_rate(agents, r)
    w = np.asarray(measure.weights)
    sc = limit_scalars(agents, 0.0, None, w)
    sig, phi = _arr(agents, lambda a: a.sigma), _arr(agents, lambda a: a.phi)
    b, g = _arr(agents, lambda a: a.b), _arr(agents, lambda a: a.gamma)
    if abs(1.0 - sc.Psi) <= tol:
        return LimitResult("state_indep_r0", NONEXISTENT, sc)
    pi = phi * sig / sc.psi * sc.Phi0 / (1.0 - sc.Psi) + b / (g * sc.psi)
    rho = 1.0 / (2 * sc.psi)
    sbar = math.fsum(w * sig * pi)
    bbar = math.fsum(w * b * pi)
    varrho = pi / rho
    alpha = (-phi * bbar + b * pi) / lam
    I = (-g * phi ** 2 * sbar ** 2 + 0.5 * rho * g * varrho ** 2 - 2 * phi * bbar - lam * g * alpha ** 2) / lam
    k = len(agents)
    value = {"A": np.zeros(k), "C": np.zeros(k), "D": np.zeros(k), "E": np.full(k, 2.0), "F": -2 * phi, "I": I,
             "alpha": alpha, "varrho": varrho}
    return LimitResult("state_indep_r0", UNIQUE, sc, pi.copy(), np.zeros(k), pi, None, value)


def no_competition_cubic(agent: AgentType, market: MarketParams) -> tuple:
    lam, r, g, mu1 = market.lam, market.r, agent.gamma, agent.mu1
    iota = 0.5 * (agent.b - r) ** 2 / agent.psi2
    return (g - mu1 / 2,
            mu1 * (0.5 * (lam - r) - 2 * iota) + g * (2 * iota - lam + 2 * r),
            iota * (mu1 * (3 * lam - 4 * r) + 4 * r * g) + g * (lam - r) ** 2,
            iota * (2 * g * r * r - mu1 * (lam - r) * (lam - 2 * r)))


def wealth_only_cubic(agent: AgentType, market: MarketParams) -> tuple:
    """Cubic for the slope when mu1 = 2 and mu2 = 0, normalised by gamma."""
    lam, r, g = market.lam, market.r, agent.gamma
    iota = 0.5 * (agent.b - r) ** 2 / agent.psi2
    return (1 - 1 / g,
            2 * iota * (1 - 2 / g) + (lam - r) * (1 / g - 2) + lam,
            2 * iota / g * (3 * lam - 4 * r) + 4 * r * iota + (lam - r) ** 2,
            2 * iota * (r * r - (lam - r) * (lam - 2 * r) / g))


def _pick(coeffs, iota, market, z_inf, tol):
    roots = real_roots(coeffs, tol)
    lam, r = market.lam, market.r
    eps = 1e-9 * max(1.0, lam, r)
    adm = [z for z in roots if lam - (2 * r + 2 * z + z * z / (2 * iota)) > eps]
    if not adm:
        raise NoAdmissibleRoot(f"no admissible root among {roots}")
    return min(adm, key=lambda z: (abs(z - z_inf), z))


def no_competition(agent: AgentType, market: MarketParams, tol=1e-9) -> NoCompetitionScalars:
    if agent.phi != 0.0:
        raise PreconditionError("no-competition closed form needs phi = 0")
    lam, r, g, mu1, mu2 = market.lam, market.r, agent.gamma, agent.mu1, agent.mu2
    beta = agent.b - r
    iota = 0.5 * beta ** 2 / agent.psi2
    z = _pick(no_competition_cubic(agent, market), iota, market, iota * mu1 / g, tol)
    a = lam / (lam - r - z)
    at = lam / (lam - (2 * r + 2 * z + z * z / (2 * iota)))
    varsigma = -(mu2 * lam * iota / beta) / (g * at * (r - lam + z) - a * iota * (2 * g * (a - 1) + mu1))
    o = nu = None
    if mu1 == 2.0 and mu2 == 0.0:
        o = _pick(wealth_only_cubic(agent, market), iota, market, 2 * iota / g, tol)
        nu = o / beta
    return NoCompetitionScalars(iota, z / beta, varsigma, nu, z, o)
