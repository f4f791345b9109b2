"""Mean-field game over a discrete type measure."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .coefficients import build_agent_coefficients
from .equilibrium import (AggregateOutcome, AggregateTerms, UNIQUE, aggregate_terms, complete_coefficients,
                          g_poly, h_poly, residuals_for, solve_aggregates, value_poly, vgh_deviation)
from .errors import ConfigError, NotUnique
from .feedback import LinearFeedback, build_feedback
from .model import AgentType, MarketParams, NumericTolerances, Violation, agent_violations


@dataclass(frozen=True)
class TypeMeasure:
    atoms: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        bad = []
        if not self.atoms:
            bad.append(Violation("measure", "atoms", "need at least one atom"))
        if len(self.weights) != len(self.atoms):
            bad.append(Violation("measure", "weights", "one weight per atom required"))
        elif any(not w >= 0 for w in self.weights) or abs(math.fsum(self.weights) - 1.0) > 1e-12:
            bad.append(Violation("measure", "weights", "weights must be >= 0 and sum to 1"))
        if bad:
            raise ConfigError(bad)

    @classmethod
    def point_mass(cls, atom: AgentType):
        return cls((atom,), (1.0,))

    @classmethod
    def uniform(cls, atoms):
        atoms = tuple(atoms)
        return cls(atoms, (1.0 / len(atoms),) * len(atoms))

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights)

    def expect(self, values) -> float:
        return math.fsum(self.w * np.asarray(values, dtype=float))

    def mean_wealth(self) -> float:
        return self.expect([a.x0 for a in self.atoms])

    def validate_against(self, market: MarketParams):
        bad = []
        for i, a in enumerate(self.atoms):
            bad += agent_violations(asdict(a), i, market.r)
        if bad:
            raise ConfigError(bad)


@dataclass(frozen=True)
class MfCoefficients:
    measure: TypeMeasure
    market: MarketParams
    atoms: tuple  # AgentCoefficients with n=None


@dataclass(frozen=True)
class MfEquilibrium:
    outcome: AggregateOutcome
    coeffs: MfCoefficients
    terms: AggregateTerms
    slope_x: np.ndarray
    slope_xbar: np.ndarray
    intercept: np.ndarray
    x_bar: float
    completed: tuple

    @property
    def unique(self):
        return self.outcome.kind == UNIQUE


def build_mf_coefficients(measure: TypeMeasure, market: MarketParams, tol=None, root_index=None) -> MfCoefficients:
    measure.validate_against(market)
    return MfCoefficients(measure, market, tuple(
        build_agent_coefficients(a, market, None, tol, root_index, index=i) for i, a in enumerate(measure.atoms)))


def _atom_vectors(coeffs: MfCoefficients):
    cs = coeffs.atoms
    arr = lambda f: np.array([f(c) for c in cs])
    return (arr(lambda c: c.agent.sigma), arr(lambda c: c.beta), arr(lambda c: c.rho * c.p),
            arr(lambda c: c.rho * c.q), arr(lambda c: c.k1), arr(lambda c: c.k2), arr(lambda c: c.k3))


def mf_terms(measure: TypeMeasure, coeffs: MfCoefficients, x=None, x_bar=None) -> AggregateTerms:
    """Expectation versions of the aggregate sums, with atom wealths x and population mean x_bar."""
    x = np.array([a.x0 for a in measure.atoms]) if x is None else np.asarray(x, dtype=float)
    x_bar = measure.expect(x) if x_bar is None else float(x_bar)
    sigma, beta, e, f, k1, k2, k3 = _atom_vectors(coeffs)
    return aggregate_terms(measure.w, sigma, beta, e, f, np.full(x.size, x_bar), x, k1, k2, k3)


def solve_mf_aggregates(measure: TypeMeasure, coeffs: MfCoefficients, x=None, tol=None, x_bar=None) -> AggregateOutcome:
    return solve_aggregates(mf_terms(measure, coeffs, x, x_bar), tol)


def solve_mfg(measure: TypeMeasure, market: MarketParams, tol=None, root_index=None, x=None) -> MfEquilibrium:
    tol = tol or NumericTolerances()
    coeffs = build_mf_coefficients(measure, market, tol, root_index)
    x = np.array([a.x0 for a in measure.atoms]) if x is None else np.asarray(x, dtype=float)
    x_bar = measure.expect(x)
    terms = mf_terms(measure, coeffs, x, x_bar)
    outcome = solve_aggregates(terms, tol)
    sigma, beta, e, f, k1, k2, k3 = _atom_vectors(coeffs)
    if outcome.kind != UNIQUE:
        nan = np.full(len(coeffs.atoms), np.nan)
        return MfEquilibrium(outcome, coeffs, terms, e, f, nan, x_bar, ())
    S, B = outcome.sigma_pi_bar, outcome.br_pi_bar
    intercept = k1 * S + k2 * B + k3
    done = tuple(complete_coefficients(c, c.k1 * S + c.k2 * B + c.k3, S, B, S * S, tol) for c in coeffs.atoms)
    return MfEquilibrium(outcome, coeffs, terms, e, f, intercept, x_bar, done)


def mfe_strategy(eq: MfEquilibrium, atom: int, x, x_bar):
    if not eq.unique:
        raise NotUnique(f"MF aggregate system is {eq.outcome.kind}")
    return eq.slope_x[atom] * x + eq.slope_xbar[atom] * x_bar + eq.intercept[atom]


def mf_value(eq: MfEquilibrium, atom: int, x, x_bar):
    if not eq.unique:
        raise NotUnique(f"MF aggregate system is {eq.outcome.kind}")
    return value_poly(eq.completed[atom])(x, x_bar)


def mf_G(eq: MfEquilibrium, atom, x, x_bar):
    return g_poly(eq.completed[atom])(x, x_bar)


def mf_H(eq: MfEquilibrium, atom, x, x_bar):
    return h_poly(eq.completed[atom])(x, x_bar)


def mf_vgh_check(eq: MfEquilibrium, atom, grid=None) -> float:
    return vgh_deviation(eq.completed[atom], grid)


def mf_hjb_residuals(eq: MfEquilibrium, atom, grid=None):
    """Residuals with x-bar in place of the peer average; its dynamics carry only common noise."""
    return residuals_for(eq.completed[atom], grid)


def particle_feedback(eq: MfEquilibrium, atom_index) -> LinearFeedback:
    """Strategy map for K particles of the given atoms; x-bar and the aggregates are particle averages."""
    idx = np.asarray(atom_index, dtype=int)
    cs = [eq.coeffs.atoms[k] for k in idx]
    sigma = np.array([c.agent.sigma for c in cs])
    beta = np.array([c.beta for c in cs])
    e = np.array([c.rho * c.p for c in cs])
    f = np.array([c.rho * c.q for c in cs])
    k1, k2, k3 = (np.array([getattr(c, k) for c in cs]) for k in ("k1", "k2", "k3"))
    return build_feedback(e, f, k1, k2, k3, np.ones(idx.size), sigma, beta, leave_one_out=False)
