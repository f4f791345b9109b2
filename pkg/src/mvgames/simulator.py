"""Monte Carlo simulation of the coupled wealth equations with a random horizon.

The kernel is compiled from ``_kernel.pyx`` when available; otherwise (or when the
environment variable MVGAMES_BACKEND=python is set) the numpy fallback is used.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _fallback, rng
from .equilibrium import EquilibriumSolution, UNIQUE
from .errors import NotUnique
from .feedback import LinearFeedback
from .model import GameConfig

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled
DEFAULT_BACKEND = os.environ.get("MVGAMES_BACKEND") or ("cython" if _compiled is not None else "python")
if DEFAULT_BACKEND not in BACKENDS:
    DEFAULT_BACKEND = "python"


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    n_paths: int = 10_000
    seed: int = 0
    horizon_cap_prob: float = 1e-6
    antithetic: bool = False
    workers: int = 1
    chunk_size: int = 8192
    substeps: int = 1  # each step of length dt consumes this many finer noise draws

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 2:
            raise ValueError("need at least two paths")
        if not 0 < self.horizon_cap_prob < 1:
            raise ValueError("horizon_cap_prob must lie in (0, 1)")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even number of paths")
        if self.workers < 1 or self.chunk_size < 1 or self.substeps < 1:
            raise ValueError("workers, chunk_size and substeps must be positive")

    def t_max(self, lam):
        return -math.log(self.horizon_cap_prob) / lam


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_effective: int

    def within(self, target, k=3.0):
        return abs(self.mean - target) <= k * self.std_error


@dataclass(frozen=True)
class PathEnsemble:
    X: np.ndarray  # wealth at tau, one row per path
    tau: np.ndarray
    x0: np.ndarray
    truncated: int
    nonfinite: int
    antithetic: bool
    backend: str
    valid: np.ndarray = field(repr=False, default=None)

    @property
    def n_paths(self):
        return self.X.shape[0]


def sample_horizon(lam, u):
    """tau for a uniform draw u via the inverse CDF of Exp(lam)."""
    return float(rng.horizon_from_uniform(u, lam))


def sample_horizons(lam, sim: SimConfig, backend=None):
    """Horizons for all paths, truncated at T_max. Returns (tau, number truncated)."""
    mod = BACKENDS[backend or DEFAULT_BACKEND]
    tau = np.asarray(mod.horizons(sim.seed & 0xFFFFFFFFFFFFFFFF, rng.DOMAIN_HORIZON, 0, sim.n_paths, lam, sim.antithetic))
    cap = sim.t_max(lam)
    trunc = int(np.count_nonzero(tau > cap))
    return np.minimum(tau, cap), trunc


def _market_arrays(cfg: GameConfig):
    a = cfg.agents
    return (np.array([x.b for x in a]) - cfg.market.r, np.array([x.xi for x in a]), np.array([x.sigma for x in a]))


def simulate_paths(cfg: GameConfig, strategy: LinearFeedback, sim: SimConfig, deviation=None, x0=None,
                   backend=None) -> PathEnsemble:
    """Euler-Maruyama paths up to each path's own horizon.

    ``deviation`` is (agent, value, epsilon): that agent holds the constant position ``value``
    during the first round(epsilon/dt) steps (at least one) and then follows ``strategy``.
    """
    name = backend or DEFAULT_BACKEND
    mod = BACKENDS[name]
    beta, xi, sigma = _market_arrays(cfg)
    x0 = np.array([a.x0 for a in cfg.agents], dtype=float) if x0 is None else np.asarray(x0, dtype=float)
    tau, trunc = sample_horizons(cfg.market.lam, sim, name)
    n, P = x0.size, sim.n_paths
    if strategy.n != n:
        raise ValueError("strategy dimension does not match the number of agents")
    if deviation is None:
        dev_agent, dev_value, dev_steps = -1, 0.0, 0
    else:
        dev_agent, dev_value, eps = deviation
        dev_steps = deviation_steps(eps, sim.dt)
    out = np.empty((P, n))
    status = np.zeros(P, dtype=np.int8)
    args = (x0, float(cfg.market.r), beta, xi, sigma, strategy.d, strategy.U, strategy.W, strategy.m0)

    def run(start):
        stop = min(P, start + sim.chunk_size)
        mod.simulate_block(*args, tau[start:stop], start, sim.seed & 0xFFFFFFFFFFFFFFFF, rng.DOMAIN_NOISE,
                           float(sim.dt), int(sim.substeps), int(dev_agent), float(dev_value), int(dev_steps),
                           bool(sim.antithetic), out[start:stop], status[start:stop])

    starts = range(0, P, sim.chunk_size)
    if sim.workers > 1:
        with ThreadPoolExecutor(sim.workers) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    valid = status == 0
    return PathEnsemble(out, tau, x0, trunc, int(np.count_nonzero(~valid)), sim.antithetic, name, valid)


def deviation_steps(epsilon, dt):
    return max(1, int(round(epsilon / dt)))


def relative_target(X, i, phi, n):
    """Z = (1 - phi/n) X_i - phi Y_{-i} per path."""
    return (1.0 - phi / n) * X[:, i] - phi * (X.sum(axis=1) - X[:, i]) / n


def _units(values, ens: PathEnsemble):
    """Average antithetic pairs so that the units of the SE are independent."""
    v = np.asarray(values, dtype=float)
    if ens.antithetic:
        return 0.5 * (v[0::2] + v[1::2])
    return v


def _keep(ens: PathEnsemble):
    if ens.nonfinite == 0:
        return slice(None)
    valid = ens.valid
    if ens.antithetic:
        pair_ok = valid[0::2] & valid[1::2]
        valid = np.repeat(pair_ok, 2)
    return valid


def _estimate(values, ens):
    u = _units(values, ens)
    return McEstimate(float(np.mean(values)), float(np.std(u, ddof=1) / math.sqrt(u.size)), int(u.size))


def j_statistics(i, ens: PathEnsemble, cfg: GameConfig):
    """Objective estimate and its influence values (delta method).

    J = w E[Z] - gamma Var[Z] with w = mu1 x_i(0) + mu2. The influence of one path is
    w Z - gamma (Z - mean)^2; its sample variance gives the SE of J including the
    fourth-moment contribution of the variance term.
    """
    a = cfg.agents[i]
    keep = _keep(ens)
    Z = relative_target(ens.X[keep], i, a.phi, cfg.n)
    w = a.mu1 * ens.x0[i] + a.mu2
    m = float(np.mean(Z))
    var = float(np.var(Z, ddof=1))
    J = w * m - a.gamma * var
    infl = w * Z - a.gamma * (Z - m) ** 2
    return J, infl


def estimate_J(i, ens: PathEnsemble, cfg: GameConfig) -> McEstimate:
    J, infl = j_statistics(i, ens, cfg)
    u = _units(infl, ens)
    return McEstimate(J, float(np.std(u, ddof=1) / math.sqrt(u.size)), int(u.size))


def estimate_G_H(i, ens: PathEnsemble, cfg: GameConfig):
    a = cfg.agents[i]
    keep = _keep(ens)
    Z = relative_target(ens.X[keep], i, a.phi, cfg.n)
    return _estimate(Z, ens), _estimate(Z * Z, ens)


@dataclass(frozen=True)
class DeviationReport:
    agent: int
    epsilon: float
    deviation_value: float
    J_hat_equilibrium: McEstimate
    J_hat_deviated: McEstimate
    normalized_gap: McEstimate

    @property
    def passes(self):
        return self.normalized_gap.mean >= -3.0 * self.normalized_gap.std_error


def default_deviations(pi0):
    return [pi0 * f for f in (0.5, 0.9, 1.1, 1.5)] + [pi0 + 1.0, pi0 - 1.0]


def deviation_test(i, cfg: GameConfig, sol: EquilibriumSolution, epsilon=0.01, deviations=None,
                   sim: SimConfig | None = None, baseline: LinearFeedback | None = None, backend=None):
    """Compare the baseline feedback with one-agent constant deviations on [0, epsilon).

    Both ensembles share horizons and Gaussian increments. The reported epsilon is the
    effective window, a whole number of steps.
    """
    if sol.outcome.kind != UNIQUE:
        raise NotUnique("deviation test needs a unique equilibrium")
    sim = sim or SimConfig(n_paths=200_000)
    base = baseline or sol.feedback
    x0 = np.asarray(sol.frozen_profile)
    pi0 = float(base(x0)[i])
    if deviations is None:
        deviations = default_deviations(pi0)
    deviations = list(deviations)
    if not deviations:
        return []
    eps_eff = deviation_steps(epsilon, sim.dt) * sim.dt
    ens0 = simulate_paths(cfg, base, sim, x0=x0, backend=backend)
    J0, infl0 = j_statistics(i, ens0, cfg)
    e0 = McEstimate(J0, float(np.std(_units(infl0, ens0), ddof=1) / math.sqrt(_units(infl0, ens0).size)),
                    _units(infl0, ens0).size)
    reports = []
    for v in deviations:
        ens1 = simulate_paths(cfg, base, sim, deviation=(i, float(v), epsilon), x0=x0, backend=backend)
        if ens1.nonfinite or ens0.nonfinite:
            keep = ens0.valid & ens1.valid
            ens0k = _restrict(ens0, keep)
            ens1 = _restrict(ens1, keep)
            J0k, infl0k = j_statistics(i, ens0k, cfg)
        else:
            ens0k, J0k, infl0k = ens0, J0, infl0
        J1, infl1 = j_statistics(i, ens1, cfg)
        diff = _units((infl0k - infl1) / eps_eff, ens1)
        gap = McEstimate((J0k - J1) / eps_eff, float(np.std(diff, ddof=1) / math.sqrt(diff.size)), diff.size)
        u1 = _units(infl1, ens1)
        e1 = McEstimate(J1, float(np.std(u1, ddof=1) / math.sqrt(u1.size)), u1.size)
        reports.append(DeviationReport(i, eps_eff, float(v), e0, e1, gap))
    return reports


def _restrict(ens: PathEnsemble, keep):
    if ens.antithetic:
        pair = keep[0::2] & keep[1::2]
        keep = np.repeat(pair, 2)
    return PathEnsemble(ens.X[keep], ens.tau[keep], ens.x0, ens.truncated, 0, ens.antithetic, ens.backend,
                        np.ones(int(np.count_nonzero(keep)), dtype=bool))


@dataclass(frozen=True)
class MfEnsemble:
    X: np.ndarray  # replications x particles
    tau: np.ndarray
    atom_index: np.ndarray
    x_bar: np.ndarray  # particle average at tau, per replication
    feedback: LinearFeedback


def mf_simulate(measure, mf_eq, K: int, sim: SimConfig, backend=None, atom_index=None) -> MfEnsemble:
    """K particles with types drawn from the measure, sharing the common noise of each replication.

    The particle average stands in for the conditional mean; aggregates are recomputed
    from the particles at every step.
    """
    from .convergence import sample_type_indices
    from .mean_field import particle_feedback
    from .model import MarketParams

    if not mf_eq.unique:
        raise NotUnique("MF simulation needs a unique MFE")
    idx = sample_type_indices(measure, K, sim.seed) if atom_index is None else np.asarray(atom_index)
    fb = particle_feedback(mf_eq, idx)
    agents = tuple(measure.atoms[k] for k in idx)
    market = mf_eq.coeffs.market
    cfg = GameConfig(agents, MarketParams(market.r, market.lam))
    ens = simulate_paths(cfg, fb, sim, backend=backend)
    return MfEnsemble(ens.X, ens.tau, idx, ens.X.mean(axis=1), fb)
