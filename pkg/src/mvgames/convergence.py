"""Convergence of sampled n-agent equilibria to the mean-field equilibrium."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import solve_n_agent
from .errors import SolverError
from .mean_field import TypeMeasure, mfe_strategy, solve_mfg
from .model import GameConfig, MarketParams, NumericTolerances


def sample_type_indices(measure: TypeMeasure, n: int, seed) -> np.ndarray:
    """n i.i.d. atom indices by inverse CDF over the cumulative weights."""
    u = np.random.default_rng(seed).random(n)
    cdf = np.cumsum(measure.w)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, u, side="right").clip(max=len(measure.atoms) - 1)


def sample_types(measure: TypeMeasure, n: int, seed) -> list:
    return [measure.atoms[k] for k in sample_type_indices(measure, n, seed)]


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    tracked_error: float
    max_error: float
    degeneracy_flags: tuple


@dataclass(frozen=True)
class ConvergenceCurve:
    n_values: tuple
    errors: tuple  # tracked errors
    max_errors: tuple
    flags: tuple
    seed: int

    @property
    def monotone(self):
        e = [v for v in self.errors if np.isfinite(v)]
        return all(b < a for a, b in zip(e, e[1:]))

    @property
    def decreasing_trend(self):
        e = self.errors
        return bool(np.isfinite(e[0]) and np.isfinite(e[-1]) and e[-1] < e[0])

    def points(self):
        return [ConvergencePoint(*row) for row in zip(self.n_values, self.errors, self.max_errors, self.flags)]


def convergence_curve(measure: TypeMeasure, n_values, tracked_atom: int, seed: int, market: MarketParams,
                      tol: NumericTolerances | None = None, root_index=None) -> ConvergenceCurve:
    tol = tol or NumericTolerances()
    n_values = tuple(int(v) for v in n_values)
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    mf_flags = []
    try:
        mf = solve_mfg(measure, market, tol, root_index)
        if not mf.unique:
            mf_flags.append(f"mf:{mf.outcome.kind}")
    except SolverError as exc:
        mf, mf_flags = None, [f"mf:{type(exc).__name__}"]
    x_bar = measure.mean_wealth()
    errs, maxes, flags = [], [], []
    for n in n_values:
        idx = sample_type_indices(measure, n, [seed, n])
        idx[0] = tracked_atom
        agents = [measure.atoms[k] for k in idx]
        f = list(mf_flags)
        tracked = worst = float("nan")
        try:
            res = solve_n_agent(GameConfig(agents, market, tol), root_index=root_index)
            if res.solution is None:
                f.append(f"n:{res.outcome.kind}")
            elif mf is not None and mf.unique:
                pi = res.solution.pi_at_frozen()
                x = res.solution.frozen_profile
                ref = np.array([mfe_strategy(mf, k, xj, x_bar) for k, xj in zip(idx, x)])
                tracked = float(abs(pi[0] - ref[0]))
                worst = float(np.max(np.abs(pi - ref)))
        except SolverError as exc:
            f.append(f"n:{type(exc).__name__}")
        errs.append(tracked)
        maxes.append(worst)
        flags.append(tuple(f))
    return ConvergenceCurve(n_values, tuple(errs), tuple(maxes), tuple(flags), seed)
