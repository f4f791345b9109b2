"""Population recipes for the four comparative-statics experiments and the parameter sweep."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equilibrium import solve_n_agent
from .errors import ConfigError, SolverError
from .model import AGENT_FIELDS, AgentType, GameConfig, MarketParams, NumericTolerances, replace_agent

SWEEP_PARAMETERS = ("phi", "gamma", "mu1", "mu2", "lambda")

# ranges shared by every recipe
_BASE_RANGES = {"x0": (0.1, 1.0), "b": (0.1, 0.2), "xi": (0.01, 0.05), "sigma": (0.01, 0.05)}


@dataclass(frozen=True)
class FigureRecipe:
    figure: int
    parameter: str
    lam: float
    ranges: dict  # remaining type fields, each uniform on the given interval
    peer_range: tuple  # the swept field for everybody except the target
    target: dict  # fixed values of the target agent, swept field excluded
    r: float = 0.05

    def grid(self, points=20) -> np.ndarray:
        return np.linspace(*self.peer_range, points)


RECIPES = {
    1: FigureRecipe(1, "phi", 0.04, {"gamma": (1.0, 10.0), "mu1": (0.0, 1.0), "mu2": (0.0, 1.0)}, (0.0, 1.0),
                    dict(x0=0.35, b=0.16, xi=0.03, sigma=0.01, gamma=4.24, mu1=0.16, mu2=0.98)),
    2: FigureRecipe(2, "gamma", 0.04, {"phi": (0.0, 1.0), "mu1": (0.0, 1.0), "mu2": (0.0, 1.0)}, (1.0, 10.0),
                    dict(x0=0.39, b=0.14, xi=0.03, sigma=0.04, phi=0.25, mu1=0.28, mu2=0.52)),
    3: FigureRecipe(3, "mu1", 0.5, {"phi": (0.0, 1.0), "gamma": (1.0, 10.0), "mu2": (0.0, 1.0)}, (1.0, 10.0),
                    dict(x0=0.94, b=0.19, xi=0.03, sigma=0.05, phi=0.97, gamma=7.87, mu2=0.67)),
    4: FigureRecipe(4, "mu2", 1.0, {"phi": (0.0, 1.0), "gamma": (1.0, 10.0), "mu1": (0.0, 1.0)}, (1.0, 10.0),
                    dict(x0=0.29, b=0.14, xi=0.04, sigma=0.01, phi=0.74, gamma=9.53, mu1=0.73)),
}

DEFAULT_POPULATION = 1000
DEFAULT_TARGET = 499  # the 500th agent, zero-based


def figure_population(figure: int, seed: int = 0, size: int = DEFAULT_POPULATION, target_index: int = DEFAULT_TARGET,
                      target_value: float | None = None, tolerances: NumericTolerances | None = None) -> GameConfig:
    """Sample a population for one recipe.

    Every field is drawn independently and uniformly; the target agent is then overwritten
    with the recipe's fixed values. Its swept field defaults to the midpoint of the peer range.
    """
    rec = RECIPES[figure]
    if not 0 <= target_index < size:
        raise ValueError(f"target index {target_index} outside population of {size}")
    g = np.random.default_rng(seed)
    ranges = {**_BASE_RANGES, **rec.ranges, rec.parameter: rec.peer_range}
    cols = {f: g.uniform(*ranges[f], size) for f in AGENT_FIELDS}
    agents = [AgentType(**{f: float(cols[f][j]) for f in AGENT_FIELDS}) for j in range(size)]
    v = 0.5 * sum(rec.peer_range) if target_value is None else float(target_value)
    agents[target_index] = AgentType(**{**rec.target, rec.parameter: v})
    return GameConfig(agents, MarketParams(rec.r, rec.lam), tolerances or NumericTolerances())


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    grid: tuple
    target_agent: int

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        bad = []
        if self.parameter not in SWEEP_PARAMETERS:
            bad.append(f"unknown parameter {self.parameter!r}")
        if not self.grid:
            bad.append("empty grid")
        elif not all(np.isfinite(self.grid)):
            bad.append("grid values must be finite")
        elif self.parameter == "phi" and not all(0.0 <= v <= 1.0 for v in self.grid):
            bad.append("phi must lie in [0, 1]")
        elif self.parameter in ("gamma", "lambda") and not all(v > 0 for v in self.grid):
            bad.append(f"{self.parameter} must be positive")
        elif self.parameter in ("mu1", "mu2") and not all(v >= 0 for v in self.grid):
            bad.append(f"{self.parameter} must be nonnegative")
        if bad:
            raise ValueError("; ".join(bad))


@dataclass(frozen=True)
class SweepRow:
    index: int
    value: float
    pi_hat: float
    pi_tilde: float
    status: str


def _apply(cfg: GameConfig, spec: SweepSpec, value: float, no_competition: bool) -> GameConfig:
    i = spec.target_agent
    if spec.parameter == "lambda":
        cfg = cfg.with_market(lam=value)
    else:
        agents = list(cfg.agents)
        agents[i] = replace_agent(agents[i], **{spec.parameter: value})
        cfg = cfg.with_agents(agents)
    if no_competition:
        agents = list(cfg.agents)
        agents[i] = replace_agent(agents[i], phi=0.0)
        cfg = cfg.with_agents(agents)
    return cfg


def _target_pi(cfg: GameConfig, i: int, root_index):
    res = solve_n_agent(cfg, root_index=root_index)
    if res.solution is None:
        return float("nan"), res.outcome.kind
    return float(res.solution.pi_at_frozen()[i]), "Unique"


def sweep_point(cfg: GameConfig, spec: SweepSpec, k: int, root_index=None) -> SweepRow:
    v = spec.grid[k]
    out, status = [], []
    for bench in (False, True):
        try:
            pi, s = _target_pi(_apply(cfg, spec, v, bench), spec.target_agent, root_index)
        except (SolverError, ConfigError) as exc:
            pi, s = float("nan"), type(exc).__name__
        out.append(pi)
        status.append(s)
    st = status[0] if status[0] == status[1] else f"{status[0]}/{status[1]}"
    return SweepRow(k, v, out[0], out[1], st)


def run_sweep(cfg: GameConfig, spec: SweepSpec, root_index=None, workers: int = 1) -> list[SweepRow]:
    """Re-solve the whole population at every grid value, with and without the target's competition weight.

    Rows come back in grid order whatever the completion order.
    """
    if not 0 <= spec.target_agent < cfg.n:
        raise ValueError(f"target agent {spec.target_agent} outside population of {cfg.n}")
    ks = range(len(spec.grid))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda k: sweep_point(cfg, spec, k, root_index), ks))
    else:
        rows = [sweep_point(cfg, spec, k, root_index) for k in ks]
    return sorted(rows, key=lambda r: r.index)


def relative_change(values) -> float:
    """Largest excursion from the first value, relative to it."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v[0])) / abs(v[0]))
