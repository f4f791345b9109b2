"""Domain types, configuration parsing and parameter validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError

AGENT_FIELDS = ("x0", "b", "xi", "sigma", "phi", "gamma", "mu1", "mu2")
TOLERANCE_FIELDS = ("root_tol", "det_tol", "kappa_tol", "excl_tol")
DEFAULT_MARKET = {"r": 0.05, "lambda": 0.04}


@dataclass(frozen=True)
class Violation:
    where: str
    field: str
    message: str

    def __str__(self):
        return f"{self.where}.{self.field}: {self.message}"


def _finite(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def tolerance_violations(values: Mapping[str, Any]) -> list[Violation]:
    out = []
    for name in TOLERANCE_FIELDS:
        v = values.get(name)
        if not _finite(v) or v <= 0:
            out.append(Violation("tolerances", name, f"must be a finite positive number, got {v!r}"))
    return out


def market_violations(r, lam, excl_tol=1e-9) -> list[Violation]:
    out = []
    if not _finite(r) or r < 0:
        out.append(Violation("market", "r", f"must be finite and >= 0, got {r!r}"))
    if not _finite(lam) or lam <= 0:
        out.append(Violation("market", "lambda", f"must be finite and > 0, got {lam!r}"))
    if out:
        return out
    eps = excl_tol * max(1.0, lam, r)
    if abs(lam - r) <= eps:
        out.append(Violation("market", "lambda", "lambda equals r"))
    if abs(lam - 2 * r) <= eps:
        out.append(Violation("market", "lambda", "lambda equals 2r"))
    return out


def agent_violations(values: Mapping[str, Any], index=None, r=None) -> list[Violation]:
    where = "agent" if index is None else f"agent[{index}]"
    out = []
    for name in AGENT_FIELDS:
        if not _finite(values.get(name)):
            out.append(Violation(where, name, f"must be a finite number, got {values.get(name)!r}"))
    if out:
        return out
    v = values
    if v["xi"] < 0:
        out.append(Violation(where, "xi", "must be >= 0"))
    if v["sigma"] < 0:
        out.append(Violation(where, "sigma", "must be >= 0"))
    if v["xi"] == 0 and v["sigma"] == 0:
        out.append(Violation(where, "sigma", "xi and sigma cannot both be zero"))
    if not 0.0 <= v["phi"] <= 1.0:
        out.append(Violation(where, "phi", "must lie in [0, 1]"))
    if v["gamma"] <= 0:
        out.append(Violation(where, "gamma", "must be > 0"))
    if v["mu1"] < 0:
        out.append(Violation(where, "mu1", "must be >= 0"))
    if v["mu2"] < 0:
        out.append(Violation(where, "mu2", "must be >= 0"))
    if r is not None and _finite(r) and not v["b"] > r:
        out.append(Violation(where, "b", f"must exceed r={r}"))
    return out


@dataclass(frozen=True)
class NumericTolerances:
    root_tol: float = 1e-9
    det_tol: float = 1e-10
    kappa_tol: float = 1e-10
    excl_tol: float = 1e-9

    def __post_init__(self):
        bad = tolerance_violations(asdict(self))
        if bad:
            raise ConfigError(bad)


@dataclass(frozen=True)
class MarketParams:
    r: float
    lam: float

    def __post_init__(self):
        bad = market_violations(self.r, self.lam)
        if bad:
            raise ConfigError(bad)

    def eps_excl(self, tol: NumericTolerances | None = None) -> float:
        excl = (tol or NumericTolerances()).excl_tol
        return excl * max(1.0, self.lam, self.r)


@dataclass(frozen=True)
class AgentType:
    x0: float
    b: float
    xi: float
    sigma: float
    phi: float
    gamma: float
    mu1: float
    mu2: float

    def __post_init__(self):
        bad = agent_violations(asdict(self))
        if bad:
            raise ConfigError(bad)

    @property
    def psi2(self) -> float:
        """Total variance per unit of position, xi^2 + sigma^2."""
        return self.xi ** 2 + self.sigma ** 2


@dataclass(frozen=True)
class WealthProfile:
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))

    def __len__(self):
        return len(self.x)

    def array(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float)


@dataclass(frozen=True)
class GameConfig:
    agents: tuple
    market: MarketParams
    tolerances: NumericTolerances = field(default_factory=NumericTolerances)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        bad = _config_violations(self)
        if bad:
            raise ConfigError(bad)

    @property
    def n(self) -> int:
        return len(self.agents)

    def initial_profile(self) -> WealthProfile:
        return WealthProfile([a.x0 for a in self.agents])

    def with_agents(self, agents) -> "GameConfig":
        return GameConfig(tuple(agents), self.market, self.tolerances)

    def with_market(self, **changes) -> "GameConfig":
        kw = {"r": self.market.r, "lam": self.market.lam}
        kw.update(changes)
        return GameConfig(self.agents, MarketParams(**kw), self.tolerances)


def _config_violations(cfg: GameConfig) -> list[Violation]:
    out = []
    if len(cfg.agents) < 1:
        out.append(Violation("config", "agents", "need at least one agent"))
    out += market_violations(cfg.market.r, cfg.market.lam, cfg.tolerances.excl_tol)
    for i, a in enumerate(cfg.agents):
        if not isinstance(a, AgentType):
            out.append(Violation(f"agent[{i}]", "type", "not an AgentType"))
            continue
        out += agent_violations(asdict(a), i, cfg.market.r)
    return out


def leave_one_out_mean(x: Sequence[float], i: int) -> float:
    """(1/n) * sum of x_j over j != i. The divisor is n, not n - 1."""
    n = len(x)
    if not 0 <= i < n:
        raise IndexError(f"agent index {i} out of range for n={n}")
    return (math.fsum(x) - x[i]) / n


def leave_one_out_means(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (math.fsum(x) - x) / x.size


def _num(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return float(v)
    return v


def validate_config(cfg) -> GameConfig:
    """Return a GameConfig if every invariant holds, else raise ConfigError listing all violations.

    Accepts either a constructed GameConfig or a raw mapping with the JSON layout.
    """
    if isinstance(cfg, GameConfig):
        bad = _config_violations(cfg)
        if bad:
            raise ConfigError(bad)
        return cfg
    if not isinstance(cfg, Mapping):
        raise ConfigError([Violation("config", "type", f"expected mapping, got {type(cfg).__name__}")])

    violations = []
    tol_raw = {**asdict(NumericTolerances()), **{k: _num(v) for k, v in (cfg.get("tolerances") or {}).items()}}
    unknown = set(tol_raw) - set(TOLERANCE_FIELDS)
    violations += [Violation("tolerances", k, "unknown key") for k in sorted(unknown)]
    violations += tolerance_violations(tol_raw)
    excl = tol_raw["excl_tol"] if _finite(tol_raw.get("excl_tol")) and tol_raw["excl_tol"] > 0 else 1e-9

    m_raw = {**DEFAULT_MARKET, **(cfg.get("market") or {})}
    r, lam = _num(m_raw.get("r")), _num(m_raw.get("lambda"))
    violations += market_violations(r, lam, excl)

    agents_raw = cfg.get("agents")
    if not isinstance(agents_raw, list) or not agents_raw:
        violations.append(Violation("config", "agents", "need a non-empty list of agents"))
        agents_raw = []
    for i, a in enumerate(agents_raw):
        vals = {"x0": 0.0, **{k: _num(v) for k, v in a.items()}}
        for k in sorted(set(vals) - set(AGENT_FIELDS)):
            violations.append(Violation(f"agent[{i}]", k, "unknown key"))
        violations += agent_violations(vals, i, r)
    if violations:
        raise ConfigError(violations)

    agents = [AgentType(**{k: float(_num(a.get(k, 0.0))) for k in AGENT_FIELDS}) for a in agents_raw]
    tol = NumericTolerances(**{k: float(tol_raw[k]) for k in TOLERANCE_FIELDS})
    return GameConfig(tuple(agents), MarketParams(float(r), float(lam)), tol)


def config_to_dict(cfg: GameConfig) -> dict:
    return {
        "market": {"r": cfg.market.r, "lambda": cfg.market.lam},
        "agents": [asdict(a) for a in cfg.agents],
        "tolerances": asdict(cfg.tolerances),
    }


def load_config(path) -> GameConfig:
    with open(path) as fh:
        return validate_config(json.load(fh))


def dump_config(cfg: GameConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def replace_agent(agent: AgentType, **changes) -> AgentType:
    kw = {f.name: getattr(agent, f.name) for f in fields(agent)}
    kw.update(changes)
    return AgentType(**kw)
