"""Time-consistent equilibria for mean-variance investors with relative-performance
concerns over an exponential random horizon: n-agent and mean-field solvers,
closed-form regimes and a Monte Carlo check harness."""

__version__ = "0.1.0"

from .errors import ConfigError, PreconditionError, SolverError
from .model import AgentType, GameConfig, MarketParams, NumericTolerances, load_config, validate_config
from .coefficients import build_agent_coefficients
from .equilibrium import INFINITE, NONEXISTENT, UNIQUE, solve_n_agent
from .mean_field import TypeMeasure, solve_mfg

__all__ = [
    "AgentType", "ConfigError", "GameConfig", "INFINITE", "MarketParams", "NONEXISTENT", "NumericTolerances",
    "PreconditionError", "SolverError", "TypeMeasure", "UNIQUE", "build_agent_coefficients", "load_config",
    "solve_mfg", "solve_n_agent", "validate_config", "__version__",
]
