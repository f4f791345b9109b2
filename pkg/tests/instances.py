"""Seeded generators of random valid games shared by the property and acceptance tests."""
import numpy as np

from mvgames.model import AgentType, GameConfig, MarketParams

SIZES = (1, 2, 3, 5, 10)


def random_agent(g, r):
    return AgentType(
        x0=float(g.uniform(-1.0, 1.0)), b=float(r + g.uniform(0.02, 0.3)),
        xi=float(g.uniform(0.05, 0.5)), sigma=float(g.uniform(0.05, 0.5)), phi=float(g.uniform(0.0, 1.0)),
        gamma=float(g.uniform(0.5, 5.0)), mu1=float(g.uniform(0.0, 2.0)), mu2=float(g.uniform(0.0, 3.0)),
    )


def random_market(g):
    while True:
        r, lam = float(g.uniform(0.0, 0.1)), float(g.uniform(0.1, 5.0))
        if min(abs(lam - r), abs(lam - 2 * r)) > 1e-3:
            return MarketParams(r, lam)


def random_config(g, n):
    m = random_market(g)
    return GameConfig(tuple(random_agent(g, m.r) for _ in range(n)), m)


def config_suite(count=200, seed=20240611):
    """count configs cycling through SIZES."""
    g = np.random.default_rng(seed)
    return [random_config(g, SIZES[k % len(SIZES)]) for k in range(count)]
