"""Compiled kernel vs numpy fallback on the same paths.

    python3 benchmarks/bench_simulator.py --paths 20000 --agents 3 10
"""
import argparse
import time

import numpy as np

from mvgames.equilibrium import solve_n_agent
from mvgames.model import AgentType, GameConfig, MarketParams
from mvgames.simulator import BACKENDS, SimConfig, simulate_paths


def population(n, seed=0):
    g = np.random.default_rng(seed)
    return [AgentType(x0=g.uniform(0.1, 1), b=g.uniform(0.08, 0.15), xi=g.uniform(0.1, 0.3),
                      sigma=g.uniform(0.1, 0.3), phi=g.uniform(0, 1), gamma=g.uniform(1, 4),
                      mu1=g.uniform(0, 1), mu2=g.uniform(0.5, 2)) for _ in range(n)]


def time_backend(cfg, fb, sim, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        ens = simulate_paths(cfg, fb, sim, backend=backend)
        best = min(best, time.perf_counter() - t)
    return best, ens


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--agents", type=int, nargs="+", default=[1, 3, 10])
    ap.add_argument("--lam", type=float, default=2.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    sim = SimConfig(dt=args.dt, n_paths=args.paths, seed=1)
    names = [b for b in ("cython", "python") if b in BACKENDS]
    print(f"paths={args.paths} dt={args.dt} lambda={args.lam} backends={names}")
    print(f"{'n':>4} " + " ".join(f"{b + ' [s]':>12}" for b in names) + f" {'speedup':>8} {'max |dX|':>10}")
    for n in args.agents:
        cfg = GameConfig(population(n), MarketParams(0.03, args.lam))
        fb = solve_n_agent(cfg).solution.feedback
        res = {b: time_backend(cfg, fb, sim, b, args.repeat) for b in names}
        times = [res[b][0] for b in names]
        speed = times[1] / times[0] if len(times) == 2 else float("nan")
        diff = np.max(np.abs(res[names[0]][1].X - res[names[-1]][1].X))
        print(f"{n:>4} " + " ".join(f"{t:>12.3f}" for t in times) + f" {speed:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
