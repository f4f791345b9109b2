"""Command-line front end.

    mvgames solve-n-agent --config game.json --out-dir out
    mvgames sweep --figure 1 --seed 0 --out-dir out

Exit status: 0 unique equilibrium, 2 infinite family, 3 no equilibrium, 1 any error.
Every command writes CSV with a header row and floats at 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .closed_forms import (lambda_inf_mf, lambda_inf_n, no_competition, state_indep_zero_rate_mf,
                           state_indep_zero_rate_n)
from .coefficients import compute_rho
from .convergence import convergence_curve
from .equilibrium import INFINITE, NONEXISTENT, UNIQUE, evaluate_G, evaluate_H, evaluate_value, solve_n_agent
from .errors import ConfigError, PreconditionError, SolverError
from .figures import RECIPES, SweepSpec, figure_population, run_sweep
from .mean_field import TypeMeasure, mfe_strategy, solve_mfg
from .model import GameConfig, NumericTolerances, dump_config, leave_one_out_means, load_config
from .simulator import BACKENDS, DEFAULT_BACKEND, SimConfig, deviation_test, estimate_G_H, estimate_J, simulate_paths

EXIT = {UNIQUE: 0, INFINITE: 2, NONEXISTENT: 3}

SOLUTION_COLUMNS = ["agent_id", "rho", "z", "p", "q", "a", "a_tilde", "c", "D", "A", "C", "E", "F", "I",
                    "k1", "k2", "k3", "N", "pi_hat_at_x0"]
MF_COLUMNS = ["atom_id", "weight"] + SOLUTION_COLUMNS[1:]
LIMIT_COLUMNS = SOLUTION_COLUMNS + ["regime", "kind"]


def fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (tuple, list)):
        return ";".join(str(x) for x in v)
    return v


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _out(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _tolerances(args, base: NumericTolerances) -> NumericTolerances:
    over = {k: getattr(args, k) for k in ("root_tol", "det_tol", "kappa_tol", "excl_tol")
            if getattr(args, k, None) is not None}
    return replace(base, **over) if over else base


def _config(args) -> GameConfig:
    if not args.config:
        raise ConfigError(["--config is required for this command"])
    cfg = load_config(args.config)
    tol = _tolerances(args, cfg.tolerances)
    return cfg if tol == cfg.tolerances else GameConfig(cfg.agents, cfg.market, tol)


def _measure(args, cfg: GameConfig) -> TypeMeasure:
    if args.weights:
        w = [float(v) for v in args.weights.split(",")]
        if len(w) != cfg.n:
            raise ConfigError([f"{len(w)} weights for {cfg.n} atoms"])
    else:
        w = [1.0 / cfg.n] * cfg.n
    return TypeMeasure(cfg.agents, w)


def _coef_row(c, pi):
    return [c.rho, c.z, c.p, c.q, c.a, c.a_tilde, c.c, c.D, c.A, c.C, c.E, c.F, c.I,
            c.k1, c.k2, c.k3, c.N, pi]


def _report(text):
    print(text)


# --- commands ----------------------------------------------------------------------------

def cmd_solve_n_agent(args) -> int:
    cfg = _config(args)
    res = solve_n_agent(cfg, root_index=args.root_index)
    _report(f"n={cfg.n} outcome: {res.outcome.describe()}")
    if res.solution is None:
        return EXIT[res.outcome.kind]
    sol = res.solution
    pi = sol.pi_at_frozen()
    write_csv(_out(args, "solution.csv"), SOLUTION_COLUMNS,
              [[i] + _coef_row(c, pi[i]) for i, c in enumerate(sol.per_agent)])
    write_csv(_out(args, "feedback.csv"), ["agent_id", "m0"] + [f"M_{j}" for j in range(cfg.n)],
              [[i, sol.m0[i]] + list(sol.M[i]) for i in range(cfg.n)])
    _report(f"wrote {_out(args, 'solution.csv')} and {_out(args, 'feedback.csv')}")
    return 0


def cmd_solve_mfg(args) -> int:
    cfg = _config(args)
    m = _measure(args, cfg)
    eq = solve_mfg(m, cfg.market, cfg.tolerances, args.root_index)
    _report(f"atoms={len(m.atoms)} outcome: {eq.outcome.describe()}")
    if not eq.unique:
        return EXIT[eq.outcome.kind]
    xb = m.mean_wealth()
    rows = [[k, m.weights[k]] + _coef_row(c, mfe_strategy(eq, k, a.x0, xb))
            for k, (c, a) in enumerate(zip(eq.completed, m.atoms))]
    write_csv(_out(args, "mfg_solution.csv"), MF_COLUMNS, rows)
    _report(f"wrote {_out(args, 'mfg_solution.csv')}")
    return 0


def _limit_rows(res, agents, tag):
    nan = float("nan")
    rows = []
    for i, a in enumerate(agents):
        v = {k: (arr[i] if arr is not None else nan) for k, arr in res.value.items()}
        pi = res.pi[i] if res.pi is not None else nan
        rows.append([i, compute_rho(a.xi, a.sigma), nan, nan, nan, nan, nan, nan, v.get("D", nan), v.get("A", nan),
                     v.get("C", nan), v.get("E", nan), v.get("F", nan), v.get("I", nan),
                     nan, nan, nan, nan, pi, tag, res.kind])
    return rows


def cmd_limits(args) -> int:
    cfg = _config(args)
    regimes = ["lambda_inf", "state_indep_r0", "no_competition"] if args.regime == "all" else [args.regime]
    agents, mk = list(cfg.agents), cfg.market
    x = np.array([a.x0 for a in agents])
    m = _measure(args, cfg) if args.mf else None
    rows, worst = [], 0
    for reg in regimes:
        try:
            if reg == "lambda_inf":
                res = lambda_inf_mf(m, mk.r, x) if m else lambda_inf_n(agents, mk.r, x, cfg.tolerances.det_tol)
            elif reg == "state_indep_r0":
                res = (state_indep_zero_rate_mf(m, mk.lam, cfg.tolerances.det_tol, mk.r) if m
                       else state_indep_zero_rate_n(agents, mk.lam, x, cfg.tolerances.det_tol, mk.r))
            else:
                for i, a in enumerate(agents):
                    s = no_competition(a, mk, cfg.tolerances.root_tol)
                    nan = float("nan")
                    rows.append([i, compute_rho(a.xi, a.sigma), s.frak_z] + [nan] * 15
                                + [s.zeta * a.x0 + s.varsigma, reg, UNIQUE])
                continue
        except PreconditionError as exc:
            print(f"{reg}: skipped ({exc})", file=sys.stderr)
            continue
        _report(f"{reg}: {res.kind}")
        rows += _limit_rows(res, agents, reg)
        worst = max(worst, EXIT[res.kind])
    write_csv(_out(args, "limits.csv"), LIMIT_COLUMNS, rows)
    _report(f"wrote {_out(args, 'limits.csv')}")
    return worst


def _parse_grid(args, default=None):
    if args.grid:
        return [float(v) for v in args.grid.split(",")]
    if args.grid_range:
        lo, hi, k = args.grid_range
        return list(np.linspace(float(lo), float(hi), int(k)))
    if default is not None:
        return list(default)
    raise ConfigError(["sweep needs --grid, --grid-range or --figure"])


def cmd_sweep(args) -> int:
    if args.figure:
        rec = RECIPES[args.figure]
        cfg = figure_population(args.figure, args.seed, args.population, args.target_agent,
                                tolerances=_tolerances(args, NumericTolerances()))
        param = args.parameter or rec.parameter
        grid = _parse_grid(args, rec.grid(args.points))
    else:
        cfg = _config(args)
        if not args.parameter:
            raise ConfigError(["--parameter is required without --figure"])
        param, grid = args.parameter, _parse_grid(args)
    spec = SweepSpec(param, grid, args.target_agent)
    rows = run_sweep(cfg, spec, args.root_index, args.workers)
    write_csv(_out(args, "sweep.csv"), ["grid_index", "parameter", "value", "pi_hat", "pi_tilde", "status"],
              [[r.index, param, r.value, r.pi_hat, r.pi_tilde, r.status] for r in rows])
    _report(f"{len(rows)} grid points, {sum(r.status == UNIQUE for r in rows)} solved; wrote {_out(args, 'sweep.csv')}")
    return 0


def _sim_config(args) -> SimConfig:
    return SimConfig(dt=args.dt, n_paths=args.paths, seed=args.seed, antithetic=args.antithetic,
                     workers=args.workers)


def _unique_solution(cfg, args):
    res = solve_n_agent(cfg, root_index=args.root_index)
    if res.solution is None:
        _report(f"outcome: {res.outcome.describe()}")
    return res


def cmd_simulate(args) -> int:
    cfg = _config(args)
    res = _unique_solution(cfg, args)
    if res.solution is None:
        return EXIT[res.outcome.kind]
    sol = res.solution
    ens = simulate_paths(cfg, sol.feedback, _sim_config(args), backend=args.backend)
    x0 = sol.frozen_profile
    y0 = leave_one_out_means(x0)
    agents = range(cfg.n) if args.agent is None else [args.agent]
    rows = []
    for i in agents:
        J = estimate_J(i, ens, cfg)
        G, H = estimate_G_H(i, ens, cfg)
        theory = (evaluate_value(sol, i, x0[i], y0[i]), evaluate_G(sol, i, x0[i], y0[i]),
                  evaluate_H(sol, i, x0[i], y0[i]))
        for name, est, th in zip(("J", "G", "H"), (J, G, H), theory):
            z = (est.mean - th) / est.std_error if est.std_error > 0 else float("nan")
            rows.append([i, name, est.mean, est.std_error, float(th), z, abs(z) <= 3.0])
    write_csv(_out(args, "simulate.csv"), ["agent_id", "quantity", "estimate", "std_error", "theory", "z_score",
                                           "pass"], rows)
    if args.dump_paths:
        write_csv(_out(args, "paths.csv"), ["path", "tau"] + [f"X_{j}" for j in range(cfg.n)],
                  [[p, ens.tau[p]] + list(ens.X[p]) for p in range(ens.X.shape[0])])
    _report(f"{ens.X.shape[0]} paths ({ens.backend}), {ens.nonfinite} non-finite; wrote {_out(args, 'simulate.csv')}")
    return 0


def cmd_deviation(args) -> int:
    cfg = _config(args)
    res = _unique_solution(cfg, args)
    if res.solution is None:
        return EXIT[res.outcome.kind]
    devs = None
    if args.deviations is not None:
        devs = [float(v) for v in args.deviations.split(",") if v.strip()]
    reps = deviation_test(args.agent, cfg, res.solution, args.epsilon, devs, _sim_config(args), backend=args.backend)
    rows = [[r.agent, r.epsilon, r.deviation_value, r.J_hat_equilibrium.mean, r.J_hat_deviated.mean,
             r.normalized_gap.mean, r.normalized_gap.std_error, r.passes] for r in reps]
    write_csv(_out(args, "deviation.csv"), ["agent_id", "epsilon", "deviation_value", "J_equilibrium",
                                            "J_deviated", "normalized_gap", "gap_std_error", "pass"], rows)
    _report(f"{len(reps)} deviations, {sum(r.passes for r in reps)} pass; wrote {_out(args, 'deviation.csv')}")
    return 0


def cmd_convergence(args) -> int:
    cfg = _config(args)
    m = _measure(args, cfg)
    ns = [int(v) for v in args.n_values.split(",")]
    curve = convergence_curve(m, ns, args.tracked_atom, args.seed, cfg.market, cfg.tolerances, args.root_index)
    write_csv(_out(args, "convergence.csv"), ["n", "tracked_error", "max_error", "degeneracy_flags"],
              [[p.n, p.tracked_error, p.max_error, p.degeneracy_flags] for p in curve.points()])
    _report(f"errors {', '.join(fmt(e) for e in curve.errors)}; wrote {_out(args, 'convergence.csv')}")
    return 0


def cmd_gen_population(args) -> int:
    cfg = figure_population(args.figure, args.seed, args.population, args.target_agent)
    rec = RECIPES[args.figure]
    path = _out(args, f"population_fig{args.figure}.json")
    dump_config(cfg, path)
    spec = {"parameter": rec.parameter, "grid": [float(v) for v in rec.grid(args.points)],
            "target_agent": args.target_agent, "config": os.path.basename(path)}
    spath = _out(args, f"sweep_fig{args.figure}.json")
    with open(spath, "w") as fh:
        json.dump(spec, fh, indent=2)
        fh.write("\n")
    _report(f"wrote {path} and {spath}")
    return 0


# --- parser ------------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="JSON config with market, agents and tolerances sections")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", default=".")
    g.add_argument("--root-index", type=int, default=None,
                   help="pick the k-th admissible slope root (ascending) instead of the canonical one")
    for name in ("root-tol", "det-tol", "kappa-tol", "excl-tol"):
        g.add_argument(f"--{name}", type=float, default=None)
    return p


def _sim_args(p, paths):
    p.add_argument("--paths", type=int, default=paths)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=sorted(BACKENDS), default=DEFAULT_BACKEND)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="mvgames", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-n-agent", parents=[common], help="solve the n-agent game")
    p.set_defaults(func=cmd_solve_n_agent)

    p = sub.add_parser("solve-mfg", parents=[common], help="solve the mean-field game over the config's atoms")
    p.add_argument("--weights", help="comma-separated atom weights (default uniform)")
    p.set_defaults(func=cmd_solve_mfg)

    p = sub.add_parser("limits", parents=[common], help="closed-form regimes")
    p.add_argument("--regime", choices=["lambda_inf", "state_indep_r0", "no_competition", "all"], default="all")
    p.add_argument("--mf", action="store_true", help="mean-field version over the config's atoms")
    p.add_argument("--weights")
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("sweep", parents=[common], help="comparative statics for one agent")
    p.add_argument("--figure", type=int, choices=sorted(RECIPES))
    p.add_argument("--parameter", choices=["phi", "gamma", "mu1", "mu2", "lambda"])
    p.add_argument("--grid", help="comma-separated values")
    p.add_argument("--grid-range", nargs=3, metavar=("LO", "HI", "COUNT"))
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--population", type=int, default=1000)
    p.add_argument("--target-agent", type=int, default=499)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of J, G and H")
    _sim_args(p, 100_000)
    p.add_argument("--agent", type=int, default=None)
    p.add_argument("--dump-paths", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("deviation", parents=[common], help="spike-deviation equilibrium test")
    _sim_args(p, 200_000)
    p.add_argument("--agent", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--deviations", help="comma-separated constant controls; empty string for none")
    p.set_defaults(func=cmd_deviation)

    p = sub.add_parser("convergence", parents=[common], help="n-agent to mean-field convergence")
    p.add_argument("--weights")
    p.add_argument("--n-values", default="10,100,1000")
    p.add_argument("--tracked-atom", type=int, default=0)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("gen-population", parents=[common], help="sample a population for a figure recipe")
    p.add_argument("--figure", type=int, choices=sorted(RECIPES), required=True)
    p.add_argument("--population", type=int, default=1000)
    p.add_argument("--target-agent", type=int, default=499)
    p.add_argument("--points", type=int, default=20)
    p.set_defaults(func=cmd_gen_population)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in getattr(exc, "violations", []) or [str(exc)]:
            print(f"config error: {v}", file=sys.stderr)
        return 1
    except (SolverError, PreconditionError, ValueError, OSError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
