"""Command-line interface: mfe, nplayer, design, simulate, gap, figures."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import design, experiments as ex
from .errors import ContestError, ConfigError
from .mfe import mf_equilibrium, verify_equilibrium
from .nplayer import discretize_reward, n_equilibrium, nash_gap
from .reward import RewardFunction
from .scale import ModelParams
from .simulate import deviation_gain, embed_target, jump_deviation, kolmogorov_distance


def _add_model_args(p):
    p.add_argument("--x0", type=float, help="initial level (overrides config)")
    p.add_argument("--mu", type=float, help="drift (overrides config)")
    p.add_argument("--sigma", type=float, help="volatility (overrides config)")


def _add_reward_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--reward", metavar="PATH", help="reward spec JSON file")
    g.add_argument("--cutoff", type=float, metavar="ALPHA", help="normalized cutoff reward at ALPHA")
    g.add_argument("--linear", action="store_true", help="reward 2(1 - r)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfcontest",
                                     description="Rank-based stopping contests: equilibria, design, simulation.")
    parser.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    parser.add_argument("--format", choices=ex.FORMATS, help="output format for tables")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mfe", help="mean field equilibrium and its verification")
    _add_model_args(p)
    _add_reward_args(p)
    p.add_argument("--grid", type=int, default=10_000, help="envelope grid size")

    p = sub.add_parser("nplayer", help="n-player equilibrium table")
    _add_model_args(p)
    _add_reward_args(p)
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("design", help="optimal reward design")
    dsub = p.add_subparsers(dest="setting", required=True)
    d = dsub.add_parser("mf", help="mean field optimal cutoff")
    _add_model_args(d)
    d.add_argument("--alpha", type=float, required=True)
    d = dsub.add_parser("nplayer", help="optimal cutoff rank, zero drift")
    _add_model_args(d)
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--sweep-j", action="store_true", help="also tabulate every cutoff j")

    p = sub.add_parser("simulate", help="knife-edge deviation gain or path embedding")
    _add_model_args(p)
    _add_reward_args(p)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--rounds", type=int, help="Monte Carlo rounds (overrides config)")
    p.add_argument("--a-prime", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--embed", action="store_true", help="embed the mean field equilibrium by simulated paths")
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--dt", type=float, default=1e-4)

    p = sub.add_parser("gap", help="Nash gap of the mean field strategy in the n-player game")
    _add_model_args(p)
    _add_reward_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=int, default=10_000)

    sub.add_parser("figures", help="reproduce the cutoff-convergence and proxy-divergence tables")
    return parser


def _config(args) -> ex.ExperimentConfig:
    cfg = ex.ExperimentConfig.load(args.config) if args.config else ex.ExperimentConfig()
    d = cfg.to_dict()
    params = dict(d["params"])
    for key in ("x0", "mu", "sigma"):
        if getattr(args, key, None) is not None:
            params[key] = getattr(args, key)
    d["params"] = params
    if args.seed is not None:
        d["seed"] = args.seed
    if args.out is not None:
        d["output_dir"] = args.out
    if args.format is not None:
        d["formats"] = [args.format]
    if getattr(args, "rounds", None) is not None:
        d["rounds"] = args.rounds
    return ex.ExperimentConfig.from_dict(d)


def _reward(args, cfg) -> RewardFunction:
    if getattr(args, "reward", None):
        try:
            return RewardFunction.from_json(Path(args.reward).read_text())
        except OSError as exc:
            raise ConfigError([f"reward file {args.reward}: {exc.strerror}"]) from exc
    if getattr(args, "cutoff", None) is not None:
        return RewardFunction.cutoff(args.cutoff)
    if getattr(args, "linear", False):
        return RewardFunction.linear()
    if cfg.reward is not None:
        return RewardFunction.from_dict(cfg.reward)
    return RewardFunction.cutoff(cfg.alpha)


def _write_table(cfg, table: ex.Table) -> list:
    out = Path(cfg.output_dir)
    paths = []
    for fmt in cfg.formats:
        if fmt == "csv":
            paths.append(ex.write_text(out / f"{table.name}.csv", ex.to_csv(table, cfg.digest(), cfg.seed)))
        elif fmt == "json":
            paths.append(ex.write_text(out / f"{table.name}.json", ex.to_json(table, cfg.digest(), cfg.seed)))
        elif fmt == "svg":
            x = table.columns[0] if table.columns[0] != "n" else table.columns[1]
            y = [c for c in table.columns if c != x and c != "n"][:3]
            spec = ex.PlotSpec(x, y, table.name, x, ", ".join(y))
            paths.append(ex.write_text(out / f"{table.name}.svg", ex.emit_svg(table, spec)))
    return [str(p) for p in paths]


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def cmd_mfe(args, cfg):
    R = _reward(args, cfg)
    sol = mf_equilibrium(cfg.params, R)
    report = verify_equilibrium(cfg.params, R, sol.cdf, n_grid=args.grid)
    files = _write_table(cfg, ex.equilibrium_table(sol))
    files.append(str(ex.write_text(Path(cfg.output_dir) / "equilibrium_atoms.json", ex.atoms_sidecar(sol))))
    _emit({"reward": R.to_dict(), "params": cfg.params.to_dict(), "support_end": sol.support_end,
           "atoms": sol.cdf.atoms, "verification": report.to_dict(), "files": files})


def cmd_nplayer(args, cfg):
    R = _reward(args, cfg)
    vec = discretize_reward(R, args.n)
    sol = n_equilibrium(cfg.params, vec)
    files = _write_table(cfg, ex.equilibrium_table(sol, n=args.n))
    _emit({"n": args.n, "Rbar_n": vec.Rbar, "support_end": sol.support_end,
           "mu_bar_n": sol.diagnostics["mu_bar"], "h_mean": sol.diagnostics["h_mean"], "files": files})


def cmd_design(args, cfg):
    if args.setting == "mf":
        res = design.mf_optimal_reward(cfg.params, args.alpha)
        _emit({"alpha": args.alpha, "reward": res.reward.to_dict(), "performance": res.performance,
               "equilibrium_atoms": res.meta["equilibrium"].cdf.atoms})
        return
    res = design.nplayer_optimal_design(args.n, args.k, cfg.params)
    doc = res.to_dict()
    if args.sweep_j:
        perf = design.performance_curve(args.n, args.k, cfg.params.x0)
        table = ex.Table(f"design_n{args.n}_k{args.k}", ["j", "performance"],
                         [[j, float(v)] for j, v in zip(range(1, args.n), perf[:-1])],
                         {"n": args.n, "k": args.k, "k_star": res.meta["k_star"]})
        doc["files"] = _write_table(cfg, table)
    _emit(doc)


def cmd_simulate(args, cfg):
    R = _reward(args, cfg)
    if args.embed:
        target = mf_equilibrium(cfg.params, R).cdf
        res = embed_target(cfg.params, target, seed=cfg.seed, dt=args.dt, paths=args.paths)
        _emit({"paths": args.paths, "seed": cfg.seed, "dt": args.dt, "unfinished": res.unfinished,
               "target_atoms": target.atoms,
               "empirical_masses": res.empirical_masses([x for x, _ in target.atoms]).tolist(),
               "kolmogorov_distance": kolmogorov_distance(res.values, target),
               "mean_time": float(np.nanmean(res.times))})
        return
    plan = jump_deviation(cfg.params, R, n=args.n, a_prime=args.a_prime, eta=args.eta)
    gain = deviation_gain(cfg.params, R, plan, args.n, cfg.rounds, cfg.seed, args.workers)
    doc = {"n": args.n, "rounds": cfg.rounds, "seed": cfg.seed, "mean": gain.estimate.mean,
           "ci95": gain.ci95, "gain": gain.gain, "exact_gain": gain.exact_gain, "plan": plan.to_dict()}
    if cfg.output_dir and args.out is not None:
        doc["files"] = [str(ex.write_text(Path(cfg.output_dir) / f"simulate_n{args.n}.json",
                                          json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"))]
    _emit(doc)


def cmd_gap(args, cfg):
    R = _reward(args, cfg)
    F = mf_equilibrium(cfg.params, R).cdf
    rep = nash_gap(cfg.params, discretize_reward(R, args.n), F, n_grid=args.grid, jump_levels=R.jump_set())
    _emit(rep.to_dict())


def cmd_figures(args, cfg):
    written = ex.run_experiment(cfg)
    _emit({"config_sha256": cfg.digest(), "files": sorted(written.values())})


COMMANDS = {"mfe": cmd_mfe, "nplayer": cmd_nplayer, "design": cmd_design,
            "simulate": cmd_simulate, "gap": cmd_gap, "figures": cmd_figures}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"mfcontest: invalid configuration:\n  " + "\n  ".join(exc.problems), file=sys.stderr)
        return 2
    except (ContestError, OSError) as exc:
        print(f"mfcontest: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
