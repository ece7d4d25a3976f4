"""Command line interface: ``snfe {simulate,ensemble,find-stationary}``.

Exit codes: 0 success, 2 configuration error, 3 divergence, 4 no convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time as _time
from pathlib import Path

import numpy as np
import yaml

from snfe.config import parse_config, RunConfig
from snfe.ensemble import EnsembleConfig, run_ensemble, write_ensemble_outputs
from snfe.errors import ConfigError, ConvergenceError, DivergenceError, EnsembleError
from snfe.model import PAPER_PRESET, build_ring_kernels
from snfe.noise import path_rng
from snfe.solver import InitialHistory, find_stationary, run_path, write_snapshot

log = logging.getLogger("snfe")

EXIT_CONFIG, EXIT_DIVERGED, EXIT_NO_CONVERGENCE = 2, 3, 4


def _fmt(v) -> str:
    return repr(float(v))


def _overrides(args) -> dict:
    o = {}
    if args.out is not None:
        o["output.out_dir"] = args.out
    if args.seed is not None:
        o["noise.master_seed"] = args.seed
    if args.workers is not None:
        o["ensemble.workers"] = args.workers
    if args.epsilon is not None:
        o["noise.epsilon"] = args.epsilon
    if args.xi is not None:
        o["noise.xi"] = args.xi
    if args.paths is not None:
        o["ensemble.n_paths"] = args.paths
    if args.ht is not None:
        o["time.h_t"] = args.ht
    if args.nonlinear is not None:
        o["solver.nonlinear"] = args.nonlinear
    if args.initial_snapshot is not None:
        o["initial"] = {"kind": "snapshot", "path": args.initial_snapshot}
    if args.record_times is not None:
        o["ensemble.record_times"] = args.record_times
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(item, "--set expects KEY=VALUE")
        o[key.strip()] = yaml.safe_load(raw)
    return o


def load_run_config(args) -> RunConfig:
    overrides = _overrides(args)
    if args.T is not None:
        # T is converted with the final h_t, so resolve everything else first
        h_t = parse_config(args.config, args.preset, overrides).time.h_t
        n = round(args.T / h_t)
        if n < 1 or abs(n * h_t - args.T) > 1e-9 * max(1.0, args.T):
            raise ConfigError("time.T", f"T={args.T} is not a positive multiple of h_t={h_t}")
        overrides["time.n"] = n
    return parse_config(args.config, args.preset, overrides)


def _record_steps(cfg: RunConfig) -> list[int]:
    return EnsembleConfig(cfg.model, cfg.noise, cfg.time, record_times=tuple(cfg.record_times)).record_steps()


def _metadata(cfg: RunConfig, command: str, wall: float) -> dict:
    return {"command": command, "config": cfg.to_dict(), "wall_clock_s": wall}


def cmd_simulate(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = _time.perf_counter()
    rings = build_ring_kernels(cfg.model, cfg.time.h_t)
    steps = _record_steps(cfg)
    rec = run_path(cfg.model, rings, cfg.noise, cfg.time, cfg.initial, path_rng(cfg.noise.master_seed, 0), steps, cfg.nonlinear)
    with open(out / "path.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "u_max", "u_min"))
        for row in zip(rec.t, rec.u_max, rec.u_min):
            w.writerow([_fmt(v) for v in row])
    for step, u in rec.snapshots.items():
        if step != cfg.time.n:
            write_snapshot(out / f"snapshot_{step * cfg.time.h_t:g}.txt", cfg.model.grid, step * cfg.time.h_t, u)
    write_snapshot(out / "final.txt", cfg.model.grid, cfg.time.T, rec.final)
    meta = _metadata(cfg, "simulate", _time.perf_counter() - start)
    meta.update(u_max_final=float(rec.u_max[-1]), u_min_final=float(rec.u_min[-1]))
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"u_max(T)={rec.u_max[-1]:.6f} u_min(T)={rec.u_min[-1]:.6f} -> {out}")
    return out


def cmd_ensemble(cfg: RunConfig) -> Path:
    start = _time.perf_counter()
    ecfg = EnsembleConfig(
        model=cfg.model,
        noise=cfg.noise,
        time=cfg.time,
        initial=cfg.initial,
        n_paths=cfg.n_paths,
        record_times=tuple(cfg.record_times),
        workers=cfg.workers,
        nonlinear=cfg.nonlinear,
        hist_bin_width=cfg.hist_bin_width,
    )
    stats = run_ensemble(ecfg)
    out = write_ensemble_outputs(stats, ecfg, cfg.out_dir, _metadata(cfg, "ensemble", _time.perf_counter() - start))
    print(
        f"paths={stats.n_surviving}/{stats.n_paths} E_max(T)={stats.E_max[-1]:.6f} "
        f"E_min(T)={stats.E_min[-1]:.6f} -> {out}"
    )
    return out


def cmd_find_stationary(cfg: RunConfig, which: str = "one", seed: InitialHistory | None = None) -> Path:
    if seed is None:
        try:
            seed = cfg.stationary_seeds[which]
        except KeyError:
            raise ConfigError("stationary.seeds", f"no seed profile for {which!r}") from None
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = find_stationary(
        cfg.model, cfg.time.h_t, seed, tol=cfg.stationary_tolerance, max_steps=cfg.stationary_max_steps, nonlinear=cfg.nonlinear
    )
    path = out / f"stationary_{which}.txt"
    write_snapshot(path, cfg.model.grid, res.steps * cfg.time.h_t, res.field)
    print(
        f"{which}-bump: u_max={res.field.max():.6f} u_min={res.field.min():.6f} "
        f"steps={res.steps} residual={res.residual:.3e} -> {path}"
    )
    return path


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config file")
    common.add_argument("--preset", default=PAPER_PRESET, help="named preset (default: %(default)s)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
    common.add_argument("--epsilon", type=float, help="noise amplitude")
    common.add_argument("--xi", type=float, help="noise correlation length")
    common.add_argument("--paths", type=int, help="number of ensemble paths")
    common.add_argument("--T", type=float, help="final time (must be a multiple of h_t)")
    common.add_argument("--ht", type=float, help="time step")
    common.add_argument("--nonlinear", choices=("fft", "naive"))
    common.add_argument("--initial-snapshot", metavar="PATH", help="use a snapshot file as constant initial history")
    common.add_argument("--record-times", type=float, nargs="*", metavar="T", help="times at which to keep fields")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any dotted config key")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="snfe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one path")
    sub.add_parser("ensemble", parents=[common], help="run a Monte Carlo ensemble")
    fs = sub.add_parser("find-stationary", parents=[common], help="integrate to a stationary solution")
    fs.add_argument("--which", choices=("one", "three", "five"), default="one", help="seed profile")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_run_config(args)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "ensemble":
            cmd_ensemble(cfg)
        else:
            seed = cfg.initial if args.initial_snapshot is not None else None
            cmd_find_stationary(cfg, args.which, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, EnsembleError) as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
