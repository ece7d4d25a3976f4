"""Fraction of paths leaving the one-bump state as the noise level grows.

Starts every path from the deterministic one-bump solution and reports, for
each epsilon and both eigenvalue scales, the fraction of paths that end
with u_max > 20 and u_min < -12.5 (multi-bump range).

    python scripts/noise_sweep.py --eps 0.01 0.05 0.1 0.2 0.5
"""

import argparse

import numpy as np

from snfe import EnsembleConfig, InitialHistory, find_stationary, run_ensemble
from snfe.config import parse_config


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--eps", type=float, nargs="+", default=[0.01, 0.05, 0.1, 0.2, 0.5])
    p.add_argument("--paths", type=int, default=100)
    p.add_argument("--workers", type=int, default=0)
    args = p.parse_args()

    base = parse_config()
    bump = find_stationary(base.model, base.time.h_t, InitialHistory("zero")).field
    print("scale        epsilon  multi-bump  u_max range")
    for scale in ("mode-index", "wavenumber"):
        for eps in args.eps:
            cfg = parse_config(overrides={"noise.epsilon": eps, "noise.lambda_scale": scale})
            stats = run_ensemble(
                EnsembleConfig(cfg.model, cfg.noise, cfg.time, InitialHistory("field", values=bump), args.paths, workers=args.workers)
            )
            frac = np.mean((stats.final_max > 20) & (stats.final_min < -12.5))
            print(f"{scale:<12} {eps:<8g} {frac:<11.2f} [{stats.final_max.min():.2f}, {stats.final_max.max():.2f}]")


if __name__ == "__main__":
    main()
