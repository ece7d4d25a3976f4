"""Monte Carlo ensembles of independent paths and their cross-path statistics."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np

from snfe.errors import ConfigError, DivergenceError, EnsembleError
from snfe.model import ModelSpec, build_ring_kernels
from snfe.noise import NoiseEigenvalues, NoiseSpec, path_rng
from snfe.solver import InitialHistory, PathRecord, TimeGridSpec, run_path

log = logging.getLogger(__name__)

DEFAULT_BIN_WIDTH = 0.4


@dataclass
class EnsembleConfig:
    model: ModelSpec
    noise: NoiseSpec
    time: TimeGridSpec
    initial: InitialHistory = field(default_factory=InitialHistory)
    n_paths: int = 100
    record_times: tuple = ()
    workers: int = 1
    nonlinear: str = "fft"
    hist_bin_width: float = DEFAULT_BIN_WIDTH

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigError("ensemble.n_paths", f"must be an integer >= 1, got {self.n_paths!r}")
        if not self.hist_bin_width > 0:
            raise ConfigError("ensemble.hist_bin_width", f"must be > 0, got {self.hist_bin_width!r}")

    def record_steps(self) -> list[int]:
        """Steps at which fields are kept; the final step is always included."""
        steps = {self.time.n}
        for t in self.record_times:
            j = int(round(t / self.time.h_t))
            if not 0 <= j <= self.time.n:
                raise ConfigError("ensemble.record_times", f"time {t} outside [0, {self.time.T}]")
            steps.add(j)
        return sorted(steps)


@dataclass
class EnsembleStats:
    t: np.ndarray
    U_maxmax: np.ndarray
    U_minmax: np.ndarray
    U_maxmin: np.ndarray
    U_minmin: np.ndarray
    E_max: np.ndarray
    E_min: np.ndarray
    mean_fields: dict  # step -> (mean, min, max)
    final_max: np.ndarray
    final_min: np.ndarray
    hist_max: tuple
    hist_min: tuple
    n_paths: int
    diverged: list  # (path index, step)

    @property
    def n_surviving(self) -> int:
        return len(self.final_max)

    def gap(self, step: int) -> float:
        return float(self.U_maxmax[step] - self.U_minmax[step])


def histogram(values, bin_width: float):
    """Uniform left-closed bins of width ``bin_width`` starting at min(values)."""
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        raise ValueError("histogram of an empty list")
    if not bin_width > 0:
        raise ValueError(f"bin width must be positive, got {bin_width!r}")
    lo, hi = vals.min(), vals.max()
    n_bins = int(math.floor((hi - lo) / bin_width)) + 1
    edges = lo + bin_width * np.arange(n_bins + 1)
    idx = np.clip(np.floor((vals - lo) / bin_width).astype(int), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return edges, counts


def mean_field(snapshots):
    """Pointwise mean, min and max over a list of fields."""
    if len(snapshots) == 0:
        raise ValueError("no snapshots to average")
    stack = np.stack([np.asarray(s, dtype=float) for s in snapshots])
    return stack.mean(axis=0), stack.min(axis=0), stack.max(axis=0)


def _run_one(cfg: EnsembleConfig, record_steps, path_index: int):
    rings = build_ring_kernels(cfg.model, cfg.time.h_t)
    eig = None
    if cfg.noise.epsilon > 0:
        eig = NoiseEigenvalues.build(cfg.model.grid, cfg.noise.xi, cfg.noise.lambda_scale)
    rng = path_rng(cfg.noise.master_seed, path_index)
    try:
        return run_path(cfg.model, rings, cfg.noise, cfg.time, cfg.initial, rng, record_steps, cfg.nonlinear, eig)
    except DivergenceError as exc:
        return DivergenceError(exc.step, path_index)


def run_paths(cfg: EnsembleConfig) -> list:
    """PathRecord (or DivergenceError) for every path, in path-index order."""
    initial = cfg.initial.resolve(cfg.model.grid)
    cfg = EnsembleConfig(**{**cfg.__dict__, "initial": initial})
    steps = cfg.record_steps()
    job = partial(_run_one, cfg, steps)
    workers = cfg.workers or os.cpu_count() or 1
    if workers == 1 or cfg.n_paths == 1:
        return [job(s) for s in range(cfg.n_paths)]
    chunk = max(1, cfg.n_paths // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(cfg.n_paths), chunksize=chunk))


def run_ensemble(cfg: EnsembleConfig) -> EnsembleStats:
    results = run_paths(cfg)
    paths: list[PathRecord] = [r for r in results if isinstance(r, PathRecord)]
    diverged = [(r.path, r.step) for r in results if isinstance(r, DivergenceError)]
    if diverged:
        log.warning("%d of %d paths diverged", len(diverged), cfg.n_paths)
    if not paths:
        raise EnsembleError(f"all {cfg.n_paths} paths diverged")
    return reduce_paths(paths, cfg, diverged)


def reduce_paths(paths: list[PathRecord], cfg: EnsembleConfig, diverged=()) -> EnsembleStats:
    umax = np.stack([p.u_max for p in paths])
    umin = np.stack([p.u_min for p in paths])
    means = {}
    for step in cfg.record_steps():
        means[step] = mean_field([p.snapshot_at(step) for p in paths])
    fmax, fmin = umax[:, -1].copy(), umin[:, -1].copy()
    return EnsembleStats(
        t=paths[0].t,
        U_maxmax=umax.max(axis=0),
        U_minmax=umax.min(axis=0),
        U_maxmin=umin.max(axis=0),
        U_minmin=umin.min(axis=0),
        E_max=umax.mean(axis=0),
        E_min=umin.mean(axis=0),
        mean_fields=means,
        final_max=fmax,
        final_min=fmin,
        hist_max=histogram(fmax, cfg.hist_bin_width),
        hist_min=histogram(fmin, cfg.hist_bin_width),
        n_paths=cfg.n_paths,
        diverged=list(diverged),
    )


STATS_COLUMNS = ("t", "U_maxmax", "U_minmax", "U_maxmin", "U_minmin", "E_max", "E_min")


def _fmt(v) -> str:
    return repr(float(v))


def write_ensemble_outputs(stats: EnsembleStats, cfg: EnsembleConfig, out_dir, metadata: Optional[dict] = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "stats.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATS_COLUMNS)
        cols = [getattr(stats, c) for c in STATS_COLUMNS]
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    x = cfg.model.grid.points
    for step, (mean, lo, hi) in stats.mean_fields.items():
        t = step * cfg.time.h_t
        with open(out / f"meanfield_{t:g}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("x", "mean", "min", "max"))
            for row in zip(x, mean, lo, hi):
                w.writerow([_fmt(v) for v in row])
    for name, (edges, counts) in (("hist_max.csv", stats.hist_max), ("hist_min.csv", stats.hist_min)):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("bin_left", "bin_right", "count"))
            for left, right, c in zip(edges[:-1], edges[1:], counts):
                w.writerow([_fmt(left), _fmt(right), int(c)])
    meta = dict(metadata or {})
    meta.update(
        n_paths=stats.n_paths,
        n_surviving=stats.n_surviving,
        n_diverged=len(stats.diverged),
        diverged=[{"path": p, "step": s} for p, s in stats.diverged],
        master_seed=cfg.noise.master_seed,
    )
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return out
