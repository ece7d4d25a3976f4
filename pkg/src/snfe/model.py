"""Problem definition: grid, kernel, firing rate, input, delays.

The spatial domain is the periodic interval [-l, l) sampled at N points.
Distances are circular, so the largest distance on the grid is l and the
largest transmission delay is l / v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from snfe.errors import ConfigError


@dataclass(frozen=True)
class DomainGrid:
    l: float
    N: int

    @property
    def h(self) -> float:
        return 2.0 * self.l / self.N

    @property
    def points(self) -> np.ndarray:
        return -self.l + self.h * np.arange(self.N)

    def offset_distances(self) -> np.ndarray:
        """Circular distance of each index offset m = 0..N-1."""
        m = np.arange(self.N)
        return np.minimum(m, self.N - m) * self.h

    def dist(self, i: int, j: int) -> float:
        d = abs(i - j) % self.N
        return min(d, self.N - d) * self.h

    def distance_matrix(self) -> np.ndarray:
        idx = np.arange(self.N)
        d = np.abs(idx[:, None] - idx[None, :])
        return np.minimum(d, self.N - d) * self.h


def build_grid(l: float, N: int) -> DomainGrid:
    if not l > 0 or not math.isfinite(l):
        raise ConfigError("model.l", f"half-width must be positive and finite, got {l!r}")
    if int(N) != N or N < 2 or N % 2:
        raise ConfigError("model.N", f"number of points must be an even integer >= 2, got {N!r}")
    return DomainGrid(l=float(l), N=int(N))


KERNEL_VARIANTS = ("paper-oscillatory", "gaussian", "custom")


@dataclass(frozen=True)
class KernelSpec:
    """Connectivity kernel K(|x|).

    ``paper-oscillatory``: a*exp(-b|x|)*(c*sin(w|x|) + cos(w|x|)).
    ``gaussian``: a*exp(-x^2 / s).
    ``custom``: ``func`` is called on |x| (vectorized).
    """

    variant: str = "paper-oscillatory"
    params: dict = field(default_factory=dict)
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __call__(self, x):
        r = np.abs(np.asarray(x, dtype=float))
        if self.variant == "paper-oscillatory":
            a = self.params.get("a", 2.0)
            b = self.params.get("b", 0.08)
            c = self.params.get("c", 0.08)
            w = self.params.get("omega", math.pi / 10)
            return a * np.exp(-b * r) * (c * np.sin(w * r) + np.cos(w * r))
        if self.variant == "gaussian":
            return self.params.get("a", 1.0) * np.exp(-(r**2) / self.params.get("s", 1.0))
        if self.variant == "custom":
            if self.func is None:
                raise ConfigError("model.kernel.func", "custom kernel needs a callable")
            return np.asarray(self.func(r), dtype=float)
        raise ConfigError("model.kernel.variant", f"unknown kernel {self.variant!r}")


def kernel_value(spec: KernelSpec, x):
    return spec(x)


@dataclass(frozen=True)
class FiringRateSpec:
    """Heaviside, sigmoid or clamped-linear firing rate.

    ``at_threshold`` is the Heaviside value exactly at the threshold;
    ``linear`` is clip(beta*(u - theta), 0, 1).
    """

    variant: str = "heaviside"
    theta: float = 0.0
    beta: float = 1.0
    at_threshold: float = 1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.variant == "heaviside":
            return np.where(u == self.theta, self.at_threshold, (u > self.theta).astype(float))
        if self.variant == "sigmoid":
            # tanh form avoids exp overflow for large |u|
            return 0.5 * (1.0 + np.tanh(0.5 * self.beta * (u - self.theta)))
        if self.variant == "linear":
            return np.clip(self.beta * (u - self.theta), 0.0, 1.0)
        raise ConfigError("model.firing.variant", f"unknown firing rate {self.variant!r}")


def firing_rate(spec: FiringRateSpec, u):
    out = spec(u)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class InputSpec:
    """External input I(x, t).

    ``paper-gaussian-offset``: offset + amplitude*exp(-x^2/width), constant in time.
    """

    variant: str = "paper-gaussian-offset"
    offset: float = -3.39967
    amplitude: float = 8.0
    width: float = 18.0
    func: Optional[Callable[[np.ndarray, float], np.ndarray]] = field(default=None, compare=False)
    time_dependent: bool = False

    def __call__(self, x, t: float = 0.0):
        x = np.asarray(x, dtype=float)
        if self.variant == "paper-gaussian-offset":
            return self.offset + self.amplitude * np.exp(-(x**2) / self.width)
        if self.variant == "zero":
            return np.zeros_like(x)
        if self.variant == "constant":
            return np.full_like(x, self.offset)
        if self.variant == "custom":
            if self.func is None:
                raise ConfigError("model.input.func", "custom input needs a callable")
            return np.broadcast_to(np.asarray(self.func(x, t), dtype=float), x.shape).copy()
        raise ConfigError("model.input.variant", f"unknown input {self.variant!r}")

    @property
    def constant_in_time(self) -> bool:
        return not (self.variant == "custom" and self.time_dependent)


def input_value(spec: InputSpec, x, t: float = 0.0):
    out = spec(x, t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelSpec:
    grid: DomainGrid
    kernel: KernelSpec = field(default_factory=KernelSpec)
    firing: FiringRateSpec = field(default_factory=FiringRateSpec)
    input: InputSpec = field(default_factory=InputSpec)
    alpha: float = 1.0
    v: float = math.inf

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("model.alpha", f"decay rate must be positive, got {self.alpha!r}")
        if not self.v > 0:
            raise ConfigError("model.v", f"propagation speed must be positive, got {self.v!r}")

    @property
    def tau_max(self) -> float:
        return 0.0 if math.isinf(self.v) else self.grid.l / self.v

    def input_field(self, t: float = 0.0) -> np.ndarray:
        return self.input(self.grid.points, t)


def delay_steps(distance: float, v: float, h_t: float) -> int:
    """Number of time steps to look back for a signal travelling ``distance``.

    The delay tau/h_t is split into integer part d and fraction delta; the
    lag is d when delta < 0.5 and d + 1 otherwise.
    """
    if math.isinf(v) or distance == 0:
        return 0
    q = (distance / v) / h_t
    d = math.floor(q)
    return d if q - d < 0.5 else d + 1


@dataclass(frozen=True)
class RingKernelSet:
    """Weighted kernel split by delay level.

    ``levels[r]`` is the delay (in steps) of ring ``rings[r]``; each ring is a
    length-N circular kernel holding h*K at the offsets with that delay and
    zero elsewhere. Only non-empty levels are stored.
    """

    levels: tuple
    rings: np.ndarray
    offsets_per_ring: tuple
    offset_delay: np.ndarray
    rings_hat: np.ndarray = field(repr=False)

    @property
    def d_max(self) -> int:
        return int(self.levels[-1])

    def ring(self, d: int) -> np.ndarray:
        if d in self.levels:
            return self.rings[self.levels.index(d)]
        return np.zeros(self.rings.shape[1])


def build_ring_kernels(model: ModelSpec, h_t: float) -> RingKernelSet:
    grid = model.grid
    dists = grid.offset_distances()
    weights = grid.h * np.asarray(model.kernel(dists), dtype=float)
    delays = np.array([delay_steps(float(r), model.v, h_t) for r in dists], dtype=int)
    levels = tuple(int(d) for d in np.unique(delays))
    rings = np.zeros((len(levels), grid.N))
    offsets = []
    for r, d in enumerate(levels):
        mask = delays == d
        rings[r, mask] = weights[mask]
        offsets.append(tuple(int(m) for m in np.flatnonzero(mask)))
    rings.setflags(write=False)
    rings_hat = np.fft.rfft(rings, axis=1)
    rings_hat.setflags(write=False)
    delays.setflags(write=False)
    return RingKernelSet(levels, rings, tuple(offsets), delays, rings_hat)


PAPER_PRESET = "paper-3.1"


def paper_model(v: float = math.inf, alpha: float = 1.0) -> ModelSpec:
    """Benchmark of the multi-bump experiments on [-50, 50) with N=100."""
    return ModelSpec(
        grid=build_grid(50.0, 100),
        kernel=KernelSpec("paper-oscillatory", {"a": 2.0, "b": 0.08, "c": 0.08, "omega": math.pi / 10}),
        firing=FiringRateSpec("heaviside", theta=0.0, at_threshold=0.0),
        input=InputSpec("paper-gaussian-offset", offset=-3.39967, amplitude=8.0, width=18.0),
        alpha=alpha,
        v=v,
    )
