"""Single-path time stepping of the delayed stochastic neural field.

The state is kept on the grid; the scheme is diagonal in the Fourier
coefficients, so stepping grid values is equivalent to stepping coefficients.
Each step is

    U_{j+1} = (U_j + h_t (I(., t_j) + F_j) + sqrt(h_t) eps eta_j) / (1 + alpha h_t)

with F_j the connectivity term evaluated on delayed fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from snfe.errors import ConfigError, ConvergenceError, DivergenceError
from snfe.model import DomainGrid, ModelSpec, RingKernelSet, build_ring_kernels, delay_steps
from snfe.noise import NoiseEigenvalues, NoiseSpec, sample_noise_field

HISTORY_KINDS = ("zero", "constant", "field", "snapshot", "rectangle", "function")


@dataclass(frozen=True)
class TimeGridSpec:
    h_t: float = 0.02
    n: int = 200

    def __post_init__(self):
        if not (self.h_t > 0 and math.isfinite(self.h_t)):
            raise ConfigError("time.h_t", f"time step must be positive, got {self.h_t!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("time.n", f"number of steps must be an integer >= 1, got {self.n!r}")

    @property
    def T(self) -> float:
        return self.n * self.h_t


@dataclass(frozen=True)
class InitialHistory:
    """Initial history U0(x, t) for t <= 0.

    kinds: ``zero``; ``constant`` (``value``); ``field`` (``values`` on the
    grid, constant in time); ``snapshot`` (``path`` to a snapshot file,
    constant in time); ``rectangle`` (``height`` on |x| <= ``half_width``,
    zero elsewhere); ``function`` (``func(x, t)``).
    """

    kind: str = "zero"
    value: float = 0.0
    values: Optional[np.ndarray] = field(default=None, compare=False)
    path: Optional[str] = None
    half_width: float = 0.0
    height: float = 0.0
    func: Optional[Callable] = field(default=None, compare=False)

    def resolve(self, grid: DomainGrid) -> "InitialHistory":
        """Load snapshot files so the result is self-contained."""
        if self.kind != "snapshot":
            return self
        snap = read_snapshot(self.path)
        if snap.N != grid.N or not math.isclose(snap.l, grid.l, rel_tol=1e-12):
            raise ConfigError(
                "initial.path", f"snapshot grid (l={snap.l}, N={snap.N}) does not match model (l={grid.l}, N={grid.N})"
            )
        return InitialHistory(kind="field", values=snap.values)

    def evaluate(self, grid: DomainGrid, t: float) -> np.ndarray:
        x = grid.points
        if self.kind == "zero":
            return np.zeros(grid.N)
        if self.kind == "constant":
            return np.full(grid.N, float(self.value))
        if self.kind == "field":
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != (grid.N,):
                raise ConfigError("initial.values", f"expected {grid.N} values, got shape {vals.shape}")
            return vals.copy()
        if self.kind == "snapshot":
            return self.resolve(grid).evaluate(grid, t)
        if self.kind == "rectangle":
            return np.where(np.abs(x) <= self.half_width, float(self.height), 0.0)
        if self.kind == "function":
            return np.broadcast_to(np.asarray(self.func(x, t), dtype=float), x.shape).copy()
        raise ConfigError("initial.kind", f"unknown initial history {self.kind!r}")


class HistoryBuffer:
    """Rolling store of the last d_max + 1 fields.

    ``lookup(d)`` returns the field at t_j - d h_t, falling back to the
    initial history for times before 0.
    """

    def __init__(self, grid: DomainGrid, d_max: int, h_t: float, initial: InitialHistory):
        self.grid = grid
        self.d_max = int(d_max)
        self.h_t = h_t
        self.initial = initial.resolve(grid)
        self.j = 0
        self._slots = np.empty((self.d_max + 1, grid.N))
        self._slots[0] = self.initial.evaluate(grid, 0.0)
        self._past_cache: dict[int, np.ndarray] = {}

    @property
    def capacity(self) -> int:
        return self._slots.shape[0]

    def push(self, u: np.ndarray) -> None:
        self.j += 1
        self._slots[self.j % self.capacity] = u

    def lookup(self, d: int) -> np.ndarray:
        if not 0 <= d <= self.d_max:
            raise IndexError(f"lag {d} outside buffer range 0..{self.d_max}")
        k = self.j - d
        if k >= 0:
            return self._slots[k % self.capacity]
        if k not in self._past_cache:
            self._past_cache[k] = self.initial.evaluate(self.grid, k * self.h_t)
        return self._past_cache[k]

    def stacked(self) -> np.ndarray:
        """All lags 0..d_max as a (d_max + 1, N) array."""
        return np.stack([self.lookup(d) for d in range(self.d_max + 1)])

    def copy(self) -> "HistoryBuffer":
        new = object.__new__(HistoryBuffer)
        new.__dict__.update(self.__dict__)
        new._slots = self._slots.copy()
        new._past_cache = dict(self._past_cache)
        return new


@dataclass
class SolverState:
    history: HistoryBuffer
    h_t: float

    @property
    def field(self) -> np.ndarray:
        return self.history.lookup(0)

    @property
    def j(self) -> int:
        return self.history.j

    @property
    def t(self) -> float:
        return self.history.j * self.h_t


def init_history(model: ModelSpec, rings: RingKernelSet, U0: InitialHistory, h_t: float) -> HistoryBuffer:
    return HistoryBuffer(model.grid, rings.d_max, h_t, U0)


def initial_state(model: ModelSpec, rings: RingKernelSet, U0: InitialHistory, h_t: float) -> SolverState:
    return SolverState(init_history(model, rings, U0, h_t), h_t)


def pair_delays(model: ModelSpec, h_t: float) -> np.ndarray:
    """Rounded lag (in steps) for every (target i, source j) pair."""
    dist = model.grid.distance_matrix()
    uniq, inv = np.unique(dist, return_inverse=True)
    lags = np.array([delay_steps(float(r), model.v, h_t) for r in uniq], dtype=int)
    return lags[inv].reshape(dist.shape)


def nonlinear_term_naive(state: SolverState, model: ModelSpec, h_t: float) -> np.ndarray:
    """Direct O(N^2) rectangle-rule sum h * sum_j K(d_ij) S(U(x_j, t - tau_ij))."""
    grid = model.grid
    W = grid.h * np.asarray(model.kernel(grid.distance_matrix()), dtype=float)
    lags = pair_delays(model, h_t)
    past = np.stack([state.history.lookup(d) for d in range(int(lags.max()) + 1)])
    src = past[lags, np.arange(grid.N)[None, :]]
    return (W * model.firing(src)).sum(axis=1)


def nonlinear_term_fft(state: SolverState, model: ModelSpec, rings: RingKernelSet) -> np.ndarray:
    """Sum over delay levels of circular convolutions ring_d * S(U_{j-d})."""
    N = model.grid.N
    acc = np.zeros(N // 2 + 1, dtype=complex)
    for d, ring_hat in zip(rings.levels, rings.rings_hat):
        acc += ring_hat * np.fft.rfft(model.firing(state.history.lookup(d)))
    return np.fft.irfft(acc, n=N)


def em_step(
    state: SolverState,
    model: ModelSpec,
    rings: RingKernelSet,
    noise: NoiseSpec,
    eig: Optional[NoiseEigenvalues],
    rng: Optional[np.random.Generator],
    h_t: float,
    nonlinear: str = "fft",
    input_field: Optional[np.ndarray] = None,
) -> SolverState:
    """Advance ``state`` by one semi-implicit Euler-Maruyama step (in place)."""
    u = state.field
    if nonlinear == "fft":
        F = nonlinear_term_fft(state, model, rings)
    elif nonlinear == "naive":
        F = nonlinear_term_naive(state, model, h_t)
    else:
        raise ConfigError("solver.nonlinear", f"expected 'fft' or 'naive', got {nonlinear!r}")
    I = input_field if input_field is not None else model.input_field(state.t)
    rhs = u + h_t * (I + F)
    if noise.epsilon > 0:
        rhs = rhs + math.sqrt(h_t) * noise.epsilon * sample_noise_field(model.grid, eig, rng)
    new = rhs / (1.0 + model.alpha * h_t)
    if not np.all(np.isfinite(new)):
        raise DivergenceError(state.j + 1)
    state.history.push(new)
    return state


@dataclass
class PathRecord:
    t: np.ndarray
    u_max: np.ndarray
    u_min: np.ndarray
    snapshots: dict
    final: np.ndarray

    def snapshot_at(self, step: int) -> np.ndarray:
        try:
            return self.snapshots[step]
        except KeyError:
            raise KeyError(f"no snapshot recorded at step {step}") from None


def run_path(
    model: ModelSpec,
    rings: RingKernelSet,
    noise: NoiseSpec,
    time: TimeGridSpec,
    U0: InitialHistory,
    rng: Optional[np.random.Generator],
    record_steps=(),
    nonlinear: str = "fft",
    eig: Optional[NoiseEigenvalues] = None,
) -> PathRecord:
    if noise.epsilon > 0 and eig is None:
        eig = NoiseEigenvalues.build(model.grid, noise.xi, noise.lambda_scale)
    state = initial_state(model, rings, U0, time.h_t)
    record = set(int(s) for s in record_steps)
    const_input = model.input_field(0.0) if model.input.constant_in_time else None
    u_max = np.empty(time.n + 1)
    u_min = np.empty(time.n + 1)
    snaps = {}
    u = state.field
    u_max[0], u_min[0] = u.max(), u.min()
    if 0 in record:
        snaps[0] = u.copy()
    for j in range(time.n):
        em_step(state, model, rings, noise, eig, rng, time.h_t, nonlinear, const_input)
        u = state.field
        u_max[j + 1], u_min[j + 1] = u.max(), u.min()
        if j + 1 in record:
            snaps[j + 1] = u.copy()
    t = np.arange(time.n + 1) * time.h_t
    return PathRecord(t, u_max, u_min, snaps, state.field.copy())


@dataclass
class StationaryResult:
    field: np.ndarray
    steps: int
    residual: float


def _deterministic_step(model: ModelSpec, rings: RingKernelSet, state: SolverState, h_t: float, nonlinear: str):
    return em_step(state, model, rings, NoiseSpec(epsilon=0.0), None, None, h_t, nonlinear)


def find_stationary(
    model: ModelSpec,
    h_t: float,
    U0: InitialHistory,
    tol: float = 1e-6,
    max_steps: int = 20000,
    nonlinear: str = "fft",
) -> StationaryResult:
    """Integrate without noise until max|U_{j+1} - U_j| / h_t < tol.

    The returned field is the last iterate before the converged step, polished
    with one explicit fixed-point update U = (I + F(U)) / alpha whenever that
    lowers the residual (exact for a Heaviside rate once the active set is fixed).
    """
    rings = build_ring_kernels(model, h_t)
    state = initial_state(model, rings, U0, h_t)
    residual = math.inf
    steps = 0
    while True:
        prev = state.field.copy()
        _deterministic_step(model, rings, state, h_t, nonlinear)
        residual = float(np.max(np.abs(state.field - prev))) / h_t
        if residual < tol:
            u = prev
            break
        steps += 1
        if steps >= max_steps:
            raise ConvergenceError(steps, residual)
    polished = _fixed_point_update(model, rings, u)
    r_pol = stationarity_residual(model, rings, polished, h_t, nonlinear)
    if r_pol < residual:
        u, residual = polished, r_pol
    return StationaryResult(u, steps, residual)


def _fixed_point_update(model: ModelSpec, rings: RingKernelSet, u: np.ndarray) -> np.ndarray:
    const = InitialHistory(kind="field", values=u)
    state = initial_state(model, rings, const, 1.0)
    F = nonlinear_term_fft(state, model, rings)
    return (model.input_field(0.0) + F) / model.alpha


def stationarity_residual(model: ModelSpec, rings: RingKernelSet, u: np.ndarray, h_t: float, nonlinear: str = "fft") -> float:
    """max|U_1 - U_0| / h_t for one noiseless step from a constant history u."""
    state = initial_state(model, rings, InitialHistory(kind="field", values=u), h_t)
    _deterministic_step(model, rings, state, h_t, nonlinear)
    return float(np.max(np.abs(state.field - u))) / h_t


# snapshot files: "l=", "N=", "t=" header lines, then N lines "x,U"


@dataclass
class Snapshot:
    l: float
    N: int
    t: float
    x: np.ndarray
    values: np.ndarray


def write_snapshot(path, grid: DomainGrid, t: float, values: np.ndarray) -> None:
    lines = [f"l={grid.l!r}", f"N={grid.N}", f"t={float(t)!r}"]
    lines += [f"{float(x)!r},{float(u)!r}" for x, u in zip(grid.points, values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> Snapshot:
    try:
        text = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError("initial.path", f"cannot read snapshot: {exc}") from exc
    header = {}
    for line in text[:3]:
        key, _, val = line.partition("=")
        header[key.strip()] = val.strip()
    try:
        l, N, t = float(header["l"]), int(header["N"]), float(header["t"])
        rows = [tuple(map(float, line.split(","))) for line in text[3:] if line.strip()]
    except (KeyError, ValueError) as exc:
        raise ConfigError("initial.path", f"malformed snapshot {path}: {exc}") from exc
    if len(rows) != N:
        raise ConfigError("initial.path", f"snapshot declares N={N} but has {len(rows)} rows")
    arr = np.array(rows)
    return Snapshot(l, N, t, arr[:, 0], arr[:, 1])
