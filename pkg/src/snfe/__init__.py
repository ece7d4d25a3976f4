"""Stochastic neural fields with space-dependent delays.

Spectral/FFT evaluation of the delayed connectivity term, semi-implicit
Euler-Maruyama time stepping, correlated Q-Wiener noise and Monte Carlo
ensemble statistics.
"""

from snfe.errors import ConfigError, ConvergenceError, DivergenceError, EnsembleError
from snfe.model import (
    DomainGrid,
    FiringRateSpec,
    InputSpec,
    KernelSpec,
    ModelSpec,
    RingKernelSet,
    build_grid,
    build_ring_kernels,
    delay_steps,
    firing_rate,
    input_value,
    kernel_value,
    paper_model,
)
from snfe.noise import NoiseEigenvalues, NoiseSpec, noise_eigenvalue, path_rng, sample_noise_field
from snfe.solver import (
    HistoryBuffer,
    InitialHistory,
    PathRecord,
    SolverState,
    TimeGridSpec,
    em_step,
    find_stationary,
    init_history,
    nonlinear_term_fft,
    nonlinear_term_naive,
    read_snapshot,
    run_path,
    write_snapshot,
)
from snfe.ensemble import EnsembleConfig, EnsembleStats, histogram, mean_field, run_ensemble

__version__ = "0.1.0"
