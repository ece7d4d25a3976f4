"""Spatially correlated Q-Wiener increments on the periodic grid.

A unit-scaled noise field is synthesized spectrally,

    eta(x_j) = sum_k lambda_|k| z_k exp(2 pi i k j / N),  k = -N/2+1 .. N/2,

with z_0, z_{N/2} real standard normal and z_k (0 < k < N/2) complex
standard normal (real and imaginary parts of variance 1/2), z_{-k} = conj(z_k).
The normalized DFT coefficients of eta then satisfy E|eta_hat_k|^2 = lambda_k^2,
so mode 0 (the spatial mean) has unit variance. The stepper scales the field
by epsilon * sqrt(h_t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from snfe.errors import ConfigError
from snfe.model import DomainGrid

LAMBDA_SCALES = ("mode-index", "wavenumber")


@dataclass(frozen=True)
class NoiseSpec:
    epsilon: float = 0.0
    xi: float = 1.0
    master_seed: int = 0
    lambda_scale: str = "mode-index"

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigError("noise.epsilon", f"must be >= 0, got {self.epsilon!r}")
        if not self.xi > 0:
            raise ConfigError("noise.xi", f"must be > 0, got {self.xi!r}")
        if self.lambda_scale not in LAMBDA_SCALES:
            raise ConfigError("noise.lambda_scale", f"must be one of {LAMBDA_SCALES}, got {self.lambda_scale!r}")


def noise_eigenvalue(k: float, xi: float) -> float:
    """lambda_k with lambda_k^2 = exp(-xi^2 k^2 / (4 pi))."""
    return math.exp(-(xi**2) * k**2 / (8.0 * math.pi))


@dataclass(frozen=True)
class NoiseEigenvalues:
    lambdas: np.ndarray  # length N//2 + 1

    @property
    def N(self) -> int:
        return 2 * (len(self.lambdas) - 1)

    @classmethod
    def build(cls, grid: DomainGrid, xi: float, scale: str = "mode-index") -> "NoiseEigenvalues":
        k = np.arange(grid.N // 2 + 1, dtype=float)
        if scale == "wavenumber":
            k = math.pi * k / grid.l
        elif scale != "mode-index":
            raise ConfigError("noise.lambda_scale", f"unknown scale {scale!r}")
        lam = np.exp(-(xi**2) * k**2 / (8.0 * math.pi))
        lam.setflags(write=False)
        return cls(lam)

    def covariance(self, lag) -> np.ndarray:
        """Exact covariance of the unit field between points ``lag`` indices apart."""
        lam2 = self.lambdas**2
        c = np.full(len(lam2), 2.0)
        c[0] = 1.0
        c[-1] = 1.0
        lag = np.atleast_1d(np.asarray(lag))
        k = np.arange(len(lam2))
        return (c * lam2 * np.cos(2 * np.pi * np.outer(lag, k) / self.N)).sum(axis=1)


def path_rng(master_seed: int, path_index: int = 0) -> np.random.Generator:
    """Counter-based stream for one path, independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), int(path_index)])))


def sample_noise_field(grid: DomainGrid, eig: NoiseEigenvalues, rng: np.random.Generator) -> np.ndarray:
    N = grid.N
    if eig.N != N:
        raise ConfigError("noise", f"eigenvalues built for N={eig.N}, grid has N={N}")
    M = N // 2 + 1
    draws = rng.standard_normal((2, M))
    z = (draws[0] + 1j * draws[1]) * math.sqrt(0.5)
    z[0] = draws[0, 0]
    z[-1] = draws[0, -1]
    return np.fft.irfft(eig.lambdas * z, n=N, norm="forward")
