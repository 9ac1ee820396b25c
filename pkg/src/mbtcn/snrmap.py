"""A priori / a posteriori SNR grids and the per-bin CDF map.

The training target for the network is the instantaneous a priori SNR in dB
pushed through a Gaussian CDF whose per-bin mean and standard deviation are
measured on a sample of the training mixtures.  This module computes the
instantaneous grids, the map and its inverse, and the statistics.
"""

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dsp import AudioSignal, FrameConfig, Spectrogram, stft
from .special import erf, erfinv

XI_DB_CLAMP = 60.0        # instantaneous xi_dB limited to +-60 dB
POWER_FLOOR = 1e-12       # floor on |S|^2 and |D|^2 before the ratio
MAPPED_CLAMP = 1e-7       # mapped values pulled inside (0,1) before inversion
SIGMA_FLOOR_DB = 1e-3     # degenerate per-bin spread floored here

GRID_KINDS = ("xi_db", "xi_linear", "xi_mapped", "gamma")


@dataclass(frozen=True)
class SnrGrid:
    """An (L, K) per-frame, per-bin SNR quantity tagged with its kind."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in GRID_KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("SnrGrid is two-dimensional (frames x bins)")
        if not np.all(np.isfinite(values)):
            raise ValueError("SnrGrid values must be finite")
        if self.kind in ("xi_linear", "gamma") and not np.all(values > 0.0):
            raise ValueError(f"{self.kind} grid must be strictly positive")
        if self.kind == "xi_mapped" and (np.any(values < 0.0) or np.any(values > 1.0)):
            raise ValueError("xi_mapped grid must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class XiMapStats:
    """Per-bin mean and standard deviation of instantaneous xi_dB."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if mu.ndim != 1 or mu.shape != sigma.shape:
            raise ValueError("mu and sigma must be equal-length vectors")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ValueError("stats must be finite")
        if np.any(sigma <= 0.0):
            raise ValueError("sigma must be positive (flooring happens upstream)")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_bins(self) -> int:
        return self.mu.size


def _check_kind(grid: SnrGrid, kind: str):
    if grid.kind != kind:
        raise ValueError(f"expected a {kind} grid, got {grid.kind}")


def instantaneous_xi_db(clean: Spectrogram, noise: Spectrogram) -> SnrGrid:
    """xi_dB = 10 log10(|S|^2 / |D|^2), floored powers, clamped to +-60 dB."""
    if clean.coeffs.shape != noise.coeffs.shape:
        raise ValueError("clean and noise spectrograms must share a shape")
    s_pow = np.maximum(np.abs(clean.coeffs) ** 2, POWER_FLOOR)
    d_pow = np.maximum(np.abs(noise.coeffs) ** 2, POWER_FLOOR)
    xi_db = 10.0 * np.log10(s_pow / d_pow)
    return SnrGrid(np.clip(xi_db, -XI_DB_CLAMP, XI_DB_CLAMP), "xi_db")


def a_posteriori_from_xi(xi: SnrGrid) -> SnrGrid:
    """gamma = xi + 1, the a posteriori SNR implied by an a priori estimate."""
    _check_kind(xi, "xi_linear")
    return SnrGrid(xi.values + 1.0, "gamma")


def map_xi(xi_db: SnrGrid, stats: XiMapStats) -> SnrGrid:
    """Per-bin Gaussian-CDF compression of xi_dB into [0, 1]."""
    _check_kind(xi_db, "xi_db")
    if stats.n_bins != xi_db.shape[1]:
        raise ValueError(
            f"stats cover {stats.n_bins} bins, grid has {xi_db.shape[1]}")
    z = (xi_db.values - stats.mu) / (stats.sigma * np.sqrt(2.0))
    return SnrGrid(0.5 * (1.0 + erf(z)), "xi_mapped")


def unmap_xi_db(mapped: SnrGrid, stats: XiMapStats) -> SnrGrid:
    """Inverse of map_xi back to dB; input clamped inside (0, 1) first."""
    _check_kind(mapped, "xi_mapped")
    if stats.n_bins != mapped.shape[1]:
        raise ValueError(
            f"stats cover {stats.n_bins} bins, grid has {mapped.shape[1]}")
    m = np.clip(mapped.values, MAPPED_CLAMP, 1.0 - MAPPED_CLAMP)
    xi_db = stats.sigma * np.sqrt(2.0) * erfinv(2.0 * m - 1.0) + stats.mu
    return SnrGrid(xi_db, "xi_db")


def unmap_xi(mapped: SnrGrid, stats: XiMapStats) -> SnrGrid:
    """Inverse map straight to the linear a priori SNR estimate."""
    xi_db = unmap_xi_db(mapped, stats)
    return SnrGrid(np.power(10.0, xi_db.values / 10.0), "xi_linear")


def estimate_stats(mixtures: Iterable[tuple[AudioSignal, AudioSignal]],
                   cfg: FrameConfig = FrameConfig(),
                   sigma_floor: float = SIGMA_FLOOR_DB) -> XiMapStats:
    """Pool instantaneous xi_dB over all frames of all mixtures, per bin.

    Accumulation uses the mergeable (count, mean, M2) form, one merge per
    mixture in iteration order, so a parallel map over mixtures followed by
    the same reduction order gives identical results.  Standard deviation is
    the sample (n-1) form, floored at sigma_floor.
    """
    count = 0
    mean = np.zeros(cfg.n_bins)
    m2 = np.zeros(cfg.n_bins)
    for clean, noise in mixtures:
        if len(clean) != len(noise):
            raise ValueError("clean/noise pairs must be time-aligned")
        grid = instantaneous_xi_db(stft(clean, cfg), stft(noise, cfg)).values
        n_b = grid.shape[0]
        mean_b = grid.mean(axis=0)
        m2_b = ((grid - mean_b) ** 2).sum(axis=0)
        if count == 0:
            count, mean, m2 = n_b, mean_b, m2_b
        else:
            delta = mean_b - mean
            total = count + n_b
            mean = mean + delta * (n_b / total)
            m2 = m2 + m2_b + delta * delta * (count * n_b / total)
            count = total
    if count == 0:
        raise ValueError("need at least one mixture to estimate stats")
    if count > 1:
        sigma = np.sqrt(m2 / (count - 1))
    else:
        sigma = np.zeros(cfg.n_bins)
    return XiMapStats(mean, np.maximum(sigma, sigma_floor))
