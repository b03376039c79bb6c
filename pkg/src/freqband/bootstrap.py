"""Null-hypothesis resampling: kernel time-varying covariance, PSD square root, p-values.

Under the null, X_t = sigma(t/T) Z_t with Z_t i.i.d. N(0, I_p). sigma is the symmetric
square root of the kernel-smoothed covariance (1/T) sum_s X_s X_s' K_h(u - s/T).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import psutil

from freqband.discrepancy import component_table, dhat, to_bin
from freqband.errors import DomainError
from freqband.tvspec import TimeSeries, demean, sliding_spectra

if TYPE_CHECKING:
    from collections.abc import Callable

    from freqband.tvspec import WindowConfig

logger = logging.getLogger(__name__)

DEFAULT_BANDWIDTH_EXPONENT = 0.3
DEFAULT_RESAMPLES = 100
DEFAULT_ALPHA = 0.05
ASYMMETRY_TOLERANCE = 1e-8


def default_workers() -> int:
    """Physical cores available for resampling."""
    return psutil.cpu_count(logical=False) or 1


def triangular(x: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(x))


KERNELS: dict[str, Callable[[np.ndarray], np.ndarray]] = {"triangular": triangular}


@dataclass(frozen=True)
class KernelConfig:
    """Smoothing kernel and bandwidth h (a fraction of rescaled time)."""

    bandwidth: float
    kernel: str = "triangular"

    def __post_init__(self) -> None:
        if not 0.0 < self.bandwidth < 1.0:
            raise DomainError(f"bandwidth must lie in (0, 1), got {self.bandwidth}")
        if self.kernel not in KERNELS:
            raise DomainError(f"unknown kernel {self.kernel!r}; choose from {sorted(KERNELS)}")

    @classmethod
    def for_length(cls, length: int, exponent: float = DEFAULT_BANDWIDTH_EXPONENT) -> KernelConfig:
        return cls(bandwidth=length**-exponent)

    def weights(self, offsets: np.ndarray) -> np.ndarray:
        """K_h(v) = K(v / h) / h."""
        return KERNELS[self.kernel](offsets / self.bandwidth) / self.bandwidth


@dataclass(frozen=True)
class BootstrapConfig:
    """Resample count, significance level, seed, and worker pool size."""

    resamples: int = DEFAULT_RESAMPLES
    alpha: float = DEFAULT_ALPHA
    base_seed: int = 0
    workers: int = field(default_factory=default_workers, compare=False)

    def __post_init__(self) -> None:
        if self.resamples < 1:
            raise DomainError(f"need at least one resample, got {self.resamples}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.base_seed < 0:
            raise DomainError(f"base seed must be non-negative, got {self.base_seed}")
        if self.workers < 1:
            raise DomainError(f"worker count must be positive, got {self.workers}")


def derive_seed(base_seed: int, *key: int) -> int:
    """A seed for one test, determined only by the base seed and an integer key."""
    sequence = np.random.SeedSequence(base_seed, spawn_key=tuple(int(k) for k in key))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def tv_covariance(ts: TimeSeries, u: float, cfg: KernelConfig) -> np.ndarray:
    """Kernel estimate of the contemporaneous covariance at rescaled time u."""
    length = ts.length
    times = np.arange(1, length + 1) / length
    weights = cfg.weights(u - times)
    if not np.any(weights > 0):
        raise DomainError(f"no kernel weight at u={u} with bandwidth {cfg.bandwidth}")
    x = ts.values
    matrix = (x * weights[:, np.newaxis]).T @ x / length
    return (matrix + matrix.T) / 2


def _covariance_path(ts: TimeSeries, cfg: KernelConfig) -> np.ndarray:
    """tv_covariance at every u = t/T, shape (T, p, p), as one convolution per entry."""
    length, p = ts.values.shape
    reach = min(length - 1, math.ceil(cfg.bandwidth * length))
    lags = np.arange(-reach, reach + 1)
    taps = cfg.weights(lags / length) / length
    x = ts.values
    out = np.empty((length, p, p))
    for a in range(p):
        for b in range(a, p):
            smoothed = np.convolve(x[:, a] * x[:, b], taps, mode="full")[reach : reach + length]
            out[:, a, b] = smoothed
            out[:, b, a] = smoothed
    return out


def _sqrt_stack(stack: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(stack)
    roots = np.sqrt(np.clip(eigvals, 0.0, None))
    out = (eigvecs * roots[..., np.newaxis, :]) @ np.swapaxes(eigvecs, -1, -2)
    return (out + np.swapaxes(out, -1, -2)) / 2


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues floored at zero."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > ASYMMETRY_TOLERANCE * max(scale, np.finfo(float).tiny):
        raise DomainError("matrix is not symmetric")
    return _sqrt_stack(m[np.newaxis])[0]


@dataclass(frozen=True, eq=False)
class NullModel:
    """sigma-hat(t/T) for one dataset; shared read-only by every resample."""

    series: TimeSeries
    kernel: KernelConfig
    sigma: np.ndarray

    @classmethod
    def fit(cls, ts: TimeSeries, cfg: KernelConfig) -> NullModel:
        sigma = _sqrt_stack(_covariance_path(ts, cfg))
        sigma.setflags(write=False)
        logger.debug("null model fitted: T=%d, p=%d, h=%.4f", ts.length, ts.channels, cfg.bandwidth)
        return cls(series=ts, kernel=cfg, sigma=sigma)

    def resample(self, seed: int) -> TimeSeries:
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(self.series.values.shape)
        values = np.einsum("tab,tb->ta", self.sigma, z)
        return TimeSeries(values, self.series.sampling_rate, self.series.channel_names)


def resample(ts: TimeSeries, cfg: KernelConfig, seed: int) -> TimeSeries:
    """One Gaussian resample sigma-hat(t/T) Z_t."""
    return NullModel.fit(ts, cfg).resample(seed)


@dataclass(frozen=True, eq=False)
class BootstrapTest:
    """Observed statistic, its bootstrap replicates and the resulting p-value."""

    statistic: float
    null_statistics: np.ndarray

    @property
    def pvalue(self) -> float:
        exceed = int(np.count_nonzero(self.null_statistics > self.statistic))
        return exceed / self.null_statistics.size

    def significant(self, alpha: float) -> bool:
        return self.pvalue <= alpha


@dataclass(frozen=True, eq=False)
class ComponentEnsemble:
    """Observed p x p component table and one table per resample."""

    observed: np.ndarray
    null_tables: np.ndarray

    def pvalues(self) -> np.ndarray:
        return np.mean(self.null_tables > self.observed[np.newaxis], axis=0)


def _mirror_bins(center: int, W: int) -> np.ndarray:
    offsets = np.arange(1, W + 1)
    return np.concatenate([center - offsets, center + offsets])


def _run_ensemble(task: Callable[[int], object], cfg: BootstrapConfig) -> list:
    """task(r) for r = 0..R-1, returned in resample order."""
    workers = min(cfg.workers, cfg.resamples)
    if workers <= 1:
        return [task(r) for r in range(cfg.resamples)]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="freqband-boot") as pool:
        return list(pool.map(task, range(cfg.resamples)))


def pvalue_full(
    ts: TimeSeries,
    omega: float,
    W: int,
    wcfg: WindowConfig,
    kcfg: KernelConfig,
    bcfg: BootstrapConfig,
    *,
    null: NullModel | None = None,
) -> BootstrapTest:
    """Bootstrap test of omega as a partition point; resample r uses seed base_seed + r."""
    center = to_bin(omega, wcfg.N)
    bins = _mirror_bins(center, W)

    def statistic(series: TimeSeries) -> float:
        return dhat(demean(sliding_spectra(series, wcfg, bins)), center / wcfg.N, W)

    observed = statistic(ts)
    model = null if null is not None else NullModel.fit(ts, kcfg)
    replicates = _run_ensemble(
        lambda r: statistic(model.resample(bcfg.base_seed + r)), bcfg
    )
    test = BootstrapTest(statistic=observed, null_statistics=np.asarray(replicates))
    logger.debug(
        "test omega=%.4f W=%d: D=%.4g p=%.3f (seed %d)",
        center / wcfg.N,
        W,
        observed,
        test.pvalue,
        bcfg.base_seed,
    )
    return test


def component_ensemble(
    ts: TimeSeries,
    omega: float,
    W: int,
    wcfg: WindowConfig,
    kcfg: KernelConfig,
    bcfg: BootstrapConfig,
    *,
    null: NullModel | None = None,
) -> ComponentEnsemble:
    """Component tables for the data and for R shared resamples at one frequency."""
    center = to_bin(omega, wcfg.N)
    bins = _mirror_bins(center, W)

    def table(series: TimeSeries) -> np.ndarray:
        return component_table(demean(sliding_spectra(series, wcfg, bins)), center / wcfg.N, W)

    observed = table(ts)
    model = null if null is not None else NullModel.fit(ts, kcfg)
    replicates = _run_ensemble(lambda r: table(model.resample(bcfg.base_seed + r)), bcfg)
    return ComponentEnsemble(observed=observed, null_tables=np.stack(replicates))


def pvalue_component(
    ts: TimeSeries,
    omega: float,
    W: int,
    a: int,
    b: int,
    wcfg: WindowConfig,
    kcfg: KernelConfig,
    bcfg: BootstrapConfig,
    *,
    null: NullModel | None = None,
) -> BootstrapTest:
    """Bootstrap test of component (a, b), 1-based with a <= b."""
    if not 1 <= a <= b <= ts.channels:
        raise DomainError(f"component ({a}, {b}) must satisfy 1 <= a <= b <= p = {ts.channels}")
    ensemble = component_ensemble(ts, omega, W, wcfg, kcfg, bcfg, null=null)
    return BootstrapTest(
        statistic=float(ensemble.observed[a - 1, b - 1]),
        null_statistics=ensemble.null_tables[:, a - 1, b - 1],
    )
