"""Local Fourier transforms and local periodograms over a sliding time window.

The local periodogram at time t and bin k is the outer product J J* of the windowed
transform

    J(t, k) = (2 pi N)^(-1/2) * sum_{s=0}^{N-1} X[t - N/2 + s] exp(-2 pi i k s / N)

whose window covers samples t - N/2 + 1 .. t + N/2 (1-based). Only fully interior
windows are used, so the time grid is N/2 <= t <= T - N/2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from freqband.errors import ContractViolation, DomainError

if TYPE_CHECKING:
    from collections.abc import Iterable

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_EXPONENT = 0.7

# The sliding recurrence is re-anchored with a direct transform this often so rounding
# error cannot accumulate over long series.
REANCHOR_INTERVAL = 256


def _readonly(array: np.ndarray) -> np.ndarray:
    if array.flags.writeable:
        array = array.copy()
        array.setflags(write=False)
    return array


def _unit_phases(exponents: np.ndarray, n: int, sign: float) -> np.ndarray:
    """exp(sign * 2 pi i * exponents / n) with integer exponents reduced mod n."""
    return np.exp(sign * 2j * np.pi * (exponents % n) / n)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A T x p real-valued observation matrix (rows are time, columns channels)."""

    values: np.ndarray
    sampling_rate: float | None = None
    channel_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, np.newaxis]
        if values.ndim != 2:
            raise DomainError(f"time series must be a T x p matrix, got shape {values.shape}")
        if values.shape[1] < 1:
            raise DomainError("time series needs at least one channel")
        if values.shape[0] < 2:
            raise DomainError("time series needs at least two observations")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            row, col = bad[0]
            raise DomainError(f"non-finite value at row {row + 1}, column {col + 1}")
        if self.sampling_rate is not None and not self.sampling_rate > 0:
            raise DomainError(f"sampling rate must be positive, got {self.sampling_rate}")
        if self.channel_names is not None:
            names = tuple(self.channel_names)
            if len(names) != values.shape[1]:
                raise DomainError(
                    f"{len(names)} channel names given for {values.shape[1]} channels"
                )
            object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "values", _readonly(values))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    def names(self) -> tuple[str, ...]:
        """Channel names, defaulting to ch1..chp."""
        if self.channel_names is not None:
            return self.channel_names
        return tuple(f"ch{i + 1}" for i in range(self.channels))

    def scaled(self, factor: float) -> TimeSeries:
        return replace(self, values=self.values * factor)

    def permuted(self, order: Iterable[int]) -> TimeSeries:
        """Reorder channels (0-based column indices)."""
        order = list(order)
        names = tuple(self.names()[i] for i in order)
        return TimeSeries(self.values[:, order], self.sampling_rate, names)


@dataclass(frozen=True)
class WindowConfig:
    """Local periodogram window: length N (even) and time-grid stride."""

    N: int
    stride: int = 1

    def __post_init__(self) -> None:
        if self.N < 2 or self.N % 2:
            raise DomainError(f"window length N must be an even integer >= 2, got {self.N}")
        if not 1 <= self.stride <= self.N:
            raise DomainError(f"stride must lie in [1, N={self.N}], got {self.stride}")

    @classmethod
    def for_length(
        cls, length: int, exponent: float = DEFAULT_WINDOW_EXPONENT, stride: int = 1
    ) -> WindowConfig:
        """Default window N = floor(T^exponent), decremented to the nearest even value."""
        n = math.floor(length**exponent + 1e-9)
        if n % 2:
            n -= 1
        return cls(N=max(n, 2), stride=stride)

    @property
    def half(self) -> int:
        return self.N // 2

    @property
    def max_bin(self) -> int:
        return self.N // 2 - 1

    def check_fits(self, length: int) -> None:
        if length < 2 * self.N:
            raise DomainError(f"series length T={length} is shorter than 2N={2 * self.N}")

    def time_grid(self, length: int) -> np.ndarray:
        """Time indices (1-based) whose windows lie fully inside the series."""
        return np.arange(self.half, length - self.half + 1, self.stride)

    def check_bin(self, k: int) -> None:
        if not 1 <= k <= self.max_bin:
            raise DomainError(f"frequency bin k={k} outside [1, {self.max_bin}] for N={self.N}")


@dataclass(frozen=True, eq=False)
class LocalSpectra:
    """Local periodogram matrices indexed by (time-grid position, frequency bin).

    Spectra computed from data keep the transform coefficients J (n_times x n_bins x p)
    and, once demeaned, the per-bin time averages of J J*. Synthetic spectra may instead
    carry explicit matrices in `dense`. `entries` always returns the p x p matrices.
    """

    N: int
    bins: tuple[int, ...]
    time_grid: np.ndarray
    coefficients: np.ndarray | None = None
    means: np.ndarray | None = None
    dense: np.ndarray | None = None
    demeaned: bool = False
    _positions: dict[int, int] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if (self.coefficients is None) == (self.dense is None):
            raise ContractViolation("local spectra need exactly one of coefficients or dense")
        if not self.bins:
            raise DomainError("local spectra need at least one frequency bin")
        grid = _readonly(np.asarray(self.time_grid, dtype=np.int64))
        object.__setattr__(self, "time_grid", grid)
        object.__setattr__(self, "bins", tuple(int(k) for k in self.bins))
        for name in ("coefficients", "means", "dense"):
            array = getattr(self, name)
            if array is not None:
                object.__setattr__(self, name, _readonly(np.asarray(array, dtype=np.complex128)))
        if self.demeaned and self.coefficients is not None and self.means is None:
            raise ContractViolation("demeaned coefficient spectra need their time averages")
        object.__setattr__(self, "_positions", {k: i for i, k in enumerate(self.bins)})

    @classmethod
    def from_entries(
        cls,
        entries: np.ndarray,
        N: int,
        bins: Iterable[int],
        time_grid: Iterable[int] | None = None,
        demeaned: bool = False,
    ) -> LocalSpectra:
        """Wrap explicit p x p matrices of shape (n_times, n_bins, p, p)."""
        entries = np.asarray(entries, dtype=np.complex128)
        if entries.ndim != 4 or entries.shape[2] != entries.shape[3]:
            raise DomainError(f"entries must have shape (times, bins, p, p), got {entries.shape}")
        grid = np.arange(entries.shape[0]) if time_grid is None else np.asarray(list(time_grid))
        return cls(N=N, bins=tuple(bins), time_grid=grid, dense=entries, demeaned=demeaned)

    @property
    def p(self) -> int:
        if self.coefficients is not None:
            return self.coefficients.shape[2]
        return self.dense.shape[2]

    @property
    def n_times(self) -> int:
        return self.time_grid.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        return np.asarray(self.bins) / self.N

    def positions(self, bins: Iterable[int]) -> np.ndarray:
        """Storage positions of the given bins."""
        try:
            return np.array([self._positions[int(k)] for k in bins], dtype=np.intp)
        except KeyError as exc:
            raise DomainError(f"frequency bin {exc.args[0]} is not available") from None

    @property
    def entries(self) -> np.ndarray:
        """The p x p matrices, shape (n_times, n_bins, p, p)."""
        if self.dense is not None:
            return self.dense
        j = self.coefficients
        matrices = np.einsum("tka,tkb->tkab", j, j.conj())
        if self.demeaned:
            matrices -= self.means[np.newaxis]
        return matrices


def _normalize_bins(bins: Iterable[int], cfg: WindowConfig) -> np.ndarray:
    values = sorted({int(k) for k in bins})
    if not values:
        raise DomainError("at least one frequency bin is required")
    for k in values:
        cfg.check_bin(k)
    return np.asarray(values, dtype=np.int64)


def local_dft(ts: TimeSeries, t: int, cfg: WindowConfig, k: int) -> np.ndarray:
    """Windowed transform J(t, k) of every channel, by direct summation."""
    if not cfg.half <= t <= ts.length - cfg.half:
        raise DomainError(
            f"time index t={t} has no interior window (valid {cfg.half}..{ts.length - cfg.half})"
        )
    cfg.check_bin(k)
    start = t - cfg.half
    window = ts.values[start : start + cfg.N]
    phases = _unit_phases(k * np.arange(cfg.N), cfg.N, -1.0)
    return (phases @ window) / math.sqrt(2 * math.pi * cfg.N)


def _sliding_dft(values: np.ndarray, n: int, bins: np.ndarray) -> np.ndarray:
    """Unnormalized transforms of every length-n window start, shape (T - n + 1, bins, p).

    Uses F(s + m) = e^{i theta m} [F(s) + sum_{j<m} e^{-i theta j} (x[s+j+n] - x[s+j])],
    the one-sample update F(s + 1) = e^{i theta} (F(s) - x[s] + x[s + n]) unrolled as a
    cumulative sum, anchored by a direct transform every REANCHOR_INTERVAL starts.
    """
    length, p = values.shape
    n_starts = length - n + 1
    out = np.empty((n_starts, bins.size, p), dtype=np.complex128)
    kernel = _unit_phases(np.outer(bins, np.arange(n)), n, -1.0)
    for block_start in range(0, n_starts, REANCHOR_INTERVAL):
        steps = min(REANCHOR_INTERVAL, n_starts - block_start)
        anchor = kernel @ values[block_start : block_start + n]
        drift = np.zeros((steps, bins.size, p), dtype=np.complex128)
        if steps > 1:
            offsets = np.arange(steps - 1)
            incoming = (
                values[block_start + n : block_start + n + steps - 1]
                - values[block_start : block_start + steps - 1]
            )
            phase = _unit_phases(np.outer(offsets, bins), n, -1.0)
            np.cumsum(phase[:, :, np.newaxis] * incoming[:, np.newaxis, :], axis=0, out=drift[1:])
        rotation = _unit_phases(np.outer(np.arange(steps), bins), n, 1.0)
        out[block_start : block_start + steps] = rotation[:, :, np.newaxis] * (anchor + drift)
    return out


def sliding_spectra(ts: TimeSeries, cfg: WindowConfig, bins: Iterable[int]) -> LocalSpectra:
    """Local periodograms at every interior time-grid point for the requested bins."""
    bin_array = _normalize_bins(bins, cfg)
    cfg.check_fits(ts.length)
    grid = cfg.time_grid(ts.length)
    transforms = _sliding_dft(ts.values, cfg.N, bin_array)
    coefficients = transforms[grid - cfg.half] / math.sqrt(2 * math.pi * cfg.N)
    logger.debug(
        "local spectra: N=%d, %d time points, %d bins, p=%d",
        cfg.N,
        grid.size,
        bin_array.size,
        ts.channels,
    )
    return LocalSpectra(
        N=cfg.N, bins=tuple(bin_array.tolist()), time_grid=grid, coefficients=coefficients
    )


def demean(spec: LocalSpectra) -> LocalSpectra:
    """Subtract, per bin and matrix entry, the average over the time grid."""
    if spec.demeaned:
        raise ContractViolation("local spectra are already demeaned")
    if spec.coefficients is not None:
        j = spec.coefficients
        means = np.einsum("tka,tkb->kab", j, j.conj()) / spec.n_times
        return replace(spec, means=means, demeaned=True)
    dense = spec.dense - spec.dense.mean(axis=0, keepdims=True)
    return replace(spec, dense=dense, demeaned=True)
