"""Full and component-specific discrepancy statistics over candidate frequency grids."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from freqband.errors import ContractViolation, DomainError, NumericalError

if TYPE_CHECKING:
    from collections.abc import Iterable

    from freqband.tvspec import LocalSpectra

logger = logging.getLogger(__name__)

IMAGINARY_TOLERANCE = 1e-12
GRID_TOLERANCE = 1e-9


def to_bin(frequency: float, N: int) -> int:
    """The bin k with frequency == k/N, or DomainError when off the 1/N grid."""
    scaled = float(frequency) * N
    k = round(scaled)
    if abs(scaled - k) > GRID_TOLERANCE * max(1.0, abs(scaled)):
        raise DomainError(f"frequency {frequency} is not on the 1/{N} grid")
    return int(k)


def snap_to_grid(frequency: float, N: int) -> int:
    """Nearest bin to an arbitrary frequency."""
    return int(round(float(frequency) * N))


@dataclass
class CandidateGrid:
    """Candidate partition points W/N, (W+1)/N, ..., 1/2 - W/N and the excised subset.

    The two endpoints need bins 0 or N/2, which local spectra never carry, so a fresh
    grid starts with both excluded.
    """

    N: int
    W: int
    excluded: set[int] = field(default_factory=set)

    @property
    def all_bins(self) -> range:
        return range(self.W, self.N // 2 - self.W + 1)

    @property
    def all_candidates(self) -> np.ndarray:
        return np.asarray(self.all_bins) / self.N

    def remaining_bins(self) -> list[int]:
        return [k for k in self.all_bins if k not in self.excluded]

    @property
    def remaining(self) -> np.ndarray:
        return np.asarray(self.remaining_bins(), dtype=np.int64) / self.N

    def exclude(self, bins: Iterable[int]) -> None:
        valid = self.all_bins
        self.excluded.update(k for k in bins if k in valid)

    def excise_neighborhood(self, center: int, width: int) -> None:
        """Remove center - width .. center + width (in bins)."""
        self.exclude(range(center - width, center + width + 1))

    def shrink_to_scale(self, width: int) -> None:
        """Drop candidates whose width-neighborhood would leave the usable bins."""
        half = self.N // 2
        self.exclude(range(self.W, width + 1))
        self.exclude(range(half - width, half - self.W + 1))


def candidate_grid(N: int, W: int) -> CandidateGrid:
    if N < 4 or N % 2:
        raise DomainError(f"window length N must be an even integer >= 4, got {N}")
    if W < 1 or 4 * W > N:
        raise DomainError(f"neighborhood width W={W} must satisfy 1 <= W <= N/4 = {N / 4}")
    grid = CandidateGrid(N=N, W=W)
    grid.exclude((W, N // 2 - W))
    return grid


@dataclass(frozen=True, eq=False)
class DiscrepancyCurve:
    """Discrepancy values at an ascending list of candidate bins."""

    N: int
    W: int
    bins: np.ndarray
    values: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.bins / self.N

    def value_at(self, k: int) -> float:
        matches = np.flatnonzero(self.bins == k)
        if not matches.size:
            raise DomainError(f"bin {k} is not on this curve")
        return float(self.values[matches[0]])

    def argmax(self, among: Iterable[int] | None = None) -> int:
        """Bin of the largest value; ties go to the lowest frequency."""
        mask = np.ones(self.bins.shape, dtype=bool) if among is None else np.isin(
            self.bins, list(among)
        )
        if not mask.any():
            raise DomainError("no candidates left to maximize over")
        masked = np.where(mask, self.values, -np.inf)
        return int(self.bins[int(np.argmax(masked))])

    def to_dict(self, sampling_rate: float | None = None) -> dict:
        out = {
            "W": self.W,
            "frequency": self.frequencies.tolist(),
            "value": self.values.tolist(),
        }
        if sampling_rate is not None:
            out["hz"] = (self.frequencies * sampling_rate).tolist()
        return out


def _require_demeaned(g: LocalSpectra) -> None:
    if not g.demeaned:
        raise ContractViolation("discrepancy statistics need demeaned local spectra")


def _mirror_positions(g: LocalSpectra, center: int, W: int) -> tuple[np.ndarray, np.ndarray]:
    if W < 1:
        raise DomainError(f"neighborhood width must be positive, got {W}")
    offsets = np.arange(1, W + 1)
    return g.positions(center - offsets), g.positions(center + offsets)


def _real_part(total: complex) -> float:
    if abs(total.imag) > IMAGINARY_TOLERANCE * max(abs(total.real), np.finfo(float).tiny):
        raise NumericalError(f"discrepancy has imaginary residue {total.imag:.3e}")
    return float(total.real)


def _factored_statistic(g: LocalSpectra, lower: np.ndarray, upper: np.ndarray) -> float:
    lo = g.coefficients[:, lower]
    hi = g.coefficients[:, upper]
    drift = g.means[lower] - g.means[upper]
    total = 0.0
    # the demeaned difference is formed before squaring, one mirrored pair at a time
    for i in range(lower.size):
        diff = (
            lo[:, i, :, np.newaxis] * lo[:, i, np.newaxis, :].conj()
            - hi[:, i, :, np.newaxis] * hi[:, i, np.newaxis, :].conj()
            - drift[i]
        )
        total += float(np.sum(diff.real**2 + diff.imag**2))
    return total / (g.n_times * lower.size)


def _dense_statistic(g: LocalSpectra, lower: np.ndarray, upper: np.ndarray) -> float:
    diff = g.dense[:, lower] - g.dense[:, upper]
    return _real_part(np.vdot(diff, diff)) / (g.n_times * lower.size)


def dhat(g: LocalSpectra, omega: float, W: int) -> float:
    """Mean squared Frobenius distance between demeaned spectra at omega -/+ k/N."""
    _require_demeaned(g)
    lower, upper = _mirror_positions(g, to_bin(omega, g.N), W)
    if g.coefficients is not None:
        return _factored_statistic(g, lower, upper)
    return _dense_statistic(g, lower, upper)


def _component_sums(
    g: LocalSpectra,
    lower: np.ndarray,
    upper: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
) -> np.ndarray:
    scale = g.n_times * lower.size
    if g.dense is not None:
        diff = g.dense[:, lower][..., rows, cols] - g.dense[:, upper][..., rows, cols]
        return np.sum(np.abs(diff) ** 2, axis=(0, 1)) / scale
    lo = g.coefficients[:, lower]
    hi = g.coefficients[:, upper]
    drift = (g.means[lower] - g.means[upper])[:, rows, cols]
    sums = np.zeros(rows.size)
    # one mirrored pair at a time keeps memory at n_times x pairs
    for i in range(lower.size):
        diff = (
            lo[:, i, rows] * lo[:, i, cols].conj()
            - hi[:, i, rows] * hi[:, i, cols].conj()
            - drift[i]
        )
        sums += np.sum(np.abs(diff) ** 2, axis=0)
    return sums / scale


def dhat_component(g: LocalSpectra, omega: float, W: int, a: int, b: int) -> float:
    """Discrepancy restricted to matrix entry (a, b), 1-based with a <= b."""
    _require_demeaned(g)
    if not 1 <= a <= b <= g.p:
        raise DomainError(f"component ({a}, {b}) must satisfy 1 <= a <= b <= p = {g.p}")
    lower, upper = _mirror_positions(g, to_bin(omega, g.N), W)
    sums = _component_sums(g, lower, upper, np.array([a - 1]), np.array([b - 1]))
    return float(sums[0])


def component_table(g: LocalSpectra, omega: float, W: int) -> np.ndarray:
    """Symmetric p x p table of every component statistic."""
    _require_demeaned(g)
    lower, upper = _mirror_positions(g, to_bin(omega, g.N), W)
    rows, cols = np.triu_indices(g.p)
    sums = _component_sums(g, lower, upper, rows, cols)
    table = np.zeros((g.p, g.p))
    table[rows, cols] = sums
    table[cols, rows] = sums
    return table


def dhat_curve(g: LocalSpectra, grid: CandidateGrid, width: int | None = None) -> DiscrepancyCurve:
    """Evaluate the statistic at every non-excluded candidate of the grid."""
    _require_demeaned(g)
    if grid.N != g.N:
        raise DomainError(f"candidate grid uses N={grid.N}, spectra use N={g.N}")
    W = grid.W if width is None else width
    bins = np.asarray(grid.remaining_bins(), dtype=np.int64)
    values = np.array([dhat(g, k / g.N, W) for k in bins], dtype=np.float64)
    return DiscrepancyCurve(N=g.N, W=W, bins=bins, values=values)
