"""Iterative and multiscale partition point detection, and component attribution."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from freqband.bootstrap import (
    BootstrapConfig,
    KernelConfig,
    NullModel,
    component_ensemble,
    derive_seed,
    pvalue_full,
)
from freqband.discrepancy import DiscrepancyCurve, candidate_grid, dhat_curve, to_bin
from freqband.errors import DomainError
from freqband.tvspec import TimeSeries, WindowConfig, demean, sliding_spectra

logger = logging.getLogger(__name__)

DEFAULT_W_MIN_DIVISOR = 8
DEFAULT_W_MAX_DIVISOR = 4
DEFAULT_SCALE_COUNT = 5

# spawn-key tag separating attribution ensembles from detection tests
ATTRIBUTION_KEY = 1_000_003


@dataclass(frozen=True)
class DetectionConfig:
    """Window, kernel and bootstrap settings used throughout one analysis."""

    window: WindowConfig
    kernel: KernelConfig
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)

    @property
    def alpha(self) -> float:
        return self.bootstrap.alpha

    @classmethod
    def for_length(
        cls,
        length: int,
        *,
        stride: int = 1,
        resamples: int = 100,
        alpha: float = 0.05,
        base_seed: int = 0,
        workers: int | None = None,
    ) -> DetectionConfig:
        """N = floor(T^0.7) (even), h = T^-0.3."""
        bootstrap = BootstrapConfig(resamples=resamples, alpha=alpha, base_seed=base_seed)
        if workers is not None:
            bootstrap = replace(bootstrap, workers=workers)
        return cls(
            window=WindowConfig.for_length(length, stride=stride),
            kernel=KernelConfig.for_length(length),
            bootstrap=bootstrap,
        )


@dataclass(frozen=True)
class ScaleSet:
    """Ascending neighborhood half-widths W_1 < ... < W_q (in bins)."""

    widths: tuple[int, ...]

    def __post_init__(self) -> None:
        widths = tuple(sorted({int(w) for w in self.widths}))
        if not widths:
            raise DomainError("scale set must contain at least one width")
        if widths[0] < 1:
            raise DomainError(f"neighborhood widths must be positive, got {widths[0]}")
        object.__setattr__(self, "widths", widths)

    @classmethod
    def default(
        cls,
        N: int,
        w_min_divisor: int = DEFAULT_W_MIN_DIVISOR,
        w_max_divisor: int = DEFAULT_W_MAX_DIVISOR,
        count: int = DEFAULT_SCALE_COUNT,
    ) -> ScaleSet:
        """count equally spaced integers from floor(N/w_min_divisor) to floor(N/w_max_divisor)."""
        low, high = N // w_min_divisor, N // w_max_divisor
        if low < 1:
            raise DomainError(f"N={N} is too small for W_min = N/{w_min_divisor}")
        if count < 1:
            raise DomainError(f"need at least one scale, got {count}")
        return cls(tuple(np.rint(np.linspace(low, high, count)).astype(int).tolist()))

    def validate_for(self, N: int) -> None:
        for width in self.widths:
            if 4 * width > N:
                raise DomainError(f"width W={width} exceeds N/4 = {N / 4}")

    def __iter__(self):
        return iter(self.widths)

    def __len__(self) -> int:
        return len(self.widths)


@dataclass(frozen=True)
class PartitionPoint:
    """One accepted partition point."""

    bin: int
    frequency: float
    width: int
    scale_index: int
    pvalue: float
    statistic: float
    order: int
    hz: float | None = None

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "frequency": self.frequency,
            "hz": self.hz,
            "bin": self.bin,
            "W": self.width,
            "scale_index": self.scale_index,
            "pvalue": self.pvalue,
            "statistic": self.statistic,
        }


@dataclass
class PartitionResult:
    """Accepted points in detection order, plus the discrepancy curve of each scale."""

    N: int
    scales: ScaleSet
    points: list[PartitionPoint] = field(default_factory=list)
    curves: dict[int, DiscrepancyCurve] = field(default_factory=dict)
    sampling_rate: float | None = None

    @property
    def k_hat(self) -> int:
        return len(self.points)

    def frequencies(self) -> list[float]:
        return sorted(point.frequency for point in self.points)

    def bands(self) -> list[tuple[float, float]]:
        """Estimated frequency bands covering (0, 1/2)."""
        edges = [0.0, *self.frequencies(), 0.5]
        return list(zip(edges[:-1], edges[1:], strict=True))

    def to_dict(self) -> dict:
        rate = self.sampling_rate
        bands = [
            {"low": low, "high": high}
            | ({"low_hz": low * rate, "high_hz": high * rate} if rate else {})
            for low, high in self.bands()
        ]
        return {
            "N": self.N,
            "scales": list(self.scales.widths),
            "k_hat": self.k_hat,
            "points": [point.to_dict() for point in self.points],
            "bands": bands,
            "curves": [curve.to_dict(rate) for curve in self.curves.values()],
        }


@dataclass(frozen=True, eq=False)
class ComponentAttribution:
    """Component p-values at one partition point with Bonferroni significance."""

    frequency: float
    width: int
    pvalues: np.ndarray
    statistics: np.ndarray
    alpha: float

    @property
    def tests(self) -> int:
        p = self.pvalues.shape[0]
        return p * (p + 1) // 2

    @property
    def threshold(self) -> float:
        return self.alpha / self.tests

    @property
    def significant(self) -> np.ndarray:
        return self.pvalues <= self.threshold

    def significant_pairs(self) -> list[tuple[int, int]]:
        """1-based (a, b) pairs with a <= b that pass the adjusted threshold."""
        rows, cols = np.nonzero(np.triu(self.significant))
        return [(int(a) + 1, int(b) + 1) for a, b in zip(rows, cols, strict=True)]

    def to_dict(self, sampling_rate: float | None = None) -> dict:
        return {
            "frequency": self.frequency,
            "hz": self.frequency * sampling_rate if sampling_rate else None,
            "W": self.width,
            "alpha": self.alpha,
            "tests": self.tests,
            "threshold": self.threshold,
            "pvalues": self.pvalues.tolist(),
            "statistics": self.statistics.tolist(),
            "significant": self.significant.tolist(),
            "significant_pairs": [list(pair) for pair in self.significant_pairs()],
        }


def _observed_spectra(ts: TimeSeries, cfg: DetectionConfig):
    window = cfg.window
    window.check_fits(ts.length)
    return demean(sliding_spectra(ts, window, range(1, window.max_bin + 1)))


def detect_multiscale(
    ts: TimeSeries, scales: ScaleSet, cfg: DetectionConfig, *, null: NullModel | None = None
) -> PartitionResult:
    """Multiscale band estimation: finest scale first, keeping earlier points."""
    N = cfg.window.N
    scales.validate_for(N)
    spectra = _observed_spectra(ts, cfg)
    model = null if null is not None else NullModel.fit(ts, cfg.kernel)
    result = PartitionResult(N=N, scales=scales, sampling_rate=ts.sampling_rate)
    grid = candidate_grid(N, scales.widths[0])
    for scale_index, width in enumerate(scales):
        grid.shrink_to_scale(width)
        for point in result.points:
            grid.excise_neighborhood(point.bin, width)
        curve = dhat_curve(spectra, grid, width=width)
        result.curves[width] = curve
        iteration = 0
        while remaining := grid.remaining_bins():
            center = curve.argmax(remaining)
            seed = derive_seed(cfg.bootstrap.base_seed, scale_index, iteration)
            iteration += 1
            test = pvalue_full(
                ts,
                center / N,
                width,
                cfg.window,
                cfg.kernel,
                replace(cfg.bootstrap, base_seed=seed),
                null=model,
            )
            if not test.significant(cfg.alpha):
                break
            point = PartitionPoint(
                bin=center,
                frequency=center / N,
                width=width,
                scale_index=scale_index,
                pvalue=test.pvalue,
                statistic=test.statistic,
                order=result.k_hat + 1,
                hz=center / N * ts.sampling_rate if ts.sampling_rate else None,
            )
            result.points.append(point)
            grid.excise_neighborhood(center, width)
            logger.info(
                "partition point %.4f accepted at W=%d (p=%.3f)",
                point.frequency,
                width,
                point.pvalue,
            )
        logger.info("scale W=%d done: %d points so far", width, result.k_hat)
    return result


def detect_single_scale(ts: TimeSeries, W: int, cfg: DetectionConfig) -> list[PartitionPoint]:
    """Iterative argmax/test/excise search at one neighborhood width."""
    return detect_multiscale(ts, ScaleSet((W,)), cfg).points


def select_w(result: PartitionResult, scales: ScaleSet) -> int:
    """Largest width at which a point was added, or the largest width if none was."""
    if not result.points:
        return scales.widths[-1]
    return scales.widths[max(point.scale_index for point in result.points)]


def attribute_components(
    ts: TimeSeries,
    omega_c: float,
    W: int,
    cfg: DetectionConfig,
    *,
    null: NullModel | None = None,
) -> ComponentAttribution:
    """Bootstrap p-values for every component (a, b), a <= b, on one shared ensemble."""
    center = to_bin(omega_c, cfg.window.N)
    seed = derive_seed(cfg.bootstrap.base_seed, ATTRIBUTION_KEY, center)
    ensemble = component_ensemble(
        ts,
        omega_c,
        W,
        cfg.window,
        cfg.kernel,
        replace(cfg.bootstrap, base_seed=seed),
        null=null,
    )
    attribution = ComponentAttribution(
        frequency=center / cfg.window.N,
        width=W,
        pvalues=ensemble.pvalues(),
        statistics=ensemble.observed,
        alpha=cfg.alpha,
    )
    logger.info(
        "components at %.4f: %d of %d significant",
        attribution.frequency,
        len(attribution.significant_pairs()),
        attribution.tests,
    )
    return attribution
