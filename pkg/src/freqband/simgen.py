"""Simulation schemes with known frequency bands, detection scoring, and table replication.

Every scheme is built from latent univariate series with a piecewise-in-frequency,
time-varying spectrum. Channels are lagged copies of a latent: X[k, t] = z[t + k - 1].
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, ClassVar

import numpy as np
import pandas as pd

from freqband.bootstrap import derive_seed
from freqband.errors import DomainError, UsageError
from freqband.search import DetectionConfig, PartitionResult, ScaleSet, detect_multiscale
from freqband.tvspec import TimeSeries

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

logger = logging.getLogger(__name__)

SYNTH_CHUNK = 1024
LEVEL_GRID_POINTS = 201
LEVEL_TOLERANCE = 1e-9


# -- amplitude functions of rescaled time ---------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: float

    kind: ClassVar[str] = "constant"

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.full(np.shape(u), float(self.value))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class Linear:
    """intercept + slope * u"""

    intercept: float
    slope: float

    kind: ClassVar[str] = "linear"

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.intercept + self.slope * np.asarray(u, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "intercept": self.intercept, "slope": self.slope}


@dataclass(frozen=True)
class Sinusoid:
    """offset + amplitude * fn(2 pi cycles u + phase), fn being sin or cos."""

    offset: float
    amplitude: float
    cycles: float
    phase: float = 0.0
    function: str = "sin"

    kind: ClassVar[str] = "sinusoid"

    def __post_init__(self) -> None:
        if self.function not in ("sin", "cos"):
            raise DomainError(f"sinusoid function must be 'sin' or 'cos', got {self.function!r}")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        fn = np.sin if self.function == "sin" else np.cos
        angle = 2 * math.pi * self.cycles * np.asarray(u, dtype=np.float64) + self.phase
        return self.offset + self.amplitude * fn(angle)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "offset": self.offset,
            "amplitude": self.amplitude,
            "cycles": self.cycles,
            "phase": self.phase,
            "function": self.function,
        }


Level = Constant | Linear | Sinusoid
LEVELS: dict[str, type[Level]] = {cls.kind: cls for cls in (Constant, Linear, Sinusoid)}


def level_from_dict(data: dict) -> Level:
    fields = dict(data)
    kind = fields.pop("kind", None)
    if kind not in LEVELS:
        raise UsageError(f"unknown level kind {kind!r}; choose from {sorted(LEVELS)}")
    try:
        return LEVELS[kind](**fields)
    except TypeError as exc:
        raise UsageError(f"bad {kind} level {data}: {exc}") from None


# -- banded spectra ---------------------------------------------------------------------


@dataclass(frozen=True)
class Band:
    """A frequency interval and its spectral level.

    closed="left" means [low, high), closed="right" means (low, high].
    """

    low: float
    high: float
    level: Level
    closed: str = "left"

    def __post_init__(self) -> None:
        if not 0.0 <= self.low < self.high <= 0.5:
            raise DomainError(f"band ({self.low}, {self.high}) must lie inside (0, 1/2)")
        if self.closed not in ("left", "right"):
            raise DomainError(f"closed must be 'left' or 'right', got {self.closed!r}")

    def contains(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=np.float64)
        if self.closed == "left":
            return (omega >= self.low) & (omega < self.high)
        return (omega > self.low) & (omega <= self.high)

    def to_dict(self) -> dict:
        return {
            "low": self.low,
            "high": self.high,
            "closed": self.closed,
            "level": self.level.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Band:
        return cls(
            low=float(data["low"]),
            high=float(data["high"]),
            level=level_from_dict(data["level"]),
            closed=data.get("closed", "left"),
        )


@dataclass(frozen=True)
class BandSpec:
    """Ordered bands partitioning (0, 1/2), each with a time-varying level."""

    bands: tuple[Band, ...]

    def __post_init__(self) -> None:
        bands = tuple(self.bands)
        if not bands:
            raise DomainError("a band specification needs at least one band")
        if bands[0].low != 0.0 or bands[-1].high != 0.5:
            raise DomainError("bands must cover (0, 1/2)")
        for left, right in itertools.pairwise(bands):
            if not math.isclose(left.high, right.low):
                raise DomainError(f"bands leave a gap or overlap at {left.high} / {right.low}")
        grid = np.linspace(0.0, 1.0, LEVEL_GRID_POINTS)
        for band in bands:
            if np.min(band.level(grid)) < -1e-12:
                raise DomainError(f"level of band ({band.low}, {band.high}) goes negative")
        object.__setattr__(self, "bands", bands)

    @property
    def boundaries(self) -> tuple[float, ...]:
        """Interior frequencies where the time-demeaned level changes.

        Levels that differ only by a constant offset have the same demeaned spectrum
        and so do not separate bands.
        """
        grid = np.linspace(0.0, 1.0, LEVEL_GRID_POINTS)
        points = []
        for left, right in itertools.pairwise(self.bands):
            lhs = left.level(grid)
            rhs = right.level(grid)
            gap = (lhs - lhs.mean()) - (rhs - rhs.mean())
            scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1.0)
            if np.max(np.abs(gap)) > LEVEL_TOLERANCE * scale:
                points.append(right.low)
        return tuple(points)

    def spectrum(self, u, omega):
        """Spectral level at rescaled time u and frequency omega (broadcasting)."""
        u_arr, omega_arr = np.broadcast_arrays(
            np.asarray(u, dtype=np.float64), np.asarray(omega, dtype=np.float64)
        )
        out = np.zeros(u_arr.shape)
        for band in self.bands:
            out = np.where(band.contains(omega_arr), band.level(u_arr), out)
        out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"bands": [band.to_dict() for band in self.bands]}

    @classmethod
    def from_dict(cls, data: dict) -> BandSpec:
        return cls(tuple(Band.from_dict(band) for band in data["bands"]))


def _bands(*pieces: tuple[float, float, Level, str]) -> BandSpec:
    return BandSpec(tuple(Band(low, high, level, closed) for low, high, level, closed in pieces))


F1 = _bands((0.0, 0.5, Constant(1.0), "left"))
F2 = _bands(
    (0.0, 0.15, Linear(10.0, -9.0), "left"),
    (0.15, 0.35, Constant(1.0), "left"),
    (0.35, 0.5, Linear(1.0, 9.0), "left"),
)
F3 = _bands(
    (0.0, 0.15, Sinusoid(10.0, 10.0, 2.0, -math.pi / 2), "right"),
    (0.15, 0.35, Sinusoid(5.0, 5.0, 2.0, 0.0, "cos"), "right"),
    (0.35, 0.5, Sinusoid(8.5, 8.5, 1.5, -math.pi / 16), "right"),
)
F4 = _bands(
    (0.0, 0.15, Linear(10.0, -9.0), "left"),
    (0.15, 0.5, Constant(1.0), "left"),
)
F5 = _bands(
    (0.0, 0.35, Sinusoid(5.0, 5.0, 2.0, 0.0, "cos"), "right"),
    (0.35, 0.5, Sinusoid(8.5, 8.5, 1.5, -math.pi / 16), "right"),
)


# -- schemes ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelGroup:
    """count consecutive channels, lagged copies of latent series `latent`."""

    latent: int
    count: int

    def to_dict(self) -> dict:
        return {"latent": self.latent, "count": self.count}


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    p: int
    T: int
    latents: tuple[BandSpec, ...]
    groups: tuple[ChannelGroup, ...]

    def __post_init__(self) -> None:
        if self.p < 1:
            raise DomainError(f"scheme needs at least one channel, got p={self.p}")
        if self.T < 2:
            raise DomainError(f"scheme needs at least two samples, got T={self.T}")
        for group in self.groups:
            if not 0 <= group.latent < len(self.latents):
                raise DomainError(f"channel group refers to unknown latent {group.latent}")
            if group.count < 0:
                raise DomainError(f"channel group count must be non-negative, got {group.count}")
        covered = sum(group.count for group in self.groups)
        if covered != self.p:
            raise DomainError(f"channel groups cover {covered} of p={self.p} channels")

    @property
    def partition_points(self) -> tuple[float, ...]:
        """True partition points over every latent that feeds at least one channel."""
        points = {
            point
            for group in self.groups
            if group.count
            for point in self.latents[group.latent].boundaries
        }
        return tuple(sorted(points))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "p": self.p,
            "T": self.T,
            "latents": [latent.to_dict() for latent in self.latents],
            "groups": [group.to_dict() for group in self.groups],
            "partition_points": list(self.partition_points),
        }

    @classmethod
    def from_dict(cls, data: dict) -> SchemeSpec:
        try:
            return cls(
                name=str(data.get("name", "custom")),
                p=int(data["p"]),
                T=int(data["T"]),
                latents=tuple(BandSpec.from_dict(latent) for latent in data["latents"]),
                groups=tuple(
                    ChannelGroup(int(g["latent"]), int(g["count"])) for g in data["groups"]
                ),
            )
        except KeyError as exc:
            raise UsageError(f"scheme definition lacks field {exc.args[0]!r}") from None


SCHEMES = ("WN1B", "L3B", "S3B", "M3B-1", "M3B-2")


def scheme(name: str, p: int, T: int) -> SchemeSpec:
    """One of the named simulation schemes."""
    if name in ("WN1B", "L3B", "S3B"):
        latent = {"WN1B": F1, "L3B": F2, "S3B": F3}[name]
        return SchemeSpec(name, p, T, (latent,), (ChannelGroup(0, p),))
    if name == "M3B-1":
        half = p // 2
        return SchemeSpec(name, p, T, (F2, F3), (ChannelGroup(0, half), ChannelGroup(1, p - half)))
    if name == "M3B-2":
        # the minority group is floor(0.2 p), computed exactly
        minority = p // 5
        return SchemeSpec(
            name, p, T, (F4, F5), (ChannelGroup(0, minority), ChannelGroup(1, p - minority))
        )
    raise UsageError(f"unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")


def true_spectrum(spec: SchemeSpec | BandSpec, u, omega, latent: int = 0):
    """Ground-truth spectral level of a band specification or of one scheme latent."""
    bands = spec.latents[latent] if isinstance(spec, SchemeSpec) else spec
    return bands.spectrum(u, omega)


def synth_banded(bands: BandSpec, length: int, seed: int) -> np.ndarray:
    """Harmonic synthesis of a univariate series whose spectrum follows `bands`.

    z_t = sum_k sigma_k(t) (A_k cos(2 pi k t / M) + B_k sin(2 pi k t / M)) over
    k = 1 .. M/2 - 1 with sigma_k(t)^2 = 4 pi f(t/M, k/M) / M, so variance-2pi white
    noise has unit level.
    """
    if length < 2:
        raise DomainError(f"synthesized series needs at least two samples, got {length}")
    rng = np.random.default_rng(seed)
    harmonics = np.arange(1, length // 2)
    a = rng.standard_normal(harmonics.size)
    b = rng.standard_normal(harmonics.size)
    omega = harmonics / length
    out = np.zeros(length)
    for start in range(0, length, SYNTH_CHUNK):
        t = np.arange(start + 1, min(start + SYNTH_CHUNK, length) + 1)
        level = bands.spectrum(t[:, np.newaxis] / length, omega[np.newaxis, :])
        sigma = np.sqrt(4 * math.pi * level / length)
        angle = 2 * math.pi * (np.outer(t, harmonics) % length) / length
        waves = a * np.cos(angle) + b * np.sin(angle)
        out[start : start + t.size] = np.sum(sigma * waves, axis=1)
    return out


def generate(spec: SchemeSpec, seed: int) -> TimeSeries:
    """Channels of each group are the latent shifted by 0, 1, 2, ... samples."""
    span = spec.T + spec.p - 1
    latents = [
        synth_banded(bands, span, derive_seed(seed, i)) for i, bands in enumerate(spec.latents)
    ]
    columns = []
    for group in spec.groups:
        z = latents[group.latent]
        columns.extend(z[shift : shift + spec.T] for shift in range(group.count))
    return TimeSeries(np.column_stack(columns))


# -- scoring ----------------------------------------------------------------------------


def correct_detection(
    estimated: PartitionResult | Iterable[float], truth: Iterable[float], zeta: float
) -> bool:
    """Right number of points, each within zeta of a distinct true point."""
    if zeta <= 0:
        raise DomainError(f"detection radius must be positive, got {zeta}")
    found = estimated.frequencies() if isinstance(estimated, PartitionResult) else sorted(estimated)
    target = sorted(truth)
    if len(found) != len(target):
        return False
    return all(abs(f - t) <= zeta + 1e-12 for f, t in zip(found, target, strict=True))


# -- tables -----------------------------------------------------------------------------


@dataclass(frozen=True)
class TableLayout:
    """Cells of one result table: every (scheme, p, T, W_min divisor) run, scored per zeta."""

    number: int
    title: str
    statistic: str
    schemes: tuple[str, ...]
    p_values: tuple[int, ...]
    T_values: tuple[int, ...]
    wmin_divs: tuple[int, ...] = (8,)
    zetas: tuple[Fraction, ...] = (Fraction(1, 16),)

    def runs(self) -> list[tuple[str, int, int, int]]:
        return list(itertools.product(self.schemes, self.p_values, self.T_values, self.wmin_divs))


TABLES: dict[int, TableLayout] = {
    1: TableLayout(
        number=1,
        title="Mean(sd) of the estimated number of bands by T",
        statistic="bands",
        schemes=SCHEMES,
        p_values=(10, 15),
        T_values=(200, 500, 1000),
    ),
    2: TableLayout(
        number=2,
        title="Mean(sd) of the estimated number of bands by W_min",
        statistic="bands",
        schemes=SCHEMES,
        p_values=(10, 15),
        T_values=(1000,),
        wmin_divs=(8, 10, 12),
    ),
    3: TableLayout(
        number=3,
        title="Correct detection rate by T",
        statistic="correct",
        schemes=SCHEMES[1:],
        p_values=(10, 15),
        T_values=(200, 500, 1000),
    ),
    4: TableLayout(
        number=4,
        title="Correct detection rate by zeta",
        statistic="correct",
        schemes=SCHEMES[1:],
        p_values=(10, 15),
        T_values=(1000,),
        zetas=(Fraction(1, 12), Fraction(1, 16), Fraction(1, 24)),
    ),
}


@dataclass(frozen=True)
class BenchOverrides:
    """Restrict a table's grid and set the detection parameters of every run."""

    schemes: tuple[str, ...] | None = None
    p_values: tuple[int, ...] | None = None
    T_values: tuple[int, ...] | None = None
    wmin_divs: tuple[int, ...] | None = None
    zetas: tuple[Fraction, ...] | None = None
    resamples: int = 100
    alpha: float = 0.05
    base_seed: int = 0
    wmax_div: int = 4
    n_scales: int = 5
    stride: int = 1
    workers: int | None = None

    def apply(self, layout: TableLayout) -> TableLayout:
        for name in self.schemes or ():
            if name not in SCHEMES:
                raise UsageError(f"unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")
        return TableLayout(
            number=layout.number,
            title=layout.title,
            statistic=layout.statistic,
            schemes=self.schemes or layout.schemes,
            p_values=self.p_values or layout.p_values,
            T_values=self.T_values or layout.T_values,
            wmin_divs=self.wmin_divs or layout.wmin_divs,
            zetas=self.zetas or layout.zetas,
        )


def zeta_column(zeta: Fraction) -> str:
    return f"correct@{zeta}"


CELL_KEYS = ["scheme", "p", "T", "wmin_div"]


@dataclass
class TableSummary:
    """Per-replication raw rows and the aggregated cells of one table."""

    layout: TableLayout
    reps: int
    raw: pd.DataFrame = field(default_factory=pd.DataFrame)
    completed: bool = True

    @property
    def cells(self) -> pd.DataFrame:
        if self.raw.empty:
            return pd.DataFrame(columns=[*CELL_KEYS, "zeta", "reps", "mean", "sd", "se", "seconds"])
        grouped = self.raw.groupby(CELL_KEYS, sort=False)
        seconds = grouped["seconds"].mean()
        if self.layout.statistic == "bands":
            frame = grouped["bands"].agg(reps="count", mean="mean", sd="std")
            frame["se"] = frame["sd"] / np.sqrt(frame["reps"])
            frame["zeta"] = None
            frame["seconds"] = seconds
            return frame.reset_index()
        frames = []
        for zeta in self.layout.zetas:
            frame = grouped[zeta_column(zeta)].agg(reps="count", mean="mean")
            q = frame["mean"]
            frame["sd"] = np.where(frame["reps"] > 1, np.sqrt(q * (1 - q)), np.nan)
            frame["se"] = np.sqrt(q * (1 - q) / frame["reps"])
            frame["zeta"] = str(zeta)
            frame["seconds"] = seconds
            frames.append(frame.reset_index())
        return pd.concat(frames, ignore_index=True)

    def to_document(self) -> dict:
        return {
            "table": self.layout.number,
            "title": self.layout.title,
            "statistic": self.layout.statistic,
            "reps": self.reps,
            "completed": self.completed,
            "cells": _records(self.cells),
            "raw": _records(self.raw),
        }


def _records(frame: pd.DataFrame) -> list[dict]:
    """Rows as plain dicts with NaN mapped to None."""
    return frame.astype(object).where(frame.notna(), None).to_dict("records")


def _replicate_once(
    layout: TableLayout,
    run: tuple[str, int, int, int],
    rep: int,
    overrides: BenchOverrides,
) -> dict:
    name, p, T, wmin_div = run
    spec = scheme(name, p, T)
    seed = derive_seed(overrides.base_seed, SCHEMES.index(name), p, T, rep)
    started = time.perf_counter()
    ts = generate(spec, seed)
    cfg = DetectionConfig.for_length(
        T,
        stride=overrides.stride,
        resamples=overrides.resamples,
        alpha=overrides.alpha,
        base_seed=seed,
        workers=overrides.workers,
    )
    scales = ScaleSet.default(cfg.window.N, wmin_div, overrides.wmax_div, overrides.n_scales)
    result = detect_multiscale(ts, scales, cfg)
    row = {
        "scheme": name,
        "p": p,
        "T": T,
        "wmin_div": wmin_div,
        "rep": rep,
        "seed": seed,
        "k_hat": result.k_hat,
        "bands": result.k_hat + 1,
        "points": result.frequencies(),
    }
    for zeta in layout.zetas if layout.statistic == "correct" else ():
        row[zeta_column(zeta)] = correct_detection(result, spec.partition_points, float(zeta))
    row["seconds"] = time.perf_counter() - started
    return row


def replicate_table(
    table: int,
    reps: int,
    overrides: BenchOverrides | None = None,
    *,
    on_replication: Callable[[dict], None] | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> TableSummary:
    """Run every cell of a result table `reps` times with independent seeds.

    Zeta variants are scored on the same runs. `should_stop` is polled between
    replications; a stopped run returns what was completed.
    """
    if table not in TABLES:
        raise UsageError(f"unknown table {table}; choose from {sorted(TABLES)}")
    if reps < 1:
        raise DomainError(f"need at least one replication, got {reps}")
    overrides = overrides or BenchOverrides()
    layout = overrides.apply(TABLES[table])
    rows: list[dict] = []
    completed = True
    for run in layout.runs():
        for rep in range(reps):
            if should_stop is not None and should_stop():
                completed = False
                break
            row = _replicate_once(layout, run, rep, overrides)
            rows.append(row)
            logger.info(
                "table %d %s p=%d T=%d W_min=N/%d rep %d/%d: K=%d (%.1fs)",
                table,
                *run,
                rep + 1,
                reps,
                row["k_hat"],
                row["seconds"],
            )
            if on_replication is not None:
                on_replication(row)
        if not completed:
            break
    return TableSummary(layout=layout, reps=reps, raw=pd.DataFrame(rows), completed=completed)
