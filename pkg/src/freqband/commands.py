"""Run configuration and the detect / components / simulate / bench commands."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

from freqband import __version__
from freqband.bootstrap import NullModel
from freqband.dataio import read_csv, read_document, write_csv, write_curves, write_document
from freqband.discrepancy import snap_to_grid
from freqband.errors import UsageError
from freqband.search import (
    DetectionConfig,
    ScaleSet,
    attribute_components,
    detect_multiscale,
    select_w,
)
from freqband.simgen import (
    SCHEMES,
    TABLES,
    BenchOverrides,
    SchemeSpec,
    TableSummary,
    generate,
    replicate_table,
    scheme,
)

logger = logging.getLogger(__name__)

COMMANDS = ("detect", "components", "simulate", "bench")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one command invocation."""

    command: str
    input: str | None = None
    output: str | None = None
    curves: str | None = None
    sampling_rate: float | None = None
    alpha: float = 0.05
    resamples: int = 100
    seed: int = 0
    stride: int = 1
    w_min_div: int = 8
    w_max_div: int = 4
    n_scales: int = 5
    widths: tuple[int, ...] = ()
    width: int | None = None
    omegas: tuple[float, ...] = ()
    attribute: bool = False
    schemes: tuple[str, ...] = ()
    scheme_file: str | None = None
    T: int | None = None
    p: int | None = None
    table: int | None = None
    reps: int = 20
    zeta_div: int | None = None
    live: bool = False
    workers: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.w_max_div < 4:
            raise UsageError(f"--wmax-div must be at least 4, got {self.w_max_div}")
        if self.w_min_div <= self.w_max_div:
            raise UsageError(
                f"--wmin-div ({self.w_min_div}) must exceed --wmax-div ({self.w_max_div})"
            )
        for name in ("resamples", "stride", "n_scales", "reps"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("width", "T", "p", "zeta_div", "workers"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise UsageError(f"{name} must be positive, got {value}")
        if self.sampling_rate is not None and self.sampling_rate <= 0:
            raise UsageError(f"sampling rate must be positive, got {self.sampling_rate}")
        if not 0.0 < self.alpha < 1.0:
            raise UsageError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.seed < 0:
            raise UsageError(f"seed must be non-negative, got {self.seed}")

    def to_dict(self) -> dict:
        """Serializable form; the worker count does not affect results and is left out."""
        data = asdict(self)
        del data["workers"]
        return {k: list(v) if isinstance(v, tuple) else v for k, v in data.items()}

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


def _detection_config(cfg: RunConfig, length: int) -> DetectionConfig:
    return DetectionConfig.for_length(
        length,
        stride=cfg.stride,
        resamples=cfg.resamples,
        alpha=cfg.alpha,
        base_seed=cfg.seed,
        workers=cfg.workers,
    )


def _effective(detection: DetectionConfig, length: int, channels: int, **extra: object) -> dict:
    return {
        "version": __version__,
        "T": length,
        "p": channels,
        "N": detection.window.N,
        "stride": detection.window.stride,
        "kernel": detection.kernel.kernel,
        "bandwidth": detection.kernel.bandwidth,
        "resamples": detection.bootstrap.resamples,
        "alpha": detection.alpha,
        "base_seed": detection.bootstrap.base_seed,
        **extra,
    }


def _require_input(cfg: RunConfig) -> str:
    if not cfg.input:
        raise UsageError(f"{cfg.command} needs --input")
    return cfg.input


def _curves_path(cfg: RunConfig) -> Path | None:
    if cfg.curves:
        return Path(cfg.curves)
    if cfg.output:
        output = Path(cfg.output)
        return output.with_name(f"{output.stem}.curves.csv")
    return None


def run_detect(cfg: RunConfig) -> dict:
    """Multiscale detection over a CSV series, with optional component attribution."""
    ts = read_csv(_require_input(cfg), cfg.sampling_rate)
    detection = _detection_config(cfg, ts.length)
    detection.window.check_fits(ts.length)
    N = detection.window.N
    if cfg.widths:
        scales = ScaleSet(cfg.widths)
    else:
        scales = ScaleSet.default(N, cfg.w_min_div, cfg.w_max_div, cfg.n_scales)
    logger.info("N=%d, h=%.4f, scales %s", N, detection.kernel.bandwidth, list(scales.widths))
    null = NullModel.fit(ts, detection.kernel)
    result = detect_multiscale(ts, scales, detection, null=null)
    document = {
        "command": "detect",
        "config": cfg.to_dict(),
        "effective": _effective(detection, ts.length, ts.channels, scales=list(scales.widths)),
        "result": result.to_dict(),
        "selected_W": select_w(result, scales),
    }
    if cfg.attribute:
        document["attribution"] = [
            attribute_components(ts, point.frequency, point.width, detection, null=null).to_dict(
                ts.sampling_rate
            )
            for point in result.points
        ]
    write_document(document, cfg.output)
    curves = _curves_path(cfg)
    if curves is not None:
        write_curves(curves, result.curves.values(), ts.sampling_rate)
    return document


def run_components(cfg: RunConfig) -> dict:
    """Bonferroni-adjusted component p-values at each requested frequency."""
    if not cfg.omegas:
        raise UsageError("components needs at least one --omega")
    ts = read_csv(_require_input(cfg), cfg.sampling_rate)
    detection = _detection_config(cfg, ts.length)
    detection.window.check_fits(ts.length)
    N = detection.window.N
    width = cfg.width if cfg.width is not None else N // cfg.w_min_div
    null = NullModel.fit(ts, detection.kernel)
    entries = []
    for omega in cfg.omegas:
        k = snap_to_grid(omega, N)
        distance = abs(omega - k / N)
        logger.info("omega %.6g snapped to %d/%d (distance %.3g)", omega, k, N, distance)
        attribution = attribute_components(ts, k / N, width, detection, null=null)
        entries.append(
            {"requested": omega, "snap_distance": distance}
            | attribution.to_dict(ts.sampling_rate)
        )
    document = {
        "command": "components",
        "config": cfg.to_dict(),
        "effective": _effective(detection, ts.length, ts.channels, W=width),
        "components": entries,
    }
    write_document(document, cfg.output)
    return document


def _scheme_for(cfg: RunConfig) -> SchemeSpec:
    if cfg.scheme_file:
        spec = SchemeSpec.from_dict(read_document(cfg.scheme_file))
        if cfg.T is not None:
            spec = replace(spec, T=cfg.T)
        return spec
    if len(cfg.schemes) != 1:
        raise UsageError(f"simulate needs exactly one --scheme ({', '.join(SCHEMES)})")
    if cfg.T is None or cfg.p is None:
        raise UsageError("simulate needs --T and --p")
    return scheme(cfg.schemes[0], cfg.p, cfg.T)


def truth_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(f"{output.stem}.truth.json")


def run_simulate(cfg: RunConfig) -> dict:
    """Write a simulated series as CSV and its ground truth beside it."""
    if not cfg.output:
        raise UsageError("simulate needs --output")
    spec = _scheme_for(cfg)
    ts = generate(spec, cfg.seed)
    write_csv(cfg.output, ts)
    truth = {
        "command": "simulate",
        "config": cfg.to_dict(),
        "scheme": spec.to_dict(),
        "seed": cfg.seed,
        "partition_points": list(spec.partition_points),
    }
    write_document(truth, truth_path(cfg.output))
    logger.info("simulated %s: T=%d, p=%d -> %s", spec.name, spec.T, spec.p, cfg.output)
    return truth


def bench_overrides(cfg: RunConfig) -> BenchOverrides:
    return BenchOverrides(
        schemes=cfg.schemes or None,
        p_values=(cfg.p,) if cfg.p is not None else None,
        T_values=(cfg.T,) if cfg.T is not None else None,
        wmin_divs=None if cfg.table == 2 else (cfg.w_min_div,),
        zetas=(Fraction(1, cfg.zeta_div),) if cfg.zeta_div is not None else None,
        resamples=cfg.resamples,
        alpha=cfg.alpha,
        base_seed=cfg.seed,
        wmax_div=cfg.w_max_div,
        n_scales=cfg.n_scales,
        stride=cfg.stride,
        workers=cfg.workers,
    )


def _run_live(cfg: RunConfig, overrides: BenchOverrides) -> TableSummary:
    from freqband.bench import BenchRunner
    from freqband.ui import BenchApp

    runner = BenchRunner(table=cfg.table, reps=cfg.reps, overrides=overrides)
    try:
        runner.start()
        BenchApp(runner=runner).run()
    finally:
        if not runner.stop():
            logger.warning("stopping: waiting for the current replication to finish")
            runner.stop(timeout=None)
    return runner.summary()


def run_bench(cfg: RunConfig) -> dict:
    """Replicate one result table and write its cell summary and raw rows."""
    if cfg.table not in TABLES:
        raise UsageError(f"unknown table {cfg.table}; choose from {sorted(TABLES)}")
    overrides = bench_overrides(cfg)
    if cfg.live:
        summary = _run_live(cfg, overrides)
    else:
        summary = replicate_table(cfg.table, cfg.reps, overrides)
    document = {"command": "bench", "config": cfg.to_dict()} | summary.to_document()
    write_document(document, cfg.output)
    return document


RUNNERS = {
    "detect": run_detect,
    "components": run_components,
    "simulate": run_simulate,
    "bench": run_bench,
}


def run(cfg: RunConfig) -> dict:
    return RUNNERS[cfg.command](cfg)
