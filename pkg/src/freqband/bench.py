"""Background table replication with running per-cell statistics."""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field

from freqband.errors import FreqbandError, UsageError
from freqband.simgen import (
    TABLES,
    BenchOverrides,
    TableLayout,
    TableSummary,
    replicate_table,
    zeta_column,
)

logger = logging.getLogger(__name__)

CellKey = tuple[str, int, int, int]

STOP_TIMEOUT = 2.0


@dataclass
class CellStats:
    """Running statistics for one (scheme, p, T, W_min divisor) cell."""

    scheme: str
    p: int
    T: int
    wmin_div: int
    reps: int = 0
    bands_sum: float = 0.0
    bands_sq_sum: float = 0.0
    correct: int = 0
    seconds_sum: float = 0.0

    @property
    def key(self) -> CellKey:
        return (self.scheme, self.p, self.T, self.wmin_div)

    def add(self, row: dict, correct_column: str | None) -> None:
        self.reps += 1
        self.bands_sum += row["bands"]
        self.bands_sq_sum += row["bands"] ** 2
        self.seconds_sum += row["seconds"]
        if correct_column is not None and row.get(correct_column):
            self.correct += 1

    @property
    def mean_bands(self) -> float:
        return self.bands_sum / self.reps if self.reps else math.nan

    @property
    def sd_bands(self) -> float:
        if self.reps < 2:
            return math.nan
        variance = (self.bands_sq_sum - self.reps * self.mean_bands**2) / (self.reps - 1)
        return math.sqrt(max(variance, 0.0))

    @property
    def correct_rate(self) -> float:
        return self.correct / self.reps if self.reps else math.nan

    @property
    def mean_seconds(self) -> float:
        return self.seconds_sum / self.reps if self.reps else math.nan


@dataclass
class BenchRunner:
    """Replicate a table on a daemon thread; the UI polls snapshots."""

    table: int
    reps: int
    overrides: BenchOverrides = field(default_factory=BenchOverrides)
    layout: TableLayout = field(init=False)
    _cells: dict[CellKey, CellStats] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _running: bool = False
    _thread: threading.Thread | None = None
    _summary: TableSummary | None = None
    _error: FreqbandError | None = None

    def __post_init__(self) -> None:
        if self.table not in TABLES:
            raise UsageError(f"unknown table {self.table}; choose from {sorted(TABLES)}")
        self.layout = self.overrides.apply(TABLES[self.table])

    @property
    def total(self) -> int:
        return len(self.layout.runs()) * self.reps

    @property
    def correct_column(self) -> str | None:
        """The first zeta of a correct-detection table is the one shown live."""
        if self.layout.statistic != "correct":
            return None
        return zeta_column(self.layout.zetas[0])

    def start(self) -> None:
        """Start the replication thread."""
        with self._lock:
            if self._running or (self._thread is not None and self._thread.is_alive()):
                return
            self._running = True
            thread = threading.Thread(target=self._run_loop, daemon=True, name="freqband-bench")
            self._thread = thread
        thread.start()

    def stop(self, timeout: float | None = STOP_TIMEOUT) -> bool:
        """Ask the thread to stop after the current replication.

        Waits at most `timeout` seconds (None waits for good) and returns whether the
        thread has exited. A thread still finishing its replication is kept, so a
        later stop() can wait for it.
        """
        with self._lock:
            self._running = False
            thread = self._thread
        if thread is None:
            return True
        thread.join(timeout=timeout)
        if thread.is_alive():
            logger.info("bench table %d: replication still finishing", self.table)
            return False
        with self._lock:
            if self._thread is thread:
                self._thread = None
        return True

    def _should_stop(self) -> bool:
        with self._lock:
            return not self._running

    def _run_loop(self) -> None:
        try:
            summary = replicate_table(
                self.table,
                self.reps,
                self.overrides,
                on_replication=self._record,
                should_stop=self._should_stop,
            )
        except FreqbandError as exc:
            logger.error("bench table %d failed: %s", self.table, exc)
            with self._lock:
                self._error = exc
                self._running = False
            return
        with self._lock:
            self._summary = summary
            self._running = False

    def _record(self, row: dict) -> None:
        key: CellKey = (row["scheme"], row["p"], row["T"], row["wmin_div"])
        with self._lock:
            if key not in self._cells:
                self._cells[key] = CellStats(*key)
            self._cells[key].add(row, self.correct_column)

    @property
    def running(self) -> bool:
        with self._lock:
            return self._running

    def progress(self) -> tuple[int, int]:
        """(completed replications, total replications)."""
        with self._lock:
            done = sum(cell.reps for cell in self._cells.values())
        return done, self.total

    def get_cells(self) -> list[CellStats]:
        """Snapshot copies of every cell in table order."""
        order = {run: i for i, run in enumerate(self.layout.runs())}
        with self._lock:
            cells = [
                CellStats(
                    scheme=c.scheme,
                    p=c.p,
                    T=c.T,
                    wmin_div=c.wmin_div,
                    reps=c.reps,
                    bands_sum=c.bands_sum,
                    bands_sq_sum=c.bands_sq_sum,
                    correct=c.correct,
                    seconds_sum=c.seconds_sum,
                )
                for c in self._cells.values()
            ]
        cells.sort(key=lambda c: order.get(c.key, len(order)))
        return cells

    def summary(self) -> TableSummary:
        """The finished (or stopped) table; raises the worker's error if it failed."""
        with self._lock:
            if self._error is not None:
                raise self._error
            if self._summary is None:
                raise FreqbandError(f"bench table {self.table} has not finished")
            return self._summary
