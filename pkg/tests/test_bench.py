"""Tests for BenchRunner and the dashboard helpers."""

from __future__ import annotations

import math
import threading
import time
from unittest.mock import patch

import pytest

from freqband.bench import BenchRunner, CellStats
from freqband.errors import DomainError, FreqbandError, UsageError
from freqband.simgen import TABLES, BenchOverrides, TableSummary
from freqband.ui import BenchApp, SortColumn, format_seconds, format_stat

OVERRIDES = BenchOverrides(schemes=("L3B", "S3B"), p_values=(2,), T_values=(200,), workers=1)


def _blocking(table, reps, overrides, *, on_replication=None, should_stop=None):
    """Stand-in for replicate_table that runs until asked to stop."""
    while not should_stop():
        time.sleep(0.01)
    return TableSummary(layout=overrides.apply(TABLES[table]), reps=reps, completed=False)


def _row(scheme="L3B", bands=2, correct=True, seconds=1.0) -> dict:
    return {
        "scheme": scheme,
        "p": 2,
        "T": 200,
        "wmin_div": 8,
        "bands": bands,
        "correct@1/16": correct,
        "seconds": seconds,
    }


class TestBenchRunnerStartStop:
    """Test start/stop idempotency and thread safety."""

    def test_start_is_idempotent(self):
        """Calling start() multiple times should only create one thread."""
        runner = BenchRunner(table=3, reps=2, overrides=OVERRIDES)
        with patch("freqband.bench.replicate_table", side_effect=_blocking):
            try:
                runner.start()
                thread1 = runner._thread

                runner.start()
                thread2 = runner._thread

                assert thread1 is thread2
                assert runner.running is True
            finally:
                runner.stop()
        assert runner.running is False

    def test_stop_is_idempotent(self):
        """Calling stop() multiple times should not raise."""
        runner = BenchRunner(table=1, reps=1, overrides=OVERRIDES)
        runner.stop()
        runner.stop()
        runner.stop()

    def test_stop_is_bounded(self):
        """stop() returns after its timeout while a replication is still running."""
        release = threading.Event()

        def slow_replication(table, reps, overrides, *, on_replication=None, should_stop=None):
            release.wait(timeout=10.0)
            return TableSummary(layout=overrides.apply(TABLES[table]), reps=reps, completed=False)

        runner = BenchRunner(table=3, reps=2, overrides=OVERRIDES)
        with patch("freqband.bench.replicate_table", side_effect=slow_replication):
            runner.start()
            first = runner._thread
            try:
                started = time.monotonic()
                assert runner.stop(timeout=0.05) is False
                assert time.monotonic() - started < 5.0
                assert runner.running is False
                runner.start()
                assert runner._thread is first
                assert runner.running is False
            finally:
                release.set()
            assert runner.stop(timeout=None) is True
        assert runner._thread is None
        assert runner.summary().completed is False

    def test_concurrent_start_calls(self):
        """Concurrent start() calls should only create one thread."""
        runner = BenchRunner(table=3, reps=2, overrides=OVERRIDES)
        threads_seen = []
        errors = []

        def call_start():
            try:
                runner.start()
                threads_seen.append(runner._thread)
            except Exception as e:
                errors.append(e)

        with patch("freqband.bench.replicate_table", side_effect=_blocking):
            try:
                callers = [threading.Thread(target=call_start) for _ in range(10)]
                for t in callers:
                    t.start()
                for t in callers:
                    t.join()

                assert len(errors) == 0
                assert all(t is threads_seen[0] for t in threads_seen)
            finally:
                runner.stop()

    def test_stopped_run_keeps_summary(self):
        """A stopped run still yields its partial summary."""
        runner = BenchRunner(table=3, reps=2, overrides=OVERRIDES)
        with patch("freqband.bench.replicate_table", side_effect=_blocking):
            runner.start()
            runner.stop()
        assert runner.summary().completed is False


class TestBenchRunnerResults:
    """Test recording, progress and error handling."""

    def test_layout_and_total(self):
        """Overrides restrict the table grid."""
        runner = BenchRunner(table=3, reps=2, overrides=OVERRIDES)
        assert runner.layout.runs() == [("L3B", 2, 200, 8), ("S3B", 2, 200, 8)]
        assert runner.total == 4
        assert runner.correct_column == "correct@1/16"
        assert BenchRunner(table=1, reps=2, overrides=OVERRIDES).correct_column is None

    def test_unknown_table(self):
        """Unknown tables are usage errors."""
        with pytest.raises(UsageError):
            BenchRunner(table=7, reps=1)

    def test_records_rows(self):
        """Reported rows accumulate into per-cell statistics."""
        runner = BenchRunner(table=3, reps=2, overrides=OVERRIDES)

        def replicate(table, reps, overrides, *, on_replication=None, should_stop=None):
            on_replication(_row(bands=2, correct=True))
            on_replication(_row(bands=4, correct=False))
            on_replication(_row(scheme="S3B"))
            return TableSummary(layout=runner.layout, reps=reps)

        with patch("freqband.bench.replicate_table", side_effect=replicate):
            runner._run_loop()
        assert runner.progress() == (3, 4)
        cells = runner.get_cells()
        assert [c.scheme for c in cells] == ["L3B", "S3B"]
        assert cells[0].mean_bands == 3.0
        assert cells[0].correct_rate == 0.5
        assert runner.summary().completed is True

    def test_error_is_kept(self):
        """A failing run stops and re-raises its error from summary()."""
        runner = BenchRunner(table=1, reps=1, overrides=OVERRIDES)
        with patch("freqband.bench.replicate_table", side_effect=DomainError("bad")):
            runner._run_loop()
        assert runner.running is False
        with pytest.raises(DomainError, match="bad"):
            runner.summary()

    def test_summary_before_finish(self):
        """Asking for the summary of an unfinished run is an error."""
        with pytest.raises(FreqbandError, match="not finished"):
            BenchRunner(table=1, reps=1, overrides=OVERRIDES).summary()


class TestGetCellsReturnsCopies:
    """Test that get_cells() returns copies, not live references."""

    def test_get_cells_returns_copies(self):
        """Modifying returned cells should not affect internal state."""
        runner = BenchRunner(table=1, reps=2, overrides=OVERRIDES)
        key = ("L3B", 2, 200, 8)
        runner._cells[key] = CellStats(*key, reps=1, bands_sum=2.0)

        cells = runner.get_cells()
        assert len(cells) == 1
        cells[0].bands_sum = 99.0

        assert runner._cells[key].bands_sum == 2.0
        assert cells[0] is not runner._cells[key]


class TestCellStats:
    """Test running cell statistics."""

    def test_empty(self):
        """Statistics are NaN before any replication."""
        cell = CellStats("L3B", 2, 200, 8)
        assert math.isnan(cell.mean_bands)
        assert math.isnan(cell.correct_rate)
        assert math.isnan(cell.mean_seconds)

    def test_mean_and_sd(self):
        """Sample mean and standard deviation of the band count."""
        cell = CellStats("L3B", 2, 200, 8)
        cell.add(_row(bands=2, seconds=1.0), None)
        assert math.isnan(cell.sd_bands)
        cell.add(_row(bands=4, seconds=3.0), None)
        assert cell.mean_bands == 3.0
        assert cell.sd_bands == pytest.approx(math.sqrt(2.0))
        assert cell.mean_seconds == 2.0
        assert cell.correct == 0


class TestFormatting:
    """Test dashboard formatting helpers."""

    def test_format_stat(self):
        """mean(sd), with sd dropped until it exists."""
        assert format_stat(2.0, 0.5) == "2.00(0.50)"
        assert format_stat(2.0, math.nan) == "2.00"
        assert format_stat(math.nan, math.nan) == "-"

    @pytest.mark.parametrize(
        ("seconds", "text"), [(30.0, "30.0s"), (90.0, "1.5m"), (7200.0, "2.0h"), (math.nan, "-")]
    )
    def test_format_seconds(self, seconds, text):
        """Durations scale to s, m or h."""
        assert format_seconds(seconds) == text

    def test_sort_puts_unknown_last(self):
        """Cells without a statistic sort after the rest."""
        app = BenchApp(runner=BenchRunner(table=1, reps=1, overrides=OVERRIDES))
        empty = CellStats("S3B", 2, 200, 8)
        low = CellStats("L3B", 2, 200, 8, reps=1, bands_sum=1.0)
        high = CellStats("M3B-1", 2, 200, 8, reps=1, bands_sum=3.0)
        app._sort_column = SortColumn.BANDS
        app._sort_reverse = True
        assert app._sort_cells([empty, low, high]) == [high, low, empty]
