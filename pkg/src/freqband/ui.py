"""Live benchmark dashboard using textual."""

from __future__ import annotations

import math
from operator import attrgetter
from typing import TYPE_CHECKING

from textual.app import App, ComposeResult
from textual.binding import Binding
from textual.containers import Container
from textual.widgets import DataTable, Footer, Header, Static

if TYPE_CHECKING:
    from freqband.bench import BenchRunner, CellStats


def format_stat(mean: float, sd: float) -> str:
    """mean(sd) as in the result tables; sd is omitted until it exists."""
    if math.isnan(mean):
        return "-"
    if math.isnan(sd):
        return f"{mean:.2f}"
    return f"{mean:.2f}({sd:.2f})"


def format_seconds(seconds: float) -> str:
    if math.isnan(seconds):
        return "-"
    if seconds < 60:
        return f"{seconds:.1f}s"
    if seconds < 3600:
        return f"{seconds / 60:.1f}m"
    return f"{seconds / 3600:.1f}h"


class SortColumn:
    """Enum-like class for sort columns."""

    CELL = "cell"
    BANDS = "bands"
    CORRECT = "correct"
    TIME = "time"


SORT_ATTRIBUTES = {
    SortColumn.BANDS: "mean_bands",
    SortColumn.CORRECT: "correct_rate",
    SortColumn.TIME: "mean_seconds",
}


class ProgressDisplay(Static):
    """One-line replication progress."""

    def update_progress(self, table: int, done: int, total: int, running: bool) -> None:
        state = "running" if running else "finished"
        percent = 100.0 * done / total if total else 100.0
        self.update(f"Table {table} | {done}/{total} replications ({percent:.0f}%) | {state}")


class BenchApp(App[None]):
    """Per-cell running statistics of a table replication."""

    CSS = """
    Screen {
        background: $surface;
    }
    #progress-display {
        dock: top;
        height: 1;
        background: $primary-background;
        color: $text;
        padding: 0 1;
    }
    #table-container {
        height: 1fr;
    }
    DataTable {
        height: 100%;
    }
    """

    BINDINGS = [
        Binding("q", "quit", "Quit"),
        Binding("s", "sort_cell", "Sort Cell"),
        Binding("b", "sort_bands", "Sort Bands"),
        Binding("c", "sort_correct", "Sort Correct"),
        Binding("t", "sort_time", "Sort Time"),
    ]

    def __init__(self, runner: BenchRunner, refresh_rate: float = 1.0) -> None:
        super().__init__()
        self._runner = runner
        self._refresh_rate = refresh_rate
        self._sort_column = SortColumn.CELL
        self._sort_reverse = False

    def compose(self) -> ComposeResult:
        yield Header()
        yield ProgressDisplay(id="progress-display")
        yield Container(DataTable(id="cells-table"), id="table-container")
        yield Footer()

    def on_mount(self) -> None:
        table = self.query_one("#cells-table", DataTable)
        table.add_columns("Scheme", "p", "T", "W_min", "Reps", "Bands", "Correct", "Mean time")
        table.cursor_type = "row"
        self.title = f"freqband bench: {self._runner.layout.title}"
        self.set_interval(self._refresh_rate, self._refresh_table)

    def _refresh_table(self) -> None:
        table = self.query_one("#cells-table", DataTable)
        cells = self._sort_cells(self._runner.get_cells())
        show_correct = self._runner.correct_column is not None
        table.clear()
        for cell in cells:
            table.add_row(
                cell.scheme,
                str(cell.p),
                str(cell.T),
                f"N/{cell.wmin_div}",
                str(cell.reps),
                format_stat(cell.mean_bands, cell.sd_bands),
                f"{cell.correct_rate:.2f}" if show_correct else "-",
                format_seconds(cell.mean_seconds),
            )
        done, total = self._runner.progress()
        display = self.query_one("#progress-display", ProgressDisplay)
        display.update_progress(self._runner.table, done, total, self._runner.running)

    def _sort_cells(self, cells: list[CellStats]) -> list[CellStats]:
        """Sort cells by the current sort column; NaN statistics sort last."""
        if self._sort_column == SortColumn.CELL:
            return list(reversed(cells)) if self._sort_reverse else cells
        attribute = SORT_ATTRIBUTES[self._sort_column]
        known = [c for c in cells if not math.isnan(getattr(c, attribute))]
        unknown = [c for c in cells if math.isnan(getattr(c, attribute))]
        return sorted(known, key=attrgetter(attribute), reverse=self._sort_reverse) + unknown

    def _toggle_sort(self, column: str, descending: bool) -> None:
        if self._sort_column == column:
            self._sort_reverse = not self._sort_reverse
        else:
            self._sort_column = column
            self._sort_reverse = descending
        self._refresh_table()

    def action_sort_cell(self) -> None:
        """Table order."""
        self._toggle_sort(SortColumn.CELL, False)

    def action_sort_bands(self) -> None:
        """Sort by mean band count."""
        self._toggle_sort(SortColumn.BANDS, True)

    def action_sort_correct(self) -> None:
        """Sort by correct-detection rate."""
        self._toggle_sort(SortColumn.CORRECT, True)

    def action_sort_time(self) -> None:
        """Sort by mean seconds per replication."""
        self._toggle_sort(SortColumn.TIME, True)
