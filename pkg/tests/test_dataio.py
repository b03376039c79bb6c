"""Tests for CSV ingestion and result serialization."""

from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest

from freqband.dataio import (
    curves_frame,
    dumps,
    read_csv,
    read_document,
    write_csv,
    write_curves,
    write_document,
)
from freqband.discrepancy import DiscrepancyCurve
from freqband.errors import DomainError, ParseError
from freqband.tvspec import TimeSeries, WindowConfig


class TestReadCsv:
    """Tests for reading a T x p series."""

    def test_plain_numbers(self, tmp_path):
        """A headerless 3 x 2 file gives T=3, p=2."""
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,4\n5,6\n")
        ts = read_csv(path)
        assert ts.length == 3
        assert ts.channels == 2
        assert np.array_equal(ts.values, [[1, 2], [3, 4], [5, 6]])
        assert ts.channel_names is None

    def test_header(self, tmp_path):
        """A non-numeric first row names the channels."""
        path = tmp_path / "x.csv"
        path.write_text("eeg_a,eeg_b\n1,2\n3,4\n")
        ts = read_csv(path, sampling_rate=250.0)
        assert ts.names() == ("eeg_a", "eeg_b")
        assert ts.length == 2
        assert ts.sampling_rate == 250.0

    def test_blank_lines_skipped(self, tmp_path):
        """Empty lines are ignored."""
        path = tmp_path / "x.csv"
        path.write_text("1,2\n\n3,4\n")
        assert read_csv(path).length == 2

    def test_ragged_row(self, tmp_path):
        """A short row is reported by its line number."""
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,4\n5\n")
        with pytest.raises(ParseError, match="row 3 has 1 fields, expected 2"):
            read_csv(path)

    def test_non_numeric_cell(self, tmp_path):
        """A non-numeric value is reported with its row and column."""
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,abc\n")
        with pytest.raises(ParseError, match="row 2, column 2"):
            read_csv(path)

    def test_typo_in_first_row_is_data(self, tmp_path):
        """A first row mixing numbers and text is a data row with a bad cell."""
        path = tmp_path / "x.csv"
        path.write_text("1.0,2.o,3.0\n4,5,6\n")
        with pytest.raises(ParseError, match="row 1, column 2"):
            read_csv(path)

    @pytest.mark.parametrize("cell", ["nan", "inf", "-Infinity"])
    def test_non_finite_cell(self, tmp_path, cell):
        """NaN and infinite values are reported with their coordinates."""
        path = tmp_path / "x.csv"
        path.write_text(f"a,b\n1,2\n3,{cell}\n")
        with pytest.raises(ParseError, match="row 3, column 2"):
            read_csv(path)

    def test_missing_file(self, tmp_path):
        """A missing file is a parse error."""
        with pytest.raises(ParseError, match="no such file"):
            read_csv(tmp_path / "absent.csv")

    def test_empty_file(self, tmp_path):
        """A file without rows is a parse error."""
        path = tmp_path / "x.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            read_csv(path)

    def test_header_only(self, tmp_path):
        """A header with no data is a parse error."""
        path = tmp_path / "x.csv"
        path.write_text("a,b\n")
        with pytest.raises(ParseError, match="no data rows"):
            read_csv(path)

    def test_too_short_for_window(self, tmp_path):
        """A series shorter than 2N fails the window check."""
        path = tmp_path / "x.csv"
        path.write_text("1\n" * 20)
        with pytest.raises(DomainError):
            read_csv(path, window=WindowConfig(N=16))


class TestWriteCsv:
    """Tests for writing series."""

    def test_exact_round_trip(self, tmp_path, rng):
        """Written values read back bit for bit."""
        ts = TimeSeries(rng.standard_normal((30, 3)) * 1e3)
        path = tmp_path / "x.csv"
        write_csv(path, ts)
        back = read_csv(path)
        assert np.array_equal(back.values, ts.values)
        assert back.names() == ("ch1", "ch2", "ch3")


class TestDocuments:
    """Tests for JSON result documents."""

    def test_numpy_values(self):
        """Arrays and numpy scalars serialize as plain JSON."""
        text = dumps({"b": np.arange(3), "a": np.float64(0.5)})
        assert json.loads(text) == {"a": 0.5, "b": [0, 1, 2]}
        assert text.index('"a"') < text.index('"b"')

    def test_stdout(self, capsys):
        """Without a path the document goes to stdout."""
        write_document({"k": 1})
        assert json.loads(capsys.readouterr().out) == {"k": 1}

    def test_file(self, tmp_path):
        """Documents read back as written."""
        path = tmp_path / "out.json"
        write_document({"k": [1, 2]}, path)
        assert read_document(path) == {"k": [1, 2]}

    def test_invalid_json(self, tmp_path):
        """Malformed JSON is a parse error naming the line."""
        path = tmp_path / "bad.json"
        path.write_text("{\n  'k': 1\n}")
        with pytest.raises(ParseError, match="line 2"):
            read_document(path)

    def test_missing_document(self, tmp_path):
        """A missing document is a parse error."""
        with pytest.raises(ParseError):
            read_document(tmp_path / "absent.json")


class TestCurves:
    """Tests for discrepancy curve export."""

    def _curves(self):
        return [
            DiscrepancyCurve(N=16, W=1, bins=np.array([2, 3]), values=np.array([0.5, 1.5])),
            DiscrepancyCurve(N=16, W=2, bins=np.array([3]), values=np.array([2.0])),
        ]

    def test_long_format(self):
        """One row per (W, frequency)."""
        frame = curves_frame(self._curves())
        assert list(frame.columns) == ["W", "frequency", "value"]
        assert frame["W"].tolist() == [1, 1, 2]
        assert frame["value"].tolist() == [0.5, 1.5, 2.0]

    def test_hz_column(self, tmp_path):
        """A sampling rate adds an Hz column."""
        path = tmp_path / "curves.csv"
        write_curves(path, self._curves(), 64.0)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["W", "frequency", "hz", "value"]
        assert frame["hz"].tolist() == [8.0, 12.0, 12.0]

    def test_no_curves(self):
        """No curves give an empty frame with the usual columns."""
        assert list(curves_frame([]).columns) == ["W", "frequency", "value"]
