"""CSV ingestion and serialization of series, result documents and curves."""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from freqband.errors import ParseError
from freqband.tvspec import TimeSeries

if TYPE_CHECKING:
    from collections.abc import Iterable

    from freqband.discrepancy import DiscrepancyCurve
    from freqband.tvspec import WindowConfig

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _is_number(cell: str) -> bool:
    try:
        return math.isfinite(float(cell))
    except ValueError:
        return False


def read_csv(
    path: str | Path,
    sampling_rate: float | None = None,
    window: WindowConfig | None = None,
) -> TimeSeries:
    """Rows are time, columns are channels.

    A first row without any numeric cell is taken as the header; a first row mixing
    numbers and text is data and fails on its bad cell.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = [(n, row) for n, row in enumerate(csv.reader(handle), start=1) if row]
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")

    names = None
    first = [cell.strip() for cell in rows[0][1]]
    if not any(_is_number(cell) for cell in first):
        names = tuple(first)
        rows = rows[1:]
        if not rows:
            raise ParseError(f"{path}: header but no data rows")

    width = len(names) if names is not None else len(rows[0][1])
    values = np.empty((len(rows), width))
    for i, (line, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            if not _is_number(cell):
                raise ParseError(
                    f"{path}: non-numeric or non-finite value {cell.strip()!r}"
                    f" at row {line}, column {j + 1}"
                )
            values[i, j] = float(cell)
    logger.info("read %s: T=%d, p=%d", path, values.shape[0], width)
    ts = TimeSeries(values, sampling_rate, names)
    if window is not None:
        window.check_fits(ts.length)
    return ts


def write_csv(path: str | Path, ts: TimeSeries) -> None:
    """Header row of channel names, then one row per time point at full precision."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(ts.names())
        writer.writerows([FLOAT_FORMAT % value for value in row] for row in ts.values)


def _jsonable(value: object) -> object:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(document: dict) -> str:
    return json.dumps(document, indent=2, sort_keys=True, default=_jsonable) + "\n"


def write_document(document: dict, path: str | Path | None = None) -> None:
    """Write a result document as JSON to path, or to stdout when path is None."""
    text = dumps(document)
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")
    logger.info("wrote %s", path)


def read_document(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def curves_frame(curves: Iterable[DiscrepancyCurve], sampling_rate: float | None = None):
    """Long-format table with one row per (W, frequency)."""
    frames = []
    for curve in curves:
        frame = pd.DataFrame({"W": curve.W, "frequency": curve.frequencies, "value": curve.values})
        if sampling_rate is not None:
            frame.insert(2, "hz", frame["frequency"] * sampling_rate)
        frames.append(frame)
    if not frames:
        columns = ["W", "frequency", *(["hz"] if sampling_rate is not None else []), "value"]
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)


def write_curves(
    path: str | Path, curves: Iterable[DiscrepancyCurve], sampling_rate: float | None = None
) -> None:
    curves_frame(curves, sampling_rate).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote curves to %s", path)
