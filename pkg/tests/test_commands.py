"""Tests for run configurations and the command runners."""

from __future__ import annotations

import json

import pytest

from freqband.commands import RunConfig, run, run_components, run_detect, run_simulate, truth_path
from freqband.dataio import read_csv
from freqband.errors import DomainError, UsageError
from freqband.simgen import scheme


@pytest.fixture
def simulated(tmp_path):
    """A short two-channel white noise series written to CSV."""
    path = tmp_path / "wn.csv"
    run_simulate(
        RunConfig(command="simulate", schemes=("WN1B",), T=160, p=2, seed=1, output=str(path))
    )
    return path


def _detect(path, **kwargs) -> RunConfig:
    return RunConfig(command="detect", input=str(path), resamples=9, workers=1, **kwargs)


class TestRunConfig:
    """Tests for validated, serializable run configurations."""

    def test_round_trip(self):
        """A recorded configuration rebuilds the same run."""
        cfg = RunConfig(command="detect", input="x.csv", widths=(2, 3), omegas=(0.2,), workers=3)
        data = cfg.to_dict()
        assert "workers" not in data
        assert data["widths"] == [2, 3]
        assert RunConfig.from_dict(json.loads(json.dumps(data))) == cfg

    def test_unknown_key(self):
        """Unknown keys in a recorded configuration are rejected."""
        with pytest.raises(UsageError, match="colour"):
            RunConfig.from_dict({"command": "detect", "colour": "red"})

    def test_unknown_command(self):
        """Only the four commands exist."""
        with pytest.raises(UsageError):
            RunConfig(command="plot")

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"w_min_div": 4},
            {"w_max_div": 3},
            {"alpha": 1.5},
            {"resamples": 0},
            {"sampling_rate": -1.0},
            {"seed": -1},
            {"width": 0},
        ],
    )
    def test_validation(self, kwargs):
        """Out-of-range options are usage errors."""
        with pytest.raises(UsageError):
            RunConfig(command="detect", **kwargs)


class TestSimulate:
    """Tests for the simulate command."""

    def test_writes_series_and_truth(self, simulated):
        """The CSV holds T rows of p channels; the sidecar records the truth."""
        ts = read_csv(simulated)
        assert (ts.length, ts.channels) == (160, 2)
        truth = json.loads(truth_path(simulated).read_text())
        assert truth["partition_points"] == []
        assert truth["scheme"]["name"] == "WN1B"

    def test_scheme_file(self, tmp_path):
        """A JSON scheme definition replaces the named schemes."""
        definition = tmp_path / "scheme.json"
        definition.write_text(json.dumps(scheme("M3B-2", 4, 120).to_dict()))
        output = tmp_path / "m.csv"
        truth = run(RunConfig(command="simulate", scheme_file=str(definition), output=str(output)))
        assert truth["partition_points"] == [0.35]
        assert read_csv(output).length == 120

    def test_needs_length(self, tmp_path):
        """Named schemes need T and p."""
        with pytest.raises(UsageError):
            cfg = RunConfig(command="simulate", schemes=("L3B",), output=str(tmp_path / "x"))
            run_simulate(cfg)

    def test_needs_output(self):
        """The series must go to a file."""
        with pytest.raises(UsageError):
            run_simulate(RunConfig(command="simulate", schemes=("L3B",), T=100, p=2))


class TestDetect:
    """Tests for the detect command."""

    def test_document(self, simulated, tmp_path):
        """The document records configuration, effective settings and the result."""
        output = tmp_path / "out.json"
        document = run_detect(_detect(simulated, output=str(output)))
        assert set(document) == {"command", "config", "effective", "result", "selected_W"}
        assert document["effective"]["N"] == 34
        assert document["effective"]["scales"] == [4, 5, 6, 7, 8]
        assert document["selected_W"] in document["effective"]["scales"]
        assert json.loads(output.read_text()) == json.loads(json.dumps(document))
        assert (tmp_path / "out.curves.csv").exists()

    def test_byte_identical_reruns(self, simulated, tmp_path):
        """Two runs with the same seed write the same bytes."""
        output = tmp_path / "out.json"
        run_detect(_detect(simulated, output=str(output)))
        first = output.read_bytes()
        run_detect(_detect(simulated, output=str(output)))
        assert output.read_bytes() == first

    def test_hz(self, simulated):
        """A sampling rate puts Hz on the bands."""
        document = run_detect(_detect(simulated, sampling_rate=64.0))
        assert document["result"]["bands"][-1]["high_hz"] == 32.0

    def test_explicit_widths(self, simulated):
        """Explicit widths replace the default scale set."""
        document = run_detect(_detect(simulated, widths=(3, 2)))
        assert document["result"]["scales"] == [2, 3]

    def test_attribution(self, simulated):
        """--attribute adds one attribution per detected point."""
        document = run_detect(_detect(simulated, attribute=True))
        assert len(document["attribution"]) == document["result"]["k_hat"]

    def test_needs_input(self):
        """detect needs --input."""
        with pytest.raises(UsageError):
            run_detect(RunConfig(command="detect"))

    def test_too_short(self, tmp_path):
        """A series shorter than two windows is a domain error."""
        path = tmp_path / "short.csv"
        path.write_text("1\n2\n3\n")
        with pytest.raises(DomainError):
            run_detect(_detect(path))


class TestComponents:
    """Tests for the components command."""

    def test_snapping(self, simulated):
        """Requested frequencies snap to the k/N grid and get a p x p table."""
        cfg = RunConfig(
            command="components", input=str(simulated), omegas=(0.2,), resamples=9, workers=1
        )
        document = run_components(cfg)
        entry = document["components"][0]
        assert entry["frequency"] == 7 / 34
        assert entry["snap_distance"] == pytest.approx(abs(0.2 - 7 / 34))
        assert entry["W"] == 4
        assert entry["tests"] == 3
        assert len(entry["pvalues"]) == 2

    def test_needs_omega(self, simulated):
        """At least one frequency is required."""
        with pytest.raises(UsageError):
            run_components(RunConfig(command="components", input=str(simulated)))


class TestBench:
    """Tests for the bench command."""

    def test_unknown_table(self):
        """Table ids outside 1..4 are usage errors."""
        with pytest.raises(UsageError):
            run(RunConfig(command="bench", table=7))
