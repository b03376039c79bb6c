"""Shared test fixtures for freqband tests."""

from __future__ import annotations

import numpy as np
import pytest

from freqband.bootstrap import BootstrapConfig, KernelConfig
from freqband.search import DetectionConfig
from freqband.tvspec import TimeSeries, WindowConfig


@pytest.fixture
def rng():
    """A seeded generator so every test sees the same draws."""
    return np.random.default_rng(20240611)


@pytest.fixture
def white_series(rng):
    """Three channels of Gaussian noise, long enough for N=16."""
    return TimeSeries(rng.standard_normal((160, 3)))


@pytest.fixture
def small_window():
    """N=16: bins 1..7 are available."""
    return WindowConfig(N=16)


@pytest.fixture
def fast_config(small_window):
    """Cheap detection settings for tests that exercise the full pipeline."""
    return DetectionConfig(
        window=small_window,
        kernel=KernelConfig(bandwidth=0.3),
        bootstrap=BootstrapConfig(resamples=19, alpha=0.1, base_seed=7, workers=1),
    )
