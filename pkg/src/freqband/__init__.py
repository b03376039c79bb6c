"""freqband - Frequency band estimation for multivariate nonstationary time series."""

__version__ = "0.1.0"
