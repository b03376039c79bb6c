"""Exception hierarchy shared by the library and the command line front end."""

from __future__ import annotations

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class FreqbandError(Exception):
    """Base class for all freqband errors."""

    exit_code: int = 1


class UsageError(FreqbandError):
    """Invalid command line usage (unknown scheme, table id, ...)."""

    exit_code = EXIT_USAGE


class ParseError(FreqbandError):
    """Input data could not be read or parsed."""

    exit_code = EXIT_DATA


class DomainError(FreqbandError, ValueError):
    """A numeric precondition does not hold."""

    exit_code = EXIT_NUMERIC


class ContractViolation(DomainError):
    """An operation was called on an object in the wrong state."""


class NumericalError(DomainError):
    """A numerical sanity check failed."""
