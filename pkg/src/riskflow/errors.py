"""Exception hierarchy shared across the engine.

Every error raised by this package derives from :class:`RiskEngineError`, so
callers (including the CLI) can distinguish engine failures from programming
errors.  The split below mirrors the CLI exit codes: input problems
(:class:`DomainError`, :class:`DataError`, :class:`ConfigError`) map to exit
code 2, numerical failures (:class:`NumericError`) to exit code 3.
"""

from __future__ import annotations

__all__ = [
    "RiskEngineError",
    "DomainError",
    "DataError",
    "ConfigError",
    "NumericError",
]


class RiskEngineError(Exception):
    """Base class for all errors raised by riskflow."""


class DomainError(RiskEngineError):
    """A numeric argument is outside its mathematical domain.

    Examples: a confidence level not in (0, 1), a non-positive scale
    parameter, a probability vector that does not sum to one.
    """


class DataError(RiskEngineError):
    """Input data is malformed or insufficient.

    Examples: an empty sample, a returns file with a bad header or
    non-monotone dates, a finite process with more atoms than supported.
    """


class ConfigError(RiskEngineError):
    """An experiment configuration or environment setting is invalid."""


class NumericError(RiskEngineError):
    """An iterative numeric routine failed to converge or produced non-finite
    values.  The message records which routine failed and with what inputs."""
