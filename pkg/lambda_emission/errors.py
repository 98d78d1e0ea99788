"""
Exception hierarchy for the emission simulator.
Library code raises these; only cli.py turns them into exit codes.
"""

from typing import Optional, Tuple


class EmissionError(Exception):
    """Base class for all simulator errors."""


class ParameterError(EmissionError, ValueError):
    """Invalid physical parameters, grids or integrator settings."""


class TruncationError(EmissionError, ValueError):
    """Truncating a field state would discard too much probability."""

    def __init__(self, message: str, discarded: float):
        super().__init__(message)
        self.discarded = discarded


class DomainError(EmissionError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConstraintError(EmissionError, ValueError):
    """A structural precondition of a field-state family is violated."""


class ConfigError(EmissionError, ValueError):
    """Scenario configuration cannot be resolved."""


class ConvergenceError(EmissionError, RuntimeError):
    """Time integration did not reach a stationary state."""

    def __init__(self, message: str, worst: Optional[Tuple[float, int, float]] = None):
        super().__init__(message)
        # (detuning, block index, deviation)
        self.worst = worst


class VerificationError(EmissionError, AssertionError):
    """A named invariant check failed."""

    def __init__(self, check: str, detail: str):
        super().__init__(f"{check}: {detail}")
        self.check = check
        self.detail = detail
