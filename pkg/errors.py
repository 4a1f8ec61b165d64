"""
Exception hierarchy for the radiation-reaction engine and the exit codes the
command line maps them to.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_INVALID = 2
EXIT_STEP_TOO_LARGE = 3
EXIT_DRIFT_EXCEEDED = 4
EXIT_NUMERICAL_FAILURE = 5


class RadiationReactionError(Exception):
    """Base class for every error raised by the engine."""


class NonTimelikeVelocity(RadiationReactionError):
    pass


class QueryBeyondHistory(RadiationReactionError):
    """A delay lookup asked for a proper time newer than the last accepted sample."""


class NonMonotoneTime(RadiationReactionError):
    pass


class InvalidSample(RadiationReactionError):
    pass


class RootNotBracketed(RadiationReactionError):
    pass


class NumericalStall(RadiationReactionError):
    pass


class DegenerateDenominator(RadiationReactionError):
    pass


class StepTooLarge(RadiationReactionError):
    pass


class DriftExceeded(RadiationReactionError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        # partial IntegrationResult up to the failing step
        self.result = result


class ConfigInvalid(RadiationReactionError):
    pass


def exit_code_for(error: BaseException) -> int:
    """Map an exception raised by a run to the documented process exit code."""
    if isinstance(error, ConfigInvalid):
        return EXIT_CONFIG_INVALID
    if isinstance(error, StepTooLarge):
        return EXIT_STEP_TOO_LARGE
    if isinstance(error, DriftExceeded):
        return EXIT_DRIFT_EXCEEDED
    return EXIT_NUMERICAL_FAILURE
