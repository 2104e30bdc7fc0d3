"""
Exception hierarchy for the linear response pipeline.
Every error can carry the pipeline stage and the trajectory step it came from,
and maps to a process exit code used by the command line front end.
"""

from typing import Optional


class LinearResponseError(Exception):
    """Base class for all pipeline errors"""

    exit_code = 1

    def __init__(self, message: str, stage: Optional[str] = None, step: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.step = step

    def __str__(self) -> str:
        parts = []
        if self.stage:
            parts.append(f"[{self.stage}]")
        if self.step is not None:
            parts.append(f"step {self.step}:")
        parts.append(self.message)
        return ' '.join(parts)


class ConfigError(LinearResponseError):
    """Invalid or unknown configuration values"""
    exit_code = 2


class SystemDefinitionError(LinearResponseError):
    """Callbacks of a map disagree on dimensions"""
    exit_code = 2


class BlowUpError(LinearResponseError):
    """A state or tangent quantity became non-finite"""
    exit_code = 3


class DegenerateBasisError(LinearResponseError):
    """Homogeneous tangent solutions collapsed within one segment"""
    exit_code = 4


class ConditioningError(LinearResponseError):
    """Shadowing problem is singular or not positive definite"""
    exit_code = 4


class ValidationFailedError(LinearResponseError):
    """Analytic derivatives disagree with finite differences"""
    exit_code = 5


class OracleError(LinearResponseError):
    """Reference estimator could not produce an answer"""
    exit_code = 1
