"""
Utility modules for linear response computations
"""

from .errors import (
    LinearResponseError,
    ConfigError,
    SystemDefinitionError,
    BlowUpError,
    DegenerateBasisError,
    ConditioningError,
    ValidationFailedError,
    OracleError,
)

__all__ = [
    'LinearResponseError',
    'ConfigError',
    'SystemDefinitionError',
    'BlowUpError',
    'DegenerateBasisError',
    'ConditioningError',
    'ValidationFailedError',
    'OracleError',
]
