"""
Dynamical systems package.

Usage:
    from src.systems import registry

    system = registry.get_system('solenoid')
    observable = system.observable()
"""

from .base_system import MapSystem, Observable, coordinate_observable
from .solenoid import SolenoidMap
from .contracting_affine import ContractingAffineMap
from .expanding_circle import ExpandingCircleMap
from .registry import registry, SystemRegistry
from .validation import validate_system, ValidationReport

__all__ = [
    'MapSystem',
    'Observable',
    'coordinate_observable',
    'SolenoidMap',
    'ContractingAffineMap',
    'ExpandingCircleMap',
    'registry',
    'SystemRegistry',
    'validate_system',
    'ValidationReport',
]
