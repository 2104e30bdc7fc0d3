"""
Registry of built-in dynamical systems.
Maps names used on the command line and in config files to system classes.
"""

from typing import Dict, List, Type
import logging

from .base_system import MapSystem
from .solenoid import SolenoidMap
from .contracting_affine import ContractingAffineMap
from .expanding_circle import ExpandingCircleMap
from ..utils.errors import ConfigError


class SystemRegistry:
    """
    Registry for dynamical systems.

    Systems are stateless, so one instance per name is shared by all
    replicas.
    """

    def __init__(self):
        """Initialize registry with the built-in systems."""
        self.logger = logging.getLogger('flr.config')
        self._classes: Dict[str, Type[MapSystem]] = {}
        self._instances: Dict[str, MapSystem] = {}
        for system_class in (SolenoidMap, ContractingAffineMap, ExpandingCircleMap):
            self.register(system_class)

    def register(self, system_class: Type[MapSystem]):
        """Register a MapSystem subclass under its name"""
        self._classes[system_class.name] = system_class
        self._instances.pop(system_class.name, None)
        self.logger.debug(f"Registered system {system_class.name} ({system_class.__name__})")

    def get_system(self, name: str) -> MapSystem:
        """
        Look up a system by name.

        Raises:
            ConfigError: If no system is registered under that name
        """
        if name not in self._classes:
            raise ConfigError(f"Unknown map '{name}'; available: {', '.join(self.list_systems())}")
        if name not in self._instances:
            self._instances[name] = self._classes[name]()
        return self._instances[name]

    def list_systems(self) -> List[str]:
        return sorted(self._classes)


# Global registry instance
registry = SystemRegistry()
