# src/config/settings.py
"""
Configuration management for linear response runs and studies.
"""

import os
import math
import yaml
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin, get_type_hints
from dataclasses import dataclass, field, fields, asdict, replace
import logging

from ..utils.errors import ConfigError


def _default_gamma_list() -> List[float]:
    return [round(0.02 * i, 10) for i in range(16)]


def _coerce_scalar(name: str, value: Any, target: type) -> Any:
    if target is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.strip().lower() in ('true', 'false', 'yes', 'no'):
            return value.strip().lower() in ('true', 'yes')
        raise ConfigError(f"{name} must be true or false, got {value!r}")
    if target is int:
        if isinstance(value, bool):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        if isinstance(value, int):
            return value
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        if not number.is_integer():
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(number)
    if target is float:
        if isinstance(value, bool):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number, got {value!r}")
    if not isinstance(value, target):
        raise ConfigError(f"{name} must be a {target.__name__}, got {value!r}")
    return value


def _coerce(name: str, value: Any, annotation: Any) -> Any:
    """Convert a raw YAML value to the field's declared type"""
    origin, args = get_origin(annotation), get_args(annotation)
    if origin is Union:
        if value is None and type(None) in args:
            return None
        annotation = next(a for a in args if a is not type(None))
        origin, args = get_origin(annotation), get_args(annotation)
    if value is None:
        raise ConfigError(f"{name} must not be empty")
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list, got {value!r}")
        return [_coerce_scalar(f"{name}[{i}]", item, args[0]) for i, item in enumerate(value)]
    return _coerce_scalar(name, value, annotation)


@dataclass
class RunConfig:
    """Effective configuration of a run or study; every output echoes it"""
    map_name: str = 'solenoid'
    gamma: float = 0.1
    n_steps: int = 20
    n_segments: int = 1000
    window: int = 10
    unstable_dim: Optional[int] = None
    spinup: int = 1000
    seed: int = 0
    reps: int = 8
    output: Optional[str] = None

    # Pipeline knobs
    discard_segments: int = 0
    tangent_warmup: int = 100
    store_trajectory: bool = False
    kkt_dense_limit: int = 2000
    workers: Optional[int] = None
    diagnostics_dir: Optional[str] = None
    dump_orbit: Optional[str] = None
    probe_count: int = 3

    # Study grids
    a_list: List[int] = field(default_factory=lambda: [125, 250, 500, 1000, 2000])
    w_list: List[int] = field(default_factory=lambda: [2, 5, 10, 20, 40])
    gamma_list: List[float] = field(default_factory=_default_gamma_list)

    # Finite-difference oracle
    oracle_gamma_grid: Optional[List[float]] = None
    oracle_steps_per_run: int = 20000
    oracle_runs_per_gamma: int = 4
    oracle_spinup: int = 1000
    oracle_seed: int = 1
    oracle_weighted: bool = False

    # Logging
    log_level: str = 'INFO'
    log_to_file: bool = True

    def validate(self) -> 'RunConfig':
        """Raise ConfigError for values no run can use"""
        if not isinstance(self.map_name, str) or not self.map_name:
            raise ConfigError("map_name must be a non-empty string")
        if not math.isfinite(float(self.gamma)):
            raise ConfigError(f"gamma must be finite, got {self.gamma}")

        positive = {'n_steps': self.n_steps, 'n_segments': self.n_segments, 'reps': self.reps,
                    'probe_count': self.probe_count, 'oracle_steps_per_run': self.oracle_steps_per_run,
                    'oracle_runs_per_gamma': self.oracle_runs_per_gamma}
        for name, value in positive.items():
            if int(value) < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")

        non_negative = {'window': self.window, 'spinup': self.spinup, 'tangent_warmup': self.tangent_warmup,
                        'kkt_dense_limit': self.kkt_dense_limit, 'oracle_spinup': self.oracle_spinup,
                        'discard_segments': self.discard_segments}
        for name, value in non_negative.items():
            if int(value) < 0:
                raise ConfigError(f"{name} must be >= 0, got {value}")

        if self.discard_segments >= self.n_segments:
            raise ConfigError(f"discard_segments ({self.discard_segments}) must be smaller than "
                              f"n_segments ({self.n_segments})")
        if self.unstable_dim is not None and self.unstable_dim < 0:
            raise ConfigError(f"unstable_dim must be >= 0, got {self.unstable_dim}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if any(a < 1 for a in self.a_list):
            raise ConfigError(f"a_list entries must be >= 1, got {self.a_list}")
        if any(w < 0 for w in self.w_list):
            raise ConfigError(f"w_list entries must be >= 0, got {self.w_list}")
        if self.log_level.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR'):
            raise ConfigError(f"Unknown log level {self.log_level}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        """Build from a flat mapping; unknown keys and values of the wrong type are errors"""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
        hints = get_type_hints(cls)
        typed = {key: _coerce(key, value, hints[key]) for key, value in data.items()}
        return cls(**typed).validate()

    def with_overrides(self, **overrides) -> 'RunConfig':
        """Copy with the given values replaced; None means 'keep'"""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes).validate()

    def resolve_workers(self) -> int:
        """Configured workers, else FLR_WORKERS, else the CPU count"""
        if self.workers:
            return self.workers
        env_value = os.getenv('FLR_WORKERS')
        if env_value:
            try:
                workers = int(env_value)
            except ValueError:
                raise ConfigError(f"FLR_WORKERS must be an integer, got '{env_value}'")
            if workers < 1:
                raise ConfigError(f"FLR_WORKERS must be >= 1, got {workers}")
            return workers
        return os.cpu_count() or 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class ConfigManager:
    """Loads the flat YAML run configuration"""

    def __init__(self, config_file: str = None):
        self.logger = logging.getLogger('flr.config')

        # Determine config file path
        if config_file:
            self.config_file = Path(config_file)
            if not self.config_file.exists():
                raise ConfigError(f"Config file not found: {self.config_file}")
        else:
            self.config_file = self._find_config_file()

        self.run_config = RunConfig()
        self._load_config()

    def _find_config_file(self) -> Optional[Path]:
        """Find configuration file in standard locations"""
        possible_locations = [
            Path('config/flr.yml'),
            Path('src/config/defaults.yml'),
            Path(__file__).parent / 'defaults.yml',
            Path.home() / '.config' / 'flr' / 'flr.yml',
        ]

        for location in possible_locations:
            if location.exists():
                self.logger.info(f"Found config file at {location}")
                return location

        self.logger.info("No config file found, using built-in defaults")
        return None

    def _load_config(self):
        """Load configuration from file"""
        if self.config_file is None:
            return
        try:
            with open(self.config_file, 'r') as f:
                config_data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse {self.config_file}: {e}")

        if config_data is None:
            config_data = {}
        if not isinstance(config_data, dict):
            raise ConfigError(f"{self.config_file} must hold a flat key-value mapping")

        self.run_config = RunConfig.from_dict(config_data)
        self.logger.info(f"Loaded configuration from {self.config_file}")

    def reload_config(self):
        """Reload configuration from file"""
        self.logger.info("Reloading configuration")
        self.run_config = RunConfig()
        self._load_config()


# Global configuration instance
config_manager = None


def get_config() -> ConfigManager:
    """Get global configuration manager instance"""
    global config_manager
    if config_manager is None:
        config_manager = ConfigManager()
    return config_manager


def initialize_config(config_file: str = None) -> ConfigManager:
    """Initialize configuration manager with specific config file"""
    global config_manager
    config_manager = ConfigManager(config_file)
    return config_manager
