"""
Base class that every discrete-time map inherits from.
Provides the derivative interface used by the orbit, tangent and
second-order sweeps, so any flat-space map can plug in.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class Observable:
    """
    Instantaneous objective Φ whose long-time average is differentiated.

    value maps a state (M,) to a scalar; gradient maps a state to the
    covector dΦ (M,). Covectors share the vector representation (flat metric).
    """
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    name: str = 'phi'

    def shifted(self, constant: float) -> 'Observable':
        """Φ + c, which has the same linear response as Φ"""
        value, gradient = self.value, self.gradient
        return Observable(
            value=lambda x: value(x) + constant,
            gradient=gradient,
            name=f'{self.name}+{constant}',
        )

    def combine(self, weight: float, other: 'Observable', other_weight: float) -> 'Observable':
        """weight·Φ + other_weight·Φ₂"""
        v1, g1, v2, g2 = self.value, self.gradient, other.value, other.gradient
        return Observable(
            value=lambda x: weight * v1(x) + other_weight * v2(x),
            gradient=lambda x: weight * np.asarray(g1(x)) + other_weight * np.asarray(g2(x)),
            name=f'{weight}*{self.name}+{other_weight}*{other.name}',
        )


def coordinate_observable(index: int, dim: int) -> Observable:
    """Φ(x) = x^index with constant gradient"""
    unit = np.zeros(dim)
    unit[index] = 1.0
    return Observable(
        value=lambda x: np.asarray(x, dtype=float)[..., index],
        gradient=lambda x: unit.copy(),
        name=f'x{index + 1}',
    )


class MapSystem(ABC):
    """
    Abstract base class for all dynamical systems x_{n+1} = f(x_n; γ).

    Subclasses supply closed-form derivatives; finite differences are only
    used by validation. Implementations hold no mutable state, so callbacks
    may be invoked concurrently from independent replicas.

    Conventions:
    - step accepts a state (M,) or a batch (..., M).
    - derivative callbacks accept w as a vector (M,) or a column stack (M, k)
      and return the same shape; the result lives at f(x).
    - states on periodic coordinates are stored in [0, period); tangent
      objects are never wrapped.
    """

    name: str = 'map'
    dim: int = 1
    unstable_dim: int = 0
    # Per coordinate: period for wrapped coordinates, None otherwise
    periods: Tuple[Optional[float], ...] = (None,)
    default_gamma: float = 0.0

    @abstractmethod
    def step(self, x: np.ndarray, gamma: float) -> np.ndarray:
        """Next state f(x), wrapped on periodic coordinates"""
        pass

    @abstractmethod
    def jacobian_vector(self, x: np.ndarray, gamma: float, w: np.ndarray) -> np.ndarray:
        """f_* w at f(x)"""
        pass

    @abstractmethod
    def hessian_vector_vector(self, x: np.ndarray, gamma: float, y: np.ndarray, w: np.ndarray) -> np.ndarray:
        """(∇_Y f_*) w at f(x); y is a single vector, w a vector or column stack"""
        pass

    @abstractmethod
    def param_vector(self, x: np.ndarray, gamma: float) -> np.ndarray:
        """δf(x) = ∂f/∂γ at f(x)"""
        pass

    @abstractmethod
    def param_vector_jacobian(self, x: np.ndarray, gamma: float, w: np.ndarray) -> np.ndarray:
        """Directional derivative of δf at x in direction w, attached at f(x)"""
        pass

    @abstractmethod
    def observable(self) -> Observable:
        """Default objective for this system"""
        pass

    def initial_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Box from which initial states are drawn; defaults to [0, 1]^M"""
        return np.zeros(self.dim), np.ones(self.dim)

    @property
    def periodic_mask(self) -> np.ndarray:
        return np.array([p is not None for p in self.periods], dtype=bool)

    @property
    def period_array(self) -> np.ndarray:
        return np.array([p if p is not None else np.inf for p in self.periods], dtype=float)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map periodic coordinates into [0, period)"""
        x = np.array(x, dtype=float, copy=True)
        for i, period in enumerate(self.periods):
            if period is not None:
                x[..., i] = np.mod(x[..., i], period)
        return x

    def wrap_difference(self, dx: np.ndarray) -> np.ndarray:
        """Map a difference of wrapped states into (-P/2, P/2] on periodic coordinates"""
        dx = np.array(dx, dtype=float, copy=True)
        for i, period in enumerate(self.periods):
            if period is not None:
                dx[..., i] = dx[..., i] - period * np.round(dx[..., i] / period)
        return dx

    def describe(self) -> dict:
        """Summary for logging and config echo"""
        return {
            'name': self.name,
            'dim': self.dim,
            'unstable_dim': self.unstable_dim,
            'periods': [p for p in self.periods],
            'default_gamma': self.default_gamma,
            'class': self.__class__.__name__,
        }
