"""
Expanding circle map x' = 2x + γ sin(x) mod 2π with Φ(x) = cos(x).
Here the whole space is unstable (u = M = 1), which exercises the
unstable-contribution path without any stable directions.
"""

from typing import Tuple

import numpy as np

from .base_system import MapSystem, Observable


TWO_PI = 2.0 * np.pi


class ExpandingCircleMap(MapSystem):
    """Uniformly expanding for |γ| < 1"""

    name = 'expanding_circle'
    dim = 1
    unstable_dim = 1
    periods = (TWO_PI,)
    default_gamma = 0.3

    def step(self, x, gamma):
        x = np.asarray(x, dtype=float)
        return np.mod(2 * x + gamma * np.sin(x), TWO_PI)

    def jacobian_vector(self, x, gamma, w):
        return (2 + gamma * np.cos(x[0])) * np.asarray(w, dtype=float)

    def hessian_vector_vector(self, x, gamma, y, w):
        return -gamma * np.sin(x[0]) * np.asarray(y, dtype=float)[0] * np.asarray(w, dtype=float)

    def param_vector(self, x, gamma):
        return np.array([np.sin(x[0])])

    def param_vector_jacobian(self, x, gamma, w):
        return np.cos(x[0]) * np.asarray(w, dtype=float)

    def observable(self) -> Observable:
        return Observable(
            value=lambda x: np.cos(np.asarray(x, dtype=float)[..., 0]),
            gradient=lambda x: np.array([-np.sin(x[0])]),
            name='cos',
        )

    def initial_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.zeros(1), np.full(1, TWO_PI)
