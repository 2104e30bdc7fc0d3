"""
Modified solenoid map: one contracting coordinate coupled to two expanding
circles, with nonlinear interaction between the stable and unstable variables.

    x1' = 0.05 x1 + 0.1 cos(8 x2) - 0.1 sin(5 x3)
    x2' = 2 x2 + γ (1 + x1) sin(8 x2)     mod 2π
    x3' = 3 x3 + γ (1 + x1) cos(2 x3)     mod 2π

Two unstable directions; the objective is Φ(x) = x1.
"""

from typing import Tuple

import numpy as np

from .base_system import MapSystem, Observable, coordinate_observable


TWO_PI = 2.0 * np.pi


class SolenoidMap(MapSystem):
    """Three-dimensional solenoid-type map with u = 2"""

    name = 'solenoid'
    dim = 3
    unstable_dim = 2
    periods = (None, TWO_PI, TWO_PI)
    default_gamma = 0.1

    def step(self, x: np.ndarray, gamma: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        out = np.empty_like(x)
        out[..., 0] = 0.05 * x1 + 0.1 * np.cos(8 * x2) - 0.1 * np.sin(5 * x3)
        out[..., 1] = np.mod(2 * x2 + gamma * (1 + x1) * np.sin(8 * x2), TWO_PI)
        out[..., 2] = np.mod(3 * x3 + gamma * (1 + x1) * np.cos(2 * x3), TWO_PI)
        return out

    def jacobian(self, x: np.ndarray, gamma: float) -> np.ndarray:
        """Jacobian matrix [∂f^i/∂z^j]"""
        x1, x2, x3 = x
        s8, c8 = np.sin(8 * x2), np.cos(8 * x2)
        s2, c2 = np.sin(2 * x3), np.cos(2 * x3)
        return np.array([
            [0.05, -0.8 * s8, -0.5 * np.cos(5 * x3)],
            [gamma * s8, 2 + 8 * gamma * (1 + x1) * c8, 0.0],
            [gamma * c2, 0.0, 3 - 2 * gamma * (1 + x1) * s2],
        ])

    def hessian(self, x: np.ndarray, gamma: float) -> np.ndarray:
        """Hessian tensor H[i, j, l] = ∂²f^i/∂z^j∂z^l"""
        x1, x2, x3 = x
        h = np.zeros((3, 3, 3))
        h[0, 1, 1] = -6.4 * np.cos(8 * x2)
        h[0, 2, 2] = 2.5 * np.sin(5 * x3)

        h[1, 0, 1] = h[1, 1, 0] = 8 * gamma * np.cos(8 * x2)
        h[1, 1, 1] = -64 * gamma * (1 + x1) * np.sin(8 * x2)

        h[2, 0, 2] = h[2, 2, 0] = -2 * gamma * np.sin(2 * x3)
        h[2, 2, 2] = -4 * gamma * (1 + x1) * np.cos(2 * x3)
        return h

    def jacobian_vector(self, x, gamma, w):
        return self.jacobian(x, gamma) @ np.asarray(w, dtype=float)

    def hessian_vector_vector(self, x, gamma, y, w):
        return np.einsum('ijl,j,l...->i...', self.hessian(x, gamma), np.asarray(y, dtype=float),
                         np.asarray(w, dtype=float))

    def param_vector(self, x, gamma):
        x1, x2, x3 = x
        return np.array([0.0, (1 + x1) * np.sin(8 * x2), (1 + x1) * np.cos(2 * x3)])

    def param_jacobian(self, x: np.ndarray) -> np.ndarray:
        """[∂δf^j/∂z^l]; independent of γ"""
        x1, x2, x3 = x
        return np.array([
            [0.0, 0.0, 0.0],
            [np.sin(8 * x2), 8 * (1 + x1) * np.cos(8 * x2), 0.0],
            [np.cos(2 * x3), 0.0, -2 * (1 + x1) * np.sin(2 * x3)],
        ])

    def param_vector_jacobian(self, x, gamma, w):
        return self.param_jacobian(x) @ np.asarray(w, dtype=float)

    def observable(self) -> Observable:
        return coordinate_observable(0, self.dim)

    def initial_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([0.0, 0.0, 0.0]), np.array([1.0, TWO_PI, TWO_PI])
