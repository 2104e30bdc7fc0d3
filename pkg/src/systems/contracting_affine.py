"""
Contracting affine map x' = 0.5 x + γ.

Every orbit converges to the fixed point 2γ, so the long-time average of
Φ(x) = x is 2γ and its derivative is exactly 2. With no unstable directions
the linear response reduces to the shadowing contribution.
"""

import numpy as np

from .base_system import MapSystem, Observable, coordinate_observable


class ContractingAffineMap(MapSystem):
    """One-dimensional contraction with a closed-form response"""

    name = 'contracting_affine'
    dim = 1
    unstable_dim = 0
    periods = (None,)
    default_gamma = 0.1
    rate = 0.5

    def step(self, x, gamma):
        return self.rate * np.asarray(x, dtype=float) + gamma

    def jacobian_vector(self, x, gamma, w):
        return self.rate * np.asarray(w, dtype=float)

    def hessian_vector_vector(self, x, gamma, y, w):
        return np.zeros_like(np.asarray(w, dtype=float))

    def param_vector(self, x, gamma):
        return np.ones(1)

    def param_vector_jacobian(self, x, gamma, w):
        return np.zeros_like(np.asarray(w, dtype=float))

    def observable(self) -> Observable:
        return coordinate_observable(0, self.dim)

    def fixed_point(self, gamma: float) -> float:
        return gamma / (1.0 - self.rate)

    def analytic_mean(self, gamma: float) -> float:
        """Long-time average of Φ(x) = x"""
        return self.fixed_point(gamma)

    def analytic_derivative(self, gamma: float) -> float:
        """d(analytic_mean)/dγ"""
        return 1.0 / (1.0 - self.rate)
