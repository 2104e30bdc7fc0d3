"""
Small numerical building blocks shared by the tangent, shadowing and
second-order sweeps.
"""

from typing import Callable, Iterable, Tuple

import numpy as np
import scipy.linalg


class CompensatedSum:
    """
    Kahan-compensated accumulator for scalars or fixed-shape arrays.

    Segment sums run over N·A terms of similar size, so the running
    compensation keeps the error independent of the number of terms.
    """

    def __init__(self, shape=()):
        self.total = np.zeros(shape)
        self._compensation = np.zeros(shape)
        self.count = 0

    def add(self, value, weight: float = 1.0):
        y = weight * np.asarray(value, dtype=float) - self._compensation
        t = self.total + y
        self._compensation = (t - self.total) - y
        self.total = t
        self.count += 1

    @property
    def value(self):
        if self.total.ndim == 0:
            return float(self.total)
        return self.total.copy()


def trapezoid_weight(n: int, last: int) -> float:
    """Weight of step n in a sum with 1/2 weight at both end points"""
    return 0.5 if n == 0 or n == last else 1.0


def trapezoid_sum(values: Iterable) -> float:
    """Sum with 1/2 weight at the two end points, compensated"""
    values = list(values)
    if not values:
        return 0.0
    last = len(values) - 1
    acc = CompensatedSum(np.shape(values[0]))
    if last == 0:
        acc.add(values[0])
        return acc.value
    for n, value in enumerate(values):
        acc.add(value, trapezoid_weight(n, last))
    return acc.value


def positive_qr(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Economic QR factorization with a non-negative R diagonal.

    Fixing the signs makes Q unique, so log diag(R) can be read as
    finite-time Lyapunov growth.

    Args:
        matrix: M×u array with u <= M

    Returns:
        (Q, R) with Q of shape M×u and R of shape u×u
    """
    rows, cols = matrix.shape
    if cols == 0:
        return np.zeros((rows, 0)), np.zeros((0, 0))
    q, r = scipy.linalg.qr(matrix, mode='economic')
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, signs[:, np.newaxis] * r


def central_difference(func: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    """Centered difference (func(h) - func(-h)) / 2h of a one-parameter family"""
    return (np.asarray(func(h), dtype=float) - np.asarray(func(-h), dtype=float)) / (2.0 * h)


def relative_discrepancy(analytic, approx) -> float:
    """‖analytic − approx‖ / max(‖analytic‖, ‖approx‖, 1)"""
    analytic = np.asarray(analytic, dtype=float)
    approx = np.asarray(approx, dtype=float)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(approx), 1.0)
    return float(np.linalg.norm(analytic - approx) / scale)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)"""
    slope, _ = np.polyfit(np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float)), 1)
    return float(slope)
