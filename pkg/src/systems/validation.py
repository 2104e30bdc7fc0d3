"""
Finite-difference validation of the analytic derivative callbacks of a map.

Each derivative callback is compared against a centered difference of the
next-lower-order callback; the worst relative discrepancy over all probe
states is reported per callback.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging

import numpy as np

from .base_system import MapSystem, Observable
from ..utils.errors import SystemDefinitionError
from ..utils.numerics import central_difference, relative_discrepancy


logger = logging.getLogger('flr.validation')

FD_STEP = 1e-6
FAILURE_TOLERANCE = 1e-4


@dataclass
class ValidationReport:
    """Worst discrepancies per callback plus detected failures"""
    system: str
    gamma: float
    probe_count: int
    tolerance: float
    errors: Dict[str, float] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    blowups: List[Dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and not self.blowups

    def record(self, check: str, discrepancy: float):
        self.errors[check] = max(self.errors.get(check, 0.0), discrepancy)

    def finalize(self):
        self.failures = sorted(name for name, err in self.errors.items()
                               if not np.isfinite(err) or err > self.tolerance)

    def to_dict(self) -> Dict:
        return {
            'system': self.system,
            'gamma': self.gamma,
            'probe_count': self.probe_count,
            'tolerance': self.tolerance,
            'errors': dict(sorted(self.errors.items())),
            'failures': list(self.failures),
            'blowups': list(self.blowups),
            'passed': self.passed,
        }


def _require_shape(system: MapSystem, name: str, value: np.ndarray, expected: tuple):
    if np.shape(value) != expected:
        raise SystemDefinitionError(
            f"{system.name}.{name} returned shape {np.shape(value)}, expected {expected}"
        )


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    w = rng.standard_normal(dim)
    return w / np.linalg.norm(w)


def random_probe_states(system: MapSystem, count: int, seed: int = 0) -> np.ndarray:
    """Draw probe states uniformly from the system's initial box"""
    rng = np.random.default_rng(seed)
    low, high = system.initial_box()
    return low + (high - low) * rng.random((count, system.dim))


def validate_system(system: MapSystem, probe_states: Sequence[np.ndarray], gamma: float,
                    observable: Optional[Observable] = None, h: float = FD_STEP,
                    tolerance: float = FAILURE_TOLERANCE, seed: int = 0) -> ValidationReport:
    """
    Compare analytic callbacks with centered finite differences.

    Args:
        system: Map to validate
        probe_states: Nonempty collection of finite states
        gamma: Parameter value
        observable: Optional objective whose gradient is also checked
        h: Finite-difference step
        tolerance: Discrepancy above which a check is flagged as failed
        seed: Seed for the random probe directions

    Returns:
        ValidationReport with the worst discrepancy per check

    Raises:
        SystemDefinitionError: If callbacks return arrays of the wrong shape
        ValueError: If no probe states are given or a probe is not finite
    """
    probes = np.atleast_2d(np.asarray(probe_states, dtype=float))
    if probes.size == 0:
        raise ValueError("validate_system needs at least one probe state")
    if not np.all(np.isfinite(probes)):
        raise ValueError("probe states must be finite")
    if probes.shape[1] != system.dim:
        raise SystemDefinitionError(
            f"{system.name}: probe states have dimension {probes.shape[1]}, expected {system.dim}"
        )

    rng = np.random.default_rng(seed)
    dim = system.dim
    report = ValidationReport(system=system.name, gamma=float(gamma),
                              probe_count=len(probes), tolerance=tolerance)
    logger.info(f"Validating {system.name} on {len(probes)} probe states at gamma={gamma}")

    for index, x in enumerate(probes):
        image = system.step(x, gamma)
        if not np.all(np.isfinite(image)):
            report.blowups.append({'probe': index, 'state': x.tolist()})
            logger.warning(f"Probe {index}: step produced a non-finite state")
            continue
        _require_shape(system, 'step', image, (dim,))

        w = _unit_vector(rng, dim)
        y = _unit_vector(rng, dim)

        jvp = system.jacobian_vector(x, gamma, w)
        hvv = system.hessian_vector_vector(x, gamma, y, w)
        pv = system.param_vector(x, gamma)
        pvj = system.param_vector_jacobian(x, gamma, w)
        for name, value in (('jacobian_vector', jvp), ('hessian_vector_vector', hvv),
                            ('param_vector', pv), ('param_vector_jacobian', pvj)):
            _require_shape(system, name, value, (dim,))

        fd_jvp = system.wrap_difference(
            system.step(x + h * w, gamma) - system.step(x - h * w, gamma)) / (2 * h)
        fd_hvv = central_difference(lambda t: system.jacobian_vector(x + t * y, gamma, w), h)
        fd_pv = system.wrap_difference(
            system.step(x, gamma + h) - system.step(x, gamma - h)) / (2 * h)
        fd_pvj = central_difference(lambda t: system.param_vector(x + t * w, gamma), h)

        candidates = {
            'jacobian_vector': (jvp, fd_jvp),
            'hessian_vector_vector': (hvv, fd_hvv),
            'param_vector': (pv, fd_pv),
            'param_vector_jacobian': (pvj, fd_pvj),
        }
        if any(not np.all(np.isfinite(fd)) for _, fd in candidates.values()):
            report.blowups.append({'probe': index, 'state': x.tolist()})
            logger.warning(f"Probe {index}: finite differences produced non-finite values")
            continue
        for name, (analytic, approx) in candidates.items():
            report.record(name, relative_discrepancy(analytic, approx))

        # Linearity in w, column-stack consistency and Hessian symmetry
        w2 = _unit_vector(rng, dim)
        a, b = rng.standard_normal(2)
        combined = system.jacobian_vector(x, gamma, a * w + b * w2)
        report.record('jacobian_linearity',
                      relative_discrepancy(combined, a * jvp + b * system.jacobian_vector(x, gamma, w2)))
        stacked = system.jacobian_vector(x, gamma, np.column_stack([w, w2]))
        _require_shape(system, 'jacobian_vector', stacked, (dim, 2))
        report.record('jacobian_linearity', relative_discrepancy(stacked[:, 0], jvp))
        report.record('hessian_symmetry',
                      relative_discrepancy(hvv, system.hessian_vector_vector(x, gamma, w, y)))

        if system.periodic_mask.any():
            shifted = x + np.where(system.periodic_mask, system.period_array, 0.0)
            report.record('wrap_invariance', max(
                relative_discrepancy(system.jacobian_vector(shifted, gamma, w), jvp),
                relative_discrepancy(system.hessian_vector_vector(shifted, gamma, y, w), hvv),
            ))

        if observable is not None:
            grad = np.asarray(observable.gradient(x), dtype=float)
            _require_shape(system, 'observable.gradient', grad, (dim,))
            fd_grad = central_difference(lambda t: observable.value(x + t * w), h)
            report.record('observable_gradient', relative_discrepancy(grad @ w, fd_grad))

    report.finalize()
    if report.passed:
        logger.info(f"{system.name}: all derivative callbacks agree with finite differences")
    else:
        logger.warning(f"{system.name}: validation failures {report.failures}, "
                       f"{len(report.blowups)} blow-ups")
    return report
