"""
Non-intrusive shadowing.

Finds coefficients a_α minimising Σ_α (2 d_αᵀ a_α + a_αᵀ C_α a_α) subject to
a_α = R_α a_{α-1} + b_α across segment interfaces, so that v = v' + e·a is
the bounded shadowing direction. The same factorised KKT system serves the
plain forcing X and the ψ-weighted forcing Ψ.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .orbit import Orbit
from .tangent import SegmentRecord, TangentSweep, replay_segment
from ..systems.base_system import MapSystem, Observable
from ..utils.errors import ConditioningError, ConfigError
from ..utils.numerics import CompensatedSum, trapezoid_weight


logger = logging.getLogger('flr.shadow')

DEFAULT_DENSE_LIMIT = 2000
FORCINGS = ('plain', 'psi')


@dataclass
class ShadowingSolution:
    """
    Coefficients of the shadowing directions.

    `a` belongs to the plain forcing (shadowing contribution), `a_tilde` to the
    ψ-weighted forcing (unstable contribution); either may be absent when only
    one forcing was solved.
    """
    a: Optional[np.ndarray] = None
    a_tilde: Optional[np.ndarray] = None
    objective: Optional[float] = None
    objective_tilde: Optional[float] = None
    lagrange_residual: float = 0.0
    constraint_residual: float = 0.0
    multipliers: Dict[str, np.ndarray] = field(default_factory=dict)

    def coefficients(self, which: str) -> np.ndarray:
        coeffs = self.a if which == 'plain' else self.a_tilde
        if coeffs is None:
            raise ValueError(f"no solution for forcing '{which}'")
        return coeffs

    def to_dict(self) -> Dict:
        return {
            'objective': self.objective,
            'objective_tilde': self.objective_tilde,
            'lagrange_residual': self.lagrange_residual,
            'constraint_residual': self.constraint_residual,
        }


def _forcing_terms(record: SegmentRecord, which: str) -> Tuple[np.ndarray, np.ndarray]:
    """(d, b) of a record for the requested forcing"""
    if which == 'plain':
        return record.d, record.b
    return record.dt, record.bt


class NilssProblem:
    """
    Block-tridiagonal KKT system of the shadowing problem.

    Unknowns are ordered a_0, μ_1, a_1, μ_2, ..., μ_{A-1}, a_{A-1}; with
    blocks of size u this keeps the matrix banded. Each interface constraint
    is stored premultiplied by R_α⁻¹,

        R_α⁻¹ a_α − a_{α-1} = R_α⁻¹ b_α,

    so its entries stay O(1) however fast the tangent solutions grow, and
    stationarity rows C_α a_α + R_α⁻ᵀ μ_α − μ_{α+1} = −d_α are divided by
    ‖C_α‖ with μ stored in units of the geometric mean of those norms.
    R_α, b_α come from record α−1. The multipliers of the unscaled
    constraints are λ_α = R_α⁻ᵀ μ_α. The factorization is computed once and
    reused for every right-hand side.
    """

    REFINEMENT_STEPS = 2

    def __init__(self, records: List[SegmentRecord], dense_limit: int = DEFAULT_DENSE_LIMIT):
        if not records:
            raise ConfigError("shadowing problem needs at least one segment")
        self.records = records
        self.n_segments = len(records)
        self.u = records[0].C.shape[0]
        self.order = (2 * self.n_segments - 1) * self.u
        self.dense = self.order <= dense_limit
        self.logger = logger
        self._check_positive_definite()
        if self.u:
            self._row_scale = np.array([max(float(np.max(np.abs(r.C))), 1e-300) for r in records])
            self._multiplier_scale = float(np.exp(np.mean(np.log(self._row_scale))))
            self._inverse_R = [None] + [self._invert(records[alpha - 1].R, alpha)
                                        for alpha in range(1, self.n_segments)]
            self._matrix = self._assemble()
        else:
            self._matrix = None
        self._factor = None

    def _check_positive_definite(self):
        for alpha, record in enumerate(self.records):
            if self.u == 0:
                return
            try:
                np.linalg.cholesky(record.C)
            except np.linalg.LinAlgError:
                raise ConditioningError(
                    f"C of segment {alpha} is not positive definite (cond {record.cond_C:.3e})",
                    stage='shadow')

    def _invert(self, R: np.ndarray, alpha: int) -> np.ndarray:
        """R⁻¹ of interface α; records re-based onto other bases need not be triangular"""
        eye = np.eye(self.u)
        try:
            if not np.any(np.tril(R, -1)):
                return scipy.linalg.solve_triangular(R, eye, lower=False)
            return scipy.linalg.solve(R, eye)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise ConditioningError(f"R of interface {alpha} is singular: {e}", stage='shadow')

    def _a_block(self, alpha: int) -> int:
        return 2 * alpha * self.u

    def _lambda_block(self, alpha: int) -> int:
        """Offset of μ_α, α = 1..A-1"""
        return (2 * alpha - 1) * self.u

    def _assemble(self) -> scipy.sparse.csc_matrix:
        u = self.u
        s = self._multiplier_scale
        rows, cols, vals = [], [], []
        ii, jj = np.meshgrid(np.arange(u), np.arange(u), indexing='ij')
        eye = np.eye(u)

        def add_block(row0, col0, block):
            rows.append((row0 + ii).ravel())
            cols.append((col0 + jj).ravel())
            vals.append(np.asarray(block, dtype=float).ravel())

        for alpha, record in enumerate(self.records):
            ia = self._a_block(alpha)
            add_block(ia, ia, record.C / self._row_scale[alpha])
            if alpha >= 1:
                il = self._lambda_block(alpha)
                ia_prev = self._a_block(alpha - 1)
                R_inv = self._inverse_R[alpha]
                # scaled constraint row of μ_α and its transpose in the stationarity rows
                add_block(il, ia, R_inv)
                add_block(il, ia_prev, -eye)
                add_block(ia, il, s * R_inv.T / self._row_scale[alpha])
                add_block(ia_prev, il, -s * eye / self._row_scale[alpha - 1])

        matrix = scipy.sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.order, self.order),
        )
        return matrix.tocsc()

    def _factorize(self):
        if self._factor is not None:
            return self._factor
        try:
            if self.dense:
                self._factor = ('dense', scipy.linalg.lu_factor(self._matrix.toarray(), check_finite=True))
            else:
                self._factor = ('sparse', scipy.sparse.linalg.splu(self._matrix))
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as e:
            raise ConditioningError(f"KKT factorization failed: {e}", stage='shadow')
        self.logger.debug(f"Factorized KKT system of order {self.order} ({self._factor[0]})")
        return self._factor

    def _rhs(self, which: str) -> np.ndarray:
        rhs = np.zeros(self.order)
        u = self.u
        for alpha, record in enumerate(self.records):
            d, _ = _forcing_terms(record, which)
            ia = self._a_block(alpha)
            rhs[ia:ia + u] = -d / self._row_scale[alpha]
            if alpha >= 1:
                _, b_in = _forcing_terms(self.records[alpha - 1], which)
                il = self._lambda_block(alpha)
                rhs[il:il + u] = self._inverse_R[alpha] @ b_in
        return rhs

    def _apply_inverse(self, rhs: np.ndarray) -> np.ndarray:
        kind, factor = self._factorize()
        if kind == 'dense':
            return scipy.linalg.lu_solve(factor, rhs)
        return factor.solve(rhs)

    def solve(self, which: str) -> Tuple[np.ndarray, np.ndarray, float]:
        """
        Solve for one forcing.

        Returns:
            (coefficients A×u, multipliers λ (A-1)×u, relative residual of the scaled system)
        """
        if which not in FORCINGS:
            raise ValueError(f"forcing must be one of {FORCINGS}, got '{which}'")
        A, u = self.n_segments, self.u
        if u == 0:
            return np.zeros((A, 0)), np.zeros((max(A - 1, 0), 0)), 0.0

        rhs = self._rhs(which)
        solution = self._apply_inverse(rhs)
        for _ in range(self.REFINEMENT_STEPS):
            if not np.all(np.isfinite(solution)):
                break
            solution = solution + self._apply_inverse(rhs - self._matrix @ solution)
        if not np.all(np.isfinite(solution)):
            raise ConditioningError("KKT solve produced non-finite coefficients", stage='shadow')

        residual = np.linalg.norm(self._matrix @ solution - rhs) / max(np.linalg.norm(rhs), 1e-300)
        blocks = solution.reshape(-1, u)
        coefficients = blocks[0::2].copy()
        multipliers = np.array([
            self._multiplier_scale * (self._inverse_R[alpha].T @ blocks[2 * alpha - 1])
            for alpha in range(1, A)
        ]).reshape(A - 1, u)
        return coefficients, multipliers, float(residual)


def nilss_objective(records: List[SegmentRecord], coefficients: np.ndarray, which: str = 'plain') -> float:
    """Σ_α 2 d_αᵀ a_α + a_αᵀ C_α a_α"""
    terms = []
    for record, a in zip(records, coefficients):
        d, _ = _forcing_terms(record, which)
        terms.append(2.0 * float(d @ a) + float(a @ record.C @ a))
    return math.fsum(terms)


def constraint_residual(records: List[SegmentRecord], coefficients: np.ndarray, which: str = 'plain') -> float:
    """max_α ‖a_α − R_α a_{α-1} − b_α‖ / (1 + ‖a_α‖)"""
    worst = 0.0
    for alpha in range(1, len(records)):
        _, b_in = _forcing_terms(records[alpha - 1], which)
        gap = coefficients[alpha] - records[alpha - 1].R @ coefficients[alpha - 1] - b_in
        worst = max(worst, float(np.linalg.norm(gap) / (1.0 + np.linalg.norm(coefficients[alpha]))))
    return worst


def propagate_coefficients(records: List[SegmentRecord], a0: np.ndarray, which: str = 'plain') -> np.ndarray:
    """Chain the interface constraints forward from a_0 (only for small A; R products grow)"""
    coefficients = [np.asarray(a0, dtype=float)]
    for alpha in range(1, len(records)):
        _, b_in = _forcing_terms(records[alpha - 1], which)
        coefficients.append(records[alpha - 1].R @ coefficients[-1] + b_in)
    return np.array(coefficients)


def solve_nilss(records: List[SegmentRecord], which: str = 'both',
                dense_limit: int = DEFAULT_DENSE_LIMIT) -> ShadowingSolution:
    """
    Solve the shadowing least-squares problem.

    Args:
        records: Segment records of a tangent sweep
        which: 'plain', 'psi' or 'both' (one factorization, two right-hand sides)
        dense_limit: Largest KKT order solved with dense LU

    Returns:
        ShadowingSolution with the requested coefficient sets

    Raises:
        ConditioningError: A C_α is not positive definite or the KKT matrix is singular
    """
    selected = FORCINGS if which == 'both' else (which,)
    problem = NilssProblem(records, dense_limit=dense_limit)
    solution = ShadowingSolution()
    for forcing in selected:
        coefficients, multipliers, residual = problem.solve(forcing)
        objective = nilss_objective(records, coefficients, forcing)
        solution.lagrange_residual = max(solution.lagrange_residual, residual)
        solution.constraint_residual = max(solution.constraint_residual,
                                           constraint_residual(records, coefficients, forcing))
        solution.multipliers[forcing] = multipliers
        if forcing == 'plain':
            solution.a, solution.objective = coefficients, objective
        else:
            solution.a_tilde, solution.objective_tilde = coefficients, objective
    logger.info(f"Shadowing problem solved: A={problem.n_segments}, u={problem.u}, "
                f"KKT residual {solution.lagrange_residual:.2e}, "
                f"constraint residual {solution.constraint_residual:.2e}")
    return solution


def shadowing_pass(system: MapSystem, observable: Observable, orbit: Orbit, sweep: TangentSweep,
                   solution: ShadowingSolution) -> Tuple[float, np.ndarray]:
    """
    Replay every segment with v = v' + e·a and average dΦ·v.

    Returns:
        (S.C., max_n ‖v_{α,n}‖ per segment)
    """
    coefficients = solution.coefficients('plain')
    N = orbit.n_steps
    total = CompensatedSum()
    v_max = np.zeros(sweep.n_segments)
    for alpha in range(sweep.n_segments):
        a = coefficients[alpha]
        for step in replay_segment(system, orbit, sweep, alpha):
            v = step.v_prime + step.e @ a
            gradient = np.asarray(observable.gradient(step.x), dtype=float)
            total.add(float(gradient @ v), trapezoid_weight(step.n, N))
            v_max[alpha] = max(v_max[alpha], float(np.linalg.norm(v)))
    sc = total.value / (sweep.n_segments * N)
    logger.info(f"Shadowing contribution {sc:.8g}")
    return sc, v_max


def shadowing_contribution(system: MapSystem, observable: Observable, orbit: Orbit, sweep: TangentSweep,
                           solution: ShadowingSolution) -> float:
    """S.C. = (1/AN) Σ_α Σ'_n dΦ(x_{α,n}) · v_{α,n}"""
    sc, _ = shadowing_pass(system, observable, orbit, sweep, solution)
    return sc
