"""
Renormalized second-order tangent sweep and the unstable contribution.

For each of the u homogeneous solutions e_i a second-order solution r_i is
evolved by

    r_{n+1} = f_* r_n + (∇_{ṽ_n} f_*) e_n + ψ_{n+1} ∇_{e_n} X_{n+1}

where ṽ = ṽ' + e·ã is the shadowing direction of the ψ-weighted forcing.
At each interface r is projected out of span(Q) and rescaled by R⁻¹, the
same change of basis the homogeneous solutions undergo.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import logging

import numpy as np
import scipy.linalg

from .orbit import Orbit
from .shadow import ShadowingSolution
from .tangent import TangentSweep, replay_segment
from ..systems.base_system import MapSystem
from ..utils.errors import BlowUpError, ConfigError
from ..utils.numerics import CompensatedSum
from ..utils.output import write_csv


logger = logging.getLogger('flr.curvature')


@dataclass
class CurvatureResult:
    """Unstable contribution plus per-segment trace terms"""
    uc: float
    trace_terms: np.ndarray
    discard: int = 0
    orthogonality_defect: float = 0.0
    final_r: Optional[np.ndarray] = None
    metadata: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'uc': self.uc,
            'discard': self.discard,
            'orthogonality_defect': self.orthogonality_defect,
            'trace_terms': self.trace_terms.tolist(),
        }


def interface_projection(Q: np.ndarray, R: np.ndarray, r_end: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Trace term and renormalized r at a segment interface.

    Returns:
        (Tr(R⁻¹ Qᵀ r_end), (r_end − Q Qᵀ r_end) R⁻¹)
    """
    if R.size == 0:
        return 0.0, r_end.copy()
    coords = Q.T @ r_end
    trace = float(np.trace(scipy.linalg.solve_triangular(R, coords)))
    r_perp = r_end - Q @ coords
    # r⊥ R⁻¹ = (R⁻ᵀ r⊥ᵀ)ᵀ
    out = scipy.linalg.solve_triangular(R, r_perp.T, trans='T').T
    return trace, out


def orthogonality_defect(Q: np.ndarray, r: np.ndarray) -> float:
    """‖Qᵀ r‖ relative to ‖r‖"""
    norm = np.linalg.norm(r)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(Q.T @ r) / norm)


def sweep_second_order(system: MapSystem, orbit: Orbit, sweep: TangentSweep, solution: ShadowingSolution,
                       alpha: int, r: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Second-order sweep over segment α.

    The first-order quantities are replayed through the same recursion the
    tangent sweep used, so (e, ṽ, r) stay paired step by step.

    Args:
        system: Map providing the Hessian and ∇X callbacks
        orbit: Trajectory with ψ
        sweep: First-order sweep (records and segment start states)
        solution: NILSS solution holding ã
        alpha: Segment index
        r: M×u second-order solutions at the segment start, Qᵀr = 0

    Returns:
        (trace term of this segment, r at the start of segment α+1)
    """
    gamma = orbit.gamma
    N = orbit.n_steps
    a_tilde = solution.coefficients('psi')[alpha]
    start = alpha * N

    previous = None
    for step in replay_segment(system, orbit, sweep, alpha):
        if previous is not None:
            n = start + previous.n
            x = previous.x
            vt = previous.vt_prime + previous.e @ a_tilde
            r = (system.jacobian_vector(x, gamma, r)
                 + system.hessian_vector_vector(x, gamma, vt, previous.e)
                 + orbit.psi[n + 1] * system.param_vector_jacobian(x, gamma, previous.e))
            if not np.all(np.isfinite(r)):
                raise BlowUpError("non-finite second-order tangent solution; the orbit may pass "
                                  "through a region of near-tangencies", stage='curvature', step=n + 1)
        previous = step

    record = sweep.records[alpha]
    return interface_projection(record.Q, record.R, r)


def second_order_pass(system: MapSystem, orbit: Orbit, sweep: TangentSweep, solution: ShadowingSolution,
                      discard: int = 0, r0: Optional[np.ndarray] = None) -> CurvatureResult:
    """
    Run the second-order sweep over all segments.

    Args:
        discard: Leading segments left out of the average (K_r)
        r0: Optional initial second-order solutions; projected out of span(e₀)

    Returns:
        CurvatureResult with U.C. = Σ_{α≥K_r} trace_α / (N·(A−K_r))
    """
    A, N, u = sweep.n_segments, orbit.n_steps, sweep.unstable_dim
    if not 0 <= discard < A:
        raise ConfigError(f"discarded segments must lie in [0, {A - 1}], got {discard}")
    if u == 0:
        return CurvatureResult(uc=0.0, trace_terms=np.zeros(A), discard=discard)

    Q0 = sweep.initial_states[0].e
    if r0 is None:
        r = np.zeros((orbit.dim, u))
    else:
        r = np.array(r0, dtype=float).reshape(orbit.dim, u)
        r = r - Q0 @ (Q0.T @ r)

    logger.info(f"Second-order sweep over {A} segments (u={u}, discard={discard})")
    trace_terms = np.zeros(A)
    worst = orthogonality_defect(Q0, r)
    for alpha in range(A):
        trace_terms[alpha], r = sweep_second_order(system, orbit, sweep, solution, alpha, r)
        worst = max(worst, orthogonality_defect(sweep.records[alpha].Q, r))
        logger.debug(f"segment {alpha}: trace term {trace_terms[alpha]:.6e}")

    total = CompensatedSum()
    for term in trace_terms[discard:]:
        total.add(term)
    uc = total.value / (N * (A - discard))
    if worst > 1e-8:
        logger.warning(f"Second-order solutions lost orthogonality to span(e): {worst:.3e}")
    logger.info(f"Unstable contribution {uc:.8g}")
    return CurvatureResult(uc=uc, trace_terms=trace_terms, discard=discard,
                           orthogonality_defect=worst, final_r=r)


def unstable_contribution(system: MapSystem, orbit: Orbit, sweep: TangentSweep, solution: ShadowingSolution,
                          discard: int = 0) -> float:
    """U.C. averaged over the segments after the first `discard`"""
    return second_order_pass(system, orbit, sweep, solution, discard=discard).uc


def write_trace_terms(result: CurvatureResult, path: Path, config: Dict) -> str:
    """Per-segment trace terms with their running U.C. average"""
    rows: List[Tuple[int, float, float]] = []
    total = CompensatedSum()
    n_steps = config.get('n_steps', 1)
    for alpha, term in enumerate(result.trace_terms):
        total.add(term)
        rows.append((alpha, float(term), total.value / (n_steps * (alpha + 1))))
    return write_csv(path, ['segment', 'trace_term', 'running_uc'], rows, config)
