"""
First-order segmented tangent sweep.

Evolves u homogeneous tangent solutions e, the inhomogeneous solution v'
forced by X and the solution ṽ' forced by Ψ = ψX. At every segment
interface e is orthonormalised by QR and the inhomogeneous solutions are
projected out of span(e). The per-segment records carry the data of the
shadowing least-squares problem.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple
import logging

import numpy as np

from .orbit import Orbit
from ..systems.base_system import MapSystem
from ..utils.errors import BlowUpError, ConfigError, DegenerateBasisError
from ..utils.numerics import CompensatedSum, positive_qr, trapezoid_weight


logger = logging.getLogger('flr.tangent')

DEGENERATE_DIAGONAL = 1e-30
GROWTH_WARNING = 1e8


@dataclass
class TangentState:
    """Tangent quantities at the start of a segment"""
    e: np.ndarray
    v_prime: np.ndarray
    vt_prime: np.ndarray

    @property
    def unstable_dim(self) -> int:
        return self.e.shape[1]

    def copy(self) -> 'TangentState':
        return TangentState(self.e.copy(), self.v_prime.copy(), self.vt_prime.copy())


@dataclass
class SegmentRecord:
    """
    Data produced by one segment.

    Q, R and b, bt belong to the interface at the end of the segment; C, d, dt
    are trapezoid sums over the segment's own steps.
    """
    Q: np.ndarray
    R: np.ndarray
    b: np.ndarray
    bt: np.ndarray
    C: np.ndarray
    d: np.ndarray
    dt: np.ndarray
    e_end: np.ndarray
    v_end: np.ndarray
    vt_end: np.ndarray

    @property
    def r_diag(self) -> np.ndarray:
        return np.diag(self.R).copy()

    @property
    def cond_C(self) -> float:
        if self.C.size == 0:
            return 1.0
        return float(np.linalg.cond(self.C))


@dataclass
class SegmentStep:
    """Tangent quantities at step n of a segment"""
    n: int
    x: np.ndarray
    e: np.ndarray
    v_prime: np.ndarray
    vt_prime: np.ndarray


@dataclass
class TangentSweep:
    """All segment records plus what is needed to replay any segment"""
    records: List[SegmentRecord]
    initial_states: List[TangentState]
    final_state: TangentState
    n_steps: int
    unstable_dim: int
    history: Optional[Dict[int, List[SegmentStep]]] = None
    metadata: Dict = field(default_factory=dict)

    @property
    def n_segments(self) -> int:
        return len(self.records)


def _propagate(system: MapSystem, orbit: Orbit, alpha: int, state: TangentState) -> Iterator[SegmentStep]:
    """
    Run the first-order recursions over segment α:

        e_{n+1} = f_* e_n,  v'_{n+1} = f_* v'_n + X_{n+1},  ṽ'_{n+1} = f_* ṽ'_n + ψ_{n+1} X_{n+1}

    Every consumer of per-step tangent values goes through this generator,
    so replays reproduce the sweep bit for bit.
    """
    gamma = orbit.gamma
    u = state.unstable_dim
    start = alpha * orbit.n_steps
    e, v, vt = state.e, state.v_prime, state.vt_prime
    yield SegmentStep(0, orbit.state(start), e, v, vt)

    for n in range(orbit.n_steps):
        g = start + n
        forcing = orbit.forcing(g + 1)
        out = system.jacobian_vector(orbit.state(g), gamma, np.column_stack([e, v, vt]))
        e = out[:, :u]
        v = out[:, u] + forcing
        vt = out[:, u + 1] + orbit.psi[g + 1] * forcing
        if not (np.all(np.isfinite(out))):
            raise BlowUpError("non-finite first-order tangent solution; the map may lack hyperbolicity here",
                              stage='tangent', step=g + 1)
        yield SegmentStep(n + 1, orbit.state(g + 1), e, v, vt)


def renormalize(e: np.ndarray, step: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    QR of the homogeneous solutions at an interface.

    Raises:
        DegenerateBasisError: When a diagonal entry of R collapses
    """
    Q, R = positive_qr(e)
    if R.size:
        diag = np.diag(R)
        if np.min(diag) < DEGENERATE_DIAGONAL:
            raise DegenerateBasisError(
                f"homogeneous tangent solutions became linearly dependent (min R diagonal "
                f"{np.min(diag):.3e}); use a smaller N", stage='tangent', step=step)
    return Q, R


def sweep_segment(system: MapSystem, orbit: Orbit, alpha: int, state: TangentState,
                  history: Optional[List[SegmentStep]] = None) -> Tuple[SegmentRecord, TangentState]:
    """
    Propagate one segment, accumulate C, d, d̃ and renormalise at its end.

    Args:
        system: Map providing f_*
        orbit: Trajectory with ψ and X
        alpha: Segment index
        state: e orthonormal and v', ṽ' orthogonal to it
        history: If given, every SegmentStep is appended to it

    Returns:
        (record for this segment, initial state of the next segment)
    """
    u = state.unstable_dim
    N = orbit.n_steps
    C = CompensatedSum((u, u))
    d = CompensatedSum((u,))
    dt = CompensatedSum((u,))

    last = None
    for last in _propagate(system, orbit, alpha, state):
        weight = trapezoid_weight(last.n, N)
        eT = last.e.T
        C.add(eT @ last.e, weight)
        d.add(eT @ last.v_prime, weight)
        dt.add(eT @ last.vt_prime, weight)
        if history is not None:
            history.append(last)

    end_step = (alpha + 1) * N
    Q, R = renormalize(last.e, end_step)
    b = Q.T @ last.v_prime
    bt = Q.T @ last.vt_prime
    record = SegmentRecord(
        Q=Q, R=R, b=b, bt=bt,
        C=0.5 * (C.value + C.value.T), d=d.value, dt=dt.value,
        e_end=last.e, v_end=last.v_prime, vt_end=last.vt_prime,
    )
    out = TangentState(e=Q, v_prime=last.v_prime - Q @ b, vt_prime=last.vt_prime - Q @ bt)
    if u:
        logger.debug(f"segment {alpha}: R diag {np.diag(R)}, cond(C) {record.cond_C:.3e}")
    return record, out


def _warn_on_growth(records: List[SegmentRecord]) -> int:
    """One warning per sweep naming how many interfaces grew past GROWTH_WARNING"""
    grown = [alpha for alpha, record in enumerate(records)
             if record.R.size and np.max(np.diag(record.R)) > GROWTH_WARNING]
    if grown:
        peak = max(float(np.max(np.diag(records[alpha].R))) for alpha in grown)
        logger.warning(f"R diagonal exceeded {GROWTH_WARNING:.0e} in {len(grown)} of {len(records)} segments "
                       f"(largest {peak:.3e}, first at segment {grown[0]}); renormalise more often (smaller N)")
    return len(grown)


def initial_basis(dim: int, unstable_dim: int, seed: int) -> np.ndarray:
    """Orthonormal M×u basis from a seeded Gaussian matrix"""
    rng = np.random.default_rng(seed)
    Q, _ = positive_qr(rng.standard_normal((dim, unstable_dim)))
    return Q


def warm_up_tangents(system: MapSystem, orbit: Orbit, state: TangentState, steps: int) -> TangentState:
    """
    Run e and v' over the `steps` retained states before step 0.

    Renormalises every N steps and once more at step 0, so the result has
    orthonormal e and v' orthogonal to it; ṽ' starts from zero since ψ is
    only defined from step 0 on.
    """
    if steps > orbit.lead:
        raise ConfigError(f"warm-up of {steps} steps exceeds the {orbit.lead} retained lead states")
    gamma = orbit.gamma
    u = state.unstable_dim
    e, v = state.e, state.v_prime
    for k, n in enumerate(range(-steps, 0), start=1):
        forcing = orbit.forcing(n + 1)
        out = system.jacobian_vector(orbit.state(n), gamma, np.column_stack([e, v]))
        e, v = out[:, :u], out[:, u] + forcing
        if not np.all(np.isfinite(out)):
            raise BlowUpError("non-finite tangent solution during warm-up", stage='tangent', step=n + 1)
        if k % orbit.n_steps == 0 or n == -1:
            e, _ = renormalize(e, n + 1)
            v = v - e @ (e.T @ v)
    logger.debug(f"Tangent warm-up over {steps} steps finished")
    return TangentState(e=e, v_prime=v, vt_prime=np.zeros(orbit.dim))


def run_tangent_sweep(system: MapSystem, orbit: Orbit, unstable_dim: Optional[int] = None,
                      basis_seed: Optional[int] = None, warmup: int = 0,
                      store_history: bool = False) -> TangentSweep:
    """
    First-order sweep over all A segments.

    Args:
        system: Map providing f_*
        orbit: Trajectory
        unstable_dim: Number of homogeneous solutions; defaults to the system's u
        basis_seed: Seed for the random initial basis; defaults to the orbit seed
        warmup: Steps of tangent warm-up before step 0 (0 = cold start v' = ṽ' = 0)
        store_history: Keep every per-step tangent value instead of replaying

    Returns:
        TangentSweep with A records
    """
    u = system.unstable_dim if unstable_dim is None else unstable_dim
    if u < 0 or u > system.dim:
        raise ConfigError(f"unstable dimension must lie in [0, {system.dim}], got {u}")
    seed = orbit.seed if basis_seed is None else basis_seed

    state = TangentState(
        e=initial_basis(system.dim, u, seed),
        v_prime=np.zeros(system.dim),
        vt_prime=np.zeros(system.dim),
    )
    if warmup:
        state = warm_up_tangents(system, orbit, state, warmup)

    records: List[SegmentRecord] = []
    initial_states: List[TangentState] = []
    history: Optional[Dict[int, List[SegmentStep]]] = {} if store_history else None
    logger.info(f"Tangent sweep: u={u}, A={orbit.n_segments}, N={orbit.n_steps}, warmup={warmup}")
    for alpha in range(orbit.n_segments):
        initial_states.append(state)
        steps = [] if store_history else None
        record, state = sweep_segment(system, orbit, alpha, state, history=steps)
        records.append(record)
        if store_history:
            history[alpha] = steps

    _warn_on_growth(records)
    return TangentSweep(
        records=records,
        initial_states=initial_states,
        final_state=state,
        n_steps=orbit.n_steps,
        unstable_dim=u,
        history=history,
        metadata={'basis_seed': seed, 'warmup': warmup},
    )


def replay_segment(system: MapSystem, orbit: Orbit, sweep: TangentSweep, alpha: int) -> Iterator[SegmentStep]:
    """Per-step tangent values of segment α, from the cache or by re-running the recursion"""
    if sweep.history is not None:
        return iter(sweep.history[alpha])
    return _propagate(system, orbit, alpha, sweep.initial_states[alpha])


def lyapunov_exponents(records: List[SegmentRecord], n_steps: int) -> np.ndarray:
    """Mean of log diag(R) / N over segments, one estimate per tracked direction"""
    if not records or records[0].R.size == 0:
        return np.zeros(0)
    logs = np.array([np.log(np.diag(record.R)) for record in records])
    return logs.mean(axis=0) / n_steps


def records_diagnostics(records: List[SegmentRecord]) -> List[Dict]:
    """Per-segment R diagonal and condition number of C for the diagnostics file"""
    return [
        {'segment': alpha, 'r_diag': record.r_diag.tolist(), 'cond_C': record.cond_C}
        for alpha, record in enumerate(records)
    ]
