"""
End-to-end linear response: orbit, first-order sweep, two shadowing solves,
shadowing contribution, second-order sweep and unstable contribution.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import logging
import math
import time

import numpy as np

from .curvature import second_order_pass, write_trace_terms
from .orbit import OrbitConfig, dump_states, generate_orbit
from .shadow import shadowing_pass, solve_nilss
from .tangent import lyapunov_exponents, records_diagnostics, run_tangent_sweep
from ..config.settings import RunConfig
from ..systems.base_system import MapSystem, Observable
from ..systems.validation import random_probe_states, validate_system
from ..utils.errors import ConfigError, LinearResponseError, ValidationFailedError
from ..utils.output import config_hash, save_json, write_csv


logger = logging.getLogger('flr.response')


@dataclass
class ResponseReport:
    """Linear response of one run with its diagnostics"""
    sc: float
    uc: float
    phi_mean: float
    per_segment: Dict[str, List[float]]
    config: Dict[str, Any]
    timing: Dict[str, float] = field(default_factory=dict)
    lyapunov: List[float] = field(default_factory=list)
    nilss: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())

    @property
    def derivative(self) -> float:
        """δρ(Φ) = S.C. − U.C."""
        return self.sc - self.uc

    def to_dict(self) -> Dict[str, Any]:
        """`data` is reproducible from config and seed; `meta` is not"""
        return {
            'data': {
                'derivative': self.derivative,
                'sc': self.sc,
                'uc': self.uc,
                'phi_mean': self.phi_mean,
                'lyapunov': list(self.lyapunov),
                'nilss': self.nilss,
                'diagnostics': self.diagnostics,
                'per_segment': self.per_segment,
                'config': self.config,
                'config_hash': config_hash(self.config),
            },
            'meta': {
                'timing': self.timing,
                'timestamp': self.timestamp,
            },
        }


class ReplicaResult:
    """Container for one replica's outcome"""

    def __init__(self, success: bool, data: Any = None, error: str = None, metadata: Dict = None):
        self.success = success
        self.data = data
        self.error = error
        self.metadata = metadata or {}
        self.timestamp = datetime.now().isoformat()

    def to_dict(self) -> Dict:
        return {
            'success': self.success,
            'data': self.data.to_dict()['data'] if isinstance(self.data, ResponseReport) else self.data,
            'error': self.error,
            'metadata': self.metadata,
            'timestamp': self.timestamp,
        }


@dataclass
class ReplicateSummary:
    """Statistics of the derivative over independent replicas"""
    seeds: List[int]
    results: List[ReplicaResult]

    @property
    def reports(self) -> List[ResponseReport]:
        return [r.data for r in self.results if r.success]

    @property
    def values(self) -> List[float]:
        return [report.derivative for report in self.reports]

    @property
    def failures(self) -> List[Dict]:
        return [{'seed': r.metadata.get('seed'), 'error': r.error} for r in self.results if not r.success]

    @property
    def mean(self) -> float:
        values = self.values
        return float(np.mean(values)) if values else math.nan

    @property
    def std(self) -> float:
        values = self.values
        return float(np.std(values, ddof=1)) if len(values) > 1 else math.nan

    def to_dict(self) -> Dict:
        return {
            'mean': self.mean,
            'std': self.std,
            'values': self.values,
            'seeds': list(self.seeds),
            'failures': self.failures,
        }


def orbit_config(cfg: RunConfig, seed: Optional[int] = None) -> OrbitConfig:
    """Trajectory layout of a run configuration"""
    return OrbitConfig(
        n_steps=cfg.n_steps,
        n_segments=cfg.n_segments,
        window=cfg.window,
        spinup=cfg.spinup,
        seed=cfg.seed if seed is None else seed,
        gamma=cfg.gamma,
        warmup=cfg.tangent_warmup,
    )


@contextmanager
def _stage(name: str, timing: Dict[str, float]):
    """Time a pipeline stage and tag escaping errors with its name"""
    started = time.perf_counter()
    try:
        yield
    except LinearResponseError as e:
        if e.stage is None:
            e.stage = name
        logger.error(f"Stage {name} failed: {e}")
        raise
    finally:
        timing[name] = time.perf_counter() - started


def _resolve_unstable_dim(system: MapSystem, cfg: RunConfig) -> int:
    u = system.unstable_dim if cfg.unstable_dim is None else cfg.unstable_dim
    if u > system.unstable_dim:
        raise ConfigError(f"tracking {u} tangent solutions on {system.name} (u={system.unstable_dim}) "
                          f"is not supported", stage='tangent')
    if u < system.unstable_dim:
        logger.warning(f"Tracking {u} of {system.unstable_dim} unstable directions; "
                       f"the shadowing direction will not be bounded")
    return u


def smoke_validate(system: MapSystem, observable: Observable, cfg: RunConfig):
    """Cheap finite-difference check of the callbacks before a run"""
    probes = random_probe_states(system, cfg.probe_count, seed=cfg.seed)
    report = validate_system(system, probes, cfg.gamma, observable=observable, seed=cfg.seed)
    if not report.passed:
        raise ValidationFailedError(
            f"{system.name} callbacks disagree with finite differences: {report.failures}"
            f"{', blow-ups at ' + str(len(report.blowups)) + ' probes' if report.blowups else ''}",
            stage='validation')
    return report


def compute_response(system: MapSystem, observable: Observable, cfg: RunConfig,
                     r0: Optional[np.ndarray] = None, validate: bool = True) -> ResponseReport:
    """
    Linear response of the long-time average of Φ to γ.

    Args:
        system: Map with analytic derivative callbacks
        observable: Objective Φ
        cfg: Run configuration
        r0: Optional initial second-order solutions (forgetting checks)
        validate: Run the finite-difference smoke check first

    Returns:
        ResponseReport with derivative = S.C. − U.C.

    Raises:
        LinearResponseError: Tagged with the failing stage and step
    """
    cfg.validate()
    timing: Dict[str, float] = {}
    logger.info(f"Computing linear response of {observable.name} on {system.name} at gamma={cfg.gamma} "
                f"(N={cfg.n_steps}, A={cfg.n_segments}, W={cfg.window}, seed={cfg.seed})")

    if validate:
        with _stage('validation', timing):
            smoke_validate(system, observable, cfg)

    with _stage('orbit', timing):
        u = _resolve_unstable_dim(system, cfg)
        orbit = generate_orbit(system, observable, orbit_config(cfg))
        if cfg.dump_orbit:
            dump_states(orbit, Path(cfg.dump_orbit))

    with _stage('tangent', timing):
        sweep = run_tangent_sweep(system, orbit, unstable_dim=u, warmup=cfg.tangent_warmup,
                                  store_history=cfg.store_trajectory)

    with _stage('shadow', timing):
        solution = solve_nilss(sweep.records, which='both', dense_limit=cfg.kkt_dense_limit)
        sc, v_max = shadowing_pass(system, observable, orbit, sweep, solution)

    with _stage('curvature', timing):
        curvature = second_order_pass(system, orbit, sweep, solution, discard=cfg.discard_segments, r0=r0)

    report = ResponseReport(
        sc=sc,
        uc=curvature.uc,
        phi_mean=orbit.phi_mean,
        per_segment={'trace_terms': curvature.trace_terms.tolist(), 'v_max': v_max.tolist()},
        config={**cfg.to_dict(), 'unstable_dim': u},
        timing=timing,
        lyapunov=lyapunov_exponents(sweep.records, cfg.n_steps).tolist(),
        nilss=solution.to_dict(),
        diagnostics={
            'psi_check_max': orbit.psi_check_max,
            'orthogonality_defect': curvature.orthogonality_defect,
        },
    )
    logger.info(f"derivative={report.derivative:.8g} (S.C.={sc:.8g}, U.C.={curvature.uc:.8g}) "
                f"in {sum(timing.values()):.2f}s")

    if cfg.diagnostics_dir:
        write_diagnostics(Path(cfg.diagnostics_dir), report, sweep, solution, curvature)
    return report


def write_diagnostics(directory: Path, report: ResponseReport, sweep, solution, curvature):
    """Per-segment diagnostics: R diagonals, cond(C), coefficients and trace terms"""
    directory.mkdir(parents=True, exist_ok=True)
    segments = records_diagnostics(sweep.records)
    for entry, v_max in zip(segments, report.per_segment['v_max']):
        entry['v_max'] = v_max
    save_json({'segments': segments, 'config': report.config}, directory / 'segments.json')

    u = sweep.unstable_dim
    header = ['segment'] + [f'a{i}' for i in range(u)] + [f'a_tilde{i}' for i in range(u)]
    rows = [[alpha, *solution.a[alpha], *solution.a_tilde[alpha]] for alpha in range(sweep.n_segments)]
    write_csv(directory / 'coefficients.csv', header, rows, report.config)
    write_trace_terms(curvature, directory / 'trace_terms.csv', report.config)
    logger.info(f"Wrote diagnostics to {directory}")


def _run_replica(system: MapSystem, observable: Observable, cfg: RunConfig, seed: int,
                 validate: bool) -> ReplicaResult:
    try:
        report = compute_response(system, observable, cfg.with_overrides(seed=seed), validate=validate)
        return ReplicaResult(success=True, data=report, metadata={'seed': seed})
    except Exception as e:
        logger.error(f"Replica with seed {seed} failed: {e}")
        return ReplicaResult(success=False, error=str(e),
                             metadata={'seed': seed, 'error_type': type(e).__name__})


def replicate(system: MapSystem, observable: Observable, cfg: RunConfig, reps: Optional[int] = None,
              seeds: Optional[Sequence[int]] = None, workers: Optional[int] = None) -> ReplicateSummary:
    """
    Independent replicas of compute_response.

    Replica i uses seed cfg.seed + i unless explicit seeds are given. Failed
    replicas are reported in the summary and do not stop the others.
    """
    if seeds is None:
        reps = cfg.reps if reps is None else reps
        seeds = [cfg.seed + i for i in range(reps)]
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ConfigError(f"replicate needs at least 2 replicas, got {len(seeds)}")
    workers = workers or cfg.resolve_workers()

    # Callbacks are validated once, not per replica
    smoke_validate(system, observable, cfg)

    logger.info(f"Running {len(seeds)} replicas with {workers} workers")
    results: Dict[int, ReplicaResult] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {
            executor.submit(_run_replica, system, observable, cfg, seed, False): index
            for index, seed in enumerate(seeds)
        }
        for future in as_completed(future_to_index):
            index = future_to_index[future]
            results[index] = future.result()

    summary = ReplicateSummary(seeds=seeds, results=[results[i] for i in range(len(seeds))])
    if summary.failures:
        logger.warning(f"{len(summary.failures)} of {len(seeds)} replicas failed")
    logger.info(f"Replicas: mean {summary.mean:.8g}, std {summary.std:.3g}")
    return summary


def write_summary_csv(summary: ReplicateSummary, path: Optional[Path], config: Dict, stream=None) -> str:
    """One row per successful replica: rep, seed, sc, uc, derivative"""
    rows = []
    for rep, result in enumerate(summary.results):
        if result.success:
            report = result.data
            rows.append([rep, result.metadata['seed'], report.sc, report.uc, report.derivative])
    trailer = [f"mean={summary.mean!r}", f"std={summary.std!r}"]
    trailer += [f"failed seed={f['seed']}: {f['error']}" for f in summary.failures]
    return write_csv(path, ['rep', 'seed', 'sc', 'uc', 'derivative'], rows, config,
                     trailer=trailer, stream=stream)
