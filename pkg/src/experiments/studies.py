"""
Study drivers: replicate statistics as functions of A and W, and the
sweep of long-time averages and derivatives over γ.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import logging
import math

import numpy as np

from ..config.settings import RunConfig
from ..sensitivity.oracle import fit_line, long_run_means
from ..sensitivity.response import compute_response, replicate, smoke_validate
from ..systems.base_system import MapSystem, Observable
from ..utils.errors import ConfigError, LinearResponseError
from ..utils.numerics import loglog_slope
from ..utils.output import write_csv


logger = logging.getLogger('flr.studies')

MIN_SCALING_REPS = 4
GAMMA_SWEEP_COLUMNS = ['gamma', 'mean_phi', 'std_phi', 'flr_derivative', 'fd_fit',
                       'tangent_gamma_lo', 'tangent_phi_lo', 'tangent_gamma_hi', 'tangent_phi_hi']


@dataclass
class StudyResult:
    """Table produced by a study, ready for CSV output"""
    header: List[str]
    rows: List[List[Any]]
    trailer: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> List[Any]:
        index = self.header.index(name)
        return [row[index] for row in self.rows]

    def write(self, path: Optional[Path], config: Dict, stream=None) -> str:
        return write_csv(path, self.header, self.rows, config, trailer=self.trailer, stream=stream)


def _scaling_study(system: MapSystem, observable: Observable, cfg: RunConfig, key: str, label: str,
                   values: Sequence[int], reps: int, seeds: Optional[Sequence[int]]) -> StudyResult:
    if not values:
        raise ConfigError(f"{label} study needs at least one value")
    count = len(seeds) if seeds is not None else reps
    if count < MIN_SCALING_REPS:
        raise ConfigError(f"{label} study needs at least {MIN_SCALING_REPS} replicas, got {count}")

    rows, trailer = [], []
    for value in values:
        cell = cfg.with_overrides(**{key: value})
        logger.info(f"{label}={value}: {count} replicas")
        summary = replicate(system, observable, cell, reps=reps, seeds=seeds)
        rows.append([value, summary.mean, summary.std])
        for failure in summary.failures:
            trailer.append(f"{label}={value} failed seed={failure['seed']}: {failure['error']}")

    fit_rows = [(row[0], row[2]) for row in rows if math.isfinite(row[2]) and row[2] > 0]
    result = StudyResult(header=[label, 'mean', 'std'], rows=rows, trailer=trailer)
    if len(fit_rows) >= 2:
        slope = loglog_slope([r[0] for r in fit_rows], [r[1] for r in fit_rows])
        result.trailer.append(f"loglog_slope={slope!r}")
        result.summary['loglog_slope'] = slope
        logger.info(f"log-log slope of std against {label}: {slope:.3f}")
    return result


def scaling_a(system: MapSystem, observable: Observable, cfg: RunConfig,
              a_list: Optional[Sequence[int]] = None, reps: Optional[int] = None,
              seeds: Optional[Sequence[int]] = None) -> StudyResult:
    """Mean and std of the derivative for each segment count A"""
    return _scaling_study(system, observable, cfg, 'n_segments', 'A',
                          list(a_list if a_list is not None else cfg.a_list),
                          cfg.reps if reps is None else reps, seeds)


def scaling_w(system: MapSystem, observable: Observable, cfg: RunConfig,
              w_list: Optional[Sequence[int]] = None, reps: Optional[int] = None,
              seeds: Optional[Sequence[int]] = None) -> StudyResult:
    """Mean and std of the derivative for each window W"""
    return _scaling_study(system, observable, cfg, 'window', 'W',
                          list(w_list if w_list is not None else cfg.w_list),
                          cfg.reps if reps is None else reps, seeds)


def _gamma_cell(system: MapSystem, observable: Observable, cfg: RunConfig, index: int, gamma: float) -> Dict:
    cell = cfg.with_overrides(gamma=gamma)
    means = long_run_means(system, observable, gamma, cfg.oracle_steps_per_run, cfg.oracle_runs_per_gamma,
                           cfg.oracle_spinup, seed=[cfg.oracle_seed, index])
    finite = means[np.isfinite(means)]
    entry = {
        'gamma': gamma,
        'mean_phi': float(np.mean(finite)) if len(finite) else math.nan,
        'std_phi': float(np.std(finite, ddof=1)) if len(finite) > 1 else 0.0,
        'derivative': math.nan,
        'error': None,
    }
    try:
        entry['derivative'] = compute_response(system, observable, cell, validate=False).derivative
    except LinearResponseError as e:
        logger.error(f"gamma={gamma}: {e}")
        entry['error'] = str(e)
    return entry


def gamma_sweep(system: MapSystem, observable: Observable, cfg: RunConfig,
                gamma_list: Optional[Sequence[float]] = None, workers: Optional[int] = None) -> StudyResult:
    """
    Long-time average of Φ and its derivative at each γ.

    Each row carries a short tangent line through (γ, mean Φ) with the
    computed slope, and the value of the straight-line fit over the whole grid.
    """
    gammas = [float(g) for g in (gamma_list if gamma_list is not None else cfg.gamma_list)]
    if len(gammas) < 2:
        raise ConfigError(f"gamma sweep needs at least 2 values, got {len(gammas)}")
    workers = workers or cfg.resolve_workers()

    smoke_validate(system, observable, cfg)

    logger.info(f"Gamma sweep over {len(gammas)} values with {workers} workers")
    cells: Dict[int, Dict] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {
            executor.submit(_gamma_cell, system, observable, cfg, i, g): i
            for i, g in enumerate(gammas)
        }
        for future in as_completed(future_to_index):
            cells[future_to_index[future]] = future.result()
    entries = [cells[i] for i in range(len(gammas))]

    usable = [e for e in entries if math.isfinite(e['mean_phi'])]
    slope = stderr = intercept = math.nan
    if len(usable) >= 2:
        slope, stderr, intercept = fit_line([e['gamma'] for e in usable], [e['mean_phi'] for e in usable])

    spacing = min(b - a for a, b in zip(sorted(gammas), sorted(gammas)[1:]))
    half = 0.5 * spacing if spacing > 0 else 0.01
    rows = []
    for e in entries:
        g, phi, deriv = e['gamma'], e['mean_phi'], e['derivative']
        rows.append([g, phi, e['std_phi'], deriv, intercept + slope * g,
                     g - half, phi - half * deriv, g + half, phi + half * deriv])

    trailer = [f"fd_slope={slope!r}", f"fd_slope_stderr={stderr!r}"]
    trailer += [f"gamma={e['gamma']!r} failed: {e['error']}" for e in entries if e['error']]
    return StudyResult(header=list(GAMMA_SWEEP_COLUMNS), rows=rows, trailer=trailer,
                       summary={'fd_slope': slope, 'fd_slope_stderr': stderr, 'fd_intercept': intercept})
