"""
Reference estimators for the derivative of a long-time average.

The finite-difference oracle averages Φ over independent long runs at each
point of a γ grid and fits a straight line; the analytic oracle returns the
closed form of systems that have one.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging
import math

import numpy as np
from scipy import stats

from ..config.settings import RunConfig
from ..systems.base_system import MapSystem, Observable
from ..utils.errors import ConfigError, OracleError


logger = logging.getLogger('flr.oracle')

DEFAULT_HALF_WIDTH = 0.04
DEFAULT_POINTS = 9


def default_grid(center: float, half_width: float = DEFAULT_HALF_WIDTH,
                 points: int = DEFAULT_POINTS) -> List[float]:
    """Evenly spaced grid center ± half_width"""
    return [float(g) for g in np.linspace(center - half_width, center + half_width, points)]


@dataclass
class FdOracleConfig:
    """γ grid and run layout of the finite-difference regression"""
    gamma_grid: List[float]
    steps_per_run: int = 20000
    runs_per_gamma: int = 4
    spinup: int = 1000
    seed: int = 1
    weighted: bool = False

    def validate(self) -> 'FdOracleConfig':
        grid = [float(g) for g in self.gamma_grid]
        if len(grid) < 3:
            raise ConfigError(f"finite-difference grid needs at least 3 points, got {len(grid)}")
        if not all(math.isfinite(g) for g in grid):
            raise ConfigError("finite-difference grid values must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("finite-difference grid must be sorted with distinct values")
        if self.steps_per_run < 1 or self.runs_per_gamma < 1:
            raise ConfigError("steps_per_run and runs_per_gamma must be >= 1")
        if self.spinup < 0:
            raise ConfigError(f"spinup must be >= 0, got {self.spinup}")
        return self

    @classmethod
    def from_run_config(cls, cfg: RunConfig, center: Optional[float] = None) -> 'FdOracleConfig':
        grid = cfg.oracle_gamma_grid
        if grid is None:
            grid = default_grid(cfg.gamma if center is None else center)
        return cls(
            gamma_grid=list(grid),
            steps_per_run=cfg.oracle_steps_per_run,
            runs_per_gamma=cfg.oracle_runs_per_gamma,
            spinup=cfg.oracle_spinup,
            seed=cfg.oracle_seed,
            weighted=cfg.oracle_weighted,
        ).validate()


@dataclass
class GridPoint:
    """Long-run statistics at one γ"""
    gamma: float
    mean_phi: float
    std_phi: float
    runs: int
    blown_runs: int = 0

    @property
    def stderr(self) -> float:
        return self.std_phi / math.sqrt(self.runs) if self.runs else math.nan


@dataclass
class FdRegressionResult:
    """Fitted slope of mean Φ against γ"""
    slope: float
    slope_stderr: float
    intercept: float
    table: List[GridPoint]
    dropped: List[float] = field(default_factory=list)
    weighted: bool = False

    def predict(self, gamma: float) -> float:
        return self.intercept + self.slope * gamma

    def to_dict(self) -> Dict:
        return {
            'slope': self.slope,
            'slope_stderr': self.slope_stderr,
            'intercept': self.intercept,
            'weighted': self.weighted,
            'dropped': list(self.dropped),
            'table': [
                {'gamma': p.gamma, 'mean_phi': p.mean_phi, 'std_phi': p.std_phi,
                 'runs': p.runs, 'blown_runs': p.blown_runs}
                for p in self.table
            ],
        }


def long_run_means(system: MapSystem, observable: Observable, gamma: float, steps: int, runs: int,
                   spinup: int, seed) -> np.ndarray:
    """
    Time averages of Φ over `runs` independent trajectories evolved as one batch.

    Returns:
        Array of per-run means; NaN for runs that became non-finite
    """
    rng = np.random.default_rng(seed)
    low, high = system.initial_box()
    x = system.wrap(low + (high - low) * rng.random((runs, system.dim)))
    alive = np.ones(runs, dtype=bool)

    for _ in range(spinup):
        x = system.step(x, gamma)
        alive &= np.all(np.isfinite(x), axis=1)

    totals = np.zeros(runs)
    compensation = np.zeros(runs)
    for _ in range(steps):
        x = system.step(x, gamma)
        alive &= np.all(np.isfinite(x), axis=1)
        # Kahan update per run
        y = np.where(alive, observable.value(x), 0.0) - compensation
        t = totals + y
        compensation = (t - totals) - y
        totals = t

    means = totals / steps
    means[~alive] = np.nan
    return means


def _grid_point(system: MapSystem, observable: Observable, cfg: FdOracleConfig, index: int) -> GridPoint:
    gamma = cfg.gamma_grid[index]
    means = long_run_means(system, observable, gamma, cfg.steps_per_run, cfg.runs_per_gamma,
                           cfg.spinup, seed=[cfg.seed, index])
    finite = means[np.isfinite(means)]
    blown = len(means) - len(finite)
    if blown:
        logger.warning(f"gamma={gamma}: {blown} of {len(means)} runs blew up")
    if len(finite) == 0:
        return GridPoint(gamma=gamma, mean_phi=math.nan, std_phi=math.nan, runs=0, blown_runs=blown)
    std = float(np.std(finite, ddof=1)) if len(finite) > 1 else 0.0
    return GridPoint(gamma=gamma, mean_phi=float(np.mean(finite)), std_phi=std,
                     runs=len(finite), blown_runs=blown)


def grid_statistics(system: MapSystem, observable: Observable, cfg: FdOracleConfig,
                    workers: int = 1) -> List[GridPoint]:
    """Long-run statistics at every grid point, in grid order"""
    count = len(cfg.gamma_grid)
    if workers <= 1:
        logger.info(f"Evaluating {count} grid points sequentially")
        return [_grid_point(system, observable, cfg, i) for i in range(count)]

    logger.info(f"Evaluating {count} grid points in parallel with {workers} workers")
    points: Dict[int, GridPoint] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {
            executor.submit(_grid_point, system, observable, cfg, i): i
            for i in range(count)
        }
        for future in as_completed(future_to_index):
            points[future_to_index[future]] = future.result()
    return [points[i] for i in range(count)]


def fit_line(gammas: Sequence[float], means: Sequence[float], stderrs: Optional[Sequence[float]] = None):
    """
    Straight-line fit of mean Φ against γ.

    Returns:
        (slope, slope standard error, intercept)
    """
    x = np.asarray(gammas, dtype=float)
    y = np.asarray(means, dtype=float)
    if stderrs is not None:
        sigma = np.asarray(stderrs, dtype=float)
        if np.all(sigma > 0):
            coeffs, cov = np.polyfit(x, y, 1, w=1.0 / sigma, cov='unscaled')
            return float(coeffs[0]), float(math.sqrt(cov[0, 0])), float(coeffs[1])
        logger.warning("Zero spread at some grid point; falling back to an unweighted fit")
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr), float(fit.intercept)


def fd_regression(system: MapSystem, observable: Observable, cfg: FdOracleConfig,
                  workers: int = 1) -> FdRegressionResult:
    """
    Finite-difference derivative of the long-time average of Φ.

    Grid points whose runs all blew up are dropped and reported.

    Raises:
        OracleError: Fewer than three grid points survive
    """
    cfg.validate()
    logger.info(f"Finite-difference oracle for {system.name}: {len(cfg.gamma_grid)} points in "
                f"[{cfg.gamma_grid[0]}, {cfg.gamma_grid[-1]}], {cfg.runs_per_gamma} x {cfg.steps_per_run} steps")
    points = grid_statistics(system, observable, cfg, workers=workers)
    kept = [p for p in points if p.runs > 0]
    dropped = [p.gamma for p in points if p.runs == 0]
    if len(kept) < 3:
        raise OracleError(f"only {len(kept)} grid points survived; need at least 3", stage='oracle')

    stderrs = [p.stderr for p in kept] if cfg.weighted else None
    slope, slope_stderr, intercept = fit_line([p.gamma for p in kept], [p.mean_phi for p in kept], stderrs)
    logger.info(f"Finite-difference slope {slope:.6g} ± {slope_stderr:.2g}")
    return FdRegressionResult(slope=slope, slope_stderr=slope_stderr, intercept=intercept,
                              table=points, dropped=dropped, weighted=cfg.weighted)


def analytic_derivative(system: MapSystem, gamma: float) -> float:
    """Closed-form derivative of the long-time average, where the system has one"""
    closed_form = getattr(system, 'analytic_derivative', None)
    if closed_form is None:
        raise OracleError(f"{system.name} has no closed-form derivative", stage='oracle')
    return float(closed_form(gamma))


def analytic_mean(system: MapSystem, gamma: float) -> float:
    """Closed-form long-time average of the default observable"""
    closed_form = getattr(system, 'analytic_mean', None)
    if closed_form is None:
        raise OracleError(f"{system.name} has no closed-form mean", stage='oracle')
    return float(closed_form(gamma))
