"""
Trajectory generation for linear response runs.

The orbit keeps the states of one long run after spin-up, indexed so that
step 0 is the start of segment 0. States are retained `lead` steps before
step 0 (window and tangent warm-up) and `window` steps after step A·N, so
that every ψ_n uses a full window.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from ..systems.base_system import MapSystem, Observable
from ..utils.errors import BlowUpError, ConfigError


logger = logging.getLogger('flr.orbit')


@dataclass
class OrbitConfig:
    """Trajectory layout and randomness"""
    n_steps: int = 20
    n_segments: int = 1000
    window: int = 10
    spinup: int = 1000
    seed: int = 0
    gamma: float = 0.1
    warmup: int = 0
    init_low: Optional[Sequence[float]] = None
    init_high: Optional[Sequence[float]] = None

    def validate(self):
        """Raise ConfigError for impossible layouts"""
        if self.n_steps < 1:
            raise ConfigError(f"N must be >= 1, got {self.n_steps}")
        if self.n_segments < 1:
            raise ConfigError(f"A must be >= 1, got {self.n_segments}")
        if self.window < 0:
            raise ConfigError(f"W must be >= 0, got {self.window}")
        if self.spinup < 0:
            raise ConfigError(f"spinup must be >= 0, got {self.spinup}")
        if self.warmup < 0:
            raise ConfigError(f"warmup must be >= 0, got {self.warmup}")
        if not math.isfinite(self.gamma):
            raise ConfigError(f"gamma must be finite, got {self.gamma}")

    @property
    def lead(self) -> int:
        return max(self.window, self.warmup)

    @property
    def core_steps(self) -> int:
        return self.n_steps * self.n_segments

    @property
    def total_steps(self) -> int:
        """Steps evolved in total, spin-up included"""
        return self.spinup + self.lead + self.core_steps + self.window


@dataclass
class Orbit:
    """
    Stored trajectory.

    Array rows are offset by `lead`: row k of `states` is x_{k-lead}.
    `param_vectors` row k is δf(x_{k-lead}), i.e. X_{k-lead+1}.
    `psi` holds ψ_n for n = 0..A·N.
    """
    states: np.ndarray
    phi: np.ndarray
    phi_mean: float
    psi: np.ndarray
    param_vectors: np.ndarray
    lead: int
    n_steps: int
    n_segments: int
    window: int
    gamma: float
    seed: int
    psi_check_max: float = 0.0
    metadata: Dict = field(default_factory=dict)

    @property
    def core_steps(self) -> int:
        return self.n_steps * self.n_segments

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def state(self, n: int) -> np.ndarray:
        """x_n for -lead <= n <= A·N + W"""
        return self.states[n + self.lead]

    def forcing(self, n: int) -> np.ndarray:
        """X_n = δf(x_{n-1}), attached at x_n"""
        return self.param_vectors[n - 1 + self.lead]

    def segment_states(self, alpha: int) -> np.ndarray:
        """x_{α,0..N} as an (N+1)×M array"""
        start = alpha * self.n_steps + self.lead
        return self.states[start:start + self.n_steps + 1]


def windowed_sums(centered: np.ndarray, offset: int, count: int, window: int,
                  anchor_every: int) -> Tuple[np.ndarray, float]:
    """
    ψ_n = Σ_{m=n-W}^{n+W} centered_m for n = 0..count.

    A running window is updated one step at a time and re-anchored to a
    direct (fsum) summation every `anchor_every` steps.

    Returns:
        (psi, largest running-vs-direct discrepancy at the anchors)
    """
    def direct(n: int) -> float:
        start = offset + n - window
        return math.fsum(centered[start:start + 2 * window + 1])

    psi = np.empty(count + 1)
    running = direct(0)
    psi[0] = running
    worst = 0.0
    for n in range(1, count + 1):
        running += centered[offset + n + window] - centered[offset + n - window - 1]
        if n % anchor_every == 0:
            exact = direct(n)
            worst = max(worst, abs(running - exact))
            running = exact
        psi[n] = running
    return psi, worst


def generate_orbit(system: MapSystem, observable: Observable, config: OrbitConfig) -> Orbit:
    """
    Evolve the system from a random initial state and build ψ.

    Args:
        system: Map to evolve
        observable: Objective Φ used for ψ
        config: Layout, seed and parameter value

    Returns:
        Orbit with states x_{-lead..A·N+W}

    Raises:
        ConfigError: Invalid layout
        BlowUpError: A state became non-finite (step index in the error)
    """
    config.validate()
    gamma = config.gamma
    rng = np.random.default_rng(config.seed)
    low, high = system.initial_box()
    if config.init_low is not None:
        low = np.asarray(config.init_low, dtype=float)
    if config.init_high is not None:
        high = np.asarray(config.init_high, dtype=float)
    x = system.wrap(low + (high - low) * rng.random(system.dim))

    lead = config.lead
    logger.info(f"Generating orbit for {system.name}: gamma={gamma}, N={config.n_steps}, "
                f"A={config.n_segments}, W={config.window}, spinup={config.spinup}, seed={config.seed}")

    for i in range(config.spinup):
        x = system.step(x, gamma)
        if not np.all(np.isfinite(x)):
            raise BlowUpError(f"non-finite state during spin-up of {system.name}",
                              stage='orbit', step=i - config.spinup - lead)

    total = lead + config.core_steps + config.window + 1
    states = np.empty((total, system.dim))
    param_vectors = np.empty((total - 1, system.dim))
    phi = np.empty(total)
    states[0] = x
    for k in range(total):
        if k > 0:
            states[k] = system.step(states[k - 1], gamma)
            if not np.all(np.isfinite(states[k])):
                raise BlowUpError(f"non-finite state of {system.name}", stage='orbit', step=k - lead)
        phi[k] = float(observable.value(states[k]))
        if k < total - 1:
            param_vectors[k] = system.param_vector(states[k], gamma)

    core = phi[lead:lead + config.core_steps]
    phi_mean = float(np.mean(core))
    psi, worst = windowed_sums(phi - phi_mean, lead, config.core_steps, config.window, config.n_steps)
    if worst > 1e-9 * max(1.0, float(np.max(np.abs(psi)))):
        logger.warning(f"Running window drifted by {worst:.3e} before re-anchoring")
    logger.debug(f"phi_mean={phi_mean:.6g}, psi anchor discrepancy {worst:.3e}")

    return Orbit(
        states=states,
        phi=phi,
        phi_mean=phi_mean,
        psi=psi,
        param_vectors=param_vectors,
        lead=lead,
        n_steps=config.n_steps,
        n_segments=config.n_segments,
        window=config.window,
        gamma=gamma,
        seed=config.seed,
        psi_check_max=worst,
        metadata={'system': system.name, 'spinup': config.spinup, 'warmup': config.warmup},
    )


def dump_states(orbit: Orbit, path: Path) -> Path:
    """
    Write the stored states, one row per step.

    `.bin` files hold little-endian float64 values row-major; any other
    suffix is written as CSV.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == '.bin':
        orbit.states.astype('<f8').tofile(path)
    else:
        np.savetxt(path, orbit.states, delimiter=',', fmt='%.17g')
    logger.info(f"Dumped {len(orbit.states)} states to {path}")
    return path


def load_states(path: Path, dim: int) -> np.ndarray:
    """Read states written by dump_states"""
    path = Path(path)
    if path.suffix == '.bin':
        return np.fromfile(path, dtype='<f8').reshape(-1, dim)
    return np.loadtxt(path, delimiter=',', ndmin=2)


def block_sum_spread(values: np.ndarray, mean: float, block_lengths: Sequence[int]) -> Dict[int, float]:
    """
    Empirical std of Σ_{n=1}^{L} (values_n - mean) / √L over disjoint blocks.

    Bounded values across L indicate partial sums growing like √L.
    """
    spread = {}
    values = np.asarray(values, dtype=float) - mean
    for length in block_lengths:
        blocks = len(values) // length
        if blocks < 2:
            continue
        sums = values[:blocks * length].reshape(blocks, length).sum(axis=1) / math.sqrt(length)
        spread[int(length)] = float(np.std(sums, ddof=1))
    return spread
