"""Derivative-free maximization of the CGLMP value and the CGLMP boundary solvers."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import OptimizeResult, brentq, minimize

from ..config import Settings
from ..utils.errors import (
    ConfigError,
    DimensionMismatchError,
    NoBoundaryCrossingError,
    NoViolationDirectionError,
    OptimizerAbortError,
)
from ..utils.logging import Logger
from .cglmp_model import LOCAL_BOUND, MeasurementSettings, cglmp_value, cglmp_value_from_vector, probability_floor
from .state_model import Family, HermitianMatrix, check_dimension, family_state
from .unitary_model import canonical_vector, parameter_count, random_reduced_vector

logger = Logger.get_instance("optimizer_model")

_DEFAULTS = Settings.OPTIMIZER_DEFAULTS
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = int(_DEFAULTS['restarts'])
    max_iterations: int = int(_DEFAULTS['max_iterations'])
    f_tolerance: float = float(_DEFAULTS['f_tolerance'])
    x_tolerance: float = float(_DEFAULTS['x_tolerance'])
    seed: int = int(_DEFAULTS['seed'])
    initial_step: float = float(_DEFAULTS['initial_step'])
    adaptive: bool = bool(_DEFAULTS['adaptive'])

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.f_tolerance <= 0 or self.x_tolerance <= 0:
            raise ConfigError("optimizer tolerances must be positive")
        if self.initial_step <= 0:
            raise ConfigError(f"initial_step must be positive, got {self.initial_step}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "OptimizerConfig":
        """Build from a flat mapping, ignoring keys that are not optimizer fields"""
        fields = cls.__dataclass_fields__
        known = {key: value for key, value in values.items() if key in fields and value is not None}
        try:
            return cls(**{key: fields[key].type(value) if fields[key].type in (int, float, bool) else value
                          for key, value in known.items()})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid optimizer configuration: {e}") from e

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MaxBellResult:
    value: float
    settings: MeasurementSettings
    restarts_used: int
    converged: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            'value': self.value,
            'restarts_used': self.restarts_used,
            'converged': self.converged,
            'settings': self.settings.to_dict(),
        }


@dataclass(frozen=True)
class BoundaryPoint:
    """A family point tau and the noise weight nu at which its mixture with
    white noise reaches the local bound"""

    index: int
    family: str
    source: Tuple[float, ...]
    nu: Optional[float]
    coordinates: Optional[Tuple[float, ...]]
    max_value: Optional[float]
    on_positivity_boundary: bool
    violating: bool
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def derive_point_seed(seed: int, index: int) -> int:
    """Per-point seed, independent of worker scheduling"""
    state = np.random.SeedSequence([int(seed) & _SEED_MASK, int(index)]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _guarded(objective: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(x: np.ndarray) -> float:
        value = float(objective(x))
        if not np.isfinite(value):
            raise OptimizerAbortError(f"objective returned {value} at x={np.array2string(x, precision=4)}")
        return value
    return wrapped


def _minimize(objective: Callable[[np.ndarray], float], x0: np.ndarray, cfg: OptimizerConfig) -> OptimizeResult:
    x0 = np.asarray(x0, dtype=float).ravel()
    simplex = np.vstack([x0, x0 + cfg.initial_step * np.eye(x0.size)])
    return minimize(
        _guarded(objective),
        x0,
        method='Nelder-Mead',
        options={
            'maxiter': cfg.max_iterations,
            'xatol': cfg.x_tolerance,
            'fatol': cfg.f_tolerance,
            'initial_simplex': simplex,
            'adaptive': cfg.adaptive,
        },
    )


def nelder_mead(objective: Callable[[np.ndarray], float], x0: Sequence[float],
                cfg: Optional[OptimizerConfig] = None) -> Tuple[np.ndarray, float]:
    """Minimize `objective` from x0; returns the best simplex vertex and its value.

    The initial simplex is x0 plus `initial_step` along each axis. Iteration stops
    when both the value spread and the vertex spread fall below the configured
    tolerances, or at `max_iterations`.
    """
    result = _minimize(objective, np.asarray(x0, dtype=float), cfg or OptimizerConfig())
    return np.asarray(result.x), float(result.fun)


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & _SEED_MASK, restart])


def maximize_bell(rho: HermitianMatrix, d: int, cfg: Optional[OptimizerConfig] = None) -> MaxBellResult:
    """Best CGLMP value over measurement settings, from `cfg.restarts` random starts"""
    cfg = cfg or OptimizerConfig()
    d = check_dimension(d)
    if rho.dim != d * d:
        raise DimensionMismatchError(f"state of dimension {rho.dim} does not match d={d}")
    data = np.ascontiguousarray(rho.data)
    floor = probability_floor(rho)

    def objective(x: np.ndarray) -> float:
        return -cglmp_value_from_vector(data, _canonical(x, d), d, floor)

    best_x, best_f, converged = None, np.inf, False
    for restart in range(cfg.restarts):
        x0 = random_reduced_vector(d, restart_rng(cfg.seed, restart), count=4)
        result = _minimize(objective, x0, cfg)
        logger.debug(f"restart {restart}: I_d = {-result.fun:.12f} after {result.nit} iterations")
        if result.fun < best_f:
            best_x, best_f, converged = result.x, float(result.fun), bool(result.success)

    settings = MeasurementSettings.from_vector(_canonical(best_x, d), d)
    value = cglmp_value(rho, settings)
    return MaxBellResult(value=value, settings=settings, restarts_used=cfg.restarts, converged=converged)


def _canonical(x: np.ndarray, d: int) -> np.ndarray:
    size = parameter_count(d)
    return np.concatenate([canonical_vector(x[i * size:(i + 1) * size], d) for i in range(4)])


def _nu_from_value(value: float) -> float:
    if value <= LOCAL_BOUND * Settings.TOLERANCES['violation']:
        raise NoViolationDirectionError(
            f"maximal CGLMP value {value:.3e} is not positive; no noise level reaches the local bound"
        )
    return LOCAL_BOUND / value


def violation_boundary_nu(tau: HermitianMatrix, d: int, cfg: Optional[OptimizerConfig] = None) -> float:
    """nu* such that (1 - nu*)/d^2 * 1 + nu* tau sits on the CGLMP boundary"""
    return _nu_from_value(maximize_bell(tau, d, cfg).value)


def bisect_boundary(state_a: HermitianMatrix, state_b: HermitianMatrix, d: int,
                    cfg: Optional[OptimizerConfig] = None, tolerance: float = 1.0e-6) -> float:
    """Mixing weight t where (1 - t) a + t b crosses max I_d = 2.

    Works for arbitrary segments, not only mixtures with white noise.
    """
    cfg = cfg or OptimizerConfig()

    def excess(t: float) -> float:
        mixed = HermitianMatrix((1.0 - t) * state_a.data + t * state_b.data)
        return maximize_bell(mixed, d, cfg).value - LOCAL_BOUND

    low, high = excess(0.0), excess(1.0)
    if np.sign(low) == np.sign(high):
        raise NoBoundaryCrossingError(
            f"max I_d - 2 has the same sign at both ends of the segment ({low:.3e}, {high:.3e})"
        )
    return float(brentq(excess, 0.0, 1.0, xtol=tolerance))


def _solve_boundary_point(task: Tuple[str, Tuple[float, ...], Optional[int], OptimizerConfig, int]) -> BoundaryPoint:
    family_name, params, d, cfg, index = task
    family = Family.parse(family_name)
    on_boundary, max_value = False, None
    try:
        dim = family.dimension(d)
        tau = family_state(family, params, dim)
        on_boundary = abs(tau.min_eigenvalue()) <= Settings.TOLERANCES['positivity_boundary']
        max_value = maximize_bell(tau, dim, cfg).value
        nu = _nu_from_value(max_value)
    except NoViolationDirectionError:
        return BoundaryPoint(index, family.value, params, None, None, max_value, on_boundary, False)
    except Exception as e:  # recorded per point, the scan continues
        return BoundaryPoint(index, family.value, params, None, None, max_value, on_boundary, False,
                             error=f"{type(e).__name__}: {e}")
    coordinates = tuple(float(nu * p) for p in params)
    return BoundaryPoint(index, family.value, params, nu, coordinates, max_value, on_boundary,
                         max_value > LOCAL_BOUND)


def scan_boundary(family: Any, boundary_states: Sequence[Sequence[float]], d: Optional[int] = None,
                  cfg: Optional[OptimizerConfig] = None, workers: int = 1) -> List[BoundaryPoint]:
    """CGLMP boundary point for every family point via noise scaling.

    Results come back in input order whatever the worker count.
    """
    family = Family.parse(family)
    cfg = cfg or OptimizerConfig()
    tasks = [
        (family.value, tuple(float(v) for v in params), d, cfg.with_seed(derive_point_seed(cfg.seed, index)), index)
        for index, params in enumerate(boundary_states)
    ]
    logger.info(f"Solving {len(tasks)} CGLMP boundary points for family {family.value} with {workers} worker(s)")
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_solve_boundary_point, tasks))
    else:
        points = [_solve_boundary_point(task) for task in tasks]
    failures = sum(1 for p in points if p.error)
    if failures:
        logger.warning(f"{failures} boundary point(s) failed; see the error column")
    return points
