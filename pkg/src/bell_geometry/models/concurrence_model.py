"""m-concurrence of bipartite qudit states.

The squared m-concurrence is a sum over pairs of two-level generators, one on
each side. For mixed states each pair contributes the Wootters-type quantity
max(0, 2 max(x) - sum(x)) squared, with x the square roots of the eigenvalues
of rho S rho* S, S = sigma_A x sigma_B. The sum is a lower bound which depends
on the basis rho is written in; it is maximized over local unitaries.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from ..config import Settings
from ..utils.errors import DimensionMismatchError, NormalizationError, NumericalDegeneracyError
from ..utils.logging import Logger
from .optimizer_model import OptimizerConfig, nelder_mead, restart_rng
from .state_model import HermitianMatrix, check_dimension, partial_trace
from .unitary_model import (
    ParamMatrix,
    canonical_vector,
    parameter_count,
    random_reduced_vector,
    reduced_layout,
    reduced_unitary,
)

logger = Logger.get_instance("concurrence_model")

TOL = Settings.TOLERANCES


@dataclass(frozen=True)
class ConcurrenceResult:
    lower_bound: float
    raw_bound: float
    settings: Tuple[ParamMatrix, ParamMatrix]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lower_bound': self.lower_bound,
            'raw_bound': self.raw_bound,
            'settings': {'U_A': self.settings[0].to_dict(), 'U_B': self.settings[1].to_dict()},
        }


@lru_cache(maxsize=None)
def sigma_pair_operators(d: int) -> Tuple[np.ndarray, ...]:
    """sigma_A x sigma_B over all pairs of generator pairs; each is real symmetric"""
    d = check_dimension(d)
    sigmas = []
    for m, n in itertools.combinations(range(d), 2):
        s = np.zeros((d, d), dtype=complex)
        s[m, n], s[n, m] = -1j, 1j
        sigmas.append(s)
    operators = []
    for sa, sb in itertools.product(sigmas, sigmas):
        op = np.real(np.kron(sa, sb))
        op.setflags(write=False)
        operators.append(op)
    return tuple(operators)


def _local_dimension(dim: int) -> int:
    d = int(round(np.sqrt(dim)))
    if d * d != dim:
        raise DimensionMismatchError(f"dimension {dim} is not a square d x d")
    return check_dimension(d)


def m_concurrence_pure(psi: np.ndarray) -> float:
    """Squared m-concurrence of a pure state vector on C^d x C^d"""
    psi = np.asarray(psi, dtype=complex).ravel()
    d = _local_dimension(psi.size)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > TOL['normalization']:
        raise NormalizationError(f"state vector has norm {norm:.15g}")
    return float(sum(abs(psi @ s @ psi) ** 2 for s in sigma_pair_operators(d)))


def linear_entropy(rho: HermitianMatrix) -> float:
    """d/(d-1) (1 - Tr rho^2), zero on pure states and one on the maximally mixed state"""
    d = rho.dim
    purity = float(np.real(np.trace(rho.data @ rho.data)))
    return d / (d - 1) * (1.0 - purity)


def reduced_linear_entropy(psi: np.ndarray) -> float:
    psi = np.asarray(psi, dtype=complex).ravel()
    d = _local_dimension(psi.size)
    rho = HermitianMatrix(np.outer(psi, psi.conj()))
    return linear_entropy(partial_trace(rho, d, d, keep='A'))


def _sqrt_psd(rho: np.ndarray) -> np.ndarray:
    values, vectors = linalg.eigh(rho)
    if values.min() < -TOL['degeneracy']:
        raise NumericalDegeneracyError(f"state has eigenvalue {values.min():.3e}; square root undefined")
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T


def _pair_roots(rho: np.ndarray, s: np.ndarray, root: Optional[np.ndarray]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    values = linalg.eigvals(rho @ s @ rho.conj() @ s)
    if np.max(np.abs(values.imag)) <= TOL['degeneracy'] and values.real.min() >= -TOL['degeneracy']:
        return np.sqrt(np.clip(values.real, 0.0, None)), root
    # rho S rho* S is similar to R R^dagger with R = sqrt(rho) S sqrt(rho)*
    if root is None:
        root = _sqrt_psd(rho)
    return linalg.svdvals(root @ s @ root.conj()), root


def raw_lower_bound(rho: np.ndarray, d: int) -> float:
    """Sum over generator pairs of max(0, 2 max(x) - sum(x))^2 in the given basis"""
    total, root = 0.0, None
    for s in sigma_pair_operators(d):
        roots, root = _pair_roots(rho, s, root)
        total += max(0.0, 2.0 * roots.max() - roots.sum()) ** 2
    return float(total)


def _rotate(rho: np.ndarray, vector: np.ndarray, d: int) -> np.ndarray:
    size = parameter_count(d)
    rows, cols, _ = reduced_layout(d)
    factors = []
    for i in range(2):
        lam = np.zeros((d, d))
        lam[rows, cols] = vector[i * size:(i + 1) * size]
        factors.append(reduced_unitary(lam))
    k = np.kron(*factors)
    rotated = k.conj().T @ rho @ k
    return (rotated + rotated.conj().T) / 2


def m_concurrence_lower_bound(rho: HermitianMatrix, d: int, cfg: Optional[OptimizerConfig] = None) -> ConcurrenceResult:
    """Lower bound on the squared m-concurrence, maximized over U_A x U_B.

    The first start is the identity, so the result never falls below the
    bound in the input basis. Outer diagonal phases leave the bound unchanged,
    which is why only REDUCED parameters are searched.
    """
    cfg = cfg or OptimizerConfig()
    d = check_dimension(d)
    if rho.dim != d * d:
        raise DimensionMismatchError(f"state of dimension {rho.dim} does not match d={d}")
    data = np.ascontiguousarray(rho.data)
    raw = raw_lower_bound(data, d)
    size = parameter_count(d)

    def canonical(x: np.ndarray) -> np.ndarray:
        return np.concatenate([canonical_vector(x[:size], d), canonical_vector(x[size:], d)])

    def objective(x: np.ndarray) -> float:
        return -raw_lower_bound(_rotate(data, canonical(x), d), d)

    best_x, best_value = np.zeros(2 * size), raw
    for restart in range(cfg.restarts):
        x0 = np.zeros(2 * size) if restart == 0 else random_reduced_vector(d, restart_rng(cfg.seed, restart), count=2)
        x, f = nelder_mead(objective, x0, cfg)
        logger.debug(f"restart {restart}: C_m^2 lower bound {-f:.12f}")
        if -f > best_value:
            best_x, best_value = x, -f

    best_x = canonical(best_x)
    settings = (ParamMatrix.from_vector(best_x[:size], d), ParamMatrix.from_vector(best_x[size:], d))
    return ConcurrenceResult(lower_bound=float(best_value), raw_bound=raw, settings=settings)


def m_concurrence_line_analytic(alpha: float, beta: float) -> float:
    """Closed form for the equal-weight line state rho_line(alpha, beta/2, beta/2)"""
    if alpha >= 0.25 + beta / 8.0:
        return max(0.0, 8.0 * alpha - beta - 2.0) ** 2 / 27.0
    return 2.0 * max(0.0, 5.0 * beta - 4.0 * alpha - 2.0) ** 2 / 27.0
