"""CGLMP Bell expression: joint probabilities, the value I_d, the Bell operator,
the analytic maximum, the deterministic local bound and the two-qubit
Horodecki criterion."""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..config import Settings
from ..utils.errors import DimensionMismatchError, InternalConsistencyError, InvalidCoordinatesError, SizeGuardError
from ..utils.logging import Logger
from .state_model import HermitianMatrix, check_dimension, weyl_operator
from .unitary_model import Form, ParamMatrix, composite_unitary, parameter_count, reduced_layout, reduced_unitary

logger = Logger.get_instance("cglmp_model")

LOCAL_BOUND = 2.0


@dataclass(frozen=True)
class MeasurementSettings:
    """REDUCED parameter matrices for A1, A2, B1, B2"""

    d: int
    a1: ParamMatrix
    a2: ParamMatrix
    b1: ParamMatrix
    b2: ParamMatrix

    def __post_init__(self):
        for name in ('a1', 'a2', 'b1', 'b2'):
            if getattr(self, name).d != self.d:
                raise DimensionMismatchError(f"setting {name} has d={getattr(self, name).d}, expected {self.d}")

    @property
    def observables(self) -> Tuple[ParamMatrix, ParamMatrix, ParamMatrix, ParamMatrix]:
        return self.a1, self.a2, self.b1, self.b2

    def unitaries(self) -> Tuple[np.ndarray, ...]:
        """Measurement bases; column x of each is the eigenvector for outcome x"""
        return tuple(composite_unitary(p, Form.REDUCED) for p in self.observables)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([p.to_vector(Form.REDUCED) for p in self.observables])

    @classmethod
    def from_vector(cls, vector: np.ndarray, d: int) -> "MeasurementSettings":
        size = parameter_count(d, Form.REDUCED)
        vector = np.asarray(vector, dtype=float)
        if vector.size != 4 * size:
            raise InvalidCoordinatesError(f"settings vector at d={d} needs {4 * size} entries, got {vector.size}")
        parts = [ParamMatrix.from_vector(vector[i * size:(i + 1) * size], d) for i in range(4)]
        return cls(d, *parts)

    @classmethod
    def computational(cls, d: int) -> "MeasurementSettings":
        zero = ParamMatrix.zeros(d)
        return cls(d, zero, zero, zero, zero)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'd': self.d,
            'a1': self.a1.to_dict(), 'a2': self.a2.to_dict(),
            'b1': self.b1.to_dict(), 'b2': self.b2.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MeasurementSettings":
        return cls(
            int(data['d']),
            *(ParamMatrix.from_dict(data[name]) for name in ('a1', 'a2', 'b1', 'b2')),
        )


@dataclass(frozen=True)
class JointProbabilityTable:
    """probs[a, b, x, y] = P(A_{a+1} = x, B_{b+1} = y)"""

    d: int
    probs: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {'d': self.d, 'probs': self.probs.tolist()}


@dataclass(frozen=True)
class BellOperator:
    d: int
    matrix: HermitianMatrix
    settings: MeasurementSettings

    def expectation(self, rho: HermitianMatrix) -> float:
        return rho.expectation(self.matrix.data)

    def max_eigenvalue(self) -> float:
        return float(np.max(self.matrix.eigenvalues()))

    def to_dict(self) -> Dict[str, Any]:
        return {'d': self.d, 'matrix': self.matrix.to_dict(), 'settings': self.settings.to_dict()}


def _exact_coefficients(d: int) -> np.ndarray:
    """Coefficient table C[a, b, delta] as Fractions, delta = (x - y) mod d.

    I_d = sum over a, b, x, y of C[a, b, (x - y) mod d] P(A_a = x, B_b = y).
    """
    table = np.full((2, 2, d), Fraction(0), dtype=object)

    def add(a: int, b: int, delta: int, value: Fraction) -> None:
        table[a, b, delta % d] += value

    for k in range(d // 2):
        weight = 1 - Fraction(2 * k, d - 1)
        # positive block: P(A1=B1+k), P(B1=A2+k+1), P(A2=B2+k), P(B2=A1+k)
        add(0, 0, k, weight)
        add(1, 0, -k - 1, weight)
        add(1, 1, k, weight)
        add(0, 1, -k, weight)
        # negative block: P(A1=B1-k-1), P(B1=A2-k), P(A2=B2-k-1), P(B2=A1-k-1)
        add(0, 0, -k - 1, -weight)
        add(1, 0, k, -weight)
        add(1, 1, -k - 1, -weight)
        add(0, 1, k + 1, -weight)
    return table


@lru_cache(maxsize=None)
def cglmp_coefficients(d: int) -> np.ndarray:
    d = check_dimension(d)
    coefficients = _exact_coefficients(d).astype(float)
    coefficients.setflags(write=False)
    return coefficients


@lru_cache(maxsize=None)
def _outcome_weights(d: int) -> np.ndarray:
    """W[a, b, x, y] = C[a, b, (x - y) mod d]"""
    x, y = np.indices((d, d))
    weights = cglmp_coefficients(d)[:, :, (x - y) % d]
    weights.setflags(write=False)
    return weights


def _probabilities(rho: np.ndarray, bases: Sequence[np.ndarray]) -> np.ndarray:
    d = bases[0].shape[0]
    probs = np.empty((2, 2, d, d))
    for a in range(2):
        for b in range(2):
            k = np.kron(bases[a], bases[2 + b])
            # diagonal of K^dagger rho K
            probs[a, b] = np.real(np.sum(k.conj() * (rho @ k), axis=0)).reshape(d, d)
    return probs


def _check_probabilities(probs: np.ndarray, floor: Optional[float] = None) -> None:
    """Negative entries signal a broken unitary; `floor` widens the check for
    states that are themselves slightly non-positive."""
    if floor is None:
        floor = -Settings.TOLERANCES["probability"]
    if probs.min() < floor:
        raise InternalConsistencyError(f"negative joint probability {probs.min():.3e}")


def probability_floor(rho: HermitianMatrix) -> float:
    return -Settings.TOLERANCES["probability"] + min(0.0, rho.min_eigenvalue())


def _check_state(rho: HermitianMatrix, d: int) -> None:
    if rho.dim != d * d:
        raise DimensionMismatchError(f"state of dimension {rho.dim} does not match d={d}")


def joint_probabilities(rho: HermitianMatrix, settings: MeasurementSettings) -> JointProbabilityTable:
    _check_state(rho, settings.d)
    probs = _probabilities(rho.data, settings.unitaries())
    _check_probabilities(probs, probability_floor(rho))
    return JointProbabilityTable(settings.d, probs)


def value_from_probabilities(probs: np.ndarray) -> float:
    d = probs.shape[-1]
    return float(np.sum(_outcome_weights(d) * probs))


def cglmp_value(rho: HermitianMatrix, settings: MeasurementSettings) -> float:
    return value_from_probabilities(joint_probabilities(rho, settings).probs)


def cglmp_value_from_vector(rho: np.ndarray, vector: np.ndarray, d: int, floor: Optional[float] = None) -> float:
    """Fast path for optimizers: raw state array and a concatenated REDUCED vector"""
    size = d * d - d
    rows, cols, _ = reduced_layout(d)
    bases = []
    for i in range(4):
        lam = np.zeros((d, d))
        lam[rows, cols] = vector[i * size:(i + 1) * size]
        bases.append(reduced_unitary(lam))
    probs = _probabilities(rho, bases)
    _check_probabilities(probs, floor)
    return value_from_probabilities(probs)


def bell_operator(settings: MeasurementSettings) -> BellOperator:
    d = settings.d
    bases = settings.unitaries()
    weights = _outcome_weights(d)
    matrix = np.zeros((d * d, d * d), dtype=complex)
    for a in range(2):
        for b in range(2):
            k = np.kron(bases[a], bases[2 + b])
            matrix += (k * weights[a, b].ravel()) @ k.conj().T
    matrix = (matrix + matrix.conj().T) / 2
    return BellOperator(d, HermitianMatrix(matrix), settings)


def local_unitary_bell_operator(operator: BellOperator, k: int, l: int) -> HermitianMatrix:
    """(W_kl x 1) B (W_kl x 1)^dagger, the operator tuned to P_kl when B is tuned to P_00"""
    d = operator.d
    w = np.kron(weyl_operator(d, k, l).data, np.eye(d))
    matrix = w @ operator.matrix.data @ w.conj().T
    return HermitianMatrix((matrix + matrix.conj().T) / 2)


def cglmp_analytic_max(d: int) -> float:
    """Best known quantum value of I_d, attained on the maximally entangled state"""
    d = check_dimension(d)
    k = np.arange(d // 2)
    weight = 1.0 - 2.0 * k / (d - 1)
    terms = 1.0 / np.sin(np.pi * (k + 0.25) / d) ** 2 - 1.0 / np.sin(-np.pi * (k + 0.75) / d) ** 2
    return float(2.0 / d ** 2 * np.sum(weight * terms))


def local_bound_bruteforce(d: int, max_dimension: Optional[int] = None) -> float:
    """Maximum of I_d over the d^4 deterministic strategies (exact arithmetic)"""
    d = check_dimension(d)
    limit = Settings.LIMITS['local_bound_max_dimension'] if max_dimension is None else max_dimension
    if d > limit:
        raise SizeGuardError(f"local bound enumeration is limited to d <= {limit}, got d={d}")
    table = _exact_coefficients(d)
    best = None
    for a1, a2, b1, b2 in itertools.product(range(d), repeat=4):
        outcomes_a, outcomes_b = (a1, a2), (b1, b2)
        value = sum(
            table[a, b, (outcomes_a[a] - outcomes_b[b]) % d]
            for a in range(2) for b in range(2)
        )
        if best is None or value > best:
            best = value
    logger.debug(f"Local bound at d={d}: {best} over {d ** 4} strategies")
    return float(best)


def chsh_horodecki_max(c1: float, c2: float, c3: float) -> float:
    """2 sqrt(l1 + l2) for the two largest eigenvalues of diag(c_i^2)"""
    c = np.array([c1, c2, c3], dtype=float)
    if np.any(np.abs(c) > 1.0 + Settings.TOLERANCES['positivity']):
        raise InvalidCoordinatesError(f"correlation entries must satisfy |c_i| <= 1, got {tuple(c)}")
    u = np.sort(c ** 2)
    return float(2.0 * np.sqrt(u[1] + u[2]))
