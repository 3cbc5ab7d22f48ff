"""Bipartite qudit states: Weyl operators, Bell projectors, magic-simplex mixtures
and the named state families, plus the partial trace/transpose primitives."""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..config import Settings
from ..utils.errors import (
    DimensionMismatchError,
    InvalidCoordinatesError,
    InvalidDimensionError,
    NotHermitianError,
    ParameterCountError,
    SymmetryViolationError,
    UnknownFamilyError,
)

TOL = Settings.TOLERANCES

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class Family(str, Enum):
    """Named state families"""

    ISOTROPIC = "isotropic"
    TWO_PARAM = "two_param"
    LINE = "line"
    OFFLINE = "offline"
    TETRA2 = "tetra2"

    @classmethod
    def parse(cls, value: Any) -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower().replace('-', '_')
        key = {"twoparam": "two_param", "off_line": "offline", "tetra": "tetra2"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise UnknownFamilyError(f"unknown state family '{value}'") from None

    @property
    def table(self) -> Dict[str, Any]:
        return Settings.FAMILIES[self.value]

    @property
    def arity(self) -> int:
        return len(self.table['parameters'])

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return tuple(self.table['parameters'])

    def dimension(self, d: Optional[int] = None) -> int:
        """Local dimension of the family; ISOTROPIC takes it from the caller"""
        fixed = self.table['dimension']
        if fixed is None:
            if d is None:
                raise InvalidDimensionError(f"family {self.value} needs an explicit dimension")
            return check_dimension(d)
        if d is not None and d != fixed:
            raise InvalidDimensionError(f"family {self.value} is defined for d={fixed}, got d={d}")
        return fixed


def check_dimension(d: int) -> int:
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {d}")
    return int(d)


@dataclass(frozen=True)
class HermitianMatrix:
    """Dense complex square matrix with a Hermiticity flag.

    The wrapped array is copied and made read-only on construction.
    """

    data: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {arr.shape}")
        if self.hermitian and not np.allclose(arr, arr.conj().T, rtol=0.0, atol=TOL['hermiticity']):
            raise NotHermitianError("matrix flagged Hermitian is not Hermitian within tolerance")
        arr.setflags(write=False)
        object.__setattr__(self, 'data', arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def eigenvalues(self) -> np.ndarray:
        if self.hermitian:
            return np.linalg.eigvalsh(self.data)
        return np.linalg.eigvals(self.data)

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.data)))

    def is_density_matrix(self) -> bool:
        """Unit trace and positive semidefinite within the configured tolerances"""
        return (
            self.hermitian
            and abs(self.trace() - 1.0) <= TOL['trace']
            and self.min_eigenvalue() >= -TOL['positivity']
        )

    def expectation(self, operator: np.ndarray) -> float:
        return float(np.real(np.trace(np.asarray(operator) @ self.data)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dim': self.dim,
            're': self.data.real.ravel().tolist(),
            'im': self.data.imag.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], hermitian: bool = True) -> "HermitianMatrix":
        dim = int(data['dim'])
        re = np.asarray(data['re'], dtype=float)
        im = np.asarray(data.get('im', np.zeros(dim * dim)), dtype=float)
        if re.size != dim * dim or im.size != dim * dim:
            raise DimensionMismatchError(f"matrix entries do not match dim={dim}")
        return cls((re + 1j * im).reshape(dim, dim), hermitian=hermitian)


@dataclass(frozen=True)
class SimplexCoordinates:
    """Weights c[k, l] on the d^2 Bell projectors"""

    d: int
    weights: np.ndarray

    def __post_init__(self):
        check_dimension(self.d)
        w = np.array(self.weights, dtype=float, copy=True)
        if w.shape != (self.d, self.d):
            raise InvalidCoordinatesError(f"weights must have shape ({self.d}, {self.d}), got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, 'weights', w)

    def total(self) -> float:
        return float(self.weights.sum())

    def is_simplex_member(self) -> bool:
        return abs(self.total() - 1.0) <= TOL['trace'] and bool(np.all(self.weights >= 0.0))

    @classmethod
    def uniform(cls, d: int) -> "SimplexCoordinates":
        return cls(d, np.full((d, d), 1.0 / d ** 2))

    @classmethod
    def vertex(cls, d: int, k: int, l: int) -> "SimplexCoordinates":
        w = np.zeros((d, d))
        w[k % d, l % d] = 1.0
        return cls(d, w)


@dataclass(frozen=True)
class PhaseSpaceMap:
    """(k, l) = M (k', l') + (j, r) mod d with M = [[m, n], [p, q]]"""

    m: int = 1
    n: int = 0
    p: int = 0
    q: int = 1
    j: int = 0
    r: int = 0

    def determinant(self) -> int:
        return self.m * self.q - self.n * self.p


@lru_cache(maxsize=None)
def _weyl_array(d: int, k: int, l: int) -> np.ndarray:
    s = np.arange(d)
    w = np.zeros((d, d), dtype=complex)
    w[s, (s + l) % d] = np.exp(2j * np.pi * s * k / d)
    w.setflags(write=False)
    return w


def weyl_operator(d: int, k: int, l: int) -> HermitianMatrix:
    """W_kl = sum_s exp(2 pi i s k / d) |s><s + l|, indices reduced mod d"""
    d = check_dimension(d)
    return HermitianMatrix(_weyl_array(d, k % d, l % d), hermitian=False)


def maximally_entangled_vector(d: int) -> np.ndarray:
    d = check_dimension(d)
    return np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)


@lru_cache(maxsize=None)
def _bell_vector(d: int, k: int, l: int) -> np.ndarray:
    vec = np.kron(_weyl_array(d, k, l), np.eye(d)) @ maximally_entangled_vector(d)
    vec.setflags(write=False)
    return vec


def bell_vector(d: int, k: int, l: int) -> np.ndarray:
    """|Omega_kl> = (W_kl x 1)|Omega_00>"""
    d = check_dimension(d)
    return _bell_vector(d, k % d, l % d)


def _projector(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec.conj())


def bell_projector(d: int, k: int, l: int) -> HermitianMatrix:
    return HermitianMatrix(_projector(bell_vector(d, k, l)))


def simplex_state(c: SimplexCoordinates) -> HermitianMatrix:
    """sum_kl c_kl P_kl; the weights must sum to one but may be negative"""
    if abs(c.total() - 1.0) > TOL['trace']:
        raise InvalidCoordinatesError(f"simplex weights must sum to 1, got {c.total():.15g}")
    d = c.d
    # Columns of `basis` are the Bell vectors, ordered as weights.ravel()
    basis = np.stack([bell_vector(d, k, l) for k in range(d) for l in range(d)], axis=1)
    rho = (basis * c.weights.ravel()) @ basis.conj().T
    return HermitianMatrix((rho + rho.conj().T) / 2)


def _check_arity(family: Family, params: Sequence[float]) -> np.ndarray:
    values = np.atleast_1d(np.asarray(params, dtype=float))
    if values.ndim != 1 or values.size != family.arity:
        raise ParameterCountError(
            f"family {family.value} takes {family.arity} parameter(s), got {values.size}"
        )
    return values


def correlation_to_bell_weights(c: Sequence[float]) -> np.ndarray:
    """Qubit Bell weights w[k, l] of 1/4 (1 + sum c_i sigma_i x sigma_i).

    P00 = Phi+, P10 = Phi-, P01 = Psi+, P11 = Psi-.
    """
    c1, c2, c3 = c
    return np.array([
        [(1 + c1 - c2 + c3) / 4, (1 + c1 + c2 - c3) / 4],
        [(1 - c1 + c2 + c3) / 4, (1 - c1 - c2 - c3) / 4],
    ])


def correlation_vector(coords: SimplexCoordinates) -> Tuple[float, float, float]:
    """Inverse of correlation_to_bell_weights for d = 2"""
    if coords.d != 2:
        raise InvalidDimensionError("correlation vectors are defined for qubits only")
    (phi_p, psi_p), (phi_m, psi_m) = coords.weights
    return (
        float(phi_p - phi_m + psi_p - psi_m),
        float(-phi_p + phi_m + psi_p - psi_m),
        float(phi_p + phi_m - psi_p - psi_m),
    )


def family_coordinates(family: Any, params: Sequence[float], d: Optional[int] = None) -> SimplexCoordinates:
    """Bell-basis weights of a family member (identity part spread uniformly)"""
    family = Family.parse(family)
    values = _check_arity(family, params)
    d = family.dimension(d)
    if family is Family.TETRA2:
        return SimplexCoordinates(2, correlation_to_bell_weights(values))
    weights = np.full((d, d), (1.0 - values.sum()) / d ** 2)
    for (k, l), value in zip(family.table['projectors'], values):
        weights[k % d, l % d] += value
    return SimplexCoordinates(d, weights)


def family_state(family: Any, params: Sequence[float], d: Optional[int] = None) -> HermitianMatrix:
    """Density matrix of a family member; positivity is not enforced"""
    return simplex_state(family_coordinates(family, params, d))


def mix_with_noise(tau: HermitianMatrix, nu: float) -> HermitianMatrix:
    """(1 - nu)/D * 1 + nu * tau"""
    dim = tau.dim
    return HermitianMatrix((1.0 - nu) / dim * np.eye(dim) + nu * tau.data)


def _split_dims(rho: HermitianMatrix, dA: int, dB: int) -> np.ndarray:
    if rho.dim != dA * dB:
        raise DimensionMismatchError(f"matrix of dimension {rho.dim} is not {dA} x {dB}")
    return rho.data.reshape(dA, dB, dA, dB)


def partial_transpose(rho: HermitianMatrix, dA: int, dB: int) -> HermitianMatrix:
    """Transpose on the second factor"""
    blocks = _split_dims(rho, dA, dB)
    return HermitianMatrix(blocks.transpose(0, 3, 2, 1).reshape(dA * dB, dA * dB), hermitian=rho.hermitian)


def partial_trace(rho: HermitianMatrix, dA: int, dB: int, keep: str = 'A') -> HermitianMatrix:
    blocks = _split_dims(rho, dA, dB)
    keep = keep.upper()
    if keep == 'A':
        reduced = np.einsum('ijkj->ik', blocks)
    elif keep == 'B':
        reduced = np.einsum('ijil->jl', blocks)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return HermitianMatrix(reduced, hermitian=rho.hermitian)


def phase_space_transform(c: SimplexCoordinates, transform: PhaseSpaceMap) -> SimplexCoordinates:
    """c'[k', l'] = c[(M (k', l') + (j, r)) mod d]"""
    d = c.d
    det = transform.determinant() % d
    if det not in {1 % d, (d - 1) % d}:
        raise SymmetryViolationError(f"det M = {transform.determinant()} is not +-1 mod {d}")
    kp, lp = np.indices((d, d))
    k = (transform.m * kp + transform.n * lp + transform.j) % d
    l = (transform.p * kp + transform.q * lp + transform.r) % d
    return SimplexCoordinates(d, c.weights[k, l])


def is_positive(rho: HermitianMatrix) -> Tuple[bool, float]:
    min_eig = rho.min_eigenvalue()
    return min_eig >= -TOL['positivity'], min_eig


# Seeded random draws used by tests and verification suites

def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vec / np.linalg.norm(vec)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> HermitianMatrix:
    """Ginibre-distributed mixed state of the given rank (full rank by default)"""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return HermitianMatrix((rho + rho.conj().T) / 2)


def random_product_state(dA: int, dB: int, rng: np.random.Generator, pure: bool = False) -> HermitianMatrix:
    if pure:
        a = _projector(random_pure_state(dA, rng))
        b = _projector(random_pure_state(dB, rng))
    else:
        a = random_density_matrix(dA, rng).data
        b = random_density_matrix(dB, rng).data
    return HermitianMatrix(np.kron(a, b))


def random_simplex_coordinates(d: int, rng: np.random.Generator) -> SimplexCoordinates:
    """Uniform draw from the magic simplex"""
    return SimplexCoordinates(d, rng.dirichlet(np.ones(d * d)).reshape(d, d))


def random_separable_state(d: int, rng: np.random.Generator, terms: int = 4) -> HermitianMatrix:
    weights = rng.dirichlet(np.ones(terms))
    rho = sum(w * random_product_state(d, d, rng, pure=True).data for w in weights)
    return HermitianMatrix((rho + rho.conj().T) / 2)
