"""Composite parameterization of U(d).

A unitary is an ordered product of two-level rotations, one per pair m < n,
optionally followed by a block of diagonal phases. Angles live in a d x d
matrix: entries above the diagonal are rotations, entries on and below it are
phases.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Tuple

import numpy as np

from ..utils.errors import IndexOrderError, ParameterCountError
from .state_model import check_dimension

TWO_PI = 2.0 * np.pi
HALF_PI = 0.5 * np.pi


class Form(str, Enum):
    FULL = "full"
    REDUCED = "reduced"


@dataclass(frozen=True)
class GeneratorPair:
    """Basis pair (m, n) with m < n of a two-level factor"""

    m: int
    n: int

    def __post_init__(self):
        if not 0 <= self.m < self.n:
            raise IndexOrderError(f"generator pair needs 0 <= m < n, got ({self.m}, {self.n})")

    def sigma(self, d: int) -> np.ndarray:
        """-i|m><n| + i|n><m|"""
        s = np.zeros((d, d), dtype=complex)
        s[self.m, self.n] = -1j
        s[self.n, self.m] = 1j
        return s


def generator_pairs(d: int) -> Tuple[GeneratorPair, ...]:
    return tuple(GeneratorPair(m, n) for m in range(d - 1) for n in range(m + 1, d))


@lru_cache(maxsize=None)
def reduced_layout(d: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row/column indices of the off-diagonal entries (row-major) and a rotation mask"""
    rows, cols = np.nonzero(~np.eye(d, dtype=bool))
    return rows, cols, rows < cols


@dataclass(frozen=True)
class ParamMatrix:
    d: int
    lam: np.ndarray

    def __post_init__(self):
        check_dimension(self.d)
        lam = np.array(self.lam, dtype=float, copy=True)
        if lam.shape != (self.d, self.d):
            raise ParameterCountError(f"lambda must have shape ({self.d}, {self.d}), got {lam.shape}")
        lam.setflags(write=False)
        object.__setattr__(self, 'lam', lam)

    @classmethod
    def zeros(cls, d: int) -> "ParamMatrix":
        return cls(d, np.zeros((d, d)))

    @classmethod
    def from_vector(cls, vector: np.ndarray, d: int, form: Form = Form.REDUCED) -> "ParamMatrix":
        vector = np.asarray(vector, dtype=float)
        expected = parameter_count(d, form)
        if vector.size != expected:
            raise ParameterCountError(f"{form.value} form at d={d} takes {expected} parameters, got {vector.size}")
        if form is Form.FULL:
            return cls(d, vector.reshape(d, d))
        rows, cols, _ = reduced_layout(d)
        lam = np.zeros((d, d))
        lam[rows, cols] = vector
        return cls(d, lam)

    def to_vector(self, form: Form = Form.REDUCED) -> np.ndarray:
        if form is Form.FULL:
            return self.lam.ravel().copy()
        rows, cols, _ = reduced_layout(self.d)
        return self.lam[rows, cols].copy()

    def to_dict(self) -> Dict[str, Any]:
        return {'d': self.d, 'lambda': self.lam.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ParamMatrix":
        return cls(int(data['d']), np.asarray(data['lambda'], dtype=float))


def parameter_count(d: int, form: Form = Form.REDUCED) -> int:
    d = check_dimension(d)
    return d * d if Form(form) is Form.FULL else d * d - d


def _block(rot: float, phase: float) -> np.ndarray:
    c, s = np.cos(rot), np.sin(rot)
    e = np.exp(1j * phase)
    return np.array([[e * c, -e * s], [s, c]])


def elementary_factor(d: int, m: int, n: int, rot: float, phase: float) -> np.ndarray:
    """Two-level factor acting on span{|m>, |n>}, identity elsewhere"""
    pair = GeneratorPair(m, n)
    d = check_dimension(d)
    if pair.n >= d:
        raise IndexOrderError(f"index {pair.n} out of range for d={d}")
    factor = np.eye(d, dtype=complex)
    factor[np.ix_([m, n], [m, n])] = _block(rot, phase)
    return factor


def _apply_stage(u: np.ndarray, lam: np.ndarray, m: int) -> None:
    """Right-multiply u in place by the factors of stage m (n = m+1 .. d-1)"""
    d = lam.shape[0]
    for n in range(m + 1, d):
        c, s = np.cos(lam[m, n]), np.sin(lam[m, n])
        e = np.exp(1j * lam[n, m])
        col_m = u[:, m].copy()
        u[:, m] = (e * c) * col_m + s * u[:, n]
        u[:, n] = (-e * s) * col_m + c * u[:, n]


def reduced_unitary(lam: np.ndarray) -> np.ndarray:
    """Ordered product of all two-level factors for a raw angle array"""
    d = lam.shape[0]
    u = np.eye(d, dtype=complex)
    for m in range(d - 1):
        _apply_stage(u, lam, m)
    return u


def stage_product(p: ParamMatrix, m: int) -> np.ndarray:
    """Partial product over n for a fixed m; acts trivially on |0>..|m-1>"""
    u = np.eye(p.d, dtype=complex)
    _apply_stage(u, p.lam, m)
    return u


def composite_unitary(p: ParamMatrix, form: Form = Form.REDUCED) -> np.ndarray:
    u = reduced_unitary(p.lam)
    if Form(form) is Form.FULL:
        u = u * np.exp(1j * np.diag(p.lam))[np.newaxis, :]
    return u


def wrap_phase(angle: np.ndarray) -> np.ndarray:
    t = np.mod(angle, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2 pi
    return np.where(t >= TWO_PI, 0.0, t)


def canonicalize(p: ParamMatrix) -> ParamMatrix:
    """Fold rotations into [0, pi/2] and wrap phases into [0, 2 pi).

    A fold leaves a diagonal sign to the right of its factor. The sign is moved
    through the later factors, negating the rotations of pairs it touches once,
    and ends up on the columns of the composite unitary. The measurement
    projectors are therefore unchanged.
    """
    d = p.d
    lam = np.array(p.lam, dtype=float)
    sign = [False] * d
    for m in range(d - 1):
        for n in range(m + 1, d):
            theta = -lam[m, n] if sign[m] != sign[n] else lam[m, n]
            turns = np.floor(theta / np.pi)
            t = theta - turns * np.pi
            # R(t + pi) = R(t) diag(-1, -1) on the pair
            if int(turns) % 2:
                sign[m], sign[n] = not sign[m], not sign[n]
            # R(t, phi) = R(pi - t, phi + pi) diag(1, -1)
            if t > HALF_PI:
                t = np.pi - t
                lam[n, m] += np.pi
                sign[n] = not sign[n]
            lam[m, n] = min(max(t, 0.0), HALF_PI)
    phases = ~np.triu(np.ones((d, d), dtype=bool), k=1)
    lam[phases] = wrap_phase(lam[phases])
    return ParamMatrix(d, lam)


def canonical_vector(vector: np.ndarray, d: int) -> np.ndarray:
    """canonicalize() applied to a REDUCED parameter vector"""
    return canonicalize(ParamMatrix.from_vector(vector, d)).to_vector()


def random_param_matrix(d: int, rng: np.random.Generator) -> ParamMatrix:
    """Uniform draw from the canonical box"""
    upper = np.triu(np.ones((d, d), dtype=bool), k=1)
    return ParamMatrix(d, np.where(upper, rng.uniform(0.0, HALF_PI, (d, d)), rng.uniform(0.0, TWO_PI, (d, d))))


def random_reduced_vector(d: int, rng: np.random.Generator, count: int = 1) -> np.ndarray:
    """Concatenation of `count` REDUCED vectors drawn from the canonical box"""
    _, _, is_rotation = reduced_layout(d)
    high = np.where(is_rotation, HALF_PI, TWO_PI)
    return np.concatenate([rng.uniform(0.0, high) for _ in range(count)])
