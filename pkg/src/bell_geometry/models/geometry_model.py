"""Entanglement-side geometry of the state families.

Closed-form region boundaries are read from ``config/boundaries.yaml`` as named
coefficient tables and evaluated as signed scalars: positive strictly inside the
property region (positive, PPT, separable, non-violating), zero on the boundary.
"""

import itertools
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import Settings
from ..utils.errors import ConfigError, InvalidCoordinatesError, NumericalError, UnknownBoundaryError
from ..utils.logging import Logger
from .cglmp_model import LOCAL_BOUND
from .optimizer_model import OptimizerConfig, maximize_bell
from .state_model import Family, HermitianMatrix, family_state, is_positive, partial_transpose

logger = Logger.get_instance("geometry_model")

SPHERE_CENTER = Settings.SURDS['sphere_center']
SPHERE_RADIUS = Settings.SURDS['sphere_radius']
PLANE_OFFSET = Settings.SURDS['plane_offset']
ISOTROPIC_CGLMP_BOUNDARY = PLANE_OFFSET / 2

_VARIABLES = 'abc'
_GEOMETRIC_KEYS = {'center', 'radius', 'offset', 'leading'}


class BoundaryKind(str, Enum):
    POSITIVITY = "POSITIVITY"
    PPT = "PPT"
    WITNESS = "WITNESS"
    CGLMP_SPHERE = "CGLMP_SPHERE"
    CGLMP_PLANE = "CGLMP_PLANE"
    OCTAHEDRON = "OCTAHEDRON"
    CYLINDER = "CYLINDER"

    @classmethod
    def parse(cls, value: Any) -> "BoundaryKind":
        try:
            return value if isinstance(value, cls) else cls(str(value).strip().upper())
        except ValueError:
            raise UnknownBoundaryError(f"unknown boundary kind '{value}'") from None


class WitnessVerdict(str, Enum):
    SEPARABLE = "SEPARABLE"
    ENTANGLED = "ENTANGLED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


def _exponents(key: str) -> Tuple[int, int, int]:
    """Monomial key ('a', 'b2', 'ab', 'const') to exponents of (a, b, c)"""
    exponents = [0, 0, 0]
    if key == 'const':
        return tuple(exponents)
    previous = None
    for char in key:
        if char.isdigit() and previous is not None:
            exponents[previous] += int(char) - 1
        elif char in _VARIABLES:
            previous = _VARIABLES.index(char)
            exponents[previous] += 1
        else:
            raise ConfigError(f"invalid monomial key '{key}'")
    return tuple(exponents)


@dataclass(frozen=True)
class Polynomial:
    terms: Tuple[Tuple[float, Tuple[int, int, int]], ...]

    @classmethod
    def from_mapping(cls, member: Dict[str, Any]) -> "Polynomial":
        return cls(tuple(
            (float(value), _exponents(key)) for key, value in member.items() if key not in _GEOMETRIC_KEYS
        ))

    def __call__(self, point: np.ndarray) -> float:
        return float(sum(coeff * np.prod(point ** np.array(exps)) for coeff, exps in self.terms))

    def derivative(self, point: np.ndarray, variable: int) -> float:
        total = 0.0
        for coeff, exps in self.terms:
            if exps[variable] == 0:
                continue
            reduced = np.array(exps)
            reduced[variable] -= 1
            total += coeff * exps[variable] * np.prod(point ** reduced)
        return float(total)


@dataclass(frozen=True)
class BoundarySpec:
    """A named closed-form boundary of one family"""

    name: str
    family: Family
    kind: BoundaryKind
    orientation: int
    combine: str
    members: Tuple[Dict[str, Any], ...]

    def polynomials(self) -> Tuple[Polynomial, ...]:
        return tuple(Polynomial.from_mapping(m) for m in self.members)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'family': self.family.value,
            'kind': self.kind.value,
            'orientation': self.orientation,
            'combine': self.combine,
            'members': [dict(m) for m in self.members],
        }


def _load_registry() -> Dict[str, BoundarySpec]:
    registry = {}
    for family_name, entries in Settings.BOUNDARIES.items():
        family = Family.parse(family_name)
        for entry in entries:
            combine = entry.get('combine', 'min')
            if combine not in ('min', 'branch'):
                raise ConfigError(f"boundary {entry['name']}: unknown combine rule '{combine}'")
            spec = BoundarySpec(
                name=entry['name'],
                family=family,
                kind=BoundaryKind.parse(entry['kind']),
                orientation=int(entry.get('orientation', 1)),
                combine=combine,
                members=tuple(dict(m) for m in entry['members']),
            )
            spec.polynomials()  # validates monomial keys
            registry[spec.name] = spec
    return registry


BOUNDARIES = _load_registry()


def get_boundary(name: str) -> BoundarySpec:
    try:
        return BOUNDARIES[name]
    except KeyError:
        raise UnknownBoundaryError(f"unknown boundary '{name}'") from None


def boundaries_for(family: Any, kind: Optional[Any] = None) -> Tuple[BoundarySpec, ...]:
    family = Family.parse(family)
    kind = None if kind is None else BoundaryKind.parse(kind)
    return tuple(
        spec for spec in BOUNDARIES.values()
        if spec.family is family and (kind is None or spec.kind is kind)
    )


def _find_boundary(family: Family, kind: BoundaryKind) -> Optional[BoundarySpec]:
    specs = boundaries_for(family, kind)
    return specs[0] if specs else None


def _padded(point: np.ndarray) -> np.ndarray:
    padded = np.zeros(3)
    padded[:point.size] = point
    return padded


def sphere_residual(point: Sequence[float]) -> float:
    """| distance to the sphere center - radius |"""
    p = _padded(np.asarray(point, dtype=float))
    return float(abs(np.linalg.norm(p - SPHERE_CENTER) - SPHERE_RADIUS))


def plane_residual(point: Sequence[float]) -> float:
    """Distance, in the leading parameter, to the nearest of the three CGLMP planes"""
    p = _padded(np.asarray(point, dtype=float))
    return float(min(
        abs(p[i] - 0.5 * (p[j] + p[k] + PLANE_OFFSET))
        for i, j, k in ((0, 1, 2), (1, 0, 2), (2, 0, 1))
    ))


def member_values(spec: BoundarySpec, point: np.ndarray) -> List[float]:
    kind = spec.kind
    if kind is BoundaryKind.CGLMP_SPHERE:
        p = _padded(point)
        return [Settings.SURDS[m['radius']] - float(np.linalg.norm(p - Settings.SURDS[m['center']]))
                for m in spec.members]
    if kind is BoundaryKind.CGLMP_PLANE:
        p = _padded(point)
        return [
            Settings.SURDS[m['offset']] - (2 * p[i] - p[j] - p[k])
            for m in spec.members
            for i, j, k in ((0, 1, 2), (1, 0, 2), (2, 0, 1))
        ]
    p = _padded(point)
    polynomials = spec.polynomials()
    if spec.combine == 'branch':
        values = []
        for member, poly in zip(spec.members, polynomials):
            w = poly(p)
            # a member only binds on the side of its ellipse where w grows with the leading variable
            if poly.derivative(p, _VARIABLES.index(member['leading'])) > 0:
                values.append(spec.orientation * w)
            else:
                values.append(abs(w))
        return values
    return [spec.orientation * poly(p) for poly in polynomials]


def boundary_value(spec: Any, point: Sequence[float]) -> float:
    """Signed boundary function; positive strictly inside the property region"""
    if not isinstance(spec, BoundarySpec):
        spec = get_boundary(str(spec))
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.size != spec.family.arity:
        raise InvalidCoordinatesError(
            f"boundary {spec.name} takes {spec.family.arity} coordinate(s), got {point.size}"
        )
    return float(min(member_values(spec, point)))


def is_ppt(rho: HermitianMatrix, dA: int, dB: int) -> Tuple[bool, float]:
    """PPT flag and the minimum eigenvalue of the partial transpose on B"""
    min_eig = partial_transpose(rho, dA, dB).min_eigenvalue()
    return min_eig >= -Settings.TOLERANCES['positivity'], min_eig


@dataclass(frozen=True)
class Classification:
    family: str
    point: Tuple[float, ...]
    positive: bool
    min_eigenvalue: float
    ppt: bool
    ppt_min_eigenvalue: float
    witness_separable: WitnessVerdict
    witness_value: Optional[float]
    bound_entangled: bool
    cglmp_violating: Optional[bool]
    cglmp_margin: Optional[float]
    cglmp_error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record['witness_separable'] = self.witness_separable.value
        return record


def witness_verdict(family: Any, point: Sequence[float], ppt: bool) -> Tuple[WitnessVerdict, Optional[float]]:
    """Separability verdict from the optimal-witness boundaries.

    ISOTROPIC and TETRA2 are separable exactly when PPT. OFFLINE has no
    closed-form witness boundary.
    """
    family = Family.parse(family)
    if family in (Family.ISOTROPIC, Family.TETRA2):
        return (WitnessVerdict.SEPARABLE if ppt else WitnessVerdict.ENTANGLED), None
    spec = _find_boundary(family, BoundaryKind.WITNESS)
    if spec is None:
        return WitnessVerdict.NOT_APPLICABLE, None
    value = boundary_value(spec, point)
    if not ppt or value < 0:
        return WitnessVerdict.ENTANGLED, value
    return WitnessVerdict.SEPARABLE, value


def classify(family: Any, point: Sequence[float], cfg: Optional[OptimizerConfig] = None,
             d: Optional[int] = None) -> Classification:
    family = Family.parse(family)
    point = tuple(float(v) for v in np.atleast_1d(point))
    dim = family.dimension(d)
    rho = family_state(family, point, dim)
    positive, min_eig = is_positive(rho)
    ppt, ppt_min_eig = is_ppt(rho, dim, dim)
    verdict, witness_value = witness_verdict(family, point, ppt)
    bound_entangled = positive and ppt and verdict is WitnessVerdict.ENTANGLED

    violating, margin, error = None, None, None
    if positive:
        try:
            margin = maximize_bell(rho, dim, cfg).value - LOCAL_BOUND
            violating = margin > Settings.TOLERANCES['violation']
        except NumericalError as e:
            logger.warning(f"CGLMP maximization failed for {family.value} {point}: {e}")
            error = f"{type(e).__name__}: {e}"
    return Classification(
        family=family.value,
        point=point,
        positive=positive,
        min_eigenvalue=min_eig,
        ppt=ppt,
        ppt_min_eigenvalue=ppt_min_eig,
        witness_separable=verdict,
        witness_value=witness_value,
        bound_entangled=bound_entangled,
        cglmp_violating=violating,
        cglmp_margin=margin,
        cglmp_error=error,
    )


def positivity_vertices(family: Any, d: Optional[int] = None) -> np.ndarray:
    """Vertices of the family's positivity polytope, one row per vertex"""
    family = Family.parse(family)
    if family is Family.ISOTROPIC:
        dim = family.dimension(d)
        return np.array([[1.0], [-1.0 / (dim * dim - 1)]])
    return np.array(family.table['vertices'], dtype=float)


def _compositions(total: int, parts: int):
    """Non-negative integer tuples of length `parts` summing to `total`"""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        bounds = (-1,) + cuts + (total + parts - 1,)
        yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(parts))


def positivity_boundary_points(family: Any, resolution: int = 10, d: Optional[int] = None,
                               facets: Optional[Sequence[int]] = None) -> np.ndarray:
    """Equally spaced points on the boundary of the positivity polytope.

    Every polytope here is a simplex; facet i is the face opposite vertex i.
    Points shared by neighbouring facets appear once, in first-seen order.
    """
    if resolution < 1:
        raise InvalidCoordinatesError(f"resolution must be >= 1, got {resolution}")
    vertices = positivity_vertices(family, d)
    count = len(vertices)
    facets = range(count) if facets is None else facets
    points, seen = [], set()
    for facet in facets:
        if not 0 <= facet < count:
            raise InvalidCoordinatesError(f"facet index {facet} out of range for {count} vertices")
        corners = np.delete(vertices, facet, axis=0)
        for weights in _compositions(resolution, len(corners)):
            point = np.asarray(weights, dtype=float) @ corners / resolution
            key = tuple(np.round(point, 12))
            if key not in seen:
                seen.add(key)
                points.append(point)
    return np.array(points)
