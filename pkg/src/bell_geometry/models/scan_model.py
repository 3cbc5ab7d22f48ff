"""Parameter scans over a state family: job definitions, per-point evaluation
and the dataset writers."""

import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from ..config import Settings
from ..utils.errors import ScanJobError
from ..utils.logging import Logger
from .cglmp_model import LOCAL_BOUND
from .concurrence_model import m_concurrence_lower_bound
from .geometry_model import BoundaryKind, boundaries_for, boundary_value, is_ppt, member_values
from .optimizer_model import OptimizerConfig, derive_point_seed, maximize_bell
from .state_model import Family, family_state

logger = Logger.get_instance("scan_model")

NOT_POSITIVE = "state not positive semidefinite"


class Task(str, Enum):
    POSITIVITY = "POSITIVITY"
    PPT = "PPT"
    WITNESS = "WITNESS"
    CGLMP = "CGLMP"
    CONCURRENCE = "CONCURRENCE"
    OCTAHEDRON = "OCTAHEDRON"
    CYLINDER = "CYLINDER"

    @classmethod
    def parse(cls, value: Any) -> "Task":
        try:
            return value if isinstance(value, Task) else cls(str(value).strip().upper())
        except ValueError:
            raise ScanJobError(f"unknown scan task '{value}'") from None


OPTIMIZER_TASKS = frozenset({Task.CGLMP, Task.CONCURRENCE})
QUBIT_TASKS = frozenset({Task.OCTAHEDRON, Task.CYLINDER})


@dataclass(frozen=True)
class ScanAxis:
    name: str
    start: float
    stop: float
    resolution: int

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise ScanJobError(f"axis {self.name}: resolution must be an integer >= 2, got {self.resolution}")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.resolution))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScanAxis":
        try:
            return cls(str(data['name']), float(data['start']), float(data['stop']), int(data['resolution']))
        except (KeyError, TypeError, ValueError) as e:
            raise ScanJobError(f"invalid grid axis {data!r}: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'start': self.start, 'stop': self.stop, 'resolution': self.resolution}


@dataclass(frozen=True)
class ScanJob:
    """A grid scan of one family.

    Axes map onto the family parameters in order. With `equal_split` the last
    axis value is divided equally over the remaining parameters, so a single
    axis beta drives (beta/2, beta/2) on the line family.
    """

    family: Family
    axes: Tuple[ScanAxis, ...]
    tasks: Tuple[Task, ...]
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    d: Optional[int] = None
    equal_split: bool = False
    output: Optional[str] = None
    format: str = Settings.SCAN_DEFAULTS['format']
    name: str = ""
    description: str = ""

    def __post_init__(self):
        arity = self.family.arity
        if not self.axes:
            raise ScanJobError("a scan needs at least one grid axis")
        if self.equal_split and len(self.axes) > arity:
            raise ScanJobError(f"family {self.family.value} has {arity} parameter(s), got {len(self.axes)} axes")
        if not self.equal_split and len(self.axes) != arity:
            raise ScanJobError(
                f"family {self.family.value} needs {arity} grid axes (or equal_split), got {len(self.axes)}"
            )
        if not self.tasks:
            raise ScanJobError("a scan needs at least one task")
        if self.family is not Family.TETRA2 and QUBIT_TASKS.intersection(self.tasks):
            raise ScanJobError("OCTAHEDRON and CYLINDER tasks apply to the tetra2 family only")
        if self.format not in Settings.OUTPUT_FORMATS:
            raise ScanJobError(f"output format must be one of {Settings.OUTPUT_FORMATS}, got '{self.format}'")
        self.family.dimension(self.d)

    @property
    def point_count(self) -> int:
        return int(np.prod([axis.resolution for axis in self.axes]))

    def _parameters(self, values: Sequence[float]) -> Tuple[float, ...]:
        if not self.equal_split:
            return tuple(float(v) for v in values)
        head, last = values[:-1], values[-1]
        share = self.family.arity - len(head)
        return tuple(float(v) for v in head) + (float(last) / share,) * share

    def points(self) -> Iterator[Tuple[int, Tuple[float, ...]]]:
        """(index, family parameters) in row-major grid order, last axis fastest"""
        grids = [axis.values() for axis in self.axes]
        for index, values in enumerate(itertools.product(*grids)):
            yield index, self._parameters(values)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScanJob":
        if not isinstance(data, dict):
            raise ScanJobError("scan job must be a mapping")
        data = data.get('job', data)
        try:
            family = Family.parse(data['family'])
            axes = tuple(ScanAxis.from_dict(axis) for axis in data['grid'])
            tasks = tuple(Task.parse(task) for task in data['tasks'])
        except KeyError as e:
            raise ScanJobError(f"scan job is missing the '{e.args[0]}' entry") from None
        output = data.get('output') or {}
        if isinstance(output, str):
            output = {'path': output}
        return cls(
            family=family,
            axes=axes,
            tasks=tasks,
            optimizer=OptimizerConfig.from_mapping(data.get('optimizer') or {}),
            d=data.get('d'),
            equal_split=bool(data.get('equal_split', False)),
            output=output.get('path'),
            format=str(output.get('format', Settings.SCAN_DEFAULTS['format'])).lower(),
            name=str(data.get('name', '')),
            description=str(data.get('description', '')),
        )

    @classmethod
    def from_file(cls, path: str) -> "ScanJob":
        """Load a job from YAML or JSON (by extension)"""
        path = Path(path)
        if not path.exists():
            candidate = Settings.JOBS_DIR / f"{path.stem}.yaml"
            if path.parent == Path('.') and candidate.exists():
                path = candidate
            else:
                raise ScanJobError(f"scan job file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f) if path.suffix.lower() == '.json' else yaml.safe_load(f)
        except (OSError, ValueError, yaml.YAMLError) as e:
            raise ScanJobError(f"cannot read scan job {path}: {e}") from e
        job = cls.from_dict(data)
        logger.info(f"Loaded scan job '{job.name or path.stem}' from {path} ({job.point_count} points)")
        return job

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'description': self.description,
            'family': self.family.value,
            'd': self.d,
            'equal_split': self.equal_split,
            'tasks': [task.value for task in self.tasks],
            'grid': [axis.to_dict() for axis in self.axes],
            'optimizer': self.optimizer.to_dict(),
            'output': {'path': self.output, 'format': self.format},
        }

    def save(self, path: str) -> None:
        data = {
            'version': Settings.VERSION,
            'created_at': datetime.now().isoformat(),
            'job': self.to_dict(),
        }
        with open(path, 'w', encoding='utf-8') as f:
            yaml.dump(data, f, default_flow_style=False, sort_keys=False, allow_unicode=True)
        logger.info(f"Scan job saved to {path}")


@dataclass(frozen=True)
class ScanRecord:
    index: int
    params: Tuple[float, ...]
    min_eig: Optional[float] = None
    ppt_min_eig: Optional[float] = None
    witness: Tuple[Optional[float], ...] = ()
    octahedron: Optional[float] = None
    cylinder: Optional[float] = None
    max_i_d: Optional[float] = None
    nu_star: Optional[float] = None
    cm2_lb: Optional[float] = None
    error: Optional[str] = None

    def to_row(self) -> Dict[str, Any]:
        row = dict(zip(Settings.PARAMETER_COLUMNS, self.params + (None,) * (3 - len(self.params))))
        witness = self.witness + (None,) * (3 - len(self.witness))
        row.update({
            'min_eig': self.min_eig,
            'ppt_min_eig': self.ppt_min_eig,
            'witness_1': witness[0],
            'witness_2': witness[1],
            'witness_3': witness[2],
            'octahedron': self.octahedron,
            'cylinder': self.cylinder,
            'max_i_d': self.max_i_d,
            'nu_star': self.nu_star,
            'cm2_lb': self.cm2_lb,
            'error': self.error,
        })
        return row


def _single_boundary(family: Family, kind: BoundaryKind):
    specs = boundaries_for(family, kind)
    return specs[0] if specs else None


def evaluate_point(task: Tuple[str, Tuple[float, ...], Optional[int], Tuple[str, ...], OptimizerConfig, int]) -> ScanRecord:
    """One grid point; never raises, failures land in the error field"""
    family_name, params, d, task_names, cfg, index = task
    family = Family.parse(family_name)
    tasks = {Task(name) for name in task_names}
    values: Dict[str, Any] = {}
    try:
        dim = family.dimension(d)
        rho = family_state(family, params, dim)
        values['min_eig'] = rho.min_eigenvalue()
        positive = values['min_eig'] >= -Settings.TOLERANCES['positivity']
        if Task.PPT in tasks:
            values['ppt_min_eig'] = is_ppt(rho, dim, dim)[1]
        if Task.WITNESS in tasks:
            spec = _single_boundary(family, BoundaryKind.WITNESS)
            if spec is not None:
                values['witness'] = tuple(member_values(spec, np.asarray(params)))
        if Task.OCTAHEDRON in tasks:
            values['octahedron'] = boundary_value(_single_boundary(family, BoundaryKind.OCTAHEDRON), params)
        if Task.CYLINDER in tasks:
            values['cylinder'] = boundary_value(_single_boundary(family, BoundaryKind.CYLINDER), params)
        if OPTIMIZER_TASKS.intersection(tasks):
            if not positive:
                values['error'] = NOT_POSITIVE
            else:
                point_cfg = cfg.with_seed(derive_point_seed(cfg.seed, index))
                if Task.CGLMP in tasks:
                    values['max_i_d'] = maximize_bell(rho, dim, point_cfg).value
                    if values['max_i_d'] > LOCAL_BOUND * Settings.TOLERANCES['violation']:
                        values['nu_star'] = LOCAL_BOUND / values['max_i_d']
                if Task.CONCURRENCE in tasks:
                    values['cm2_lb'] = m_concurrence_lower_bound(rho, dim, point_cfg).lower_bound
    except Exception as e:  # recorded per point, the scan continues
        values['error'] = f"{type(e).__name__}: {e}"
    return ScanRecord(index=index, params=tuple(params), **values)


def run_scan(job: ScanJob, workers: int = 1) -> List[ScanRecord]:
    """Evaluate every grid point; records come back in grid order"""
    tasks = [
        (job.family.value, params, job.d, tuple(t.value for t in job.tasks), job.optimizer, index)
        for index, params in job.points()
    ]
    logger.info(
        f"Scanning {len(tasks)} points of family {job.family.value} "
        f"(tasks: {', '.join(t.value for t in job.tasks)}; workers: {workers})"
    )
    if workers > 1 and len(tasks) > 1:
        chunksize = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(evaluate_point, tasks, chunksize=chunksize))
    else:
        records = []
        for task in tasks:
            records.append(evaluate_point(task))
            logger.debug(f"point {task[-1]} done")
    failures = sum(1 for record in records if record.error)
    if failures:
        logger.warning(f"{failures} of {len(records)} point(s) recorded an error")
    return records


def records_to_frame(records: Sequence[ScanRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.to_row() for record in records], columns=Settings.CSV_COLUMNS)


def write_dataset(frame: pd.DataFrame, path: str, fmt: str = 'csv') -> None:
    """Write a dataset; CSV output is byte-stable for identical inputs"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    if fmt == 'csv':
        digits = int(Settings.SCAN_DEFAULTS['float_digits'])
        frame.to_csv(path, index=False, float_format=f'%.{digits}g', na_rep='', lineterminator='\n')
    elif fmt == 'json':
        records = frame.astype(object).where(frame.notna(), None).to_dict(orient='records')
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(records, f, indent=2)
            f.write('\n')
    else:
        raise ScanJobError(f"output format must be one of {Settings.OUTPUT_FORMATS}, got '{fmt}'")
    logger.info(f"Wrote {len(frame)} record(s) to {path}")


def metadata_path(path: str) -> str:
    return f"{path}.meta.json"


def write_metadata(path: str, metadata: Dict[str, Any]) -> str:
    """Sidecar `<output>.meta.json` next to a dataset"""
    target = metadata_path(path)
    os.makedirs(os.path.dirname(os.path.abspath(target)), exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(metadata, f, indent=2, default=str)
        f.write('\n')
    return target
