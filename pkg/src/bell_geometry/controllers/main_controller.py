import json
import time
from datetime import datetime
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import Settings
from ..models.cglmp_model import MeasurementSettings, cglmp_value
from ..models.concurrence_model import m_concurrence_lower_bound, m_concurrence_line_analytic
from ..models.geometry_model import classify, plane_residual, positivity_boundary_points, sphere_residual
from ..models.optimizer_model import BoundaryPoint, maximize_bell, scan_boundary
from ..models.scan_model import ScanJob, records_to_frame, run_scan, write_dataset, write_metadata
from ..models.state_model import Family, HermitianMatrix, family_state
from ..utils.config import Config
from ..utils.errors import (
    InputError,
    InvalidCoordinatesError,
    InvalidDimensionError,
    NormalizationError,
    SizeGuardError,
)
from ..utils.logging import Logger

# Families whose CGLMP boundary is compared against the sphere and planes
_FITTED_FAMILIES = (Family.ISOTROPIC, Family.TWO_PARAM, Family.LINE)


def parse_params(text: Optional[str]) -> Tuple[float, ...]:
    """'0.2,-0.08' -> (0.2, -0.08)"""
    if text is None or not str(text).strip():
        raise InvalidCoordinatesError("--params is required with --family")
    try:
        return tuple(float(v) for v in str(text).replace(';', ',').split(',') if v.strip())
    except ValueError:
        raise InvalidCoordinatesError(f"cannot parse parameters '{text}'") from None


def load_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read JSON file {path}: {e}") from e


def write_json(path: str, payload: Any) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(payload, f, indent=2)
        f.write('\n')


class MainController:
    """Runs the analysis commands against the models"""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.logger = Logger.get_instance("main_controller")

    @property
    def workers(self) -> int:
        return max(1, int(self.config.get('threads') or 1))

    def _check_size(self, d: int) -> None:
        limit = int(self.config.get('max_dimension'))
        if d > limit:
            raise SizeGuardError(f"d={d} exceeds the configured maximum dimension {limit} (--max-dimension)")

    def load_state(self, family: Optional[str] = None, params: Optional[str] = None, d: Optional[int] = None,
                   state_file: Optional[str] = None) -> Tuple[HermitianMatrix, int]:
        """State from a family and parameters, or from a JSON {dim, re, im} file"""
        if state_file:
            rho = HermitianMatrix.from_dict(load_json(state_file))
            local = int(round(np.sqrt(rho.dim)))
            if local * local != rho.dim:
                raise InvalidDimensionError(f"state dimension {rho.dim} is not d^2")
            if d is not None and d != local:
                raise InvalidDimensionError(f"state file is for d={local}, got --d {d}")
            if abs(rho.trace() - 1.0) > Settings.TOLERANCES['normalization']:
                raise NormalizationError(f"state has trace {rho.trace().real:.15g}")
            self._check_size(local)
            self.logger.debug(f"Loaded {rho.dim}x{rho.dim} state from {state_file}")
            return rho, local
        if not family:
            raise InputError("either --family with --params or --state-file is required")
        family = Family.parse(family)
        dim = family.dimension(d)
        self._check_size(dim)
        return family_state(family, parse_params(params), dim), dim

    def max_bell(self, family: Optional[str] = None, params: Optional[str] = None, d: Optional[int] = None,
                 state_file: Optional[str] = None, settings_file: Optional[str] = None,
                 settings_output: Optional[str] = None) -> Dict[str, Any]:
        rho, dim = self.load_state(family, params, d, state_file)
        if settings_file:
            settings = MeasurementSettings.from_dict(load_json(settings_file))
            if settings.d != dim:
                raise InvalidDimensionError(f"settings are for d={settings.d}, state has d={dim}")
            result = {'value': cglmp_value(rho, settings), 'd': dim, 'settings': settings.to_dict()}
            self.logger.info(f"I_{dim} at the given settings: {result['value']:.10f}")
        else:
            start = time.perf_counter()
            best = maximize_bell(rho, dim, self.config.optimizer_config())
            self.logger.info(
                f"max I_{dim} = {best.value:.10f} ({best.restarts_used} restarts, "
                f"converged: {best.converged}, {time.perf_counter() - start:.1f} s)"
            )
            result = {'d': dim, **best.to_dict()}
        if settings_output:
            write_json(settings_output, result['settings'])
            self.logger.info(f"Settings written to {settings_output}")
        return result

    def scan(self, job: ScanJob, output: Optional[str] = None, fmt: Optional[str] = None) -> Dict[str, Any]:
        """Run a scan job; the metadata sidecar is written even when the scan fails"""
        output = output or job.output or f"{job.name or job.family.value}.{fmt or job.format}"
        fmt = fmt or job.format
        metadata = {
            'command': 'scan',
            'artifact': Settings.APP_INFO['name'],
            'version': Settings.VERSION,
            'started_at': datetime.now().isoformat(),
            'seed': job.optimizer.seed,
            'workers': self.workers,
            'job': job.to_dict(),
            'config': self.config.to_dict(),
            'output': output,
            'format': fmt,
            'status': 'failed',
        }
        start = time.perf_counter()
        try:
            records = run_scan(job, workers=self.workers)
            frame = records_to_frame(records)
            write_dataset(frame, output, fmt)
            failures = int(frame['error'].notna().sum())
            metadata.update({
                'records': len(frame),
                'failures': failures,
                'status': 'partial' if failures else 'ok',
            })
            return {'output': output, 'records': len(frame), 'failures': failures}
        finally:
            metadata['wall_time_seconds'] = round(time.perf_counter() - start, 3)
            try:
                path = write_metadata(output, metadata)
                self.logger.info(f"Metadata written to {path} (status: {metadata['status']})")
            except OSError as e:
                self.logger.error(f"Could not write scan metadata: {e}")

    def boundary_frame(self, points: Sequence[BoundaryPoint], d: Optional[int] = None) -> pd.DataFrame:
        rows = []
        for point in points:
            family = Family.parse(point.family)
            fitted = family in _FITTED_FAMILIES and (family is not Family.ISOTROPIC or d == 3)
            source = point.source + (None,) * (3 - len(point.source))
            coords = (point.coordinates or ()) + (None,) * (3 - len(point.coordinates or ()))
            has_coords = point.coordinates is not None
            rows.append({
                'source_alpha': source[0], 'source_beta': source[1], 'source_gamma': source[2],
                'alpha': coords[0], 'beta': coords[1], 'gamma': coords[2],
                'nu_star': point.nu,
                'max_i_d': point.max_value,
                'on_positivity_boundary': point.on_positivity_boundary,
                'violating': point.violating,
                'sphere_residual': sphere_residual(point.coordinates) if fitted and has_coords else None,
                'plane_residual': plane_residual(point.coordinates) if fitted and has_coords else None,
                'error': point.error,
            })
        return pd.DataFrame(rows, columns=Settings.BOUNDARY_COLUMNS)

    def boundary(self, family: str = 'line', resolution: int = 10, d: Optional[int] = None,
                 facets: Optional[Sequence[int]] = None, output: Optional[str] = None,
                 fmt: Optional[str] = None) -> pd.DataFrame:
        """CGLMP boundary points above the positivity-boundary points of a family"""
        family = Family.parse(family)
        self._check_size(family.dimension(d))
        sources = positivity_boundary_points(family, resolution, d, facets)
        start = time.perf_counter()
        points = scan_boundary(family, sources, d, self.config.optimizer_config(), workers=self.workers)
        frame = self.boundary_frame(points, d)
        self.logger.info(f"Solved {len(frame)} boundary points in {time.perf_counter() - start:.1f} s")
        if output:
            fmt = fmt or self.config.get('format')
            write_dataset(frame, output, fmt)
            write_metadata(output, {
                'command': 'boundary',
                'artifact': Settings.APP_INFO['name'],
                'version': Settings.VERSION,
                'family': family.value,
                'resolution': resolution,
                'facets': None if facets is None else list(facets),
                'config': self.config.to_dict(),
                'wall_time_seconds': round(time.perf_counter() - start, 3),
                'status': 'ok',
            })
        return frame

    def classify(self, family: str, params: str, d: Optional[int] = None) -> Dict[str, Any]:
        family = Family.parse(family)
        self._check_size(family.dimension(d))
        result = classify(family, parse_params(params), self.config.optimizer_config(), d)
        self.logger.info(
            f"{family.value} {result.point}: positive={result.positive} ppt={result.ppt} "
            f"witness={result.witness_separable.value} violating={result.cglmp_violating}"
        )
        return result.to_dict()

    def concurrence(self, family: Optional[str] = None, params: Optional[str] = None, d: Optional[int] = None,
                    state_file: Optional[str] = None, analytic: bool = False) -> Dict[str, Any]:
        if analytic:
            values = parse_params(params)
            if len(values) != 2:
                raise InvalidCoordinatesError(
                    "--analytic takes the two parameters alpha,beta of rho_line(alpha, beta/2, beta/2)"
                )
            return {'alpha': values[0], 'beta': values[1], 'cm2': m_concurrence_line_analytic(*values)}
        rho, dim = self.load_state(family, params, d, state_file)
        result = m_concurrence_lower_bound(rho, dim, self.config.optimizer_config())
        self.logger.info(f"C_m^2 lower bound {result.lower_bound:.10f} (input basis {result.raw_bound:.10f})")
        return {'d': dim, **result.to_dict()}
