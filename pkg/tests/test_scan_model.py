import json

import numpy as np
import pandas as pd
import pytest
import yaml

from bell_geometry.config import Settings
from bell_geometry.models.optimizer_model import OptimizerConfig
from bell_geometry.models.scan_model import (
    NOT_POSITIVE,
    ScanAxis,
    ScanJob,
    ScanRecord,
    Task,
    evaluate_point,
    metadata_path,
    records_to_frame,
    run_scan,
    write_dataset,
    write_metadata,
)
from bell_geometry.models.state_model import Family
from bell_geometry.utils.errors import InvalidDimensionError, ScanJobError

FAST = OptimizerConfig(restarts=4, max_iterations=4000, f_tolerance=1e-12, x_tolerance=1e-8, seed=7)


def _tetra_job(resolution=3, **kwargs):
    axes = tuple(ScanAxis(name, -1.0, 1.0, resolution) for name in ('c1', 'c2', 'c3'))
    return ScanJob(Family.TETRA2, axes, (Task.POSITIVITY, Task.PPT, Task.OCTAHEDRON, Task.CYLINDER), **kwargs)


def test_axis_values():
    assert ScanAxis('alpha', 0.0, 1.0, 5).values().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ScanJobError):
        ScanAxis('alpha', 0.0, 1.0, 1)
    with pytest.raises(ScanJobError):
        ScanAxis.from_dict({'name': 'alpha', 'start': 0.0})


def test_task_parse():
    assert Task.parse(' cglmp ') is Task.CGLMP
    with pytest.raises(ScanJobError):
        Task.parse('ENTROPY')


def test_job_validation():
    alpha = ScanAxis('alpha', 0.0, 1.0, 3)
    with pytest.raises(ScanJobError):
        ScanJob(Family.LINE, (alpha, alpha), (Task.PPT,))
    with pytest.raises(ScanJobError):
        ScanJob(Family.TWO_PARAM, (alpha, alpha), (Task.OCTAHEDRON,))
    with pytest.raises(ScanJobError):
        ScanJob(Family.TWO_PARAM, (alpha, alpha), ())
    with pytest.raises(ScanJobError):
        ScanJob(Family.TWO_PARAM, (alpha, alpha), (Task.PPT,), format='xlsx')
    with pytest.raises(InvalidDimensionError):
        ScanJob(Family.ISOTROPIC, (alpha,), (Task.PPT,))


def test_grid_order_and_equal_split():
    job = ScanJob(
        Family.LINE,
        (ScanAxis('alpha', 0.0, 0.5, 2), ScanAxis('beta', 0.2, 0.6, 2)),
        (Task.PPT,),
        equal_split=True,
    )
    assert job.point_count == 4
    assert list(job.points()) == [
        (0, (0.0, 0.1, 0.1)),
        (1, (0.0, 0.3, 0.3)),
        (2, (0.5, 0.1, 0.1)),
        (3, (0.5, 0.3, 0.3)),
    ]


def test_job_from_dict_accepts_wrapped_jobs():
    data = {'version': '1.0.0', 'job': {
        'family': 'two_param',
        'tasks': ['ppt', 'witness'],
        'grid': [{'name': 'alpha', 'start': 0, 'stop': 1, 'resolution': 3}] * 2,
        'optimizer': {'restarts': 3},
        'output': 'slice.json',
    }}
    job = ScanJob.from_dict(data)
    assert job.family is Family.TWO_PARAM
    assert job.tasks == (Task.PPT, Task.WITNESS)
    assert job.optimizer.restarts == 3
    assert job.output == 'slice.json'
    with pytest.raises(ScanJobError):
        ScanJob.from_dict({'family': 'line', 'tasks': ['PPT']})


def test_job_save_and_reload(tmp_path):
    job = _tetra_job(name='cube', optimizer=FAST)
    path = tmp_path / 'cube.yaml'
    job.save(str(path))
    saved = yaml.safe_load(path.read_text())
    assert saved['version'] == Settings.VERSION
    assert ScanJob.from_file(str(path)) == job


def test_bundled_jobs_load():
    names = sorted(p.stem for p in Settings.JOBS_DIR.glob('*.yaml'))
    assert 'two_param_regions' in names
    for name in names:
        job = ScanJob.from_file(name)
        assert job.name == name
    assert ScanJob.from_file('two_param_regions').point_count == 40000
    with pytest.raises(ScanJobError):
        ScanJob.from_file('no_such_job')


def test_evaluate_point_closed_form_tasks():
    record = evaluate_point(('tetra2', (1.0, -1.0, 1.0), None, ('OCTAHEDRON', 'CYLINDER', 'PPT'), FAST, 0))
    assert record.error is None
    assert record.min_eig == pytest.approx(0.0, abs=1e-12)
    assert record.ppt_min_eig == pytest.approx(-0.5)
    assert record.octahedron == pytest.approx(-2.0)
    assert record.cylinder == pytest.approx(-1.0)
    assert record.max_i_d is None


def test_evaluate_point_witness_members():
    record = evaluate_point(('two_param', (0.2303, -0.08), None, ('WITNESS',), FAST, 0))
    assert len(record.witness) == 2
    assert min(record.witness) < 0


def test_evaluate_point_cglmp():
    record = evaluate_point(('isotropic', (1.0,), 2, ('CGLMP',), FAST, 5))
    assert record.max_i_d == pytest.approx(2 * np.sqrt(2), abs=1e-6)
    assert record.nu_star == pytest.approx(1 / np.sqrt(2), abs=1e-6)


def test_evaluate_point_skips_optimizer_outside_the_state_space():
    record = evaluate_point(('tetra2', (1.0, 1.0, 1.0), None, ('CGLMP',), FAST, 0))
    assert record.min_eig < 0
    assert record.max_i_d is None
    assert record.error == NOT_POSITIVE


def test_evaluate_point_never_raises():
    record = evaluate_point(('line', (0.1, 0.2), None, ('PPT',), FAST, 0))
    assert record.error.startswith('ParameterCountError')


def test_run_scan_frame_layout():
    records = run_scan(_tetra_job())
    frame = records_to_frame(records)
    assert list(frame.columns) == Settings.CSV_COLUMNS
    assert len(frame) == 27
    assert [r.index for r in records] == list(range(27))
    assert frame['max_i_d'].isna().all()
    # the origin is the maximally mixed state
    origin = frame[(frame.alpha == 0) & (frame.beta == 0) & (frame.gamma == 0)].iloc[0]
    assert origin.min_eig == pytest.approx(0.25)
    assert origin.octahedron == pytest.approx(1.0)


def test_csv_output_is_stable(tmp_path):
    frame = records_to_frame(run_scan(_tetra_job()))
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    write_dataset(frame, str(first), 'csv')
    write_dataset(records_to_frame(run_scan(_tetra_job())), str(second), 'csv')
    assert first.read_bytes() == second.read_bytes()
    reread = pd.read_csv(first)
    assert np.array_equal(reread['octahedron'].to_numpy(), frame['octahedron'].to_numpy())


def test_json_output_uses_null(tmp_path):
    frame = records_to_frame([ScanRecord(index=0, params=(0.1, 0.2), min_eig=0.05)])
    path = tmp_path / 'out' / 'points.json'
    write_dataset(frame, str(path), 'json')
    rows = json.loads(path.read_text())
    assert rows[0]['alpha'] == 0.1
    assert rows[0]['gamma'] is None
    assert rows[0]['error'] is None
    with pytest.raises(ScanJobError):
        write_dataset(frame, str(tmp_path / 'points.xml'), 'xml')


def test_metadata_sidecar(tmp_path):
    target = write_metadata(str(tmp_path / 'scan.csv'), {'status': 'ok'})
    assert target == metadata_path(str(tmp_path / 'scan.csv'))
    assert json.loads(open(target).read()) == {'status': 'ok'}


@pytest.mark.slow
def test_parallel_scan_matches_serial():
    job = ScanJob(Family.ISOTROPIC, (ScanAxis('alpha', 0.0, 1.0, 4),), (Task.PPT, Task.CGLMP), optimizer=FAST, d=2)
    serial = records_to_frame(run_scan(job, workers=1))
    parallel = records_to_frame(run_scan(job, workers=2))
    pd.testing.assert_frame_equal(serial, parallel)
