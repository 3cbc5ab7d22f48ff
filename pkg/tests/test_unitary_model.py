import numpy as np
import pytest

from bell_geometry.models.optimizer_model import OptimizerConfig, nelder_mead
from bell_geometry.models.unitary_model import (
    HALF_PI,
    TWO_PI,
    Form,
    GeneratorPair,
    ParamMatrix,
    canonical_vector,
    canonicalize,
    composite_unitary,
    elementary_factor,
    generator_pairs,
    parameter_count,
    random_param_matrix,
    random_reduced_vector,
    stage_product,
    wrap_phase,
)
from bell_geometry.utils.errors import IndexOrderError, ParameterCountError


def _is_unitary(u):
    return np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_composite_unitary_is_unitary(d, rng):
    for _ in range(5):
        lam = rng.uniform(-10.0, 10.0, (d, d))
        assert _is_unitary(composite_unitary(ParamMatrix(d, lam), Form.REDUCED))
        assert _is_unitary(composite_unitary(ParamMatrix(d, lam), Form.FULL))


def test_zero_parameters_give_identity():
    assert np.allclose(composite_unitary(ParamMatrix.zeros(4)), np.eye(4))


def test_parameter_counts():
    assert parameter_count(3, Form.FULL) == 9
    assert parameter_count(3, Form.REDUCED) == 6
    assert parameter_count(5) == 20
    assert len(generator_pairs(4)) == 6


def test_product_of_elementary_factors(rng):
    d = 4
    p = random_param_matrix(d, rng)
    expected = np.eye(d, dtype=complex)
    for pair in generator_pairs(d):
        expected = expected @ elementary_factor(d, pair.m, pair.n, p.lam[pair.m, pair.n], p.lam[pair.n, pair.m])
    assert np.allclose(composite_unitary(p), expected, atol=1e-12)


def test_stage_products_compose_and_fix_leading_levels(rng):
    d = 4
    p = random_param_matrix(d, rng)
    product = np.eye(d, dtype=complex)
    for m in range(d - 1):
        stage = stage_product(p, m)
        assert np.allclose(stage[:m, :], np.eye(d)[:m, :])
        assert np.allclose(stage[:, :m], np.eye(d)[:, :m])
        product = product @ stage
    assert np.allclose(product, composite_unitary(p), atol=1e-12)


def test_full_form_adds_only_column_phases(rng):
    d = 3
    p = random_param_matrix(d, rng)
    phases = np.exp(1j * np.diag(p.lam))
    assert np.allclose(composite_unitary(p, Form.FULL), composite_unitary(p, Form.REDUCED) * phases[np.newaxis, :])


def test_generator_pair_order():
    with pytest.raises(IndexOrderError):
        GeneratorPair(2, 1)
    with pytest.raises(IndexOrderError):
        elementary_factor(3, 1, 3, 0.1, 0.2)
    sigma = GeneratorPair(0, 2).sigma(3)
    assert np.allclose(sigma, sigma.conj().T)


def test_elementary_factor_acts_on_one_plane():
    factor = elementary_factor(4, 1, 3, 0.3, 0.7)
    assert _is_unitary(factor)
    assert factor[0, 0] == 1 and factor[2, 2] == 1
    assert factor[3, 1] == pytest.approx(np.sin(0.3))


def test_vector_layout():
    d = 3
    vector = np.arange(6, dtype=float)
    p = ParamMatrix.from_vector(vector, d)
    assert np.all(np.diag(p.lam) == 0)
    assert np.array_equal(p.to_vector(), vector)
    # row-major off-diagonal order: (0,1) (0,2) (1,0) (1,2) (2,0) (2,1)
    assert p.lam[0, 1] == 0 and p.lam[1, 0] == 2 and p.lam[2, 1] == 5
    with pytest.raises(ParameterCountError):
        ParamMatrix.from_vector(np.zeros(9), d)
    assert ParamMatrix.from_vector(np.zeros(9), d, Form.FULL).lam.shape == (3, 3)


def test_canonical_box(rng):
    d = 3
    p = ParamMatrix(d, rng.uniform(-20.0, 20.0, (d, d)))
    c = canonicalize(p)
    upper = np.triu(np.ones((d, d), dtype=bool), k=1)
    assert np.all((c.lam[upper] >= 0) & (c.lam[upper] <= HALF_PI))
    assert np.all((c.lam[~upper] >= 0) & (c.lam[~upper] < TWO_PI))
    assert np.array_equal(canonicalize(c).lam, c.lam)


def test_canonical_vector_matches_matrix_form(rng):
    d = 4
    vector = rng.uniform(-10.0, 10.0, parameter_count(d))
    expected = canonicalize(ParamMatrix.from_vector(vector, d)).to_vector()
    assert np.allclose(canonical_vector(vector, d), expected)


def test_wrap_phase():
    assert wrap_phase(np.array([-1e-18]))[0] < TWO_PI
    assert wrap_phase(np.array([TWO_PI + 0.5]))[0] == pytest.approx(0.5)


def test_random_reduced_vector_is_canonical(rng):
    d = 3
    vector = random_reduced_vector(d, rng, count=4)
    assert vector.size == 4 * parameter_count(d)
    assert np.allclose(np.concatenate([canonical_vector(v, d) for v in vector.reshape(4, -1)]), vector)


def _projectors(u):
    """Outcome projectors |u_x><u_x|, one per column"""
    return np.einsum('ix,jx->xij', u, u.conj())


def test_fold_past_a_quarter_turn():
    p = ParamMatrix(2, np.array([[0.0, HALF_PI + 0.1], [0.3, 0.0]]))
    c = canonicalize(p)
    assert c.lam[0, 1] == pytest.approx(HALF_PI - 0.1)
    assert c.lam[1, 0] == pytest.approx(0.3 + np.pi)
    assert np.allclose(_projectors(composite_unitary(c)), _projectors(composite_unitary(p)), atol=1e-12)


@pytest.mark.parametrize("theta, folded, shifted", [
    (0.2 + np.pi, 0.2, False),
    (np.pi - 0.2, 0.2, True),
    (-0.2, 0.2, True),
    (HALF_PI, HALF_PI, False),
])
def test_single_rotation_folds(theta, folded, shifted):
    c = canonicalize(ParamMatrix(2, np.array([[0.0, theta], [1.0, 0.0]])))
    assert c.lam[0, 1] == pytest.approx(folded)
    assert c.lam[1, 0] == pytest.approx(1.0 + np.pi if shifted else 1.0)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_canonicalize_preserves_measurement_projectors(d, rng):
    for _ in range(20):
        p = ParamMatrix(d, rng.uniform(-20.0, 20.0, (d, d)))
        before = composite_unitary(p, Form.FULL)
        after = composite_unitary(canonicalize(p), Form.FULL)
        assert np.allclose(_projectors(after), _projectors(before), atol=1e-10)
        # columns differ by signs only
        assert np.allclose(np.abs(np.sum(before.conj() * after, axis=0)), 1.0, atol=1e-10)


@pytest.mark.slow
@pytest.mark.parametrize("d", range(2, 9))
def test_unitarity_and_stage_blocks_at_scale(d, rng):
    for _ in range(1000):
        p = random_param_matrix(d, rng)
        u = composite_unitary(p)
        assert np.max(np.abs(u.conj().T @ u - np.eye(d))) < 1e-12
        for m in range(1, d - 1):
            stage = stage_product(p, m)
            assert np.max(np.abs(stage[:m, m:])) < 1e-12
            assert np.max(np.abs(stage[m:, :m])) < 1e-12


def _random_basis(d, rng):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q


@pytest.mark.slow
@pytest.mark.parametrize("d", [2, 3])
def test_reduced_form_reaches_any_measurement_basis(d, rng):
    cfg = OptimizerConfig(max_iterations=20000, f_tolerance=1e-14, x_tolerance=1e-10)
    target = _random_basis(d, rng)

    def overlap_deficit(x):
        u = composite_unitary(ParamMatrix.from_vector(x, d))
        return d - float(np.sum(np.abs(np.sum(target.conj() * u, axis=0)) ** 2))

    best = min(
        nelder_mead(overlap_deficit, random_reduced_vector(d, rng), cfg)[1]
        for _ in range(10)
    )
    assert best == pytest.approx(0.0, abs=1e-6)
