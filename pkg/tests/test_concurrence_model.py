import numpy as np
import pytest

from bell_geometry.models.concurrence_model import (
    _sqrt_psd,
    linear_entropy,
    m_concurrence_line_analytic,
    m_concurrence_lower_bound,
    m_concurrence_pure,
    raw_lower_bound,
    reduced_linear_entropy,
    sigma_pair_operators,
)
from bell_geometry.models.optimizer_model import OptimizerConfig, maximize_bell, violation_boundary_nu
from bell_geometry.models.state_model import (
    Family,
    SimplexCoordinates,
    bell_projector,
    family_state,
    maximally_entangled_vector,
    mix_with_noise,
    random_density_matrix,
    random_pure_state,
    random_separable_state,
    simplex_state,
)
from bell_geometry.utils.errors import DimensionMismatchError, NormalizationError, NumericalDegeneracyError

CHEAP = OptimizerConfig(restarts=2, max_iterations=300, seed=1)


def test_sigma_pair_operators():
    operators = sigma_pair_operators(3)
    assert len(operators) == 9
    for op in operators:
        assert op.dtype == float
        assert np.allclose(op, op.T)


def test_pure_state_values():
    assert m_concurrence_pure(maximally_entangled_vector(3)) == pytest.approx(4 / 3)
    product = np.kron([1.0, 0.0, 0.0], [0.0, 0.6, 0.8])
    assert m_concurrence_pure(product) == pytest.approx(0.0, abs=1e-15)


def test_pure_state_value_follows_the_reduced_purity(rng):
    for _ in range(5):
        psi = random_pure_state(9, rng)
        assert m_concurrence_pure(psi) == pytest.approx(4 / 3 * reduced_linear_entropy(psi), abs=1e-12)


def test_pure_state_errors():
    with pytest.raises(NormalizationError):
        m_concurrence_pure(np.ones(4))
    with pytest.raises(DimensionMismatchError):
        m_concurrence_pure(np.ones(5) / np.sqrt(5))


def test_linear_entropy_limits():
    assert linear_entropy(simplex_state(SimplexCoordinates.uniform(2))) == pytest.approx(1.0)
    assert linear_entropy(bell_projector(3, 1, 1)) == pytest.approx(0.0, abs=1e-12)
    assert reduced_linear_entropy(maximally_entangled_vector(4)) == pytest.approx(1.0)


def test_raw_bound_is_tight_on_pure_states(rng):
    psi = random_pure_state(9, rng)
    rho = np.outer(psi, psi.conj())
    assert raw_lower_bound(rho, 3) == pytest.approx(m_concurrence_pure(psi), abs=1e-6)


def test_maximally_mixed_state_has_zero_bound():
    assert raw_lower_bound(np.eye(9) / 9, 3) == 0.0


def test_qubit_bound_is_the_squared_concurrence():
    # isotropic qubit states have concurrence max(0, (3 alpha - 1) / 2)
    rho = family_state(Family.ISOTROPIC, [0.8], 2)
    assert raw_lower_bound(rho.data, 2) == pytest.approx(0.49, abs=1e-10)
    result = m_concurrence_lower_bound(rho, 2, CHEAP)
    assert result.lower_bound == pytest.approx(0.49, abs=1e-9)


def test_optimized_bound_never_drops_below_the_input_basis(rng):
    rho = random_density_matrix(4, rng, rank=2)
    result = m_concurrence_lower_bound(rho, 2, CHEAP)
    assert result.lower_bound >= result.raw_bound
    assert set(result.to_dict()['settings']) == {'U_A', 'U_B'}


def test_lower_bound_on_maximally_entangled_qutrits():
    result = m_concurrence_lower_bound(bell_projector(3, 0, 0), 3, OptimizerConfig(restarts=1, max_iterations=100))
    assert result.lower_bound == pytest.approx(4 / 3, abs=1e-6)


def test_lower_bound_dimension_check():
    with pytest.raises(DimensionMismatchError):
        m_concurrence_lower_bound(bell_projector(2, 0, 0), 3, CHEAP)


def test_square_root_rejects_negative_spectra():
    with pytest.raises(NumericalDegeneracyError):
        _sqrt_psd(np.diag([0.5, -0.5]))
    root = _sqrt_psd(np.diag([0.25, 0.0]))
    assert np.allclose(root, np.diag([0.5, 0.0]))


@pytest.mark.parametrize("alpha, beta, expected", [
    (1.0, 0.0, 4 / 3),
    (0.0, 0.0, 0.0),
    (0.0, 1.0, 2 / 3),
    (0.25, 0.0, 0.0),
    (0.5, 0.2, (4 - 0.2 - 2) ** 2 / 27),
])
def test_line_closed_form(alpha, beta, expected):
    assert m_concurrence_line_analytic(alpha, beta) == pytest.approx(expected)


@pytest.mark.slow
@pytest.mark.parametrize("alpha, beta", [(0.0, 1.0), (0.6, 0.2), (0.3, 0.5)])
def test_line_bound_matches_closed_form(alpha, beta):
    cfg = OptimizerConfig(restarts=4, max_iterations=20000, f_tolerance=1e-12, x_tolerance=1e-9, seed=2)
    rho = family_state(Family.LINE, (alpha, beta / 2, beta / 2))
    result = m_concurrence_lower_bound(rho, 3, cfg)
    assert result.lower_bound == pytest.approx(m_concurrence_line_analytic(alpha, beta), abs=1e-4)


def test_separable_mixtures_have_zero_bound(rng):
    for _ in range(5):
        result = m_concurrence_lower_bound(random_separable_state(3, rng), 3, CHEAP)
        assert result.lower_bound == pytest.approx(0.0, abs=1e-8)


@pytest.mark.slow
def test_separable_mixtures_have_zero_bound_at_scale(rng):
    cfg = OptimizerConfig(restarts=3, max_iterations=2000, seed=6)
    for _ in range(100):
        assert m_concurrence_lower_bound(random_separable_state(3, rng), 3, cfg).lower_bound == pytest.approx(0.0, abs=1e-8)


@pytest.mark.slow
def test_concurrence_varies_along_the_cglmp_boundary():
    cfg = OptimizerConfig(restarts=8, max_iterations=20000, f_tolerance=1e-12, x_tolerance=1e-9, seed=4)
    values = []
    # equal-weight line states rho_line(alpha, beta/2, beta/2) on the face alpha + beta = 1
    for alpha, beta in [(1.0, 0.0), (0.5, 0.5)]:
        tau = family_state(Family.LINE, (alpha, beta / 2, beta / 2))
        nu = violation_boundary_nu(tau, 3, cfg)
        assert maximize_bell(mix_with_noise(tau, nu), 3, cfg).value == pytest.approx(2.0, abs=1e-4)
        values.append(m_concurrence_line_analytic(nu * alpha, nu * beta))
    assert abs(values[0] - values[1]) > 0.05
