import numpy as np
import pytest

from bell_geometry.models.cglmp_model import (
    LOCAL_BOUND,
    MeasurementSettings,
    bell_operator,
    cglmp_analytic_max,
    cglmp_coefficients,
    cglmp_value,
    cglmp_value_from_vector,
    chsh_horodecki_max,
    joint_probabilities,
    local_bound_bruteforce,
    local_unitary_bell_operator,
)
from bell_geometry.models.state_model import (
    SimplexCoordinates,
    bell_projector,
    mix_with_noise,
    random_density_matrix,
    simplex_state,
)
from bell_geometry.models.unitary_model import random_reduced_vector
from bell_geometry.utils.errors import (
    DimensionMismatchError,
    InvalidCoordinatesError,
    SizeGuardError,
)


def _random_settings(d, rng):
    return MeasurementSettings.from_vector(random_reduced_vector(d, rng, count=4), d)


def test_analytic_maximum_values():
    assert cglmp_analytic_max(2) == pytest.approx(2 * np.sqrt(2), abs=1e-12)
    assert cglmp_analytic_max(3) == pytest.approx(4 / (6 * np.sqrt(3) - 9), abs=1e-12)
    assert cglmp_analytic_max(100_000) == pytest.approx(2.96981, abs=1e-5)


def test_analytic_maximum_large_d_limit():
    catalan = 0.915965594177219015
    limit = 32 * catalan / np.pi ** 2
    assert limit == pytest.approx(2.96981, abs=1e-5)
    # the gap to the limit closes as 1/d
    gaps = [limit - cglmp_analytic_max(d) for d in (1000, 10_000, 100_000)]
    assert all(gap > 0 for gap in gaps)
    assert gaps[0] > 2e-4
    assert gaps[1] / gaps[0] == pytest.approx(0.1, abs=0.01)
    assert gaps[2] < 1e-5


def test_analytic_maximum_increases_with_d():
    values = [cglmp_analytic_max(d) for d in range(2, 12)]
    assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_local_bound(d):
    assert local_bound_bruteforce(d) == LOCAL_BOUND


def test_local_bound_size_guard():
    with pytest.raises(SizeGuardError):
        local_bound_bruteforce(5)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_coefficients_balance(d):
    # each pair (a, b) carries equal positive and negative weight
    assert np.allclose(cglmp_coefficients(d).sum(axis=2), 0.0)


def test_qubit_coefficients_are_chsh():
    c = cglmp_coefficients(2)
    # rows: delta = 0 (equal outcomes), delta = 1 (different outcomes)
    assert c[0, 0].tolist() == [1.0, -1.0]
    assert c[0, 1].tolist() == [1.0, -1.0]
    assert c[1, 0].tolist() == [-1.0, 1.0]
    assert c[1, 1].tolist() == [1.0, -1.0]


def test_computational_settings_on_maximally_entangled_qubits():
    assert cglmp_value(bell_projector(2, 0, 0), MeasurementSettings.computational(2)) == pytest.approx(2.0)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_maximally_mixed_state_scores_zero(d, rng):
    rho = simplex_state(SimplexCoordinates.uniform(d))
    assert cglmp_value(rho, _random_settings(d, rng)) == pytest.approx(0.0, abs=1e-12)


def test_joint_probabilities_are_distributions(rng):
    d = 3
    table = joint_probabilities(random_density_matrix(9, rng), _random_settings(d, rng))
    assert table.probs.shape == (2, 2, 3, 3)
    assert np.all(table.probs >= -1e-12)
    assert np.allclose(table.probs.sum(axis=(2, 3)), 1.0)


def test_bell_operator_expectation_matches_value(rng):
    d = 3
    settings = _random_settings(d, rng)
    rho = random_density_matrix(9, rng)
    operator = bell_operator(settings)
    assert operator.expectation(rho) == pytest.approx(cglmp_value(rho, settings), abs=1e-10)
    assert operator.max_eigenvalue() >= operator.expectation(rho) - 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_bell_operator_is_traceless(d, rng):
    assert abs(np.trace(bell_operator(_random_settings(d, rng)).matrix.data)) < 1e-10


def test_bell_operator_on_many_states(rng):
    d = 3
    for _ in range(100):
        settings = _random_settings(d, rng)
        rho = random_density_matrix(9, rng)
        assert bell_operator(settings).expectation(rho) == pytest.approx(cglmp_value(rho, settings), abs=1e-10)


@pytest.mark.parametrize("nu", [0.0, 0.3, 0.7, 1.0])
def test_white_noise_scales_the_value(nu, rng):
    d = 3
    settings = _random_settings(d, rng)
    rho = random_density_matrix(9, rng)
    expected = nu * cglmp_value(rho, settings)
    assert cglmp_value(mix_with_noise(rho, nu), settings) == pytest.approx(expected, abs=1e-12)


def test_fast_path_matches_settings_path(rng):
    d = 3
    vector = random_reduced_vector(d, rng, count=4)
    rho = random_density_matrix(9, rng)
    expected = cglmp_value(rho, MeasurementSettings.from_vector(vector, d))
    assert cglmp_value_from_vector(rho.data, vector, d) == pytest.approx(expected, abs=1e-12)


def test_local_unitary_operator_moves_the_expectation(rng):
    d = 3
    operator = bell_operator(_random_settings(d, rng))
    on_p00 = operator.expectation(bell_projector(d, 0, 0))
    moved = local_unitary_bell_operator(operator, 2, 1)
    assert bell_projector(d, 2, 1).expectation(moved.data) == pytest.approx(on_p00, abs=1e-12)


def test_settings_dict_form(rng):
    settings = _random_settings(2, rng)
    restored = MeasurementSettings.from_dict(settings.to_dict())
    assert np.array_equal(restored.to_vector(), settings.to_vector())


def test_settings_errors(rng):
    with pytest.raises(InvalidCoordinatesError):
        MeasurementSettings.from_vector(np.zeros(5), 2)
    with pytest.raises(DimensionMismatchError):
        cglmp_value(bell_projector(3, 0, 0), MeasurementSettings.computational(2))


def test_horodecki_criterion():
    assert chsh_horodecki_max(1, -1, 1) == pytest.approx(2 * np.sqrt(2))
    assert chsh_horodecki_max(0.5, 0.0, -0.2) == pytest.approx(2 * np.sqrt(0.29))
    with pytest.raises(InvalidCoordinatesError):
        chsh_horodecki_max(1.5, 0, 0)


@pytest.mark.slow
def test_qutrit_optimum_reaches_analytic_value(qutrit_optimum):
    assert qutrit_optimum.value == pytest.approx(cglmp_analytic_max(3), abs=1e-6)
    value = cglmp_value(bell_projector(3, 0, 0), qutrit_optimum.settings)
    assert value == pytest.approx(qutrit_optimum.value, abs=1e-12)
    # the optimal operator has a larger eigenvalue on a non-maximally entangled state
    assert bell_operator(qutrit_optimum.settings).max_eigenvalue() > qutrit_optimum.value


@pytest.mark.slow
def test_frozen_settings_reproduce_the_qutrit_optimum(frozen_qutrit_settings):
    operator = bell_operator(frozen_qutrit_settings)
    assert operator.expectation(bell_projector(3, 0, 0)) == pytest.approx(4 / (6 * np.sqrt(3) - 9), abs=1e-6)


@pytest.mark.slow
def test_frozen_settings_bound_every_bell_state(frozen_qutrit_settings):
    operator = bell_operator(frozen_qutrit_settings)
    spectrum = operator.matrix.eigenvalues()
    for k in range(3):
        for l in range(3):
            value = operator.expectation(bell_projector(3, k, l))
            assert spectrum.min() - 1e-12 <= value <= spectrum.max() + 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("k, l", [(1, 0), (2, 0)])
def test_frozen_settings_on_shifted_bell_states(frozen_qutrit_settings, k, l):
    value = bell_operator(frozen_qutrit_settings).expectation(bell_projector(3, k, l))
    expected = -2 / (6 * np.sqrt(3) - 9)
    if value != pytest.approx(expected, abs=1e-6):
        pytest.xfail(f"Tr(B P_{k}{l}) = {value:.6f}, not {expected:.6f}: it depends on which optimal settings were frozen")
