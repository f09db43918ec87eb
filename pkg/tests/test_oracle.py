import math
import time

import numpy as np
import pytest

from fcqn.certify import mdi_witness, witness_trace_norm
from fcqn.errors import DimensionError, MeasurementError, ParameterError
from fcqn.measure import tomography_counts
from fcqn.oracle import (
    TomographyInput,
    _repair_ppt,
    closest_separable_product_mixture,
    e_tr_theta_curve,
    linear_inversion,
    mle_tomography,
    trace_distance_entanglement,
)
from fcqn.qcore import (
    POLARIZATION_LABELS,
    fidelity_pure,
    min_partial_transpose_eigenvalue,
    projector,
    random_density_matrix,
    random_separable_state,
)
from fcqn.schemas import NoiseSpec
from fcqn.states import phi_plus, werner


def test_e_tr_of_phi_plus_and_werner():
    assert trace_distance_entanglement(phi_plus().density()).distance == pytest.approx(0.5, abs=1e-4)
    result = trace_distance_entanglement(werner(0.8))
    assert result.distance == pytest.approx(0.3, abs=1e-4)
    assert result.converged
    assert min_partial_transpose_eigenvalue(result.sigma_opt) >= -1e-6


def test_e_tr_rejects_tight_tolerance():
    with pytest.raises(ParameterError):
        trace_distance_entanglement(phi_plus().density(), tol=1e-8)


def test_mdi_bound_never_exceeds_e_tr():
    rng = np.random.default_rng(77)
    for _ in range(200):
        rho = random_density_matrix(rng, rank=int(rng.integers(1, 5)))
        bound = -mdi_witness(rho).I_value / 4
        assert trace_distance_entanglement(rho).distance >= bound - 1e-4


def test_separable_states_have_zero_e_tr():
    rng = np.random.default_rng(8)
    for _ in range(100):
        assert trace_distance_entanglement(random_separable_state(rng)).distance <= 1e-4


def test_product_mixture_agrees_with_ppt_program():
    rng = np.random.default_rng(19)
    started = time.perf_counter()
    for k in range(20):
        rho = random_density_matrix(rng, rank=2)
        ppt = trace_distance_entanglement(rho).distance
        mixture = closest_separable_product_mixture(rho, seed=k, workers=4)
        assert mixture.method == "product_mixture"
        assert mixture.distance >= ppt - 1e-4
        assert abs(mixture.distance - ppt) <= 1e-3
    assert time.perf_counter() - started < 240


def test_product_mixture_rejects_empty_search():
    with pytest.raises(ParameterError):
        closest_separable_product_mixture(phi_plus().density(), n_terms=0)


def test_e_tr_theta_curve_matches_pure_state_value():
    thetas = [0.0, math.pi / 8, math.pi / 4]
    values = e_tr_theta_curve(thetas)
    for theta, value in zip(thetas, values):
        assert value == pytest.approx(math.sin(2 * theta) / 2, abs=1e-4)
    noisy = e_tr_theta_curve([math.pi / 4], noise=NoiseSpec(kind="werner", strength=0.9))
    assert noisy[0] == pytest.approx(0.4, abs=1e-4)
    with pytest.raises(ParameterError):
        e_tr_theta_curve(thetas, phases=[0.0])


def test_mle_on_exact_data_recovers_state():
    target = phi_plus(POLARIZATION_LABELS)
    estimate = mle_tomography(TomographyInput.from_state(target.density(), shots=1e6))
    assert fidelity_pure(estimate, target) >= 1 - 1e-6


def test_linear_inversion_on_exact_data():
    rho = werner(0.7, POLARIZATION_LABELS)
    assert np.allclose(linear_inversion(TomographyInput.from_state(rho)), rho.matrix)


def test_mle_mean_fidelity_of_werner_state():
    rho = werner(0.90, POLARIZATION_LABELS)
    target = phi_plus(POLARIZATION_LABELS)
    fidelities = [fidelity_pure(mle_tomography(tomography_counts(rho, 10_000, seed)), target) for seed in range(20)]
    assert np.mean(fidelities) == pytest.approx(0.90, abs=0.01)


def test_tomography_input_validation():
    with pytest.raises(DimensionError):
        TomographyInput(np.zeros((4, 4)))
    with pytest.raises(MeasurementError):
        TomographyInput(-np.ones((6, 6)))
    with pytest.raises(MeasurementError):
        mle_tomography(TomographyInput(np.zeros((6, 6))))


def test_tomography_frequencies():
    data = TomographyInput.from_mapping({"HH": 30, "HV": 10, "VH": 10, "VV": 50})
    assert data.frequency("H", "H") == pytest.approx(0.3)
    assert data.frequency("+", "+") == 0.0


def test_werner_states_at_or_below_half_fidelity_are_separable():
    for fidelity in (0.25, 0.4, 0.5):
        assert trace_distance_entanglement(werner(fidelity)).distance <= 1e-4


def test_ppt_sigma_stays_inside_the_ppt_set():
    rng = np.random.default_rng(23)
    for _ in range(20):
        result = trace_distance_entanglement(random_density_matrix(rng, rank=2))
        assert min_partial_transpose_eigenvalue(result.sigma_opt) >= -1e-7
        assert result.distance >= 0


def test_witness_change_is_bounded_by_e_tr():
    rng = np.random.default_rng(29)
    norm = witness_trace_norm()
    for _ in range(200):
        rho = random_density_matrix(rng, rank=int(rng.integers(1, 5)))
        result = trace_distance_entanglement(rho)
        gap = abs(mdi_witness(rho).I_value - mdi_witness(result.sigma_opt).I_value)
        assert 2 * norm * result.distance >= gap - 1e-3


def test_product_mixture_on_basis_state_with_one_term():
    result = closest_separable_product_mixture(projector("ee"), n_terms=1, restarts=4)
    assert result.distance <= 1e-5
    assert len(result.components) == 1


def test_product_mixture_distance_does_not_grow_with_terms():
    rho = phi_plus().density()
    distances = [closest_separable_product_mixture(rho, n_terms=n, restarts=8, seed=3).distance for n in (1, 2, 4, 8)]
    assert distances[0] == pytest.approx(1 / math.sqrt(2), abs=1e-3)
    assert all(b <= a + 1e-4 for a, b in zip(distances, distances[1:]))
    assert distances[-1] == pytest.approx(0.5, abs=1e-3)


def test_product_mixture_weights_form_a_distribution():
    result = closest_separable_product_mixture(werner(0.8), n_terms=6, restarts=4, seed=1)
    assert sum(result.weights) == pytest.approx(1.0)
    assert min(result.weights) >= 0
    assert result.iterations > 0


def test_sigma_repair_lifts_partial_transpose():
    sigma = werner(0.5001).matrix
    assert min_partial_transpose_eigenvalue(sigma) < -1e-7
    repaired = _repair_ppt(sigma)
    assert min_partial_transpose_eigenvalue(repaired) >= -1e-12
    assert np.isclose(np.trace(repaired).real, 1.0)
    assert np.abs(repaired - sigma).max() < 1e-3
    assert np.allclose(_repair_ppt(werner(0.4).matrix), werner(0.4).matrix)
