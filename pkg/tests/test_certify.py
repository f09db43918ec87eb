import math

import numpy as np
import pytest

from fcqn.certify import (
    WITNESS_TRACE_NORM,
    correlators_from_counts,
    mdi_decomposition,
    mdi_lower_bound,
    mdi_probability,
    mdi_witness,
    mdi_witness_from_bsm,
    witness_expectation,
    witness_from_counts,
    witness_operator,
    witness_operator_pauli,
    witness_trace_norm,
)
from fcqn.errors import MeasurementError
from fcqn.measure import bsm_joint_probabilities, correlation_counts, umzi_convert
from fcqn.qcore import TIME_BIN_LABELS, PureState, projector, random_density_matrix, random_separable_state
from fcqn.schemas import AttackSpec
from fcqn.services.calibration import werner_for_mdi_value
from fcqn.states import apply_noise, phi_plus, phi_theta

LINK_VALUES = (-0.111, -0.103, -0.097, -0.122, -0.102, -0.113)
SCAN_THETAS = (0.0, math.pi / 20, math.pi / 10, 3 * math.pi / 20, math.pi / 5, math.pi / 4)


def test_witness_exact_anchors():
    assert abs(witness_expectation(phi_plus().density()) + 0.5) <= 1e-12
    ee = PureState(np.array([1, 0, 0, 0], dtype=complex), TIME_BIN_LABELS)
    assert abs(witness_expectation(ee.density())) <= 1e-12


def test_witness_pauli_form_and_decomposition_agree():
    assert np.allclose(witness_operator(), witness_operator_pauli())
    assert np.allclose(mdi_decomposition().reconstruct(), witness_operator())
    assert np.isclose(witness_trace_norm(), WITNESS_TRACE_NORM)


def test_decomposition_is_read_only():
    deco = mdi_decomposition()
    assert len(deco.terms()) == 6
    with pytest.raises(ValueError):
        deco.beta[0, 0] = 1.0


def test_mdi_value_is_quarter_of_witness_on_random_states():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        rho = random_density_matrix(rng)
        worst = max(worst, abs(mdi_witness(rho).I_value - witness_expectation(rho) / 4))
    assert worst <= 1e-10


def test_bsm_success_probability_matches_mdi_probability():
    rho = random_density_matrix(np.random.default_rng(6))
    for s, t in (("H", "V"), ("+", "-"), ("L", "R")):
        table = bsm_joint_probabilities(rho, projector(s), projector(t))
        assert abs(table[0, 0] - mdi_probability(rho, projector(s), projector(t))) <= 1e-12


def test_witness_from_counts_requires_all_settings():
    counts = correlation_counts(umzi_convert(phi_plus().density())[0], 100, seed=0)
    del counts["LR"]
    with pytest.raises(MeasurementError, match="LR"):
        witness_from_counts(counts)


def test_witness_from_counts_on_phi_plus():
    counts = correlation_counts(umzi_convert(phi_plus().density())[0], 10_000, seed=1)
    value, err = witness_from_counts(counts)
    assert value == -0.5
    assert err == 0.0
    assert correlators_from_counts(counts) == {"XX": 1.0, "YY": -1.0, "ZZ": 1.0}


def test_delay_attack_fools_witness_with_product_state():
    pol, _ = umzi_convert(phi_theta(0).density())
    honest, _ = witness_from_counts(correlation_counts(pol, 10_000, seed=31))
    attacked, _ = witness_from_counts(correlation_counts(pol, 10_000, seed=31, attack=AttackSpec()))
    assert abs(honest) <= 0.02
    assert abs(attacked + 0.5) <= 0.005


def test_mdi_pipeline_recovers_link_values():
    for k, target in enumerate(LINK_VALUES):
        rho = apply_noise(phi_plus().density(), werner_for_mdi_value(target))
        assert abs(mdi_witness(rho).I_value - target) <= 1e-12
        result = mdi_witness_from_bsm(rho, 1_000_000, seed=40 + k)
        assert abs(result.I_value - target) <= 0.003
        assert result.significance() > 10


def test_mdi_pipeline_rejects_zero_shots():
    with pytest.raises(MeasurementError):
        mdi_witness_from_bsm(phi_plus().density(), 0, seed=0)


def test_input_infidelity_weakens_the_witness():
    rho = phi_plus().density()
    clean = mdi_witness_from_bsm(rho, 200_000, seed=9)
    noisy = mdi_witness_from_bsm(rho, 200_000, seed=9, input_infidelity=0.2)
    assert noisy.I_value > clean.I_value


def test_theta_scan_ideal_curves():
    values = []
    for theta in SCAN_THETAS:
        result = mdi_witness(phi_theta(theta).density())
        assert abs(result.I_value + math.sin(2 * theta) / 8) <= 1e-12
        assert abs(result.lower_bound - math.sin(2 * theta) / 32) <= 1e-12
        values.append(result.lower_bound)
    assert values[-1] == pytest.approx(0.03125, abs=1e-12)
    assert values[-1] > 0.0269
    assert all(b > a for a, b in zip(values, values[1:]))


def test_lower_bound_is_clipped_at_zero():
    assert mdi_lower_bound(0.05) == 0.0
    assert mdi_lower_bound(-0.125) == 0.03125


def test_mdi_value_is_nonnegative_on_separable_states():
    rng = np.random.default_rng(61)
    for _ in range(500):
        sigma = random_separable_state(rng, n_terms=int(rng.integers(1, 6)))
        assert mdi_witness(sigma).I_value >= -1e-10
