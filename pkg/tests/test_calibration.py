import math

import numpy as np
import pytest

from fcqn.certify import mdi_witness, mdi_witness_from_bsm
from fcqn.errors import ParameterError
from fcqn.oracle import trace_distance_entanglement
from fcqn.qcore import fidelity_pure
from fcqn.services import reference
from fcqn.services.calibration import (
    calibrate_theta_point,
    dephasing_for_fidelity,
    werner_for_fidelity,
    werner_for_mdi_value,
)
from fcqn.states import apply_noise, phi_plus, time_bin_pair


def test_werner_for_mdi_value():
    spec = werner_for_mdi_value(-0.111)
    assert spec.kind == "werner"
    assert spec.strength == pytest.approx(0.944)
    rho = apply_noise(phi_plus().density(), spec)
    assert mdi_witness(rho).I_value == pytest.approx(-0.111, abs=1e-12)
    with pytest.raises(ParameterError):
        werner_for_mdi_value(-0.2)


def test_werner_for_fidelity_is_identity_on_target():
    assert werner_for_fidelity(0.84).strength == 0.84


def test_dephasing_for_fidelity():
    rho = phi_plus().density()
    spec = dephasing_for_fidelity(rho, 0.9)
    assert spec.kind == "dephasing"
    assert fidelity_pure(apply_noise(rho, spec), phi_plus()) == pytest.approx(0.9, abs=1e-9)
    assert dephasing_for_fidelity(rho, 1.0).strength == 0.0
    with pytest.raises(ParameterError):
        dephasing_for_fidelity(rho, 0.3)


def test_reference_tables_are_complete():
    assert reference.link_labels() == ["AB", "AC", "AD", "BC", "BD", "CD"]
    assert len(reference.theta_table()) == 6
    assert set(reference.mdi_targets()) == set(reference.link_fidelities("pre"))
    post = reference.link_fidelities("post")
    assert sum(post.values()) / len(post) == pytest.approx(0.84, abs=0.01)


def test_calibrated_theta_scan_reproduces_reported_rows():
    for k, row in enumerate(reference.theta_table()):
        cal = calibrate_theta_point(row["theta"], row["lower_bound"], row["e_tr"])
        rho = cal.state()
        sampled = mdi_witness_from_bsm(rho, 1_000_000, seed=500 + k)
        assert abs(sampled.lower_bound - row["lower_bound"]) <= 0.005
        assert abs(trace_distance_entanglement(rho).distance - row["e_tr"]) <= 0.02
        assert 0.0 <= cal.visibility <= 1.0
        assert 0.0 <= cal.phase <= math.pi


def test_theta_calibration_noise_carries_the_visibility():
    row = reference.theta_table()[3]
    cal = calibrate_theta_point(row["theta"], row["lower_bound"], row["e_tr"])
    assert cal.noise.strength == pytest.approx((3 * cal.visibility + 1) / 4)
    pure = time_bin_pair(cal.theta, cal.phase).density().matrix
    expected = cal.visibility * pure + (1 - cal.visibility) * np.eye(4) / 4
    assert np.allclose(cal.state().matrix, expected, atol=1e-12)
