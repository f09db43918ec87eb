import json
import math

import pytest

from fcqn.errors import ConfigError
from fcqn.services import harness


def _config(tmp_path, **overrides):
    raw = {"seed": 7, "output_dir": str(tmp_path), **overrides}
    return harness.validate_config(raw)


def _fields(exc_info):
    return {error["field"] for error in exc_info.value.errors}


# ===== Config validation =====

def test_validate_yaml_text_fills_defaults():
    config = harness.validate_config("scenario: witness\nseed: 3\n")
    assert config.shots == 10_000
    assert config.topology == "default"
    assert config.format == "csv"


def test_validate_lists_every_problem():
    with pytest.raises(ConfigError) as exc_info:
        harness.validate_config({"scenario": "witness", "shots": -1, "colour": "red"})
    fields = _fields(exc_info)
    assert {"seed", "shots", "colour"} <= fields


def test_validate_rejects_zero_shots_for_sampled_scenarios():
    with pytest.raises(ConfigError):
        harness.validate_config({"scenario": "mdi", "seed": 1, "shots": 0})
    assert harness.validate_config({"scenario": "allocate", "seed": 1, "shots": 0}).shots == 0


def test_validate_reports_channel_shortfall():
    raw = {
        "scenario": "allocate",
        "seed": 1,
        "topology": {"users": ["A", "B", "C", "D"], "channel_pairs": [[35, 33], [36, 32]]},
    }
    with pytest.raises(ConfigError) as exc_info:
        harness.validate_config(raw)
    assert "topology" in _fields(exc_info)
    assert "short by 4" in str(exc_info.value)


def test_validate_checks_noise_length():
    raw = {"scenario": "witness", "seed": 1, "noise": [{"kind": "werner", "strength": 0.9}]}
    with pytest.raises(ConfigError) as exc_info:
        harness.validate_config(raw)
    assert _fields(exc_info) == {"noise"}


def test_validate_checks_hwp_angles():
    raw = {"scenario": "theta_scan", "seed": 1, "theta_scan": {"hwp_angles_deg": [0.0, 40.0]}}
    with pytest.raises(ConfigError) as exc_info:
        harness.validate_config(raw)
    assert "theta_scan.hwp_angles_deg.1" in _fields(exc_info)


def test_validate_rejects_bad_yaml_and_non_mapping():
    with pytest.raises(ConfigError):
        harness.validate_config("scenario: [witness")
    with pytest.raises(ConfigError):
        harness.validate_config("- 1\n- 2\n")


# ===== Scenarios =====

def test_allocate_writes_tables(tmp_path):
    report = harness.run(_config(tmp_path, scenario="allocate"))
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "links.csv").exists()
    alice = next(row for row in report.tables["users"] if row["user"] == "Alice")
    assert set(alice["channels"].split()) == {"i1", "i4", "s6"}
    assert report.summary == {"n_users": 4, "n_links": 6}


def test_custom_topology_allocation(tmp_path):
    pairs = [[34 + j, 34 - j] for j in range(1, 11)]
    users = ["Alice", "Bob", "Chloe", "David", "Erin"]
    report = harness.run(_config(tmp_path, scenario="allocate", topology={"users": users, "channel_pairs": pairs}))
    assert len(report.tables["links"]) == 10


def test_runs_are_byte_identical(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    raw = {"scenario": "witness", "seed": 12, "shots": 2000, "workers": 3}
    harness.run(harness.validate_config({**raw, "output_dir": str(first)}))
    harness.run(harness.validate_config({**raw, "output_dir": str(second)}))
    for name in ("report.json", "witness.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_witness_scenario_certifies_every_link(tmp_path):
    report = harness.run(_config(tmp_path, scenario="witness", shots=10_000))
    rows = report.tables["witness"]
    assert len(rows) == 6
    assert report.summary["all_negative"]
    for row in rows:
        assert row["witness"] == pytest.approx(row["witness_exact"], abs=0.02)
        assert row["coincidence_cps"] > 0


def test_attack_scenario(tmp_path):
    report = harness.run(_config(tmp_path, scenario="attack", shots=10_000))
    for row in report.tables["attack"]:
        assert abs(row["witness_no_attack"]) <= 0.02
        assert abs(row["witness_attack"] + 0.5) <= 0.005
    assert report.summary["all_fooled"]


def test_attack_scenario_accepts_werner_noise_on_product_state(tmp_path):
    noise = [{"kind": "werner", "strength": 0.9}] * 6
    report = harness.run(_config(tmp_path, scenario="attack", shots=2000, noise=noise))
    rows = report.tables["attack"]
    assert len(rows) == 6
    assert all(math.isfinite(row["witness_attack"]) for row in rows)


def test_source_sweep_scenario(tmp_path):
    config = _config(tmp_path, scenario="source_sweep", source={"pump_powers": [0.1, 0.5]})
    report = harness.run(config)
    rows = report.tables["source_sweep"]
    assert len(rows) == 12
    assert all(row["car"] > 20 for row in rows if row["pump_power_mW"] == 0.1)
    assert report.summary["min_car_at_lowest_pump"] > 20
    assert len(report.tables["coincidence_histogram"]) == 6 * 7


def test_tomography_scenario_json_output(tmp_path):
    config = _config(tmp_path, scenario="tomography", shots=5000, format="json", tomography={"fiber": "pre"})
    report = harness.run(config)
    assert report.summary["mean_fidelity"] == pytest.approx(0.90, abs=0.02)
    table = json.loads((tmp_path / "tomography.json").read_text())
    assert "fidelity_mle_display" in table[0]
    assert len(report.tables["density_matrices"]) == 6 * 16


def test_mdi_scenario(tmp_path):
    report = harness.run(_config(tmp_path, scenario="mdi", shots=200_000, workers=2))
    assert report.summary["all_negative"]
    for row in report.tables["mdi"]:
        assert row["I_value"] == pytest.approx(row["I_reported"], abs=0.005)
    assert len(report.tables["mdi_terms"]) == 36


def test_theta_scan_without_calibration(tmp_path):
    config = _config(
        tmp_path,
        scenario="theta_scan",
        shots=200_000,
        theta_scan={"hwp_angles_deg": [0.0, 9.0, 22.5], "calibrate": False},
    )
    report = harness.run(config, write=False)
    rows = report.tables["theta_scan"]
    assert [row["lower_bound_exact"] for row in rows] == pytest.approx([row["lower_bound_ideal"] for row in rows])
    assert rows[-1]["e_tr"] == pytest.approx(0.5, abs=1e-4)
    assert report.summary["monotonic_bound"]
    assert not (tmp_path / "report.json").exists()


def test_five_users_with_six_pairs_is_rejected():
    raw = {
        "scenario": "witness",
        "seed": 1,
        "topology": {"users": ["A", "B", "C", "D", "E"], "channel_pairs": [[34 + j, 34 - j] for j in range(1, 7)]},
    }
    with pytest.raises(ConfigError, match="short by 4"):
        harness.validate_config(raw)


def test_embedded_config_reproduces_tables(tmp_path):
    report = harness.run(_config(tmp_path, scenario="attack", shots=3000), write=False)
    again = harness.run(harness.validate_config(report.config), write=False)
    assert again.tables == report.tables
    assert again.config_hash == report.config_hash
