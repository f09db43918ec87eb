from fastapi.testclient import TestClient

from fcqn.main import app

client = TestClient(app)


# ===== Basic Health Check =====

def test_health_check():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


# ===== Network Tests =====

def test_default_allocation():
    response = client.get("/network/allocation")
    assert response.status_code == 200
    body = response.json()
    assert body["users"] == ["Alice", "Bob", "Chloe", "David"]
    assert body["user_channels"]["Alice"] == ["i1", "i4", "s6"]
    assert body["link_map"]["1"] == ["David", "Alice"]


def test_build_fcqn():
    payload = {"users": ["A", "B", "C"], "channel_pairs": [["C35", "C33"], ["C36", "C32"], ["C37", "C31"]]}
    response = client.post("/network/fcqn", json=payload)
    assert response.status_code == 200
    assert response.json()["link_map"]["3"] == ["B", "C"]


def test_build_fcqn_shortfall():
    payload = {"users": ["A", "B", "C"], "channel_pairs": [["C35", "C33"]]}
    response = client.post("/network/fcqn", json=payload)
    assert response.status_code == 400
    assert "short by 2" in response.json()["detail"]


# ===== Scenario Tests =====

def test_validate_json_config():
    response = client.post("/scenarios/validate", json={"scenario": "attack", "seed": 4})
    assert response.status_code == 200
    assert response.json()["shots"] == 10000


def test_validate_yaml_config():
    response = client.post("/scenarios/validate", json="scenario: allocate\nseed: 2\n")
    assert response.status_code == 200
    assert response.json()["scenario"] == "allocate"


def test_validate_invalid_config():
    response = client.post("/scenarios/validate", json={"scenario": "teleport", "seed": 4})
    assert response.status_code == 422
    assert response.json()["detail"][0]["field"] == "scenario"


def test_run_allocate():
    response = client.post("/scenarios/run", json={"scenario": "allocate", "seed": 0})
    assert response.status_code == 200
    body = response.json()
    assert body["scenario"] == "allocate"
    assert len(body["tables"]["links"]) == 6
    assert len(body["config_hash"]) == 64


def test_run_attack():
    response = client.post("/scenarios/run", json={"scenario": "attack", "seed": 5, "shots": 5000})
    assert response.status_code == 200
    rows = response.json()["tables"]["attack"]
    assert all(row["witness_attack"] < -0.45 for row in rows)


# ===== Ledger Tests =====

def test_list_runs():
    response = client.get("/runs")
    assert response.status_code == 200
    assert isinstance(response.json(), list)
