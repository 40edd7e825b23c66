"""Tests for the FastAPI application"""

import pytest
from fastapi.testclient import TestClient

from api.main import app

client = TestClient(app)


def test_health_endpoint():
    """Test health check endpoint"""
    response = client.get("/health")
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "ok"
    assert data["version"] == "1.0.0"
    assert data["fixtures"] > 0


def test_list_fixtures():
    """Test the fixture listing"""
    response = client.get("/fixtures")
    assert response.status_code == 200
    data = response.json()
    names = [info["name"] for info in data["fixtures"]]
    assert "conTwoAdd-I1" in names
    assert data["total"] == len(names)


def test_parse_source():
    """Test parsing inline program text"""
    response = client.post("/parse", json={"source": "let x = 1 in x + 1", "core": True})
    assert response.status_code == 200
    data = response.json()
    assert data["pretty"].strip() == "let x = 1 in x + 1"
    assert "let" not in data["core"]
    assert data["uses_tapes"] is False


def test_parse_requires_one_program():
    """Test that source and fixture are mutually exclusive"""
    response = client.post("/parse", json={"source": "1", "fixture": "twoAdd"})
    assert response.status_code == 422
    response = client.post("/parse", json={})
    assert response.status_code == 422


def test_parse_syntax_error():
    """Test that a syntax error is a bad request"""
    response = client.post("/parse", json={"source": "let x = in 1"})
    assert response.status_code == 400
    assert "line 1" in response.json()["detail"]


def test_exact_fixture():
    """Test the value distribution of a fixture"""
    response = client.post("/exact", json={"fixture": "twoAdd", "horizon": 30})
    assert response.status_code == 200
    data = response.json()
    assert data["residual"]["rational"] == "0/1"
    outcomes = {item["value"]: item["probability"]["rational"] for item in data["distribution"]}
    assert outcomes["0"] == "1/16"
    assert outcomes["3"] == "1/4"


def test_exact_module_without_main():
    """Test that a declarations-only source cannot run"""
    response = client.post("/exact", json={"source": "let f x = x;;", "horizon": 5})
    assert response.status_code == 400


def test_adversary_fixture_defaults():
    """Test that the fixture's predicate and bound are used"""
    response = client.post("/adversary", json={"fixture": "twoAdd", "horizon": 30})
    assert response.status_code == 200
    data = response.json()
    assert data["value"]["rational"] == "1/16"
    assert data["bound"]["rational"] == "1/16"
    assert data["holds"] is True


def test_adversary_bound_violated():
    """Test an explicit predicate and a failing bound"""
    response = client.post(
        "/adversary",
        json={"source": "rand 3", "predicate": "ret > 0", "horizon": 5, "bound": "1/8"}
    )
    assert response.status_code == 200
    data = response.json()
    assert data["value"]["rational"] == "1/4"
    assert data["holds"] is False


def test_adversary_bad_predicate():
    """Test that an invalid predicate is a bad request"""
    response = client.post("/adversary", json={"source": "rand 3", "predicate": "ret >", "horizon": 5})
    assert response.status_code == 400


def test_adversary_unknown_fixture():
    """Test that an unknown fixture is not found"""
    response = client.post("/adversary", json={"fixture": "threeAdd", "horizon": 5})
    assert response.status_code == 404


def test_safety():
    """Test the stuck_half safety bound"""
    response = client.post("/safety", json={"fixture": "stuck_half", "horizon": 5})
    assert response.status_code == 200
    data = response.json()
    assert data["value"]["rational"] == "1/2"
    assert data["holds"] is True


def test_monte_carlo():
    """Test a seeded estimate"""
    payload = {"fixture": "twoAdd", "trials": 20, "seed": 0}
    first = client.post("/mc", json=payload)
    second = client.post("/mc", json=payload)
    assert first.status_code == 200
    assert first.json() == second.json()
    assert first.json()["trials"] == 20


def test_erase_and_check():
    """Test erasure and the erasure comparison"""
    response = client.post("/erase", json={"fixture": "twoincr-I1"})
    assert response.status_code == 200
    assert "alloctape" not in response.json()["erased"]

    response = client.post("/erase", json={"fixture": "twoincr-I1", "check": True})
    assert response.status_code == 200
    data = response.json()
    assert data["passed"] is True
    assert data["comparisons"][0]["equal"] is True


def test_erase_check_without_limits():
    """Test that the comparison without limits is inconclusive"""
    payload = {"fixture": "twoincr-I1", "check": True, "horizon": 2, "limits": False}
    response = client.post("/erase", json=payload)
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "inconclusive"
    assert data["passed"] is None
    assert data["limits"] == []


def test_efp():
    """Test the false-positive recurrence"""
    response = client.post("/efp", json={"size": 2, "hashes": 1, "insertions": 2})
    assert response.status_code == 200
    assert response.json()["value"]["rational"] == "3/4"


def test_efp_counts_keys():
    """Test that insertions are keys and draws are index draws"""
    response = client.post("/efp", json={"size": 8, "hashes": 2, "insertions": 2})
    assert response.status_code == 200
    assert response.json()["value"]["rational"] == "5825/32768"

    response = client.post("/efp", json={"size": 8, "hashes": 2, "draws": 4})
    assert response.json()["value"]["rational"] == "5825/32768"


def test_efp_needs_one_count():
    """Test that exactly one of insertions and draws is accepted"""
    response = client.post("/efp", json={"size": 8, "hashes": 2})
    assert response.status_code == 422
    response = client.post("/efp", json={"size": 8, "hashes": 2, "insertions": 2, "draws": 4})
    assert response.status_code == 422


def test_efp_invalid_request():
    """Test request validation"""
    response = client.post("/efp", json={"size": 0, "hashes": 1, "insertions": 2})
    assert response.status_code == 422


def test_bloom_oracle_guard():
    """Test that a refused enumeration is unprocessable"""
    response = client.post("/bloom-oracle", json={"size": 16, "hashes": 4, "keys": 8})
    assert response.status_code == 422
    assert "exceeds limit" in response.json()["detail"]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
