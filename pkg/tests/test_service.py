import pytest
from fastapi.testclient import TestClient

from cellheal.service.app import app
from cellheal.service.models import (
    RandomScenarioRequest,
    SolveRequest,
    report_to_response,
)
from cellheal.orchestrator import run
from cellheal.scenario import generate_random_scenario


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def _scenario_payload(seed=0, users=5, **kw):
    sc = generate_random_scenario(seed, users, **kw)
    return sc.doc.model_dump(mode="json")


def test_health(client):
    reply = client.get("/health")
    assert reply.status_code == 200
    body = reply.json()
    assert body["status"] == "ok"
    assert body["version"]


def test_solve_roundtrip(client):
    payload = {"scenario": _scenario_payload(1, 6, load_range=(45, 50))}
    reply = client.post("/solve", json=payload)
    assert reply.status_code == 200
    body = reply.json()
    assert body["feasible"] is True
    assert len(body["associations"]) == 6 * 2  # users x blocks
    assert body["total_energy_j"] == pytest.approx(
        body["dbs_energy_j"] + body["gbs_energy_j"])
    # wire response matches the in-process report
    sc = generate_random_scenario(1, 6, load_range=(45, 50))
    report = run(sc)
    local = report_to_response(report)
    assert body["total_energy_j"] == pytest.approx(local.total_energy_j)


def test_solve_rejects_malformed_scenario(client):
    payload = {"scenario": {"users": []}}
    reply = client.post("/solve", json=payload)
    assert reply.status_code == 422  # fails schema validation


def test_solve_rejects_semantic_violation(client):
    doc = _scenario_payload(2, 5)
    doc["big_q"] = 1.0  # breaks the activity-linking invariant
    reply = client.post("/solve", json={"scenario": doc})
    assert reply.status_code in (400, 422)


def test_random_scenario_deterministic(client):
    req = RandomScenarioRequest(seed=7, num_users=4).model_dump(mode="json")
    a = client.post("/scenarios/random", json=req)
    b = client.post("/scenarios/random", json=req)
    assert a.status_code == b.status_code == 200
    assert a.json() == b.json()


def test_oracle_endpoint(client):
    from cellheal.scenario import generate_tiny_scenario
    doc = generate_tiny_scenario(3).doc.model_dump(mode="json")
    reply = client.post("/oracle", json={"scenario": doc})
    assert reply.status_code == 200
    body = reply.json()
    assert body["oracle_energy_j"] > 0
    assert body["engine_energy_j"] >= body["oracle_energy_j"] - 1e-6
    assert body["enumerated"] > 0


def test_oracle_rejects_large_instance(client):
    doc = _scenario_payload(3, 8)
    reply = client.post("/oracle", json={"scenario": doc})
    assert reply.status_code == 400


def test_sweep_endpoint(client):
    req = {"user_counts": [2, 3], "trials": 2, "base_seed": 5}
    reply = client.post("/sweep", json=req)
    assert reply.status_code == 200
    rows = reply.json()["rows"]
    assert [r["num_users"] for r in rows] == [2, 3]
    assert all(r["trials"] == 2 for r in rows)


def test_solve_request_model_rejects_unknown_fields():
    with pytest.raises(Exception):
        SolveRequest.model_validate(
            {"scenario": _scenario_payload(), "bogus": 1})
