import pytest
from fastapi.testclient import TestClient

from nfvalloc.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


SMALL_PARAMS = {"n_servers": 4, "n_sfcs": 2, "n_access": 1, "n_transport": 1,
                "vnf_count_range": [1, 2], "link_density": 0.6}


def generate_instance(client, seed=0):
    resp = client.post("/nfv/generate", json={"params": SMALL_PARAMS, "seed": seed})
    assert resp.status_code == 200
    return resp.json()["instance"]


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_generate_deterministic(client):
    a = generate_instance(client, seed=5)
    b = generate_instance(client, seed=5)
    assert a == b


def test_generate_rejects_bad_params(client):
    resp = client.post("/nfv/generate", json={"params": {"nope": 1}})
    assert resp.status_code == 400


def test_solve_all_solvers(client):
    instance = generate_instance(client)
    objectives = {}
    for solver in ("exact", "ara", "hura"):
        resp = client.post("/nfv/solve", json={"instance": instance,
                                               "solver": solver})
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] in ("optimal", "partial")
        assert body["summary"]["feasible"]
        objectives[solver] = body["summary"]["objective"]
    scale = max(1.0, abs(objectives["exact"]))
    assert objectives["ara"] >= objectives["exact"] - 1e-6 * scale
    assert objectives["hura"] >= objectives["ara"] - 1e-6 * scale


def test_solve_rejects_malformed_instance(client):
    resp = client.post("/nfv/solve", json={"instance": {"bogus": True},
                                           "solver": "hura"})
    assert resp.status_code == 400


def test_solve_unknown_solver(client):
    instance = generate_instance(client)
    resp = client.post("/nfv/solve", json={"instance": instance, "solver": "xx"})
    assert resp.status_code == 400


def test_mining_generate_and_solve(client):
    gen = client.post("/mining/generate", json={"params": {"n_miners": 2},
                                                "seed": 3}).json()
    assert len(gen["tasks"]) == 2
    resp = client.post("/mining/solve", json={"tasks": gen["tasks"],
                                              "gamma": gen["gamma"],
                                              "reward": gen["reward"]})
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "optimal"
    for weights in body["f"].values():
        assert sum(weights) == pytest.approx(1.0, abs=1e-9)
    assert body["csv"].splitlines()[0] == "miner,participant,f,energy_share,cost_share"


def test_workflow_roundtrip(client):
    instance = generate_instance(client, seed=2)
    gen = client.post("/mining/generate", json={"params": {"n_miners": 2},
                                                "seed": 2}).json()
    resp = client.post("/workflow/run", json={"instance": instance,
                                              "tasks": gen["tasks"],
                                              "solver": "hura", "seed": 9})
    assert resp.status_code == 200
    body = resp.json()
    assert body["winner"] in ("miner0", "miner1")
    assert body["events_jsonl"].splitlines()
    assert body["ledger_csv"].startswith("entry,party,amount")
    again = client.post("/workflow/run", json={"instance": instance,
                                               "tasks": gen["tasks"],
                                               "solver": "hura", "seed": 9}).json()
    assert again == body


def test_sweep_endpoint(client):
    resp = client.post("/sweep/run", json={
        "kind": "nfv", "params": SMALL_PARAMS, "axis": "n_servers",
        "values": [4, 5], "solvers": ["hura"], "snapshots": 2})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["detail_csv"].strip().splitlines()) == 1 + 4
    assert len(body["aggregate_csv"].strip().splitlines()) == 1 + 2
