import inspect

import pytest
from fastapi.testclient import TestClient

import app as app_module
import settings

STATIC_SHELL = {
    "name": "static",
    "particle": {"rest_mass": 1.0, "charge": 1.0, "sigma": 0.5},
    "initial_state": {"four_velocity": [1.0, 0.0, 0.0, 0.0]},
    "integrator": {"step": 0.05, "s_end": 4.0},
}


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(tmp_path))
    app_module.runs.clear()
    yield TestClient(app_module.app)
    app_module.runs.clear()


def test_root_and_health(client):
    assert client.get("/").json()["status"] == "healthy"
    health = client.get("/health").json()
    assert health["runs"] == 0
    assert health["active_runs"] == 0


def test_config_exposes_the_scenario_schema(client, tmp_path):
    config = client.get("/config").json()
    assert config["output_dir"] == str(tmp_path)
    assert "particle" in config["scenario_schema"]["properties"]


def test_submitted_run_completes(client, free_scenario_data, tmp_path):
    response = client.post("/runs", json={"scenario": free_scenario_data()})
    assert response.status_code == 200
    body = response.json()
    assert body["success"]
    run_id = body["run_id"]
    assert run_id.startswith("free-")

    run = client.get(f"/runs/{run_id}").json()
    assert run["status"] == "completed"
    assert run["summary"]["steps"] == 100
    assert (tmp_path / run_id / "free" / "trajectory.csv").exists()

    listing = client.get("/runs").json()
    assert listing["total"] == 1
    assert listing["runs"][0]["run_id"] == run_id


def test_failed_run_reports_its_exit_code(client, gyration_scenario_data):
    data = gyration_scenario_data(integrator={"drift_tolerance": 1e-18})
    run_id = client.post("/runs", json={"scenario": data}).json()["run_id"]
    run = client.get(f"/runs/{run_id}").json()
    assert run["status"] == "failed"
    assert run["exit_code"] == 4
    assert run["error"].startswith("DriftExceeded")


def test_invalid_scenario_is_unprocessable(client, free_scenario_data):
    response = client.post("/runs", json={"scenario": free_scenario_data(integrator={"step": 0.5})})
    assert response.status_code == 422
    assert "sigma/kappa" in response.json()["detail"]
    assert client.get("/runs").json()["total"] == 0


def test_unknown_run_is_not_found(client):
    assert client.get("/runs/missing").status_code == 404


def test_potential_of_a_static_shell(client):
    points = [[3.0, 1.0, 0.0, 0.0], [3.0, 0.0, 0.0, 0.0], [100.0, 1.0, 0.0, 0.0]]
    response = client.post("/potential", json={"scenario": STATIC_SHELL, "points": points})
    assert response.status_code == 200
    outside, inside, future = response.json()["points"]
    assert outside["potential"] == pytest.approx([1.0, 0.0, 0.0, 0.0], abs=1e-10)
    assert inside["potential"][0] == pytest.approx(2.0, rel=1e-10)
    assert outside["branch"] != inside["branch"]
    assert future["status"] == "RootNotBracketed"
    assert future["potential"] is None
    assert future["branch"] is None


def test_potential_needs_points(client):
    response = client.post("/potential", json={"scenario": STATIC_SHELL, "points": []})
    assert response.status_code == 422


def test_artifact_write_failure_marks_the_run_failed(client, free_scenario_data, tmp_path, monkeypatch):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(blocker))
    run_id = client.post("/runs", json={"scenario": free_scenario_data()}).json()["run_id"]
    run = client.get(f"/runs/{run_id}").json()
    assert run["status"] == "failed"
    assert run["exit_code"] == 5
    assert client.get("/health").json()["active_runs"] == 0


def test_output_directory_cannot_be_chosen_over_http(client, free_scenario_data, tmp_path):
    elsewhere = tmp_path / "elsewhere"
    data = free_scenario_data(outputs={"directory": str(elsewhere)})
    response = client.post("/runs", json={"scenario": data})
    assert response.status_code == 422
    assert "outputs.directory" in response.json()["detail"]
    assert not elsewhere.exists()
    assert client.get("/runs").json()["total"] == 0


def test_steps_planned_counts_from_the_initial_proper_time(client, free_scenario_data):
    data = free_scenario_data(initial_state={"s0": 0.5})
    body = client.post("/runs", json={"scenario": data}).json()
    assert body["details"]["steps_planned"] == pytest.approx(50.0)


def test_potential_endpoint_runs_off_the_event_loop():
    assert not inspect.iscoroutinefunction(app_module.evaluate_potential)
