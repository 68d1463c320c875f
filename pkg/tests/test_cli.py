import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from cellheal.cli import ServiceClient, main
from cellheal.reports import read_csv
from cellheal.service.app import app


@pytest.fixture
def runner():
    return CliRunner()


def test_run_with_bundled_scenario(runner, tmp_path):
    result = runner.invoke(main, ["run", "--scenario",
                                  "scenarios/table1_default.yaml",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "feasible=True" in result.output
    for name in ("associations.csv", "energy.csv", "trace.csv"):
        assert (tmp_path / name).exists()
    rows = read_csv(tmp_path / "associations.csv")
    assert len(rows) == 10 * 2  # ten users, two blocks
    assert all(float(r["rate_bps_hz"]) >= 2.0 for r in rows)


def test_run_requires_scenario_or_seed(runner):
    result = runner.invoke(main, ["run"])
    assert result.exit_code == 2


def test_run_rejects_zero_max_iters(runner):
    result = runner.invoke(main, ["run", "--seed", "1", "--max-iters", "0"])
    assert result.exit_code == 2


def test_run_missing_file_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["run", "--scenario",
                                  str(tmp_path / "nope.yaml")])
    assert result.exit_code == 2


def test_run_empty_user_scenario_succeeds(runner, tmp_path):
    import yaml
    from cellheal.scenario import generate_random_scenario
    raw = generate_random_scenario(0, 3).doc.model_dump(mode="json")
    raw["users"] = []
    path = tmp_path / "empty.yaml"
    path.write_text(yaml.safe_dump(raw))
    result = runner.invoke(main, ["run", "--scenario", str(path),
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "total_energy_j=0.0" in result.output


def test_run_seeded_outputs_are_byte_identical(runner, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        result = runner.invoke(main, ["run", "--seed", "9", "--users", "6",
                                      "--out", str(out)])
        assert result.exit_code == 0
    for name in ("associations.csv", "energy.csv", "trace.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_infeasible_run_exits_1(runner, tmp_path):
    import yaml
    from cellheal.scenario import generate_random_scenario
    raw = generate_random_scenario(0, 3).doc.model_dump(mode="json")
    # ground stations full, drones too high to ever reach the threshold
    for u in raw["users"]:
        u["rate_threshold_bps_hz"] = 9.5
    for d in raw["dbs"]:
        d["altitude_m"] = 50000.0
    for g in raw["gbs"]:
        g["own_user_load"] = [50, 50]
    path = tmp_path / "hopeless.yaml"
    path.write_text(yaml.safe_dump(raw))
    result = runner.invoke(main, ["run", "--scenario", str(path),
                                  "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "no feasible healing plan" in result.output


def test_sweep_command(runner, tmp_path):
    out = tmp_path / "sweep.csv"
    result = runner.invoke(main, ["sweep", "--users", "2,3", "--trials", "2",
                                  "--seed", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = read_csv(out)
    assert [r["num_users"] for r in rows] == ["2", "3"]


def test_sweep_unloaded_stations_never_fly_drones(runner, tmp_path):
    # spare ground capacity everywhere: conventional healing, zero drone energy
    out = tmp_path / "sweep.csv"
    result = runner.invoke(main, ["sweep", "--users", "4,6,8", "--trials", "3",
                                  "--seed", "0", "--load-low", "0",
                                  "--load-high", "0", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = read_csv(out)
    assert all(float(r["mean_dbs_energy_j"]) == 0.0 for r in rows)
    assert all(float(r["mean_active_drones"]) == 0.0 for r in rows)


def test_sweep_deterministic(runner, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        result = runner.invoke(main, ["sweep", "--users", "2,3", "--trials", "2",
                                      "--seed", "4", "--out", str(out)])
        assert result.exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_oracle_command(runner):
    result = runner.invoke(main, ["oracle", "--seed", "1"])
    assert result.exit_code == 0, result.output
    assert "oracle_energy_j=" in result.output
    assert "ratio=" in result.output


def test_generate_command(runner, tmp_path):
    out = tmp_path / "sc.yaml"
    result = runner.invoke(main, ["generate", "--seed", "5", "--users", "4",
                                  "--out", str(out)])
    assert result.exit_code == 0
    from cellheal.scenario import load_scenario
    sc = load_scenario(out)
    assert sc.num_users == 4


def test_remote_mode_through_asgi_transport(runner, tmp_path, monkeypatch):
    """--server mode speaks HTTP; route it into the app without a socket."""
    def fake_client(server, http_client=None):
        return ServiceClient(server=None, http_client=TestClient(app))
    monkeypatch.setattr("cellheal.cli.ServiceClient", fake_client)
    result = runner.invoke(main, ["run", "--seed", "2", "--users", "4",
                                  "--server", "http://example.invalid",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "associations.csv").exists()


def test_local_and_remote_outputs_match(runner, tmp_path, monkeypatch):
    local_dir, remote_dir = tmp_path / "local", tmp_path / "remote"
    result = runner.invoke(main, ["run", "--seed", "11", "--users", "5",
                                  "--out", str(local_dir)])
    assert result.exit_code == 0

    def fake_client(server, http_client=None):
        return ServiceClient(server=None, http_client=TestClient(app))
    monkeypatch.setattr("cellheal.cli.ServiceClient", fake_client)
    result = runner.invoke(main, ["run", "--seed", "11", "--users", "5",
                                  "--server", "http://example.invalid",
                                  "--out", str(remote_dir)])
    assert result.exit_code == 0
    for name in ("associations.csv", "energy.csv"):
        assert (local_dir / name).read_bytes() == (remote_dir / name).read_bytes()
