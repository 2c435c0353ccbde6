import json

from click.testing import CliRunner

from app import cli


def test_describe_prints_counts():
    result = CliRunner().invoke(cli, ["describe", "--instance", "ell4"])
    assert result.exit_code == 0
    summary = json.loads(result.stdout)
    assert summary["counts"]["genus"] == 1


def test_malformed_instance_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    result = CliRunner().invoke(cli, ["describe", "--instance", str(path)])
    assert result.exit_code == 2
    error = json.loads(result.stdout)
    assert error["error"] == "InstanceError"
    assert error["field"] == "$"


def test_unknown_suite_is_a_usage_error():
    result = CliRunner().invoke(cli, ["verify", "--instance", "ell4", "--suite", "bogus"])
    assert result.exit_code == 2


def test_empty_eps_list():
    result = CliRunner().invoke(cli, ["sweep", "--instance", "ell4", "--functional", "omega",
                                      "--coord", "A0", "--eps-list", ","])
    assert result.exit_code == 2
    assert json.loads(result.stdout)["error"] == "HarnessError"


def test_verify_writes_report(tmp_path):
    report = tmp_path / "report.json"
    result = CliRunner().invoke(cli, ["verify", "--instance", "n3-smoke", "--suite", "surface",
                                      "--report", str(report)])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["pass"] is True
    data = json.loads(report.read_text())
    assert data["suite"] == "surface"
    assert data["checks"]
    assert all(check["paper_eq"] for check in data["checks"])
