import json

from coopdyn import cli, harness
from coopdyn.errors import NumericalIntegrityError


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def delta_scan_payload():
    return {
        "experiment": "delta_scan",
        "payoff": {"temptation": 5, "reward": 3, "punishment": 1, "sucker": 0},
        "grid": {"start": 0.1, "stop": 0.5, "step": 0.1},
    }


def test_delta_scan_roundtrip(tmp_path, capsys):
    config = write_config(tmp_path, delta_scan_payload())
    out = tmp_path / "run"
    code = cli.main(["delta-scan", "--config", str(config), "--out", str(out)])
    assert code == 0
    assert (out / "scan.csv").exists()
    assert "solved_threshold" in capsys.readouterr().out


def test_experiment_key_may_be_omitted(tmp_path):
    payload = delta_scan_payload()
    del payload["experiment"]
    config = write_config(tmp_path, payload)
    code = cli.main(["delta-scan", "--config", str(config), "--out", str(tmp_path / "r")])
    assert code == 0


def test_mismatched_subcommand_fails_validation(tmp_path):
    config = write_config(tmp_path, delta_scan_payload())
    code = cli.main(["dungeon", "--config", str(config), "--out", str(tmp_path / "r")])
    assert code == 1


def test_seed_override_lands_in_manifest(tmp_path):
    payload = {"experiment": "dungeon", "rounds": 3}
    config = write_config(tmp_path, payload)
    out = tmp_path / "run"
    code = cli.main(["dungeon", "--config", str(config), "--seed", "42", "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 42


def test_invalid_config_exits_one(tmp_path, capsys):
    payload = delta_scan_payload()
    payload["mystery"] = True
    config = write_config(tmp_path, payload)
    code = cli.main(["delta-scan", "--config", str(config), "--out", str(tmp_path / "r")])
    assert code == 1
    assert "mystery" in capsys.readouterr().err


def test_missing_subcommand_exits_one(capsys):
    assert cli.main([]) == 1


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0


def test_numerical_integrity_exits_two(tmp_path, monkeypatch, capsys):
    config = write_config(tmp_path, delta_scan_payload())

    def explode(*args, **kwargs):
        raise NumericalIntegrityError("synthetic failure")

    monkeypatch.setitem(harness._RUNNERS, "delta_scan", explode)
    code = cli.main(["delta-scan", "--config", str(config), "--out", str(tmp_path / "r")])
    assert code == 2
    assert "synthetic failure" in capsys.readouterr().err


def test_report_subcommand_rebuilds(tmp_path):
    config = write_config(tmp_path, delta_scan_payload())
    out = tmp_path / "run"
    assert cli.main(["delta-scan", "--config", str(config), "--out", str(out)]) == 0
    report = out / "report.md"
    original = report.read_bytes()
    report.unlink()
    assert cli.main(["report", "--config", str(out)]) == 0
    assert report.read_bytes() == original


def test_report_on_missing_run_exits_one(tmp_path):
    assert cli.main(["report", "--config", str(tmp_path)]) == 1
