import json

from click.testing import CliRunner

from fcqn.cli import EXIT_CONFIG, cli


def test_allocate_command(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli, ["allocate", "--seed", "0", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "✅" in result.output
    assert (tmp_path / "users.csv").exists()


def test_config_file_with_overrides(tmp_path):
    config = tmp_path / "attack.yaml"
    config.write_text("seed: 1\nshots: 100\nattack:\n  state: ll\n")
    out = tmp_path / "out"
    runner = CliRunner()
    result = runner.invoke(cli, ["attack", "--config", str(config), "--shots", "4000", "--format", "json", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["shots"] == 4000
    assert report["config"]["scenario"] == "attack"
    assert (out / "attack.json").exists()


def test_missing_seed_is_a_config_error(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli, ["witness", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG
    assert "seed" in result.output


def test_invalid_config_key(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("seed: 1\nshots: 10\ncolour: red\n")
    runner = CliRunner()
    result = runner.invoke(cli, ["mdi", "--config", str(config)])
    assert result.exit_code == EXIT_CONFIG
    assert "colour" in result.output


def test_unknown_command():
    runner = CliRunner()
    result = runner.invoke(cli, ["teleport"])
    assert result.exit_code != 0


def test_run_options_before_the_subcommand(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli, ["--seed", "3", "--out", str(tmp_path), "--format", "json", "allocate"])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["config"]["seed"] == 3


def test_subcommand_option_wins_over_group_option(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli, ["--seed", "3", "allocate", "--seed", "5", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "report.json").read_text())["config"]["seed"] == 5


def test_config_for_another_scenario_is_rejected(tmp_path):
    config = tmp_path / "witness.yaml"
    config.write_text("scenario: witness\nseed: 1\n")
    runner = CliRunner()
    result = runner.invoke(cli, ["attack", "--config", str(config), "--out", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG
    assert "scenario" in result.output
