# fcqn/cli.py
"""
Command line entry point.

    fcqn witness --config configs/witness.yaml --seed 7 --out results/witness
    fcqn --seed 7 --out results/witness witness

The run options are accepted before or after the subcommand; the subcommand's
own value wins. Options given on the command line override the same keys in
the config file.
Exit status: 0 success, 1 invalid configuration, 2 failure while running.
"""
import logging
import sys
from pathlib import Path

import click

from fcqn import __version__, settings
from fcqn.errors import ConfigError
from fcqn.services import harness

logger = logging.getLogger("fcqn")

EXIT_CONFIG = 1
EXIT_RUNTIME = 2

_RUN_OPTIONS = (
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML experiment config."),
    click.option("--seed", type=int, help="Master seed (required here or in the config)."),
    click.option("--out", type=click.Path(file_okay=False), help="Output directory."),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]), help="Table format."),
    click.option("--shots", type=int, help="Shots per measurement setting."),
    click.option("--workers", type=int, help="Worker threads."),
)


def run_options(fn):
    for option in reversed(_RUN_OPTIONS):
        fn = option(fn)
    return fn


def _configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _load_config(scenario: str, config_path, overrides: dict) -> dict:
    raw = harness.parse_config_text(Path(config_path).read_text()) if config_path else {}
    declared = raw.get("scenario")
    if declared is not None and declared != scenario:
        raise ConfigError([
            {"field": "scenario", "message": f"config file is for {declared!r} but the command runs {scenario!r}"}
        ])
    raw["scenario"] = scenario
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return raw


def _run_scenario(scenario: str, config_path, seed, out, fmt, shots, workers) -> None:
    overrides = {"seed": seed, "output_dir": out, "format": fmt, "shots": shots, "workers": workers}
    try:
        config = harness.validate_config(_load_config(scenario, config_path, overrides))
    except ConfigError as exc:
        click.secho("❌ invalid configuration", fg="red", err=True)
        for error in exc.errors:
            click.echo(f"   {error['field']}: {error['message']}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        report = harness.run(config)
    except Exception as exc:
        logger.exception("scenario %s failed", scenario)
        click.secho(f"❌ {scenario} failed: {exc}", fg="red", err=True)
        sys.exit(EXIT_RUNTIME)

    rows = sum(len(t) for t in report.tables.values())
    click.secho(f"✅ {scenario}: {len(report.tables)} tables, {rows} rows -> {config.output_dir}", fg="green")


def _scenario_command(name: str, scenario: str, help_text: str):
    @run_options
    @click.pass_context
    def command(ctx, **options):
        group_options = ctx.obj or {}
        merged = {k: v if v is not None else group_options.get(k) for k, v in options.items()}
        _run_scenario(scenario, **merged)

    command.__doc__ = help_text
    return click.command(name)(command)


@click.group()
@click.version_option(__version__, prog_name="fcqn")
@run_options
@click.pass_context
def cli(ctx, **options):
    """Simulate a time-bin fully connected quantum network."""
    _configure_logging()
    ctx.obj = options


cli.add_command(_scenario_command("source-sweep", "source_sweep", "PGR and CAR of every channel pair against pump power."))
cli.add_command(_scenario_command("allocate", "allocate", "Channel allocation and link map of the network."))
cli.add_command(_scenario_command("tomography", "tomography", "Per-link state tomography after UMZI conversion."))
cli.add_command(_scenario_command("witness", "witness", "Per-link entanglement witness from correlator counts."))
cli.add_command(_scenario_command("attack", "attack", "Witness of a product state with and without the delay attack."))
cli.add_command(_scenario_command("mdi", "mdi", "Measurement-device-independent witness per link."))
cli.add_command(_scenario_command("theta-scan", "theta_scan", "MDI lower bound and E_Tr over the pump HWP angle."))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
