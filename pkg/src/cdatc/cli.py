"""Command line entry point: ``cdatc simulate | preset | validate``."""

from __future__ import annotations

import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from .errors import CdatcError
from .output import IoError, emit_results
from .scenario import dump_scenario, load_preset, parse_scenario
from .simulator import compare

EXIT_CODES = {"parse": 2, "config": 2, "topology": 2, "preset": 2, "io": 3, "output": 3}


def _fail(exc: CdatcError):
    click.echo(f"error [{exc.category}]: {exc}", err=True)
    sys.exit(EXIT_CODES.get(exc.category, 1))


def _execute(config, seed, runs, steps, out: Path):
    overrides = {k: v for k, v in (("seed", seed), ("runs", runs), ("n_steps", steps)) if v is not None}
    config = replace(config, **overrides)
    results = compare(config)
    paths = emit_results(results, config, out)
    try:
        (out / "effective_config.toml").write_text(dump_scenario(config))
    except OSError as exc:
        raise IoError(f"cannot write effective config: {exc}") from exc
    for path in paths:
        click.echo(str(path))
    for scheme, res in results.items():
        click.echo(f"{scheme:>14}: steady-state NMSD {res.steady_nmsd_db():.2f} dB")


_common = [
    click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the master seed."),
    click.option("--runs", type=click.IntRange(min=1), default=None, help="Override the Monte-Carlo run count."),
    click.option("--steps", type=click.IntRange(min=1), default=None, help="Override the horizon."),
    click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
                 help="Output directory (default ./results/<name>/)."),
]


def common(f):
    for opt in reversed(_common):
        f = opt(f)
    return f


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Censoring diffusion over energy-harvesting sensor networks."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@common
def simulate(scenario, seed, runs, steps, out):
    """Run every scheme listed in SCENARIO and write result files."""
    try:
        config = parse_scenario(scenario)
        _execute(config, seed, runs, steps, out or Path("results") / scenario.stem)
    except CdatcError as exc:
        _fail(exc)


@main.command()
@click.argument("name")
@common
def preset(name, seed, runs, steps, out):
    """Run a built-in experiment: fig2a, fig2b, fig3a, fig3b or unconstrained."""
    try:
        config = load_preset(name)
        _execute(config, seed, runs, steps, out or Path("results") / name)
    except CdatcError as exc:
        _fail(exc)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def validate(scenario):
    """Check SCENARIO and print the effective configuration."""
    try:
        click.echo(dump_scenario(parse_scenario(scenario)), nl=False)
    except CdatcError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
