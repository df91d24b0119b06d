"""Command line entry points: simulate, analyze, report, power, serve."""

from __future__ import annotations

import json
import os
import sys
import tempfile

import click

from . import analysis, report
from .host import import_session
from .scenario import load_scenario
from .simulate import run_simulation


def _write_atomic(path: str, payload: bytes) -> None:
    """Write output via a temp file so failures never leave partial files."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".phtelem-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@click.group()
def main() -> None:
    """Digital twin of a wireless intraoral pH telemetry system."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", default="jsonl", type=click.Choice(["jsonl", "csv"]))
def simulate(scenario_path: str, out_path: str, fmt: str) -> None:
    """Run a scenario on the virtual clock and write the session export."""
    try:
        scenario = load_scenario(scenario_path)
        result = run_simulation(scenario)
        _write_atomic(out_path, result.session.export(fmt))
    except Exception as e:
        raise click.ClickException(str(e)) from e
    click.echo(
        f"{result.session.id}: {len(result.session.samples)} samples stored, "
        f"{result.frames_dropped} of {result.frames_sent} frames dropped -> {out_path}"
    )


@main.command()
@click.argument("session_file", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--band", default=analysis.DEFAULT_SETTLING_BAND_PH, show_default=True,
              help="settling band in pH units for response metrics")
@click.option("--budget", "budget_path", type=click.Path(exists=True), default=None,
              help="optional power budget TOML to include power totals")
def analyze(session_file: str, out_path: str, band: float, budget_path: str | None) -> None:
    """Run the post-processing pipeline on a session export."""
    try:
        with open(session_file, "rb") as f:
            session = import_session(f.read())
        budget = analysis.load_power_budget(budget_path) if budget_path else None
        metrics = analysis.compute_metrics(session, band=band, budget=budget)
        payload = (json.dumps(metrics, indent=2, sort_keys=True) + "\n").encode()
        _write_atomic(out_path, payload)
    except Exception as e:
        raise click.ClickException(str(e)) from e
    click.echo(f"metrics written -> {out_path}")


@main.command("report")
@click.argument("session_file", type=click.Path(exists=True))
@click.argument("metrics_file", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def report_cmd(session_file: str, metrics_file: str, out_path: str) -> None:
    """Render the print-ready HTML report."""
    try:
        with open(session_file, "rb") as f:
            session = import_session(f.read())
        with open(metrics_file) as f:
            metrics = json.load(f)
        _write_atomic(out_path, report.render_report(session, metrics))
    except Exception as e:
        raise click.ClickException(str(e)) from e
    click.echo(f"report written -> {out_path}")


@main.command()
@click.option("--budget", "budget_path", required=True, type=click.Path(exists=True))
def power(budget_path: str) -> None:
    """Print power totals for a component budget TOML."""
    try:
        budget = analysis.load_power_budget(budget_path)
        total, essential, intraoral = analysis.power_totals(budget)
    except Exception as e:
        raise click.ClickException(str(e)) from e
    click.echo(f"total: {total:.2f} mW")
    click.echo(f"without optional: {essential:.2f} mW")
    click.echo(f"intraoral: {intraoral:.2f} mW")


@main.command()
@click.option("--port", default=8077, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(port: int, host: str) -> None:
    """Start the daq-host service endpoints for live use."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
