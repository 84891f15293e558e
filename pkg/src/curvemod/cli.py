"""Command-line client of the curvemod service.

Every subcommand posts the scenario to the service and writes the returned
artifacts.  By default the service runs in-process; pass --server to target a
remote instance started with `curvemod serve`.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import ScenarioError
from .runner import EXIT_CONFIG
from .scenarios import load_scenario


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _write_artifacts(payload: dict, out: str | None) -> None:
    if out is None:
        return
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for artifact in payload["artifacts"]:
        (out_dir / artifact["name"]).write_text(artifact["text"])


def _summarize(payload: dict) -> str:
    report = payload.get("report", {})
    lines = [f"{payload['name']}: {payload['status']}"]
    if "value" in report:
        lines.append(f"  value = {report['value']}")
        if "dual_gap_estimate" in report:
            lines.append(f"  certified gap = {report['dual_gap_estimate']}")
    if "lhs" in report:
        lines.append(f"  lhs = {report['lhs']}")
        lines.append(f"  rhs = {report['rhs']}")
        lines.append(f"  slack = {report['slack']} (tol_total {report.get('tol_total')})")
        if report.get("rho_tilde_energy") is not None:
            lines.append(f"  pushforward energy = {report['rho_tilde_energy']}")
    if report.get("failures"):
        lines.append("  failed checks: " + ", ".join(report["failures"]))
    if report.get("error"):
        lines.append(f"  error: {report['error']}")
    if "rows" in report:
        lines.append(f"  rows: {len(report['rows'])}")
    return "\n".join(lines)


def _execute(
    scenario_path: str,
    allowed_commands: tuple[str, ...],
    out: str | None,
    jobs: int,
    deterministic: bool,
    server: str | None,
) -> None:
    try:
        scenario = load_scenario(scenario_path)
    except ScenarioError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if scenario.command not in allowed_commands:
        click.echo(
            f"error: scenario command {scenario.command!r} does not match this "
            f"subcommand (expected one of {', '.join(allowed_commands)})",
            err=True,
        )
        sys.exit(EXIT_CONFIG)

    body = {"scenario": scenario.model_dump(mode="json"), "jobs": jobs}
    if deterministic:
        body["deterministic"] = True
    with _client(server) as client:
        response = client.post("/run", json=body)
        if response.status_code != 200:
            click.echo(f"error: service returned {response.status_code}: "
                       f"{response.text}", err=True)
            sys.exit(EXIT_CONFIG if response.status_code == 422 else 1)
        payload = response.json()

    _write_artifacts(payload, out)
    click.echo(_summarize(payload))
    sys.exit(payload["exit_code"])


scenario_opt = click.option(
    "--scenario", "scenario_path", required=True, type=click.Path(exists=True),
    help="Scenario file (YAML or JSON).",
)
out_opt = click.option("--out", default=None, type=click.Path(), help="Artifact directory.")
jobs_opt = click.option("--jobs", default=1, show_default=True, help="Parallel sweep rows.")
det_opt = click.option(
    "--deterministic", is_flag=True, help="Force deterministic mode (no timing block)."
)
server_opt = click.option(
    "--server", default=None, help="Base URL of a running service; default is in-process."
)


@click.group()
def main() -> None:
    """p-moduli of curve families and winding modulus inequality checks."""


@main.command("catalog")
@server_opt
@click.option("--as-json", is_flag=True, help="Print the raw catalog JSON.")
def catalog_cmd(server: str | None, as_json: bool) -> None:
    """List built-in mappings, family kinds, and density kinds."""
    with _client(server) as client:
        response = client.get("/catalog")
        response.raise_for_status()
        doc = response.json()
    if as_json:
        import json

        click.echo(json.dumps(doc, indent=2, sort_keys=True))
        return
    click.echo("mappings:")
    for entry in doc["mappings"]:
        click.echo(
            f"  {entry['name']:<16} dim={entry['dim']} winding={entry['winding_count']} "
            f"branches={entry['branches']} params={entry['params']}"
        )
    click.echo("family kinds:  " + ", ".join(doc["family_kinds"]))
    click.echo("density kinds: " + ", ".join(doc["density_kinds"]))
    click.echo("commands:      " + ", ".join(doc["commands"]))


@main.command("compute-modulus")
@scenario_opt
@out_opt
@jobs_opt
@det_opt
@server_opt
def compute_modulus_cmd(scenario_path, out, jobs, deterministic, server) -> None:
    """Compute the p-modulus of the scenario's curve family."""
    _execute(scenario_path, ("compute-modulus",), out, jobs, deterministic, server)


@main.command("verify")
@scenario_opt
@out_opt
@jobs_opt
@det_opt
@server_opt
def verify_cmd(scenario_path, out, jobs, deterministic, server) -> None:
    """Run a modulus-inequality verification scenario."""
    _execute(
        scenario_path,
        ("verify-theorem2", "verify-corollary1"),
        out,
        jobs,
        deterministic,
        server,
    )


@main.command("sweep")
@scenario_opt
@out_opt
@jobs_opt
@det_opt
@server_opt
def sweep_cmd(scenario_path, out, jobs, deterministic, server) -> None:
    """Run a parameter sweep and write one merged table."""
    _execute(scenario_path, ("sweep",), out, jobs, deterministic, server)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve_cmd(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("curvemod.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
