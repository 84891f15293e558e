"""HTTP service wrapping the scenario runner.

Clients post a scenario and get back the report plus every artifact as text;
the CLI is one such client.  Scenario validation errors surface as 422s via
the request models, runtime failures are encoded in the response exit code.
"""

from __future__ import annotations

from fastapi import FastAPI
from pydantic import BaseModel, Field

from . import __version__
from .mappings import catalog
from .runner import RunResult, run_scenario
from .scenarios import Scenario


class RunRequest(BaseModel):
    scenario: Scenario
    jobs: int = Field(default=1, ge=1, le=64)
    deterministic: bool | None = None


class ArtifactPayload(BaseModel):
    name: str
    kind: str
    text: str


class RunResponse(BaseModel):
    name: str
    command: str
    status: str
    exit_code: int
    passed: bool
    report: dict
    artifacts: list[ArtifactPayload]


class CatalogEntry(BaseModel):
    name: str
    dim: int
    winding_count: int
    branches: int
    params: dict


class CatalogResponse(BaseModel):
    mappings: list[CatalogEntry]
    family_kinds: list[str]
    density_kinds: list[str]
    commands: list[str]


app = FastAPI(
    title="curvemod",
    version=__version__,
    description=(
        "Computes p-moduli of curve families and verifies the winding "
        "modulus inequality for catalog mappings."
    ),
)


def _to_response(result: RunResult) -> RunResponse:
    return RunResponse(
        name=result.name,
        command=result.command,
        status=result.status,
        exit_code=result.exit_code,
        passed=result.passed,
        report=result.report,
        artifacts=[
            ArtifactPayload(name=a.name, kind=a.kind, text=a.text)
            for a in result.artifacts
        ],
    )


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/catalog", response_model=CatalogResponse)
def get_catalog() -> CatalogResponse:
    return CatalogResponse(
        mappings=[CatalogEntry(**spec.describe()) for spec in catalog()],
        family_kinds=[
            "radial-connecting",
            "separating-circles",
            "segment-bundle",
            "custom",
        ],
        density_kinds=[
            "auto",
            "annulus-connecting-extremal",
            "annulus-separating-extremal",
            "constant",
            "scaled-random",
            "file",
        ],
        commands=["compute-modulus", "verify-theorem2", "verify-corollary1", "sweep"],
    )


@app.post("/run", response_model=RunResponse)
def post_run(req: RunRequest) -> RunResponse:
    result = run_scenario(req.scenario, jobs=req.jobs, deterministic=req.deterministic)
    return _to_response(result)


def _forced(req: RunRequest, command: str) -> RunResponse:
    scenario = req.scenario.model_copy(update={"command": command})
    result = run_scenario(scenario, jobs=req.jobs, deterministic=req.deterministic)
    return _to_response(result)


@app.post("/compute-modulus", response_model=RunResponse)
def post_compute_modulus(req: RunRequest) -> RunResponse:
    return _forced(req, "compute-modulus")


@app.post("/verify-theorem2", response_model=RunResponse)
def post_verify_theorem2(req: RunRequest) -> RunResponse:
    return _forced(req, "verify-theorem2")


@app.post("/verify-corollary1", response_model=RunResponse)
def post_verify_corollary1(req: RunRequest) -> RunResponse:
    return _forced(req, "verify-corollary1")


@app.post("/sweep", response_model=RunResponse)
def post_sweep(req: RunRequest) -> RunResponse:
    return _forced(req, "sweep")
