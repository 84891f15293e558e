"""Scenario execution: dispatch, artifacts, sweeps."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import (
    CurvemodError,
    NotApplicableError,
    PreconditionError,
    ScenarioError,
    SolverNonConvergenceError,
)
from .reporting import (
    heatmap_svg,
    modulus_report_doc,
    save_density,
    sweep_csv,
    to_json,
    verification_report_doc,
)
from .scenarios import (
    Scenario,
    build_density,
    build_family,
    build_grid,
    build_image_grid,
    build_mapping,
)
from .solver import p_modulus
from .verify import verify_esssup_inequality, verify_winding_inequality

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


@dataclass
class Artifact:
    name: str
    kind: str
    text: str


@dataclass
class RunResult:
    name: str
    command: str
    status: str
    exit_code: int
    passed: bool
    report: dict = field(default_factory=dict)
    artifacts: list[Artifact] = field(default_factory=list)


def _scenario_meta(scenario: Scenario, deterministic: bool, wall_time: float) -> dict:
    meta = {
        "name": scenario.name,
        "command": scenario.command,
        "scenario": scenario.model_dump(mode="json"),
    }
    if not deterministic:
        meta["timing"] = {"wall_time_s": wall_time}
    return meta


def _apply_overrides(scenario: Scenario, deterministic: bool | None) -> Scenario:
    if deterministic is None:
        return scenario
    solver = scenario.solver.model_copy(update={"deterministic": deterministic})
    return scenario.model_copy(update={"solver": solver})


def run_scenario(
    scenario: Scenario, *, jobs: int = 1, deterministic: bool | None = None
) -> RunResult:
    """Execute one scenario and collect its artifacts.

    Exit code 0 means every assertion in the run passed; assertion failures
    (negative slack, admissibility violations, failed winding preconditions)
    give 1, solver or other runtime errors give 3.
    """
    scenario = _apply_overrides(scenario, deterministic)
    try:
        if scenario.command == "compute-modulus":
            return _run_modulus(scenario)
        if scenario.command == "verify-theorem2":
            return _run_verify(scenario, corollary=False)
        if scenario.command == "verify-corollary1":
            return _run_verify(scenario, corollary=True)
        if scenario.command == "sweep":
            return run_sweep(scenario, jobs=jobs)
        raise ScenarioError(f"unknown command {scenario.command!r}")
    except (PreconditionError, NotApplicableError) as exc:
        return RunResult(
            name=scenario.name,
            command=scenario.command,
            status="precondition-failed",
            exit_code=EXIT_ASSERTION,
            passed=False,
            report={"error": str(exc), "name": scenario.name},
        )
    except ScenarioError as exc:
        return RunResult(
            name=scenario.name,
            command=scenario.command,
            status="config-error",
            exit_code=EXIT_CONFIG,
            passed=False,
            report={"error": str(exc), "name": scenario.name},
        )
    except (SolverNonConvergenceError, CurvemodError) as exc:
        return RunResult(
            name=scenario.name,
            command=scenario.command,
            status="error",
            exit_code=EXIT_RUNTIME,
            passed=False,
            report={"error": str(exc), "name": scenario.name},
        )


def _density_artifacts(scenario: Scenario, label: str, density) -> list[Artifact]:
    out = []
    if density is None:
        return out
    if "heatmap" in scenario.outputs:
        out.append(
            Artifact(
                f"{scenario.name}-{label}.svg",
                "heatmap",
                heatmap_svg(density, title=f"{scenario.name}: {label}"),
            )
        )
    if "density" in scenario.outputs:
        out.append(
            Artifact(f"{scenario.name}-{label}.density.txt", "density", save_density(density))
        )
    return out


def _run_modulus(scenario: Scenario) -> RunResult:
    t0 = time.perf_counter()
    grid = build_grid(scenario.source_grid)
    fam = build_family(scenario.family, grid)
    opts = scenario.solver.to_options()
    report = p_modulus(fam, scenario.p, grid, opts)
    wall = time.perf_counter() - t0

    doc = modulus_report_doc(
        report, _scenario_meta(scenario, opts.deterministic, wall)
    )
    artifacts = [Artifact(f"{scenario.name}-report.json", "report", to_json(doc))]
    if "csv" in scenario.outputs:
        artifacts.append(
            Artifact(
                f"{scenario.name}.csv",
                "csv",
                sweep_csv([_sweep_row_from_modulus(scenario, doc, wall)]),
            )
        )
    artifacts.extend(
        _density_artifacts(scenario, "extremal-density", report.extremal_density)
    )
    return RunResult(
        name=scenario.name,
        command=scenario.command,
        status="ok",
        exit_code=EXIT_OK,
        passed=True,
        report=doc,
        artifacts=artifacts,
    )


def _run_verify(scenario: Scenario, corollary: bool) -> RunResult:
    t0 = time.perf_counter()
    source_grid = build_grid(scenario.source_grid)
    mapping = build_mapping(scenario.mapping)
    fam = build_family(scenario.family, source_grid)
    image_grid = build_image_grid(scenario, source_grid, fam, mapping)
    opts = scenario.solver.to_options()

    pushforward_field = None
    if corollary:
        report = verify_esssup_inequality(
            fam,
            mapping,
            scenario.m,
            source_grid,
            image_grid,
            opts,
            lhs_mode=scenario.verify.lhs_mode,
        )
        rho = None
    else:
        rho = build_density(scenario.density, source_grid, scenario.family, fam)
        report = verify_winding_inequality(
            fam,
            mapping,
            rho,
            scenario.p,
            scenario.m,
            image_grid,
            opts,
            lhs_mode=scenario.verify.lhs_mode,
            check_curves=scenario.verify.check_curves,
            winding_check=scenario.verify.winding_check,
            winding_tol=scenario.verify.winding_tol,
        )
        from .pushforward import pushforward_density

        pushforward_field = pushforward_density(
            rho, mapping, scenario.m, image_grid
        ).image_field
    wall = time.perf_counter() - t0

    doc = verification_report_doc(
        report, _scenario_meta(scenario, opts.deterministic, wall)
    )
    artifacts = [Artifact(f"{scenario.name}-report.json", "report", to_json(doc))]
    if "csv" in scenario.outputs:
        artifacts.append(
            Artifact(
                f"{scenario.name}.csv",
                "csv",
                sweep_csv([_sweep_row_from_verify(scenario, doc, wall)]),
            )
        )
    if rho is not None:
        artifacts.extend(_density_artifacts(scenario, "density", rho))
    artifacts.extend(
        _density_artifacts(scenario, "pushforward-density", pushforward_field)
    )

    exit_code = EXIT_OK if report.passed else EXIT_ASSERTION
    status = "ok" if report.passed else "assertion-failed"
    return RunResult(
        name=scenario.name,
        command=scenario.command,
        status=status,
        exit_code=exit_code,
        passed=report.passed,
        report=doc,
        artifacts=artifacts,
    )


# ---------------------------------------------------------------------------
# sweeps


def _sweep_row_base(scenario: Scenario, wall: float) -> dict:
    return {
        "name": scenario.name,
        "command": scenario.command,
        "mapping": scenario.mapping.key,
        "family": scenario.family.kind,
        "m": scenario.m,
        "p": scenario.p,
        "R": scenario.family.R,
        "resolution": "x".join(str(k) for k in scenario.source_grid.resolution),
        "wall_time_s": round(wall, 3),
    }


def _sweep_row_from_modulus(scenario: Scenario, doc: dict, wall: float) -> dict:
    row = _sweep_row_base(scenario, wall)
    row.update({"value": doc.get("value"), "status": "ok", "error": ""})
    return row


def _sweep_row_from_verify(scenario: Scenario, doc: dict, wall: float) -> dict:
    row = _sweep_row_base(scenario, wall)
    checks = doc.get("intermediate_checks", {})
    row.update(
        {
            "lhs": doc.get("lhs"),
            "rhs": doc.get("rhs"),
            "slack": doc.get("slack"),
            "rho_tilde_energy": doc.get("rho_tilde_energy"),
            "admissibility_residual": doc.get("admissibility_residual"),
            "loop_splitting_max_rel_err": checks.get("loop_splitting_max_rel_err"),
            "lifted_separation_min": checks.get("lifted_separation_min"),
            "chain_rule_bound_max_excess": checks.get("chain_rule_bound_max_excess"),
            "change_of_variables_max_rel_err": checks.get(
                "change_of_variables_max_rel_err"
            ),
            "power_mean_max_violation": checks.get("power_mean_max_violation"),
            "status": "ok" if doc.get("passed") else "assertion-failed",
            "error": "; ".join(doc.get("failures", [])),
        }
    )
    return row


def expand_sweep(scenario: Scenario) -> list[Scenario]:
    """One derived scenario per parameter combination, in deterministic order."""
    if scenario.sweep is None:
        raise ScenarioError("sweep command requires a sweep block")
    sw = scenario.sweep
    axes: list[tuple[str, list]] = []
    if sw.m:
        axes.append(("m", sw.m))
    if sw.p:
        axes.append(("p", sw.p))
    if sw.R:
        axes.append(("R", sw.R))
    if sw.resolution:
        axes.append(("resolution", sw.resolution))

    base_command = scenario.sweep.command
    rows = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        updates: dict = {"sweep": None, "command": base_command, "image_grid": None}
        mapping = scenario.mapping
        family = scenario.family
        source = scenario.source_grid
        label_parts = []
        for (key, _), value in zip(axes, combo):
            label_parts.append(f"{key}={value}")
            if key == "m":
                updates["m"] = int(value)
                if mapping.key == "power":
                    mapping = mapping.model_copy(update={"m": int(value)})
            elif key == "p":
                updates["p"] = float(value)
            elif key == "R":
                family = family.model_copy(update={"R": float(value)})
            elif key == "resolution":
                source = source.model_copy(
                    update={"resolution": [int(value)] * len(source.resolution)}
                )
        updates["mapping"] = mapping
        updates["family"] = family
        updates["source_grid"] = source
        updates["name"] = f"{scenario.name}[{','.join(label_parts)}]"
        rows.append(scenario.model_copy(update=updates))
    return rows


def run_sweep(scenario: Scenario, *, jobs: int = 1) -> RunResult:
    """Run every sweep row (rows continue past per-row errors), merge the table."""
    derived = expand_sweep(scenario)

    def one(sub: Scenario) -> tuple[RunResult, float]:
        t0 = time.perf_counter()
        res = run_scenario(sub)
        return res, time.perf_counter() - t0

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, derived))
    else:
        outcomes = [one(sub) for sub in derived]

    rows = []
    artifacts: list[Artifact] = []
    all_ok = True
    for sub, (res, wall) in zip(derived, outcomes):
        if res.status == "ok" and sub.command == "compute-modulus":
            rows.append(_sweep_row_from_modulus(sub, res.report, wall))
        elif "lhs" in res.report:
            rows.append(_sweep_row_from_verify(sub, res.report, wall))
        else:
            row = _sweep_row_base(sub, wall)
            row.update({"status": res.status, "error": res.report.get("error", "")})
            rows.append(row)
        all_ok = all_ok and res.passed
        for art in res.artifacts:
            if art.kind == "report":
                artifacts.append(art)

    table = sweep_csv(rows)
    artifacts.insert(0, Artifact(f"{scenario.name}-sweep.csv", "csv", table))
    doc = {
        "name": scenario.name,
        "command": "sweep",
        "rows": rows,
        "passed": all_ok,
    }
    artifacts.insert(0, Artifact(f"{scenario.name}-report.json", "report", to_json(doc)))
    return RunResult(
        name=scenario.name,
        command="sweep",
        status="ok" if all_ok else "assertion-failed",
        exit_code=EXIT_OK if all_ok else EXIT_ASSERTION,
        passed=all_ok,
        report=doc,
        artifacts=artifacts,
    )
