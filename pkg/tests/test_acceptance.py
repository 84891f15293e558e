"""Acceptance suite.

One test per acceptance criterion, each at its stated scale and tolerance,
printing a PASS line with the measured numbers.  Run with

    pytest tests/test_acceptance.py -v -s
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from curvemod import (
    Grid,
    SolverOptions,
    annulus_connecting_density,
    annulus_separating_density,
    catalog,
    circles_family,
    constant_density,
    density_from_function,
    family_union,
    identity_map,
    inner_dilatation,
    linear_map,
    min_stretch,
    p_modulus,
    power_map,
    radial_family,
    radial_stretch,
    segment_bundle,
    validate_mapping,
    verify_esssup_inequality,
    verify_winding_inequality,
    winding_multiplicity,
    winds_m_times,
)
from curvemod.cli import main as cli_main
from curvemod.curves import Curve
from curvemod.families import CurveFamily
from curvemod.runner import run_scenario
from curvemod.scenarios import default_image_grid, load_scenario

from conftest import E, random_curves

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def announce(criterion: str, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: PASS  {detail}")


@pytest.fixture(scope="module")
def annulus_grid_256():
    return Grid((-E, -E), (E, E), (256, 256))


def test_criterion_1_annulus_connecting_modulus(annulus_grid_256):
    """Radial family (>=720 rays), 256^2 grid: within 5% of 2*pi in <= 60 s."""
    t0 = time.perf_counter()
    fam = radial_family(1.0, E, 720, 2000)
    rep = p_modulus(fam, 2.0, annulus_grid_256, SolverOptions())
    elapsed = time.perf_counter() - t0
    target = 2 * np.pi
    rel = abs(rep.value - target) / target
    assert rel <= 0.05, (rep.value, target)
    assert elapsed <= 60.0, elapsed
    announce(
        "1 (connecting modulus)",
        f"value={rep.value:.5f} target={target:.5f} rel_err={rel:.3%} "
        f"time={elapsed:.1f}s",
    )


def test_criterion_2_annulus_separating_modulus(annulus_grid_256):
    """Circle family (>=500 circles), 256^2 grid: within 5% of 1/(2*pi)."""
    fam = circles_family(1.0, E, 500, 2048)
    rep = p_modulus(fam, 2.0, annulus_grid_256, SolverOptions())
    target = 1 / (2 * np.pi)
    rel = abs(rep.value - target) / target
    assert rel <= 0.05, (rep.value, target)
    announce(
        "2 (separating modulus)",
        f"value={rep.value:.6f} target={target:.6f} rel_err={rel:.3%}",
    )


@pytest.mark.parametrize("m", [2, 3])
def test_criterion_3_equality_case(m):
    """z^m equality case via the shipped scenarios: both sides near 1/(2*pi*m)."""
    scenario = load_scenario(SCENARIO_DIR / f"annulus-z{m}-circles.yaml")
    result = run_scenario(scenario)
    assert result.exit_code == 0, result.report
    report = result.report
    target = 1.0 / (2 * np.pi * m)
    lhs_rel = abs(report["lhs"] - target) / target
    rhs_rel = abs(report["rhs"] - target) / target
    assert lhs_rel <= 0.05, (report["lhs"], target)
    assert rhs_rel <= 0.05, (report["rhs"], target)
    assert report["slack"] >= -report["tol_total"]
    announce(
        f"3 (equality case m={m})",
        f"lhs={report['lhs']:.6f} rhs={report['rhs']:.6f} "
        f"target={target:.6f} (lhs {lhs_rel:.2%}, rhs {rhs_rel:.2%}) "
        f"slack={report['slack']:+.2e} tol={report['tol_total']:.2e}",
    )


def test_criterion_4_esssup_corollary(annulus_grid_256):
    """Conformal-exponent corollary: K=1 winding runs and diag(2,1) square run."""
    # z^m runs with essential supremum 1
    for m in (2, 3):
        fam = circles_family(1.0, E, 500, 2046)
        f = power_map(m)
        img = default_image_grid(annulus_grid_256, fam, f)
        rep = verify_esssup_inequality(
            fam, f, m, annulus_grid_256, img, SolverOptions(), lhs_mode="solver"
        )
        assert rep.passed, rep.failures
        assert rep.intermediate_checks["ess_sup_dilatation"] == pytest.approx(
            1.0, abs=1e-6
        )
        assert rep.slack >= -rep.tol_total

    # linear diag(2, 1): lhs = 1/2 and rhs = 2 within 3% each
    scenario = load_scenario(SCENARIO_DIR / "square-diag21-corollary.yaml")
    result = run_scenario(scenario)
    assert result.exit_code == 0, result.report
    report = result.report
    assert abs(report["lhs"] - 0.5) / 0.5 <= 0.03, report["lhs"]
    assert abs(report["rhs"] - 2.0) / 2.0 <= 0.03, report["rhs"]
    announce(
        "4 (ess-sup corollary)",
        f"winding runs K=1 ok; diag(2,1): lhs={report['lhs']:.5f} (1/2) "
        f"rhs={report['rhs']:.5f} (2)",
    )


def test_criterion_5_pushforward_chain():
    """image modulus <= pushforward energy <= weighted source integral,
    each within tol_total, across >= 10 distinct scenarios."""
    from curvemod import DensityField, make_admissible

    scenarios = []

    square = Grid((0.0, 0.0), (1.0, 1.0), (96, 96))
    bundle = segment_bundle(120, 240)
    ones = constant_density(square, 1.0)
    scenarios.append(("identity square", bundle, identity_map(2), ones, 2.0, 1, square))
    scenarios.append(
        ("diag(2,1) square", bundle, linear_map([[2.0, 0.0], [0.0, 1.0]]), ones, 2.0, 1, square)
    )
    scenarios.append(
        ("diag(1,3) square", bundle, linear_map([[1.0, 0.0], [0.0, 3.0]]), ones, 2.0, 1, square)
    )
    scenarios.append(
        ("square p=1.5", bundle, identity_map(2), ones, 1.5, 1, square)
    )

    ann = Grid((-E, -E), (E, E), (128, 128))
    circles = circles_family(1.0, E, 90, 516)
    rays = radial_family(1.0, E, 120, 600)
    sep = annulus_separating_density(ann, 1.0, E)
    conn = annulus_connecting_density(ann, 1.0, E)
    scenarios.append(("identity circles", circles, identity_map(2), sep, 2.0, 1, ann))
    scenarios.append(("z^2 circles m=2", circles, power_map(2), sep, 2.0, 2, ann))
    scenarios.append(("z^3 circles m=3", circles, power_map(3), sep, 2.0, 3, ann))
    scenarios.append(("z^2 circles m=1", circles, power_map(2), sep, 2.0, 1, ann))
    scenarios.append(("z^2 circles p=3", circles, power_map(2), sep, 3.0, 2, ann))
    scenarios.append(("radial stretch rays", rays, radial_stretch(2.0, 2), conn, 2.0, 1, ann))
    rng = np.random.default_rng(7)
    rough = make_admissible(
        DensityField(ann, rng.uniform(0.1, 1.0, ann.shape)), circles
    )
    scenarios.append(("z^2 random density", circles, power_map(2), rough, 2.0, 2, ann))

    assert len(scenarios) >= 10
    lines = []
    for name, fam, f, rho, p, m, grid in scenarios:
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(
            fam, f, rho, p, m, img, SolverOptions(), lhs_mode="solver"
        )
        assert rep.lhs <= rep.rho_tilde_energy + rep.tol_total, (
            name,
            rep.lhs,
            rep.rho_tilde_energy,
            rep.tol_total,
        )
        assert rep.rho_tilde_energy <= rep.rhs + rep.tol_total, (
            name,
            rep.rho_tilde_energy,
            rep.rhs,
            rep.tol_total,
        )
        lines.append(name)
    announce("5 (pushforward chain)", f"{len(lines)} scenarios: {', '.join(lines)}")


def test_criterion_6_modulus_axioms(rng):
    """Monotonicity and finite subadditivity on >= 50 randomized families."""
    grid = Grid((0.0, 0.0), (1.0, 1.0), (32, 32))
    opts = SolverOptions()
    families = [
        CurveFamily(random_curves(rng, int(rng.integers(4, 9)), samples=80))
        for _ in range(50)
    ]
    checks = 0
    for fam in families:
        sub = CurveFamily(fam.curves[: max(1, len(fam) // 2)])
        v_sub = p_modulus(sub, 2.0, grid, opts).value
        v_full = p_modulus(fam, 2.0, grid, opts).value
        assert v_sub <= v_full + 2 * opts.tolerance * max(v_sub, v_full)
        checks += 1
    for f1, f2 in zip(families[:25], families[25:]):
        v1 = p_modulus(f1, 2.0, grid, opts).value
        v2 = p_modulus(f2, 2.0, grid, opts).value
        v12 = p_modulus(family_union(f1, f2), 2.0, grid, opts).value
        assert v12 <= v1 + v2 + 2 * opts.tolerance * (v1 + v2)
        checks += 1
    announce(
        "6 (modulus axioms)",
        f"{len(families)} random families, {checks} checks (monotone + subadditive)",
    )


def test_criterion_7_dilatation_suite(rng):
    """Dilatation floor, the three-case rule on hand values, derivative checks."""
    for dim in (2, 3):
        M = rng.normal(size=(10_000, dim, dim))
        M = M[np.abs(np.linalg.det(M)) > 1e-9]
        K = np.abs(np.linalg.det(M)) / np.asarray(min_stretch(M)) ** dim
        assert np.all(K >= 1.0 - 1e-9)

    assert inner_dilatation(identity_map(2), np.array([0.4, 0.1]), 2.0) == 1.0
    assert inner_dilatation(
        linear_map([[1.0, 0.0], [0.0, 0.0]]), np.array([0.4, 0.1]), 2.0
    ) == np.inf
    r = 1.3
    assert inner_dilatation(power_map(2), np.array([r, 0.0]), 2.0) == pytest.approx(1.0)
    assert inner_dilatation(power_map(2), np.array([r, 0.0]), 3.0) == pytest.approx(
        (2 * r) ** -1.0
    )
    assert inner_dilatation(
        radial_stretch(3.0, 2), np.array([0.7, -0.4]), 2.0
    ) == pytest.approx(3.0)

    for f in catalog():
        pts = rng.uniform(0.4, 2.0, size=(200, f.dim)) * rng.choice(
            [-1.0, 1.0], size=(200, f.dim)
        )
        result = validate_mapping(f, pts)
        assert result["passed"], (f.name, f.params, result)
    announce(
        "7 (dilatation suite)",
        "K floor on 10^4 matrices (n=2,3); hand values; derivative checks "
        f"for {len(catalog())} catalog maps",
    )


def test_criterion_8_winding_suite():
    """Accept the true winding count, reject every other, lifted points distinct."""

    def circle(samples):
        ts = np.linspace(0.0, 2 * np.pi, samples + 1)
        pts = np.stack([1.2 * np.cos(ts), 1.2 * np.sin(ts)], axis=1)
        pts[-1] = pts[0]
        return Curve(ts, pts, closed=True)

    alpha = circle(2520)  # divisible by 1..6: image polylines exactly periodic
    rejected = 0
    for m in (1, 2, 3):
        f = power_map(m)
        rep = winds_m_times(f, alpha, m)
        assert rep.winds, (m, rep)
        if m > 1:
            # all m lifted points stay pairwise separated at every sampled t
            assert rep.min_separation > rep.tol
        for wrong in (2, 3):
            if wrong != m:
                bad = winds_m_times(f, alpha, wrong)
                assert not bad.winds, (m, wrong)
                rejected += 1
        # the multiplicity detector pins the exact count, rejecting m'=1 too
        assert winding_multiplicity(f, alpha, max_m=5) == m
    announce(
        "8 (winding suite)",
        f"accepts (z^m, circle, m) for m in 1..3; rejects {rejected} wrong counts; "
        "multiplicity detector exact; lifts pairwise distinct",
    )


def test_criterion_9_scaling_law():
    """Dilation by lambda scales the modulus by lambda^(n-p) within 2%."""
    grid = Grid((0.0, 0.0), (1.0, 1.0), (64, 64))
    fam = segment_bundle(100, 200)
    opts = SolverOptions(tolerance=0.004)
    results = []
    for p in (1.5, 2.0, 3.0):
        base = p_modulus(fam, p, grid, opts).value
        for lam in (0.5, 2.0):
            scaled = p_modulus(fam.scaled(lam), p, grid.scaled(lam), opts).value
            expected = lam ** (2.0 - p) * base
            rel = abs(scaled - expected) / expected
            assert rel <= 0.02, (p, lam, scaled, expected)
            results.append(f"p={p},lam={lam}:{rel:.2%}")
    announce("9 (scaling law)", "; ".join(results))


def test_criterion_10_deterministic_reports(tmp_path):
    """Deterministic-mode reruns of the equality scenario are byte-identical."""
    scenario_path = SCENARIO_DIR / "annulus-z2-circles.yaml"
    runner = CliRunner()
    payloads = []
    for sub in ("first", "second"):
        out = tmp_path / sub
        result = runner.invoke(
            cli_main,
            [
                "verify",
                "--scenario",
                str(scenario_path),
                "--out",
                str(out),
                "--deterministic",
            ],
        )
        assert result.exit_code == 0, result.output
        payloads.append(
            {p.name: p.read_bytes() for p in sorted(out.iterdir())}
        )
    assert payloads[0].keys() == payloads[1].keys()
    for name in payloads[0]:
        assert payloads[0][name] == payloads[1][name], name
    report = json.loads(payloads[0]["annulus-z2-circles-report.json"])
    assert "timing" not in report
    announce(
        "10 (determinism)",
        f"{len(payloads[0])} artifacts byte-identical across two CLI runs",
    )
