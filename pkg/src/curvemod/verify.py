"""Verification engine for the winding modulus inequality.

Checks, for a catalog mapping f that winds every curve of a family m times,
that the modulus of the image family is bounded by (1/m) times the
dilatation-weighted energy of any admissible density, and records the
intermediate identities of the pushforward construction as named residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import analytic_image_modulus
from .curves import (
    Curve,
    f_representation,
    is_admissible,
    line_integral,
    normal_representation,
)
from .errors import NotApplicableError, PreconditionError
from .families import CurveFamily
from .grids import DensityField, Grid, coarsen, energy
from .mappings import MappingSpec, ess_sup_dilatation, min_stretch, winds_m_times
from .pushforward import (
    pushforward_density,
    pushforward_family,
    pushforward_line_integral,
    rhs_integral,
    _star_values_at,
)
from .solver import ModulusReport, SolverOptions, p_modulus


@dataclass
class VerificationReport:
    """Both sides of the inequality plus the proof-chain residuals."""

    lhs: float
    rhs: float
    slack: float
    p: float
    m: int
    rho_tilde_energy: float | None = None
    admissibility_residual: float | None = None
    intermediate_checks: dict = field(default_factory=dict)
    tol_total: float = 0.0
    passed: bool = True
    failures: list[str] = field(default_factory=list)
    lhs_analytic: float | None = None
    lhs_source: str = "solver"
    modulus_report: ModulusReport | None = None
    diagnostics: dict = field(default_factory=dict)


def _sample_indices(n: int, k: int) -> np.ndarray:
    if n <= k:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, k).round().astype(int))


def _initial_arc(nc_curve: Curve, h: float) -> Curve:
    """Restriction of an arc-length-parametrized curve to [0, h]."""
    params = nc_curve.params
    idx = int(np.searchsorted(params, h, side="right"))
    ts = params[:idx]
    pts = nc_curve.points[:idx]
    if ts[-1] < h:
        ts = np.append(ts, h)
        pts = np.vstack([pts, nc_curve.evaluate(np.array([h]))[0]])
    if len(ts) < 2:
        raise PreconditionError("initial arc degenerate; curve too coarsely sampled")
    return Curve(ts, pts, closed=False)


def _branch_assignment(f: MappingSpec, centers: np.ndarray) -> list[np.ndarray]:
    """Partition source points among branch inverses by round-trip matching."""
    images = f.evaluate(centers)
    scale = 1.0 + np.linalg.norm(centers, axis=1)
    masks = []
    for br in f.branch_inverses:
        defined = br.defined_at(images)
        back = np.zeros_like(centers)
        if np.any(defined):
            back[defined] = br.inverse(images[defined])
        err = np.linalg.norm(back - centers, axis=1)
        masks.append(defined & (err <= 1e-8 * scale))
    return masks


def _change_of_variables_residual(
    rho: DensityField, f: MappingSpec, p: float, image_grid: Grid
) -> float:
    """Worst relative mismatch of the per-branch change of variables.

    For each injective branch, the dilatation-weighted energy over the branch
    set must equal the energy of the branch density over the image.
    """
    from .mappings import inner_dilatation

    centers = rho.grid.cell_centers()
    excluded = f.excluded_at(centers)
    vals = rho.values.reshape(-1)
    K = np.asarray(inner_dilatation(f, centers, p), dtype=float)
    masks = _branch_assignment(f, centers)

    ys = image_grid.cell_centers()
    vol_src = rho.grid.cell_measure
    vol_img = image_grid.cell_measure

    worst = 0.0
    for br, mask in zip(f.branch_inverses, masks):
        live = mask & ~excluded & np.isfinite(K)
        lhs = float(np.sum(K[live] * vals[live] ** p)) * vol_src
        defined = br.defined_at(ys)
        rho_k = np.zeros(len(ys))
        if np.any(defined):
            xs = np.asarray(br.inverse(ys[defined]), dtype=float)
            rho_k[defined] = _star_values_at(rho, f, xs)
        rhs = float(np.sum(rho_k**p)) * vol_img
        denom = max(lhs, rhs, 1e-300)
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst


def _power_mean_violation(
    rho: DensityField, f: MappingSpec, p: float, m: int, image_grid: Grid
) -> float:
    """Max violation of ((1/m) sum of s branch values)^p <= (1/m) sum of p-th powers."""
    ys = image_grid.cell_centers()
    branch_vals = np.zeros((len(f.branch_inverses), len(ys)))
    for k, br in enumerate(f.branch_inverses):
        defined = br.defined_at(ys)
        if np.any(defined):
            xs = np.asarray(br.inverse(ys[defined]), dtype=float)
            branch_vals[k, defined] = _star_values_at(rho, f, xs)
    branch_vals = np.sort(branch_vals, axis=0)[::-1]  # descending
    take = min(m, len(f.branch_inverses))
    worst = 0.0
    prefix = np.zeros(len(ys))
    prefix_p = np.zeros(len(ys))
    for s in range(take):
        row = branch_vals[s]
        finite = np.isfinite(row)
        prefix = prefix + np.where(finite, row, 0.0)
        prefix_p = prefix_p + np.where(finite, row, 0.0) ** p
        lhs = (prefix / m) ** p
        rhs = prefix_p / m
        worst = max(worst, float(np.max(lhs - rhs, initial=0.0)))
    return worst


def _lift_checks(
    fam: CurveFamily,
    f: MappingSpec,
    image_field: DensityField,
    m: int,
    indices: np.ndarray,
    winding_tol: float,
) -> dict:
    """Loop splitting, lift distinctness, and the unit-speed chain bound."""
    loop_err = 0.0
    min_sep = np.inf
    chain_excess = 0.0
    for i in indices:
        alpha = fam.curves[int(i)]
        beta = f.map_curve(alpha)
        total = beta.total_length
        if total <= 0:
            continue
        nc = normal_representation(beta)
        h = total / m
        full = line_integral(image_field, beta)
        piece = line_integral(image_field, _initial_arc(nc.curve, h))
        loop_err = max(loop_err, abs(full - m * piece) / max(abs(full), 1e-300))

        alpha_star = f_representation(alpha, beta)
        vel = np.gradient(alpha_star.points, alpha_star.params, axis=0)
        speed = np.linalg.norm(vel, axis=1)
        pts = alpha_star.points
        interior = slice(1, -1)
        live = ~f.excluded_at(pts[interior])
        if np.any(live):
            stretch = np.asarray(min_stretch(f.derivative(pts[interior][live])))
            prod = stretch * speed[interior][live]
            chain_excess = max(chain_excess, float(np.max(prod - 1.0, initial=0.0)))

        if m > 1:
            rep = winds_m_times(f, alpha, m, tol=winding_tol)
            min_sep = min(min_sep, rep.min_separation)
    return {
        "loop_splitting_max_rel_err": loop_err,
        "lifted_separation_min": min_sep,
        "chain_rule_bound_max_excess": chain_excess,
    }


def _half_grid(grid: Grid) -> Grid:
    return Grid(grid.lo, grid.hi, tuple(max(2, k // 2) for k in grid.shape))


def _discretization_estimate(
    rho: DensityField,
    f: MappingSpec,
    p: float,
    m: int,
    image_grid: Grid,
    image_fam: CurveFamily | None = None,
    lhs: float | None = None,
    opts: SolverOptions | None = None,
) -> float:
    """One-refinement estimate: quantities recomputed at half resolution.

    Covers both the integral discretization (right side, pushforward energy)
    and, when the left side came from the solver, its own grid bias.
    """
    try:
        rho_c = coarsen(rho, 2)
    except ValueError:
        return 0.0
    coarse_img = _half_grid(image_grid)
    rhs_f = rhs_integral(rho, f, p, m)
    rhs_c = rhs_integral(rho_c, f, p, m)
    e_f = energy(pushforward_density(rho, f, m, image_grid).image_field, p)
    e_c = energy(pushforward_density(rho_c, f, m, coarse_img).image_field, p)
    if not (np.isfinite(rhs_f) and np.isfinite(rhs_c)):
        return 0.0
    est = abs(rhs_f - rhs_c) + abs(e_f - e_c)
    if lhs is not None and opts is not None and np.isfinite(lhs):
        try:
            lhs_c = p_modulus(image_fam, p, coarse_img, opts).value
            if np.isfinite(lhs_c):
                est += abs(lhs - lhs_c)
        except Exception:
            pass
    return est


def verify_winding_inequality(
    fam: CurveFamily,
    f: MappingSpec,
    rho: DensityField,
    p: float,
    m: int,
    image_grid: Grid,
    opts: SolverOptions | None = None,
    *,
    lhs_mode: str = "auto",
    check_curves: int = 5,
    winding_check: str = "sample",
    winding_tol: float = 1e-4,
    run_checks: bool = True,
    cov_rtol: float = 0.03,
    loop_rtol: float = 1e-2,
    chain_rtol: float = 1e-2,
) -> VerificationReport:
    """Verify the m-winding modulus inequality for one admissible density.

    The left side is the modulus of the pushed-forward family (from the
    solver, or the closed form when one is known and allowed); the right side
    is the dilatation-weighted density energy over the source, divided by m.
    The report also carries the pushforward-density energy, its admissibility
    over the image family, and the named residuals of the intermediate
    identities.
    """
    opts = opts or SolverOptions()
    if m < 1:
        raise PreconditionError("m must be a positive integer")
    if p < 1:
        raise PreconditionError("p must be at least 1")
    if not f.attributes.all():
        raise PreconditionError(
            f"mapping {f.name!r} lacks the declared regularity attributes"
        )

    ok, worst, worst_idx = is_admissible(rho, fam, tol=opts.admissibility_tol)
    if not ok:
        raise PreconditionError(
            f"density is not admissible for the family: curve {worst_idx} "
            f"has slack {worst:.3e}"
        )

    indices = _sample_indices(len(fam), check_curves)
    if m > 1 and winding_check != "skip":
        to_check = np.arange(len(fam)) if winding_check == "full" else indices
        for i in to_check:
            rep = winds_m_times(f, fam.curves[int(i)], m, tol=winding_tol)
            if not rep.winds:
                raise PreconditionError(
                    f"mapping does not wind curve {int(i)} exactly {m} times "
                    f"(closure residual {rep.closure_residual:.3e}, "
                    f"separation {rep.min_separation:.3e})"
                )

    image_fam = pushforward_family(fam, f)
    lhs_analytic = analytic_image_modulus(
        fam.kind, fam.generator_params, f.name, f.params, p
    )

    modulus_report: ModulusReport | None = None
    if lhs_mode == "analytic" or (lhs_mode == "auto" and lhs_analytic is not None):
        if lhs_analytic is None:
            raise PreconditionError("no closed form available for this image family")
        lhs = lhs_analytic
        lhs_source = "analytic"
    elif lhs_mode in ("solver", "auto"):
        modulus_report = p_modulus(image_fam, p, image_grid, opts)
        lhs = modulus_report.value
        lhs_source = "solver"
    else:
        raise ValueError(f"unknown lhs_mode {lhs_mode!r}")

    rhs = rhs_integral(rho, f, p, m)
    pf = pushforward_density(rho, f, m, image_grid)
    rho_tilde_energy = energy(pf.image_field, p)
    # Admissibility of the pushforward density over the image family: evaluate
    # it as a function at curve midpoints (no image-grid storage error).
    adm_indices = _sample_indices(len(image_fam), max(check_curves, 16))
    adm_residual = min(
        pushforward_line_integral(rho, f, m, image_fam.curves[int(i)]) - 1.0
        for i in adm_indices
    )
    _, grid_adm_residual, _ = is_admissible(pf.image_field, image_fam, tol=np.inf)

    checks: dict = {}
    if run_checks:
        checks.update(
            _lift_checks(fam, f, pf.image_field, m, indices, winding_tol)
        )
        checks["change_of_variables_max_rel_err"] = _change_of_variables_residual(
            rho, f, p, image_grid
        )
        checks["power_mean_max_violation"] = _power_mean_violation(
            rho, f, p, m, image_grid
        )

    disc = _discretization_estimate(
        rho,
        f,
        p,
        m,
        image_grid,
        image_fam=image_fam,
        lhs=lhs if lhs_source == "solver" else None,
        opts=opts,
    )
    scale = max(abs(lhs), abs(rhs)) if np.isfinite(rhs) else abs(lhs)
    tol_total = opts.tolerance * scale + 3.0 * disc

    failures: list[str] = []
    slack = rhs - lhs
    if not slack >= -tol_total:
        failures.append("slack")
    if adm_residual < -opts.admissibility_tol:
        failures.append("pushforward_admissibility")
    if not lhs <= rho_tilde_energy + tol_total:
        failures.append("chain_image_modulus_vs_pushforward_energy")
    if not rho_tilde_energy <= rhs + tol_total:
        failures.append("chain_pushforward_energy_vs_rhs")
    if run_checks:
        if checks["loop_splitting_max_rel_err"] > loop_rtol:
            failures.append("loop_splitting")
        if m > 1 and not checks["lifted_separation_min"] > winding_tol:
            failures.append("lifted_points_distinct")
        if checks["chain_rule_bound_max_excess"] > chain_rtol:
            failures.append("chain_rule_bound")
        if checks["change_of_variables_max_rel_err"] > cov_rtol:
            failures.append("change_of_variables")
        if checks["power_mean_max_violation"] > 1e-9 * max(rho_tilde_energy, 1.0):
            failures.append("power_mean")

    diagnostics = {
        "discretization_estimate": disc,
        "grid_admissibility_residual": grid_adm_residual,
    }
    if modulus_report is not None:
        diagnostics.update(
            {
                "lhs_solver_iterations": modulus_report.iterations,
                "lhs_dual_gap": modulus_report.dual_gap_estimate,
            }
        )

    return VerificationReport(
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        p=p,
        m=m,
        rho_tilde_energy=rho_tilde_energy,
        admissibility_residual=adm_residual,
        intermediate_checks=checks,
        tol_total=tol_total,
        passed=not failures,
        failures=failures,
        lhs_analytic=lhs_analytic,
        lhs_source=lhs_source,
        modulus_report=modulus_report,
        diagnostics=diagnostics,
    )


def verify_esssup_inequality(
    fam: CurveFamily,
    f: MappingSpec,
    m: int,
    source_grid: Grid,
    image_grid: Grid,
    opts: SolverOptions | None = None,
    *,
    lhs_mode: str = "auto",
) -> VerificationReport:
    """Verify the essential-supremum corollary at p = n.

    The image modulus must not exceed (ess sup K / m) times the source
    modulus, with the conformal exponent p equal to the dimension.
    """
    opts = opts or SolverOptions()
    if not f.attributes.all():
        raise PreconditionError(
            f"mapping {f.name!r} lacks the declared regularity attributes"
        )
    p = float(f.dim)
    k_ess = ess_sup_dilatation(f, p, source_grid)
    if not np.isfinite(k_ess):
        raise NotApplicableError(
            "essential supremum of the dilatation is infinite; the corollary "
            "gives no bound"
        )

    source_report = p_modulus(fam, p, source_grid, opts)
    image_fam = pushforward_family(fam, f)
    lhs_analytic = analytic_image_modulus(
        fam.kind, fam.generator_params, f.name, f.params, p
    )
    modulus_report: ModulusReport | None = None
    if lhs_mode == "analytic" or (lhs_mode == "auto" and lhs_analytic is not None):
        if lhs_analytic is None:
            raise PreconditionError("no closed form available for this image family")
        lhs = lhs_analytic
        lhs_source = "analytic"
    else:
        modulus_report = p_modulus(image_fam, p, image_grid, opts)
        lhs = modulus_report.value
        lhs_source = "solver"

    rhs = k_ess / m * source_report.value
    tol_total = 2.0 * opts.tolerance * max(abs(lhs), abs(rhs))
    slack = rhs - lhs
    failures = [] if slack >= -tol_total else ["slack"]

    return VerificationReport(
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        p=p,
        m=m,
        intermediate_checks={
            "ess_sup_dilatation": k_ess,
            "source_modulus": source_report.value,
        },
        tol_total=tol_total,
        passed=not failures,
        failures=failures,
        lhs_analytic=lhs_analytic,
        lhs_source=lhs_source,
        modulus_report=modulus_report,
        diagnostics={
            "source_solver_iterations": source_report.iterations,
            "source_dual_gap": source_report.dual_gap_estimate,
        },
    )
