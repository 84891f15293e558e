"""Discrete p-modulus solver.

The modulus of a sampled family on a grid is the convex program

    minimize   sum_cells rho^p * cell_measure
    subject to line_integral(rho, curve) >= 1   for every curve,
               rho >= 0.

It is solved by constraint generation with dual ascent: violated curve
constraints enter an active set in batches, the restricted problem is solved
through its smooth concave dual (the primal minimizer is in closed form for
p > 1), and feasibility over the whole family is restored at the end by
scaling.  The scaled energy upper-bounds the discrete optimum while the dual
value lower-bounds it, so the reported gap is a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import SolverNonConvergenceError
from .families import CurveFamily
from .grids import DensityField, Grid, energy, interpolation_weights

# Below this exponent the dual primal-recovery map is numerically unusable
# and the problem is handled as a linear program.
LP_EXPONENT_TOL = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the modulus solver.

    tolerance is the certified relative duality gap of the returned value;
    feasibility_tol bounds the pre-scaling constraint violation at
    termination.  batch_size controls how many violated constraints join the
    active set per outer round, active_set_cap (if set) limits its total
    size, and deterministic documents that runs are bit-reproducible (the
    solver is single-threaded with fixed reduction order in either mode).
    """

    tolerance: float = 0.01
    feasibility_tol: float = 1e-3
    max_iterations: int = 100_000
    batch_size: int = 128
    active_set_cap: int | None = None
    armijo_c: float = 1e-4
    check_every: int = 10
    inner_round_budget: int = 2000
    admissibility_tol: float = 0.02
    deterministic: bool = True


@dataclass
class ModulusReport:
    """Result of a modulus computation with its certificates."""

    value: float
    p: float
    extremal_density: DensityField | None
    iterations: int = 0
    outer_rounds: int = 0
    active_constraints: int = 0
    max_constraint_violation: float = 0.0
    dual_lower_bound: float = 0.0
    dual_gap_estimate: float = 0.0
    empty_admissible_set: bool = False
    warnings: list[str] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def constraint_matrix(fam: CurveFamily, grid: Grid) -> tuple[sp.csr_matrix, dict]:
    """Sparse matrix of discrete line-integral functionals, one row per curve.

    Row i applied to a flat density vector gives the midpoint-rule line
    integral of the interpolated density along curve i.  Diagnostics report
    the out-of-domain length and how the coarsest curve sampling compares to
    the cell size (ratios above 1 undersample the quadrature).
    """
    rows, cols, vals = [], [], []
    out_of_domain = 0.0
    max_seg = 0.0
    for i, c in enumerate(fam):
        mids = 0.5 * (c.points[:-1] + c.points[1:])
        lens = c.segment_lengths
        if lens.size:
            max_seg = max(max_seg, float(lens.max()))
        idx, w, inside = interpolation_weights(grid, mids)
        out_of_domain += float(lens[~inside].sum())
        contrib = w * lens
        rows.append(np.full(idx.size, i, dtype=np.int64))
        cols.append(idx.ravel())
        vals.append(contrib.ravel())
    n = len(fam)
    if n:
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, grid.n_cells),
        ).tocsr()
        A.sum_duplicates()
    else:
        A = sp.csr_matrix((0, grid.n_cells))
    diagnostics = {
        "n_constraints": n,
        "nnz": int(A.nnz),
        "out_of_domain_length": out_of_domain,
        "sampling_ratio": max_seg / float(grid.widths.min()),
    }
    return A, diagnostics


def _solve_lp(A: sp.csr_matrix, vol: float, fam_size: int, opts: SolverOptions,
              grid: Grid, diagnostics: dict, warnings: list[str]) -> ModulusReport:
    """p = 1 path: plain linear program over the full constraint set."""
    from scipy.optimize import linprog

    n_cells = A.shape[1]
    res = linprog(
        c=np.full(n_cells, vol),
        A_ub=-A,
        b_ub=-np.ones(A.shape[0]),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise SolverNonConvergenceError(f"linear program failed: {res.message}")
    rho = np.asarray(res.x)
    v = A @ rho
    mn = float(v.min())
    if mn <= 0:
        raise SolverNonConvergenceError("linear program returned an infeasible point")
    density = DensityField(grid, (rho / mn).reshape(grid.shape))
    value = energy(density, 1.0)
    warnings.append(
        "p=1: value computed by linear programming; the minimizer may be "
        "non-unique, so only the value is meaningful"
    )
    return ModulusReport(
        value=value,
        p=1.0,
        extremal_density=density,
        iterations=int(res.nit) if res.nit is not None else 0,
        outer_rounds=1,
        active_constraints=fam_size,
        max_constraint_violation=max(0.0, 1.0 - float((v / mn).min())),
        dual_lower_bound=float(res.fun),
        dual_gap_estimate=max(0.0, value - float(res.fun)),
        warnings=warnings,
        diagnostics=diagnostics,
    )


def p_modulus(
    fam: CurveFamily, p: float, grid: Grid, opts: SolverOptions | None = None
) -> ModulusReport:
    """Compute the p-modulus of a sampled curve family on a grid.

    Returns a certified report: the extremal density is feasible after the
    final scaling, its energy is the reported value and the dual lower bound
    brackets the discrete optimum from below.  The empty family has modulus
    zero; a family containing a zero-length curve has modulus +inf because no
    density can satisfy its constraint.
    """
    opts = opts or SolverOptions()
    if p < 1:
        raise ValueError("exponent p must be at least 1")
    warnings: list[str] = []

    if len(fam) == 0:
        return ModulusReport(
            value=0.0,
            p=p,
            extremal_density=DensityField(grid, np.zeros(grid.shape)),
            diagnostics={"n_constraints": 0},
        )

    A, diagnostics = constraint_matrix(fam, grid)
    if diagnostics["sampling_ratio"] > 1.0:
        warnings.append(
            "curve sampling is coarser than the grid "
            f"(ratio {diagnostics['sampling_ratio']:.2f}); the midpoint "
            "quadrature may undercut the continuum integral - increase "
            "samples per curve"
        )

    row_mass = np.asarray(A.sum(axis=1)).ravel()
    if np.any(row_mass <= 0.0):
        bad = int(np.argmin(row_mass))
        degenerate = fam.curves[bad].total_length == 0.0
        warnings.append(
            f"curve {bad} has no admissible mass "
            + ("(zero length)" if degenerate else "(outside the grid box)")
            + "; no density satisfies its constraint"
        )
        return ModulusReport(
            value=np.inf,
            p=p,
            extremal_density=None,
            empty_admissible_set=True,
            warnings=warnings,
            diagnostics=diagnostics,
        )

    vol = grid.cell_measure
    if p <= 1.0 + LP_EXPONENT_TOL:
        if p != 1.0:
            warnings.append(f"p={p} treated as the linear-programming case p=1")
        return _solve_lp(A, vol, len(fam), opts, grid, diagnostics, warnings)

    return _dual_ascent(A, vol, p, grid, len(fam), opts, diagnostics, warnings)


def _dual_ascent(
    A: sp.csr_matrix,
    vol: float,
    p: float,
    grid: Grid,
    n_curves: int,
    opts: SolverOptions,
    diagnostics: dict,
    warnings: list[str],
) -> ModulusReport:
    pexp = 1.0 / (p - 1.0)

    def primal(q: np.ndarray) -> np.ndarray:
        # minimizer of the Lagrangian: rho = (A^T lam / (p vol))^(1/(p-1))
        return (q / (p * vol)) ** pexp

    def dual_value(lam_sum: float, q: np.ndarray, rho: np.ndarray) -> float:
        # g(lam) = sum(lam) - (1 - 1/p) * q . rho
        return lam_sum - (1.0 - 1.0 / p) * float(q @ rho)

    # Deterministic initial active set: every row starts equally violated, so
    # take the first batch in index order.
    batch = max(1, opts.batch_size)
    cap = opts.active_set_cap or n_curves
    active = list(range(min(min(batch, cap), n_curves)))

    A_act = A[active]
    At_act = A_act.T.tocsr()
    lam = np.zeros(len(active))

    best_ub = np.inf
    best_density: DensityField | None = None
    best_viol = np.inf
    g = 0.0  # dual value; nondecreasing across the whole run
    total_iters = 0
    outer_rounds = 0
    step = 1.0
    stuck_rounds = 0

    def build_report(value, density, lower, viol_post) -> ModulusReport:
        return ModulusReport(
            value=value,
            p=p,
            extremal_density=density,
            iterations=total_iters,
            outer_rounds=outer_rounds,
            active_constraints=len(active),
            max_constraint_violation=viol_post,
            dual_lower_bound=lower,
            dual_gap_estimate=max(0.0, value - lower),
            warnings=list(warnings),
            diagnostics=dict(diagnostics),
        )

    while total_iters < opts.max_iterations:
        outer_rounds += 1
        # --- inner ascent on the restricted dual (BB step + Armijo backtracking) ---
        q = At_act @ lam
        rho = primal(q)
        Arho_act = A_act @ rho
        g = dual_value(float(lam.sum()), q, rho)
        lam_prev = grad_prev = None
        stalled = 0
        progressed = False
        for _ in range(opts.inner_round_budget):
            if total_iters >= opts.max_iterations:
                break
            grad = 1.0 - Arho_act
            if lam_prev is not None:
                ds = lam - lam_prev
                dy = grad - grad_prev
                denom = -float(ds @ dy)
                step = float(ds @ ds) / denom if denom > 1e-300 else step * 2.0
            step = min(max(step, 1e-14), 1e14)
            trial = step
            accepted = False
            for _bt in range(60):
                lam_new = np.maximum(0.0, lam + trial * grad)
                move = lam_new - lam
                q_new = At_act @ lam_new
                rho_new = primal(q_new)
                g_new = dual_value(float(lam_new.sum()), q_new, rho_new)
                if g_new >= g + opts.armijo_c * float(grad @ move):
                    accepted = True
                    break
                trial *= 0.5
            total_iters += 1
            if not accepted:
                break
            if g_new > g:
                progressed = True
            improvement = g_new - g
            lam_prev, grad_prev = lam, grad
            lam, q, rho, g = lam_new, q_new, rho_new, g_new
            Arho_act = A_act @ rho
            if improvement <= 1e-12 * max(abs(g), 1.0):
                stalled += 1
                if stalled >= 5:
                    break
            else:
                stalled = 0

        # --- certification over the full family ---
        # lam extended by zeros is dual-feasible for the full problem, so g
        # lower-bounds the full discrete optimum; any scaled density gives an
        # upper bound.
        v = A @ rho
        mn = float(v.min())
        viol = 1.0 - v
        improved_best = False
        if mn > 0.0:
            density = DensityField(grid, (rho / mn).reshape(grid.shape))
            ub = energy(density, p)
            if ub < best_ub:
                best_ub = ub
                best_density = density
                best_viol = max(0.0, 1.0 - float((v / mn).min()))
                improved_best = True
        if np.isfinite(best_ub) and best_ub - g <= opts.tolerance * max(best_ub, 1e-300):
            return build_report(best_ub, best_density, g, best_viol)

        # --- grow the active set with the most violated rows ---
        added = 0
        active_mask = np.zeros(n_curves, dtype=bool)
        active_mask[active] = True
        candidates = np.where(~active_mask & (viol > opts.feasibility_tol))[0]
        if candidates.size and len(active) < cap:
            order = np.argsort(-viol[candidates], kind="stable")
            new_rows = candidates[order[: min(batch, cap - len(active))]]
            active.extend(int(i) for i in new_rows)
            A_act = A[active]
            At_act = A_act.T.tocsr()
            lam = np.concatenate([lam, np.zeros(len(new_rows))])
            added = len(new_rows)
        elif candidates.size and len(active) >= cap:
            msg = "active-set cap reached with violated constraints outstanding"
            if msg not in warnings:
                warnings.append(msg)

        if added == 0 and not progressed and not improved_best:
            stuck_rounds += 1
            if stuck_rounds >= 3:
                break  # numerically stationary; burning budget will not help
        else:
            stuck_rounds = 0

    gap_txt = (
        f"{(best_ub - g) / best_ub:.3e}" if np.isfinite(best_ub) and best_ub > 0 else "n/a"
    )
    raise SolverNonConvergenceError(
        f"no certified solution within budget ({total_iters} iterations, "
        f"best relative gap {gap_txt})",
        report=build_report(best_ub, best_density, g, best_viol)
        if best_density is not None
        else None,
    )


def scaled_problem(fam: CurveFamily, grid: Grid, factor: float) -> tuple[CurveFamily, Grid]:
    """Dilate a family and its grid box by one factor about the origin."""
    return fam.scaled(factor), grid.scaled(factor)


def make_admissible(rho: DensityField, fam: CurveFamily) -> DensityField:
    """Scale a density so the smallest family line integral equals 1."""
    from .curves import line_integral

    worst = min(line_integral(rho, c) for c in fam)
    if worst <= 0.0:
        raise ValueError("density has zero integral along some family curve")
    return rho.scaled(1.0 / worst)


def default_options(**overrides) -> SolverOptions:
    return replace(SolverOptions(), **overrides)
