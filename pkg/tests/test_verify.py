import numpy as np
import pytest

from curvemod import (
    Grid,
    NotApplicableError,
    PreconditionError,
    SolverOptions,
    annulus_separating_density,
    circles_family,
    constant_density,
    identity_map,
    linear_map,
    power_map,
    segment_bundle,
    verify_esssup_inequality,
    verify_winding_inequality,
)
from curvemod.scenarios import default_image_grid

from conftest import E


def square_setup(res=96, count=120, samples=None):
    grid = Grid((0.0, 0.0), (1.0, 1.0), (res, res))
    fam = segment_bundle(count, samples or int(2.5 * res))
    rho = constant_density(grid, 1.0)
    return grid, fam, rho


def annulus_setup(res=128, circles=120, samples=516):
    grid = Grid((-E, -E), (E, E), (res, res))
    fam = circles_family(1.0, E, circles, samples)
    rho = annulus_separating_density(grid, 1.0, E)
    return grid, fam, rho


class TestWindingInequality:
    def test_identity_square_equality(self):
        grid, fam, rho = square_setup()
        f = identity_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 2.0, 1, img, lhs_mode="solver")
        assert rep.passed, rep.failures
        assert rep.lhs == pytest.approx(1.0, rel=0.03)
        assert rep.rhs == pytest.approx(1.0, rel=0.03)
        assert abs(rep.slack) <= rep.tol_total

    def test_linear_diag_strict_inequality(self):
        grid, fam, rho = square_setup()
        f = linear_map([[2.0, 0.0], [0.0, 1.0]])
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 2.0, 1, img, lhs_mode="solver")
        assert rep.passed
        assert rep.lhs == pytest.approx(0.5, rel=0.03)
        assert rep.rhs == pytest.approx(2.0, rel=0.03)
        assert rep.slack == pytest.approx(1.5, abs=0.1)

    @pytest.mark.parametrize("m", [2, 3])
    def test_power_map_equality_case(self, m):
        # samples divisible by 6 keep the image polyline exactly m-periodic
        grid, fam, rho = annulus_setup(samples=516 if m == 2 else 516)
        f = power_map(m)
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 2.0, m, img, lhs_mode="solver")
        target = 1.0 / (2 * np.pi * m)
        assert rep.passed, rep.failures
        assert rep.lhs == pytest.approx(target, rel=0.08)
        assert rep.rhs == pytest.approx(target, rel=0.08)
        assert rep.slack >= -rep.tol_total
        assert rep.lhs_analytic == pytest.approx(target, rel=1e-12)

    def test_chain_inequalities(self):
        grid, fam, rho = annulus_setup()
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 2.0, 2, img, lhs_mode="solver")
        assert rep.lhs <= rep.rho_tilde_energy + rep.tol_total
        assert rep.rho_tilde_energy <= rep.rhs + rep.tol_total

    def test_analytic_lhs_mode(self):
        grid, fam, rho = annulus_setup(res=96, circles=60, samples=400)
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 2.0, 2, img, lhs_mode="analytic")
        assert rep.lhs_source == "analytic"
        assert rep.lhs == pytest.approx(1 / (4 * np.pi), rel=1e-12)
        assert rep.passed, rep.failures

    def test_auto_prefers_analytic(self):
        grid, fam, rho = annulus_setup(res=96, circles=60, samples=400)
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 2.0, 2, img, lhs_mode="auto")
        assert rep.lhs_source == "analytic"

    def test_residuals_are_small_in_equality_case(self):
        grid, fam, rho = annulus_setup()
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 2.0, 2, img)
        checks = rep.intermediate_checks
        assert checks["loop_splitting_max_rel_err"] <= 1e-6
        assert checks["lifted_separation_min"] >= 0.5
        assert checks["chain_rule_bound_max_excess"] <= 1e-6
        assert checks["change_of_variables_max_rel_err"] <= 0.03
        assert checks["power_mean_max_violation"] <= 1e-12

    def test_inadmissible_density_rejected(self):
        grid, fam, _ = annulus_setup(res=64, circles=20, samples=256)
        bad = constant_density(grid, 1e-3)
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        with pytest.raises(PreconditionError, match="admissible"):
            verify_winding_inequality(fam, f, bad, 2.0, 2, img)

    def test_wrong_winding_count_rejected(self):
        grid, fam, rho = annulus_setup(res=64, circles=20, samples=256)
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        with pytest.raises(PreconditionError, match="wind"):
            verify_winding_inequality(fam, f, rho, 2.0, 3, img)

    def test_missing_attributes_rejected(self):
        from dataclasses import replace

        from curvemod import RegularityFlags

        grid, fam, rho = square_setup(res=48, count=20)
        f = replace(identity_map(2), attributes=RegularityFlags())
        img = default_image_grid(grid, fam, f)
        with pytest.raises(PreconditionError, match="attributes"):
            verify_winding_inequality(fam, f, rho, 2.0, 1, img)


class TestEssSupCorollary:
    def test_identity_equality(self):
        grid, fam, _ = square_setup(res=64, count=80)
        f = identity_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_esssup_inequality(fam, f, 1, grid, img, lhs_mode="solver")
        assert rep.passed
        assert rep.lhs == pytest.approx(rep.rhs, rel=0.02)
        assert rep.intermediate_checks["ess_sup_dilatation"] == pytest.approx(1.0)

    def test_power_halving(self):
        grid, fam, _ = annulus_setup(res=96, circles=60, samples=402)
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_esssup_inequality(fam, f, 2, grid, img, lhs_mode="solver")
        assert rep.passed
        # K = 1: the bound halves the source modulus
        assert rep.rhs == pytest.approx(rep.intermediate_checks["source_modulus"] / 2)
        assert rep.lhs == pytest.approx(rep.rhs, rel=0.08)

    def test_linear_diag(self):
        grid, fam, _ = square_setup(res=64, count=80)
        f = linear_map([[2.0, 0.0], [0.0, 1.0]])
        img = default_image_grid(grid, fam, f)
        rep = verify_esssup_inequality(fam, f, 1, grid, img, lhs_mode="solver")
        assert rep.passed
        assert rep.lhs == pytest.approx(0.5, rel=0.03)
        assert rep.rhs == pytest.approx(2.0, rel=0.03)

    def test_infinite_esssup_not_applicable(self):
        grid, fam, _ = square_setup(res=32, count=10)
        f = linear_map([[1.0, 0.0], [0.0, 0.0]])
        img = Grid((0.0, 0.0), (1.0, 1.0), (32, 32))
        with pytest.raises(NotApplicableError):
            verify_esssup_inequality(fam, f, 1, grid, img)


class TestChainProperty:
    """The pushforward chain must hold for any admissible density."""

    def test_random_admissible_densities(self, rng):
        from curvemod import DensityField, make_admissible

        grid, fam, _ = annulus_setup(res=96, circles=60, samples=402)
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        for seed in range(3):
            raw = DensityField(
                grid, np.random.default_rng(seed).uniform(0.1, 1.0, grid.shape)
            )
            rho = make_admissible(raw, fam)
            rep = verify_winding_inequality(
                fam, f, rho, 2.0, 2, img, lhs_mode="solver"
            )
            assert rep.lhs <= rep.rho_tilde_energy + rep.tol_total
            assert rep.rho_tilde_energy <= rep.rhs + rep.tol_total
            assert rep.slack >= -rep.tol_total

    def test_non_quadratic_exponent(self):
        grid, fam, rho = annulus_setup(res=96, circles=60, samples=402)
        f = power_map(2)
        img = default_image_grid(grid, fam, f)
        rep = verify_winding_inequality(fam, f, rho, 3.0, 2, img, lhs_mode="solver")
        assert rep.slack >= -rep.tol_total
        assert rep.lhs <= rep.rho_tilde_energy + rep.tol_total
        assert rep.rho_tilde_energy <= rep.rhs + rep.tol_total
