import numpy as np
import pytest

from curvemod import (
    Curve,
    DensityField,
    Grid,
    InconsistentLiftingError,
    InvalidCurveError,
    constant_density,
    density_from_function,
    f_representation,
    intersection_length,
    is_admissible,
    length_function,
    line_integral,
    normal_representation,
)
from curvemod.curves import line_integral_details

from conftest import E, random_curves


def segment(p0, p1, samples=2):
    ts = np.linspace(0.0, 1.0, samples)
    pts = np.outer(1 - ts, p0) + np.outer(ts, p1)
    return Curve(ts, pts)


def circle(r=1.0, samples=200, center=(0.0, 0.0)):
    ts = np.linspace(0.0, 2 * np.pi, samples + 1)
    pts = np.stack(
        [center[0] + r * np.cos(ts), center[1] + r * np.sin(ts)], axis=1
    )
    pts[-1] = pts[0]
    return Curve(ts, pts, closed=True)


class TestLengthFunction:
    def test_unit_segment(self):
        lf = length_function(segment([0, 0], [1, 0]))
        assert lf.total == pytest.approx(1.0, abs=1e-15)

    def test_quadratic_parameter(self):
        # gamma(t) = (t^2, 0): arc length equals t^2
        ts = np.linspace(0.0, 1.0, 1000)
        c = Curve(ts, np.stack([ts**2, np.zeros_like(ts)], axis=1))
        lf = length_function(c)
        assert np.max(np.abs(lf(ts) - ts**2)) <= 1e-3

    def test_circle_circumference(self):
        r = 1.7
        lf = length_function(circle(r, samples=10_000))
        assert lf.total == pytest.approx(2 * np.pi * r, rel=1e-4)

    def test_monotone_on_random_curves(self, rng):
        for c in random_curves(rng, 20):
            s = length_function(c).knots_s
            assert s[0] == 0.0
            assert np.all(np.diff(s) >= 0.0)

    def test_degenerate_rejected(self):
        with pytest.raises(InvalidCurveError):
            Curve(np.array([0.0]), np.array([[0.0, 0.0]]))
        with pytest.raises(InvalidCurveError):
            Curve(np.array([0.0, 0.0]), np.array([[0.0, 0.0], [1.0, 0.0]]))

    def test_closed_flag_checked(self):
        ts = np.linspace(0, 1, 8)
        pts = np.stack([ts, ts], axis=1)
        with pytest.raises(InvalidCurveError):
            Curve(ts, pts, closed=True)


class TestNormalRepresentation:
    def test_quadratic_becomes_unit_speed(self):
        ts = np.linspace(0.0, 1.0, 1000)
        c = Curve(ts, np.stack([ts**2, np.zeros_like(ts)], axis=1))
        nc = normal_representation(c)
        assert nc.total_length == pytest.approx(1.0, abs=1e-12)
        s = np.linspace(0, nc.total_length, 50)
        assert np.allclose(nc.evaluate(s)[:, 0], s, atol=1e-9)

    def test_unit_speed_property_discrete(self):
        c = circle(2.0, samples=4000)
        nc = normal_representation(c)
        # length of the restriction to [0, s_i] equals s_i
        partial = np.concatenate([[0.0], np.cumsum(nc.curve.segment_lengths)])
        assert np.allclose(partial, nc.curve.params, rtol=1e-6)

    def test_idempotent(self):
        c = circle(1.3, samples=500)
        once = normal_representation(c)
        twice = normal_representation(once.curve)
        assert np.allclose(once.curve.params, twice.curve.params, atol=1e-9)
        assert np.allclose(once.curve.points, twice.curve.points, atol=1e-9)

    def test_circle_closed_form(self):
        # radius-2 circle: gamma0(s) = 2(cos(s/2), sin(s/2)) up to polyline error
        nc = normal_representation(circle(2.0, samples=20_000))
        s = np.linspace(0, nc.total_length, 100)
        expected = 2.0 * np.stack([np.cos(s / 2), np.sin(s / 2)], axis=1)
        assert np.allclose(nc.evaluate(s), expected, atol=2e-3)

    def test_collapses_repeated_points(self):
        ts = np.array([0.0, 1.0, 2.0, 3.0])
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        nc = normal_representation(Curve(ts, pts))
        assert nc.curve.n_points == 3
        assert np.all(np.diff(nc.curve.params) > 0)


class TestLineIntegral:
    def test_zero_density(self, unit_square_grid, rng):
        rho = constant_density(unit_square_grid, 0.0)
        for c in random_curves(rng, 5):
            assert line_integral(rho, c) == 0.0

    def test_constant_density_unit_segment(self, unit_square_grid):
        rho = constant_density(unit_square_grid, 1.0)
        c = segment([0.0, 0.5], [1.0, 0.5], samples=300)
        assert line_integral(rho, c) == pytest.approx(1.0, rel=1e-12)

    def test_annulus_extremal_radial_segment(self):
        # rho = 1/(|x| log R) along a radius integrates to 1
        R = E
        grid = Grid((-R, -R), (R, R), (512, 512))

        def fn(pts):
            rad = np.linalg.norm(pts, axis=1)
            with np.errstate(divide="ignore"):
                vals = 1.0 / (rad * np.log(R))
            return np.where((rad >= 1.0) & (rad <= R), vals, 0.0)

        rho = density_from_function(grid, fn)
        ray = segment([1.0, 0.0], [R, 0.0], samples=4000)
        assert line_integral(rho, ray) == pytest.approx(1.0, abs=0.02)

    def test_parametrization_invariance(self, unit_square_grid, rng):
        rho = density_from_function(
            unit_square_grid, lambda pts: 1.0 + np.sin(3 * pts[:, 0]) ** 2 + pts[:, 1]
        )
        for c in random_curves(rng, 10):
            nc = normal_representation(c).curve
            assert line_integral(rho, c) == pytest.approx(
                line_integral(rho, nc), rel=1e-9
            )

    def test_out_of_domain_counts_skipped_length(self, unit_square_grid):
        rho = constant_density(unit_square_grid, 1.0)
        c = segment([-1.0, 0.5], [1.0, 0.5], samples=400)
        value, skipped = line_integral_details(rho, c)
        assert value == pytest.approx(1.0, abs=0.02)
        assert skipped == pytest.approx(1.0, abs=0.02)


class TestAdmissibility:
    def test_constant_density_horizontal_family(self, unit_square_grid):
        rho = constant_density(unit_square_grid, 1.0)
        fam = [segment([0, (i + 0.5) / 10], [1, (i + 0.5) / 10], 200) for i in range(10)]
        ok, worst, idx = is_admissible(rho, fam, tol=1e-9)
        assert ok
        assert worst == pytest.approx(0.0, abs=1e-9)

    def test_zero_density_not_admissible(self, unit_square_grid):
        rho = constant_density(unit_square_grid, 0.0)
        ok, worst, idx = is_admissible(rho, [segment([0, 0.5], [1, 0.5], 50)])
        assert not ok
        assert worst == pytest.approx(-1.0)
        assert idx == 0

    def test_empty_family_vacuous(self, unit_square_grid):
        ok, worst, idx = is_admissible(constant_density(unit_square_grid, 0.0), [])
        assert ok
        assert idx == -1

    def test_extremal_annulus_density_vs_rays(self):
        from curvemod import annulus_connecting_density, radial_family

        grid = Grid((-E, -E), (E, E), (256, 256))
        rho = annulus_connecting_density(grid, 1.0, E)
        fam = radial_family(1.0, E, 64, 1000)
        ok, worst, _ = is_admissible(rho, fam.curves, tol=0.02)
        assert ok
        assert abs(worst) <= 0.02

    def test_monotone_in_density(self, unit_square_grid, rng):
        fam = random_curves(rng, 6)
        base = rng.uniform(0.5, 1.0, size=unit_square_grid.shape)
        rho1 = DensityField(unit_square_grid, base)
        rho2 = DensityField(unit_square_grid, base + rng.uniform(0, 1, size=base.shape))
        ok1, _, _ = is_admissible(rho1, fam, tol=0.0)
        if ok1:
            ok2, _, _ = is_admissible(rho2, fam, tol=0.0)
            assert ok2


class TestIntersectionLength:
    def test_half_segment(self):
        c = segment([0, 0], [1, 0], samples=400)
        val = intersection_length(c, lambda pts: pts[:, 0] <= 0.5)
        assert val == pytest.approx(0.5, abs=1.0 / 399)

    def test_finite_point_set_is_null(self):
        c = segment([0, 0], [1, 0], samples=400)
        targets = np.array([[0.25, 0.0], [0.5, 0.0]])

        def indicator(pts):
            return np.any(
                np.all(np.abs(pts[:, None, :] - targets[None]) < 1e-12, axis=2), axis=1
            )

        assert intersection_length(c, indicator) <= 1.0 / 399

    def test_circle_upper_half_plane(self):
        c = circle(1.0, samples=20_000)
        val = intersection_length(c, lambda pts: pts[:, 1] > 0)
        assert val == pytest.approx(np.pi, abs=1e-3)

    def test_partition_property(self, rng):
        for c in random_curves(rng, 8):
            pred = lambda pts: pts[:, 0] + pts[:, 1] > 1.0
            comp = lambda pts: ~pred(pts)
            total = c.total_length
            seg_res = float(c.segment_lengths.max())
            both = intersection_length(c, pred) + intersection_length(c, comp)
            assert abs(both - total) <= seg_res + 1e-12


class TestFRepresentation:
    def test_complex_square_of_circle(self):
        # alpha = r e^{it}, beta = alpha^2: l_beta(t) = 2 r^2 t, so the lift
        # by image arc length is alpha*(s) = r e^{i s/(2 r^2)} on [0, 4 pi r^2]
        r = 1.4
        ts = np.linspace(0.0, 2 * np.pi, 6000)
        alpha_pts = np.stack([r * np.cos(ts), r * np.sin(ts)], axis=1)
        z = alpha_pts[:, 0] + 1j * alpha_pts[:, 1]
        w = z**2
        beta_pts = np.stack([w.real, w.imag], axis=1)
        alpha = Curve(ts, alpha_pts)
        beta = Curve(ts, beta_pts)
        star = f_representation(alpha, beta)
        assert star.params[-1] == pytest.approx(4 * np.pi * r**2, rel=1e-5)
        s = np.linspace(0, star.params[-1], 64)
        expected = np.stack(
            [r * np.cos(s / (2 * r**2)), r * np.sin(s / (2 * r**2))], axis=1
        )
        assert np.allclose(star.evaluate(s), expected, atol=5e-3)

    def test_identity_when_image_unit_speed(self):
        ts = np.linspace(0.0, 1.0, 50)
        pts = np.stack([ts, np.zeros_like(ts)], axis=1)
        c = Curve(ts, pts)
        star = f_representation(c, c)
        assert np.allclose(star.params, ts, atol=1e-12)
        assert np.allclose(star.points, pts)

    def test_constant_run_collapses(self):
        ts = np.linspace(0.0, 1.0, 11)
        beta_pts = np.stack([np.minimum(ts, 0.5), np.zeros_like(ts)], axis=1)
        alpha_pts = np.stack([np.minimum(ts, 0.5) * 2, np.zeros_like(ts)], axis=1)
        star = f_representation(Curve(ts, alpha_pts), Curve(ts, beta_pts))
        # the image stalls at t >= 0.5; the run collapses to one sample,
        # leaving the six knots with t <= 0.5
        assert star.n_points == 6
        assert star.params[-1] == pytest.approx(0.5)

    def test_inconsistent_lift_rejected(self):
        ts = np.linspace(0.0, 1.0, 11)
        beta_pts = np.stack([np.minimum(ts, 0.5), np.zeros_like(ts)], axis=1)
        alpha_pts = np.stack([ts, np.zeros_like(ts)], axis=1)  # keeps moving
        with pytest.raises(InconsistentLiftingError):
            f_representation(Curve(ts, alpha_pts), Curve(ts, beta_pts))

    def test_requires_shared_parameters(self):
        c1 = segment([0, 0], [1, 0], samples=10)
        c2 = segment([0, 0], [1, 0], samples=11)
        with pytest.raises(InvalidCurveError):
            f_representation(c1, c2)
