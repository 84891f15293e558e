import numpy as np
import pytest

from curvemod import AnalyticUnavailableError, analytic_annulus_modulus
from curvemod.analytic import analytic_image_modulus

from conftest import E


class TestClosedForms:
    def test_connecting(self):
        assert analytic_annulus_modulus("connecting", 1.0, E) == pytest.approx(
            2 * np.pi
        )

    def test_separating(self):
        assert analytic_annulus_modulus("separating", 1.0, E) == pytest.approx(
            1 / (2 * np.pi)
        )

    def test_connecting_wider_ring(self):
        assert analytic_annulus_modulus("connecting", 1.0, E**2) == pytest.approx(
            np.pi
        )

    def test_scale_invariance(self):
        # conformal invariant: only the ratio R/r matters
        assert analytic_annulus_modulus("connecting", 2.0, 2.0 * E) == pytest.approx(
            2 * np.pi
        )

    def test_unsupported(self):
        with pytest.raises(AnalyticUnavailableError):
            analytic_annulus_modulus("connecting", 1.0, E, p=3.0)
        with pytest.raises(AnalyticUnavailableError):
            analytic_annulus_modulus("connecting", 1.0, E, n=3)
        with pytest.raises(AnalyticUnavailableError):
            analytic_annulus_modulus("spiraling", 1.0, E)
        with pytest.raises(ValueError):
            analytic_annulus_modulus("connecting", 2.0, 1.0)


class TestImageModuli:
    def test_separating_under_power(self):
        params = {"r": 1.0, "R": E, "count": 10, "samples": 100}
        for m in (1, 2, 3):
            val = analytic_image_modulus(
                "separating-circles", params, "power", {"m": m}, 2.0
            )
            assert val == pytest.approx(1.0 / (2 * np.pi * m))

    def test_separating_identity(self):
        params = {"r": 1.0, "R": E}
        val = analytic_image_modulus("separating-circles", params, "identity", {}, 2.0)
        assert val == pytest.approx(1 / (2 * np.pi))

    def test_connecting_radial_stretch(self):
        params = {"r": 1.0, "R": E}
        val = analytic_image_modulus(
            "radial-connecting", params, "radial-stretch", {"a": 2.0}, 2.0
        )
        # image annulus (1, e^2): modulus pi
        assert val == pytest.approx(np.pi)

    def test_bundle_under_diagonal(self):
        params = {"box": [[0.0, 0.0], [1.0, 1.0]]}
        val = analytic_image_modulus(
            "segment-bundle", params, "linear", {"matrix": [[2.0, 0.0], [0.0, 1.0]]}, 2.0
        )
        assert val == pytest.approx(0.5)

    def test_unknown_returns_none(self):
        assert (
            analytic_image_modulus("segment-bundle", {}, "power", {"m": 2}, 2.0) is None
        )
        assert (
            analytic_image_modulus(
                "separating-circles", {"r": 1.0, "R": E}, "power", {"m": 2}, 3.0
            )
            is None
        )
