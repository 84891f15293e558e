"""Closed-form oracles: annulus moduli, extremal densities, image moduli."""

from __future__ import annotations

import numpy as np

from .errors import AnalyticUnavailableError
from .grids import DensityField, Grid, density_from_function


def analytic_annulus_modulus(
    kind: str, r: float, R: float, p: float = 2.0, n: int = 2
) -> float:
    """Modulus of the classical annulus families in the plane.

    Implemented for n = 2, p = 2: connecting rays give 2*pi/log(R/r), the
    separating circles give log(R/r)/(2*pi).  Other combinations raise.
    """
    if not 0 < r < R:
        raise ValueError("radii must satisfy 0 < r < R")
    if n != 2 or p != 2.0:
        raise AnalyticUnavailableError(
            f"no closed form implemented for kind={kind!r}, p={p}, n={n}"
        )
    log_ratio = float(np.log(R / r))
    if kind == "connecting":
        return 2.0 * np.pi / log_ratio
    if kind == "separating":
        return log_ratio / (2.0 * np.pi)
    raise AnalyticUnavailableError(f"unknown annulus family kind: {kind!r}")


def _annulus_pad(grid: Grid) -> float:
    # Widen the annulus indicator by one cell: midpoint interpolation along
    # curves hugging the boundary circles then sees unshadowed values, at the
    # price of an O(cell width) energy overshoot.
    return float(grid.widths.max())


def annulus_connecting_density(grid: Grid, r: float, R: float) -> DensityField:
    """Extremal density 1/(|x| log(R/r)) of the connecting family, zero elsewhere."""
    if not 0 < r < R:
        raise ValueError("radii must satisfy 0 < r < R")
    log_ratio = np.log(R / r)
    pad = _annulus_pad(grid)

    def fn(pts):
        rad = np.linalg.norm(pts, axis=1)
        inside = (rad >= max(r - pad, r / 2)) & (rad <= R + pad)
        with np.errstate(divide="ignore"):
            vals = 1.0 / (rad * log_ratio)
        return np.where(inside, vals, 0.0)

    return density_from_function(grid, fn)


def annulus_separating_density(grid: Grid, r: float, R: float) -> DensityField:
    """Extremal density 1/(2*pi*|x|) of the separating family, zero elsewhere."""
    if not 0 < r < R:
        raise ValueError("radii must satisfy 0 < r < R")
    pad = _annulus_pad(grid)

    def fn(pts):
        rad = np.linalg.norm(pts, axis=1)
        inside = (rad >= max(r - pad, r / 2)) & (rad <= R + pad)
        with np.errstate(divide="ignore"):
            vals = 1.0 / (2.0 * np.pi * rad)
        return np.where(inside, vals, 0.0)

    return density_from_function(grid, fn)


def analytic_image_modulus(
    family_kind: str,
    generator_params: dict,
    mapping_name: str,
    mapping_params: dict,
    p: float,
) -> float | None:
    """Closed form for the modulus of a pushed-forward generator family.

    Covers the cases used by the verification scenarios; returns None when no
    closed form is known (callers then fall back to the solver).
    """
    if p != 2.0:
        return None
    r = generator_params.get("r")
    R = generator_params.get("R")

    if family_kind == "separating-circles" and r and R:
        loops = int(generator_params.get("loops", 1))
        if mapping_name == "identity":
            return analytic_annulus_modulus("separating", r, R) / loops**2
        if mapping_name == "power":
            m = int(mapping_params["m"])
            # image circles have radii between r^m and R^m, traversed m*loops times
            return analytic_annulus_modulus("separating", r**m, R**m) / (m * loops) ** 2
        if mapping_name == "radial-stretch":
            a = float(mapping_params["a"])
            return analytic_annulus_modulus("separating", r**a, R**a) / loops**2

    if family_kind == "radial-connecting" and r and R:
        if mapping_name == "identity":
            return analytic_annulus_modulus("connecting", r, R)
        if mapping_name == "radial-stretch":
            a = float(mapping_params["a"])
            return analytic_annulus_modulus("connecting", r**a, R**a)

    if family_kind == "segment-bundle":
        box = generator_params.get("box")
        if box is None:
            return None
        (x0, y0), (x1, y1) = box
        width = x1 - x0
        height = y1 - y0
        if mapping_name == "identity":
            return height / width
        if mapping_name == "linear":
            M = np.asarray(mapping_params["matrix"], dtype=float)
            if M.shape == (2, 2) and M[0, 1] == 0.0 and M[1, 0] == 0.0:
                return (abs(M[1, 1]) * height) / (abs(M[0, 0]) * width)

    return None
