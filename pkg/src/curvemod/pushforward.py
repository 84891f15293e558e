"""Pushforward of densities and families under catalog mappings.

The image density at y sums the m largest values of rho/min_stretch over the
branch preimages of y (equivalently: the supremum over preimage subsets of at
most m points, since all terms are nonnegative), scaled by 1/m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedMappingError
from .families import CurveFamily
from .grids import DensityField, Grid, interpolate
from .mappings import MappingSpec, inner_dilatation, min_stretch


def star_density(rho: DensityField, f: MappingSpec) -> DensityField:
    """Pointwise rho / min_stretch(f') off the excluded set, zero on it."""
    centers = rho.grid.cell_centers()
    excluded = f.excluded_at(centers)
    vals = np.zeros(len(centers))
    live = ~excluded
    if np.any(live):
        stretch = np.asarray(min_stretch(f.derivative(centers[live])))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = rho.values.reshape(-1)[live] / stretch
        ratio = np.where(np.isfinite(ratio), ratio, np.where(
            rho.values.reshape(-1)[live] > 0, np.inf, 0.0))
        vals[live] = ratio
    return DensityField(rho.grid, vals.reshape(rho.grid.shape))


def _star_values_at(rho: DensityField, f: MappingSpec, pts: np.ndarray) -> np.ndarray:
    """rho*/ evaluated at arbitrary source points (interpolated rho over exact stretch)."""
    vals = interpolate(rho, pts)
    stretch = np.asarray(min_stretch(f.derivative(pts)))
    out = np.zeros(len(pts))
    ok = stretch > 0
    out[ok] = vals[ok] / stretch[ok]
    out[~ok & (vals > 0)] = np.inf
    excluded = f.excluded_at(pts)
    out[excluded] = 0.0
    out[~rho.grid.contains(pts)] = 0.0
    return out


@dataclass
class PushforwardDensity:
    """The image-side density built from a source density and a mapping."""

    base: DensityField
    mapping: MappingSpec
    m: int
    image_field: DensityField


def pushforward_density(
    rho: DensityField, f: MappingSpec, m: int, image_grid: Grid
) -> PushforwardDensity:
    """Image density: (1/m) times the sum of the m largest branch values.

    For each image cell center the branch preimages inside the source box and
    off the excluded set contribute rho/min_stretch(f'); taking the m largest
    of these realizes the supremum over preimage subsets of cardinality <= m.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    if not f.branch_inverses:
        raise UnsupportedMappingError(
            f"mapping {f.name!r} declares no branch inverses; cannot push forward"
        )
    if f.winding_count > 1 and m > len(f.branch_inverses):
        raise UnsupportedMappingError(
            f"m={m} exceeds the {len(f.branch_inverses)} branches of {f.name!r}"
        )
    ys = image_grid.cell_centers()
    branch_vals = np.zeros((len(f.branch_inverses), len(ys)))
    for k, br in enumerate(f.branch_inverses):
        defined = br.defined_at(ys)
        if not np.any(defined):
            continue
        xs = np.asarray(br.inverse(ys[defined]), dtype=float)
        branch_vals[k, defined] = _star_values_at(rho, f, xs)
    take = min(m, len(f.branch_inverses))
    if len(f.branch_inverses) == 1:
        top_sum = branch_vals[0]
    else:
        branch_vals.sort(axis=0)  # ascending
        top_sum = branch_vals[-take:].sum(axis=0)
    image_vals = top_sum / m
    field = DensityField(image_grid, image_vals.reshape(image_grid.shape))
    return PushforwardDensity(rho, f, m, field)


def pushforward_values_at(
    rho: DensityField, f: MappingSpec, m: int, pts: np.ndarray
) -> np.ndarray:
    """Evaluate the pushforward density as a function at image points.

    Same construction as `pushforward_density` but without routing through an
    image grid, so no storage-interpolation error enters.
    """
    if not f.branch_inverses:
        raise UnsupportedMappingError(
            f"mapping {f.name!r} declares no branch inverses; cannot push forward"
        )
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    branch_vals = np.zeros((len(f.branch_inverses), len(pts)))
    for k, br in enumerate(f.branch_inverses):
        defined = br.defined_at(pts)
        if np.any(defined):
            xs = np.asarray(br.inverse(pts[defined]), dtype=float)
            branch_vals[k, defined] = _star_values_at(rho, f, xs)
    take = min(m, len(f.branch_inverses))
    if len(f.branch_inverses) > 1:
        branch_vals.sort(axis=0)
        top = branch_vals[-take:].sum(axis=0)
    else:
        top = branch_vals[0]
    return top / m


def pushforward_line_integral(rho: DensityField, f: MappingSpec, m: int, curve) -> float:
    """Line integral of the pushforward density (as a function) along a curve."""
    mids = 0.5 * (curve.points[:-1] + curve.points[1:])
    vals = pushforward_values_at(rho, f, m, mids)
    return float(np.dot(vals, curve.segment_lengths))


def pushforward_family(fam: CurveFamily, f: MappingSpec) -> CurveFamily:
    """Pointwise image family; parameter grids are preserved."""
    return CurveFamily(
        [f.map_curve(c) for c in fam],
        kind=f"image({fam.kind})",
        generator_params={
            **fam.generator_params,
            "mapping": f.name,
            "mapping_params": dict(f.params),
        },
    )


def rhs_integral(rho: DensityField, f: MappingSpec, p: float, m: int) -> float:
    """(1/m) * integral of K_{I,p} * rho^p over the source grid.

    Cells on the excluded set are skipped (it has measure zero); a cell with
    positive density and infinite dilatation makes the integral +inf.
    """
    if p < 1:
        raise ValueError("exponent p must be at least 1")
    if m < 1:
        raise ValueError("m must be a positive integer")
    centers = rho.grid.cell_centers()
    excluded = f.excluded_at(centers)
    vals = rho.values.reshape(-1)
    live = ~excluded
    K = np.asarray(inner_dilatation(f, centers[live], p), dtype=float)
    rho_live = vals[live]
    if np.any(np.isinf(K) & (rho_live > 0)):
        return np.inf
    finite = np.isfinite(K)
    total = float(np.sum(K[finite] * rho_live[finite] ** p))
    return total * rho.grid.cell_measure / m
