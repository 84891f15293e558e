"""Rectangular grids and nonnegative density fields.

A density is represented piecewise-constant per cell, with cell-center values.
Point evaluation uses multilinear interpolation of the cell-center values,
clamped at the box edges; points outside the box evaluate to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box split into a regular lattice of cells.

    Parameters
    ----------
    lo, hi : per-axis box bounds (length units), hi > lo componentwise
    shape : cells per axis, at least 2 per axis
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        shape = tuple(int(k) for k in self.shape)
        if not (len(lo) == len(hi) == len(shape)):
            raise ValueError("lo, hi and shape must have equal lengths")
        if len(shape) not in (2, 3):
            raise ValueError("only 2- and 3-dimensional grids are supported")
        if any(k < 2 for k in shape):
            raise ValueError("grid resolution must be at least 2 per axis")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("grid box must have positive extent per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def widths(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.shape)

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.widths))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def axis_centers(self, axis: int) -> np.ndarray:
        w = self.widths[axis]
        return self.lo[axis] + (np.arange(self.shape[axis]) + 0.5) * w

    def cell_centers(self) -> np.ndarray:
        """All cell centers as an (n_cells, dim) array in C order."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dim)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    def scaled(self, factor: float) -> "Grid":
        """Same resolution on the box dilated by `factor` about the origin."""
        return Grid(
            tuple(v * factor for v in self.lo),
            tuple(v * factor for v in self.hi),
            self.shape,
        )


@dataclass
class DensityField:
    """Nonnegative density on a grid, one value per cell (units length^-1)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        self.values = values

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def scaled(self, factor: float) -> "DensityField":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        return DensityField(self.grid, self.values * factor)


def constant_density(grid: Grid, value: float) -> DensityField:
    return DensityField(grid, np.full(grid.shape, float(value)))


def density_from_function(grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> DensityField:
    """Sample `fn` (vectorized over an (N, dim) array) at cell centers."""
    vals = np.asarray(fn(grid.cell_centers()), dtype=float).reshape(grid.shape)
    return DensityField(grid, vals)


def interpolation_weights(
    grid: Grid, pts: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Multilinear interpolation stencils from cell-center values.

    Returns (flat_indices, weights, inside) with shapes
    (2^dim, N), (2^dim, N) and (N,).  Weights are zero for points outside
    the box; corner indices are clamped at the box edges so constant fields
    interpolate exactly everywhere inside.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = grid.dim
    shape = np.asarray(grid.shape)
    lo = np.asarray(grid.lo)
    widths = grid.widths

    inside = grid.contains(pts)
    u = (pts - lo) / widths - 0.5
    i0 = np.floor(u).astype(np.int64)
    f = u - i0

    strides = np.ones(n, dtype=np.int64)
    for a in range(n - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]

    idx_list = []
    w_list = []
    for corner in range(1 << n):
        offs = [(corner >> a) & 1 for a in range(n)]
        idx = i0 + np.asarray(offs)
        w = np.ones(pts.shape[0])
        for a in range(n):
            w = w * (f[:, a] if offs[a] else 1.0 - f[:, a])
        np.clip(idx, 0, shape - 1, out=idx)
        flat = idx @ strides
        idx_list.append(flat)
        w_list.append(np.where(inside, w, 0.0))
    return np.stack(idx_list), np.stack(w_list), inside


def interpolate(rho: DensityField, pts: np.ndarray) -> np.ndarray:
    """Evaluate the density at points; zero outside the grid box."""
    idx, w, _ = interpolation_weights(rho.grid, pts)
    flat = rho.values.reshape(-1)
    return np.einsum("cn,cn->n", w, flat[idx])


def energy(rho: DensityField, p: float) -> float:
    """Integral of rho^p over the grid (cellwise sum)."""
    if p < 1:
        raise ValueError("exponent p must be at least 1")
    return float(np.sum(rho.values**p) * rho.grid.cell_measure)


def coarsen(rho: DensityField, factor: int = 2) -> DensityField:
    """Block-average onto a grid with `factor`-times fewer cells per axis.

    Trailing cells that do not fill a block are dropped; this is intended for
    discretization-error estimates, not for exact downsampling.
    """
    if factor < 2:
        raise ValueError("coarsening factor must be at least 2")
    shape = np.asarray(rho.grid.shape)
    new_shape = shape // factor
    if np.any(new_shape < 2):
        raise ValueError("grid too coarse to coarsen further")
    trimmed = rho.values[tuple(slice(0, k * factor) for k in new_shape)]
    n = rho.grid.dim
    reshaped = trimmed.reshape(
        *[d for k in new_shape for d in (int(k), factor)]
    )
    avg = reshaped.mean(axis=tuple(range(1, 2 * n, 2)))
    widths = rho.grid.widths
    hi = tuple(
        rho.grid.lo[a] + float(new_shape[a] * factor) * widths[a] for a in range(n)
    )
    grid = Grid(rho.grid.lo, hi, tuple(int(k) for k in new_shape))
    return DensityField(grid, avg)
