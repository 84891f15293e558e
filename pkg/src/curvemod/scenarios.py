"""Scenario schema and builders: from config records to solver inputs.

A scenario is one experiment: a command, a mapping, a family generator, a
density choice, grids, and solver options.  Files are YAML (JSON is a subset)
with a versioned schema key.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator

from . import analytic
from .errors import ScenarioError
from .families import (
    CurveFamily,
    circles_family,
    family_from_json,
    radial_family,
    segment_bundle,
)
from .grids import DensityField, Grid, constant_density, density_from_function
from .mappings import MappingSpec, identity_map, linear_map, power_map, radial_stretch
from .pushforward import pushforward_family
from .solver import SolverOptions, make_admissible

SCHEMA_VERSION = 1

CommandName = Literal[
    "compute-modulus", "verify-theorem2", "verify-corollary1", "sweep"
]


class GridConfig(BaseModel):
    box: list[list[float]]
    resolution: list[int]

    @model_validator(mode="after")
    def _check(self):
        if len(self.box) != 2 or len(self.box[0]) != len(self.box[1]):
            raise ValueError("box must be [[lo...], [hi...]] of equal lengths")
        if len(self.resolution) != len(self.box[0]):
            raise ValueError("resolution must list cells per axis")
        if any(k < 2 for k in self.resolution):
            raise ValueError("resolution must be at least 2 per axis")
        if any(h <= l for l, h in zip(self.box[0], self.box[1])):
            raise ValueError("box upper bounds must exceed lower bounds")
        return self


class MappingConfig(BaseModel):
    key: Literal["identity", "linear", "power", "radial-stretch"] = "identity"
    dim: int = Field(default=2, ge=2, le=3)
    m: int = Field(default=2, ge=1)
    a: float = Field(default=3.0, gt=0)
    matrix: list[list[float]] | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.key == "linear" and self.matrix is None:
            raise ValueError("linear mapping requires a matrix")
        return self


class FamilyConfig(BaseModel):
    kind: Literal[
        "radial-connecting", "separating-circles", "segment-bundle", "custom"
    ]
    r: float = Field(default=1.0, gt=0)
    R: float | None = None
    count: int = Field(default=100, ge=0)
    samples: int | None = Field(default=None, ge=2)
    loops: int = Field(default=1, ge=1)
    box: list[list[float]] | None = None
    curves_file: str | None = None
    curves_json: str | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind in ("radial-connecting", "separating-circles"):
            if self.R is None:
                raise ValueError(f"family kind {self.kind!r} requires R")
            if not 0 < self.r < self.R:
                raise ValueError("family radii must satisfy 0 < r < R")
        if self.kind == "custom" and not (self.curves_file or self.curves_json):
            raise ValueError("custom family needs curves_file or curves_json")
        return self


class DensityConfig(BaseModel):
    kind: Literal[
        "auto",
        "annulus-connecting-extremal",
        "annulus-separating-extremal",
        "constant",
        "scaled-random",
        "file",
    ] = "auto"
    value: float = Field(default=1.0, ge=0)
    seed: int = 0
    file: str | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "file" and self.file is None:
            raise ValueError("density kind 'file' requires a file path")
        return self


class SolverConfig(BaseModel):
    tolerance: float = Field(default=0.01, gt=0)
    feasibility_tol: float = Field(default=1e-3, gt=0)
    max_iterations: int = Field(default=100_000, ge=1)
    batch_size: int = Field(default=128, ge=1)
    active_set_cap: int | None = Field(default=None, ge=1)
    admissibility_tol: float = Field(default=0.02, ge=0)
    deterministic: bool = True

    def to_options(self) -> SolverOptions:
        return SolverOptions(
            tolerance=self.tolerance,
            feasibility_tol=self.feasibility_tol,
            max_iterations=self.max_iterations,
            batch_size=self.batch_size,
            active_set_cap=self.active_set_cap,
            admissibility_tol=self.admissibility_tol,
            deterministic=self.deterministic,
        )


class VerifyConfig(BaseModel):
    lhs_mode: Literal["auto", "solver", "analytic"] = "auto"
    winding_check: Literal["sample", "full", "skip"] = "sample"
    check_curves: int = Field(default=5, ge=1)
    # must exceed the polyline closure error ~ (loop length / samples)^2 * curvature;
    # genuine winding failures produce residuals of order one
    winding_tol: float = Field(default=1e-4, gt=0)


class SweepConfig(BaseModel):
    command: Literal[
        "compute-modulus", "verify-theorem2", "verify-corollary1"
    ] = "verify-theorem2"
    m: list[int] | None = None
    p: list[float] | None = None
    R: list[float] | None = None
    resolution: list[int] | None = None

    @model_validator(mode="after")
    def _check(self):
        if not any([self.m, self.p, self.R, self.resolution]):
            raise ValueError("sweep must vary at least one of m, p, R, resolution")
        return self


class Scenario(BaseModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str
    command: CommandName
    mapping: MappingConfig = Field(default_factory=MappingConfig)
    family: FamilyConfig
    density: DensityConfig = Field(default_factory=DensityConfig)
    p: float = Field(default=2.0, ge=1)
    m: int = Field(default=1, ge=1)
    source_grid: GridConfig
    image_grid: GridConfig | None = None
    solver: SolverConfig = Field(default_factory=SolverConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    outputs: list[Literal["report", "csv", "heatmap", "density"]] = Field(
        default_factory=lambda: ["report"]
    )
    sweep: SweepConfig | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.command == "sweep" and self.sweep is None:
            raise ValueError("sweep command requires a sweep block")
        return self


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file, with line/key diagnostics on failure."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: scenario file must hold a mapping of keys")
    return scenario_from_dict(raw, origin=str(path))


def scenario_from_dict(raw: dict, origin: str = "<inline>") -> Scenario:
    try:
        return Scenario.model_validate(raw)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}"
            for err in exc.errors()
        )
        raise ScenarioError(f"{origin}: invalid scenario ({details})") from exc


# ---------------------------------------------------------------------------
# builders


def build_grid(cfg: GridConfig) -> Grid:
    return Grid(tuple(cfg.box[0]), tuple(cfg.box[1]), tuple(cfg.resolution))


def build_mapping(cfg: MappingConfig) -> MappingSpec:
    if cfg.key == "identity":
        return identity_map(cfg.dim)
    if cfg.key == "linear":
        return linear_map(cfg.matrix)
    if cfg.key == "power":
        return power_map(cfg.m)
    if cfg.key == "radial-stretch":
        return radial_stretch(cfg.a, cfg.dim)
    raise ScenarioError(f"unknown mapping key {cfg.key!r}")


def auto_samples(length: float, grid: Grid, minimum: int = 64, maximum: int = 4096) -> int:
    """Samples needed so curve segments stay finer than the grid cells.

    Coarser sampling lets the midpoint quadrature undercut the continuum line
    integral, which the solver then exploits.
    """
    min_width = float(grid.widths.min())
    return int(np.clip(math.ceil(2.5 * length / min_width), minimum, maximum))


def build_family(cfg: FamilyConfig, grid: Grid) -> CurveFamily:
    if cfg.kind == "radial-connecting":
        samples = cfg.samples or auto_samples(cfg.R - cfg.r, grid)
        return radial_family(cfg.r, cfg.R, cfg.count, samples)
    if cfg.kind == "separating-circles":
        samples = cfg.samples or auto_samples(2.0 * math.pi * cfg.R, grid)
        return circles_family(cfg.r, cfg.R, cfg.count, samples, loops=cfg.loops)
    if cfg.kind == "segment-bundle":
        box = cfg.box or [[0.0, 0.0], [1.0, 1.0]]
        (x0, y0), (x1, y1) = box
        samples = cfg.samples or auto_samples(x1 - x0, grid)
        return segment_bundle(cfg.count, samples, x0, x1, y0, y1)
    if cfg.kind == "custom":
        if cfg.curves_json is not None:
            return family_from_json(cfg.curves_json)
        return family_from_json(Path(cfg.curves_file).read_text())
    raise ScenarioError(f"unknown family kind {cfg.kind!r}")


def build_density(
    cfg: DensityConfig, grid: Grid, family_cfg: FamilyConfig, fam: CurveFamily
) -> DensityField:
    kind = cfg.kind
    if kind == "auto":
        if family_cfg.kind == "radial-connecting":
            kind = "annulus-connecting-extremal"
        elif family_cfg.kind == "separating-circles":
            kind = "annulus-separating-extremal"
        else:
            kind = "constant"
    if kind == "annulus-connecting-extremal":
        return analytic.annulus_connecting_density(grid, family_cfg.r, family_cfg.R)
    if kind == "annulus-separating-extremal":
        rho = analytic.annulus_separating_density(grid, family_cfg.r, family_cfg.R)
        if family_cfg.loops > 1:
            rho = rho.scaled(1.0 / family_cfg.loops)
        return rho
    if kind == "constant":
        if cfg.kind == "auto" and family_cfg.kind == "segment-bundle":
            box = family_cfg.box or [[0.0, 0.0], [1.0, 1.0]]
            (x0, y0), (x1, y1) = box
            width = x1 - x0

            def fn(pts):
                inside = (
                    (pts[:, 0] >= x0)
                    & (pts[:, 0] <= x1)
                    & (pts[:, 1] >= y0)
                    & (pts[:, 1] <= y1)
                )
                return np.where(inside, 1.0 / width, 0.0)

            return density_from_function(grid, fn)
        return constant_density(grid, cfg.value)
    if kind == "scaled-random":
        rng = np.random.default_rng(cfg.seed)
        raw = DensityField(grid, rng.uniform(0.1, 1.0, size=grid.shape))
        return make_admissible(raw, fam)
    if kind == "file":
        from .reporting import load_density

        return load_density(Path(cfg.file).read_text())
    raise ScenarioError(f"unknown density kind {kind!r}")


def default_image_grid(
    source: Grid, fam: CurveFamily, mapping: MappingSpec, margin: float = 0.05
) -> Grid:
    """Image grid for the pushed-forward problem.

    Identity and linear maps send the source box to a box, so the image grid
    is the exact image (curves then end on the box edge, where the clamped
    interpolation is unbiased).  For winding and radial maps the image of the
    box dwarfs the family's support, so the box comes from the image family's
    bounding bounding box plus a margin for the pushforward density's support.
    """
    if mapping.name in ("identity", "linear"):
        corners = np.array(
            [
                [source.lo[a] if (k >> a) & 1 == 0 else source.hi[a]
                 for a in range(source.dim)]
                for k in range(1 << source.dim)
            ]
        )
        images = mapping.evaluate(corners)
        return Grid(
            tuple(images.min(axis=0)), tuple(images.max(axis=0)), source.shape
        )
    image_fam = pushforward_family(fam, mapping)
    pts = np.vstack([c.points for c in image_fam.curves])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    lo = lo - margin * span
    hi = hi + margin * span
    return Grid(tuple(lo), tuple(hi), source.shape)


def build_image_grid(scenario: Scenario, source: Grid, fam: CurveFamily,
                     mapping: MappingSpec) -> Grid:
    if scenario.image_grid is not None:
        return build_grid(scenario.image_grid)
    return default_image_grid(source, fam, mapping)
