"""Curve families: generators, unions, and the exchange file format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .curves import Curve
from .errors import InvalidCurveError

FAMILY_SCHEMA = "curve-family/v1"


@dataclass
class CurveFamily:
    """A finite, explicitly sampled family of curves plus generator metadata."""

    curves: list[Curve]
    kind: str = "custom"
    generator_params: dict = field(default_factory=dict)

    def __post_init__(self):
        dims = {c.dim for c in self.curves}
        if len(dims) > 1:
            raise InvalidCurveError("curves in a family must share one dimension")

    def __len__(self) -> int:
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    @property
    def dim(self) -> int:
        if not self.curves:
            return 0
        return self.curves[0].dim

    def scaled(self, factor: float) -> "CurveFamily":
        return CurveFamily(
            [c.scaled(factor) for c in self.curves],
            kind=self.kind,
            generator_params={**self.generator_params, "scaled_by": factor},
        )


def family_union(f1: CurveFamily, f2: CurveFamily) -> CurveFamily:
    """Concatenate two families over the same ambient dimension."""
    if f1.curves and f2.curves and f1.dim != f2.dim:
        raise InvalidCurveError("cannot union families of different dimension")
    kind = f1.kind if f1.kind == f2.kind else "union"
    return CurveFamily(
        list(f1.curves) + list(f2.curves),
        kind=kind,
        generator_params={"left": f1.generator_params, "right": f2.generator_params},
    )


# ---------------------------------------------------------------------------
# generators


def radial_family(r: float, R: float, n_rays: int, samples: int) -> CurveFamily:
    """Straight rays joining the two boundary circles of the annulus r < |x| < R."""
    if not 0 < r < R:
        raise ValueError("radii must satisfy 0 < r < R")
    radii = np.linspace(r, R, samples)
    curves = []
    for k in range(n_rays):
        theta = 2.0 * np.pi * k / n_rays
        direction = np.array([np.cos(theta), np.sin(theta)])
        pts = radii[:, None] * direction[None, :]
        curves.append(Curve(radii.copy(), pts, closed=False))
    return CurveFamily(
        curves,
        kind="radial-connecting",
        generator_params={"r": r, "R": R, "count": n_rays, "samples": samples},
    )


def circles_family(
    r: float, R: float, n_circles: int, samples: int, loops: int = 1
) -> CurveFamily:
    """Concentric circles separating the boundary components of the annulus.

    With loops > 1 each circle is traversed that many times; line integrals
    then accumulate the corresponding multiple passes.
    """
    if not 0 < r < R:
        raise ValueError("radii must satisfy 0 < r < R")
    if loops < 1:
        raise ValueError("loops must be a positive integer")
    thetas = np.linspace(0.0, 2.0 * np.pi * loops, samples * loops + 1)
    curves = []
    for k in range(n_circles):
        radius = r + (k + 0.5) * (R - r) / n_circles
        pts = np.stack([radius * np.cos(thetas), radius * np.sin(thetas)], axis=1)
        pts[-1] = pts[0]
        curves.append(Curve(thetas.copy(), pts, closed=True))
    return CurveFamily(
        curves,
        kind="separating-circles",
        generator_params={
            "r": r,
            "R": R,
            "count": n_circles,
            "samples": samples,
            "loops": loops,
        },
    )


def segment_bundle(
    count: int,
    samples: int,
    x0: float = 0.0,
    x1: float = 1.0,
    y0: float = 0.0,
    y1: float = 1.0,
) -> CurveFamily:
    """Horizontal segments spanning [x0, x1] at evenly spaced heights in (y0, y1)."""
    if x1 <= x0 or y1 <= y0:
        raise ValueError("bundle box must have positive extent")
    xs = np.linspace(x0, x1, samples)
    curves = []
    for i in range(count):
        y = y0 + (i + 0.5) * (y1 - y0) / count
        pts = np.stack([xs, np.full_like(xs, y)], axis=1)
        curves.append(Curve(xs.copy(), pts, closed=False))
    return CurveFamily(
        curves,
        kind="segment-bundle",
        generator_params={
            "count": count,
            "samples": samples,
            "box": [[x0, y0], [x1, y1]],
        },
    )


def random_polyline_family(
    rng: np.random.Generator,
    count: int,
    lo: np.ndarray,
    hi: np.ndarray,
    knots: int = 5,
    samples: int = 120,
) -> CurveFamily:
    """Smooth-ish random polylines inside a box, for property suites."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    span = hi - lo
    curves = []
    for _ in range(count):
        ctrl = lo + rng.uniform(0.1, 0.9, size=(knots, len(lo))) * span
        ts = np.linspace(0.0, 1.0, samples)
        ctrl_t = np.linspace(0.0, 1.0, knots)
        pts = np.stack(
            [np.interp(ts, ctrl_t, ctrl[:, a]) for a in range(len(lo))], axis=1
        )
        curves.append(Curve(ts, pts, closed=False))
    return CurveFamily(curves, kind="random-polylines", generator_params={"count": count})


# ---------------------------------------------------------------------------
# exchange format


def family_to_json(fam: CurveFamily) -> str:
    doc = {
        "schema": FAMILY_SCHEMA,
        "kind": fam.kind,
        "generator_params": fam.generator_params,
        "curves": [
            {
                "params": c.params.tolist(),
                "points": c.points.tolist(),
                "closed": c.closed,
            }
            for c in fam.curves
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def family_from_json(text: str) -> CurveFamily:
    doc = json.loads(text)
    if doc.get("schema") != FAMILY_SCHEMA:
        raise InvalidCurveError(f"unknown family schema: {doc.get('schema')!r}")
    curves = [
        Curve(
            np.asarray(rec["params"], dtype=float),
            np.asarray(rec["points"], dtype=float),
            closed=bool(rec.get("closed", False)),
        )
        for rec in doc["curves"]
    ]
    return CurveFamily(curves, kind=doc.get("kind", "custom"),
                       generator_params=doc.get("generator_params", {}))
