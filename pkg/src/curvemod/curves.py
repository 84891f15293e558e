"""Sampled curves: arc length, reparametrization, line integrals.

Curves are finite polylines. Every analytic statement about a continuum curve
is realized here at the curve's sampling resolution; refining the sampling is
the caller's control knob.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import InconsistentLiftingError, InvalidCurveError
from .grids import DensityField, interpolation_weights

# Relative tolerance for the closed-curve endpoint check.
CLOSED_REL_TOL = 1e-9
# A parameter run counts as constant when its arc increment is below this
# fraction of the curve's total length.
CONSTANT_RUN_REL_TOL = 1e-12


@dataclass
class Curve:
    """Polyline curve: strictly increasing parameters and sample points.

    Parameters
    ----------
    params : (N,) strictly increasing parameter values
    points : (N, dim) sample coordinates
    closed : whether first and last points coincide (checked)
    """

    params: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    closed: bool = False

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float).reshape(-1)
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2:
            raise InvalidCurveError("points must be a 2-d array (N, dim)")
        if len(params) != len(points):
            raise InvalidCurveError("params and points must have equal length")
        if len(params) < 2:
            raise InvalidCurveError("a curve needs at least 2 samples")
        if not np.all(np.isfinite(params)) or not np.all(np.isfinite(points)):
            raise InvalidCurveError("curve data must be finite")
        if np.any(np.diff(params) <= 0):
            raise InvalidCurveError("params must be strictly increasing")
        self.params = params
        self.points = points
        if self.closed:
            gap = float(np.linalg.norm(points[0] - points[-1]))
            if gap > CLOSED_REL_TOL * max(self.diameter, 1e-300):
                raise InvalidCurveError(
                    f"closed curve endpoints differ by {gap:g} beyond tolerance"
                )

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return len(self.params)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    @property
    def total_length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def diameter(self) -> float:
        """Bounding-box diagonal; an inexpensive diameter surrogate."""
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(np.linalg.norm(span))

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """Linear interpolation along the polyline, t clipped to the domain."""
        t = np.clip(np.asarray(t, dtype=float), self.params[0], self.params[-1])
        hi = np.searchsorted(self.params, t, side="right")
        hi = np.clip(hi, 1, len(self.params) - 1)
        lo = hi - 1
        t0 = self.params[lo]
        t1 = self.params[hi]
        w = (t - t0) / (t1 - t0)
        return self.points[lo] + w[..., None] * (self.points[hi] - self.points[lo])

    def transformed(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Curve":
        """Pointwise image under a map; parameter grid is kept."""
        pts = np.asarray(fn(self.points), dtype=float)
        return Curve(self.params.copy(), pts, closed=self.closed)

    def scaled(self, factor: float) -> "Curve":
        return Curve(self.params.copy(), self.points * factor, closed=self.closed)


@dataclass
class LengthFunction:
    """Cumulative arc length s_i of a curve restricted to [t_0, t_i]."""

    knots_t: np.ndarray = field(repr=False)
    knots_s: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.knots_s[-1])

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(t, dtype=float), self.knots_t, self.knots_s)


@dataclass
class NormalCurve:
    """Arc-length (unit-speed) reparametrization of a curve."""

    curve: Curve
    total_length: float

    def evaluate(self, s: np.ndarray) -> np.ndarray:
        return self.curve.evaluate(s)


def length_function(c: Curve) -> LengthFunction:
    """Cumulative polyline arc length at each knot."""
    s = np.concatenate([[0.0], np.cumsum(c.segment_lengths)])
    return LengthFunction(c.params.copy(), s)


def normal_representation(c: Curve) -> NormalCurve:
    """Reparametrize by arc length on [0, total_length].

    Zero-length sample runs collapse to a single sample so the parameter stays
    strictly increasing; applying the operation twice equals applying it once.
    """
    lf = length_function(c)
    s = lf.knots_s
    total = lf.total
    if total <= 0.0:
        raise InvalidCurveError("cannot normalize a curve of zero length")
    keep = np.concatenate([[True], np.diff(s) > 0.0])
    return NormalCurve(
        Curve(s[keep], c.points[keep], closed=c.closed), float(total)
    )


def line_integral_details(rho: DensityField, c: Curve) -> tuple[float, float]:
    """First-type line integral of rho along c, plus out-of-domain length.

    One midpoint sample per segment, multilinearly interpolated; the density
    extends by zero outside the grid box and the skipped length is reported.
    """
    mids = 0.5 * (c.points[:-1] + c.points[1:])
    lens = c.segment_lengths
    idx, w, inside = interpolation_weights(rho.grid, mids)
    flat = rho.values.reshape(-1)
    vals = np.einsum("cn,cn->n", w, flat[idx])
    value = float(np.dot(vals, lens))
    out_len = float(lens[~inside].sum())
    return value, out_len


def line_integral(rho: DensityField, c: Curve) -> float:
    return line_integral_details(rho, c)[0]


def is_admissible(
    rho: DensityField, curves: Iterable[Curve], tol: float = 0.0
) -> tuple[bool, float, int]:
    """Whether every line integral over the family reaches 1 - tol.

    Returns (admissible, worst_slack, worst_index) where slack is the signed
    excess (integral - 1) of the most violated curve.  An empty family is
    vacuously admissible with worst_index -1.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    worst = np.inf
    worst_idx = -1
    for i, c in enumerate(curves):
        slack = line_integral(rho, c) - 1.0
        if slack < worst:
            worst = slack
            worst_idx = i
    return bool(worst >= -tol), float(worst), worst_idx


def intersection_length(c: Curve, set_indicator: Callable[[np.ndarray], np.ndarray]) -> float:
    """Arc length of the part of c mapped into a set.

    Computed on the normal representation with one midpoint test per segment,
    so the result is exact up to one segment length at the set boundary.
    """
    nc = normal_representation(c).curve
    mids = 0.5 * (nc.points[:-1] + nc.points[1:])
    mask = np.asarray(set_indicator(mids), dtype=bool).reshape(-1)
    return float(nc.segment_lengths[mask].sum())


def f_representation(alpha: Curve, beta: Curve) -> Curve:
    """Reparametrize alpha by the arc length of beta (its image curve).

    Both curves must share the same parameter grid.  Wherever beta's length
    function is constant, alpha must be constant as well; such runs collapse
    to a single sample of the result.
    """
    if alpha.n_points != beta.n_points or not np.allclose(
        alpha.params, beta.params, rtol=0.0, atol=1e-12
    ):
        raise InvalidCurveError("alpha and beta must share one parameter grid")
    lf = length_function(beta)
    s = lf.knots_s
    total = lf.total
    if total <= 0.0:
        raise InvalidCurveError("image curve has zero length")

    run_tol = CONSTANT_RUN_REL_TOL * total
    advancing = np.diff(s) > run_tol
    keep = np.concatenate([[True], advancing])

    # alpha must not move on a constant run of the image length function
    alpha_tol = CLOSED_REL_TOL * max(alpha.diameter, 1e-300)
    if not np.all(advancing):
        step = np.linalg.norm(np.diff(alpha.points, axis=0), axis=1)
        drift = step[~advancing]
        if drift.size and float(drift.max()) > alpha_tol:
            raise InconsistentLiftingError(
                "lift varies on a parameter run where the image curve is constant"
            )

    s_kept = s[keep]
    pts_kept = alpha.points[keep]
    # collapse any residual ties so the parameter is strictly increasing
    strict = np.concatenate([[True], np.diff(s_kept) > 0.0])
    return Curve(s_kept[strict], pts_kept[strict], closed=alpha.closed)
