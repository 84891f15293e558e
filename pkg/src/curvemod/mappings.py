"""Explicit mapping catalog: derivatives, dilatations, branches, winding.

Every mapping carries closed-form derivative and Jacobian callables plus the
branch inverses that make pushforward constructions computable.  Regularity
hypotheses that cannot be decided from samples are declared flags, true by
construction for catalog maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .curves import Curve, f_representation, length_function, normal_representation
from .errors import PreconditionError, UnsupportedMappingError
from .grids import Grid

# All entries of f'(x) below this magnitude count as the zero derivative.
ZERO_DERIVATIVE_TOL = 1e-14
# Radius below which a point counts as the origin (catalog excluded sets).
ORIGIN_TOL = 1e-12


@dataclass(frozen=True)
class RegularityFlags:
    """Hypotheses asserted by construction, not checked numerically."""

    differentiable_ae: bool = False
    discrete: bool = False
    open_map: bool = False
    luzin_n: bool = False
    luzin_n_inverse: bool = False
    acp_inverse: bool = False

    @classmethod
    def all_true(cls) -> "RegularityFlags":
        return cls(True, True, True, True, True, True)

    def all(self) -> bool:
        return (
            self.differentiable_ae
            and self.discrete
            and self.open_map
            and self.luzin_n
            and self.luzin_n_inverse
            and self.acp_inverse
        )


@dataclass(frozen=True)
class BranchInverse:
    """A local inverse on a region where the mapping is injective.

    `domain` is an image-side predicate ((N, dim) -> bool array) telling where
    the inverse is defined; None means everywhere.
    """

    inverse: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray], np.ndarray] | None = None

    def defined_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.domain is None:
            return np.ones(len(pts), dtype=bool)
        return np.asarray(self.domain(pts), dtype=bool).reshape(len(pts))


@dataclass(frozen=True)
class MappingSpec:
    """An explicit mapping with its analytic derivative data.

    Callables are vectorized: `evaluate` maps (N, dim) -> (N, dim),
    `derivative` maps (N, dim) -> (N, dim, dim), `jacobian` maps
    (N, dim) -> (N,).  `excluded` marks the measure-zero bad set (branch
    points, zero-Jacobian loci); None means empty.
    """

    name: str
    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    derivative: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    jacobian: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    branch_inverses: tuple[BranchInverse, ...] = ()
    winding_count: int = 1
    excluded: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    attributes: RegularityFlags = field(default_factory=RegularityFlags)
    params: dict = field(default_factory=dict)

    def excluded_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.excluded is None:
            return np.zeros(len(pts), dtype=bool)
        return np.asarray(self.excluded(pts), dtype=bool).reshape(len(pts))

    def map_curve(self, c: Curve) -> Curve:
        return c.transformed(self.evaluate)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "winding_count": self.winding_count,
            "branches": len(self.branch_inverses),
            "params": dict(self.params),
        }


# ---------------------------------------------------------------------------
# singular values


def _gram_eigen_range(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest/largest eigenvalues of M^T M for batched small matrices."""
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    if M.shape[-2] != n:
        raise ValueError("matrices must be square")
    if n == 2:
        a, b = M[..., 0, 0], M[..., 0, 1]
        c, d = M[..., 1, 0], M[..., 1, 1]
        trace = a * a + b * b + c * c + d * d
        det = a * d - b * c
        # factored discriminant avoids cancellation near conformal matrices;
        # low comes from det^2/high to stay stable near rank deficiency
        disc = np.sqrt(
            np.maximum(trace - 2.0 * np.abs(det), 0.0)
            * (trace + 2.0 * np.abs(det))
        )
        high = (trace + disc) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            low = np.where(high > 0.0, (det * det) / np.maximum(high, 1e-300), 0.0)
        return low, high
    gram = np.swapaxes(M, -1, -2) @ M
    eig = np.linalg.eigvalsh(gram)
    return np.maximum(eig[..., 0], 0.0), eig[..., -1]


def min_stretch(M: np.ndarray) -> np.ndarray | float:
    """Smallest singular value (minimal stretch of the linear map)."""
    low, _ = _gram_eigen_range(M)
    out = np.sqrt(low)
    return float(out) if out.ndim == 0 else out


def op_norm(M: np.ndarray) -> np.ndarray | float:
    """Largest singular value (operator norm)."""
    _, high = _gram_eigen_range(M)
    out = np.sqrt(high)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# dilatation


def inner_dilatation(f: MappingSpec, x: np.ndarray, p: float) -> np.ndarray | float:
    """Inner dilatation of order p at points x.

    Piecewise rule: |J|/l^p where the Jacobian is nonzero, 1 where the whole
    derivative vanishes, +inf otherwise.
    """
    if p < 1:
        raise ValueError("order p must be at least 1")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    M = f.derivative(pts)
    J = np.asarray(f.jacobian(pts), dtype=float).reshape(len(pts))
    zero_deriv = np.all(np.abs(M) < ZERO_DERIVATIVE_TOL, axis=(-2, -1))
    l = np.asarray(min_stretch(M)).reshape(len(pts))
    out = np.full(len(pts), np.inf)
    nz = J != 0.0
    with np.errstate(divide="ignore", over="ignore"):
        out[nz] = np.abs(J[nz]) / l[nz] ** p
    out[zero_deriv] = 1.0
    if np.ndim(x) == 1:
        return float(out[0])
    return out


@dataclass
class DilatationField:
    """Sampled inner dilatation of one order on a grid.

    Cells on the mapping's excluded set hold NaN and do not contribute to the
    essential supremum.
    """

    order: float
    grid: Grid
    values: np.ndarray = field(repr=False)
    ess_sup: float = np.inf


def dilatation_field(f: MappingSpec, p: float, grid: Grid) -> DilatationField:
    if grid.dim != f.dim:
        raise PreconditionError("grid dimension does not match the mapping")
    centers = grid.cell_centers()
    vals = np.asarray(inner_dilatation(f, centers, p), dtype=float)
    excluded = f.excluded_at(centers)
    vals = np.where(excluded, np.nan, vals)
    live = vals[~np.isnan(vals)]
    if live.size == 0:
        raise PreconditionError("every grid cell lies on the excluded set")
    ess = float(np.inf) if np.any(np.isinf(live)) else float(live.max())
    return DilatationField(float(p), grid, vals.reshape(grid.shape), ess)


def ess_sup_dilatation(f: MappingSpec, p: float, grid: Grid) -> float:
    """Essential supremum of the order-p inner dilatation over the grid."""
    return dilatation_field(f, p, grid).ess_sup


# ---------------------------------------------------------------------------
# winding


@dataclass
class WindingReport:
    winds: bool
    m: int
    vacuous: bool
    closure_residual: float
    min_separation: float
    tol: float
    image_length: float
    period: float

    def as_dict(self) -> dict:
        return {
            "winds": self.winds,
            "m": self.m,
            "vacuous": self.vacuous,
            "closure_residual": self.closure_residual,
            "min_separation": self.min_separation,
            "tol": self.tol,
            "image_length": self.image_length,
            "period": self.period,
        }


def winds_m_times(
    f: MappingSpec,
    alpha: Curve,
    m: int,
    tol: float = 1e-4,
    n_probe: int = 64,
) -> WindingReport:
    """Check that f wraps the closed curve alpha m times around its image.

    With c the image length and h = c/m, the image's arc-length
    parametrization must be h-periodic while the lifted curve takes pairwise
    distinct values across the m periods.  The case m = 1 imposes no
    condition and is vacuously true.
    """
    if m < 1:
        raise PreconditionError("winding count m must be a positive integer")
    if not alpha.closed:
        raise PreconditionError("winding is defined for closed curves only")
    beta = f.map_curve(alpha)
    c = beta.total_length
    if m == 1:
        return WindingReport(True, 1, True, 0.0, np.inf, tol, c, c)
    if c <= 0.0:
        return WindingReport(False, m, False, np.inf, 0.0, tol, c, 0.0)

    beta0 = normal_representation(beta)
    alpha_star = f_representation(alpha, beta)
    h = c / m
    ts = (np.arange(n_probe) + 0.5) * (h / n_probe)

    beta_diam = max(beta.diameter, 1e-300)
    alpha_diam = max(alpha.diameter, 1e-300)

    base = beta0.evaluate(ts)
    closure = 0.0
    for j in range(1, m):
        shifted = beta0.evaluate(ts + j * h)
        closure = max(closure, float(np.linalg.norm(shifted - base, axis=1).max()))
    closure /= beta_diam

    lifted = [alpha_star.evaluate(ts + j * h) for j in range(m)]
    min_sep = np.inf
    for i in range(m):
        for j in range(i + 1, m):
            sep = float(np.linalg.norm(lifted[i] - lifted[j], axis=1).min())
            min_sep = min(min_sep, sep)
    min_sep /= alpha_diam

    ok = closure <= tol and min_sep > tol
    return WindingReport(ok, m, False, closure, min_sep, tol, c, h)


def winding_multiplicity(
    f: MappingSpec, alpha: Curve, max_m: int = 8, tol: float = 1e-4
) -> int:
    """Largest m <= max_m for which the winding condition holds.

    Every mapping winds a closed curve at least once (the m = 1 condition is
    empty), so the result is always >= 1.
    """
    best = 1
    for m in range(2, max_m + 1):
        if winds_m_times(f, alpha, m, tol=tol).winds:
            best = m
    return best


# ---------------------------------------------------------------------------
# catalog


def identity_map(dim: int = 2) -> MappingSpec:
    eye = np.eye(dim)

    def deriv(pts):
        pts = np.atleast_2d(pts)
        return np.broadcast_to(eye, (len(pts), dim, dim)).copy()

    return MappingSpec(
        name="identity",
        dim=dim,
        evaluate=lambda pts: np.atleast_2d(np.asarray(pts, dtype=float)).copy(),
        derivative=deriv,
        jacobian=lambda pts: np.ones(len(np.atleast_2d(pts))),
        branch_inverses=(BranchInverse(lambda pts: np.atleast_2d(pts).copy()),),
        winding_count=1,
        attributes=RegularityFlags.all_true(),
        params={"dim": dim},
    )


def linear_map(matrix: Sequence[Sequence[float]], name: str = "linear") -> MappingSpec:
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("linear map needs a square matrix")
    dim = M.shape[0]
    det = float(np.linalg.det(M))

    branches: tuple[BranchInverse, ...] = ()
    if det != 0.0:
        Minv = np.linalg.inv(M)
        branches = (BranchInverse(lambda pts, Minv=Minv: np.atleast_2d(pts) @ Minv.T),)

    def deriv(pts, M=M):
        pts = np.atleast_2d(pts)
        return np.broadcast_to(M, (len(pts), dim, dim)).copy()

    return MappingSpec(
        name=name,
        dim=dim,
        evaluate=lambda pts, M=M: np.atleast_2d(pts) @ M.T,
        derivative=deriv,
        jacobian=lambda pts, det=det: np.full(len(np.atleast_2d(pts)), det),
        branch_inverses=branches,
        winding_count=1,
        attributes=RegularityFlags.all_true(),
        params={"matrix": M.tolist()},
    )


def power_map(m: int) -> MappingSpec:
    """Planar map z -> z^m; winds circles about the origin m times."""
    if m < 1:
        raise ValueError("power exponent must be a positive integer")

    def as_complex(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts[:, 0] + 1j * pts[:, 1]

    def evaluate(pts):
        w = as_complex(pts) ** m
        return np.stack([w.real, w.imag], axis=1)

    def derivative(pts):
        z = as_complex(pts)
        w = m * z ** (m - 1)
        out = np.empty((len(z), 2, 2))
        out[:, 0, 0] = w.real
        out[:, 0, 1] = -w.imag
        out[:, 1, 0] = w.imag
        out[:, 1, 1] = w.real
        return out

    def jacobian(pts):
        z = as_complex(pts)
        return m * m * np.abs(z) ** (2 * (m - 1))

    def branch(k):
        def inverse(pts, k=k):
            w = as_complex(pts)
            r = np.abs(w) ** (1.0 / m)
            theta = (np.mod(np.angle(w), 2.0 * np.pi) + 2.0 * np.pi * k) / m
            return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)

        return BranchInverse(inverse)

    return MappingSpec(
        name="power",
        dim=2,
        evaluate=evaluate,
        derivative=derivative,
        jacobian=jacobian,
        branch_inverses=tuple(branch(k) for k in range(m)),
        winding_count=m,
        excluded=lambda pts: np.linalg.norm(np.atleast_2d(pts), axis=1) < ORIGIN_TOL,
        attributes=RegularityFlags.all_true(),
        params={"m": m},
    )


def radial_stretch(a: float, dim: int = 2) -> MappingSpec:
    """Map x -> |x|^(a-1) x; radial singular value a r^(a-1), tangential r^(a-1)."""
    if a <= 0:
        raise ValueError("stretch exponent must be positive")

    def evaluate(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        scale = np.where(r > 0, r ** (a - 1.0), 0.0)
        return pts * scale[:, None]

    def derivative(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        safe = np.where(r > 0, r, 1.0)
        unit = pts / safe[:, None]
        outer = unit[:, :, None] * unit[:, None, :]
        eye = np.eye(dim)
        scale = np.where(r > 0, safe ** (a - 1.0), 0.0)
        return scale[:, None, None] * (eye + (a - 1.0) * outer)

    def jacobian(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        return np.where(r > 0, a * r ** (dim * (a - 1.0)), 0.0)

    def inverse(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        scale = np.where(r > 0, r ** (1.0 / a - 1.0), 0.0)
        return pts * scale[:, None]

    return MappingSpec(
        name="radial-stretch",
        dim=dim,
        evaluate=evaluate,
        derivative=derivative,
        jacobian=jacobian,
        branch_inverses=(BranchInverse(inverse),),
        winding_count=1,
        excluded=lambda pts: np.linalg.norm(np.atleast_2d(pts), axis=1) < ORIGIN_TOL,
        attributes=RegularityFlags.all_true(),
        params={"a": a, "dim": dim},
    )


def catalog() -> list[MappingSpec]:
    """Built-in mappings with attributes true by construction."""
    return [
        identity_map(2),
        identity_map(3),
        linear_map(np.diag([2.0, 1.0]), name="linear"),
        power_map(2),
        power_map(3),
        radial_stretch(3.0, 2),
        radial_stretch(3.0, 3),
    ]


def with_winding(f: MappingSpec, m: int) -> MappingSpec:
    return replace(f, winding_count=m)


# ---------------------------------------------------------------------------
# validation oracles


def finite_difference_derivative(
    f: MappingSpec, pts: np.ndarray, rel_step: float = 1e-6
) -> np.ndarray:
    """Central-difference derivative with step scaled to the point magnitude."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = f.dim
    scale = np.maximum(np.linalg.norm(pts, axis=1), 1.0)
    h = rel_step * scale
    out = np.empty((len(pts), n, n))
    for j in range(n):
        step = np.zeros_like(pts)
        step[:, j] = h
        out[:, :, j] = (f.evaluate(pts + step) - f.evaluate(pts - step)) / (
            2.0 * h[:, None]
        )
    return out


def validate_mapping(
    f: MappingSpec,
    pts: np.ndarray,
    derivative_rtol: float = 1e-5,
    jacobian_rtol: float = 1e-9,
    roundtrip_atol: float = 1e-9,
) -> dict:
    """Cross-check declared derivative data at sample points.

    Points on the excluded set are skipped.  Returns the worst observed
    residual of each kind together with the pass verdict.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    pts = pts[~f.excluded_at(pts)]
    if len(pts) == 0:
        raise PreconditionError("no sample points off the excluded set")

    exact = f.derivative(pts)
    approx = finite_difference_derivative(f, pts)
    denom = np.maximum(np.linalg.norm(exact, axis=(1, 2)), 1.0)
    deriv_err = float(
        (np.linalg.norm(exact - approx, axis=(1, 2)) / denom).max()
    )

    J = np.asarray(f.jacobian(pts), dtype=float)
    dets = np.linalg.det(exact)
    jac_err = float(np.max(np.abs(J - dets) / np.maximum(np.abs(dets), 1.0)))

    images = f.evaluate(pts)
    roundtrip_err = 0.0
    for br in f.branch_inverses:
        ok = br.defined_at(images)
        if not np.any(ok):
            continue
        back = f.evaluate(br.inverse(images[ok]))
        roundtrip_err = max(
            roundtrip_err, float(np.abs(back - images[ok]).max())
        )

    return {
        "derivative_max_rel_err": deriv_err,
        "jacobian_max_rel_err": jac_err,
        "branch_roundtrip_max_err": roundtrip_err,
        "passed": bool(
            deriv_err <= derivative_rtol
            and jac_err <= jacobian_rtol
            and roundtrip_err <= roundtrip_atol
        ),
    }
