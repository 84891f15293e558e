"""curvemod: p-moduli of curve families and winding modulus inequalities.

The package computes discrete p-moduli of sampled curve families on grids,
evaluates inner dilatations of explicit mappings, and numerically verifies
the modulus inequality for mappings that wind curve families m times around
their images, including the pushforward-density construction the inequality
rests on.
"""

__version__ = "0.1.0"

from .analytic import (
    analytic_annulus_modulus,
    annulus_connecting_density,
    annulus_separating_density,
)
from .curves import (
    Curve,
    LengthFunction,
    NormalCurve,
    f_representation,
    intersection_length,
    is_admissible,
    length_function,
    line_integral,
    normal_representation,
)
from .errors import (
    AnalyticUnavailableError,
    CurvemodError,
    InconsistentLiftingError,
    InvalidCurveError,
    NotApplicableError,
    PreconditionError,
    ScenarioError,
    SolverNonConvergenceError,
    UnsupportedMappingError,
)
from .families import (
    CurveFamily,
    circles_family,
    family_from_json,
    family_to_json,
    family_union,
    radial_family,
    segment_bundle,
)
from .grids import (
    DensityField,
    Grid,
    constant_density,
    density_from_function,
    energy,
    interpolate,
)
from .mappings import (
    BranchInverse,
    DilatationField,
    MappingSpec,
    RegularityFlags,
    catalog,
    ess_sup_dilatation,
    identity_map,
    inner_dilatation,
    linear_map,
    min_stretch,
    op_norm,
    power_map,
    radial_stretch,
    validate_mapping,
    winding_multiplicity,
    winds_m_times,
)
from .pushforward import (
    PushforwardDensity,
    pushforward_density,
    pushforward_family,
    rhs_integral,
    star_density,
)
from .solver import ModulusReport, SolverOptions, make_admissible, p_modulus
from .verify import (
    VerificationReport,
    verify_esssup_inequality,
    verify_winding_inequality,
)

__all__ = [
    "__version__",
    "AnalyticUnavailableError",
    "BranchInverse",
    "Curve",
    "CurveFamily",
    "CurvemodError",
    "DensityField",
    "DilatationField",
    "Grid",
    "InconsistentLiftingError",
    "InvalidCurveError",
    "LengthFunction",
    "MappingSpec",
    "ModulusReport",
    "NormalCurve",
    "NotApplicableError",
    "PreconditionError",
    "PushforwardDensity",
    "RegularityFlags",
    "ScenarioError",
    "SolverNonConvergenceError",
    "SolverOptions",
    "UnsupportedMappingError",
    "VerificationReport",
    "analytic_annulus_modulus",
    "annulus_connecting_density",
    "annulus_separating_density",
    "catalog",
    "circles_family",
    "constant_density",
    "density_from_function",
    "energy",
    "ess_sup_dilatation",
    "f_representation",
    "family_from_json",
    "family_to_json",
    "family_union",
    "identity_map",
    "inner_dilatation",
    "interpolate",
    "intersection_length",
    "is_admissible",
    "length_function",
    "line_integral",
    "linear_map",
    "make_admissible",
    "min_stretch",
    "normal_representation",
    "op_norm",
    "p_modulus",
    "power_map",
    "pushforward_density",
    "pushforward_family",
    "radial_family",
    "radial_stretch",
    "rhs_integral",
    "segment_bundle",
    "star_density",
    "validate_mapping",
    "verify_esssup_inequality",
    "verify_winding_inequality",
    "winding_multiplicity",
    "winds_m_times",
]
