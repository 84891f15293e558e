"""Artifact serialization: reports, density dumps, heatmaps, tables.

All writers are deterministic given equal inputs; report JSON is canonical
(sorted keys, fixed indentation) and carries no timestamps unless a timing
block is explicitly attached.
"""

from __future__ import annotations

import base64
import csv
import io
import json
import math

import numpy as np

from .grids import DensityField, Grid
from .solver import ModulusReport
from .verify import VerificationReport

DENSITY_SCHEMA = "curvemod-density/v1"
MODULUS_SCHEMA = "modulus-report/v1"
VERIFY_SCHEMA = "verification-report/v1"


def _sanitize(obj):
    """Make a structure JSON-safe; nonfinite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def to_json(doc: dict) -> str:
    return json.dumps(_sanitize(doc), indent=2, sort_keys=True) + "\n"


def modulus_report_doc(report: ModulusReport, meta: dict | None = None) -> dict:
    doc = {
        "schema": MODULUS_SCHEMA,
        "p": report.p,
        "value": report.value,
        "dual_lower_bound": report.dual_lower_bound,
        "dual_gap_estimate": report.dual_gap_estimate,
        "iterations": report.iterations,
        "outer_rounds": report.outer_rounds,
        "active_constraints": report.active_constraints,
        "max_constraint_violation": report.max_constraint_violation,
        "empty_admissible_set": report.empty_admissible_set,
        "warnings": list(report.warnings),
        "diagnostics": dict(report.diagnostics),
    }
    if report.extremal_density is not None:
        doc["density"] = {
            "min": report.extremal_density.min,
            "max": report.extremal_density.max,
        }
    if meta:
        doc.update(meta)
    return doc


def verification_report_doc(report: VerificationReport, meta: dict | None = None) -> dict:
    doc = {
        "schema": VERIFY_SCHEMA,
        "p": report.p,
        "m": report.m,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "slack": report.slack,
        "rho_tilde_energy": report.rho_tilde_energy,
        "admissibility_residual": report.admissibility_residual,
        "intermediate_checks": dict(report.intermediate_checks),
        "tol_total": report.tol_total,
        "passed": report.passed,
        "failures": list(report.failures),
        "lhs_analytic": report.lhs_analytic,
        "lhs_source": report.lhs_source,
        "diagnostics": dict(report.diagnostics),
    }
    if meta:
        doc.update(meta)
    return doc


# ---------------------------------------------------------------------------
# density dumps


def save_density(field: DensityField) -> str:
    """Flat text dump: header with box and resolution, values in row-major order."""
    g = field.grid
    buf = io.StringIO()
    buf.write(f"# {DENSITY_SCHEMA}\n")
    buf.write(f"# dim: {g.dim}\n")
    buf.write("# lo: " + " ".join(f"{v!r}" for v in g.lo) + "\n")
    buf.write("# hi: " + " ".join(f"{v!r}" for v in g.hi) + "\n")
    buf.write("# resolution: " + " ".join(str(k) for k in g.shape) + "\n")
    np.savetxt(buf, field.values.reshape(g.shape[0], -1), fmt="%.17g")
    return buf.getvalue()


def load_density(text: str) -> DensityField:
    header: dict[str, str] = {}
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        stripped = line[1:].strip()
        if ":" in stripped:
            key, _, val = stripped.partition(":")
            header[key.strip()] = val.strip()
    if DENSITY_SCHEMA not in text.splitlines()[0]:
        raise ValueError("not a density dump (missing schema line)")
    lo = tuple(float(v) for v in header["lo"].split())
    hi = tuple(float(v) for v in header["hi"].split())
    shape = tuple(int(v) for v in header["resolution"].split())
    values = np.loadtxt(io.StringIO("\n".join(lines[body_start:])))
    grid = Grid(lo, hi, shape)
    return DensityField(grid, values.reshape(shape))


# ---------------------------------------------------------------------------
# heatmaps


def _viridis_lut() -> np.ndarray:
    from matplotlib import colormaps

    return (np.asarray(colormaps["viridis"](np.linspace(0, 1, 256)))[:, :3] * 255).astype(
        np.uint8
    )


def heatmap_svg(field: DensityField, title: str = "density") -> str:
    """SVG heatmap with an embedded raster and a labeled colorbar.

    The color scale spans exactly the field's min and max, matching the
    density range recorded in reports.
    """
    from PIL import Image

    if field.grid.dim != 2:
        raise ValueError("heatmaps are implemented for 2-d grids only")
    vals = field.values
    vmin = field.min
    vmax = field.max
    span = vmax - vmin
    norm = (vals - vmin) / span if span > 0 else np.zeros_like(vals)
    lut = _viridis_lut()
    rgb = lut[np.clip((norm * 255).astype(int), 0, 255)]
    # axis 0 is x: transpose so the image rows run along y, then flip so y
    # increases upward
    img = Image.fromarray(np.flipud(rgb.transpose(1, 0, 2)), mode="RGB")
    png = io.BytesIO()
    img.save(png, format="PNG")
    data = base64.b64encode(png.getvalue()).decode("ascii")

    width, height = 560, 480
    plot_w, plot_h = 420, 420
    ticks = np.linspace(vmin, vmax, 5)
    tick_lines = []
    for i, t in enumerate(ticks):
        y = 440 - i * (plot_h - 40) / 4
        tick_lines.append(
            f'<text x="505" y="{y:.1f}" font-size="11" font-family="monospace">'
            f"{t:.6g}</text>"
        )
    bar_stops = "".join(
        f'<stop offset="{i/255:.4f}" stop-color="rgb({r},{g},{b})"/>'
        for i, (r, g, b) in enumerate(lut[::8])
    )
    g = field.grid
    return f"""<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">
<title>{title}</title>
<text x="20" y="24" font-size="14" font-family="monospace">{title}</text>
<text x="20" y="460" font-size="11" font-family="monospace">box [{g.lo[0]:.6g}, {g.hi[0]:.6g}] x [{g.lo[1]:.6g}, {g.hi[1]:.6g}], resolution {g.shape[0]}x{g.shape[1]}</text>
<text x="20" y="474" font-size="11" font-family="monospace">min={vmin:.9g} max={vmax:.9g} (viridis)</text>
<image x="20" y="40" width="{plot_w}" height="{plot_h}" preserveAspectRatio="none" href="data:image/png;base64,{data}"/>
<defs><linearGradient id="cbar" x1="0" y1="1" x2="0" y2="0">{bar_stops}</linearGradient></defs>
<rect x="470" y="40" width="24" height="{plot_h - 20}" fill="url(#cbar)" stroke="black" stroke-width="0.5"/>
{''.join(tick_lines)}
</svg>
"""


# ---------------------------------------------------------------------------
# tables

SWEEP_COLUMNS = [
    "name",
    "command",
    "mapping",
    "family",
    "m",
    "p",
    "R",
    "resolution",
    "value",
    "lhs",
    "rhs",
    "slack",
    "rho_tilde_energy",
    "admissibility_residual",
    "loop_splitting_max_rel_err",
    "lifted_separation_min",
    "chain_rule_bound_max_excess",
    "change_of_variables_max_rel_err",
    "power_mean_max_violation",
    "status",
    "error",
    "wall_time_s",
]


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, extrasaction="ignore",
                            lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in SWEEP_COLUMNS})
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return v
