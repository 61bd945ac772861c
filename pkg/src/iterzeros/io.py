"""File formats: polynomials as JSON, grids and point clouds as CSV or raw binary.

Floats are written with ``repr`` so that files round-trip exactly and two runs
with the same inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .measure import EmpiricalMeasure, GridField
from .polycore import ComplexPoly


def _num(x: float) -> str:
    return repr(float(x))


# -- polynomials --------------------------------------------------------------------

def poly_from_json(obj) -> ComplexPoly:
    """``[[re, im], ...]`` (index = power of z); bare real numbers are accepted too."""
    if not isinstance(obj, list) or not obj:
        raise ConfigError("polynomial must be a non-empty JSON array", field="poly")
    coeffs = []
    for c in obj:
        if isinstance(c, (int, float)):
            coeffs.append(complex(c))
        elif isinstance(c, list) and len(c) == 2 and all(isinstance(v, (int, float)) for v in c):
            coeffs.append(complex(c[0], c[1]))
        else:
            raise ConfigError(f"bad coefficient {c!r}; expected [re, im]", field="poly")
    return ComplexPoly(coeffs)


def poly_to_json(p: ComplexPoly) -> list:
    return [[float(c.real), float(c.imag)] for c in p.to_float().coeffs]


def read_poly(path) -> ComplexPoly:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read polynomial file: {exc}", field="poly") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}", field="poly") from exc
    return poly_from_json(obj)


def write_poly(path, p: ComplexPoly):
    Path(path).write_text(json.dumps(poly_to_json(p)) + "\n")


def parse_coeffs(text: str) -> ComplexPoly:
    """Inline coefficients: a JSON array, or comma-separated Python complex literals."""
    text = text.strip()
    if text.startswith("["):
        try:
            return poly_from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"inline coefficients: {exc.msg}", field="coeffs") from exc
    try:
        return ComplexPoly([complex(t.strip().replace(" ", "")) for t in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"inline coefficients: {exc}", field="coeffs") from exc


# -- point clouds ----------------------------------------------------------------------

def measure_to_csv(mu: EmpiricalMeasure, seed: Optional[int] = None) -> str:
    buf = io.StringIO()
    seed = mu.seed if seed is None else seed
    if seed is not None:
        buf.write(f"# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "weight"])
    for p, wt in zip(mu.points, mu.weights):
        w.writerow([_num(p.real), _num(p.imag), _num(wt)])
    return buf.getvalue()


def _data_lines(text: str):
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def read_seed(text: str) -> Optional[int]:
    for ln in text.splitlines():
        if ln.startswith("# seed="):
            return int(ln.split("=", 1)[1])
    return None


def measure_from_csv(text: str) -> EmpiricalMeasure:
    rows = list(csv.reader(_data_lines(text)))
    if rows and rows[0][:2] == ["re", "im"]:
        rows = rows[1:]
    pts = np.array([complex(float(r[0]), float(r[1])) for r in rows])
    w = np.array([float(r[2]) for r in rows]) if rows and len(rows[0]) > 2 else np.full(pts.size, 1.0 / pts.size)
    return EmpiricalMeasure(pts, w, read_seed(text))


def read_points(path) -> np.ndarray:
    """Test points from JSON ``[[re, im], ...]`` or CSV with columns re, im."""
    text = Path(path).read_text()
    if text.lstrip().startswith("["):
        return np.array([complex(*p) if isinstance(p, list) else complex(p) for p in json.loads(text)])
    rows = list(csv.reader(_data_lines(text)))
    if rows and rows[0][:2] == ["re", "im"]:
        rows = rows[1:]
    return np.array([complex(float(r[0]), float(r[1])) for r in rows])


def roots_to_csv(points, residuals) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "residual"])
    for p, r in zip(points, residuals):
        w.writerow([_num(p.real), _num(p.imag), _num(r)])
    return buf.getvalue()


# -- grids ------------------------------------------------------------------------

def grid_to_csv(field: GridField, seed: Optional[int] = None) -> str:
    """Header row ``x_min, x_max, y_min, y_max, nx, ny``, then one row per y; masked cells are ``nan``."""
    buf = io.StringIO()
    if seed is not None:
        buf.write(f"# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([_num(v) for v in field.rect] + [field.nx, field.ny])
    vals = np.where(field.full_mask(), np.nan, field.values)
    for row in vals:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def grid_from_csv(text: str) -> GridField:
    rows = list(csv.reader(_data_lines(text)))
    head = rows[0]
    rect = tuple(float(v) for v in head[:4])
    nx, ny = int(head[4]), int(head[5])
    vals = np.array([[float(v) for v in r] for r in rows[1:]])
    if vals.shape != (ny, nx):
        raise ConfigError(f"grid body has shape {vals.shape}, header says {(ny, nx)}", field="grid")
    mask = np.isnan(vals)
    return GridField(rect, nx, ny, np.where(mask, 0.0, vals), mask if mask.any() else None)


def grid_to_bytes(field: GridField) -> bytes:
    """Row-major little-endian float64 values; masked cells are NaN."""
    vals = np.where(field.full_mask(), np.nan, field.values)
    return np.ascontiguousarray(vals, dtype="<f8").tobytes()


def grid_from_bytes(data: bytes, rect, nx: int, ny: int) -> GridField:
    vals = np.frombuffer(data, dtype="<f8").reshape(ny, nx)
    mask = np.isnan(vals)
    return GridField(rect, nx, ny, np.where(mask, 0.0, vals), mask if mask.any() else None)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
