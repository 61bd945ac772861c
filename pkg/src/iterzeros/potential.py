"""Potential theory instruments: Green function, Brolin sampling, grid potentials."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .errors import PreimageFailure
from .jets import iterate_log_coeffs
from .measure import EmpiricalMeasure, GridField, Rect, cell_centers, require_same_lattice
from .polycore import ComplexPoly, _as_exact, derivative, escape_radius, evaluate, iterate
from .rootfinder import find_roots_batch

DEFAULT_N_ESC = 64
MAX_BROLIN_WORK = 10 ** 8
PREIMAGE_TOL = 1e-12
PREIMAGE_CERT = 1e-8


def robin_constant(f: ComplexPoly) -> float:
    """``log|c_d| / (d - 1)``: the limit of ``g_f(z) - log|z|`` at infinity."""
    f = f.to_float()
    return math.log(abs(f.leading)) / (f.degree - 1)


def green_escape(f: ComplexPoly, z, n_esc: int = DEFAULT_N_ESC):
    """Escape-rate approximation of the Green function of K(f).

    Computes ``log max(1, |f^n(z)|) / d^n`` for ``n = n_esc``.  An orbit that
    leaves the escape radius is followed until it is large enough for the
    asymptotic ``g_f(w) = log|w| + robin + O(1/|w|)`` to be exact in double
    precision, and the remaining iterations are accounted for with it.
    """
    f = f.to_float()
    d = f.degree
    robin = robin_constant(f)
    R = escape_radius(f)
    bail = max(10.0 * R, math.exp(min(600.0 / d, 40.0)))
    z = np.asarray(z, dtype=np.complex128)
    w = z.ravel().copy()
    out = np.full(w.shape, np.nan)
    alive = np.ones(w.shape, dtype=bool)
    scale = 1.0
    for _ in range(n_esc):
        scale *= d
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        w[idx] = evaluate(f, w[idx])
        big = np.abs(w[idx]) > bail
        hit = idx[big]
        out[hit] = (np.log(np.abs(w[hit])) + robin) / scale
        alive[hit] = False
    idx = np.flatnonzero(alive)
    aw = np.abs(w[idx])
    esc = aw > R
    out[idx] = np.where(esc, (np.log(np.maximum(aw, 1.0)) + robin) / scale,
                        np.log(np.maximum(aw, 1.0)) / scale)
    out = out.reshape(z.shape)
    return float(out) if out.ndim == 0 else out


def green_grid(f: ComplexPoly, rect: Rect, nx: int, ny: int, n_esc: int = DEFAULT_N_ESC) -> GridField:
    return GridField(rect, nx, ny, green_escape(f, cell_centers(rect, nx, ny), n_esc))


def brolin_step(f: ComplexPoly, w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One backward step: a uniformly chosen preimage of each point of ``w``."""
    f = f.to_float()
    c = np.repeat(f.coeffs[None, :], w.size, axis=0)
    c[:, 0] -= w
    roots, res, ok = find_roots_batch(c, PREIMAGE_TOL)
    bad_rows = np.any(~ok & (res > PREIMAGE_CERT), axis=1)
    if np.any(bad_rows):
        bad = int(np.sum(bad_rows))
        raise PreimageFailure(f"{bad} preimage solves failed certification")
    pick = rng.integers(f.degree, size=w.size)
    return roots[np.arange(w.size), pick]


def brolin_sample(f: ComplexPoly, a: complex, depth: int, count: int, seed: int = 0,
                  max_work: int = MAX_BROLIN_WORK) -> EmpiricalMeasure:
    """Sample the harmonic measure by ``count`` independent backward random walks.

    After ``depth`` steps each walk is distributed as ``(f^depth)^* delta_a / d^depth``.
    ``a`` must not be exceptional; the caller checks with detect_exceptional.
    """
    if depth * count > max_work:
        raise ValueError(f"depth*count = {depth * count} exceeds {max_work}")
    rng = np.random.default_rng(seed)
    w = np.full(count, complex(a))
    for _ in range(depth):
        w = brolin_step(f, w, rng)
    return EmpiricalMeasure.uniform(w, seed=seed)


def cloud_potential(mu: EmpiricalMeasure, rect: Rect, nx: int, ny: int,
                    chunk: int = 1 << 22) -> GridField:
    """Logarithmic potential ``sum_i w_i log|z - p_i|`` on the cell centers.

    Cells whose center lies within one cell diagonal of a point are masked.
    """
    z = cell_centers(rect, nx, ny).ravel()
    vals = np.empty(z.size)
    step = max(1, chunk // max(1, mu.points.size))
    for s in range(0, z.size, step):
        blk = z[s:s + step, None] - mu.points[None, :]
        with np.errstate(divide="ignore"):
            vals[s:s + step] = np.log(np.abs(blk)) @ mu.weights
    field = GridField(rect, nx, ny, vals)
    tree = cKDTree(np.column_stack([mu.points.real, mu.points.imag]))
    dist, _ = tree.query(np.column_stack([z.real, z.imag]))
    mask = (dist <= field.cell_diagonal) | ~np.isfinite(vals)
    return GridField(rect, nx, ny, vals, mask)


def l1_distance(u: GridField, v: GridField) -> float:
    """``sum |u - v| * cell_area`` over cells unmasked in both fields."""
    require_same_lattice(u, v)
    diff = np.abs(u.values - v.values)
    keep = ~(u.full_mask() | v.full_mask()) & np.isfinite(diff)
    return float(diff[keep].sum() * u.cell_area)


def normalized_logmod_grid(f: ComplexPoly, n: int, m: int, rect: Rect, nx: int, ny: int,
                           route: str = "jets") -> GridField:
    """``log|(f^n)^(m)| / (d^n - m)`` at the cell centers.

    The jet route works in extended exponent range so escaping cells stay
    finite; cells where the derivative vanishes are masked.  ``coeffs``
    evaluates the expanded polynomial in floating point, which cancels badly
    inside K(f) once the degree is in the hundreds.  ``exact`` expands and
    evaluates in Gaussian rationals at the (dyadic) cell centers; it is slow
    and meant as an oracle.
    """
    f = f.to_float()
    D = f.degree ** n - m
    z = cell_centers(rect, nx, ny)
    if route == "jets":
        u, s = iterate_log_coeffs(f, z, n, m)
        with np.errstate(divide="ignore"):
            logmod = s + np.log(np.abs(u[m])) + math.lgamma(m + 1)
    elif route == "coeffs":
        p = derivative(iterate(f, n), m)
        with np.errstate(divide="ignore", over="ignore"):
            logmod = np.log(np.abs(evaluate(p, z)))
    elif route == "exact":
        p = derivative(iterate(_as_exact(f), n), m)
        logmod = np.array([_exact_logmod(p, w) for w in z.ravel()]).reshape(z.shape)
    else:
        raise ValueError(f"unknown route {route!r}")
    vals = logmod / D
    mask = ~np.isfinite(vals)
    return GridField(rect, nx, ny, np.where(mask, 0.0, vals), mask)


def _exact_logmod(p: ComplexPoly, w: complex) -> float:
    v = evaluate(p, complex(w))
    x, y = Fraction(int(v.x.numerator), int(v.x.denominator)), Fraction(int(v.y.numerator), int(v.y.denominator))
    sq = x * x + y * y
    if sq == 0:
        return -math.inf
    return 0.5 * (math.log(sq.numerator) - math.log(sq.denominator))


def largest_atom_mass(mu: EmpiricalMeasure, radius: float) -> float:
    """Largest measure of a closed ball of ``radius`` centred at a sample point."""
    pts = np.column_stack([mu.points.real, mu.points.imag])
    tree = cKDTree(pts)
    nbrs = tree.query_ball_point(pts, radius)
    return float(max(mu.weights[idx].sum() for idx in nbrs))
