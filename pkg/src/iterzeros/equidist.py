"""End-to-end checks that zeros of ``(f^n)^(m)`` equidistribute to the harmonic measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import arcsine, kstest

from .errors import SuperattractingUnsupported
from .jets import iterate_log_coeffs
from .linearize import CycleData
from .measure import EmpiricalMeasure, Rect, decreasing_with_jitter
from .polycore import ComplexPoly, ExceptionalReport, derivative, detect_exceptional
from .potential import green_grid, l1_distance, normalized_logmod_grid
from .rootfinder import find_roots, preimage_tree, roots_of_iterated_derivative

BL_LEVELS = 4
JITTER = 0.1


# -- distances -----------------------------------------------------------------------

def tent_family(rect: Rect, levels: int = BL_LEVELS):
    """Centers and radii of the tent functions ``max(0, r - |x - c|)``.

    Level ``l`` places one tent at each cell center of a ``2^l x 2^l``
    subdivision of ``rect`` with ``r = min(1, cell size)``, so every tent is
    1-Lipschitz with sup at most 1.  Four levels give 85 functions.
    """
    x0, x1, y0, y1 = rect
    centers, radii = [], []
    for lev in range(levels):
        k = 2 ** lev
        dx, dy = (x1 - x0) / k, (y1 - y0) / k
        xs = x0 + (np.arange(k) + 0.5) * dx
        ys = y0 + (np.arange(k) + 0.5) * dy
        c = (xs[None, :] + 1j * ys[:, None]).ravel()
        centers.append(c)
        radii.append(np.full(c.size, min(1.0, max(dx, dy))))
    return np.concatenate(centers), np.concatenate(radii)


def clip_to_rect(mu: EmpiricalMeasure, rect: Rect) -> Tuple[np.ndarray, float]:
    """Points projected into ``rect`` and the mass that had to be moved."""
    x0, x1, y0, y1 = rect
    p = mu.points
    inside = (p.real >= x0) & (p.real <= x1) & (p.imag >= y0) & (p.imag <= y1)
    q = np.clip(p.real, x0, x1) + 1j * np.clip(p.imag, y0, y1)
    return q, float(mu.weights[~inside].sum())


def _tent_integrals(points, weights, centers, radii, chunk: int = 1 << 21) -> np.ndarray:
    out = np.zeros(centers.size)
    step = max(1, chunk // max(1, centers.size))
    for s in range(0, points.size, step):
        d = np.abs(points[s:s + step, None] - centers[None, :])
        out += weights[s:s + step] @ np.maximum(0.0, radii[None, :] - d)
    return out


def bl_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure, rect: Rect, levels: int = BL_LEVELS) -> float:
    """Bounded-Lipschitz distance estimated over the tent family on ``rect``."""
    centers, radii = tent_family(rect, levels)
    p, _ = clip_to_rect(mu, rect)
    q, _ = clip_to_rect(nu, rect)
    a = _tent_integrals(p, mu.weights, centers, radii)
    b = _tent_integrals(q, nu.weights, centers, radii)
    return float(np.max(np.abs(a - b)))


def arcsine_ks(points) -> float:
    """Kolmogorov distance of the real parts to the arcsine law on [-2, 2]."""
    x = np.asarray(points).real
    return float(kstest(x, arcsine(loc=-2.0, scale=4.0).cdf).statistic)


# -- equidistribution run -------------------------------------------------------------

@dataclass
class ConvergenceReport:
    f_descriptor: list
    m: int
    n_list: List[int]
    l1_norms: List[float]
    bl_distances: List[float]
    exceptional: ExceptionalReport
    verdict: str
    clouds: List[np.ndarray] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        e = self.exceptional
        return {
            "f": self.f_descriptor, "m": self.m, "n_list": self.n_list,
            "l1_norms": self.l1_norms, "bl_distances": self.bl_distances,
            "exceptional": {"has_finite_exceptional": e.has_finite_exceptional,
                            "b": None if e.b is None else [e.b.real, e.b.imag],
                            "A": None if e.A is None else [e.A.real, e.A.imag]},
            "verdict": self.verdict,
        }


def _descriptor(f: ComplexPoly) -> list:
    return [[float(c.real), float(c.imag)] for c in f.to_float().coeffs]


def theorem_a_run(f: ComplexPoly, m: int, n_list: Sequence[int], mu_ref: EmpiricalMeasure, rect: Rect,
                  grid: Tuple[int, int], tol: float, n_esc: int = 64, jitter: float = JITTER,
                  route: str = "jets") -> ConvergenceReport:
    """Zero clouds, bounded-Lipschitz distances and L1 potential gaps per n.

    The verdict is ``converging`` when both sequences decrease up to
    ``jitter`` and end with ``bl <= tol`` and ``l1 <= tol * area(rect)``.
    Bounded-Lipschitz values below the sampling noise of ``mu_ref``
    (``1/sqrt(len(mu_ref))``) count as decreasing: the reference sample cannot
    resolve differences that small.
    A finite exceptional point forces ``counterexample_expected``; the
    numbers are still computed.
    """
    f = f.to_float()
    exc = detect_exceptional(f)
    nx, ny = grid
    g = green_grid(f, rect, nx, ny, n_esc)
    l1s, bls, clouds = [], [], []
    for n in n_list:
        cloud = roots_of_iterated_derivative(f, n, m, route=route)
        clouds.append(cloud.points)
        bls.append(bl_distance(cloud.as_measure(), mu_ref, rect))
        l1s.append(l1_distance(normalized_logmod_grid(f, n, m, rect, nx, ny), g))
    area = (rect[1] - rect[0]) * (rect[3] - rect[2])
    if exc.has_finite_exceptional:
        verdict = "counterexample_expected"
    elif (decreasing_with_jitter(l1s, jitter)
          and decreasing_above_floor(bls, 1.0 / math.sqrt(len(mu_ref)), jitter)
          and bls[-1] <= tol and l1s[-1] <= tol * area):
        verdict = "converging"
    else:
        verdict = "not_converging"
    return ConvergenceReport(_descriptor(f), m, list(n_list), l1s, bls, exc, verdict, clouds)


def decreasing_above_floor(values, floor: float, jitter: float = JITTER) -> bool:
    """Jittered decrease, where values under ``floor`` are indistinguishable from it."""
    v = np.maximum(np.asarray(values, dtype=float), floor)
    return bool(np.all(v[1:] <= (1.0 + jitter) * v[:-1]) and v[-1] <= v[0])


def logmod_leading(f: ComplexPoly, n: int, m: int) -> float:
    """``log|leading coefficient of (f^n)^(m)|``."""
    f = f.to_float()
    d = f.degree
    D = d ** n
    lead = (D - 1) // (d - 1) * math.log(abs(f.leading)) if d > 1 else n * math.log(abs(f.leading))
    return lead + math.lgamma(D + 1) - math.lgamma(D - m + 1)


# -- m = 1 structure ------------------------------------------------------------------

@dataclass
class TelescopingReport:
    n: int
    zero_count: int
    predicted_count: int
    level_counts: List[int]
    max_match_distance: float
    passed: bool


def critical_points(f: ComplexPoly) -> np.ndarray:
    return find_roots(derivative(f.to_float(), 1)).points


def m1_telescoping_check(f: ComplexPoly, n: int, tol: float = 1e-6) -> TelescopingReport:
    """Compare zeros of ``(f^n)'`` with the pulled-back critical points.

    The predicted multiset is the union over ``j < n`` of ``f^{-j}`` of the
    critical points; it is matched one-to-one with the computed zeros by a
    minimum-cost assignment.
    """
    f = f.to_float()
    d = f.degree
    if d ** n > 2 ** 10:
        raise ValueError("d^n must be at most 2^10 for the multiset comparison")
    zeros = roots_of_iterated_derivative(f, n, 1).points
    crit = critical_points(f)
    levels, level_counts = [], []
    for j in range(n):
        pts = np.concatenate([preimage_tree(f, c, j) for c in crit])
        levels.append(pts)
        level_counts.append(int(pts.size))
    pred = np.concatenate(levels)
    predicted = (d - 1) * sum(d ** j for j in range(n))
    if pred.size != zeros.size:
        return TelescopingReport(n, int(zeros.size), predicted, level_counts, math.inf, False)
    cost = np.abs(zeros[:, None] - pred[None, :])
    r, c = linear_sum_assignment(cost)
    worst = float(cost[r, c].max())
    ok = worst <= tol and predicted == d ** n - 1 == zeros.size == sum(level_counts)
    return TelescopingReport(n, int(zeros.size), predicted, level_counts, worst, bool(ok))


# -- superattracting cascade -------------------------------------------------------------

@dataclass
class CascadeReport:
    m: int
    n_list: List[int]
    radius: float
    log_sup_lower: List[float]
    log_sup_upper: List[float]
    vanishes_at_z0: List[bool]
    holds: List[bool]

    @property
    def passed(self) -> bool:
        return all(h for h, v in zip(self.holds, self.vanishes_at_z0) if v)


def _log_abs_derivatives(f, z, n, k):
    u, s = iterate_log_coeffs(f, np.asarray(z, dtype=np.complex128), n, k)
    with np.errstate(divide="ignore"):
        return s + np.log(np.abs(u[k])) + math.lgamma(k + 1), s + np.log(np.abs(u[k - 1])) + math.lgamma(k)


def superattracting_derivative_cascade(f: ComplexPoly, cycle: CycleData, m: int, n_list: Sequence[int],
                                       z0: Optional[complex] = None, radius: float = 1e-2,
                                       samples: int = 64, zero_tol: float = 1e-8) -> CascadeReport:
    """Check ``sup |(f^n)^(m-1)| <= r sup |(f^n)^(m)|`` on a circle about a zero.

    Sups over the circle stand in for sups over the disk (maximum modulus).
    Everything is compared in logarithms, so deep underflow near the
    superattracting point is harmless.
    """
    if cycle.kind != "superattracting":
        raise SuperattractingUnsupported("the cascade check needs a cycle with λ = 0")
    if m < 2:
        raise ValueError("m must be >= 2")
    f = f.to_float()
    z0 = cycle.a if z0 is None else complex(z0)
    circle = z0 + radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    lows, ups, zeros, holds = [], [], [], []
    for n in n_list:
        top, low = _log_abs_derivatives(f, circle, n, m)
        _, at_z0 = _log_abs_derivatives(f, np.array([z0]), n, m)
        sup_low, sup_top = float(np.max(low)), float(np.max(top))
        lows.append(sup_low)
        ups.append(sup_top)
        zeros.append(bool(at_z0[0] <= math.log(zero_tol) + sup_low))
        holds.append(bool(sup_low <= math.log(radius) + sup_top + 1e-12))
    return CascadeReport(m, list(n_list), radius, lows, ups, zeros, holds)
