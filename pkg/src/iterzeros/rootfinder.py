"""Simultaneous root finding by the Aberth-Ehrlich iteration.

Two evaluation routes feed the same iteration: Horner on (max-normalized)
coefficients, and jets of ``f^n`` in extended exponent range for the zeros
of ``(f^n)^(m)`` whose coefficient form would overflow or be hopelessly
ill-conditioned.  Both only ever hand the iteration the Newton quotient
``p / p'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NotConverged, ZeroPolynomial
from .jets import iterate_log_coeffs
from .measure import EmpiricalMeasure
from .errors import DegreeCapExceeded
from .polycore import DEGREE_CAP, ComplexPoly, filled_radius

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 500
_NOISE = 4 * np.finfo(float).eps
_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class RootCloud:
    """All zeros of a polynomial, listed with multiplicity.

    ``residuals[i] = |p(r_i)| / (max(1, |r_i|) |p'(r_i)|)``, a relative Newton
    step.  A root is certified when its residual meets the tolerance or when
    ``|p(r_i)|`` is already at the rounding level of the evaluation.
    """

    points: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int = 0
    certified: Optional[np.ndarray] = None

    def __len__(self):
        return self.points.size

    def as_measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure.uniform(self.points)


# -- Newton quotients -----------------------------------------------------------

def _newton_coeffs(c: np.ndarray, z: np.ndarray):
    """``p(z)/p'(z)`` for coefficient rows ``c`` (batch, deg+1), ``z`` (batch, k).

    Points outside the unit disk use the reversed polynomial so nothing
    overflows.  Also returns a flag marking points where ``|p|`` is already
    at the rounding level of Horner's rule, beyond which no step can help.
    """
    deg = c.shape[1] - 1
    a = np.abs(c)
    inside = np.abs(z) <= 1.0
    zi = np.where(inside, z, 0.0)
    azi = np.abs(zi)
    p = np.repeat(c[:, -1:], z.shape[1], axis=1).astype(np.complex128)
    dp = np.zeros_like(p)
    bound = np.repeat(a[:, -1:], z.shape[1], axis=1)
    for k in range(deg - 1, -1, -1):
        dp = dp * zi + p
        p = p * zi + c[:, k:k + 1]
        bound = bound * azi + a[:, k:k + 1]
    y = np.where(inside, 0.0, 1.0 / np.where(inside, 1.0, z))
    ay = np.abs(y)
    r = np.repeat(c[:, :1], z.shape[1], axis=1).astype(np.complex128)
    dr = np.zeros_like(r)
    rbound = np.repeat(a[:, :1], z.shape[1], axis=1)
    for k in range(1, deg + 1):
        dr = dr * y + r
        r = r * y + c[:, k:k + 1]
        rbound = rbound * ay + a[:, k:k + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        n_in = np.where(p == 0, 0.0, p / dp)
        n_out = np.where(r == 0, 0.0, z * r / (deg * r - y * dr))
    noise = _NOISE * (deg + 1)
    settled = np.where(inside, np.abs(p) <= noise * bound, np.abs(r) <= noise * rbound)
    return np.where(inside, n_in, n_out), settled


def iterated_derivative_newton(f: ComplexPoly, n: int, m: int) -> Callable:
    """Newton quotient of ``(f^n)^(m)`` evaluated through jets of order m+1."""

    def newton(z):
        u, _ = iterate_log_coeffs(f, z, n, m + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = u[m] / ((m + 1) * u[m + 1])
        return np.where(u[m] == 0, 0.0, q), np.zeros(z.shape, dtype=bool)

    return newton


# -- initial guesses --------------------------------------------------------------

def bini_initial(c: np.ndarray) -> np.ndarray:
    """Starting points on circles read off the Newton polygon of ``log|c_k|``."""
    deg = c.size - 1
    a = np.abs(c)
    logs = np.full(deg + 1, -np.inf)
    nz = a > 0
    logs[nz] = np.log(a[nz])
    ks = np.flatnonzero(nz)
    hull = []
    for k in ks:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # drop j when it lies on or below the chord i -> k
            if (logs[j] - logs[i]) * (k - i) <= (logs[k] - logs[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    out = []
    sigma = 0.7
    for i, j in zip(hull[:-1], hull[1:]):
        cnt = j - i
        r = math.exp((logs[i] - logs[j]) / cnt)
        ang = 2 * np.pi * np.arange(cnt) / cnt + 2 * np.pi * i / deg + sigma
        out.append(r * np.exp(1j * ang))
    z = np.concatenate(out) if out else np.zeros(0, dtype=np.complex128)
    if ks[0] > 0:
        z = np.concatenate([np.zeros(ks[0], dtype=np.complex128), z])
    return z


def circle_initial(count: int, radius: float, center: complex = 0.0) -> np.ndarray:
    ang = 2 * np.pi * np.arange(count) / count + 0.7
    return center + radius * np.exp(1j * ang)


# -- the iteration --------------------------------------------------------------------

def _aberth_sums(z: np.ndarray, active: np.ndarray) -> np.ndarray:
    """``sum_{j != i} 1/(z_i - z_j)`` wherever ``active`` is set."""
    B, D = z.shape
    out = np.zeros_like(z)
    step = max(1, _CHUNK // max(1, D * B))
    idx = np.flatnonzero(np.any(active, axis=0))
    for s in range(0, idx.size, step):
        cols = idx[s:s + step]
        diff = z[:, cols, None] - z[:, None, :]
        diff[:, np.arange(cols.size), cols] = np.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, cols] = np.sum(1.0 / diff, axis=2)
    return out


def _relative(n_q: np.ndarray, z: np.ndarray) -> np.ndarray:
    r = np.abs(n_q) / np.maximum(1.0, np.abs(z))
    return np.where(np.isfinite(r), r, np.inf)


def _collapse_clusters(z, nq, ok, newton, tol):
    """Replace multiple-root clusters by a single certified k-fold root.

    Uncertified estimates are linked when closer than eight Newton steps.  For
    a component of size k every member gives a multiplicity-k Newton estimate
    ``z_i - k p/p'(z_i)`` of the root; the component is accepted when those
    estimates agree to ``radius / (10 k)`` and their mean meets ``tol``.
    """
    B = z.shape[0]
    for b in range(B):
        ids = np.flatnonzero(~ok[b])
        if ids.size < 2:
            continue
        pts = z[b, ids]
        step = np.where(np.isfinite(nq[b, ids]), np.abs(nq[b, ids]), 0.0)
        link = np.abs(pts[:, None] - pts[None, :]) <= 8.0 * np.maximum(step[:, None], step[None, :])
        ncomp, labels = connected_components(csr_matrix(link), directed=False)
        for lab in range(ncomp):
            members = ids[labels == lab]
            k = members.size
            if k < 2 or not np.all(np.isfinite(nq[b, members])):
                continue
            est = z[b, members] - k * nq[b, members]
            c = est.mean()
            radius = np.max(np.abs(z[b, members] - c))
            # a wrong multiplicity k' spreads the estimates by |k' - k| / k of the radius
            if np.max(np.abs(est - c)) > 0.1 * radius / k:
                continue
            probe = np.zeros((B, 1), dtype=np.complex128)
            probe[b, 0] = c
            nc, settled = newton(probe)
            nc, settled = nc[b, 0], settled[b, 0]
            if settled or _relative(np.array([nc]), np.array([c]))[0] <= tol:
                z[b, members] = c
                nq[b, members] = nc
                ok[b, members] = True


def aberth(newton: Callable, z0: np.ndarray, tol: float, max_iter: int, collapse_every: int = 25,
           settle_sweeps: int = 5):
    """Jacobi-style Aberth sweeps on ``z0`` of shape (batch, degree).

    ``newton(z)`` returns ``(p/p', settled)``.  An estimate is frozen once its
    relative Newton step drops to ``tol``, or once it has stayed settled for
    ``settle_sweeps`` consecutive sweeps; frozen estimates still repel the
    others through the Aberth sum.  Returns
    ``(z, newton_quotients, certified, sweeps)``.
    """
    z = np.array(z0, dtype=np.complex128, copy=True)
    if z.ndim == 1:
        z = z[None, :]
    nq, settled = newton(z)
    ok = _relative(nq, z) <= tol
    streak = settled.astype(int)
    it = 0
    while it < max_iter and not ok.all():
        it += 1
        active = ~ok
        s = _aberth_sums(z, active)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            w = nq / (1.0 - nq * s)
            w = np.where(np.isfinite(nq), w, -1.0 / s)
        w = np.where(np.isfinite(w), w, 0.0)
        z = np.where(active, z - w, z)
        new_nq, new_settled = newton(z)
        nq = np.where(active, new_nq, nq)
        streak = np.where(new_settled, streak + 1, 0)
        ok = ok | (active & ((streak >= settle_sweeps) | (_relative(nq, z) <= tol)))
        if not ok.all() and it % collapse_every == 0:
            _collapse_clusters(z, nq, ok, newton, tol)
    if not ok.all():
        _collapse_clusters(z, nq, ok, newton, tol)
    return z, nq, ok, it


def _finish(z, nq, ok, it, raise_on_failure) -> RootCloud:
    # rounding noise in the real part must not decide the order
    q = 1e-9 * max(1.0, float(np.max(np.abs(z)))) if z.size else 1.0
    order = np.lexsort((z.imag, np.round(z.real / q)))
    cloud = RootCloud(z[order], _relative(nq, z)[order], bool(ok.all()), it, ok[order])
    if raise_on_failure and not cloud.converged:
        raise NotConverged(f"{np.sum(~ok)} roots uncertified after {it} sweeps", cloud)
    return cloud


def find_roots(p: ComplexPoly, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
               raise_on_failure: bool = False) -> RootCloud:
    """All ``degree(p)`` zeros of ``p`` with multiplicity.

    Output points are sorted lexicographically by (real, imag).  When
    ``raise_on_failure`` is set an uncertified result raises NotConverged
    carrying the partial cloud; otherwise ``converged`` reports it.
    """
    p = p.to_float()
    if p.is_zero():
        raise ZeroPolynomial("the zero polynomial has no finite root set")
    if p.degree == 0:
        empty = np.zeros(0, dtype=np.complex128)
        return RootCloud(empty, np.zeros(0), True, 0, np.zeros(0, dtype=bool))
    c = p.coeffs / np.max(np.abs(p.coeffs))
    rows = c[None, :]
    z, nq, ok, it = aberth(lambda x: _newton_coeffs(rows, x), bini_initial(c)[None, :], tol, max_iter)
    return _finish(z[0], nq[0], ok[0], it, raise_on_failure)


def find_roots_batch(coeffs: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Roots of many same-degree polynomials at once; rows are coefficient vectors.

    Returns ``(roots, residuals, certified)``, each of shape (batch, degree),
    rows unsorted.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    c = c / np.max(np.abs(c), axis=1, keepdims=True)
    z0 = np.stack([bini_initial(row) for row in c])
    z, nq, ok, _ = aberth(lambda x: _newton_coeffs(c, x), z0, tol, max_iter)
    return z, _relative(nq, z), ok


def find_roots_newton(newton: Callable, z0: np.ndarray, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, raise_on_failure: bool = False) -> RootCloud:
    """Aberth iteration driven by a caller-supplied ``z -> (p/p', settled)``."""
    z, nq, ok, it = aberth(newton, np.asarray(z0)[None, :], tol, max_iter)
    return _finish(z[0], nq[0], ok[0], it, raise_on_failure)


def preimage_tree(f: ComplexPoly, a: complex, depth: int) -> np.ndarray:
    """All ``d^depth`` points of ``f^{-depth}(a)`` with multiplicity."""
    f = f.to_float()
    w = np.array([complex(a)])
    for _ in range(depth):
        c = np.repeat(f.coeffs[None, :], w.size, axis=0)
        c[:, 0] -= w
        w, _, _ = find_roots_batch(c)
        w = w.ravel()
    return w


def roots_of_iterated_derivative(f: ComplexPoly, n: int, m: int, tol: float = DEFAULT_TOL,
                                 max_iter: int = DEFAULT_MAX_ITER, route: str = "jets",
                                 degree_cap: int = DEGREE_CAP) -> RootCloud:
    """The ``d^n - m`` zeros of ``(f^n)^(m)``.

    ``route="jets"`` evaluates through the orbit, stable at any degree, and
    starts from the backward orbit ``f^{-n}(a)`` of an exterior point ``a``,
    which already equidistributes near the Julia set.  ``route="coeffs"``
    expands ``f^n`` and differentiates, usable only while the coefficients
    stay representable and well conditioned.
    """
    f = f.to_float()
    d = f.degree
    if d ** n > degree_cap:
        raise DegreeCapExceeded(f"d^n = {d}^{n} exceeds cap {degree_cap}")
    D = d ** n - m
    if D < 1:
        raise ValueError(f"m = {m} must be below d^n = {d ** n}")
    if route == "coeffs":
        from .polycore import derivative, iterate
        return find_roots(derivative(iterate(f, n, degree_cap), m), tol, max_iter)
    if route != "jets":
        raise ValueError(f"unknown route {route!r}")
    a = 1.1 * filled_radius(f) * np.exp(0.7j)
    tree = preimage_tree(f, a, n)
    drop = np.linspace(0, tree.size - 1, m).round().astype(int) if m else []
    z0 = np.delete(tree, drop)
    return find_roots_newton(iterated_derivative_newton(f, n, m), z0, tol, max_iter)
