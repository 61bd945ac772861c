"""Koenigs and Fatou coordinates at attracting and parabolic cycles.

Both coordinates are computed by pushing a jet through the dynamics in a
coordinate ``u = z - a`` centred at the cycle point, so relative precision
survives as the orbit closes in on ``a``.  The tail of the defining limit is
replaced by a local series solved coefficientwise:

* attracting: ``h(u) = u + O(u^2)`` with ``h∘G = λ h`` (``G`` the return map in
  ``u``), so ``Φ = h(u_N) / λ^N``;
* parabolic: with ``w = -1/(c_2 u)`` the return map is ``w + 1 + β/w + ...``
  and ``ψ(w) = w - β log w + Σ a_k w^{-k}`` solves ``ψ∘W = ψ + 1``, so
  ``Φ = ψ(w_N) - N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .bell import BellTable
from .errors import (DegenerateParabolic, DerivativeVanishes, NonFinite, NotInBasin, NotInPetal,
                     SuperattractingUnsupported)
from .jets import (Jet, eval_poly_coeffs, identity_coeffs, iterate_coeffs, iterate_log_coeffs,
                   jet_eval_poly, jet_inverse, jet_log, jet_reciprocal, mul_coeffs)
from .measure import decreasing_with_jitter
from .polycore import DEGREE_CAP, ComplexPoly, evaluate, iterate, taylor_shift
from .rootfinder import find_roots

TOL_FIX = 1e-10
PARABOLIC_TOL = 1e-8
SUPERATTRACTING_TOL = 1e-12
KOENIGS_STOP = 1e-10
KOENIGS_N_MAX = 200
KOENIGS_ORDER = 24
FATOU_ORDER = 10
FATOU_STOP = 500.0
FATOU_N_MAX = 10 ** 4
PETAL_STEPS = 10 ** 4
RATIO_FLOOR = 1e-12


@dataclass(frozen=True)
class CycleData:
    a: complex
    p: int
    lam: complex
    kind: str
    lam_root: complex
    orbit: Tuple[complex, ...] = ()
    multiplicity: int = 1

    @property
    def usable(self) -> bool:
        return self.kind in ("attracting", "superattracting", "parabolic")

    def to_json(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "p": self.p, "lambda": [self.lam.real, self.lam.imag],
                "kind": self.kind, "lambda_root": [self.lam_root.real, self.lam_root.imag],
                "usable": self.usable}


@dataclass(frozen=True)
class Petal:
    """Disk tangent to the parabolic point ``a`` along ``direction``."""

    a: complex
    direction: complex
    radius: float

    @property
    def center(self) -> complex:
        return self.a + self.radius * self.direction

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius


@dataclass(frozen=True, eq=False)
class Linearizer:
    f: ComplexPoly
    cycle: CycleData
    mode: str
    truncation: int
    petal: Optional[Petal] = None
    shifted: Tuple[ComplexPoly, ...] = ()
    series: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.complex128))
    beta: complex = 0.0
    trust_radius: float = 0.0


@dataclass
class RateReport:
    t: int
    kind: str
    errors: List[Tuple[int, float]]
    fitted_slope: Optional[float]
    expected_slope: float

    @property
    def decreasing(self) -> bool:
        e = [v for _, v in self.errors]
        return all(v == 0 for v in e) or decreasing_with_jitter(e)

    def slope_ok(self, rel: float = 0.1, absolute: Optional[float] = None) -> bool:
        if self.fitted_slope is None:
            return all(v == 0 for _, v in self.errors)
        tol = absolute if absolute is not None else rel * abs(self.expected_slope)
        return abs(self.fitted_slope - self.expected_slope) <= tol

    def to_json(self) -> dict:
        return {"t": self.t, "kind": self.kind, "errors": [[n, e] for n, e in self.errors],
                "fitted_slope": self.fitted_slope, "expected_slope": self.expected_slope}


# -- cycles -------------------------------------------------------------------------

def _classify(lam: complex) -> Tuple[str, complex]:
    if abs(lam) <= SUPERATTRACTING_TOL:
        return "superattracting", 0.0
    if abs(lam - 1.0) <= PARABOLIC_TOL:
        return "parabolic", 1.0
    if abs(lam) < 1.0:
        return "attracting", lam
    if abs(lam) > 1.0:
        return "repelling", lam
    return "indifferent", lam


def _refine(f: ComplexPoly, p: int, z: complex, k: int) -> complex:
    """Newton on the (k-1)-st derivative of ``f^p(z) - z``, simple at a k-fold fixed point."""
    for _ in range(50):
        c = iterate_coeffs(f, z, p, k, check=False)
        c[0] -= z
        c[1] -= 1.0
        num = math.factorial(k - 1) * c[k - 1]
        den = math.factorial(k) * c[k]
        if not np.isfinite(num) or den == 0:
            break
        step = num / den
        z = z - step
        if abs(step) <= 4e-16 * max(1.0, abs(z)):
            break
    return complex(z)


def make_cycle(f: ComplexPoly, a: complex, p: int, multiplicity: int = 1) -> CycleData:
    f = f.to_float()
    orbit = [complex(a)]
    for _ in range(p - 1):
        orbit.append(complex(evaluate(f, orbit[-1])))
    lam = complex(iterate_coeffs(f, a, p, 1, check=False)[1])
    kind, lam = _classify(lam)
    lam = complex(lam)
    if lam == 0 or lam == 1:
        root = complex(lam)
    else:
        root = complex(np.exp(np.log(lam) / p))
    return CycleData(complex(a), p, lam, kind, root, tuple(orbit), multiplicity)


def find_cycle(f: ComplexPoly, p: int, seed_box=None, degree_cap: int = DEGREE_CAP) -> List[CycleData]:
    """All fixed points of ``f^p``, deduplicated, each classified by its multiplier.

    Repelling and irrationally indifferent points are returned with
    ``usable == False``.  ``seed_box = (x0, x1, y0, y1)`` keeps only the
    points inside it.
    """
    f = f.to_float()
    g = iterate(f, p, degree_cap) - ComplexPoly([0, 1])
    cloud = find_roots(g)
    pts = cloud.points
    scale = 1.0 + np.abs(pts)
    near = np.abs(pts[:, None] - pts[None, :]) <= 1e-6 * np.maximum(scale[:, None], scale[None, :])
    ncomp, labels = connected_components(csr_matrix(near), directed=False)
    out = []
    for lab in range(ncomp):
        members = pts[labels == lab]
        k = members.size
        a = _refine(f, p, complex(members.mean()), k)
        if seed_box is not None:
            x0, x1, y0, y1 = seed_box
            if not (x0 <= a.real <= x1 and y0 <= a.imag <= y1):
                continue
        out.append(make_cycle(f, a, p, k))
    out.sort(key=lambda c: (c.a.real, c.a.imag))
    return out


# -- local series -------------------------------------------------------------------

def _shifted_maps(f: ComplexPoly, orbit: Sequence[complex]) -> Tuple[ComplexPoly, ...]:
    """``F_j(u) = f(a_j + u) - a_{j+1}`` with the constant term pinned to 0."""
    maps = []
    for j, aj in enumerate(orbit):
        c = np.array(taylor_shift(f, aj).coeffs)
        c[0] = 0.0
        maps.append(ComplexPoly(c))
    return tuple(maps)


def _return_taylor(maps: Sequence[ComplexPoly], order: int) -> np.ndarray:
    x = identity_coeffs(0.0, order)
    for F in maps:
        x = eval_poly_coeffs(F, x)
    x[0] = 0.0
    return x


def koenigs_series(G: np.ndarray, lam: complex) -> np.ndarray:
    """Coefficients of ``h = u + ...`` with ``h∘G = λ h`` to the order of ``G``."""
    K = G.size - 1
    h = np.zeros(K + 1, dtype=np.complex128)
    h[1] = 1.0
    powers = [None, G.copy()]
    for j in range(2, K + 1):
        powers.append(mul_coeffs(powers[-1], G))
    for k in range(2, K + 1):
        acc = sum(h[j] * powers[j][k] for j in range(1, k))
        h[k] = acc / (lam - lam ** k)
    return h


def _series_radius(h: np.ndarray) -> float:
    """Conservative radius on which the truncated series is trusted."""
    k = np.arange(2, h.size)
    mag = np.abs(h[2:])
    good = mag > 0
    if not np.any(good):
        return 1.0
    rho = float(np.min(mag[good] ** (-1.0 / k[good])))
    return 0.1 * rho


def fatou_series(G: np.ndarray, K: int = FATOU_ORDER) -> Tuple[complex, np.ndarray]:
    """``β`` and ``a_1..a_K`` of the asymptotic Fatou coordinate of ``G = u + c_2 u^2 + ...``.

    In ``v = 1/w = -c_2 u`` the return map reads ``W = w S(v)`` with
    ``S = 1/(1 + q)`` and ``q(u) = G(u)/u - 1``.  Matching powers of ``v`` in
    ``ψ(W) - ψ(w) = 1`` gives each ``a_k`` from the lower ones.
    """
    c2 = G[2]
    if abs(c2) < 1e-14:
        raise DegenerateParabolic("second Taylor coefficient of the return map vanishes")
    M = K + 2
    Q = np.zeros(M + 1, dtype=np.complex128)
    for k in range(1, min(M, G.size - 2) + 1):
        Q[k] = G[k + 1] * (-1.0 / c2) ** k
    one_plus_q = Q.copy()
    one_plus_q[0] = 1.0
    S = jet_reciprocal(Jet(0.0, one_plus_q)).coeffs
    beta = complex(S[2])
    logS = jet_log(Jet(0.0, S)).coeffs
    E = np.zeros(M + 1, dtype=np.complex128)
    E[:M] = S[1:]
    E[0] -= 1.0
    E -= beta * logS
    inv = one_plus_q  # 1/S
    P = [None]
    pw = np.zeros(M + 1, dtype=np.complex128)
    pw[0] = 1.0
    for j in range(1, K + 1):
        pw = mul_coeffs(pw, inv)
        q = pw.copy()
        q[0] -= 1.0
        P.append(q)
    a = np.zeros(K + 1, dtype=np.complex128)
    for k in range(1, K + 1):
        acc = E[k + 1] + sum(a[j] * P[j][k + 1 - j] for j in range(1, k))
        a[k] = acc / k
    return beta, a


def find_petal(f: ComplexPoly, cycle: CycleData, steps: int = PETAL_STEPS, iters: int = 12) -> Petal:
    """Largest tangent disk (by bisection) whose probe orbits stay inside and converge."""
    maps = _shifted_maps(f.to_float(), cycle.orbit)
    G = _return_taylor(maps, 2)
    c2 = G[2]
    if abs(c2) < 1e-14:
        raise DegenerateParabolic("second Taylor coefficient of the return map vanishes")
    direction = complex(-np.conj(c2) / abs(c2))
    theta = np.linspace(0.0, 2.0 * np.pi, 32, endpoint=False)

    def passes(r: float) -> bool:
        center = r * direction
        u = np.concatenate([[center], center + 0.98 * r * np.exp(1j * theta)])
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(steps):
                for F in maps:
                    u = evaluate(F, u)
                if not np.all(np.abs(u - center) <= r * (1 + 1e-9)):
                    return False
        return bool(np.all(np.abs(u) <= 4.0 / (abs(c2) * steps)))

    lo, hi = 1e-3 / abs(c2), 4.0 / abs(c2)
    if passes(hi):
        return Petal(cycle.a, direction, hi)
    if not passes(lo):
        raise NotInPetal("no tangent disk passed the probe test")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return Petal(cycle.a, direction, lo)


def make_linearizer(f: ComplexPoly, cycle: CycleData, mode: Optional[str] = None,
                    truncation: Optional[int] = None, petal: Optional[Petal] = None) -> Linearizer:
    f = f.to_float()
    if mode is None:
        mode = "abel" if cycle.kind == "parabolic" else "schroeder"
    maps = _shifted_maps(f, cycle.orbit)
    if mode == "schroeder":
        if cycle.kind == "superattracting":
            raise SuperattractingUnsupported("λ = 0 has no Koenigs coordinate")
        if cycle.kind != "attracting":
            raise ValueError(f"schroeder mode needs an attracting cycle, got {cycle.kind}")
        G = _return_taylor(maps, KOENIGS_ORDER)
        h = koenigs_series(G, cycle.lam)
        return Linearizer(f, cycle, mode, truncation or KOENIGS_N_MAX, None, maps, h, 0.0,
                          _series_radius(h))
    if mode == "abel":
        if cycle.kind != "parabolic":
            raise ValueError(f"abel mode needs a parabolic cycle, got {cycle.kind}")
        G = _return_taylor(maps, FATOU_ORDER + 3)
        beta, a = fatou_series(G)
        if petal is None:
            petal = find_petal(f, cycle)
        return Linearizer(f, cycle, mode, truncation or FATOU_N_MAX, petal, maps, a, beta,
                          FATOU_STOP)
    raise ValueError(f"unknown mode {mode!r}")


# -- coordinate evaluation ---------------------------------------------------------------

def _offset(lin: Linearizer, z: complex) -> int:
    """``k`` in ``0..p-1`` such that ``f^k(z)`` is attracted to (or petal of) ``a_0``."""
    f, cyc = lin.f, lin.cycle
    if lin.mode == "abel":
        w = complex(z)
        for k in range(cyc.p):
            if lin.petal.contains(w):
                return k
            w = complex(evaluate(f, w))
        raise NotInPetal(f"no point of the first {cyc.p} iterates of {z} lies in the petal")
    orbit = np.array(cyc.orbit)
    w = complex(z)
    for M in range(lin.truncation * cyc.p + 1):
        d = np.abs(w - orbit)
        j = int(np.argmin(d))
        if d[j] <= lin.trust_radius:
            return (M - j) % cyc.p
        w = complex(evaluate(f, w))
        if not np.isfinite(w):
            break
    raise NotInBasin(f"orbit of {z} does not approach the cycle within {lin.truncation} periods")


def _push_to_a0(lin: Linearizer, z: complex, t: int):
    """The jet of ``f^k - a_0`` at ``z`` and the offset ``k``."""
    k = _offset(lin, z)
    x = identity_coeffs(complex(z), t)
    for _ in range(k):
        x = eval_poly_coeffs(lin.f, x)
    x[0] -= lin.cycle.orbit[0]
    return x, k


def schroeder_phi(lin: Linearizer, z: complex, t: int) -> Jet:
    """Order-t jet of the Koenigs coordinate, ``Φ'(a) = 1`` and ``Φ∘f = λ^{1/p} Φ``."""
    if lin.mode != "schroeder":
        raise ValueError("linearizer is not in schroeder mode")
    cyc = lin.cycle
    x, k = _push_to_a0(lin, z, t)
    N = 0
    while N < lin.truncation and abs(x[0]) >= KOENIGS_STOP:
        for F in lin.shifted:
            x = eval_poly_coeffs(F, x)
        N += 1
    if abs(x[0]) > lin.trust_radius:
        raise NotInBasin(f"orbit of {z} still at distance {abs(x[0]):.3g} after {N} periods")
    phi = eval_poly_coeffs(ComplexPoly(lin.series), x)
    scale = cyc.lam ** (-N) * cyc.lam_root ** (-k)
    return Jet(z, phi * scale)


def abel_phi(lin: Linearizer, z: complex, t: int) -> Jet:
    """Order-t jet of the Fatou coordinate, ``Φ∘f^p = Φ + 1`` on the petal."""
    if lin.mode != "abel":
        raise ValueError("linearizer is not in abel mode")
    cyc = lin.cycle
    c2 = complex(_return_taylor(lin.shifted, 2)[2])
    x, k = _push_to_a0(lin, z, t)
    N = 0
    while N < lin.truncation and abs(x[0]) * abs(c2) * FATOU_STOP > 1.0:
        for F in lin.shifted:
            x = eval_poly_coeffs(F, x)
        N += 1
    if not lin.petal.contains(x[0] + cyc.orbit[0]):
        raise NotInPetal(f"orbit of {z} left the petal")
    ujet = Jet(z, x)
    w = jet_reciprocal(ujet) * (-1.0 / c2)
    v = ujet * (-c2)
    psi = w - jet_log(w) * lin.beta + jet_eval_poly(ComplexPoly(lin.series), v)
    return psi - (N + k / cyc.p)


def phi_jet(lin: Linearizer, z: complex, t: int) -> Jet:
    return schroeder_phi(lin, z, t) if lin.mode == "schroeder" else abel_phi(lin, z, t)


def functional_residual(lin: Linearizer, z: complex) -> float:
    """``|Φ(f z) - λ^{1/p} Φ(z)|`` or ``|Φ(f z) - Φ(z) - 1/p|``."""
    fz = complex(evaluate(lin.f, z))
    a, b = phi_jet(lin, z, 0).value, phi_jet(lin, fz, 0).value
    if lin.mode == "schroeder":
        return abs(b - lin.cycle.lam_root * a)
    return abs(b - a - 1.0 / lin.cycle.p)


def fit_beta(lin: Linearizer, z: complex, n_values: Sequence[int]) -> float:
    """Least-squares slope of ``w(f^{pN} z) - N`` against ``log N`` (parabolic diagnostic)."""
    c2 = complex(_return_taylor(lin.shifted, 2)[2])
    x, _ = _push_to_a0(lin, z, 0)
    u = complex(x[0])
    n_values = sorted(n_values)
    vals, done = [], 0
    for n in n_values:
        for _ in range(n - done):
            for F in lin.shifted:
                u = complex(evaluate(F, u))
        done = n
        vals.append((-1.0 / (c2 * u)).real - n)
    slope, _ = np.polyfit(np.log(n_values), vals, 1)
    return float(slope)


# -- derivative-ratio rates ------------------------------------------------------------

def derivative_ratio_iterate(f: ComplexPoly, n: int, t: int, z, floor: float = RATIO_FLOOR):
    """``(f^n)^(t)(z) / (f^n)'(z)`` via an order-t jet in extended exponent range.

    Raises DerivativeVanishes when ``|(f^n)'|`` is below ``floor`` times the
    largest higher derivative coefficient, which happens on backward orbits
    of critical points.
    """
    if t < 2:
        raise ValueError("t must be >= 2")
    scalar = np.ndim(z) == 0
    u, _ = iterate_log_coeffs(f, np.atleast_1d(np.asarray(z, dtype=np.complex128)), n, t)
    top = np.max(np.abs(u[2:]), axis=0)
    bad = np.abs(u[1]) <= floor * top
    if np.any(bad):
        raise DerivativeVanishes(f"(f^{n})' vanishes to working precision at {np.sum(bad)} point(s)")
    r = math.factorial(t) * u[t] / u[1]
    return complex(r[0]) if scalar else r


def _fit(xs, es) -> Optional[float]:
    xs, es = np.asarray(xs, dtype=float), np.asarray(es, dtype=float)
    keep = es > 0
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(xs[keep], np.log(es[keep]), 1)
    return float(slope)


def verify_theorem_b(f: ComplexPoly, cycle: CycleData, t: int, test_points, n_range,
                     lin: Optional[Linearizer] = None) -> RateReport:
    """Errors ``e_n = max_z |(f^n)^(t)/(f^n)' - Φ^(t)/Φ'|`` and their fitted rate.

    Attracting cycles are fitted in ``log e_n`` against ``n`` (expected
    ``log|λ|/p``); parabolic ones against ``log n`` (expected ``-1``).
    """
    if lin is None:
        lin = make_linearizer(f, cycle)
    pts = np.asarray(test_points, dtype=np.complex128).ravel()
    target = []
    for z in pts:
        jet = phi_jet(lin, complex(z), t)
        if abs(jet.coeffs[1]) <= RATIO_FLOOR * np.max(np.abs(jet.coeffs[2:])):
            raise DerivativeVanishes(f"Φ' vanishes at {z}")
        target.append(math.factorial(t) * jet.coeffs[t] / jet.coeffs[1])
    target = np.array(target)
    ns = [int(n) for n in n_range]
    errors = []
    for n in ns:
        lhs = derivative_ratio_iterate(f, n, t, pts)
        errors.append((n, float(np.max(np.abs(lhs - target)))))
    es = [e for _, e in errors]
    if cycle.kind == "parabolic":
        return RateReport(t, cycle.kind, errors, _fit(np.log(ns), es), -1.0)
    return RateReport(t, cycle.kind, errors, _fit(ns, es), math.log(abs(cycle.lam)) / cycle.p)


def key_identity_rhs(lin: Linearizer, table: BellTable, t: int, z: complex, n: int) -> complex:
    """Right side of the derivative-ratio expansion through ``Φ`` and its local inverse."""
    cyc = lin.cycle
    if t > table.s_max + 1:
        raise ValueError(f"t = {t} needs a table with s_max >= {t - 1}")
    phi = phi_jet(lin, z, t)
    dphi = phi.derivatives()
    wn = complex(iterate_coeffs(lin.f, z, n, 0)[0])
    inv = jet_inverse(phi_jet(lin, wn, t)).derivatives()
    scale = cyc.lam_root ** n
    xs = [scale * dphi[q + 1] for q in range(t - 1)]
    out = dphi[t] / dphi[1]
    for s in range(1, t):
        inner = sum(inv[u + 1] / inv[1] * table[s, u](*xs[:s]) for u in range(1, s + 1))
        out += math.comb(t - 1, s) * inner * dphi[t - s] / dphi[1]
    return complex(out)


def verify_key_identity(f: ComplexPoly, cycle: CycleData, table: BellTable, t: int, z: complex,
                        n: int, floor: float = 1e-300, lin: Optional[Linearizer] = None) -> float:
    """``|LHS - RHS| / (|LHS| + floor)`` for the derivative-ratio expansion."""
    if cycle.kind != "attracting":
        raise ValueError("the key identity check needs an attracting cycle with λ != 0")
    if lin is None:
        lin = make_linearizer(f, cycle)
    lhs = derivative_ratio_iterate(f, n, t, complex(z))
    rhs = key_identity_rhs(lin, table, t, complex(z), n)
    return abs(lhs - rhs) / (abs(lhs) + floor)


def chain_residual(lin: Linearizer, z: complex, n: int) -> float:
    """Relative error of ``(Φ'∘f^n)·(f^n)' = λ^{n/p} Φ'`` at ``z``."""
    jet = iterate_coeffs(lin.f, z, n, 1)
    left = phi_jet(lin, complex(jet[0]), 1).coeffs[1] * jet[1]
    right = phi_jet(lin, z, 1).coeffs[1]
    if lin.mode == "schroeder":
        right = right * lin.cycle.lam_root ** n
    return float(abs(left - right) / abs(right))
