"""Acceptance criteria, one test per criterion, each with its runtime budget.

Every test records a one-line PASS/FAIL verdict; conftest prints them in the
terminal summary so they appear in a plain ``pytest -v`` run.
"""

import math
import time

import numpy as np

from iterzeros.bell import build_bell_table, check_vanishing, faa_di_bruno_check, partial_bell_oracle
from iterzeros.equidist import arcsine_ks, bl_distance, m1_telescoping_check
from iterzeros.jets import Jet
from iterzeros.linearize import (find_cycle, functional_residual, make_linearizer, verify_key_identity,
                                 verify_theorem_b)
from iterzeros.measure import EmpiricalMeasure, decreasing_with_jitter
from iterzeros.polycore import ComplexPoly, detect_exceptional
from iterzeros.potential import (brolin_sample, green_escape, green_grid, l1_distance, normalized_logmod_grid,
                                 robin_constant)
from iterzeros.rootfinder import find_roots, roots_of_iterated_derivative

RESULTS = {}


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def record(number: int, title: str, ok: bool, detail: str, seconds: float, budget: float):
    ok = bool(ok) and seconds < budget
    RESULTS[number] = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}; "
                       f"{seconds:.1f}s (< {budget:g}s)")
    assert ok, RESULTS[number]


def test_criterion_01_bell_exactness():
    with Clock() as c:
        T = build_bell_table(8)
        pairs = [(s, u) for s in range(1, 9) for u in range(1, s + 1)]
        mismatches = [p for p in pairs if T[p] != partial_bell_oracle(*p)]
        violations = check_vanishing(build_bell_table(12))
    record(1, "Bell table exactness", len(pairs) == 36 and not mismatches and not violations,
           f"{len(pairs) - len(mismatches)}/36 entries equal, {len(violations)} vanishing violations",
           c.seconds, 5)


def test_criterion_02_faa_di_bruno():
    rng = np.random.default_rng(2)
    T = build_bell_table(8)
    with Clock() as c:
        worst = 0.0
        for _ in range(100):
            hc = rng.uniform(-1, 1, 9) + 1j * rng.uniform(-1, 1, 9)
            Gc = rng.uniform(-1, 1, 10) + 1j * rng.uniform(-1, 1, 10)
            worst = max(worst, faa_di_bruno_check(T, Jet(hc[0], Gc), Jet(0.0, hc)))
    record(2, "Faa di Bruno identity", worst <= 1e-10, f"max relative error {worst:.2e} (<= 1e-10)",
           c.seconds, 5)


def test_criterion_03_schroeder_regime():
    f = ComplexPoly([0.2, 0, 1])
    with Clock() as c:
        cyc = next(x for x in find_cycle(f, 1) if x.kind == "attracting")
        lin = make_linearizer(f, cyc)
        pts = 0.3 * np.exp(2j * np.pi * np.arange(10) / 10) + 0.05
        resid = max(functional_residual(lin, z) for z in pts)
        reps = [verify_theorem_b(f, cyc, t, pts, range(5, 41), lin=lin) for t in (2, 3)]
    expected = math.log(0.552786)
    ok = resid <= 1e-8 and all(r.slope_ok(rel=0.1) for r in reps)
    slopes = ", ".join(f"t={r.t}: {r.fitted_slope:.4f}" for r in reps)
    record(3, "Schroeder rate", ok, f"residual {resid:.1e}, slopes {slopes} vs {expected:.4f}",
           c.seconds, 10)


def test_criterion_04_abel_regime():
    f = ComplexPoly([0, 1, 1])
    with Clock() as c:
        cyc = next(x for x in find_cycle(f, 1) if x.kind == "parabolic")
        lin = make_linearizer(f, cyc)
        pts = [-0.4, -0.3, -0.2, -0.1]
        resid = max(functional_residual(lin, z) for z in pts)
        rep = verify_theorem_b(f, cyc, 2, pts, [2 ** k for k in range(4, 13)], lin=lin)
    ok = resid <= 1e-5 and rep.slope_ok(absolute=0.2)
    record(4, "Abel rate", ok, f"residual {resid:.1e}, log-log slope {rep.fitted_slope:.3f} vs -1 +- 0.2",
           c.seconds, 60)


def test_criterion_05_key_identity():
    f = ComplexPoly([0.2, 0, 1])
    with Clock() as c:
        cyc = next(x for x in find_cycle(f, 1) if x.kind == "attracting")
        lin = make_linearizer(f, cyc)
        table = build_bell_table(3)
        res = max(verify_key_identity(f, cyc, table, t, 0.1, 10, lin=lin) for t in (2, 3))
    record(5, "key identity", res <= 1e-6, f"residual {res:.1e} (<= 1e-6)", c.seconds, 5)


def test_criterion_06_chebyshev_arcsine():
    f = ComplexPoly([-2, 0, 1])
    ns = list(range(6, 12))
    with Clock() as c:
        real_ok, ks = True, {}
        for m in (1, 2):
            ks[m] = []
            for n in ns:
                pts = roots_of_iterated_derivative(f, n, m).points
                real_ok &= bool(np.max(np.abs(pts.imag)) < 1e-8 and np.max(np.abs(pts.real)) <= 2)
                ks[m].append(arcsine_ks(pts))
    dec = all(all(b < a for a, b in zip(v, v[1:])) for v in ks.values())
    final = max(v[-1] for v in ks.values())
    record(6, "Chebyshev arcsine", real_ok and dec and final <= 0.05,
           f"real in [-2,2]: {real_ok}, KS decreasing: {dec}, KS at n=11 {final:.1e} (<= 0.05)",
           c.seconds, 60)


def test_criterion_07_l1_potentials():
    f = ComplexPoly([-1, 0, 1])
    rect = (-2.0, 2.0, -2.0, 2.0)
    area = 16.0
    ns = list(range(6, 12))
    with Clock() as c:
        g = green_grid(f, rect, 256, 256)
        norms = {m: [l1_distance(normalized_logmod_grid(f, n, m, rect, 256, 256), g) for n in ns]
                 for m in (1, 2, 3)}
    ok = all(decreasing_with_jitter(v, 0.1) and v[-1] <= 0.05 * area for v in norms.values())
    finals = ", ".join(f"m={m}: {v[-1]:.3f}" for m, v in norms.items())
    record(7, "L1 potentials", ok, f"decreasing with 10% jitter, final {finals} (<= {0.05 * area:g})",
           c.seconds, 120)


def test_criterion_08_counterexample():
    f = ComplexPoly([0, 0, 1])
    with Clock() as c:
        exc = detect_exceptional(f)
        mu = EmpiricalMeasure.uniform(np.exp(2j * np.pi * np.arange(4096) / 4096))
        rect = (-2.0, 2.0, -2.0, 2.0)
        spread, dists = 0.0, []
        for n in range(1, 12):
            cl = roots_of_iterated_derivative(f, n, 1)
            spread = max(spread, float(np.max(np.abs(cl.points))))
            dists.append(bl_distance(cl.as_measure(), mu, rect))
    ok = exc.has_finite_exceptional and exc.b == 0 and spread < 1e-3 and min(dists) >= 0.3
    record(8, "counterexample path", ok,
           f"b = {complex(exc.b) + 0:.3g}, max |zero| {spread:.1e}, min BL distance {min(dists):.3f} (>= 0.3)", c.seconds, 10)


def test_criterion_09_m1_structure():
    cases = [(ComplexPoly([1, 0, 1]), 9), (ComplexPoly([-2, 0, 1]), 9), (ComplexPoly([0, -1, 0, 1]), 5)]
    with Clock() as c:
        reps = [m1_telescoping_check(f, n) for f, n in cases for n in range(1, n + 1)]
    worst = max(r.max_match_distance for r in reps)
    counts = all(r.zero_count == r.predicted_count == sum(r.level_counts) for r in reps)
    record(9, "m=1 telescoping", all(r.passed for r in reps) and counts,
           f"{len(reps)} (f, n) cases, worst match {worst:.1e} (<= 1e-6), counts exact: {counts}",
           c.seconds, 30)


def test_criterion_10_brolin_vs_green():
    f = ComplexPoly([-2, 0, 1])
    count = 4096
    with Clock() as c:
        mu = brolin_sample(f, 3.0, 14, count, seed=10)
        z = np.array([3.0, -3.0, 2.5j, -2.5j, 2 + 2j, -2 + 2j, 2 - 2j, -2 - 2j, 4 + 1j, -1 - 4j])
        pot = np.log(np.abs(z[:, None] - mu.points[None, :])) @ mu.weights
        gap = float(np.max(np.abs(pot - (green_escape(f, z) - robin_constant(f)))))
    bound = 5 / math.sqrt(count)
    record(10, "Brolin vs Green", gap <= bound, f"max gap {gap:.4f} (<= {bound:.4f})", c.seconds, 30)


def scaled_residual(c: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``|p(r)| / (max|c| max(1, |r|)^deg)``; outside the unit disk via the reversed polynomial."""
    out = np.empty(r.size)
    big = np.abs(r) > 1
    out[~big] = np.abs(np.polyval(c[::-1], r[~big]))
    out[big] = np.abs(np.polyval(c, 1 / r[big]))
    return out / np.max(np.abs(c))


def test_criterion_11_root_certification():
    rng = np.random.default_rng(11)
    worst, slowest, failures = 0.0, 0.0, 0
    for _ in range(50):
        rad = np.sqrt(rng.uniform(size=1024))
        roots = rad * np.exp(2j * np.pi * rng.uniform(size=1024))
        p = ComplexPoly(np.poly(roots)[::-1])
        with Clock() as c:
            cl = find_roots(p)
        slowest = max(slowest, c.seconds)
        res = float(np.max(scaled_residual(p.coeffs, cl.points)))
        worst = max(worst, res)
        failures += len(cl) != 1024 or not res <= 1e-8
    record(11, "root certification", failures == 0,
           f"50 degree-1024 polynomials, worst scaled residual {worst:.1e} (<= 1e-8)", slowest, 10)
