import math

import numpy as np
import pytest

from iterzeros.bell import build_bell_table
from iterzeros.errors import DerivativeVanishes, NotInBasin, NotInPetal, SuperattractingUnsupported
from iterzeros.jets import iterate_coeffs
from iterzeros.linearize import (chain_residual, derivative_ratio_iterate, find_cycle,
                                 fit_beta, functional_residual, make_cycle, make_linearizer,
                                 key_identity_rhs, schroeder_phi, abel_phi, verify_key_identity,
                                 verify_theorem_b)
from iterzeros.polycore import ComplexPoly, evaluate

F02 = ComplexPoly([0.2, 0, 1])
PARA = ComplexPoly([0, 1, 1])
A02 = (1 - math.sqrt(0.2)) / 2


def attracting(f=F02):
    return next(c for c in find_cycle(f, 1) if c.kind == "attracting")


@pytest.fixture(scope="module")
def koenigs():
    return make_linearizer(F02, attracting())


@pytest.fixture(scope="module")
def fatou():
    cyc = next(c for c in find_cycle(PARA, 1) if c.kind == "parabolic")
    return make_linearizer(PARA, cyc)


def test_find_cycle_examples():
    cyc = attracting()
    assert cyc.a == pytest.approx(A02, abs=1e-14)
    assert cyc.lam == pytest.approx(2 * A02, abs=1e-14)
    assert cyc.lam_root == cyc.lam

    by_kind = {c.kind: c for c in find_cycle(ComplexPoly([0, 0, 1]), 1)}
    assert by_kind["superattracting"].a == 0 and by_kind["superattracting"].lam == 0
    assert by_kind["repelling"].a == pytest.approx(1) and not by_kind["repelling"].usable

    (para,) = find_cycle(PARA, 1)
    assert para.kind == "parabolic" and para.multiplicity == 2
    assert abs(para.a) < 1e-12 and para.lam == 1


def test_find_cycle_period_two():
    # z^2 - 1 has the superattracting 2-cycle {0, -1}
    cycles = find_cycle(ComplexPoly([-1, 0, 1]), 2)
    sup = [c for c in cycles if c.kind == "superattracting"]
    assert sorted(round(c.a.real, 12) for c in sup) == [-1.0, 0.0]
    assert all(len(c.orbit) == 2 for c in cycles)


def test_lambda_root_is_a_pth_root():
    f = ComplexPoly([-0.9, 0, 1])  # attracting 2-cycle
    cyc = next(c for c in find_cycle(f, 2) if c.kind == "attracting")
    assert abs(cyc.lam_root ** 2 - cyc.lam) < 1e-12


def test_linear_test_map():
    lam = 0.5 + 0.2j
    f = ComplexPoly([0, lam])
    lin = make_linearizer(f, make_cycle(f, 0.0, 1))
    jet = schroeder_phi(lin, 0.7 - 0.3j, 2)
    assert np.allclose(jet.coeffs, [0.7 - 0.3j, 1, 0], atol=1e-14)
    assert derivative_ratio_iterate(f, 5, 2, 0.3) == 0
    rep = verify_theorem_b(f, lin.cycle, 2, [0.1, 0.4j], range(1, 6), lin=lin)
    assert all(e == 0 for _, e in rep.errors)


def test_schroeder_normalization(koenigs):
    jet = schroeder_phi(koenigs, attracting().a, 1)
    assert abs(jet.coeffs[0]) < 1e-15
    assert jet.coeffs[1] == pytest.approx(1, abs=1e-12)


def test_schroeder_residual_near_fixed_point():
    lin = make_linearizer(F02, attracting(), truncation=60)
    assert functional_residual(lin, 0.1) <= 1e-9


def test_schroeder_residual_across_basin(rng):
    lin = make_linearizer(F02, attracting(), truncation=80)
    # the basin is the interior of K(f); sample a disk well inside it
    z = 0.35 * np.sqrt(rng.uniform(size=50)) * np.exp(2j * np.pi * rng.uniform(size=50))
    for w in z:
        phi = schroeder_phi(lin, w, 0).value
        assert functional_residual(lin, w) <= 1e-8 * (1 + abs(phi))


def test_schroeder_rejects_escaping_point(koenigs):
    with pytest.raises(NotInBasin):
        schroeder_phi(koenigs, 3.0, 1)


def test_superattracting_has_no_koenigs_map():
    sup = next(c for c in find_cycle(ComplexPoly([0, 0, 1]), 1) if c.kind == "superattracting")
    with pytest.raises(SuperattractingUnsupported):
        make_linearizer(ComplexPoly([0, 0, 1]), sup)


def test_schroeder_on_period_two_cycle():
    f = ComplexPoly([-0.9, 0, 1])
    cyc = next(c for c in find_cycle(f, 2) if c.kind == "attracting")
    lin = make_linearizer(f, cyc)
    for z in [0.05, -0.2 + 0.1j, -0.95]:
        assert functional_residual(lin, z) <= 1e-8 * (1 + abs(schroeder_phi(lin, z, 0).value))


def test_abel_residual_on_axis(fatou):
    assert functional_residual(fatou, -0.5) <= 1e-6


def test_abel_residual_across_petal(fatou, rng):
    petal = fatou.petal
    r = petal.radius * 0.9 * np.sqrt(rng.uniform(size=20))
    z = petal.center + r * np.exp(2j * np.pi * rng.uniform(size=20))
    for w in z:
        assert functional_residual(fatou, w) <= 1e-5


def test_petal_points_along_attracting_axis(fatou):
    assert fatou.petal.direction == pytest.approx(-1)
    assert fatou.petal.contains(-0.3)
    with pytest.raises(NotInPetal):
        abel_phi(fatou, 0.3, 0)


def test_abel_log_term_matches_fit(fatou):
    # for z + z^2, w(f^N z) - N grows like beta log N with beta = 1
    assert fatou.beta == pytest.approx(1.0, abs=1e-12)
    assert fit_beta(fatou, -0.3, [2 ** k for k in range(8, 14)]) == pytest.approx(1.0, abs=0.05)


def test_abel_injective_on_petal(fatou, rng):
    petal = fatou.petal
    r = petal.radius * 0.9 * np.sqrt(rng.uniform(size=(200, 2)))
    z = petal.center + r * np.exp(2j * np.pi * rng.uniform(size=(200, 2)))
    for z1, z2 in z:
        assert abs(abel_phi(fatou, z1, 0).value - abel_phi(fatou, z2, 0).value) >= 1e-8


def test_derivative_ratio_examples():
    assert derivative_ratio_iterate(F02, 1, 2, 0.1) == pytest.approx(10)
    assert derivative_ratio_iterate(ComplexPoly([0, 0, 1]), 2, 2, 1.0) == pytest.approx(3)


def test_derivative_ratio_vanishing_derivative():
    with pytest.raises(DerivativeVanishes):
        derivative_ratio_iterate(F02, 3, 2, 0.0)


def test_chain_identity(koenigs, rng):
    z = 0.3 * np.sqrt(rng.uniform(size=10)) * np.exp(2j * np.pi * rng.uniform(size=10))
    for w in z:
        for n in (1, 5, 20):
            assert chain_residual(koenigs, w, n) <= 1e-7


def test_phi_prime_vanishes_on_critical_backward_orbit(koenigs):
    # 0 is critical; its preimages under f stay in the basin
    pts = [0.0]
    level = [0.0]
    for _ in range(2):
        level = [s * np.sqrt(w - 0.2 + 0j) for w in level for s in (1, -1)]
        pts += level
    for z in pts:
        jet = schroeder_phi(koenigs, z, 2)
        scale = abs(jet.coeffs[2]) + abs(schroeder_phi(koenigs, z + 1e-3, 1).coeffs[1])
        assert abs(jet.coeffs[1]) <= 1e-6 * scale


def test_rate_schroeder():
    cyc = attracting()
    pts = 0.3 * np.exp(2j * np.pi * np.arange(10) / 10) + 0.05
    for t in (2, 3):
        rep = verify_theorem_b(F02, cyc, t, pts, range(5, 41))
        assert rep.decreasing
        assert rep.slope_ok(rel=0.1)
        assert rep.expected_slope == pytest.approx(math.log(0.552786), abs=1e-6)


def test_rate_abel(fatou):
    pts = [-0.4, -0.3, -0.2, -0.1]
    rep = verify_theorem_b(PARA, fatou.cycle, 2, pts, [2 ** k for k in range(4, 13)], lin=fatou)
    assert rep.decreasing
    assert rep.slope_ok(absolute=0.2)


def test_key_identity(koenigs):
    table = build_bell_table(4)
    for t in (2, 3, 4):
        assert verify_key_identity(F02, koenigs.cycle, table, t, 0.1, 10, lin=koenigs) <= 1e-6


def test_key_identity_correction_fades(koenigs):
    # t = 2: the single correction term carries a factor λ^n
    table = build_bell_table(2)
    jet = schroeder_phi(koenigs, 0.1, 2)
    limit = 2 * jet.coeffs[2] / jet.coeffs[1]
    gaps = [abs(key_identity_rhs(koenigs, table, 2, 0.1, n) - limit) for n in (5, 10, 15)]
    assert gaps[1] < gaps[0] * 0.552786 ** 4 and gaps[2] < gaps[1] * 0.552786 ** 4


def test_forward_orbit_of_cycle_point():
    f = ComplexPoly([-0.9, 0, 1])
    cyc = next(c for c in find_cycle(f, 2) if c.kind == "attracting")
    a0, a1 = cyc.orbit
    assert abs(evaluate(f, a1) - a0) < 1e-12
    lam = iterate_coeffs(f, a0, 2, 1)[1]
    assert lam == pytest.approx(cyc.lam)
