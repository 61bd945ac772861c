"""Dense complex polynomials: evaluation, differentiation, composition, iteration.

Coefficients are stored in increasing powers of ``z``.  Two storage modes
exist: double-precision complex (a numpy array) and an exact mode whose
coefficients are Gaussian rationals, used by the small-case oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from sympy.polys.domains import QQ_I

from .errors import DegreeCapExceeded

DEGREE_CAP = 2 ** 16


def _to_gaussian(c):
    if isinstance(c, complex):
        return QQ_I(Fraction(c.real), Fraction(c.imag))
    if isinstance(c, (tuple, list)):
        return QQ_I(Fraction(c[0]), Fraction(c[1]))
    if hasattr(c, "x") and hasattr(c, "y"):
        return c
    return QQ_I(Fraction(c), 0)


class ComplexPoly:
    """Immutable dense polynomial ``sum(coeffs[k] * z**k)``.

    Trailing zero coefficients are dropped, so the leading coefficient is
    nonzero unless the polynomial is identically zero (``degree == -1``).
    """

    __slots__ = ("_c", "exact")

    def __init__(self, coeffs, exact: bool = False):
        if exact:
            c = [_to_gaussian(x) for x in coeffs]
            while len(c) > 1 and c[-1] == QQ_I.zero:
                c.pop()
            if not c:
                c = [QQ_I.zero]
            self._c = tuple(c)
        else:
            c = np.array(coeffs, dtype=np.complex128).ravel()
            if c.size == 0:
                c = np.zeros(1, dtype=np.complex128)
            nz = np.flatnonzero(c)
            c = c[: nz[-1] + 1] if nz.size else c[:1]
            c.setflags(write=False)
            self._c = c
        self.exact = exact

    @classmethod
    def monomial(cls, k: int, coeff=1.0, exact=False) -> "ComplexPoly":
        c = [0] * k + [coeff]
        return cls(c, exact=exact)

    @classmethod
    def from_roots(cls, roots, leading=1.0) -> "ComplexPoly":
        return cls(leading * np.poly(roots)[::-1])

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self) -> int:
        if len(self._c) == 1 and self._c[0] == 0:
            return -1
        return len(self._c) - 1

    @property
    def leading(self):
        return self._c[-1]

    def is_zero(self) -> bool:
        return self.degree == -1

    def to_float(self) -> "ComplexPoly":
        if not self.exact:
            return self
        return ComplexPoly([complex(float(c.x), float(c.y)) for c in self._c])

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.to_float()._c)))

    def __call__(self, z):
        return evaluate(self, z)

    def __add__(self, other):
        return _binop(self, other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return _binop(self, other, lambda a, b: a - b)

    def __rsub__(self, other):
        return _binop(self, other, lambda a, b: b - a)

    def __mul__(self, other):
        if not isinstance(other, ComplexPoly):
            return self * ComplexPoly([other], exact=self.exact)
        if self.exact or other.exact:
            return ComplexPoly(_exact_convolve(_as_exact(self)._c, _as_exact(other)._c), exact=True)
        return ComplexPoly(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __eq__(self, other):
        if not isinstance(other, ComplexPoly):
            return NotImplemented
        if self.exact and other.exact:
            return self._c == other._c
        a, b = self.to_float()._c, other.to_float()._c
        return a.shape == b.shape and bool(np.all(a == b))

    def __hash__(self):
        return hash(tuple(complex(c) if not self.exact else (c.x, c.y) for c in self._c))

    def __repr__(self):
        if self.exact:
            return f"ComplexPoly({[str(c) for c in self._c]}, exact=True)"
        return f"ComplexPoly({self._c.tolist()})"


def _as_exact(p: ComplexPoly) -> ComplexPoly:
    if p.exact:
        return p
    return ComplexPoly([complex(c) for c in p._c], exact=True)


def _exact_convolve(a: Sequence, b: Sequence) -> list:
    out = [QQ_I.zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == QQ_I.zero:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _binop(p: ComplexPoly, q, op) -> ComplexPoly:
    if not isinstance(q, ComplexPoly):
        q = ComplexPoly([q], exact=p.exact)
    exact = p.exact or q.exact
    a = list(_as_exact(p)._c) if exact else p._c
    b = list(_as_exact(q)._c) if exact else q._c
    n = max(len(a), len(b))
    if exact:
        a = a + [QQ_I.zero] * (n - len(a))
        b = b + [QQ_I.zero] * (n - len(b))
        return ComplexPoly([op(x, y) for x, y in zip(a, b)], exact=True)
    a = np.pad(a, (0, n - len(a)))
    b = np.pad(b, (0, n - len(b)))
    return ComplexPoly(op(a, b))


def evaluate(p: ComplexPoly, z):
    """Horner evaluation; ``z`` may be a scalar or a numpy array (float mode)."""
    c = p.coeffs
    if p.exact:
        z = _to_gaussian(z)
        acc = c[-1]
        for k in range(len(c) - 2, -1, -1):
            acc = acc * z + c[k]
        return acc
    z = np.asarray(z, dtype=np.complex128)
    acc = np.full(z.shape, c[-1], dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(len(c) - 2, -1, -1):
            acc = acc * z + c[k]
    return acc[()] if acc.ndim == 0 else acc


def derivative(p: ComplexPoly, m: int = 1) -> ComplexPoly:
    """The m-th formal derivative; the zero polynomial when ``m > degree``."""
    if m < 1:
        raise ValueError("derivative order must be >= 1")
    if p.degree < m:
        return ComplexPoly([0], exact=p.exact)
    n = len(p.coeffs)
    if p.exact:
        out = []
        for k in range(m, n):
            fall = 1
            for j in range(m):
                fall *= k - j
            out.append(p.coeffs[k] * QQ_I(fall, 0))
        return ComplexPoly(out, exact=True)
    k = np.arange(m, n, dtype=float)
    fall = np.ones_like(k)
    for j in range(m):
        fall *= k - j
    return ComplexPoly(p.coeffs[m:] * fall)


def compose(p: ComplexPoly, q: ComplexPoly, degree_cap: int = DEGREE_CAP) -> ComplexPoly:
    """Coefficients of ``p(q(z))`` by Horner's rule over the polynomial ring."""
    dp, dq = max(p.degree, 0), max(q.degree, 0)
    if dp * dq > degree_cap:
        raise DegreeCapExceeded(f"degree {dp}*{dq} exceeds cap {degree_cap}")
    exact = p.exact or q.exact
    if exact:
        p, q = _as_exact(p), _as_exact(q)
        acc = [p.coeffs[-1]]
        for k in range(len(p.coeffs) - 2, -1, -1):
            acc = _exact_convolve(acc, q.coeffs)
            acc[0] = acc[0] + p.coeffs[k]
        return ComplexPoly(acc, exact=True)
    acc = np.array([p.coeffs[-1]], dtype=np.complex128)
    for k in range(len(p.coeffs) - 2, -1, -1):
        acc = np.convolve(acc, q.coeffs)
        acc[0] += p.coeffs[k]
    return ComplexPoly(acc)


def iterate(f: ComplexPoly, n: int, degree_cap: int = DEGREE_CAP) -> ComplexPoly:
    """The n-th iterate ``f∘…∘f`` in coefficient form, degree ``d**n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = f.degree
    if d > 1 and d ** n > degree_cap:
        raise DegreeCapExceeded(f"d^n = {d}^{n} exceeds cap {degree_cap}")
    g = f
    for _ in range(n - 1):
        g = compose(f, g, degree_cap)
    return g


def taylor_shift(p: ComplexPoly, a) -> ComplexPoly:
    """Coefficients of ``u -> p(a + u)``."""
    shift = ComplexPoly([a, 1], exact=p.exact)
    return compose(p, shift)


@dataclass(frozen=True)
class ExceptionalReport:
    has_finite_exceptional: bool
    b: Optional[complex] = None
    A: Optional[complex] = None


def default_eps_exc(f: ComplexPoly) -> float:
    return 1e-8 * (1.0 + f.max_abs_coeff())


def detect_exceptional(f: ComplexPoly, eps_exc: Optional[float] = None) -> ExceptionalReport:
    """Decide whether ``f(z) = A(z-b)^d + b`` for some finite ``b``.

    The only candidate is the centroid of the critical points,
    ``b = -c_{d-1} / (d c_d)``.  Expanding ``f`` around ``b`` then has to
    leave nothing but the constant ``b`` and the leading term.
    """
    f = f.to_float()
    d = f.degree
    if d < 2:
        raise ValueError("detect_exceptional needs degree >= 2")
    if eps_exc is None:
        eps_exc = default_eps_exc(f)
    c = f.coeffs
    b = complex(-c[d - 1] / (d * c[d]))
    e = taylor_shift(f, b).coeffs
    scale = 1.0 + abs(b)
    if np.all(np.abs(e[1:d]) <= eps_exc) and abs(e[0] - b) <= eps_exc * scale:
        return ExceptionalReport(True, b, complex(c[d]))
    return ExceptionalReport(False)


def escape_radius(f: ComplexPoly) -> float:
    """Radius beyond which ``|f(z)| >= 2|z|``."""
    c = np.abs(f.to_float().coeffs)
    d = f.degree
    return float(max(2.0, (2.0 + c[:d].sum()) / c[d]))


def filled_radius(f: ComplexPoly) -> float:
    """Radius of a closed disk about 0 containing the filled-in Julia set.

    The unique positive root of ``|c_d| R^d - sum_{i<d} |c_i| R^i - R``; beyond
    it every orbit grows strictly and escapes.
    """
    c = np.abs(f.to_float().coeffs).astype(float)
    d = f.degree
    q = -c.copy()
    q[d] = c[d]
    q[1] -= 1.0
    r = np.roots(q[::-1])
    r = r[(np.abs(r.imag) <= 1e-9 * (1 + np.abs(r))) & (r.real > 0)].real
    return float(r.max())
