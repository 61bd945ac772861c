"""Truncated Taylor expansions (jets) carried through polynomial iteration.

A jet of order ``t`` at ``base`` stores the Taylor coefficients
``c_k = g^(k)(base) / k!`` for ``k = 0..t``.  The array kernels below work
on arrays of shape ``(t + 1, *batch)`` so that whole grids of base points
are pushed through ``f`` at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFinite, OrderMismatch
from .polycore import ComplexPoly


# -- array kernels ------------------------------------------------------------

def mul_coeffs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cauchy product truncated at the common order."""
    t = a.shape[0] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.complex128)
    for k in range(t + 1):
        acc = a[0] * b[k]
        for i in range(1, k + 1):
            acc = acc + a[i] * b[k - i]
        out[k] = acc
    return out


def identity_coeffs(z, t: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    x = np.zeros((t + 1,) + z.shape, dtype=np.complex128)
    x[0] = z
    if t >= 1:
        x[1] = 1.0
    return x


def eval_poly_coeffs(f: ComplexPoly, x: np.ndarray) -> np.ndarray:
    """Horner's rule for ``f`` over the jet ring."""
    c = f.to_float().coeffs
    acc = np.zeros_like(x)
    acc[0] = c[-1]
    for k in range(len(c) - 2, -1, -1):
        acc = mul_coeffs(acc, x)
        acc[0] += c[k]
    return acc


def iterate_coeffs(f: ComplexPoly, z, n: int, t: int, check: bool = True) -> np.ndarray:
    x = identity_coeffs(z, t)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(1, n + 1):
            x = eval_poly_coeffs(f, x)
            if check and not np.all(np.isfinite(x)):
                raise NonFinite(f"jet overflowed at iterate {j}", index=j)
    return x


def _renormalize(u: np.ndarray, s: np.ndarray):
    mx = np.max(np.abs(u), axis=0)
    good = mx > 0
    safe = np.where(good, mx, 1.0)
    return u / safe, s + np.log(safe)


def iterate_log_coeffs(f: ComplexPoly, z, n: int, t: int):
    """Iterate a jet in extended exponent range.

    Returns ``(u, s)`` with the jet of ``f^n`` at ``z`` equal to
    ``exp(s) * u`` and ``max_k |u_k| = 1`` wherever the jet is nonzero.  No
    intermediate quantity overflows, so escaping orbits stay usable.

    All coefficients share one exponent, so a coefficient more than about
    700 e-folds below the largest one is flushed to zero.  Deep in a
    superattracting basin this loses the derivatives after a few dozen steps.
    """
    c = f.to_float().coeffs
    u = identity_coeffs(z, t)
    s = np.zeros(u.shape[1:])
    u, s = _renormalize(u, s)
    for _ in range(n):
        au = np.zeros_like(u)
        au[0] = c[-1]
        a_s = np.zeros_like(s)
        for k in range(len(c) - 2, -1, -1):
            au = mul_coeffs(au, u)
            a_s = a_s + s
            au, a_s = _renormalize(au, a_s)
            if c[k] != 0:
                new_s = np.maximum(a_s, 0.0)
                au = au * np.exp(a_s - new_s)
                au[0] += c[k] * np.exp(-new_s)
                a_s = new_s
                au, a_s = _renormalize(au, a_s)
        u, s = au, a_s
    return u, s


# -- scalar jet type ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Jet:
    base: complex
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).ravel()
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "base", complex(self.base))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def value(self) -> complex:
        return complex(self.coeffs[0])

    def derivative(self, k: int) -> complex:
        """The k-th derivative value ``k! * coeffs[k]``."""
        return complex(math.factorial(k) * self.coeffs[k])

    def derivatives(self) -> np.ndarray:
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.coeffs * fact

    def __add__(self, other):
        return jet_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return jet_add(self, jet_scale(other, -1.0) if isinstance(other, Jet) else -other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return jet_scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return jet_scale(self, -1.0)

    def __repr__(self):
        return f"Jet(base={self.base}, coeffs={self.coeffs.tolist()})"

    @classmethod
    def identity(cls, z, t: int) -> "Jet":
        return cls(z, identity_coeffs(z, t))

    @classmethod
    def constant(cls, c, z, t: int) -> "Jet":
        co = np.zeros(t + 1, dtype=np.complex128)
        co[0] = c
        return cls(z, co)


def _check(x: Jet, y: Jet):
    if x.order != y.order:
        raise OrderMismatch(f"jet orders differ: {x.order} vs {y.order}")


def jet_add(x: Jet, y) -> Jet:
    if isinstance(y, Jet):
        _check(x, y)
        return Jet(x.base, x.coeffs + y.coeffs)
    c = x.coeffs.copy()
    c[0] += y
    return Jet(x.base, c)


def jet_mul(x: Jet, y: Jet) -> Jet:
    _check(x, y)
    return Jet(x.base, mul_coeffs(x.coeffs, y.coeffs))


def jet_scale(x: Jet, c) -> Jet:
    return Jet(x.base, x.coeffs * c)


def jet_eval_poly(f: ComplexPoly, x: Jet) -> Jet:
    return Jet(x.base, eval_poly_coeffs(f, x.coeffs))


def iterate_jet(f: ComplexPoly, z, n: int, t: int) -> Jet:
    """Order-t jet of ``f^n`` at ``z`` by n successive jet evaluations.

    Raises NonFinite (carrying the iterate index) when the orbit overflows.
    """
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    return Jet(z, iterate_coeffs(f, complex(z), n, t))


def jet_compose(g: Jet, h: Jet) -> Jet:
    """Jet of ``g∘h``; ``g`` must be based at the value of ``h``."""
    _check(g, h)
    delta = h.coeffs.copy()
    delta[0] = 0.0
    acc = np.zeros_like(delta)
    acc[0] = g.coeffs[-1]
    for k in range(g.order - 1, -1, -1):
        acc = mul_coeffs(acc, delta)
        acc[0] += g.coeffs[k]
    return Jet(h.base, acc)


def jet_reciprocal(x: Jet) -> Jet:
    a = x.coeffs
    if a[0] == 0:
        raise ZeroDivisionError("reciprocal of a jet with zero value")
    r = np.zeros_like(a)
    r[0] = 1.0 / a[0]
    for k in range(1, a.size):
        r[k] = -np.dot(a[1:k + 1], r[k - 1::-1][:k]) / a[0]
    return Jet(x.base, r)


def jet_log(x: Jet) -> Jet:
    """Principal-branch logarithm propagated through the jet."""
    a = x.coeffs
    L = np.zeros_like(a)
    L[0] = np.log(a[0])
    for k in range(1, a.size):
        acc = k * a[k]
        for i in range(1, k):
            acc -= i * L[i] * a[k - i]
        L[k] = acc / (k * a[0])
    return Jet(x.base, L)


def jet_inverse(x: Jet) -> Jet:
    """Series reversion: the jet of the local inverse, based at ``x.value``."""
    c = x.coeffs
    t = x.order
    if t >= 1 and c[1] == 0:
        raise ZeroDivisionError("jet is not locally invertible (zero first coefficient)")
    r = np.zeros_like(c)
    r[0] = x.base
    if t == 0:
        return Jet(x.value, r)
    r[1] = 1.0 / c[1]
    for k in range(2, t + 1):
        # coefficient k of sum_j c_j R^j with R = sum_{i<k} r_i eta^i (r_0 dropped)
        R = r.copy()
        R[0] = 0.0
        R[k:] = 0.0
        power = R.copy()
        acc = 0.0
        for j in range(2, k + 1):
            power = mul_coeffs(power, R)
            acc += c[j] * power[k]
        r[k] = -acc / c[1]
    return Jet(x.value, r)
