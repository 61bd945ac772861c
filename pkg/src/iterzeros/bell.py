"""The integer polynomials A_{s,u} expressing derivatives of a composition.

``A_{s,u}(X_0, ..., X_{s-1})`` is built from ``A_{0,0} = 1`` by

    A_{s,u} = A_{s-1,u-1} * X_0 + sum_q (d/dX_q A_{s-1,u}) * X_{q+1},

so that ``(G∘h)^(s) = sum_u (G^(u)∘h) * A_{s,u}(h', ..., h^(s))``.  The table
is exact (Python integers); polynomials are sparse dicts from exponent tuples
to coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Tuple

from .jets import Jet, jet_compose

Exponents = Tuple[int, ...]


def _trim(e: Exponents) -> Exponents:
    e = list(e)
    while e and e[-1] == 0:
        e.pop()
    return tuple(e)


@dataclass(frozen=True)
class MultiIntPoly:
    """Sparse integer polynomial in ``X_0, X_1, ...``.

    Exponent tuples carry no trailing zeros and zero coefficients are never
    stored, so equal polynomials compare equal.
    """

    terms: Dict[Exponents, int] = field(default_factory=dict)

    def __post_init__(self):
        clean: Dict[Exponents, int] = {}
        for e, c in self.terms.items():
            if c:
                e = _trim(e)
                clean[e] = clean.get(e, 0) + int(c)
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c})

    @classmethod
    def one(cls) -> "MultiIntPoly":
        return cls({(): 1})

    @classmethod
    def var(cls, q: int) -> "MultiIntPoly":
        return cls({(0,) * q + (1,): 1})

    def __add__(self, other: "MultiIntPoly") -> "MultiIntPoly":
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return MultiIntPoly(t)

    def __mul__(self, other: "MultiIntPoly") -> "MultiIntPoly":
        t: Dict[Exponents, int] = {}
        for (e1, c1), (e2, c2) in product(self.terms.items(), other.terms.items()):
            n = max(len(e1), len(e2))
            e = tuple(a + b for a, b in zip(e1 + (0,) * (n - len(e1)), e2 + (0,) * (n - len(e2))))
            e = _trim(e)
            t[e] = t.get(e, 0) + c1 * c2
        return MultiIntPoly(t)

    def partial(self, q: int) -> "MultiIntPoly":
        t: Dict[Exponents, int] = {}
        for e, c in self.terms.items():
            if len(e) > q and e[q] > 0:
                e2 = list(e)
                e2[q] -= 1
                e2 = _trim(tuple(e2))
                t[e2] = t.get(e2, 0) + c * e[q]
        return MultiIntPoly(t)

    def is_zero(self) -> bool:
        return not self.terms

    def max_var(self) -> int:
        """Largest variable index that occurs, -1 for a constant."""
        return max((len(e) - 1 for e in self.terms), default=-1)

    def constant_term(self) -> int:
        return self.terms.get((), 0)

    def __call__(self, *xs):
        acc = 0
        for e, c in self.terms.items():
            term = c
            for q, k in enumerate(e):
                if k:
                    term = term * xs[q] ** k
            acc = acc + term
        return acc

    def to_json(self) -> List[dict]:
        return [{"exponents": list(e), "coeff": c} for e, c in sorted(self.terms.items())]

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True):
            mono = "*".join(f"X{q}" + (f"^{k}" if k > 1 else "") for q, k in enumerate(e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts)


@dataclass(frozen=True)
class BellTable:
    s_max: int
    entries: Dict[Tuple[int, int], MultiIntPoly]

    def __getitem__(self, key: Tuple[int, int]) -> MultiIntPoly:
        s, u = key
        if u < 0 or u > s:
            return MultiIntPoly()
        return self.entries[(s, u)]


def build_bell_table(s_max: int) -> BellTable:
    if s_max < 1:
        raise ValueError("s_max must be >= 1")
    entries = {(0, 0): MultiIntPoly.one()}
    zero = MultiIntPoly()
    for s in range(1, s_max + 1):
        for u in range(0, s + 1):
            prev_lower = entries.get((s - 1, u - 1), zero)
            acc = prev_lower * MultiIntPoly.var(0)
            prev = entries.get((s - 1, u), zero)
            for q in range(s):
                d = prev.partial(q)
                if not d.is_zero():
                    acc = acc + d * MultiIntPoly.var(q + 1)
            entries[(s, u)] = acc
    return BellTable(s_max, entries)


def check_vanishing(table: BellTable) -> List[str]:
    """Violations of ``A_{s,0} = 0`` and ``A_{s,u}(0, ..., 0) = 0`` for s >= 1."""
    bad = []
    for (s, u), a in sorted(table.entries.items()):
        if s == 0:
            continue
        if u == 0 and not a.is_zero():
            bad.append(f"A_{{{s},0}} = {a} is not identically zero")
        if a.constant_term() != 0:
            bad.append(f"A_{{{s},{u}}}(0,...,0) = {a.constant_term()} != 0")
        if a.max_var() > s - 1:
            bad.append(f"A_{{{s},{u}}} involves X_{a.max_var()} beyond X_{s - 1}")
    return bad


def _partitions(s: int, u: int, largest: int):
    """Partitions of ``s`` into exactly ``u`` positive parts, each <= largest."""
    if u == 0:
        if s == 0:
            yield ()
        return
    for first in range(min(largest, s - u + 1), 0, -1):
        for rest in _partitions(s - first, u - 1, first):
            yield (first,) + rest


def partial_bell_oracle(s: int, u: int) -> MultiIntPoly:
    """Partial Bell polynomial ``B_{s,u}`` by enumerating partitions of s into u parts.

    Variable ``X_j`` stands for the ``(j+1)``-st derivative.  Each partition with
    ``k_i`` parts equal to ``i`` contributes ``s! / prod(k_i! (i!)^k_i)``.
    """
    if not 1 <= u <= s:
        raise ValueError("need 1 <= u <= s")
    terms: Dict[Exponents, int] = {}
    for part in _partitions(s, u, s):
        counts = [0] * s
        for p in part:
            counts[p - 1] += 1
        denom = 1
        for i, k in enumerate(counts, start=1):
            denom *= math.factorial(k) * math.factorial(i) ** k
        terms[tuple(counts)] = math.factorial(s) // denom
    return MultiIntPoly(terms)


def faa_di_bruno_check(table: BellTable, G: Jet, h: Jet) -> float:
    """Max relative error of ``(G∘h)^(s) = sum_u G^(u)(h) A_{s,u}(h', ..., h^(s))``.

    The left side comes from jet composition; ``G`` must be based at
    ``h.value``.  Checked for every ``1 <= s <= min(table.s_max, order)``;
    errors are taken relative to the larger of ``|left|`` and the sum of the
    moduli of the right-hand terms.
    """
    t = min(G.order, h.order)
    Gt = Jet(G.base, G.coeffs[: t + 1])
    ht = Jet(h.base, h.coeffs[: t + 1])
    left = jet_compose(Gt, ht).derivatives()
    hd = ht.derivatives()
    Gd = Gt.derivatives()
    worst = 0.0
    for s in range(1, min(table.s_max, t) + 1):
        xs = [hd[q + 1] for q in range(s)]
        terms = [Gd[u] * table[s, u](*xs) for u in range(1, s + 1)]
        right = sum(terms)
        scale = max(abs(left[s]), sum(abs(x) for x in terms))
        if scale > 0:
            worst = max(worst, abs(left[s] - right) / scale)
    return worst
