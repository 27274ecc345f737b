"""Exact Kronecker-delta algebra over abstract summation indices.

Two small exact types live here:

``RatD``
    A rational function of the dimension ``D`` whose denominator is a product
    of powers of ``D``, ``D - 1`` and ``D - 2``.  These are the only
    denominators that arise from the hook kernel ``F = delta - 1/D`` and the
    projector normalisations, so arithmetic never needs a polynomial gcd.

``DeltaPolynomial``
    A finite sum of ``coefficient x product of deltas``.  A delta product is
    stored canonically as a partition of the indices it mentions into blocks
    of equal indices (union-find merge on multiplication), so identical
    patterns combine automatically.  Summing an index that sits in a block
    removes it from the block; summing a free index multiplies by ``D``.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Mapping

_ROOTS = (0, 1, 2)


def _trim(p: list) -> tuple:
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def _pmul(a: tuple, b: tuple) -> tuple:
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _padd(a: tuple, b: tuple) -> tuple:
    n = max(len(a), len(b))
    out = [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]
    return _trim([Fraction(x) for x in out])


def _peval(a: tuple, x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _linear(root: int) -> tuple:
    return (Fraction(-root), Fraction(1))


def _divide_root(a: tuple, root: int) -> tuple:
    # synthetic division by (D - root); caller guarantees exactness
    n = len(a) - 1
    q = [Fraction(0)] * n
    q[n - 1] = a[n]
    for k in range(n - 1, 0, -1):
        q[k - 1] = a[k] + root * q[k]
    return _trim(q)


class RatD:
    """``num(D) / (D^e0 (D-1)^e1 (D-2)^e2)`` with exact rational coefficients."""

    __slots__ = ("num", "den")

    def __init__(self, num: Iterable = (), den: tuple = (0, 0, 0)):
        num = _trim([Fraction(c) for c in num])
        den = tuple(int(e) for e in den)
        if not num:
            den = (0, 0, 0)
        self.num, self.den = num, den
        self._reduce()

    @classmethod
    def const(cls, c) -> "RatD":
        return cls((c,))

    @classmethod
    def d(cls) -> "RatD":
        return cls((0, 1))

    def _reduce(self):
        num, den = self.num, list(self.den)
        for k, r in enumerate(_ROOTS):
            while den[k] > 0 and num and _peval(num, r) == 0:
                num = _divide_root(num, r)
                den[k] -= 1
        # pull negative exponents back into the numerator
        for k, r in enumerate(_ROOTS):
            while den[k] < 0:
                num = _pmul(num, _linear(r))
                den[k] += 1
        self.num, self.den = num, tuple(den)

    def is_zero(self) -> bool:
        return not self.num

    def __add__(self, other) -> "RatD":
        if not isinstance(other, RatD):
            other = RatD.const(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        den = tuple(max(a, b) for a, b in zip(self.den, other.den))
        return RatD(_padd(self._lift(den), other._lift(den)), den)

    __radd__ = __add__

    def _lift(self, den: tuple) -> tuple:
        num = self.num
        for k, r in enumerate(_ROOTS):
            for _ in range(den[k] - self.den[k]):
                num = _pmul(num, _linear(r))
        return num

    def __neg__(self) -> "RatD":
        return RatD(tuple(-c for c in self.num), self.den)

    def __sub__(self, other) -> "RatD":
        if not isinstance(other, RatD):
            other = RatD.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "RatD":
        return (-self) + other

    def __mul__(self, other) -> "RatD":
        if not isinstance(other, RatD):
            return RatD(tuple(c * Fraction(other) for c in self.num), self.den)
        return RatD(_pmul(self.num, other.num), tuple(a + b for a, b in zip(self.den, other.den)))

    __rmul__ = __mul__

    def over(self, d0: int = 0, d1: int = 0, d2: int = 0) -> "RatD":
        """Divide by ``D^d0 (D-1)^d1 (D-2)^d2``."""
        return RatD(self.num, (self.den[0] + d0, self.den[1] + d1, self.den[2] + d2))

    def __truediv__(self, other) -> "RatD":
        return RatD(tuple(c / Fraction(other) for c in self.num), self.den)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatD):
            other = RatD.const(other)
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __call__(self, d) -> Fraction:
        """Exact value at an integer (or Fraction) ``D``."""
        d = Fraction(d)
        val = _peval(self.num, d)
        for k, r in enumerate(_ROOTS):
            if self.den[k]:
                val /= (d - r) ** self.den[k]
        return val

    def to_sympy(self, dsym=None):
        import sympy

        dsym = dsym if dsym is not None else sympy.Symbol("D")
        num = sum(sympy.Rational(c.numerator, c.denominator) * dsym ** k for k, c in enumerate(self.num))
        den = dsym ** self.den[0] * (dsym - 1) ** self.den[1] * (dsym - 2) ** self.den[2]
        return num / den

    def __repr__(self) -> str:
        return f"RatD({self.to_sympy()})"


ZERO = RatD()
ONE = RatD.const(1)
DIM = RatD.d()


# ---------------------------------------------------------------------------
# coefficient ring: sparse polynomials in the couplings with RatD coefficients

def cmul(a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            n = max(len(ma), len(mb))
            key = tuple((ma[k] if k < len(ma) else 0) + (mb[k] if k < len(mb) else 0)
                        for k in range(n))
            out[key] = out.get(key, ZERO) + ca * cb
    return {k: v for k, v in out.items() if not v.is_zero()}


def cadd(a: Mapping, b: Mapping) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, ZERO) + v
    return {k: v for k, v in out.items() if not v.is_zero()}


def cscale(a: Mapping, s) -> dict:
    return {k: v * s for k, v in a.items() if not (v * s).is_zero()}


# ---------------------------------------------------------------------------

def _canon(blocks: Iterable[Iterable[Hashable]]) -> tuple:
    """Union-find merge of possibly overlapping blocks into a canonical pattern."""
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for blk in blocks:
        blk = list(blk)
        for x in blk:
            parent.setdefault(x, x)
        for x in blk[1:]:
            ra, rb = find(blk[0]), find(x)
            if ra != rb:
                parent[rb] = ra
    groups: dict = {}
    for x in parent:
        groups.setdefault(find(x), set()).add(x)
    out = [tuple(sorted(g, key=_key)) for g in groups.values() if len(g) > 1]
    return tuple(sorted(out, key=lambda b: tuple(_key(x) for x in b)))


def _key(x):
    return (type(x).__name__, x)


class DeltaPolynomial:
    """Sum of ``coefficient x prod(deltas)`` terms in canonical form.

    ``terms`` maps a pattern (tuple of sorted blocks) to a coefficient, which
    is a mapping from coupling monomials to :class:`RatD`.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {p: c for p, c in (terms or {}).items() if c}

    @classmethod
    def scalar(cls, coeff) -> "DeltaPolynomial":
        if isinstance(coeff, Mapping):
            return cls({(): dict(coeff)})
        return cls({(): {(): coeff if isinstance(coeff, RatD) else RatD.const(coeff)}})

    @classmethod
    def delta(cls, i, j) -> "DeltaPolynomial":
        return cls({_canon([(i, j)]): {(): ONE}})

    @classmethod
    def f(cls, i, j) -> "DeltaPolynomial":
        """Hook kernel ``delta_ij - 1/D``."""
        return cls.delta(i, j) + cls.scalar(ONE.over(1) * -1)

    def __add__(self, other: "DeltaPolynomial") -> "DeltaPolynomial":
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = cadd(out.get(p, {}), c)
        return DeltaPolynomial(out)

    def __neg__(self) -> "DeltaPolynomial":
        return self.scale(-1)

    def __sub__(self, other: "DeltaPolynomial") -> "DeltaPolynomial":
        return self + (-other)

    def scale(self, s) -> "DeltaPolynomial":
        if isinstance(s, Mapping):
            return DeltaPolynomial({p: cmul(c, s) for p, c in self.terms.items()})
        return DeltaPolynomial({p: cscale(c, s) for p, c in self.terms.items()})

    def __mul__(self, other) -> "DeltaPolynomial":
        if not isinstance(other, DeltaPolynomial):
            return self.scale(other)
        out: dict = {}
        for p1, c1 in self.terms.items():
            for p2, c2 in other.terms.items():
                p = _canon(p1 + p2) if (p1 and p2) else (p1 or p2)
                out[p] = cadd(out.get(p, {}), cmul(c1, c2))
        return DeltaPolynomial(out)

    __rmul__ = __mul__

    def substitute(self, mapping: Mapping) -> "DeltaPolynomial":
        """Rename indices; coinciding names merge blocks, ``delta_xx`` becomes 1."""
        out: dict = {}
        for p, c in self.terms.items():
            q = _canon([[mapping.get(x, x) for x in blk] for blk in p])
            out[q] = cadd(out.get(q, {}), c)
        return DeltaPolynomial(out)

    def sum_over(self, indices: Iterable) -> "DeltaPolynomial":
        """Sum each listed index over ``1..D``."""
        indices = list(indices)
        out: dict = {}
        for p, c in self.terms.items():
            blocks = [list(b) for b in p]
            free = 0
            for x in indices:
                hit = next((b for b in blocks if x in b), None)
                if hit is None:
                    free += 1
                else:
                    hit.remove(x)
                    if len(hit) == 1:
                        blocks.remove(hit)
            q = _canon([b for b in blocks if len(b) > 1])
            coeff = c
            if free:
                coeff = cscale(c, RatD([0] * free + [1]))
            out[q] = cadd(out.get(q, {}), coeff)
        return DeltaPolynomial(out)

    def scalar_part(self) -> dict:
        """Coefficient of the empty delta pattern (the value once all indices are summed)."""
        extra = [p for p in self.terms if p]
        if extra:
            raise ValueError(f"unsummed deltas remain: {extra[:3]}")
        return dict(self.terms.get((), {}))

    def evaluate(self, assignment: Mapping, d: int, couplings: Mapping | None = None) -> Fraction:
        """Exact value for concrete index values (used by tests as a brute-force oracle)."""
        total = Fraction(0)
        for p, c in self.terms.items():
            if all(len({assignment[x] for x in blk}) == 1 for blk in p):
                for mono, r in c.items():
                    w = r(d)
                    for e, v in zip(mono, couplings or {}):
                        w *= Fraction(couplings[v]) ** e
                    total += w
        return total

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"DeltaPolynomial({len(self.terms)} terms)"
