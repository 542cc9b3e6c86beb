"""Exact univariate polynomials over Q, real-root isolation and Smith forms.

Rationals are :class:`fractions.Fraction` throughout; floats are rejected at
every entry point so that no rounding ever enters a decision.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd, lcm
from typing import Iterable, Sequence, Union

from .errors import DivisionByZeroPolynomial, NotSquare

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse ``"p"`` or ``"p/q"`` (q > 0) into a Fraction."""
    m = _RATIONAL_RE.match(text)
    if not m:
        raise ValueError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def to_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"exact rational expected, got {type(x).__name__}")


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class Poly:
    """Immutable polynomial with Fraction coefficients, ascending degree.

    The zero polynomial has an empty coefficient tuple and degree -1.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [to_rational(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self._c = tuple(cs)

    @classmethod
    def _trusted(cls, cs: list) -> "Poly":
        while cs and not cs[-1]:
            cs.pop()
        p = cls.__new__(cls)
        p._c = tuple(cs)
        return p

    @classmethod
    def x(cls) -> "Poly":
        return cls._trusted([Fraction(0), Fraction(1)])

    @classmethod
    def constant(cls, c) -> "Poly":
        return cls([c])

    @classmethod
    def from_roots(cls, roots: Iterable) -> "Poly":
        p = cls.constant(1)
        for r in roots:
            p = p * cls._trusted([-to_rational(r), Fraction(1)])
        return p

    @property
    def coeffs(self) -> tuple:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    @property
    def lead(self) -> Fraction:
        return self._c[-1] if self._c else Fraction(0)

    @property
    def is_monic(self) -> bool:
        return bool(self._c) and self._c[-1] == 1

    def is_constant(self) -> bool:
        return len(self._c) <= 1

    def __bool__(self) -> bool:
        return bool(self._c)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self._c == Poly([other])._c
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._c)

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly([other])

    def __add__(self, other) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        o = self._coerce(other)._c
        a, b = (self._c, o) if len(self._c) >= len(o) else (o, self._c)
        cs = list(a)
        for i, c in enumerate(b):
            cs[i] += c
        return Poly._trusted(cs)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._trusted([-c for c in self._c])

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            if not other:
                return Poly()
            return Poly._trusted([c * other for c in self._c])
        if not isinstance(other, Poly):
            return NotImplemented
        a, b = self._c, other._c
        if not a or not b:
            return Poly()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return Poly._trusted(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        result = Poly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __divmod__(self, other: "Poly"):
        return poly_divmod(self, other)

    def __floordiv__(self, other: "Poly") -> "Poly":
        return poly_divmod(self, other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return poly_divmod(self, other)[1]

    def __call__(self, x):
        """Horner evaluation; works for Fraction, float and Interval arguments."""
        acc = 0
        for c in reversed(self._c):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Poly":
        return Poly._trusted([c * i for i, c in enumerate(self._c)][1:])

    def monic(self) -> "Poly":
        if not self._c:
            return self
        inv = 1 / self._c[-1]
        return Poly._trusted([c * inv for c in self._c])

    def compose(self, inner: "Poly") -> "Poly":
        acc = Poly()
        for c in reversed(self._c):
            acc = acc * inner + c
        return acc

    def primitive_integer(self) -> tuple:
        """Integer coefficients of the primitive associate with positive lead."""
        if not self._c:
            return ()
        den = lcm(*(c.denominator for c in self._c))
        ints = [c.numerator * (den // c.denominator) for c in self._c]
        g = gcd(*ints)
        if ints[-1] < 0:
            g = -g
        return tuple(i // g for i in ints)

    def to_strings(self) -> list:
        return [format_rational(c) for c in self._c]

    def format(self, var: str = "λ") -> str:
        if not self._c:
            return "0"
        terms = []
        for i in range(len(self._c) - 1, -1, -1):
            c = self._c[i]
            if not c:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if i == 0:
                body = format_rational(mag)
            else:
                mono = var if i == 1 else f"{var}^{i}"
                body = mono if mag == 1 else f"{format_rational(mag)}*{mono}"
            terms.append((sign, body))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Poly({self.format('x')})"

    __str__ = format


def poly_divmod(p: Poly, q: Poly):
    """Euclidean division: ``p = q*quotient + remainder`` with deg remainder < deg q."""
    if not q:
        raise DivisionByZeroPolynomial("division by the zero polynomial")
    dq = q.degree
    if p.degree < dq:
        return Poly(), p
    r = list(p._c)
    qc = q._c
    inv = 1 / qc[-1]
    quot = [Fraction(0)] * (len(r) - dq)
    for k in range(len(r) - 1 - dq, -1, -1):
        c = r[k + dq] * inv
        quot[k] = c
        if c:
            for j in range(dq):
                r[k + j] -= c * qc[j]
        r[k + dq] = Fraction(0)
    return Poly._trusted(quot), Poly._trusted(r[:dq])


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Monic gcd; ``gcd(0, 0) = 0``."""
    a, b = p, q
    while b:
        a, b = b, poly_divmod(a, b)[1].monic()
    return a.monic()


def squarefree(p: Poly) -> Poly:
    """``p / gcd(p, p')``, made monic."""
    if p.degree <= 0:
        return p.monic()
    return poly_divmod(p, poly_gcd(p, p.derivative()))[0].monic()


# ---------------------------------------------------------------------------
# Certified rational interval arithmetic
# ---------------------------------------------------------------------------

Number = Union[int, Fraction]


@dataclass(frozen=True)
class Interval:
    """Closed interval with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    @classmethod
    def point(cls, x) -> "Interval":
        x = to_rational(x)
        return cls(x, x)

    @staticmethod
    def _lift(x) -> "Interval":
        return x if isinstance(x, Interval) else Interval.point(x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __add__(self, other) -> "Interval":
        o = self._lift(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> "Interval":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Interval":
        return self._lift(other) - self

    def __mul__(self, other) -> "Interval":
        o = self._lift(other)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = self._lift(other)
        if o.contains_zero():
            raise ZeroDivisionError("interval divisor contains zero")
        return self * Interval(1 / o.hi, 1 / o.lo)

    def __rtruediv__(self, other) -> "Interval":
        return self._lift(other) / self

    def __float__(self) -> float:
        return float(self.mid)


# ---------------------------------------------------------------------------
# Sturm sequences and root isolation
# ---------------------------------------------------------------------------


def _normalize_abs(p: Poly) -> Poly:
    """Divide by |lead| - positive scaling keeps every sign."""
    lc = abs(p.lead)
    return p if lc == 1 else Poly._trusted([c / lc for c in p._c])


def sturm_sequence(p: Poly) -> list:
    seq = [_normalize_abs(p), _normalize_abs(p.derivative())]
    while seq[-1].degree > 0:
        r = seq[-2] % seq[-1]
        if not r:
            break
        seq.append(_normalize_abs(-r))
    return seq


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def sign_variations(seq: Sequence[Poly], x: Fraction) -> int:
    count = 0
    last = 0
    for p in seq:
        s = _sign(p(x))
        if s:
            if last and s != last:
                count += 1
            last = s
    return count


def count_roots(p: Poly, lo: Fraction, hi: Fraction, seq=None) -> int:
    """Number of distinct real roots of ``p`` in the closed interval [lo, hi]."""
    q = squarefree(p)
    if q.degree <= 0:
        return 0
    seq = seq or sturm_sequence(q)
    n = sign_variations(seq, lo) - sign_variations(seq, hi)
    return n + (1 if q(lo) == 0 else 0)


def cauchy_bound(p: Poly) -> Fraction:
    lc = abs(p.lead)
    return 1 + max((abs(c) / lc for c in p._c[:-1]), default=Fraction(0))


@dataclass(frozen=True)
class IsolatingInterval:
    """A real root of ``poly`` (square-free) located in ``(lo, hi]``.

    ``lo == hi`` marks an exact rational root. Non-point intervals produced by
    :func:`isolate_real_roots` always hold an irrational root, with neither
    endpoint a root of ``poly``.
    """

    lo: Fraction
    hi: Fraction
    poly: Poly

    @cached_property
    def _seq(self) -> list:
        return sturm_sequence(self.poly)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def value(self) -> Union[Fraction, "IsolatingInterval"]:
        """The root as a Fraction when exact, else ``self``."""
        return self.lo if self.is_exact else self

    def enclosure(self) -> Interval:
        return Interval(self.lo, self.hi)

    def refine(self, width) -> "IsolatingInterval":
        return refine(self, width)

    def __float__(self) -> float:
        iv = self if self.is_exact else refine(self, Fraction(1, 1 << 60))
        return float((iv.lo + iv.hi) / 2)

    def __repr__(self) -> str:
        if self.is_exact:
            return f"IsolatingInterval({format_rational(self.lo)})"
        return (
            f"IsolatingInterval(root of {self.poly.format('x')} in "
            f"({format_rational(self.lo)}, {format_rational(self.hi)}])"
        )


def _bisect_once(iv: IsolatingInterval) -> IsolatingInterval:
    q = iv.poly
    m = (iv.lo + iv.hi) / 2
    qm = q(m)
    if qm == 0:
        return IsolatingInterval(m, m, q)
    if _sign(qm) == _sign(q(iv.hi)):
        return IsolatingInterval(iv.lo, m, q)
    return IsolatingInterval(m, iv.hi, q)


def refine(iv: IsolatingInterval, width) -> IsolatingInterval:
    """Bisect until ``hi - lo <= width``; exact roots are returned unchanged."""
    width = to_rational(width)
    while not iv.is_exact and iv.width > width:
        iv = _bisect_once(iv)
    return iv


def _finish_interval(q: Poly, a: Fraction, b: Fraction, lead_int: int) -> IsolatingInterval:
    """Turn a Sturm-isolated (a, b] into a canonical IsolatingInterval."""
    if q(b) == 0:
        return IsolatingInterval(b, b, q)
    iv = IsolatingInterval(a, b, q)
    # move the left endpoint off a neighbouring root
    while q(iv.lo) == 0:
        m = (iv.lo + iv.hi) / 2
        qm = q(m)
        if qm == 0:
            return IsolatingInterval(m, m, q)
        if _sign(qm) != _sign(q(iv.hi)):
            iv = IsolatingInterval(m, iv.hi, q)
        else:
            iv = IsolatingInterval(iv.lo, m, q)
    # a rational root p/r in lowest terms has r | lead_int, so it is k/lead_int
    bound = Fraction(1, lead_int)
    while iv.width >= bound:
        iv = _bisect_once(iv)
        if iv.is_exact:
            return iv
    k = (iv.hi * lead_int).numerator // (iv.hi * lead_int).denominator
    cand = Fraction(k, lead_int)
    if cand > iv.lo and q(cand) == 0:
        return IsolatingInterval(cand, cand, q)
    return iv


def isolate_real_roots(p: Poly, interval=None) -> list:
    """Isolate each distinct real root of ``p`` in the closed ``interval``.

    Returns IsolatingIntervals sorted by position; rational roots are exact
    point intervals. Without ``interval`` all real roots are isolated.
    """
    if not p:
        raise ValueError("cannot isolate the roots of the zero polynomial")
    q = squarefree(p)
    if q.degree <= 0:
        return []
    if interval is None:
        bound = cauchy_bound(q)
        lo, hi = -bound, bound
    else:
        lo, hi = (to_rational(v) for v in interval)
    if lo > hi:
        raise ValueError("empty interval")
    seq = sturm_sequence(q)
    cache: dict = {}

    def var(x):
        if x not in cache:
            cache[x] = sign_variations(seq, x)
        return cache[x]

    out = []
    if q(lo) == 0:
        out.append(IsolatingInterval(lo, lo, q))
    stack = [(lo, hi, var(lo) - var(hi))]
    found = []
    while stack:
        a, b, c = stack.pop()
        if c == 0:
            continue
        if c == 1:
            found.append((a, b))
            continue
        m = (a + b) / 2
        c1 = var(a) - var(m)
        stack.append((a, m, c1))
        stack.append((m, b, c - c1))
    lead_int = abs(q.primitive_integer()[-1])
    for a, b in found:
        out.append(_finish_interval(q, a, b, lead_int))
    out.sort(key=lambda iv: iv.lo)
    return out


# ---------------------------------------------------------------------------
# Real algebraic numbers: Fraction or irrational IsolatingInterval
# ---------------------------------------------------------------------------

RealAlg = Union[Fraction, IsolatingInterval]


def real_enclosure(x: RealAlg) -> Interval:
    if isinstance(x, IsolatingInterval):
        return x.enclosure()
    return Interval(x, x)


def real_refine(x: RealAlg, width) -> RealAlg:
    if isinstance(x, IsolatingInterval):
        return refine(x, width).value()
    return x


def _halve(x: RealAlg) -> RealAlg:
    if isinstance(x, IsolatingInterval) and not x.is_exact:
        return _bisect_once(x).value()
    return x


def real_cmp(a: RealAlg, b: RealAlg) -> int:
    """Exact three-way comparison of two real algebraic numbers."""
    if isinstance(a, IsolatingInterval):
        a = a.value()
    if isinstance(b, IsolatingInterval):
        b = b.value()
    if not isinstance(a, IsolatingInterval) and not isinstance(b, IsolatingInterval):
        return _sign(a - b)
    if not isinstance(a, IsolatingInterval):
        return -real_cmp(b, a)
    # a irrational
    if not isinstance(b, IsolatingInterval):
        if a.lo < b <= a.hi and a.poly(b) == 0:
            return 0
    else:
        lo = max(a.lo, b.lo)
        hi = min(a.hi, b.hi)
        if lo < hi:
            g = poly_gcd(a.poly, b.poly)
            if g.degree >= 1:
                seq = sturm_sequence(g)
                if sign_variations(seq, lo) - sign_variations(seq, hi) > 0:
                    return 0
    while True:
        ea, eb = real_enclosure(a), real_enclosure(b)
        if ea.hi < eb.lo:
            return -1
        if eb.hi < ea.lo:
            return 1
        a, b = _halve(a), _halve(b)


def real_eq(a: RealAlg, b: RealAlg) -> bool:
    return real_cmp(a, b) == 0


def real_float(x: RealAlg) -> float:
    return float(x)


def real_min(values: Iterable[RealAlg]) -> RealAlg:
    it = iter(values)
    best = next(it)
    for v in it:
        if real_cmp(v, best) < 0:
            best = v
    return best


def real_max(values: Iterable[RealAlg]) -> RealAlg:
    it = iter(values)
    best = next(it)
    for v in it:
        if real_cmp(v, best) > 0:
            best = v
    return best


def eval_enclosure(p: Poly, x: RealAlg) -> Interval:
    """Certified enclosure of ``p(x)`` from the current enclosure of ``x``."""
    if not isinstance(x, IsolatingInterval):
        v = p(x)
        return Interval(v, v)
    return Interval.point(0) + p(x.enclosure())


def _companion_rows(a: Poly) -> list:
    a = a.monic()
    n = a.degree
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        rows[i][i - 1] = Fraction(1)
    for i in range(n):
        rows[i][n - 1] = -a._c[i]
    return rows


def polynomial_image(p: Poly, x: RealAlg) -> RealAlg:
    """The exact real algebraic number ``p(x)``.

    The defining polynomial of ``p(alpha)`` is the characteristic polynomial
    of ``p(C)`` with ``C`` the companion matrix of alpha's polynomial.
    """
    if not isinstance(x, IsolatingInterval) or x.is_exact:
        return p(x.lo if isinstance(x, IsolatingInterval) else x)
    comp = _companion_rows(x.poly)
    n = len(comp)
    pc = _matrix_poly_eval(p, comp)
    char = PolyMatrix(
        [
            [(Poly.x() if i == j else Poly()) - Poly([pc[i][j]]) for j in range(n)]
            for i in range(n)
        ]
    ).det()
    candidates = isolate_real_roots(char)
    return _identify_root(lambda xx: eval_enclosure(p, xx), x, candidates)


def _identify_root(enclose, x: RealAlg, candidates: list) -> RealAlg:
    """Pick the candidate root singled out by the enclosure of f(x)."""
    cands = [c.value() for c in candidates]
    while True:
        e = enclose(x)
        hits = [c for c in cands if real_enclosure(c).overlaps(e)]
        if len(hits) == 1:
            return hits[0]
        if not hits:
            raise ArithmeticError("enclosure lost every candidate root")
        x = _halve(x)
        cands = [_halve(c) for c in cands]


def _matrix_poly_eval(p: Poly, rows: list) -> list:
    n = len(rows)
    acc = [[Fraction(0)] * n for _ in range(n)]
    for c in reversed(p._c):
        acc = [
            [sum((acc[i][k] * rows[k][j] for k in range(n)), Fraction(0)) for j in range(n)]
            for i in range(n)
        ]
        for i in range(n):
            acc[i][i] += c
    return acc


# ---------------------------------------------------------------------------
# Polynomial matrices and the Smith normal form
# ---------------------------------------------------------------------------


class PolyMatrix:
    """Dense rectangular matrix of :class:`Poly` entries."""

    __slots__ = ("_rows", "rows", "cols")

    def __init__(self, entries: Sequence[Sequence]):
        rows = tuple(
            tuple(e if isinstance(e, Poly) else Poly([e]) for e in row) for row in entries
        )
        if not rows or not rows[0]:
            raise ValueError("PolyMatrix needs at least one row and one column")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged PolyMatrix")
        self._rows = rows
        self.rows = len(rows)
        self.cols = len(rows[0])

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls([[Poly.constant(1) if i == j else Poly() for j in range(n)] for i in range(n)])

    @classmethod
    def char_matrix(cls, rows: Sequence[Sequence]) -> "PolyMatrix":
        """``λI - A`` for a square rational matrix given as rows."""
        n = len(rows)
        return cls(
            [
                [(Poly.x() if i == j else Poly()) - Poly([to_rational(rows[i][j])]) for j in range(n)]
                for i in range(n)
            ]
        )

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    def __getitem__(self, ij) -> Poly:
        i, j = ij
        return self._rows[i][j]

    def tolist(self) -> list:
        return [list(r) for r in self._rows]

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyMatrix) and self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in PolyMatrix product")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Poly()
                for k in range(self.cols):
                    a = self._rows[i][k]
                    if a:
                        b = other._rows[k][j]
                        if b:
                            acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(out)

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self._rows, other._rows)]
        )

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix([list(c) for c in zip(*self._rows)])

    def evaluate(self, x) -> list:
        return [[p(x) for p in row] for row in self._rows]

    def max_degree(self) -> int:
        return max(p.degree for row in self._rows for p in row)

    def is_diagonal(self) -> bool:
        return all(
            not self._rows[i][j] for i in range(self.rows) for j in range(self.cols) if i != j
        )

    def det(self) -> Poly:
        """Fraction-free Bareiss determinant (exact polynomial divisions)."""
        if self.rows != self.cols:
            raise NotSquare(f"determinant of a {self.rows}x{self.cols} matrix")
        n = self.rows
        m = [list(r) for r in self._rows]
        sign = 1
        prev = Poly.constant(1)
        for k in range(n - 1):
            if not m[k][k]:
                swap = next((i for i in range(k + 1, n) if m[i][k]), None)
                if swap is None:
                    return Poly()
                m[k], m[swap] = m[swap], m[k]
                sign = -sign
            pk = m[k][k]
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    num = m[i][j] * pk - m[i][k] * m[k][j]
                    m[i][j] = num // prev
            prev = pk
        d = m[n - 1][n - 1]
        return d if sign > 0 else -d

    def minor(self, i: int, j: int) -> "PolyMatrix":
        return PolyMatrix(
            [[p for c, p in enumerate(row) if c != j] for r, row in enumerate(self._rows) if r != i]
        )

    def adjugate(self) -> "PolyMatrix":
        n = self.rows
        if n != self.cols:
            raise NotSquare("adjugate of a non-square matrix")
        if n == 1:
            return PolyMatrix([[Poly.constant(1)]])
        return PolyMatrix(
            [
                [self.minor(j, i).det() * (1 if (i + j) % 2 == 0 else -1) for j in range(n)]
                for i in range(n)
            ]
        )

    def __repr__(self) -> str:
        body = "; ".join(", ".join(p.format("x") for p in row) for row in self._rows)
        return f"PolyMatrix[{body}]"


def _smith(rows: list, track: bool):
    n, m = len(rows), len(rows[0])
    S = [list(r) for r in rows]
    U = [[Poly.constant(1) if i == j else Poly() for j in range(n)] for i in range(n)] if track else None
    V = [[Poly.constant(1) if i == j else Poly() for j in range(m)] for i in range(m)] if track else None

    def swap_rows(a, b):
        if a != b:
            S[a], S[b] = S[b], S[a]
            if track:
                U[a], U[b] = U[b], U[a]

    def swap_cols(a, b):
        if a != b:
            for row in S:
                row[a], row[b] = row[b], row[a]
            if track:
                for row in V:
                    row[a], row[b] = row[b], row[a]

    def add_row(dst, src, f):  # row_dst += f * row_src
        S[dst] = [x + f * y if y else x for x, y in zip(S[dst], S[src])]
        if track:
            U[dst] = [x + f * y if y else x for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, f):
        for row in S:
            if row[src]:
                row[dst] = row[dst] + f * row[src]
        if track:
            for row in V:
                if row[src]:
                    row[dst] = row[dst] + f * row[src]

    for t in range(min(n, m)):
        while True:
            best = None
            for i in range(t, n):
                for j in range(t, m):
                    p = S[i][j]
                    if p and (best is None or p.degree < best[0]):
                        best = (p.degree, i, j)
            if best is None:
                return S, U, V
            _, bi, bj = best
            swap_rows(t, bi)
            swap_cols(t, bj)
            piv = S[t][t]
            clean = True
            for i in range(t + 1, n):
                if S[i][t]:
                    q, r = poly_divmod(S[i][t], piv)
                    add_row(i, t, -q)
                    if r:
                        clean = False
            for j in range(t + 1, m):
                if S[t][j]:
                    q, r = poly_divmod(S[t][j], piv)
                    add_col(j, t, -q)
                    if r:
                        clean = False
            if not clean:
                continue
            bad = None
            if piv.degree > 0:
                for i in range(t + 1, n):
                    for j in range(t + 1, m):
                        if S[i][j] and poly_divmod(S[i][j], piv)[1]:
                            bad = i
                            break
                    if bad is not None:
                        break
            if bad is None:
                break
            add_row(t, bad, Poly.constant(1))
        lc = S[t][t].lead
        if lc != 1:
            inv = 1 / lc
            S[t] = [p * inv for p in S[t]]
            if track:
                U[t] = [p * inv for p in U[t]]
    return S, U, V


def smith_normal_form(M: PolyMatrix):
    """Return ``(S, U, V)`` with ``S = U @ M @ V`` diagonal, monic, d1 | d2 | ....

    Pivot: lowest-degree nonzero entry of the active block, ties broken by the
    smallest (row, col). ``U`` and ``V`` are unimodular; the identity is
    re-checked exactly before returning.
    """
    if M.rows != M.cols:
        raise NotSquare(f"Smith form requested for a {M.rows}x{M.cols} matrix")
    S, U, V = _smith(M.tolist(), track=True)
    S, U, V = PolyMatrix(S), PolyMatrix(U), PolyMatrix(V)
    if U @ M @ V != S:
        raise ArithmeticError("Smith normal form failed exact verification")
    return S, U, V


def smith_diagonal(M: PolyMatrix) -> list:
    """Diagonal of the Smith form without building the transforms."""
    if M.rows != M.cols:
        raise NotSquare(f"Smith form requested for a {M.rows}x{M.cols} matrix")
    S, _, _ = _smith(M.tolist(), track=False)
    return [S[i][i] for i in range(M.rows)]
