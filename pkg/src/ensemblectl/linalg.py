"""Dense matrices over Q with exact Gaussian elimination."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import DimensionMismatch, NotSquare
from .polyalg import Poly, format_rational, to_rational

_ZERO = Fraction(0)
_ONE = Fraction(1)


class Matrix:
    """Immutable rational matrix. Vectors are plain tuples of Fractions."""

    __slots__ = ("_rows", "rows", "cols")

    def __init__(self, entries: Sequence[Sequence]):
        rows = tuple(tuple(to_rational(e) for e in row) for row in entries)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise DimensionMismatch("ragged matrix")
        self._rows = rows
        self.rows = len(rows)
        self.cols = len(rows[0]) if rows else 0

    @classmethod
    def _trusted(cls, rows, cols: Optional[int] = None) -> "Matrix":
        m = cls.__new__(cls)
        m._rows = tuple(tuple(r) for r in rows)
        m.rows = len(m._rows)
        m.cols = len(m._rows[0]) if m._rows else (cols or 0)
        return m

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls._trusted([[_ONE if i == j else _ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, r: int, c: int) -> "Matrix":
        return cls._trusted([[_ZERO] * c for _ in range(r)], c)

    @classmethod
    def diag(cls, values: Iterable) -> "Matrix":
        vals = [to_rational(v) for v in values]
        n = len(vals)
        return cls._trusted([[vals[i] if i == j else _ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence]) -> "Matrix":
        if not columns:
            raise DimensionMismatch("no columns given")
        return cls([list(r) for r in zip(*columns)])

    @classmethod
    def block_diag(cls, blocks: Sequence["Matrix"]) -> "Matrix":
        n = sum(b.rows for b in blocks)
        out = [[_ZERO] * n for _ in range(n)]
        off = 0
        for b in blocks:
            for i in range(b.rows):
                for j in range(b.cols):
                    out[off + i][off + j] = b._rows[i][j]
            off += b.rows
        return cls._trusted(out)

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple:
        return self._rows[i]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self._rows)

    def columns(self) -> list:
        return [self.col(j) for j in range(self.cols)]

    def tolist(self) -> list:
        return [list(r) for r in self._rows]

    def to_strings(self) -> list:
        return [[format_rational(x) for x in r] for r in self._rows]

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __repr__(self) -> str:
        return "Matrix(" + repr(self.to_strings()) + ")"

    def __add__(self, other: "Matrix") -> "Matrix":
        self._same_shape(other)
        return Matrix._trusted([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._same_shape(other)
        return Matrix._trusted([[a - b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def __neg__(self) -> "Matrix":
        return Matrix._trusted([[-a for a in r] for r in self._rows], self.cols)

    def scale(self, c) -> "Matrix":
        c = to_rational(c)
        return Matrix._trusted([[a * c for a in r] for r in self._rows], self.cols)

    def _same_shape(self, other: "Matrix") -> None:
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
            cols = other.columns()
            return Matrix._trusted(
                [[_dot(r, c) for c in cols] for r in self._rows], other.cols
            )
        v = tuple(other)
        if len(v) != self.cols:
            raise DimensionMismatch(f"cannot apply {self.shape} to a vector of length {len(v)}")
        return tuple(_dot(r, v) for r in self._rows)

    @property
    def T(self) -> "Matrix":
        return Matrix._trusted([list(c) for c in zip(*self._rows)], self.rows) if self.rows else Matrix.zeros(self.cols, 0)

    def hstack(self, *others: "Matrix") -> "Matrix":
        for o in others:
            if o.rows != self.rows:
                raise DimensionMismatch("hstack row mismatch")
        return Matrix._trusted(
            [sum((list(o._rows[i]) for o in others), list(self._rows[i])) for i in range(self.rows)]
        )

    def vstack(self, *others: "Matrix") -> "Matrix":
        for o in others:
            if o.cols != self.cols:
                raise DimensionMismatch("vstack column mismatch")
        return Matrix._trusted(list(self._rows) + [r for o in others for r in o._rows], self.cols)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "Matrix":
        return Matrix._trusted([[self._rows[i][j] for j in cols] for i in rows], len(cols))

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_zero(self) -> bool:
        return all(not x for r in self._rows for x in r)

    # -- elimination -------------------------------------------------------

    def echelon(self):
        """Row-reduce a copy; returns (reduced rows, pivot columns, row permutation sign)."""
        m = [list(r) for r in self._rows]
        pivots = []
        sign = 1
        r = 0
        for c in range(self.cols):
            if r == self.rows:
                break
            # largest-magnitude pivot in the column
            best = max(range(r, self.rows), key=lambda i: abs(m[i][c]))
            if not m[best][c]:
                continue
            if best != r:
                m[r], m[best] = m[best], m[r]
                sign = -sign
            piv = m[r][c]
            inv = 1 / piv
            m[r] = [x * inv for x in m[r]]
            for i in range(self.rows):
                if i != r and m[i][c]:
                    f = m[i][c]
                    m[i] = [x - f * y for x, y in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
        return m, pivots, sign

    def rank(self) -> int:
        return len(self.echelon()[1])

    def det(self) -> Fraction:
        if not self.is_square():
            raise NotSquare(f"determinant of a {self.rows}x{self.cols} matrix")
        m = [list(r) for r in self._rows]
        n = self.rows
        d = _ONE
        for c in range(n):
            best = max(range(c, n), key=lambda i: abs(m[i][c]))
            if not m[best][c]:
                return _ZERO
            if best != c:
                m[c], m[best] = m[best], m[c]
                d = -d
            piv = m[c][c]
            d *= piv
            for i in range(c + 1, n):
                if m[i][c]:
                    f = m[i][c] / piv
                    m[i] = [x - f * y for x, y in zip(m[i], m[c])]
        return d

    def inverse(self) -> "Matrix":
        if not self.is_square():
            raise NotSquare("inverse of a non-square matrix")
        n = self.rows
        aug = self.hstack(Matrix.identity(n))
        red, pivots, _ = aug.echelon()
        if pivots[:n] != list(range(n)) or len(pivots) < n:
            raise ZeroDivisionError("matrix is singular")
        return Matrix._trusted([row[n:] for row in red])

    def solve(self, b: Sequence) -> Optional[tuple]:
        """One solution of ``self @ x = b`` (free variables zero), or None."""
        b = tuple(to_rational(x) for x in b)
        if len(b) != self.rows:
            raise DimensionMismatch("right-hand side length mismatch")
        aug = Matrix._trusted([list(r) + [bi] for r, bi in zip(self._rows, b)], self.cols + 1)
        red, pivots, _ = aug.echelon()
        if pivots and pivots[-1] == self.cols:
            return None
        x = [_ZERO] * self.cols
        for r, c in enumerate(pivots):
            x[c] = red[r][self.cols]
        return tuple(x)

    def nullspace(self) -> list:
        red, pivots, _ = self.echelon()
        free = [c for c in range(self.cols) if c not in pivots]
        basis = []
        for f in free:
            v = [_ZERO] * self.cols
            v[f] = _ONE
            for r, c in enumerate(pivots):
                v[c] = -red[r][f]
            basis.append(tuple(v))
        return basis

    def power(self, k: int) -> "Matrix":
        result = Matrix.identity(self.rows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def poly_apply(self, p: Poly) -> "Matrix":
        """``p(self)`` by Horner's rule."""
        n = self.rows
        acc = Matrix.zeros(n, n)
        for c in reversed(p.coeffs):
            acc = acc @ self + Matrix.identity(n).scale(c)
        return acc

    def poly_apply_vec(self, p: Poly, v: Sequence) -> tuple:
        """``p(self) @ v`` without forming ``p(self)``."""
        acc = tuple(_ZERO for _ in range(self.rows))
        for c in reversed(p.coeffs):
            acc = self @ acc
            acc = tuple(a + c * x for a, x in zip(acc, v))
        return acc


def _dot(a: Sequence, b: Sequence) -> Fraction:
    s = _ZERO
    for x, y in zip(a, b):
        if x and y:
            s += x * y
    return s


def rank_of_columns(vectors: Sequence[Sequence]) -> int:
    if not vectors:
        return 0
    return Matrix.from_columns(vectors).rank()
