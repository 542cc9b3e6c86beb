"""Invariant factors, rational canonical forms and the multi-input
controllability canonical form of a constant pair (A, B).

Invariant factors are listed largest first: ``factors[0]`` is the minimal
polynomial and every later factor divides the one before it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .errors import (
    DegreeZero,
    DimensionMismatch,
    NotControllable,
    NotMonic,
    NotSquare,
    SearchExhausted,
)
from .linalg import Matrix
from .polyalg import Poly, PolyMatrix, poly_divmod, smith_diagonal

DEFAULT_HEIGHT_CAP = 16


@dataclass(frozen=True)
class InvariantFactorData:
    factors: tuple
    degrees: tuple

    @property
    def k(self) -> int:
        return len(self.factors)

    @property
    def minimal_polynomial(self) -> Poly:
        return self.factors[0]

    def product(self) -> Poly:
        p = Poly.constant(1)
        for a in self.factors:
            p = p * a
        return p


@dataclass(frozen=True)
class RcfResult:
    C: Matrix
    P: Matrix
    factors: InvariantFactorData


@dataclass(frozen=True)
class CtrlCanonResult:
    C: Matrix
    Bbar: Matrix
    P: Matrix
    generators: tuple
    factors: InvariantFactorData
    generator_coeffs: tuple = field(default=())

    @property
    def block_sizes(self) -> tuple:
        return self.factors.degrees

    @property
    def k(self) -> int:
        return self.factors.k


def _as_matrix(A) -> Matrix:
    return A if isinstance(A, Matrix) else Matrix(A)


def companion(a: Poly) -> Matrix:
    """Companion matrix: ones on the subdiagonal, ``-c_0..-c_{n-1}`` in the last column."""
    if a.degree < 1:
        raise DegreeZero("companion matrix of a constant polynomial")
    if not a.is_monic:
        raise NotMonic(f"{a} is not monic")
    n = a.degree
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        rows[i][i - 1] = Fraction(1)
    for i in range(n):
        rows[i][n - 1] = -a.coeffs[i]
    return Matrix(rows)


def charpoly(A) -> Poly:
    A = _as_matrix(A)
    if not A.is_square():
        raise NotSquare(f"characteristic polynomial of a {A.rows}x{A.cols} matrix")
    return PolyMatrix.char_matrix(A.tolist()).det()


def invariant_factors(A) -> InvariantFactorData:
    """Nonunit Smith diagonal entries of ``λI - A``, largest first."""
    A = _as_matrix(A)
    if not A.is_square():
        raise NotSquare(f"invariant factors of a {A.rows}x{A.cols} matrix")
    diag = smith_diagonal(PolyMatrix.char_matrix(A.tolist()))
    facs = tuple(d for d in reversed(diag) if d.degree >= 1)
    return InvariantFactorData(facs, tuple(a.degree for a in facs))


def min_input_count(A) -> int:
    """Number of companion blocks; any controllable (A, B) needs that many inputs."""
    return invariant_factors(A).k


def controllability_matrix(A, B) -> Matrix:
    """``[B | AB | ... | A^{n-1}B]``."""
    A, B = _as_matrix(A), _as_matrix(B)
    _check_pair(A, B)
    blocks = [B]
    for _ in range(A.rows - 1):
        blocks.append(A @ blocks[-1])
    return blocks[0].hstack(*blocks[1:])


def is_controllable(A, B) -> bool:
    A, B = _as_matrix(A), _as_matrix(B)
    return controllability_matrix(A, B).rank() == A.rows


def _check_pair(A: Matrix, B: Matrix) -> None:
    if not A.is_square():
        raise NotSquare(f"A is {A.rows}x{A.cols}")
    if B.rows != A.rows:
        raise DimensionMismatch(f"A is {A.rows}x{A.cols} but B has {B.rows} rows")


# ---------------------------------------------------------------------------
# Cyclic decomposition by maximal conductors
# ---------------------------------------------------------------------------


def _candidate_coefficients(m: int, height_cap: int) -> Iterator[tuple]:
    """Single columns left to right, then integer combinations of growing height.

    A combination is normalized so its first nonzero coefficient is 1; within a
    height stage, shorter supports come first, then lexicographic order.
    """
    for j in range(m):
        yield tuple(1 if i == j else 0 for i in range(m))
    seen_height = 0
    h = 2
    while True:
        h = min(h, height_cap)
        values = []
        for mag in range(1, h + 1):
            values.extend((mag, -mag))
        for size in range(2, m + 1):
            for support in itertools.combinations(range(m), size):
                for tail in itertools.product(values, repeat=size - 1):
                    if max(abs(t) for t in tail) <= seen_height:
                        continue
                    c = [0] * m
                    c[support[0]] = 1
                    for idx, val in zip(support[1:], tail):
                        c[idx] = val
                    yield tuple(c)
        if h >= height_cap:
            return
        seen_height = h
        h *= 2


def _conductor(A: Matrix, W: list, w: tuple) -> Poly:
    """Monic f of least degree with ``f(A) w`` in span(W), W A-invariant."""
    krylov = [w]
    while True:
        cols = list(W) + krylov[:-1]
        target = krylov[-1]
        if cols:
            sol = Matrix.from_columns(cols).solve(target)
        else:
            sol = () if not any(target) else None
        if sol is not None:
            j = len(krylov) - 1
            coeffs = [-c for c in sol[len(W):]] + [Fraction(1)]
            assert len(coeffs) == j + 1
            return Poly(coeffs)
        krylov.append(A @ krylov[-1])


def _split_off(A: Matrix, W: list, w: tuple, f: Poly) -> tuple:
    """``v = w - u`` with u in span(W) and ``f(A) v = 0``."""
    y = A.poly_apply_vec(f, w)
    if not any(y):
        return w
    if not W:
        raise ArithmeticError("conductor does not annihilate the generator")
    images = [A.poly_apply_vec(f, b) for b in W]
    z = Matrix.from_columns(images).solve(y)
    if z is None:
        raise ArithmeticError("subspace is not admissible; cannot split off the generator")
    u = Matrix.from_columns(W) @ z
    return tuple(a - b for a, b in zip(w, u))


def _cyclic_decomposition(A: Matrix, G: Matrix, facs: InvariantFactorData, height_cap: int):
    """Generators v_i (one per invariant factor) drawn from the column space of G."""
    W: list = []
    gens = []
    coeffs = []
    for a, n_i in zip(facs.factors, facs.degrees):
        for c in _candidate_coefficients(G.cols, height_cap):
            w = G @ c
            if not any(w):
                continue
            f = _conductor(A, W, w)
            if f.degree == n_i:
                break
        else:
            raise SearchExhausted(
                f"no generator of degree {n_i} within height {height_cap}"
            )
        if f != a:
            raise ArithmeticError(f"conductor {f} differs from invariant factor {a}")
        v = _split_off(A, W, w, f)
        basis = [v]
        for _ in range(n_i - 1):
            basis.append(A @ basis[-1])
        W.extend(basis)
        gens.append(v)
        coeffs.append(tuple(Fraction(x) for x in c))
    return gens, coeffs, Matrix.from_columns(W)


def _block_companion(facs: InvariantFactorData) -> Matrix:
    return Matrix.block_diag([companion(a) for a in facs.factors])


def rcf(A, height_cap: int = DEFAULT_HEIGHT_CAP) -> RcfResult:
    """Rational canonical form ``C = P^{-1} A P`` with P built from cyclic bases."""
    A = _as_matrix(A)
    facs = invariant_factors(A)
    _, _, P = _cyclic_decomposition(A, Matrix.identity(A.rows), facs, height_cap)
    C = _block_companion(facs)
    if P.det() == 0 or A @ P != P @ C:
        raise ArithmeticError("rational canonical form failed exact verification")
    return RcfResult(C=C, P=P, factors=facs)


def block_offsets(sizes: Sequence[int]) -> list:
    out, off = [], 0
    for s in sizes:
        out.append(off)
        off += s
    return out


def column_level(col: Sequence, sizes: Sequence[int]) -> int:
    """1-based index of the last block holding a nonzero entry (0 for a zero column)."""
    level = 0
    for i, off in enumerate(block_offsets(sizes)):
        if any(col[off : off + sizes[i]]):
            level = i + 1
    return level


def ctrl_canonical_form(A, B, height_cap: int = DEFAULT_HEIGHT_CAP) -> CtrlCanonResult:
    """Classical controllability canonical form of a controllable pair.

    The i-th generator is ``w_i - u_i`` where ``w_i = B c_i`` has maximal
    conductor into the span of the previous cyclic blocks and ``u_i`` lies in
    that span. Hence ``Bbar @ c_i`` is zero below block i and equals the first
    unit vector inside block i.
    """
    A, B = _as_matrix(A), _as_matrix(B)
    _check_pair(A, B)
    if not is_controllable(A, B):
        raise NotControllable("Kalman rank test fails for (A, B)")
    facs = invariant_factors(A)
    gens, coeffs, P = _cyclic_decomposition(A, B, facs, height_cap)
    Pinv = P.inverse()
    C = _block_companion(facs)
    Bbar = Pinv @ B
    if Pinv @ A @ P != C:
        raise ArithmeticError("canonical form failed exact similarity check")
    result = CtrlCanonResult(
        C=C, Bbar=Bbar, P=P, generators=tuple(gens), factors=facs, generator_coeffs=tuple(coeffs)
    )
    if not generator_structure_ok(result):
        raise ArithmeticError("control matrix is not block upper triangular")
    return result


def generator_structure_ok(res: CtrlCanonResult) -> bool:
    """Each ``Bbar @ c_i`` is zero below block i and the first unit vector in block i."""
    sizes = res.block_sizes
    offs = block_offsets(sizes)
    for i, c in enumerate(res.generator_coeffs):
        col = res.Bbar @ c
        if column_level(col, sizes) != i + 1:
            return False
        block = col[offs[i] : offs[i] + sizes[i]]
        if block[0] != 1 or any(block[1:]):
            return False
    return True


def annihilates(p: Poly, A: Matrix) -> bool:
    return A.poly_apply(p).is_zero()


def divides(d: Poly, p: Poly) -> bool:
    return not poly_divmod(p, d)[1]
