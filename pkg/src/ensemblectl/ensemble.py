"""Linear ensembles ``dx/dt = A(β)x + B(β)u`` on a compact interval K.

Eigenvalue functions are the diagonal entries of a diagonal or upper
triangular ``A(β)``. This module locates their monotone branches, their
ranges, the preimages of a spectral value and the stacked control rows
(criterion matrices) used by the decision engine.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ConstantEigenfunction, EmptyInterval, MalformedShape, NonTriangular, OutOfRange
from .linalg import Matrix
from .polyalg import (
    Interval,
    IsolatingInterval,
    Poly,
    PolyMatrix,
    RealAlg,
    eval_enclosure,
    isolate_real_roots,
    polynomial_image,
    real_cmp,
    real_enclosure,
    real_eq,
    real_max,
    real_min,
    real_refine,
    to_rational,
    _halve,
)

DEFAULT_WIDTH = Fraction(1, 1 << 64)
FORMS = ("diagonal", "upper-triangular")


@dataclass(frozen=True)
class Branch:
    """Maximal closed subinterval of K on which λ is strictly monotone."""

    lo: RealAlg
    hi: RealAlg
    direction: str  # "increasing" | "decreasing"


@dataclass(frozen=True)
class RealRange:
    """Closed interval ``[lo, hi]`` with real algebraic endpoints."""

    lo: RealAlg
    hi: RealAlg

    @property
    def is_point(self) -> bool:
        return real_eq(self.lo, self.hi)

    def contains(self, x: RealAlg) -> bool:
        return real_cmp(self.lo, x) <= 0 and real_cmp(x, self.hi) <= 0

    def intersect(self, other: "RealRange") -> Optional["RealRange"]:
        lo = real_max([self.lo, other.lo])
        hi = real_min([self.hi, other.hi])
        if real_cmp(lo, hi) > 0:
            return None
        return RealRange(lo, hi)


@dataclass(frozen=True)
class EigenFunction:
    index: int
    poly: Poly
    branches: tuple
    range: RealRange
    constant: bool = False

    @property
    def injective(self) -> bool:
        return not self.constant and len(self.branches) == 1

    @property
    def critical_points(self) -> tuple:
        """Branch endpoints, left to right, including the ends of K."""
        if self.constant:
            return ()
        return tuple([b.lo for b in self.branches] + [self.branches[-1].hi])

    @property
    def critical_values(self) -> tuple:
        return tuple(polynomial_image(self.poly, c) for c in self.critical_points)


@dataclass(frozen=True)
class EnsembleSystem:
    n: int
    m: int
    K: tuple
    A: PolyMatrix
    B: PolyMatrix
    form: str = "diagonal"
    parameter: str = "β"
    eigenfunctions: tuple = field(default=(), compare=False)

    def lam(self, i: int) -> Poly:
        return self.A[i, i]

    def b_row(self, i: int) -> tuple:
        return tuple(self.B[i, j] for j in range(self.m))


@dataclass(frozen=True)
class Eccm:
    """Row ``j`` is the i-th control row evaluated at the j-th preimage."""

    index: int
    preimages: tuple
    D: tuple
    exact: bool

    @property
    def kappa(self) -> int:
        return len(self.preimages)


@dataclass(frozen=True)
class SpectralPoint:
    coords: tuple
    preimages: tuple
    kappas: tuple
    junctions: tuple = ()

    @property
    def N(self) -> int:
        return sum(self.kappas)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coords)

    @property
    def is_exact(self) -> bool:
        return self.is_rational and all(
            isinstance(b, Fraction) for pre in self.preimages for b in pre
        )

    @property
    def at_junction(self) -> bool:
        return any(self.junctions)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(sys: EnsembleSystem) -> EnsembleSystem:
    """Check shapes and triangularity, then attach the eigenvalue functions."""
    lo, hi = (Fraction(v) for v in sys.K)
    if not lo < hi:
        raise EmptyInterval(f"K = [{lo}, {hi}] has no interior")
    if sys.form not in FORMS:
        raise MalformedShape(f"unknown form {sys.form!r}")
    if sys.A.shape != (sys.n, sys.n):
        raise MalformedShape(f"A is {sys.A.shape}, expected {(sys.n, sys.n)}")
    if sys.B.shape != (sys.n, sys.m):
        raise MalformedShape(f"B is {sys.B.shape}, expected {(sys.n, sys.m)}")
    for i in range(sys.n):
        for j in range(sys.n):
            if sys.A[i, j] and (i > j):
                raise NonTriangular(f"A[{i}][{j}] below the diagonal is nonzero")
            if sys.A[i, j] and i < j and sys.form == "diagonal":
                raise NonTriangular(f"A[{i}][{j}] is nonzero in a diagonal system")
    efs = tuple(eigenfunction(i, sys.A[i, i], (lo, hi)) for i in range(sys.n))
    return dataclasses.replace(sys, K=(lo, hi), eigenfunctions=efs)


def eigenfunction(i: int, lam: Poly, K) -> EigenFunction:
    if lam.degree <= 0:
        c = lam(0)
        return EigenFunction(i, lam, (), RealRange(c, c), constant=True)
    branches = tuple(compute_branches(lam, K))
    return EigenFunction(i, lam, branches, _range_from_branches(lam, branches))


# ---------------------------------------------------------------------------
# Branches, ranges, preimages
# ---------------------------------------------------------------------------


def rational_between(a: RealAlg, b: RealAlg) -> Fraction:
    """A rational strictly between ``a < b``."""
    while True:
        ea, eb = real_enclosure(a), real_enclosure(b)
        if ea.hi < eb.lo:
            return (ea.hi + eb.lo) / 2
        a, b = _halve(a), _halve(b)


def compute_branches(lam: Poly, K) -> list:
    """Maximal monotone branches of ``lam`` on K.

    Split points are the roots of ``lam'`` inside K. Neighbouring pieces with
    the same direction (an even-order critical point) are merged.
    """
    lo, hi = (Fraction(v) for v in K)
    d = lam.derivative()
    if not d:
        raise ConstantEigenfunction(f"{lam.format('β')} is constant")
    crit = [
        r.value()
        for r in isolate_real_roots(d, (lo, hi))
        if real_cmp(r.value(), lo) > 0 and real_cmp(r.value(), hi) < 0
    ]
    pts = [lo] + crit + [hi]
    pieces = []
    for a, b in zip(pts, pts[1:]):
        s = d(rational_between(a, b))
        pieces.append([a, b, "increasing" if s > 0 else "decreasing"])
    merged = [pieces[0]]
    for a, b, direction in pieces[1:]:
        if direction == merged[-1][2]:
            merged[-1][1] = b
        else:
            merged.append([a, b, direction])
    return [Branch(a, b, direction) for a, b, direction in merged]


def _range_from_branches(lam: Poly, branches: Sequence[Branch]) -> RealRange:
    ends = [branches[0].lo] + [b.hi for b in branches]
    values = [polynomial_image(lam, e) for e in ends]
    return RealRange(real_min(values), real_max(values))


def spectral_range(lam: Poly, K) -> RealRange:
    """``lam(K)`` as an exact closed interval."""
    return eigenfunction(0, lam, K).range


def shared_spectrum(lam_i: Poly, lam_j: Poly, K) -> Optional[RealRange]:
    """Intersection of both ranges, or None when they are disjoint."""
    return spectral_range(lam_i, K).intersect(spectral_range(lam_j, K))


def _image_matches(lam: Poly, beta: RealAlg, eta: IsolatingInterval) -> bool:
    """Decide ``lam(beta) == eta`` given that lam(beta) is a root of eta.poly."""
    while True:
        e = eval_enclosure(lam, beta)
        if e.lo > eta.lo and e.hi <= eta.hi:
            return True
        if e.hi < eta.lo or e.lo > eta.hi:
            return False
        beta = _halve(beta)


def preimages(lam: Poly, eta: RealAlg, K, width=DEFAULT_WIDTH, rng: Optional[RealRange] = None) -> tuple:
    """Distinct points of K mapped to ``eta``, ascending.

    Rational points are Fractions; irrational ones are IsolatingIntervals of
    width at most ``width``.
    """
    lo, hi = (Fraction(v) for v in K)
    eta = eta.value() if isinstance(eta, IsolatingInterval) else to_rational(eta)
    if lam.degree <= 0:
        raise ConstantEigenfunction("constant eigenvalue function has a continuum of preimages")
    rng = rng or spectral_range(lam, (lo, hi))
    if not rng.contains(eta):
        raise OutOfRange(f"{eta!r} is outside the range of {lam.format('β')}")
    if isinstance(eta, Fraction):
        roots = [r.value() for r in isolate_real_roots(lam - Poly([eta]), (lo, hi))]
    else:
        g = eta.poly.compose(lam)
        roots = [
            r.value()
            for r in isolate_real_roots(g, (lo, hi))
            if _image_matches(lam, r.value(), eta)
        ]
    return tuple(real_refine(r, width) for r in roots)


def eccm(sys: EnsembleSystem, i: int, eta: RealAlg, width=DEFAULT_WIDTH) -> Eccm:
    ef = sys.eigenfunctions[i] if sys.eigenfunctions else None
    pre = preimages(sys.lam(i), eta, sys.K, width, ef.range if ef else None)
    return _eccm_from_preimages(sys, i, pre)


def _entry(iv: Interval):
    return iv.lo if iv.lo == iv.hi else iv


def spectral_point(sys: EnsembleSystem, coords: Sequence[RealAlg], width=DEFAULT_WIDTH) -> SpectralPoint:
    """Preimage data for every coordinate of ``coords``."""
    if len(coords) != sys.n:
        raise MalformedShape(f"expected {sys.n} coordinates, got {len(coords)}")
    pres, junctions = [], []
    for i, eta in enumerate(coords):
        ef = sys.eigenfunctions[i]
        pre = preimages(sys.lam(i), eta, sys.K, width, ef.range)
        pres.append(pre)
        crit = ef.critical_points[1:-1]
        junctions.append(any(real_eq(b, c) for b in pre for c in crit))
    return SpectralPoint(
        tuple(c.value() if isinstance(c, IsolatingInterval) else to_rational(c) for c in coords),
        tuple(pres),
        tuple(len(p) for p in pres),
        tuple(junctions),
    )


def reparameterized_system(sys: EnsembleSystem, eta, width=DEFAULT_WIDTH):
    """Diagonal drift and stacked control rows indexed by spectral values.

    Returns ``(adiag, D)`` where ``adiag`` lists the N diagonal entries and
    ``D`` is the N x m list of rows. When every entry is rational both are
    returned as :class:`Matrix` objects.
    """
    if not isinstance(eta, SpectralPoint):
        eta = spectral_point(sys, eta, width)
    adiag, rows, exact = [], [], True
    for i, (c, pre) in enumerate(zip(eta.coords, eta.preimages)):
        blk = _eccm_from_preimages(sys, i, pre)
        exact = exact and blk.exact and isinstance(c, Fraction)
        adiag.extend([c] * blk.kappa)
        rows.extend(blk.D)
    if exact:
        return Matrix.diag(adiag), Matrix(rows)
    return adiag, rows


def _eccm_from_preimages(sys: EnsembleSystem, i: int, pre: tuple) -> Eccm:
    row = sys.b_row(i)
    rows, exact = [], True
    for beta in pre:
        if isinstance(beta, Fraction):
            rows.append(tuple(p(beta) for p in row))
        else:
            exact = False
            rows.append(tuple(_entry(eval_enclosure(p, beta)) for p in row))
    return Eccm(i, pre, tuple(rows), exact)
