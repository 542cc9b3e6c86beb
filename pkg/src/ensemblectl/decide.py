"""Uniform ensemble controllability decisions and canonical forms.

The decision reparameterizes the ensemble by spectral values η and runs the
Kalman test on the resulting finite diagonal systems. A finite certificate
set (critical tuples, shared-spectrum diagonals and a rational grid) stands
in for the continuum of η, so a Controllable verdict means "certified at the
tested set".
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .canon import CtrlCanonResult, ctrl_canonical_form, divides
from .ensemble import (
    DEFAULT_WIDTH,
    EnsembleSystem,
    SpectralPoint,
    _eccm_from_preimages,
    preimages,
    rational_between,
    reparameterized_system,
    spectral_point,
    validate,
)
from .errors import (
    InexactPoint,
    NotControllableAtEta,
    NotSingleInput,
    PointwiseUncontrollable,
)
from .linalg import Matrix
from .polyalg import (
    Interval,
    IsolatingInterval,
    Poly,
    PolyMatrix,
    RealAlg,
    isolate_real_roots,
    poly_gcd,
    polynomial_image,
    real_cmp,
    real_enclosure,
    real_eq,
    real_max,
    real_min,
    real_refine,
)

DEFAULT_DENSITY = 17
DEFAULT_PRECISION_BITS = 256
MAX_CANONICAL_SAMPLES = 8

CONTROLLABLE = "Controllable"
UNCONTROLLABLE = "Uncontrollable"
INDETERMINATE = "Indeterminate"


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


@dataclass
class CertificateSet:
    """Finite set of spectral tuples at which the Kalman test is run.

    ``critical`` holds products of per-axis critical values, ``diagonal``
    holds points with two coordinates equal inside a shared spectrum, and
    ``grid`` is a rational lattice of the product of ranges.
    """

    sys: EnsembleSystem
    critical: list
    diagonal: list
    grid: list
    density: int
    width: Fraction = DEFAULT_WIDTH
    _cache: dict = field(default_factory=dict, repr=False)

    def all_coords(self) -> list:
        return self.critical + self.diagonal + self.grid

    def __len__(self) -> int:
        return len(self.critical) + len(self.diagonal) + len(self.grid)

    def spectral(self, coords: tuple) -> SpectralPoint:
        key = _coords_key(coords)
        if key not in self._cache:
            self._cache[key] = spectral_point(self.sys, coords, self.width)
        return self._cache[key]


@dataclass(frozen=True)
class NecessaryChecks:
    m: int
    injective: tuple  # (index, bool)
    disjoint: tuple  # ((i, j), bool)
    constant: tuple  # indices of constant eigenvalue functions
    max_k: Optional[int]
    max_k_point: Optional[tuple] = None

    @property
    def single_input_required(self) -> bool:
        return self.m == 1

    @property
    def injectivity_ok(self) -> bool:
        return not self.single_input_required or all(ok for _, ok in self.injective)

    @property
    def disjointness_ok(self) -> bool:
        return not self.single_input_required or all(ok for _, ok in self.disjoint)

    @property
    def input_count_ok(self) -> bool:
        return self.max_k is not None and self.m >= self.max_k

    @property
    def passed(self) -> bool:
        return (
            not self.constant
            and self.injectivity_ok
            and self.disjointness_ok
            and self.input_count_ok
        )


@dataclass(frozen=True)
class Witness:
    point: SpectralPoint
    adiag: tuple
    D: tuple
    matrix: tuple
    rank: Optional[int]
    exact: bool
    reason: str


@dataclass(frozen=True)
class FunctionalCanonicalSample:
    eta: SpectralPoint
    C: Matrix
    Bbar: Matrix
    P: Matrix
    k: int
    block_sizes: tuple
    eigenvalue_sets: tuple
    result: CtrlCanonResult = field(repr=False, compare=False, default=None)


@dataclass
class ControllabilityReport:
    verdict: str
    witness: Optional[Witness]
    necessary: NecessaryChecks
    tested_points: int
    indeterminate_points: list
    canonical_samples: list
    density: int
    precision_bits: int
    certificate_sizes: dict
    scope: str


@dataclass(frozen=True)
class RationalFunction:
    """``num / den`` in lowest terms with a monic denominator."""

    num: Poly
    den: Poly

    @classmethod
    def make(cls, num: Poly, den: Poly) -> "RationalFunction":
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            return cls(Poly(), Poly.constant(1))
        g = poly_gcd(num, den)
        num, den = num // g, den // g
        lc = den.lead
        return cls(num * Poly.constant(1 / lc), den * Poly.constant(1 / lc))

    @property
    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def __call__(self, x):
        return self.num(x) / self.den(x)

    def format(self, var: str = "β") -> str:
        if self.is_polynomial:
            return self.num.format(var)
        return f"({self.num.format(var)})/({self.den.format(var)})"


@dataclass(frozen=True)
class SingleInputCanonical:
    C: tuple  # n x n RationalFunction
    bbar: tuple
    P: PolyMatrix
    det: Poly


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _coords_key(coords) -> tuple:
    out = []
    for c in coords:
        if isinstance(c, IsolatingInterval):
            c = c.value()
        out.append(c if isinstance(c, (Fraction, IsolatingInterval)) else Fraction(c))
    return tuple(out)


def _sorted_unique(values) -> list:
    out = []
    for v in values:
        if not any(real_eq(v, u) for u in out):
            out.append(v)
    return sorted(out, key=functools.cmp_to_key(real_cmp))


def _groups(values: Sequence[RealAlg]) -> list:
    """Index groups of exactly equal values."""
    groups: list = []
    for idx, v in enumerate(values):
        for g in groups:
            if real_eq(values[g[0]], v):
                g.append(idx)
                break
        else:
            groups.append([idx])
    return groups


def _expanded(point: SpectralPoint) -> list:
    vals = []
    for c, k in zip(point.coords, point.kappas):
        vals.extend([c] * k)
    return vals


def k_of_eta(point: SpectralPoint) -> int:
    """Largest multiplicity in the multiset of η values repeated κ times."""
    return max(len(g) for g in _groups(_expanded(point)))


def _precision_schedule(bits: int) -> list:
    out, b = [], 64
    while b < bits:
        out.append(b)
        b *= 2
    out.append(bits)
    return out


def _inner_rational(lo: RealAlg, hi: RealAlg, side: str) -> Fraction:
    """A rational inside [lo, hi] close to the requested end."""
    x = lo if side == "lo" else hi
    if isinstance(x, Fraction):
        return x
    span = real_enclosure(hi).hi - real_enclosure(lo).lo
    x = real_refine(x, span / (1 << 20))
    if isinstance(x, Fraction):
        return x
    return x.hi if side == "lo" else x.lo


def _lattice(lo: Fraction, hi: Fraction, count: int) -> list:
    if count <= 1 or lo == hi:
        return [lo]
    return [lo + (hi - lo) * Fraction(t, count - 1) for t in range(count)]


# ---------------------------------------------------------------------------
# Certificate set
# ---------------------------------------------------------------------------


def axis_critical_values(sys: EnsembleSystem) -> list:
    """Per axis: range endpoints, own critical values, others' critical values in range."""
    efs = sys.eigenfunctions
    own = [list(ef.critical_values) if not ef.constant else [ef.range.lo] for ef in efs]
    out = []
    for i, ef in enumerate(efs):
        vals = [ef.range.lo, ef.range.hi] + own[i]
        for j in range(len(efs)):
            if j != i:
                vals.extend(v for v in own[j] if ef.range.contains(v))
        out.append(_sorted_unique(vals))
    return out


def build_certificate_set(sys: EnsembleSystem, density: int = DEFAULT_DENSITY, width=DEFAULT_WIDTH) -> CertificateSet:
    if not sys.eigenfunctions:
        sys = validate(sys)
    efs = sys.eigenfunctions
    axes = axis_critical_values(sys)
    critical = [tuple(p) for p in itertools.product(*axes)]
    seen = {_coords_key(p) for p in critical}

    diagonal = []
    for i, j in itertools.combinations(range(sys.n), 2):
        ov = efs[i].range.intersect(efs[j].range)
        if ov is None or ov.is_point:
            continue
        a, b = _inner_rational(ov.lo, ov.hi, "lo"), _inner_rational(ov.lo, ov.hi, "hi")
        vals = _sorted_unique([ov.lo, ov.hi] + _lattice(a, b, density))
        others = [axes[k] if k not in (i, j) else [None] for k in range(sys.n)]
        for v in vals:
            for rest in itertools.product(*others):
                p = tuple(v if k in (i, j) else rest[k] for k in range(sys.n))
                key = _coords_key(p)
                if key not in seen:
                    seen.add(key)
                    diagonal.append(p)

    axes_grid = []
    for ef in efs:
        r = ef.range
        if r.is_point:
            axes_grid.append([r.lo])
        else:
            axes_grid.append(_lattice(_inner_rational(r.lo, r.hi, "lo"), _inner_rational(r.lo, r.hi, "hi"), density))
    grid = []
    for p in itertools.product(*axes_grid):
        key = _coords_key(p)
        if key not in seen:
            seen.add(key)
            grid.append(tuple(p))
    return CertificateSet(sys, critical, diagonal, grid, density, width)


# ---------------------------------------------------------------------------
# Pointwise Kalman tests
# ---------------------------------------------------------------------------


def kalman_matrix(adiag: Sequence, D: Sequence) -> list:
    """``[D | ΛD | ... | Λ^{N-1} D]`` for diagonal Λ, exact or interval entries."""
    N = len(adiag)
    rows = []
    for r in range(N):
        lam = adiag[r]
        lam = real_enclosure(lam) if isinstance(lam, IsolatingInterval) else lam
        row, powk = [], Fraction(1)
        for _ in range(N):
            row.extend(powk * d for d in D[r])
            powk = powk * lam
        rows.append(tuple(_collapse(x) for x in row))
    return rows


def _collapse(x):
    if isinstance(x, Interval) and x.lo == x.hi:
        return x.lo
    return x


def _certify_full_row_rank(rows: Sequence[Sequence]) -> bool:
    """True when the interval matrix certainly has full row rank."""
    g = len(rows)
    mids = Matrix([[x.mid if isinstance(x, Interval) else x for x in r] for r in rows])
    _, pivots, _ = mids.echelon()
    if len(pivots) < g:
        return False
    sub = [[Interval._lift(rows[r][c]) for c in pivots] for r in range(g)]
    for c in range(g):
        cands = [r for r in range(c, g) if not sub[r][c].contains_zero()]
        if not cands:
            return False
        best = max(cands, key=lambda r: min(abs(sub[r][c].lo), abs(sub[r][c].hi)))
        sub[c], sub[best] = sub[best], sub[c]
        piv = sub[c][c]
        for r in range(c + 1, g):
            f = sub[r][c] / piv
            sub[r] = [x - f * y for x, y in zip(sub[r], sub[c])]
    return True


@dataclass(frozen=True)
class PointResult:
    status: str  # pass | fail | uncertain
    reason: str
    adiag: tuple
    D: tuple
    rank: Optional[int] = None


def test_point(sys: EnsembleSystem, point: SpectralPoint) -> PointResult:
    """Controllability of the reparameterized diagonal system at one point."""
    adiag, D = reparameterized_system(sys, point)
    if isinstance(adiag, Matrix):
        vals = tuple(adiag[i, i] for i in range(adiag.rows))
        rows = tuple(D.row(i) for i in range(D.rows))
        K = Matrix(kalman_matrix(vals, rows))
        r = K.rank()
        status = "pass" if r == len(vals) else "fail"
        return PointResult(status, "kalman", vals, rows, r)
    vals, rows = tuple(adiag), tuple(tuple(r) for r in D)
    status = "pass"
    for grp in _groups(vals):
        if len(grp) > sys.m:
            return PointResult("fail", "structural", vals, rows)
        sub = [rows[i] for i in grp]
        if all(isinstance(x, Fraction) for r in sub for x in r):
            if Matrix(sub).rank() < len(grp):
                return PointResult("fail", "eigenvector", vals, rows)
        elif not _certify_full_row_rank(sub):
            status = "uncertain"
    return PointResult(status, "interval", vals, rows)


def _pbh_rank_deficient(vals: Sequence, rows: Sequence) -> bool:
    """Exact eigenvector test: some eigenvalue group has dependent control rows."""
    for grp in _groups(vals):
        if Matrix([rows[i] for i in grp]).rank() < len(grp):
            return True
    return False


def _make_witness(sys: EnsembleSystem, point: SpectralPoint, res: PointResult) -> Witness:
    matrix = tuple(kalman_matrix(res.adiag, res.D))
    exact = all(isinstance(x, Fraction) for r in matrix for x in r)
    if res.reason == "structural" or (res.reason == "constant" and not exact):
        if k_of_eta(point) <= sys.m:
            raise AssertionError("structural witness does not exceed the input count")
        return Witness(point, res.adiag, res.D, matrix, None, exact, "structural")
    if exact:
        rank = Matrix(matrix).rank()
        if rank >= len(res.adiag) or not _pbh_rank_deficient(res.adiag, res.D):
            raise AssertionError("witness failed independent re-verification")
        return Witness(point, res.adiag, res.D, matrix, rank, True, res.reason)
    # an exact eigenvalue group with dependent rational control rows
    if not _pbh_rank_deficient_partial(res.adiag, res.D):
        raise AssertionError("witness failed independent re-verification")
    return Witness(point, res.adiag, res.D, matrix, None, False, res.reason)


def _pbh_rank_deficient_partial(vals, rows) -> bool:
    for grp in _groups(vals):
        sub = [rows[i] for i in grp]
        if all(isinstance(x, Fraction) for r in sub for x in r) and Matrix(sub).rank() < len(grp):
            return True
    return False


# ---------------------------------------------------------------------------
# Necessary conditions
# ---------------------------------------------------------------------------


def necessary_checks(sys: EnsembleSystem, cert: Optional[CertificateSet] = None, density: int = DEFAULT_DENSITY) -> NecessaryChecks:
    """Injectivity and disjointness (single input) and the block-count bound."""
    if not sys.eigenfunctions:
        sys = validate(sys)
    efs = sys.eigenfunctions
    injective = tuple((ef.index, ef.injective) for ef in efs)
    disjoint = tuple(
        ((i, j), efs[i].range.intersect(efs[j].range) is None)
        for i, j in itertools.combinations(range(sys.n), 2)
    )
    constant = tuple(ef.index for ef in efs if ef.constant)
    if constant:
        return NecessaryChecks(sys.m, injective, disjoint, constant, None)
    cert = cert or build_certificate_set(sys, density)
    best, where = 0, None
    for coords in cert.all_coords():
        k = k_of_eta(cert.spectral(coords))
        if k > best:
            best, where = k, coords
    return NecessaryChecks(sys.m, injective, disjoint, constant, best, where)


# ---------------------------------------------------------------------------
# Decision
# ---------------------------------------------------------------------------


def _rational_in_range(sys: EnsembleSystem, j: int, width) -> tuple:
    """A rational spectral value for axis j, preferring rational preimages."""
    lo, hi = sys.K
    lam = sys.lam(j)
    fallback = None
    for beta in _lattice(lo, hi, 9):
        eta = lam(beta)
        pre = preimages(lam, eta, sys.K, width, sys.eigenfunctions[j].range)
        if fallback is None:
            fallback = (eta, pre)
        if all(isinstance(b, Fraction) for b in pre):
            return eta, pre
    return fallback


def _constant_witness(sys: EnsembleSystem, width) -> Witness:
    lo, hi = sys.K
    coords, pres = [], []
    for j, ef in enumerate(sys.eigenfunctions):
        if ef.constant:
            coords.append(ef.range.lo)
            pres.append(tuple(_lattice(lo, hi, sys.m + 1)))
        else:
            eta, pre = _rational_in_range(sys, j, width)
            coords.append(eta)
            pres.append(pre)
    point = SpectralPoint(tuple(coords), tuple(pres), tuple(len(p) for p in pres), (False,) * sys.n)
    vals, rows = [], []
    for j, (c, pre) in enumerate(zip(coords, pres)):
        blk = _eccm_from_preimages(sys, j, pre)
        vals.extend([c] * blk.kappa)
        rows.extend(blk.D)
    res = PointResult("fail", "constant", tuple(vals), tuple(rows))
    return _make_witness(sys, point, res)


def _necessary_witness(sys: EnsembleSystem, checks: NecessaryChecks, cert: CertificateSet) -> Optional[Witness]:
    """A point with k(η) > m derived from a failed necessary condition."""
    efs = sys.eigenfunctions
    candidates = []
    if checks.max_k_point is not None and checks.max_k > sys.m:
        candidates.append(checks.max_k_point)
    if sys.m == 1:
        for ef in efs:
            for b1, b2 in zip(ef.branches, ef.branches[1:]):
                v = polynomial_image(ef.poly, b1.hi)
                w1, w2 = polynomial_image(ef.poly, b1.lo), polynomial_image(ef.poly, b2.hi)
                if b1.direction == "increasing":
                    eta = rational_between(real_max([w1, w2]), v)
                else:
                    eta = rational_between(v, real_min([w1, w2]))
                candidates.append(_with_axis(sys, ef.index, eta, cert.width))
        for i, j in itertools.combinations(range(sys.n), 2):
            ov = efs[i].range.intersect(efs[j].range)
            if ov is None:
                continue
            eta = ov.lo if ov.is_point else rational_between(ov.lo, ov.hi)
            coords = list(_with_axis(sys, i, eta, cert.width))
            coords[j] = eta
            candidates.append(tuple(coords))
    for coords in candidates:
        point = cert.spectral(coords)
        if k_of_eta(point) > sys.m:
            adiag, D = reparameterized_system(sys, point)
            if isinstance(adiag, Matrix):
                vals = tuple(adiag[i, i] for i in range(adiag.rows))
                rows = tuple(D.row(i) for i in range(D.rows))
                return _make_witness(sys, point, PointResult("fail", "kalman", vals, rows))
            return _make_witness(
                sys, point, PointResult("fail", "structural", tuple(adiag), tuple(tuple(r) for r in D))
            )
    return None


def _with_axis(sys: EnsembleSystem, i: int, eta, width) -> tuple:
    coords = []
    for j in range(sys.n):
        coords.append(eta if j == i else _rational_in_range(sys, j, width)[0])
    return tuple(coords)


def decide_uec(
    sys: EnsembleSystem,
    density: int = DEFAULT_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> ControllabilityReport:
    """Decide uniform ensemble controllability on a finite certificate set."""
    if not sys.eigenfunctions:
        sys = validate(sys)
    schedule = _precision_schedule(precision_bits)
    width0 = Fraction(1, 1 << schedule[0])
    scope = "certified at tested set"

    if any(ef.constant for ef in sys.eigenfunctions):
        checks = necessary_checks(sys)
        w = _constant_witness(sys, width0)
        return ControllabilityReport(
            UNCONTROLLABLE, w, checks, 0, [], [], density, precision_bits, {}, "constant eigenvalue function"
        )

    cert = build_certificate_set(sys, density, width0)
    checks = necessary_checks(sys, cert)
    sizes = {"critical": len(cert.critical), "diagonal": len(cert.diagonal), "grid": len(cert.grid)}

    witness, uncertain, tested, samples = None, [], 0, []
    for coords in cert.all_coords():
        point = cert.spectral(coords)
        res = test_point(sys, point)
        for bits in schedule[1:]:
            if res.status != "uncertain":
                break
            point = spectral_point(sys, coords, Fraction(1, 1 << bits))
            res = test_point(sys, point)
        tested += 1
        if res.status == "fail":
            witness = _make_witness(sys, point, res)
            break
        if res.status == "uncertain":
            uncertain.append(point)
        elif point.is_exact and len(samples) < MAX_CANONICAL_SAMPLES and coords in cert.critical:
            samples.append(ensemble_canonical_form(sys, point))

    if witness is None and not checks.passed:
        witness = _necessary_witness(sys, checks, cert)
        if witness is None:
            raise AssertionError("a necessary condition failed but no witness was found")
    if witness is not None:
        verdict, scope = UNCONTROLLABLE, "witness verified exactly"
    elif uncertain:
        verdict, scope = INDETERMINATE, "interval rank not certified at maximum precision"
    else:
        verdict = CONTROLLABLE
    return ControllabilityReport(
        verdict, witness, checks, tested, uncertain, samples, density, precision_bits, sizes, scope
    )


# ---------------------------------------------------------------------------
# Canonical forms
# ---------------------------------------------------------------------------


def ensemble_canonical_form(sys: EnsembleSystem, eta, width=DEFAULT_WIDTH) -> FunctionalCanonicalSample:
    """Controllability canonical form of the reparameterized system at η."""
    if not sys.eigenfunctions:
        sys = validate(sys)
    point = eta if isinstance(eta, SpectralPoint) else spectral_point(sys, eta, width)
    if not point.is_exact:
        raise InexactPoint("canonical forms need rational coordinates and preimages")
    Adiag, D = reparameterized_system(sys, point)
    if Matrix(kalman_matrix([Adiag[i, i] for i in range(Adiag.rows)], D.tolist())).rank() < Adiag.rows:
        raise NotControllableAtEta(
            "reparameterized system is not controllable at (" + ", ".join(str(c) for c in point.coords) + ")"
        )
    res = ctrl_canonical_form(Adiag, D)
    facs = res.factors.factors
    for a in facs:
        if poly_gcd(a, a.derivative()).degree > 0:
            raise ArithmeticError("invariant factor with a repeated eigenvalue")
    for a, b in zip(facs, facs[1:]):
        if not divides(b, a):
            raise ArithmeticError("invariant factors do not form a divisibility chain")
    values = _sorted_unique([Adiag[i, i] for i in range(Adiag.rows)])
    eig_sets = tuple(tuple(v for v in values if a(v) == 0) for a in facs)
    for s1, s2 in zip(eig_sets, eig_sets[1:]):
        if not set(s2) <= set(s1):
            raise ArithmeticError("eigenvalue sets are not nested")
    return FunctionalCanonicalSample(
        point, res.C, res.Bbar, res.P, res.k, res.block_sizes, eig_sets, res
    )


def single_input_canonical(sys: EnsembleSystem) -> SingleInputCanonical:
    """Companion form ``C(β) = P(β)^{-1} A(β) P(β)`` with ``P = [b | Ab | ...]``."""
    if not sys.eigenfunctions:
        sys = validate(sys)
    if sys.m != 1:
        raise NotSingleInput(f"system has {sys.m} inputs")
    n = sys.n
    A = sys.A
    cols = [[sys.B[i, 0] for i in range(n)]]
    for _ in range(n - 1):
        prev = cols[-1]
        cols.append([sum((A[i, k] * prev[k] for k in range(n)), Poly()) for i in range(n)])
    P = PolyMatrix([[cols[j][i] for j in range(n)] for i in range(n)])
    det = P.det()
    lo, hi = sys.K
    if not det:
        raise PointwiseUncontrollable("det P(β) is identically zero", witness=lo)
    roots = isolate_real_roots(det, (lo, hi))
    if roots:
        raise PointwiseUncontrollable(
            f"det P(β) = {det.format('β')} vanishes in K", witness=roots[0].value()
        )
    num = P.adjugate() @ A @ P
    C = tuple(tuple(RationalFunction.make(num[i, j], det) for j in range(n)) for i in range(n))
    bbar = tuple(Fraction(1 if i == 0 else 0) for i in range(n))
    return SingleInputCanonical(C, bbar, P, det)
