from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from ensemblectl.errors import DivisionByZeroPolynomial
from ensemblectl.polyalg import (
    Interval,
    IsolatingInterval,
    Poly,
    PolyMatrix,
    count_roots,
    isolate_real_roots,
    parse_rational,
    poly_divmod,
    poly_gcd,
    polynomial_image,
    real_cmp,
    refine,
    smith_diagonal,
    smith_normal_form,
    squarefree,
    sturm_sequence,
    sign_variations,
)

x = Poly.x()
lam = sympy.Symbol("lam")


def to_sympy(p: Poly):
    return sympy.Poly(list(reversed([sympy.Rational(c.numerator, c.denominator) for c in p.coeffs])) or [0], lam)


rationals = st.fractions(min_value=-6, max_value=6, max_denominator=4)
polys = st.lists(rationals, min_size=0, max_size=6).map(Poly)
nonzero_polys = polys.filter(lambda p: bool(p))


# -- rationals ----------------------------------------------------------------


def test_parse_rational_forms():
    assert parse_rational("3") == 3
    assert parse_rational("-6/4") == Fraction(-3, 2)
    with pytest.raises(ValueError):
        parse_rational("1/0")
    with pytest.raises(ValueError):
        parse_rational("0.5")


def test_poly_rejects_floats():
    with pytest.raises(TypeError):
        Poly([0.5])


def test_zero_polynomial_has_empty_coefficients():
    assert Poly([0, 0]).coeffs == ()
    assert Poly().degree == -1
    assert Poly([1, 2, 0]).degree == 1


# -- gcd and division ---------------------------------------------------------


def test_gcd_examples():
    assert poly_gcd(x * x - 1, x - 1) == x - 1
    assert poly_gcd(x * x - 3 * x + 2, x * x - 4 * x + 3) == x - 1
    p = 2 * x * x + 4
    assert poly_gcd(p, Poly()) == p.monic()
    assert poly_gcd(Poly(), Poly()) == Poly()


def test_divmod_examples():
    assert poly_divmod(x * x - 3 * x + 2, x - 1) == (x - 2, Poly())
    assert poly_divmod(x, x * x) == (Poly(), x)
    assert poly_divmod(x**3, x) == (x * x, Poly())
    with pytest.raises(DivisionByZeroPolynomial):
        poly_divmod(x, Poly())


@given(polys, nonzero_polys)
def test_divmod_identity(p, q):
    quo, rem = poly_divmod(p, q)
    assert q * quo + rem == p
    assert rem.degree < q.degree


@given(polys, polys)
def test_gcd_divides_both_and_matches_sympy(p, q):
    g = poly_gcd(p, q)
    if not g:
        assert not p and not q
        return
    assert g.is_monic
    assert not poly_divmod(p, g)[1]
    assert not poly_divmod(q, g)[1]
    expected = sympy.gcd(to_sympy(p), to_sympy(q))
    if not expected.is_zero:
        expected = expected.monic()
    assert sympy.expand(to_sympy(g).as_expr() - expected.as_expr()) == 0


# -- root isolation -----------------------------------------------------------


def test_isolate_rational_roots_exact():
    roots = isolate_real_roots(x * x - Fraction(1, 4), (-1, 1))
    assert [r.value() for r in roots] == [Fraction(-1, 2), Fraction(1, 2)]


def test_isolate_irrational_roots():
    roots = isolate_real_roots(3 * x * x - 1, (-1, 1))
    assert len(roots) == 2
    for r, s in zip(roots, (-1, 1)):
        assert not r.is_exact
        assert r.lo < s / sympy.sqrt(3) <= r.hi


def test_isolate_no_real_roots():
    assert isolate_real_roots(x * x + 1, (-1, 1)) == []


def test_refine_contract():
    r = isolate_real_roots(3 * x * x - 1, (0, 1))[0]
    rr = refine(r, Fraction(1, 1024))
    assert rr.width <= Fraction(1, 1024)
    assert rr.lo < 1 / sympy.sqrt(3) <= rr.hi
    exact = isolate_real_roots(x - Fraction(1, 3), (0, 1))[0]
    assert refine(exact, Fraction(1, 10**9)) == exact
    s2 = refine(isolate_real_roots(x * x - 2, (0, 2))[0], Fraction(1, 100))
    assert s2 == _bisection_oracle(x * x - 2, Fraction(1), Fraction(2), Fraction(1, 100))
    assert s2.lo < sympy.sqrt(2) <= s2.hi
    assert Fraction(141, 100) <= s2.lo < s2.hi <= Fraction(143, 100)


def _bisection_oracle(p, lo, hi, width):
    # plain bisection on (lo, hi] from an independent starting bracket
    while hi - lo > width:
        mid = (lo + hi) / 2
        if (p(mid) > 0) == (p(hi) > 0):
            hi = mid
        else:
            lo = mid
    return IsolatingInterval(lo, hi, p)


@given(nonzero_polys, rationals, rationals)
def test_isolation_matches_sturm_count_and_sympy(p, a, b):
    lo, hi = min(a, b), max(a, b)
    roots = isolate_real_roots(p, (lo, hi))
    assert len(roots) == count_roots(p, lo, hi)
    sp = to_sympy(p)
    if sp.degree() > 0:
        expected = sympy.Poly(sp.as_expr(), lam).count_roots(
            sympy.Rational(lo.numerator, lo.denominator), sympy.Rational(hi.numerator, hi.denominator)
        )
        # sympy counts multiplicities; compare against its square-free part
        expected = sympy.Poly(sympy.sqf_part(sp.as_expr()), lam).count_roots(
            sympy.Rational(lo.numerator, lo.denominator), sympy.Rational(hi.numerator, hi.denominator)
        )
        assert len(roots) == expected
    for r1, r2 in zip(roots, roots[1:]):
        assert r1.hi < r2.lo or (r1.hi <= r2.lo and not r2.is_exact) or r1.hi < r2.hi
    for r in roots:
        if r.is_exact:
            assert p(r.lo) == 0
        else:
            q = squarefree(p)
            assert q(r.lo) * q(r.hi) < 0


@given(nonzero_polys, st.fractions(min_value=1, max_value=1, max_denominator=1))
def test_refine_keeps_the_root(p, _):
    for r in isolate_real_roots(p, (-8, 8)):
        rr = refine(r, Fraction(1, 2**20))
        assert rr.width <= Fraction(1, 2**20)
        assert refine(rr, Fraction(1, 2**20)) == rr
        assert r.lo <= rr.lo and rr.hi <= r.hi
        if not rr.is_exact:
            assert rr.poly(rr.lo) * rr.poly(rr.hi) < 0


def test_sturm_sequence_counts_roots():
    p = (x - 1) * (x - 2) * (x - 3)
    seq = sturm_sequence(p)
    assert sign_variations(seq, Fraction(0)) - sign_variations(seq, Fraction(4)) == 3


def test_real_comparison_of_algebraic_numbers():
    r3 = isolate_real_roots(x * x - 3, (0, 2))[0]
    r3b = isolate_real_roots(x**4 - 9, (0, 2))[0]
    r2 = isolate_real_roots(x * x - 2, (0, 2))[0]
    assert real_cmp(r3, r3b) == 0
    assert real_cmp(r2, r3) == -1
    assert real_cmp(Fraction(7, 4), r3) == 1


def test_polynomial_image_of_irrational_point():
    s = isolate_real_roots(3 * x * x - 1, (0, 1))[0]
    v = polynomial_image(x**3 - x, s)  # -2/(3*sqrt(3))
    target = -2 / (3 * sympy.sqrt(3))
    assert isinstance(v, IsolatingInterval)
    assert v.lo < target <= v.hi
    assert polynomial_image(x * x, s) == Fraction(1, 3)


def test_interval_arithmetic_encloses():
    a, b = Interval(Fraction(-1), Fraction(2)), Interval(Fraction(3), Fraction(4))
    assert a * b == Interval(Fraction(-4), Fraction(8))
    assert (a + b) == Interval(Fraction(2), Fraction(6))
    with pytest.raises(ZeroDivisionError):
        b / a


# -- Smith normal form --------------------------------------------------------


def test_smith_examples():
    S = smith_diagonal(PolyMatrix.char_matrix([[2, 0], [0, 2]]))
    assert S == [x - 2, x - 2]
    S = smith_diagonal(PolyMatrix.char_matrix([[1, 0], [0, 2]]))
    assert S == [Poly([1]), x * x - 3 * x + 2]
    S = smith_diagonal(PolyMatrix.char_matrix([[0, -2], [1, 3]]))
    assert S == [Poly([1]), x * x - 3 * x + 2]


small_ints = st.integers(min_value=-3, max_value=3)


@given(st.integers(min_value=1, max_value=4).flatmap(
    lambda n: st.lists(st.lists(small_ints, min_size=n, max_size=n), min_size=n, max_size=n)
))
def test_smith_form_properties(rows):
    M = PolyMatrix.char_matrix(rows)
    S, U, V = smith_normal_form(M)
    assert U @ M @ V == S
    n = len(rows)
    diag = [S[i, i] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                assert not S[i, j]
    for a, b in zip(diag, diag[1:]):
        assert not poly_divmod(b, a)[1]
    assert all(d.is_monic for d in diag)
    assert U.det().degree == 0 and V.det().degree == 0
    prod = Poly([1])
    for d in diag:
        prod = prod * d
    assert prod == M.det()
    expected = sympy.Matrix(rows).charpoly(lam).as_expr()
    assert to_sympy(prod) == sympy.Poly(expected, lam)
