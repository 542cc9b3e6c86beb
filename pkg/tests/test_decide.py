import random
from fractions import Fraction

import pytest

from ensemblectl.canon import is_controllable, rcf
from ensemblectl.decide import (
    CONTROLLABLE,
    INDETERMINATE,
    UNCONTROLLABLE,
    RationalFunction,
    build_certificate_set,
    decide_uec,
    ensemble_canonical_form,
    k_of_eta,
    kalman_matrix,
    necessary_checks,
    single_input_canonical,
    _certify_full_row_rank,
)
from ensemblectl.ensemble import EnsembleSystem, spectral_point, validate
from ensemblectl.errors import InexactPoint, NotControllableAtEta, NotSingleInput, PointwiseUncontrollable
from ensemblectl.linalg import Matrix
from ensemblectl.polyalg import Interval, Poly, PolyMatrix

b = Poly.x()
Z = Poly()
F = Fraction


def make(A, B, K):
    n, m = len(A), len(B[0])
    return validate(EnsembleSystem(n, m, K, PolyMatrix(A), PolyMatrix(B)))


# -- necessary conditions and block counts -------------------------------------


def test_necessary_checks_examples(systems):
    nc = necessary_checks(systems["example1"])
    assert not nc.injectivity_ok and not nc.passed
    nc = necessary_checks(systems["example2"])
    assert nc.injectivity_ok and not nc.disjointness_ok and not nc.passed
    nc = necessary_checks(systems["example4"])
    assert nc.passed and nc.max_k == 2


def test_k_of_eta_examples(systems):
    assert k_of_eta(spectral_point(systems["example2"], (2, 2))) == 2
    assert k_of_eta(spectral_point(systems["example4"], (1, 3))) == 1
    assert k_of_eta(spectral_point(systems["example3"], (F(1, 4),))) == 2


def test_k_of_eta_counts_rcf_blocks(systems):
    s = systems["example4"]
    for eta in [(1, 2), (2, 2), (F(3, 2), 3), (2, 4)]:
        p = spectral_point(s, eta)
        adiag = Matrix.diag([c for c, k in zip(p.coords, p.kappas) for _ in range(k)])
        assert k_of_eta(p) == rcf(adiag).factors.k


def test_certificate_set_contents(systems):
    c2 = build_certificate_set(systems["example2"])
    assert (2, 2) in c2.critical
    c4 = build_certificate_set(systems["example4"])
    assert c4.critical == c2.critical
    c1 = build_certificate_set(systems["example1"])
    assert (0,) in c1.critical and (1,) in c1.critical
    assert len(c1.grid) + len(c1.critical) == 17
    for p in c4.grid:
        assert all(isinstance(v, Fraction) for v in p)
        assert 1 <= p[0] <= 2 and 2 <= p[1] <= 4


def test_certificate_set_includes_shared_diagonal():
    s = make([[b, Z], [Z, 3 - b]], [[1], [1]], (1, 2))
    c = build_certificate_set(s, density=5)
    assert any(p[0] == p[1] and 1 < p[0] < 2 for p in c.diagonal + c.grid)


# -- decisions ----------------------------------------------------------------


def test_decide_shared_spectrum_uncontrollable(systems):
    r = decide_uec(systems["example2"])
    assert r.verdict == UNCONTROLLABLE
    assert r.witness.point.coords == (2, 2)
    assert Matrix(r.witness.matrix) == Matrix([[1, 2], [1, 2]])
    assert r.witness.rank == 1


def test_decide_second_input_controllable(systems):
    r = decide_uec(systems["example4"])
    assert r.verdict == CONTROLLABLE
    assert r.tested_points == sum(r.certificate_sizes.values())
    assert r.scope == "certified at tested set"


def test_decide_injectivity_and_separated_inputs(systems):
    assert decide_uec(systems["example1"]).verdict == UNCONTROLLABLE
    r = decide_uec(systems["example3"])
    assert r.verdict == CONTROLLABLE
    assert not r.indeterminate_points


def test_controllable_verdict_respects_block_count(systems):
    s = systems["example4"]
    r = decide_uec(s)
    cert = build_certificate_set(s)
    assert all(k_of_eta(cert.spectral(c)) <= s.m for c in cert.all_coords())
    assert r.necessary.max_k <= s.m


def test_witness_is_independently_rank_deficient(systems):
    for name in ("example1", "example2"):
        w = decide_uec(systems[name]).witness
        assert w.exact
        K = Matrix(kalman_matrix(w.adiag, w.D))
        assert K.rank() < len(w.adiag)
        assert not is_controllable(Matrix.diag(w.adiag), Matrix(w.D))


def test_constant_eigenfunction_fast_path():
    s = make([[Poly([3]), Z], [Z, b]], [[1, 0], [0, 1]], (0, 1))
    r = decide_uec(s)
    assert r.verdict == UNCONTROLLABLE
    assert 0 in r.necessary.constant
    assert r.witness.point.kappas[0] == 3
    assert r.witness.rank is not None and r.witness.rank < r.witness.point.N


def test_structural_failure_with_irrational_preimages():
    # four preimages of every interior value, two inputs
    s = make([[(b * b - 1) * (b * b - 1)]], [[1, b]], (-2, 2))
    r = decide_uec(s, density=5)
    assert r.verdict == UNCONTROLLABLE


def test_indeterminate_at_uncertifiable_irrational_point():
    # rows [1, ±r(r²-2)] coincide exactly at r = √2, which intervals cannot certify
    s = make([[b * b]], [[1, b * (b * b - 2)]], (-2, 2))
    r = decide_uec(s, density=5, precision_bits=128)
    assert r.verdict == INDETERMINATE
    assert [p.coords for p in r.indeterminate_points] == [(2,)]
    assert r.witness is None


def test_low_precision_still_certifies_well_separated_rows():
    s = make([[b * b]], [[1, b]], (-1, 1))
    for bits in (1, 8, 64):
        assert decide_uec(s, density=5, precision_bits=bits).verdict == CONTROLLABLE


def test_interval_rank_certification():
    one = Interval(F(1), F(1))
    assert _certify_full_row_rank([[one, Interval(F(-1), F(-1, 2))], [one, Interval(F(1, 2), F(1))]])
    assert not _certify_full_row_rank([[one, Interval(F(-1), F(1))], [one, Interval(F(-1), F(1))]])


def test_verdicts_differ_only_by_second_input(systems):
    s2, s4 = systems["example2"], systems["example4"]
    assert s2.A == s4.A
    assert decide_uec(s2).verdict == UNCONTROLLABLE
    assert decide_uec(s4).verdict == CONTROLLABLE


# -- canonical forms ----------------------------------------------------------


def test_ensemble_canonical_examples(systems):
    s = ensemble_canonical_form(systems["example4"], (1, 3))
    assert s.C == Matrix([[0, -3], [1, 4]])
    assert s.Bbar == Matrix([[1, F(-1, 2)], [0, F(1, 2)]])
    s22 = ensemble_canonical_form(systems["example4"], (2, 2))
    assert s22.C == Matrix.diag([2, 2]) and s22.Bbar == Matrix.identity(2)
    # with a scalar drift every basis works; the control matrix itself gives Bbar = I
    assert s22.P == Matrix([[1, 0], [1, 1]])
    with pytest.raises(NotControllableAtEta):
        ensemble_canonical_form(systems["example2"], (2, 2))


def test_canonical_form_discontinuity(systems):
    a = ensemble_canonical_form(systems["example4"], (1, 3))
    c = ensemble_canonical_form(systems["example4"], (2, 2))
    assert a.C[1, 0] == 1 and c.C[1, 0] == 0


def test_canonical_sample_structure(systems):
    for eta in [(1, 2), (F(3, 2), 3), (2, 2), (2, 4)]:
        s = ensemble_canonical_form(systems["example4"], eta)
        assert s.k == k_of_eta(s.eta)
        assert s.P.inverse() @ Matrix.diag(s.eta.coords) @ s.P == s.C
        for s1, s2 in zip(s.eigenvalue_sets, s.eigenvalue_sets[1:]):
            assert set(s2) <= set(s1)


def test_ensemble_canonical_needs_exact_point(systems):
    with pytest.raises(InexactPoint):
        ensemble_canonical_form(systems["example3"], (F(1, 8),))


def test_single_input_canonical_examples(systems):
    sc = single_input_canonical(systems["example2"])
    assert sc.C[0][0].num == Z and sc.C[0][1] == RationalFunction.make(-2 * b * b, Poly([1]))
    assert sc.C[1][0] == RationalFunction.make(Poly([1]), Poly([1]))
    assert sc.C[1][1] == RationalFunction.make(3 * b, Poly([1]))
    assert sc.bbar == (1, 0)
    sc = single_input_canonical(systems["example1"])
    assert sc.C[0][0] == RationalFunction.make(b * b, Poly([1]))
    s = make([[b, Z], [Z, b + 3]], [[1], [1]], (0, 1))
    sc = single_input_canonical(s)
    assert sc.det == Poly([3])
    assert [[c.num for c in r] for r in sc.C] == [[Z, -b * (b + 3)], [Poly([1]), 2 * b + 3]]


def test_single_input_canonical_errors(systems):
    with pytest.raises(NotSingleInput):
        single_input_canonical(systems["example4"])
    s = make([[b, Z], [Z, 2 * b]], [[1], [1]], (-1, 1))
    with pytest.raises(PointwiseUncontrollable) as exc:
        single_input_canonical(s)
    assert exc.value.witness == 0


def test_single_input_canonical_pointwise_consistency():
    A = PolyMatrix([[b, b * b, Z], [Z, b + 2, Poly([1])], [Z, Z, 3 * b + 5]])
    s = validate(EnsembleSystem(3, 1, (1, 2), A, PolyMatrix([[1], [0], [1]]), form="upper-triangular"))
    sc = single_input_canonical(s)
    rng = random.Random(3)
    for _ in range(10):
        b0 = F(rng.randint(0, 1000), 1000) + 1
        A0 = Matrix(s.A.evaluate(b0))
        b_0 = s.B.evaluate(b0)
        P0 = Matrix.from_columns([tuple(r[0] for r in b_0), A0 @ [r[0] for r in b_0], A0 @ (A0 @ [r[0] for r in b_0])])
        C0 = Matrix([[c(b0) for c in row] for row in sc.C])
        assert C0 == P0.inverse() @ A0 @ P0
        assert C0 == rcf(A0).C
