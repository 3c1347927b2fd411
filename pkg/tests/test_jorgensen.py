import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from btj.bttree import End, Vertex, fixed_ends
from btj.jorgensen import (
    CERTIFICATE,
    FIXED_END,
    HOLDS,
    Certified,
    Inconclusive,
    common_fixed_vertex,
    elementary_evidence,
    equality_case_check,
    jorgensen_lhs,
    jorgensen_test,
    nonelementary_certificate,
    search_equality_case,
    sharp_test,
    split_roots_of_unity,
)
from btj.literals import parse_matrix
from btj.localfield import AtLeast, Exact, FieldDesc
from btj.sl2core import Mat2, classify, commutator, finite_order, mat_inv, mat_mul
from oracles import frac_matrix, mcommutator, mtrace, vp

Q5, Q7 = FieldDesc.parse("padic:5"), FieldDesc.parse("padic:7")


def M(rows, field=Q5, n=None):
    return parse_matrix([[str(x) for x in r] for r in rows], field, n=n)


def A_n(n, f=Q5):
    return M([[1, "p^n"], [0, 1]], f, n=n)


def B_(f=Q5):
    return M([["p", 0], [1, "1/p"]], f)


def C_(f=Q5):
    return M([["p", 0], [0, "1/p"]], f)


S_ROWS = [[0, -1], [1, 0]]


def sharp_pair(f=Q5):
    return M(S_ROWS, f), M([[0, "-1/p"], ["p", 1]], f)


def test_lhs_for_unipotent_and_lower_triangular():
    for n in (1, 2, 3):
        v1, v2, vmin = jorgensen_lhs(A_n(n), B_())
        assert isinstance(v1, AtLeast) and v2 == Exact(2 * n) and vmin == Exact(2 * n)


def test_commutator_trace_matches_exact_expansion():
    # tr[A_n, B] = 2 + p^(2n)
    p = 5
    for n in (1, 2, 3):
        X = frac_matrix([[1, p**n], [0, 1]])
        Y = frac_matrix([[p, 0], [1, "1/5"]])
        assert mtrace(mcommutator(X, Y)) - 2 == p ** (2 * n)


def test_lhs_for_sharp_pair():
    v1, v2, vmin = jorgensen_lhs(*sharp_pair())
    assert v1 == Exact(0) and v2 == Exact(-2) and vmin == Exact(-2)
    X, Y = frac_matrix(S_ROWS), frac_matrix([[0, "-1/5"], [5, 1]])
    assert vp(mtrace(mcommutator(X, Y)) - 2, 5) == -2


@pytest.mark.parametrize("f", [Q5, Q7])
def test_certificate_for_unipotent_and_lower_triangular(f):
    for n in range(1, 4):
        rep = jorgensen_test(A_n(n, f), B_(f))
        assert rep.verdict == CERTIFICATE and rep.common_end_status == "none"
        assert rep.tr_comm_minus_2 == Exact(2 * n)


def test_fixed_end_detected_for_triangular_pair():
    rep = jorgensen_test(A_n(1), C_())
    assert rep.verdict == FIXED_END and rep.common_end.is_infinity


def test_inequality_holds_for_sharp_pair():
    rep = jorgensen_test(*sharp_pair())
    assert rep.verdict == HOLDS and rep.m_k == 0


def test_commuting_pair_fixes_no_common_end():
    A = M([[0, -1], [1, 0]], Q7)
    B = M([[2, "-sqrt(-3)"], ["sqrt(-3)", 2]], Q7)
    rep = jorgensen_test(A, B)
    assert rep.common_end is None
    assert isinstance(rep.tr_comm_minus_2, AtLeast)
    # v(tr^2 A - 4) = v(-4) = 0 already meets the bound
    assert rep.minimum == Exact(0) and rep.verdict == HOLDS


def test_identity_pair_fixes_every_end():
    rep = jorgensen_test(Mat2.identity(Q5), Mat2.identity(Q5))
    assert rep.verdict == FIXED_END


def test_report_json_has_verdict():
    js = jorgensen_test(A_n(1), B_()).to_json()
    assert js["verdict"] == CERTIFICATE and js["lhs"]["tr_comm_minus_2"] == {"exact": 2}


def test_sharp_strict():
    rep = sharp_test(*sharp_pair())
    assert rep.sharp == "strict" and rep.minimum == Exact(-2)


def test_sharp_on_laurent_needs_assumption():
    L5 = FieldDesc.parse("laurent:5")
    A, B = M(S_ROWS, L5), M([[0, "-1/t"], ["t", 1]], L5)
    assert sharp_test(A, B).sharp == "not-applicable"
    rep = sharp_test(A, B, assume_no_order_p=True)
    assert rep.sharp == "strict" and any("assumed" in c for c in rep.caveats)


def test_sharp_not_applicable_when_bound_exceeded():
    assert sharp_test(A_n(1), B_()).sharp == "not-applicable"


def test_equality_case_search():
    t0 = time.perf_counter()
    pair = search_equality_case(Q5, 3)
    assert time.perf_counter() - t0 < 10
    assert pair is not None
    A, B = pair
    assert jorgensen_lhs(A, B)[2] == Exact(0)
    assert equality_case_check(A, B).status == "verified"
    assert sharp_test(A, B).sharp == "equality"
    assert finite_order(A).n >= 3


def test_equality_search_with_empty_grid():
    assert search_equality_case(Q5, 0) is None


def test_split_roots_of_unity_are_roots():
    for order, zeta in split_roots_of_unity(Q7):
        D = Mat2(zeta, Q7.zero(), Q7.zero(), 1 / zeta, check=False)
        assert finite_order(D).n in (order, 2 * order, order // 2)


def test_equality_check_refutations():
    assert equality_case_check(-Mat2.identity(Q5), B_()).status == "refuted"
    assert equality_case_check(C_(), B_()).status == "refuted"
    assert equality_case_check(M(S_ROWS), M(S_ROWS)).status == "refuted"
    S = M(S_ROWS)
    # S fixes the base vertex only; C translates the base by 2
    assert equality_case_check(S, C_()).status == "refuted"


def test_certificates_found():
    S, T = M([[0, -1], [1, 0]]), M([[0, -1], [1, 1]])
    # integral generators fix the base vertex: no hyperbolic words at all
    assert isinstance(nonelementary_certificate([S, T], 3), Inconclusive)
    cert = nonelementary_certificate(list(sharp_pair()), 3)
    assert isinstance(cert, Certified)
    cert = nonelementary_certificate([A_n(1), B_()], 4, ["A", "B"])
    assert isinstance(cert, Certified)
    ends = cert.ends
    assert all(a.distinct_exactly(b) for i, a in enumerate(ends) for b in ends[i + 1 :])


def test_certificate_inconclusive_for_elementary_groups():
    assert isinstance(nonelementary_certificate([A_n(1), C_()], 3), Inconclusive)
    assert isinstance(nonelementary_certificate([C_()], 4), Inconclusive)
    assert isinstance(nonelementary_certificate([], 4), Inconclusive)


def test_elementary_evidence():
    ev = elementary_evidence(A_n(1), C_())
    assert ev.elementary_detected and ev.common_end.is_infinity
    L3 = FieldDesc.parse("laurent:3")
    X, Y = M([[1, 1], [0, 1]], L3), M([[1, "t"], [0, 1]], L3)
    v, _ = common_fixed_vertex(X, Y, Vertex.base(L3), 4)
    assert v == Vertex.base(L3)
    ev = elementary_evidence(*sharp_pair(), radius=3)
    assert ev.common_end is None and ev.stabilized_pair is None


def test_commuting_pair_evidence():
    A = M([[0, -1], [1, 0]], Q7)
    B = M([[2, "-sqrt(-3)"], ["sqrt(-3)", 2]], Q7)
    ev = elementary_evidence(A, B, radius=3)
    assert ev.common_end is None and ev.stabilized_pair is None
    # both matrices are integral, so the base vertex is fixed by the pair
    assert ev.common_vertex == Vertex.base(Q7)


# --- properties ----------------------------------------------------------------------


@st.composite
def sl2_pairs(draw, field=Q5):
    def one():
        X = Mat2.identity(field)
        for _ in range(draw(st.integers(1, 4))):
            kind = draw(st.sampled_from("ULD"))
            x = field.element(draw(st.integers(-9, 9))) * field.uniformizer_power(draw(st.integers(-1, 2)))
            o, z = field.one(), field.zero()
            if kind == "U":
                E = Mat2(o, x, z, o, check=False)
            elif kind == "L":
                E = Mat2(o, z, x, o, check=False)
            else:
                k = draw(st.integers(-1, 1))
                E = Mat2(field.uniformizer_power(k), z, z, field.uniformizer_power(-k), check=False)
            X = mat_mul(X, E)
        return X

    return one(), one(), one()


@settings(max_examples=80, deadline=None)
@given(sl2_pairs())
def test_lhs_is_invariant_under_sign_and_conjugation(triple):
    A, B, N = triple
    base = jorgensen_lhs(A, B)
    assert jorgensen_lhs(-A, B) == base
    assert jorgensen_lhs(A, -B) == base
    conj = lambda X: mat_mul(mat_mul(N, X), mat_inv(N))  # noqa: E731
    got = jorgensen_lhs(conj(A), conj(B))
    for x, y in zip(got, base):
        if isinstance(x, Exact) and isinstance(y, Exact):
            assert x == y


@settings(max_examples=60, deadline=None)
@given(sl2_pairs())
def test_hyperbolic_generator_forces_strict_inequality(triple):
    A, B, _ = triple
    c = classify(A)
    if not c.hyperbolic:
        return
    rep = sharp_test(A, B)
    assert rep.minimum.n < 0 and rep.sharp == "strict" and rep.verdict == HOLDS


def _short_word_near_identity(A, B, max_len=8, depth=3):
    """A nontrivial freely reduced word of length <= max_len with w - I divisible by p^depth."""
    letters = [A, mat_inv(A), B, mat_inv(B)]
    inverse = {0: 1, 1: 0, 2: 3, 3: 2}
    frontier = [((), Mat2.identity(A.field))]
    for _ in range(max_len):
        nxt = []
        for word, W in frontier:
            for i, g in enumerate(letters):
                if word and inverse[word[-1]] == i:
                    continue
                X = mat_mul(W, g)
                D = [X.a - 1, X.b, X.c, X.d - 1]
                if all(e.is_zero_like or e.val >= depth for e in D) and not all(e.is_zero_like for e in D):
                    return word + (i,)
                nxt.append((word + (i,), X))
        frontier = nxt
        if len(frontier) > 4000:
            frontier = frontier[:4000]
    return None


def test_certificates_are_sound_on_random_pairs():
    """Every certified pair must exhibit a short word close to the identity."""
    rng = random.Random(2024)
    f = FieldDesc.parse("padic:5", 48)
    unexplained = []
    certified = 0
    for trial in range(200):
        def rand():
            X = Mat2.identity(f)
            for _ in range(3):
                x = f.element(rng.randint(1, 4)) * f.uniformizer_power(rng.randint(1, 3))
                o, z = f.one(), f.zero()
                E = Mat2(o, x, z, o, check=False) if rng.random() < 0.5 else Mat2(o, z, x, o, check=False)
                X = mat_mul(X, E)
            return X

        A, B = rand(), rand()
        rep = jorgensen_test(A, B)
        if rep.verdict != CERTIFICATE:
            continue
        certified += 1
        # a certificate claims min > M_K: [A,B] itself is already a short word near I
        C = commutator(A, B)
        D = [C.a - 1, C.b, C.c, C.d - 1]
        near = all(e.is_zero_like or e.val >= 1 for e in D)
        if not near and _short_word_near_identity(A, B, depth=3) is None:
            unexplained.append(trial)
    assert certified >= 50
    assert not unexplained


def test_certificate_requires_distinct_fixed_ends():
    # both fix infinity: never certified, whatever the valuations
    for n in (1, 2, 3):
        D = M([["1+p^n", 1], [0, "1/(1+p^n)"]], n=n)
        assert jorgensen_test(A_n(n), D).verdict != CERTIFICATE
    ends = fixed_ends(B_()).ends
    assert not any(e.agrees(End.infinity()) for e in ends)
