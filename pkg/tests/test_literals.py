import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from btj.literals import LiteralError, format_element, format_matrix, format_short, parse_element, parse_matrix
from btj.localfield import Exact, FieldDesc, LFElement
from btj.sl2core import DeterminantError

Q5 = FieldDesc.parse("padic:5")
Q7 = FieldDesc.parse("padic:7")
L5 = FieldDesc.parse("laurent:5")


def test_rational_form():
    x = parse_element("49/3", Q7)
    assert x.valuation() == Exact(2) and x.agrees(Q7.element(49, 3))


def test_uniformiser_and_powers():
    assert parse_element("p^-2", Q5).valuation() == Exact(-2)
    assert parse_element("t^3 + 2*t^5", L5).digits[:3] == (1, 0, 2)
    assert parse_element("p^n", Q5, n=4).valuation() == Exact(4)


def test_sqrt_literal():
    r = parse_element("sqrt(-3)", Q7)
    assert (r * r).agrees(Q7.element(-3))


def test_expansion_form():
    x = parse_element("p^-1 * (1 + 2*p) + O(p^3)", Q5)
    assert x.val == -1 and x.prec == 4 and x.digits == (1, 2, 0, 0)
    z = parse_element("O(p^7)", Q5)
    assert z.is_zero_like and z.val == 7


def test_laurent_division():
    x = parse_element("1/(1+t^2)", L5)
    assert (x * parse_element("1+t^2", L5)).agrees(L5.one())


@pytest.mark.parametrize(
    "text,pos",
    [("1 +", None), ("q", 0), ("sqrt(2)", 0), ("1/0", 0), ("2 * O(p)", 0), ("n", 0), ("p^(1/2)", 0), ("1.5", 0)],
)
def test_errors_name_the_literal(text, pos):
    with pytest.raises(LiteralError) as exc:
        parse_element(text, Q5)
    assert text in str(exc.value)
    if pos is not None:
        assert exc.value.position is not None


def test_error_position_after_caret_rewrite():
    with pytest.raises(LiteralError) as exc:
        parse_element("p^2 + q", Q5)
    assert exc.value.position == 6


def test_matrix_literal_and_determinant_check():
    m = parse_matrix('[["p","0"],["1","1/p"]]', Q5)
    assert m.trace().valuation() == Exact(-1)
    with pytest.raises(DeterminantError):
        parse_matrix('[["1","1"],["0","2"]]', Q5)
    with pytest.raises(LiteralError):
        parse_matrix('[["1","1"]]', Q5)
    with pytest.raises(LiteralError):
        parse_matrix("[[1,", Q5)


def test_format_short():
    assert format_short(Q5.element(-1), 3) == "4 + 4*p + 4*p^2 + ..."
    assert format_short(Q5.zero()) == "O(p^64)"


def test_matrix_round_trip():
    m = parse_matrix('[["2","-sqrt(-3)"],["sqrt(-3)","2"]]', Q7)
    again = parse_matrix(json.dumps(format_matrix(m)), Q7)
    assert [x == y for x, y in zip(m.entries(), again.entries())] == [True] * 4


@st.composite
def elements(draw):
    f = draw(st.sampled_from([Q5, Q7, L5, FieldDesc.parse("padic:2")]))
    prec = draw(st.integers(1, 20))
    digits = [draw(st.integers(1, f.p - 1))] + draw(st.lists(st.integers(0, f.p - 1), min_size=prec - 1, max_size=prec - 1))
    return LFElement.from_digits(f, draw(st.integers(-8, 8)), digits)


@settings(max_examples=300, deadline=None)
@given(elements())
def test_expansion_round_trip(x):
    y = parse_element(format_element(x), x.field)
    assert y == x


@settings(max_examples=100, deadline=None)
@given(st.fractions(max_denominator=10**4).filter(lambda q: q != 0))
def test_rational_literals(q):
    q = Fraction(q)
    x = parse_element(f"{q.numerator}/{q.denominator}", Q7)
    assert x.agrees(Q7.element(q))
