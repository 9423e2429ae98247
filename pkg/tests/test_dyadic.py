from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from takagi.dyadic import (BinaryPoint, DyadicRational, add_offset, first_disagreement,
                           digit_gaps, parse_point)
from takagi.errors import ExhaustedError, InvalidInput, RangeError


def digits(x, n):
    return x.digits(n).tolist()


def test_digit_examples():
    third = parse_point("1/3")
    assert digits(third, 3) == [0, 1, 0]
    assert digits(parse_point("1/2"), 5) == [1, 0, 0, 0, 0]
    assert digits(parse_point("5/8"), 5) == [1, 0, 1, 0, 0]
    assert third.digit(1) == 0 and third.digit(2) == 1


def test_truncate_examples():
    third = parse_point("1/3")
    assert third.truncate(4) == DyadicRational(5, 4)
    assert parse_point("0.7").truncate(0).value == 0
    assert parse_point("5/8").truncate(2).value == Fraction(1, 2)


def test_ones_positions_examples():
    assert parse_point("2/3").ones_positions(4) == [1, 3, 5, 7]
    assert parse_point("1/3").ones_positions(4) == [2, 4, 6, 8]
    assert parse_point("1/2").ones_positions(1) == [1]
    with pytest.raises(ExhaustedError):
        parse_point("1/2").ones_positions(2)


def test_first_disagreement_examples():
    assert first_disagreement(parse_point("0.(01)"), parse_point("0.011(0)")) == 3
    x = parse_point("3/16")  # level 4, X_6 = 0
    assert first_disagreement(x, x.add_offset(Fraction(1, 64))) == 6


def test_add_offset_examples():
    s = add_offset(parse_point("1/3"), Fraction(1, 4))
    assert s.to_fraction() == Fraction(7, 12)
    assert str(s) == "0.1001(01)" or s == parse_point("0.1001(01)")
    x = parse_point("1/3")
    assert add_offset(x, 0) == x
    assert add_offset(parse_point("1/2"), Fraction(-1, 8)).to_fraction() == Fraction(3, 8)
    with pytest.raises(RangeError):
        add_offset(parse_point("3/4"), Fraction(1, 2))


def test_terminating_form_and_all_ones_period():
    with pytest.raises(InvalidInput):
        BinaryPoint([0], [1])
    with pytest.raises(InvalidInput):
        parse_point("0.0(1)")
    assert str(parse_point("1/2")) == "0.1(0)"
    assert parse_point(str(parse_point("5/8"))).to_fraction() == Fraction(5, 8)


def test_parse_syntaxes():
    assert parse_point("0.5").to_fraction() == Fraction(1, 2)
    assert parse_point("3/2^4").to_fraction() == Fraction(3, 16)
    assert parse_point("0.01(01)").to_fraction() == Fraction(1, 3)
    assert parse_point("0b011").to_fraction() == Fraction(3, 8)
    with pytest.raises(InvalidInput):
        parse_point("abc")


def test_truncated_points():
    bits = np.array([1, 0, 1, 1, 0, 1], dtype=np.uint8)
    x = BinaryPoint(bits, truncated=True)
    assert not x.is_dyadic
    assert digits(x, 6) == bits.tolist()
    with pytest.raises(ExhaustedError):
        x.digits(7)
    assert digits(x.reflect(), 6) == (1 - bits).tolist()


fractions_in_unit = st.builds(Fraction, st.integers(1, 4000), st.integers(2, 4000)).filter(
    lambda q: 0 < q < 1)


@given(fractions_in_unit, st.integers(0, 40))
def test_truncation_brackets(q, n):
    x = BinaryPoint.from_fraction(q)
    lo = x.truncate(n).value
    assert lo <= q < lo + Fraction(1, 2 ** n)
    assert (lo == q) == (x.is_dyadic and x.level <= n)


@given(fractions_in_unit, st.integers(1, 6))
def test_ones_positions_agree_with_digits(q, count):
    x = BinaryPoint.from_fraction(q)
    try:
        pos = x.ones_positions(count)
    except ExhaustedError:
        assume(False)
    d = x.digits(pos[-1])
    assert [i + 1 for i in np.flatnonzero(d)] == pos


@given(fractions_in_unit, st.integers(1, 2 ** 20), st.integers(1, 20), st.booleans())
def test_add_offset_exact(q, p, e, neg):
    h = Fraction(p, 2 ** e) * (-1 if neg else 1)
    assume(0 <= q + h < 1)
    y = add_offset(BinaryPoint.from_fraction(q), h)
    assert y.to_fraction() == q + h


@given(fractions_in_unit, st.integers(1, 2 ** 12), st.integers(1, 14))
def test_digit_gap_relations(q, p, e):
    """l(x, x+h) <= m_1(h), and x, x+h share the digits before l."""
    h = Fraction(p, 2 ** e)
    x = BinaryPoint.from_fraction(q)
    assume(not x.is_dyadic and q + h < 1)
    y = x.add_offset(h)
    l = first_disagreement(x, y)
    m1 = BinaryPoint.from_fraction(h).ones_positions(1)[0] if h < 1 else 0
    assert l <= m1
    assert digits(x, l - 1) == digits(y, l - 1)
    # at the first disagreement x has a 0 and x + h a 1
    assert x.digit(l) == 0 and y.digit(l) == 1
    info = digit_gaps(x, y)
    assert info[0] == l


@given(fractions_in_unit)
def test_fraction_roundtrip(q):
    x = BinaryPoint.from_fraction(q)
    assert x.to_fraction() == q
    assert parse_point(str(x)).to_fraction() == q
    assert x.reflect().to_fraction() == 1 - q
