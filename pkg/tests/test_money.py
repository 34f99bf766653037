from decimal import Decimal
from fractions import Fraction

from hypothesis import given, strategies as st

from agentecon.money import floor_cents, fmt, round_cents, scale, split_even, to_cents, to_units


def test_round_half_even():
    assert round_cents(Decimal("0.5")) == 0
    assert round_cents(Decimal("1.5")) == 2
    assert round_cents(Decimal("2.5")) == 2
    assert round_cents(-2.5) == -2


def test_float_literals_are_exact():
    # shortest-repr conversion keeps decimal literals exact
    assert to_cents(0.1) == 10
    assert to_cents(52.5) == 5250
    assert to_cents(Fraction(1, 3)) == 33


def test_floor_and_fmt():
    assert floor_cents(9.99) == 9
    assert floor_cents(-0.01) == -1
    assert fmt(12345) == "123.45"
    assert fmt(-5) == "-0.05"
    assert to_units(250) == 2.5


def test_scale_and_split():
    assert scale(1000, 0.333) == 333
    assert split_even(100000, 3) == (33333, 1)
    assert split_even(10, 0) == (0, 10)


@given(st.integers(-10**12, 10**12), st.integers(1, 1000))
def test_split_even_reassembles(total, n):
    each, rest = split_even(total, n)
    assert each * n + rest == total


@given(st.lists(st.integers(0, 10**9), max_size=30), st.randoms())
def test_integer_sums_are_order_free(amounts, rnd):
    shuffled = list(amounts)
    rnd.shuffle(shuffled)
    assert sum(shuffled) == sum(amounts)
