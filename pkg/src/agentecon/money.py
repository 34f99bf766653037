"""Integer-cent money helpers.

All balances and flows are ``int`` cents. Real-valued amounts only appear
transiently (a rate times a balance, a price times a quantity) and are
rounded half-to-even back to cents at the point of computation.
"""
from __future__ import annotations

from decimal import ROUND_FLOOR, ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Union

Money = int
Real = Union[int, float, Decimal, Fraction]

CENTS_PER_UNIT = 100


def _dec(value: Real) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, Fraction):
        return Decimal(value.numerator) / Decimal(value.denominator)
    if isinstance(value, float):
        # repr gives the shortest round-tripping literal, so 0.1 stays 0.1
        return Decimal(repr(float(value)))
    return Decimal(value)


def round_cents(value: Real) -> Money:
    """Round a real number of cents to an integer, half-to-even."""
    return int(_dec(value).quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def floor_cents(value: Real) -> Money:
    return int(_dec(value).quantize(Decimal(1), rounding=ROUND_FLOOR))


def to_cents(amount: Real) -> Money:
    """Currency units (e.g. ``52.5``) to cents."""
    return round_cents(_dec(amount) * CENTS_PER_UNIT)


def to_units(cents: Money) -> float:
    return cents / CENTS_PER_UNIT


def fmt(cents: Money) -> str:
    sign = "-" if cents < 0 else ""
    whole, frac = divmod(abs(cents), CENTS_PER_UNIT)
    return f"{sign}{whole}.{frac:02d}"


def scale(cents: Money, factor: Real) -> Money:
    """``cents * factor`` rounded half-to-even."""
    return round_cents(_dec(cents) * _dec(factor))


def split_even(total: Money, n: int) -> tuple[Money, Money]:
    """Split ``total`` into ``n`` equal cent amounts; returns (each, remainder)."""
    if n <= 0:
        return 0, total
    each = total // n
    return each, total - each * n
