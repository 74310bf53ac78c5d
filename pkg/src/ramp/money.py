"""Money handling.

Prices and balances are exact: Fraction or Decimal internally, rounded
half-up to two decimal places wherever a value crosses an API or wire
boundary. Wire form is always a string like "68.00".
"""

from __future__ import annotations

from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction
from typing import Union

Numeric = Union[int, str, Decimal, Fraction]

_CENT = Decimal("0.01")


def to_money(value: Numeric) -> Decimal:
    """Round a numeric value half-up to two decimal places."""
    if isinstance(value, Fraction):
        value = Decimal(value.numerator) / Decimal(value.denominator)
    elif not isinstance(value, Decimal):
        value = Decimal(str(value))
    return value.quantize(_CENT, rounding=ROUND_HALF_UP)


def money_str(value: Numeric) -> str:
    """Wire/file form of a money value: two decimals, no exponent."""
    return f"{to_money(value):.2f}"


def parse_money(text: str) -> Decimal:
    """Parse a money string; raises ValueError on junk."""
    try:
        d = Decimal(text)
    except Exception as exc:
        raise ValueError(f"bad money value: {text!r}") from exc
    if not d.is_finite():
        raise ValueError(f"bad money value: {text!r}")
    return to_money(d)


def as_fraction(value: Numeric) -> Fraction:
    """Exact rational view of a price for internal arithmetic."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Decimal):
        return Fraction(value)
    return Fraction(Decimal(str(value)))
