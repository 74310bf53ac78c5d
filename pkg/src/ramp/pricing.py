"""Load-driven spot pricing.

A resource owner configures a price band [min_price, start_price] and an
anticipated number of bidding rounds. Each round the resource concedes a
decrement off the requested price; an idle machine concedes the whole
band over the anticipated rounds, a busy one concedes less (it has no
reason to discount cores it expects to sell anyway). Attractiveness is
the same quantity: how much a resource is currently willing to come down.

Two decrement readings exist (see decrement()); the default scales the
concession by (1 - load). The alternative divides by (1 - load) instead,
which concedes more under load; it is kept behind decrement_mode for
comparison, clamped to the band width and mapping load=1 to the full
band to stay total.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Union

from .money import as_fraction, to_money


@dataclass(frozen=True)
class PricingConfig:
    start_price: Decimal
    min_price: Decimal
    anticipated_rounds: int = 3
    decrement_mode: str = "load-scaled"  # or "literal"

    def __post_init__(self):
        if not self.min_price > 0:
            raise ValueError("min_price must be positive")
        if self.start_price < self.min_price:
            raise ValueError("start_price must be >= min_price")
        if self.anticipated_rounds < 1:
            raise ValueError("anticipated_rounds must be >= 1")
        if self.decrement_mode not in ("load-scaled", "literal"):
            raise ValueError(f"unknown decrement_mode {self.decrement_mode!r}")


@dataclass(frozen=True)
class LoadSnapshot:
    fraction_allocated: float

    def __post_init__(self):
        if not 0.0 <= self.fraction_allocated <= 1.0:
            raise ValueError("fraction_allocated must be in [0, 1]")


@dataclass(frozen=True)
class Bid:
    price: Decimal


@dataclass(frozen=True)
class BestOffer:
    """Non-binding floor-price proposal for a request priced below the band."""

    price: Decimal


@dataclass(frozen=True)
class Decline:
    reason: str = ""


OfferDecision = Union[Bid, BestOffer, Decline]


def _decrement_exact(config: PricingConfig, load: LoadSnapshot) -> Fraction:
    band = as_fraction(config.start_price) - as_fraction(config.min_price)
    l = Fraction(load.fraction_allocated).limit_denominator(10**12)
    s = config.anticipated_rounds
    if config.decrement_mode == "load-scaled":
        return band * (1 - l) / s
    # literal reading: concede more under load; undefined at l=1, so clamp
    # to the full band there and never concede beyond the band anywhere.
    if l == 1:
        return band
    dec = band / (s * (1 - l))
    return min(dec, band)


def decrement(config: PricingConfig, load: LoadSnapshot) -> Decimal:
    """Per-round price concession, rounded to money at this boundary."""
    return to_money(_decrement_exact(config, load))


def attractiveness(config: PricingConfig, load: LoadSnapshot) -> Decimal:
    """How far the resource is willing to drop right now; equals decrement."""
    return decrement(config, load)


def make_offer(config: PricingConfig, load: LoadSnapshot,
               requested_price: Decimal) -> OfferDecision:
    """Price a conforming request.

    At or above the floor: bid the requested price less the decrement,
    clamped to the floor. Below the floor: a non-binding best offer at
    the floor itself. While the decrement is positive the concession is
    at least one cent, so repeated rounds always walk a finite band down
    to the floor; a saturated machine (decrement zero) concedes nothing.
    """
    if requested_price <= 0:
        raise ValueError("requested_price must be positive")
    requested = as_fraction(requested_price)
    mp = as_fraction(config.min_price)
    mp_money = to_money(config.min_price)
    if requested < mp:
        return BestOffer(price=mp_money)
    requested_money = to_money(requested_price)
    dec = _decrement_exact(config, load)
    if dec == 0:
        return Bid(price=max(mp_money, requested_money))
    price = to_money(max(mp, requested - dec))
    if price == requested_money:
        price = max(mp_money, requested_money - Decimal("0.01"))
    return Bid(price=price)
