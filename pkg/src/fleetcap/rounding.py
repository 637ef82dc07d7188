from __future__ import annotations

import enum
from decimal import ROUND_HALF_UP, Decimal


class RoundingMode(str, enum.Enum):
    """``paper`` reproduces printed tables digit for digit; ``exact`` keeps full precision."""

    PAPER = "paper"
    EXACT = "exact"


def as_mode(mode: RoundingMode | str) -> RoundingMode:
    return mode if isinstance(mode, RoundingMode) else RoundingMode(mode)


def round_half_up(value: float, ndigits: int) -> float:
    # repr() gives the shortest string that round-trips, so 2.675 stays 2.675
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def round_sig(value: float, digits: int) -> float:
    if value == 0:
        return 0.0
    exponent = Decimal(repr(value)).adjusted()
    return round_half_up(value, digits - 1 - exponent)
