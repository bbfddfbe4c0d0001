"""Exact dyadic rationals k / 2**level on the unit interval.

Every bin edge, threshold and message prefix in the codec is a dyadic
point.  Resolutions grow linearly with session length, far past what a
float mantissa can hold, so positions are kept as arbitrary-precision
integer numerators and compared exactly.
"""

from __future__ import annotations

from fractions import Fraction
from functools import total_ordering


@total_ordering
class DyadicPoint:
    """A point ``numerator / 2**level`` with ``0 <= value <= 1``.

    Instances are immutable and stored in reduced form (odd numerator,
    except for the exact endpoints 0 and 1).  Comparison and equality
    cross-normalize to a common level; no floating point is involved.
    """

    __slots__ = ("numerator", "level")

    def __init__(self, numerator: int, level: int):
        if level < 0:
            raise ValueError(f"level must be nonnegative, got {level}")
        if not 0 <= numerator <= (1 << level):
            raise ValueError(
                f"numerator {numerator} out of range for level {level}"
            )
        while level > 0 and numerator % 2 == 0:
            numerator //= 2
            level -= 1
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "level", level)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicPoint is immutable")

    @classmethod
    def zero(cls) -> "DyadicPoint":
        return cls(0, 0)

    @classmethod
    def one(cls) -> "DyadicPoint":
        return cls(1, 0)

    def scaled(self, level: int) -> int:
        """Exact integer position in units of ``2**-level``.

        Raises ValueError if this point is finer than the requested level.
        """
        if level < self.level:
            raise ValueError(
                f"point at level {self.level} cannot be scaled to coarser level {level}"
            )
        return self.numerator << (level - self.level)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.level)

    def __float__(self) -> float:
        # int/int true division is correctly rounded at any magnitude
        return self.numerator / (1 << self.level)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicPoint):
            return NotImplemented
        return self.numerator == other.numerator and self.level == other.level

    def __lt__(self, other) -> bool:
        if not isinstance(other, DyadicPoint):
            return NotImplemented
        common = max(self.level, other.level)
        return (self.numerator << (common - self.level)) < (
            other.numerator << (common - other.level)
        )

    def __hash__(self):
        return hash((self.numerator, self.level))

    def __repr__(self):
        return f"DyadicPoint({self.numerator}, {self.level})"

    def __str__(self):
        return f"{self.numerator}/2^{self.level}"
