"""Bit-exact binary fixed-point numbers and the arithmetic oracles built on them.

Values are stored as a raw two's-complement integer plus a format.  Every
quantum register that holds a real number in the simulators carries such a
raw integer, so classical and simulated-quantum scores agree bit for bit.

Two layers are provided:

* value arithmetic (``fx_add``, ``fx_sub``, ``fx_mul``, ``fx_compare``,
  ``fx_equal``, ``fx_median``) with wrap-around overflow that is flagged on
  the result rather than raised;
* reversible register maps (``o_add``, ``o_sub``, ``o_mul``, ``o_comp``,
  ``o_equal``) acting on raw basis values, plus their inverses, for use as
  basis-state permutations in :mod:`qpwm.sparse`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import FormatMismatchError, PreconditionError, RangeError

MAX_REGISTER_BITS = 64

RealLike = Union[int, float, str, Decimal, Fraction, "FxValue"]


def to_fraction(x: RealLike) -> Fraction:
    """Exact rational value of ``x``.

    Floats are read through their shortest ``repr`` so that ``0.89`` means the
    decimal 89/100, not the nearest binary double.
    """
    if isinstance(x, FxValue):
        return x.to_fraction()
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not real values")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, Decimal):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {type(x).__name__} as a real value")


@dataclass(frozen=True)
class FixedPointFormat:
    """Binary fixed-point format; the sign bit is counted in ``int_bits``."""

    int_bits: int = 16
    frac_bits: int = 32
    signed: bool = True

    def __post_init__(self):
        if self.frac_bits < 1:
            raise PreconditionError("frac_bits must be >= 1")
        if self.int_bits < (1 if self.signed else 0):
            raise PreconditionError("a signed format needs at least one integer bit")
        if self.total_bits > MAX_REGISTER_BITS:
            raise PreconditionError(
                f"{self.total_bits} bits exceed the register width {MAX_REGISTER_BITS}"
            )

    @property
    def total_bits(self) -> int:
        return self.int_bits + self.frac_bits

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def ulp(self) -> Fraction:
        return Fraction(1, self.scale)

    @property
    def min_raw(self) -> int:
        return -(1 << (self.total_bits - 1)) if self.signed else 0

    @property
    def max_raw(self) -> int:
        if self.signed:
            return (1 << (self.total_bits - 1)) - 1
        return (1 << self.total_bits) - 1

    def wrap(self, raw: int) -> tuple[int, bool]:
        """Reduce ``raw`` modulo 2**total_bits into range; report overflow."""
        raw = int(raw)
        if self.min_raw <= raw <= self.max_raw:
            return raw, False
        bits = raw & ((1 << self.total_bits) - 1)
        return self.from_unsigned(bits), True

    def to_unsigned(self, raw: int) -> int:
        """Bit pattern of a raw value as held on a register."""
        return int(raw) & ((1 << self.total_bits) - 1)

    def from_unsigned(self, bits: int) -> int:
        bits = int(bits) & ((1 << self.total_bits) - 1)
        if self.signed and bits >> (self.total_bits - 1):
            return bits - (1 << self.total_bits)
        return bits

    def raw_from_real(self, x: RealLike, rounding: str = "floor") -> int:
        """Raw integer for ``x``; truncation toward -inf unless ``rounding='ceil'``."""
        q = to_fraction(x) * self.scale
        raw = math.floor(q) if rounding == "floor" else math.ceil(q)
        if not self.min_raw <= raw <= self.max_raw:
            raise RangeError(f"{x} is not representable in {self}")
        return raw

    def from_real(self, x: RealLike) -> "FxValue":
        if isinstance(x, FxValue):
            _check_same(x.fmt, self)
            return x
        return FxValue(self.raw_from_real(x), self)

    def from_raw(self, raw: int) -> "FxValue":
        raw, ovf = self.wrap(raw)
        return FxValue(raw, self, ovf)

    def raw_to_fraction(self, raw: int) -> Fraction:
        return Fraction(int(raw), self.scale)

    def raw_to_decimal(self, raw: int) -> str:
        """Exact decimal expansion of a raw value (dyadic rationals terminate)."""
        raw = int(raw)
        sign = "-" if raw < 0 else ""
        q, r = divmod(abs(raw), self.scale)
        if r == 0:
            return f"{sign}{q}"
        digits = str(r * 5**self.frac_bits).rjust(self.frac_bits, "0").rstrip("0")
        return f"{sign}{q}.{digits}"


DEFAULT_FORMAT = FixedPointFormat()


@total_ordering
@dataclass(frozen=True)
class FxValue:
    raw: int
    fmt: FixedPointFormat = DEFAULT_FORMAT
    overflow: bool = field(default=False, compare=False)

    def to_fraction(self) -> Fraction:
        return self.fmt.raw_to_fraction(self.raw)

    def to_decimal(self) -> str:
        return self.fmt.raw_to_decimal(self.raw)

    def __float__(self) -> float:
        return self.raw / self.fmt.scale

    def __lt__(self, other):
        if not isinstance(other, FxValue):
            return NotImplemented
        _check_same(self.fmt, other.fmt)
        return self.raw < other.raw

    def __add__(self, other):
        return fx_add(self, other)

    def __sub__(self, other):
        return fx_sub(self, other)

    def __mul__(self, other):
        return fx_mul(self, other)

    def __repr__(self):
        flag = ", overflow" if self.overflow else ""
        return f"FxValue({self.to_decimal()}{flag})"

    def __str__(self):
        return self.to_decimal()


def fx(x: RealLike, fmt: FixedPointFormat = DEFAULT_FORMAT) -> FxValue:
    """Shorthand constructor: truncate ``x`` into ``fmt``."""
    return fmt.from_real(x)


def _check_same(a: FixedPointFormat, b: FixedPointFormat):
    if a != b:
        raise FormatMismatchError(f"format mismatch: {a} vs {b}")


def fx_add(x: FxValue, y: FxValue) -> FxValue:
    _check_same(x.fmt, y.fmt)
    return x.fmt.from_raw(x.raw + y.raw)


def fx_sub(x: FxValue, y: FxValue) -> FxValue:
    _check_same(x.fmt, y.fmt)
    return x.fmt.from_raw(x.raw - y.raw)


def fx_mul(x: FxValue, y: FxValue) -> FxValue:
    _check_same(x.fmt, y.fmt)
    # floor division keeps truncation toward -inf for negative products
    return x.fmt.from_raw((x.raw * y.raw) >> x.fmt.frac_bits)


def sign_bit(raw: int, fmt: FixedPointFormat) -> int:
    return (fmt.to_unsigned(raw) >> (fmt.total_bits - 1)) & 1


def fx_compare(x: FxValue, y: FxValue) -> int:
    """1 iff x >= y, read off the sign bit of the wrapped difference x - y."""
    d = fx_sub(x, y)
    return 1 - sign_bit(d.raw, d.fmt)


def fx_equal(x: FxValue, y: FxValue) -> int:
    """1 iff the subtraction x - y leaves every bit zero."""
    d = fx_sub(x, y)
    return int(d.fmt.to_unsigned(d.raw) == 0)


def fx_median(values: Sequence[FxValue]) -> FxValue:
    if len(values) % 2 == 0:
        raise PreconditionError(f"median needs an odd number of values, got {len(values)}")
    fmt = values[0].fmt
    for v in values:
        _check_same(fmt, v.fmt)
    return sorted(values, key=lambda v: v.raw)[len(values) // 2]


def equiprob_weights(n: int) -> np.ndarray:
    """Amplitudes of the equiprobable superposition over n basis states."""
    if n < 1:
        raise PreconditionError("equiprobable superposition needs N >= 1")
    return np.full(n, 1.0 / math.sqrt(n))


# Reversible register maps on raw values.  Each returns the new register values
# and has an exact inverse; the comparator and equality maps XOR into a flag bit.

def o_add(x: int, y: int, fmt: FixedPointFormat) -> tuple[int, int]:
    return x, fmt.wrap(y + x)[0]


def o_add_inv(x: int, y: int, fmt: FixedPointFormat) -> tuple[int, int]:
    return x, fmt.wrap(y - x)[0]


def o_sub(x: int, y: int, fmt: FixedPointFormat) -> tuple[int, int]:
    return fmt.wrap(x - y)[0], y


def o_sub_inv(x: int, y: int, fmt: FixedPointFormat) -> tuple[int, int]:
    return fmt.wrap(x + y)[0], y


def o_mul(x: int, y: int, z: int, fmt: FixedPointFormat) -> tuple[int, int, int]:
    """|x>|y>|z> -> |x>|y>|z xor xy>; self-inverse."""
    prod = fmt.wrap((x * y) >> fmt.frac_bits)[0]
    return x, y, fmt.from_unsigned(fmt.to_unsigned(z) ^ fmt.to_unsigned(prod))


def o_comp(x: int, y: int, b: int, fmt: FixedPointFormat) -> tuple[int, int, int]:
    """|x>|y>|b> -> |x>|y>|b xor [x >= y]>; self-inverse."""
    ge = 1 - sign_bit(fmt.wrap(x - y)[0], fmt)
    return x, y, b ^ ge


def o_equal(x: int, y: int, b: int, fmt: FixedPointFormat) -> tuple[int, int, int]:
    """|x>|y>|b> -> |x>|y>|b xor [x != y]>; self-inverse (flag 0 means equal)."""
    ne = int(fmt.to_unsigned(fmt.wrap(x - y)[0]) != 0)
    return x, y, b ^ ne


def xor_raw(a: int, b: int, fmt: FixedPointFormat) -> int:
    """Raw value whose bit pattern is pattern(a) xor pattern(b)."""
    return fmt.from_unsigned(fmt.to_unsigned(a) ^ fmt.to_unsigned(b))


def sum_raw(values: Iterable[int], fmt: FixedPointFormat) -> tuple[int, bool]:
    """Wrapped sum of raw values, accumulated one adder at a time."""
    acc, overflow = 0, False
    for v in values:
        acc, o = fmt.wrap(acc + int(v))
        overflow |= o
    return acc, overflow
