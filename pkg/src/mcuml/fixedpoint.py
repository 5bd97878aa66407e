"""Q-format fixed-point arithmetic with saturation and event counters.

A Qn.m value stores round(x * 2^m) in a signed two's-complement word of
n + m bits (n includes the sign bit).  Every operation rounds
half-away-from-zero, saturates instead of wrapping, and reports what
happened through an explicit FxpContext so a whole evaluation run can be
audited for overflow and underflow afterwards.

The integer algorithms here are the reference semantics for emitted C++:
each raw_* function is mirrored token for token by the generated runtime,
so host emulation and on-device behavior agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivisionByZero, FormatMismatch, NegativeInput

_VALID_TOTALS = (8, 16, 32)


@dataclass(frozen=True)
class QFormat:
    """Signed fixed-point layout: int_bits (sign included) + frac_bits."""

    int_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.int_bits < 1 or self.frac_bits < 0:
            raise ValueError(f"invalid Q format Q{self.int_bits}.{self.frac_bits}")
        if self.total_bits not in _VALID_TOTALS:
            raise ValueError(
                f"Q{self.int_bits}.{self.frac_bits}: total width {self.total_bits} "
                f"not one of {_VALID_TOTALS}"
            )

    @property
    def total_bits(self) -> int:
        return self.int_bits + self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def min_value(self) -> float:
        return self.raw_min * self.resolution

    @property
    def max_value(self) -> float:
        return self.raw_max * self.resolution

    @property
    def name(self) -> str:
        return f"Q{self.int_bits}.{self.frac_bits}"

    @classmethod
    def parse(cls, text: str) -> "QFormat":
        """Parse 'N.M' or 'QN.M' into a QFormat."""
        t = text.strip().lstrip("qQ")
        parts = t.split(".")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ValueError(f"cannot parse Q format from {text!r}, expected 'N.M'")
        return cls(int(parts[0]), int(parts[1]))


Q22_10 = QFormat(22, 10)  # default 32-bit format
Q12_4 = QFormat(12, 4)  # default 16-bit format


@dataclass
class OpCounters:
    op_count: int = 0
    overflow_count: int = 0
    underflow_count: int = 0

    def snapshot(self) -> "OpCounters":
        return OpCounters(self.op_count, self.overflow_count, self.underflow_count)


class FxpContext:
    """Per-evaluation container for OpCounters; create one per prediction run."""

    __slots__ = ("counters",)

    def __init__(self):
        self.counters = OpCounters()


@dataclass(frozen=True)
class FixedValue:
    raw: int
    fmt: QFormat

    @property
    def value(self) -> float:
        return self.raw * self.fmt.resolution


def _same_fmt(a: FixedValue, b: FixedValue) -> QFormat:
    if a.fmt != b.fmt:
        raise FormatMismatch(f"mixed formats {a.fmt.name} and {b.fmt.name}")
    return a.fmt


# ---------------------------------------------------------------------------
# raw integer kernels (counters explicit, used directly by inference loops)

def _sat(r: int, fmt: QFormat, c: OpCounters) -> int:
    if r > fmt.raw_max:
        c.overflow_count += 1
        return fmt.raw_max
    if r < fmt.raw_min:
        c.overflow_count += 1
        return fmt.raw_min
    return r


def _round_shift(p: int, sh: int) -> int:
    # round-half-away-from-zero of p / 2^sh
    if sh <= 0:
        return p << -sh
    half = 1 << (sh - 1)
    if p >= 0:
        return (p + half) >> sh
    return -((-p + half) >> sh)


def raw_to_fixed(x: float, fmt: QFormat, c: OpCounters) -> int:
    """Convert a real to raw; rounds half-away, then saturates. One op."""
    c.op_count += 1
    t = x * float(1 << fmt.frac_bits)  # exact: power-of-two scale
    if math.isnan(t):
        raise ValueError("cannot convert NaN to fixed point")
    # guard the conversion itself; anything this large saturates regardless
    if t > 9.2e18:
        c.overflow_count += 1
        return fmt.raw_max
    if t < -9.2e18:
        c.overflow_count += 1
        return fmt.raw_min
    if t >= 0:
        r = math.floor(t + 0.5)
    else:
        r = -math.floor(-t + 0.5)
    out = _sat(r, fmt, c)
    if out == 0 and x != 0.0:
        c.underflow_count += 1
    return out


def raw_add(a: int, b: int, fmt: QFormat, c: OpCounters) -> int:
    c.op_count += 1
    return _sat(a + b, fmt, c)  # exact sum: addition never rounds


def raw_sub(a: int, b: int, fmt: QFormat, c: OpCounters) -> int:
    c.op_count += 1
    return _sat(a - b, fmt, c)


def raw_neg(a: int, fmt: QFormat, c: OpCounters) -> int:
    c.op_count += 1
    return _sat(-a, fmt, c)


def raw_abs(a: int, fmt: QFormat, c: OpCounters) -> int:
    c.op_count += 1
    return _sat(-a, fmt, c) if a < 0 else a


def raw_mul(a: int, b: int, fmt: QFormat, c: OpCounters) -> int:
    c.op_count += 1
    p = a * b
    out = _sat(_round_shift(p, fmt.frac_bits), fmt, c)
    if out == 0 and p != 0:
        c.underflow_count += 1
    return out


def raw_div(a: int, b: int, fmt: QFormat, c: OpCounters) -> int:
    c.op_count += 1
    if b == 0:
        raise DivisionByZero(f"division by raw zero in {fmt.name}")
    num = a << fmt.frac_bits
    an = -num if num < 0 else num
    ab = -b if b < 0 else b
    q = (an + (ab >> 1)) // ab
    if (a < 0) != (b < 0):
        q = -q
    out = _sat(q, fmt, c)
    if out == 0 and a != 0:
        c.underflow_count += 1
    return out


# exp internals: e^x = 2^k * e^r at internal precision F, degree-5 Taylor.
# These constants are public so codegen can embed the identical algorithm.
EXP_F = 30
EXP_LN2 = 744261118  # round(ln2 * 2^30)
# Taylor 1/j! at F bits, rounded half-up: 1, 1, 1/2, 1/6, 1/24, 1/120
EXP_COEFFS = tuple((2 * (1 << EXP_F) + f) // (2 * f) for f in (1, 1, 2, 6, 24, 120))


def _exp_mulf(a: int, b: int) -> int:
    p = a * b
    if p >= 0:
        return (p + (1 << (EXP_F - 1))) >> EXP_F
    return -((-p + (1 << (EXP_F - 1))) >> EXP_F)


def raw_exp(x: int, fmt: QFormat, c: OpCounters) -> int:
    """e^x with |err| <= max(2 resolution steps, 1e-3 * e^x) off saturation."""
    c.op_count += 1
    m = fmt.frac_bits
    d = EXP_F - m
    if d >= 0:
        big = x << d
    else:  # m = 31 only: drop one bit, rounded
        big = _round_shift(x, m - EXP_F)
    two_l = 2 * EXP_LN2
    if big >= 0:
        k = (2 * big + EXP_LN2) // two_l
    else:
        k = -((-2 * big + EXP_LN2) // two_l)
    r = big - k * EXP_LN2
    p = EXP_COEFFS[5]
    p = EXP_COEFFS[4] + _exp_mulf(r, p)
    p = EXP_COEFFS[3] + _exp_mulf(r, p)
    p = EXP_COEFFS[2] + _exp_mulf(r, p)
    p = EXP_COEFFS[1] + _exp_mulf(r, p)
    p = EXP_COEFFS[0] + _exp_mulf(r, p)
    s = EXP_F - m - k
    if s >= EXP_F + 2:
        c.underflow_count += 1
        return 0
    if s <= EXP_F - fmt.total_bits:
        c.overflow_count += 1
        return fmt.raw_max
    out = _sat(_round_shift(p, s), fmt, c)
    if out == 0:
        c.underflow_count += 1
    return out


def raw_sqrt(x: int, fmt: QFormat, c: OpCounters) -> int:
    """Nearest square root: isqrt of (x << m), +1 when the remainder passes S."""
    c.op_count += 1
    if x < 0:
        raise NegativeInput(f"sqrt of negative raw {x} in {fmt.name}")
    n = x << fmt.frac_bits
    s = math.isqrt(n)
    if n - s * s > s:
        s += 1
    return _sat(s, fmt, c)


def raw_pow_int(a: int, k: int, fmt: QFormat, c: OpCounters) -> int:
    """a^k by binary exponentiation; k squarings stop at the last set bit."""
    if k < 0:
        raise ValueError("pow_int exponent must be non-negative")
    one = quantize_param(1.0, fmt)
    r = one
    b = a
    e = k
    while True:
        if e & 1:
            r = raw_mul(r, b, fmt, c)
        e >>= 1
        if not e:
            return r
        b = raw_mul(b, b, fmt, c)


def quantize_param(x: float, fmt: QFormat) -> int:
    """Model-constant conversion: float32-narrow, round half-away, saturate.

    Unlike raw_to_fixed this is uncounted; parameters are compile-time
    constants and the returned raw is exactly what codegen emits.
    """
    xf = float(np.float32(x))
    t = xf * float(1 << fmt.frac_bits)
    if math.isnan(t):
        raise ValueError("cannot quantize NaN parameter")
    if t > 9.2e18:
        return fmt.raw_max
    if t < -9.2e18:
        return fmt.raw_min
    if t >= 0:
        r = math.floor(t + 0.5)
    else:
        r = -math.floor(-t + 0.5)
    return min(max(r, fmt.raw_min), fmt.raw_max)


# ---------------------------------------------------------------------------
# FixedValue wrappers

def to_fixed(x: float, fmt: QFormat, ctx: FxpContext) -> FixedValue:
    return FixedValue(raw_to_fixed(x, fmt, ctx.counters), fmt)


def from_fixed(v: FixedValue) -> float:
    return v.raw * v.fmt.resolution


def fxp_add(a: FixedValue, b: FixedValue, ctx: FxpContext) -> FixedValue:
    fmt = _same_fmt(a, b)
    return FixedValue(raw_add(a.raw, b.raw, fmt, ctx.counters), fmt)


def fxp_sub(a: FixedValue, b: FixedValue, ctx: FxpContext) -> FixedValue:
    fmt = _same_fmt(a, b)
    return FixedValue(raw_sub(a.raw, b.raw, fmt, ctx.counters), fmt)


def fxp_neg(a: FixedValue, ctx: FxpContext) -> FixedValue:
    return FixedValue(raw_neg(a.raw, a.fmt, ctx.counters), a.fmt)


def fxp_mul(a: FixedValue, b: FixedValue, ctx: FxpContext) -> FixedValue:
    fmt = _same_fmt(a, b)
    return FixedValue(raw_mul(a.raw, b.raw, fmt, ctx.counters), fmt)


def fxp_div(a: FixedValue, b: FixedValue, ctx: FxpContext) -> FixedValue:
    fmt = _same_fmt(a, b)
    return FixedValue(raw_div(a.raw, b.raw, fmt, ctx.counters), fmt)


def fxp_exp(a: FixedValue, ctx: FxpContext) -> FixedValue:
    return FixedValue(raw_exp(a.raw, a.fmt, ctx.counters), a.fmt)


def fxp_sqrt(a: FixedValue, ctx: FxpContext) -> FixedValue:
    return FixedValue(raw_sqrt(a.raw, a.fmt, ctx.counters), a.fmt)


def fxp_pow_int(a: FixedValue, k: int, ctx: FxpContext) -> FixedValue:
    return FixedValue(raw_pow_int(a.raw, k, a.fmt, ctx.counters), a.fmt)
