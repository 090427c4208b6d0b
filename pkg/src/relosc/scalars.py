"""Arbitrary-precision scalar context and decimal-string serialization.

Every numerical stage of the package funnels its arithmetic through a
PrecisionContext, which pins the decimal-digit budget carried by mpmath
operations.  Values cross file boundaries as decimal strings, so results
round-trip without losing precision.  Summations everywhere in the package
run in ascending index order; nothing relies on floating-point
associativity, which keeps outputs identical run to run.
"""

from __future__ import annotations

import re

from mpmath import mp

MIN_DIGITS = 30
DEFAULT_GUARD_DIGITS = 10
DEFAULT_RESCALE_EXPONENT = 100


class PrecisionContext:
    """Decimal-digit budget and tolerances shared by all solver stages.

    Attributes
    ----------
    digits : int
        Target significant decimal digits of reported results (>= 30).
    guard_digits : int
        Extra digits carried internally by every operation (>= 5).
    newton_tol : mpf
        Step tolerance for Newton-type iterations, 10**-(digits - 10).
    det_rescale_threshold : mpf
        Entry magnitude that triggers renormalization of the moment
        recurrence, 10**rescale_exponent.
    mp : mpmath context
        Private mpmath clone at dps = digits + guard_digits.  Read-only
        after construction; safe to share between threads.
    """

    def __init__(self, digits: int, guard_digits: int = DEFAULT_GUARD_DIGITS,
                 rescale_exponent: int = DEFAULT_RESCALE_EXPONENT):
        if digits < MIN_DIGITS:
            raise ValueError(
                f"digits below minimum: got {digits}, need >= {MIN_DIGITS}")
        if guard_digits < 5:
            raise ValueError(f"guard_digits must be >= 5, got {guard_digits}")
        self.digits = int(digits)
        self.guard_digits = int(guard_digits)
        self.mp = mp.clone()
        self.mp.dps = self.digits + self.guard_digits
        self.newton_tol = self.mp.mpf(10) ** (-(self.digits - 10))
        self.rescale_exponent = int(rescale_exponent)
        self.det_rescale_threshold = self.mp.mpf(10) ** self.rescale_exponent

    def mpf(self, x):
        """Coerce x (str, int, float or mpf) to a real at context precision.

        Strings are the preferred input for decimal constants such as
        "0.002": they parse exactly to the context's dps, while float
        literals carry their binary representation.
        """
        return self.mp.mpf(x)

    def mpc(self, re, im=0):
        return self.mp.mpc(re, im)

    def __repr__(self):
        return (f"PrecisionContext(digits={self.digits}, "
                f"guard_digits={self.guard_digits})")


def make_context(digits: int) -> PrecisionContext:
    """Build a PrecisionContext with default guard digits and thresholds."""
    return PrecisionContext(digits)


def _sig_digits(ctx_mp, x, digits):
    """Return (sign, digit_string, exp10) with exactly `digits` digits.

    The value is sign * 0.D1D2... * 10**(exp10 + 1), i.e. exp10 is the
    decimal exponent of the leading digit.  x == 0 gives all-zero digits
    with exp10 = 0.
    """
    if x == 0:
        return "", "0" * digits, 0
    s = ctx_mp.nstr(x, digits, strip_zeros=False)
    m = re.match(r"^(-?)([0-9]*)\.?([0-9]*)(?:[eE]([+-]?[0-9]+))?$", s)
    if m is None:
        raise ValueError(f"unexpected numeric string {s!r}")
    sign, intpart, fracpart, expo = m.groups()
    digs = (intpart + fracpart).lstrip("0")
    lead_zeros = len(intpart + fracpart) - len(digs)
    point = len(intpart)
    exp10 = point - lead_zeros - 1 + (int(expo) if expo else 0)
    digs = digs.rstrip() or "0"
    if len(digs) < digits:
        digs = digs + "0" * (digits - len(digs))
    elif len(digs) > digits:
        digs = digs[:digits]
    return sign, digs, exp10


def _format_real_plain(sign, digs, exp10):
    d = len(digs)
    if exp10 >= 0:
        if exp10 + 1 >= d:
            body = digs + "0" * (exp10 + 1 - d)
            return f"{sign}{body}.0" if exp10 + 1 > d else f"{sign}{body}."
        return f"{sign}{digs[:exp10 + 1]}.{digs[exp10 + 1:]}"
    return f"{sign}0.{'0' * (-exp10 - 1)}{digs}"


def _format_sci(sign, digs, exp10):
    if len(digs) == 1:
        return f"{sign}{digs}e{exp10}"
    return f"{sign}{digs[0]}.{digs[1:]}e{exp10}"


def to_decimal_string(x, digits: int) -> str:
    """Format a complex (or real) value as a sign-explicit decimal string.

    The real part is printed in plain decimal whenever its exponent lies in
    [-4, digits); otherwise it switches to mantissa/exponent form.  The
    imaginary part always carries an explicit exponent, mirroring the table
    layout "1.0005017620 + i 1.17374083059e-144".  The output parses back
    (see parse_decimal_string) to `digits` significant digits.
    """
    if digits < 1:
        raise ValueError("digits must be positive")
    re_part = mp.mpc(x).real
    im_part = mp.mpc(x).imag
    rs, rd, rexp = _sig_digits(mp, re_part, digits)
    if re_part != 0 and (rexp < -4 or rexp >= digits):
        re_str = _format_sci(rs, rd, rexp)
    else:
        re_str = _format_real_plain(rs, rd, rexp)
    im_sign, im_digs, im_exp = _sig_digits(mp, im_part, digits)
    joiner = " - i " if im_sign == "-" else " + i "
    return re_str + joiner + _format_sci("", im_digs, im_exp)


_SPLIT_RE = re.compile(r"\s*([+-])\s*i\s*")


def parse_decimal_string(s: str, ctx: PrecisionContext):
    """Parse the output of to_decimal_string back to an mpc at ctx precision.

    Plain real strings (no imaginary component) are also accepted.
    """
    parts = _SPLIT_RE.split(s.strip())
    if len(parts) == 1:
        return ctx.mpc(ctx.mpf(parts[0].strip()))
    if len(parts) != 3:
        raise ValueError(f"cannot parse complex decimal string {s!r}")
    re_str, sign, im_str = parts
    im = ctx.mpf(im_str.strip())
    if sign == "-":
        im = -im
    return ctx.mpc(ctx.mpf(re_str.strip()), im)
