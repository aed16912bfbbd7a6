"""Exact rationals, p-adic absolute values and outward-rounded interval arithmetic.

Rationals are plain :class:`fractions.Fraction` objects (always reduced, with a
positive denominator).  Intervals carry binary floating endpoints from MPFR via
gmpy2; every endpoint is a dyadic rational ``m * 2**e`` and every operation rounds
the lower endpoint down and the upper endpoint up, so the exact image of the
inputs is always enclosed.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpfr, mpq

DEFAULT_BITS = int(os.environ.get("CANHEIGHT_BITS", "128"))

Rational = Fraction


# --------------------------------------------------------------------------
#  rationals
# --------------------------------------------------------------------------

def as_rational(x) -> Fraction:
    """Coerce ``int``, ``Fraction`` or a ``"p/q"`` / decimal string to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, type(mpq())):
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def parse_rational(text: str) -> Fraction:
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty rational literal")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational literal {text!r}") from exc


def format_rational(q: Fraction) -> str:
    q = as_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def bit_size(q: Fraction) -> int:
    return q.numerator.bit_length() + q.denominator.bit_length()


# --------------------------------------------------------------------------
#  primes and p-adic absolute values
# --------------------------------------------------------------------------

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
# the bases above are a proof of primality below this bound
_MR_LIMIT = 3317044064679887385961981


def is_prime(n: int) -> bool:
    if not isinstance(n, int) or n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n < _MR_LIMIT:
        d, s = n - 1, 0
        while d % 2 == 0:
            d //= 2
            s += 1
        for a in _MR_BASES:
            x = pow(a, d, n)
            if x in (1, n - 1):
                continue
            for _ in range(s - 1):
                x = x * x % n
                if x == n - 1:
                    break
            else:
                return False
        return True
    # trial division above the deterministic range
    i = 41
    r = math.isqrt(n)
    while i <= r:
        if n % i == 0:
            return False
        i += 2
    return True


def check_prime(p) -> int:
    if not isinstance(p, int) or isinstance(p, bool) or not is_prime(p):
        raise ValueError(f"{p!r} is not a prime")
    return p


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(x, p: int) -> int | None:
    """``v_p(x)`` for a nonzero rational; ``None`` for zero."""
    x = as_rational(x)
    if x == 0:
        return None
    return _int_valuation(abs(x.numerator), p) - _int_valuation(x.denominator, p)


@dataclass(frozen=True)
class PAdicAbs:
    """``|x|_p = p**exponent``; zero is tagged rather than given exponent -inf."""

    prime: int
    exponent: int = 0
    is_zero: bool = False

    @property
    def value(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.prime) ** self.exponent

    def __mul__(self, other: PAdicAbs) -> PAdicAbs:
        if other.prime != self.prime:
            raise ValueError("absolute values at different primes")
        if self.is_zero or other.is_zero:
            return PAdicAbs(self.prime, 0, True)
        return PAdicAbs(self.prime, self.exponent + other.exponent)

    def _key(self):
        return (0, 0) if self.is_zero else (1, self.exponent)

    def __lt__(self, other: PAdicAbs) -> bool:
        return self._key() < other._key()

    def __le__(self, other: PAdicAbs) -> bool:
        return self._key() <= other._key()

    def __str__(self) -> str:
        return "0" if self.is_zero else f"{self.prime}^{self.exponent}"


def padic_abs(x, p: int) -> PAdicAbs:
    check_prime(p)
    v = valuation(x, p)
    if v is None:
        return PAdicAbs(p, 0, True)
    return PAdicAbs(p, -v)


def prime_factors(n: int) -> dict[int, int]:
    """Trial-division factorisation; fine for the denominators seen here."""
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def rational_root(x: Fraction, k: int) -> Fraction | None:
    """The real ``k``-th root of ``x`` if it is rational (positive one for even k)."""
    x = as_rational(x)
    if k == 1:
        return x
    if x < 0:
        if k % 2 == 0:
            return None
        r = rational_root(-x, k)
        return None if r is None else -r
    num = gmpy2.iroot(gmpy2.mpz(x.numerator), k)
    den = gmpy2.iroot(gmpy2.mpz(x.denominator), k)
    if num[1] and den[1]:
        return Fraction(int(num[0]), int(den[0]))
    return None


# --------------------------------------------------------------------------
#  intervals
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _ctx(bits: int, up: bool):
    return gmpy2.context(
        precision=bits,
        round=gmpy2.RoundUp if up else gmpy2.RoundDown,
        emax=gmpy2.get_emax_max(),
        emin=gmpy2.get_emin_min(),
        subnormalize=False,
    )


def _to_mpfr(x, bits: int, up: bool):
    ctx = _ctx(bits, up)
    if isinstance(x, Fraction):
        return mpfr(mpq(x.numerator, x.denominator), bits, ctx)
    if isinstance(x, int):
        return mpfr(x, bits, ctx)
    return mpfr(x, bits, ctx)


def _mpq(x):
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return x


class RealInterval:
    """Closed interval ``[lo, hi]`` with dyadic endpoints and outward rounding.

    ``bits`` is the mantissa precision used for results.  Binary operations
    accept ``int`` and ``Fraction`` operands, which are first enclosed at the
    same precision.
    """

    __slots__ = ("lo", "hi", "bits")

    def __init__(self, lo, hi=None, bits: int = DEFAULT_BITS):
        if hi is None:
            hi = lo
        self.bits = bits
        self.lo = _to_mpfr(lo, bits, up=False)
        self.hi = _to_mpfr(hi, bits, up=True)
        if gmpy2.is_nan(self.lo) or gmpy2.is_nan(self.hi):
            raise ValueError("NaN endpoint")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def _raw(cls, lo, hi, bits):
        obj = cls.__new__(cls)
        obj.lo, obj.hi, obj.bits = lo, hi, bits
        return obj

    def _coerce(self, other) -> RealInterval:
        if isinstance(other, RealInterval):
            return other
        if isinstance(other, (int, Fraction)):
            return RealInterval(other, bits=self.bits)
        return NotImplemented

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        b = max(self.bits, o.bits)
        return RealInterval._raw(_ctx(b, False).add(self.lo, o.lo), _ctx(b, True).add(self.hi, o.hi), b)

    __radd__ = __add__

    def __neg__(self):
        neg = _ctx(self.bits, False).minus
        return RealInterval._raw(neg(self.hi), neg(self.lo), self.bits)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        b = max(self.bits, o.bits)
        return RealInterval._raw(_ctx(b, False).sub(self.lo, o.hi), _ctx(b, True).sub(self.hi, o.lo), b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        b = max(self.bits, o.bits)
        dn, up = _ctx(b, False), _ctx(b, True)
        pairs = ((self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi))
        lo = min(dn.mul(x, y) for x, y in pairs)
        hi = max(up.mul(x, y) for x, y in pairs)
        return RealInterval._raw(lo, hi, b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("interval divisor contains zero")
        b = max(self.bits, o.bits)
        dn, up = _ctx(b, False), _ctx(b, True)
        pairs = ((self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi))
        lo = min(dn.div(x, y) for x, y in pairs)
        hi = max(up.div(x, y) for x, y in pairs)
        return RealInterval._raw(lo, hi, b)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def sqr(self) -> RealInterval:
        return self ** 2

    def __pow__(self, n: int) -> RealInterval:
        if not isinstance(n, int) or n < 0:
            raise ValueError("interval power needs a nonnegative integer exponent")
        if n == 0:
            return RealInterval(1, bits=self.bits)
        dn, up = _ctx(self.bits, False), _ctx(self.bits, True)
        if n % 2 == 1:
            return RealInterval._raw(dn.pow(self.lo, n), up.pow(self.hi, n), self.bits)
        a = self.abs()
        return RealInterval._raw(dn.pow(a.lo, n), up.pow(a.hi, n), self.bits)

    def abs(self) -> RealInterval:
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RealInterval._raw(mpfr(0), max(_ctx(self.bits, True).minus(self.lo), self.hi), self.bits)

    __abs__ = abs

    def sqrt(self) -> RealInterval:
        if self.lo < 0:
            raise ValueError("sqrt of an interval with negative lower endpoint")
        return RealInterval._raw(_ctx(self.bits, False).sqrt(self.lo), _ctx(self.bits, True).sqrt(self.hi), self.bits)

    def log(self) -> RealInterval:
        return interval_log(self)

    def exp(self) -> RealInterval:
        return interval_exp(self)

    def with_bits(self, bits: int) -> RealInterval:
        return RealInterval._raw(_to_mpfr(self.lo, bits, False), _to_mpfr(self.hi, bits, True), bits)

    # -- set operations ----------------------------------------------------

    def contains(self, x) -> bool:
        if isinstance(x, RealInterval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= _mpq(x) <= self.hi

    __contains__ = contains

    def overlaps(self, other: RealInterval) -> bool:
        return not (self.hi < other.lo or other.hi < self.lo)

    def hull(self, other) -> RealInterval:
        o = self._coerce(other)
        return RealInterval._raw(min(self.lo, o.lo), max(self.hi, o.hi), max(self.bits, o.bits))

    def intersect(self, other: RealInterval) -> RealInterval | None:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return RealInterval._raw(lo, hi, max(self.bits, other.bits))

    def widen(self, eps) -> RealInterval:
        return self + RealInterval(-as_rational(eps), as_rational(eps), bits=self.bits)

    @property
    def width(self):
        """Upper bound on ``hi - lo`` as an mpfr."""
        return _ctx(self.bits, True).sub(self.hi, self.lo)

    @property
    def mid(self):
        return _ctx(self.bits + 2, False).div_2exp(_ctx(self.bits + 2, False).add(self.lo, self.hi), 1)

    def is_finite(self) -> bool:
        return gmpy2.is_finite(self.lo) and gmpy2.is_finite(self.hi)

    def split(self, k: int) -> list[RealInterval]:
        """Cover ``self`` by ``k`` consecutive pieces (endpoints shared exactly)."""
        if k <= 1 or self.lo == self.hi:
            return [self]
        lo, hi = mpq(self.lo), mpq(self.hi)
        step = (hi - lo) / k
        cuts = [self.lo] + [mpfr(lo + step * i, self.bits + 8) for i in range(1, k)] + [self.hi]
        return [RealInterval._raw(cuts[i], cuts[i + 1], self.bits) for i in range(k)]

    # -- presentation ------------------------------------------------------

    def to_json(self, digits: int | None = None) -> dict:
        digits = digits or max(20, int(self.bits * 0.30103) + 2)
        return {"lo": _decimal(self.lo, digits, up=False), "hi": _decimal(self.hi, digits, up=True), "bits": self.bits}

    @classmethod
    def from_json(cls, obj: dict) -> RealInterval:
        bits = int(obj.get("bits", DEFAULT_BITS))
        return cls._raw(mpfr(obj["lo"], bits, 10, _ctx(bits, False)), mpfr(obj["hi"], bits, 10, _ctx(bits, True)), bits)

    def __repr__(self) -> str:
        j = self.to_json(18)
        return f"RealInterval([{j['lo']}, {j['hi']}], bits={self.bits})"

    def __eq__(self, other) -> bool:
        return isinstance(other, RealInterval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))


def _decimal(x, digits: int, up: bool) -> str:
    if x == 0:
        return "0"
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    with gmpy2.context(round=gmpy2.RoundUp if up else gmpy2.RoundDown, precision=x.precision,
                       emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min()):
        mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    mant = mant.rstrip("0") or "0"
    e = exp - 1
    body = mant[0] + ("." + mant[1:] if len(mant) > 1 else "")
    return f"{sign}{body}e{e}" if e else f"{sign}{body}"


def interval_log(x: RealInterval) -> RealInterval:
    if x.lo <= 0:
        raise ValueError("log of an interval with nonpositive lower endpoint")
    return RealInterval._raw(_ctx(x.bits, False).log(x.lo), _ctx(x.bits, True).log(x.hi), x.bits)


def interval_log_plus(x: RealInterval) -> RealInterval:
    """Enclosure of ``log max(t, 1)`` over a magnitude interval."""
    if x.lo < 0:
        raise ValueError("log+ expects a magnitude interval (lower endpoint >= 0)")
    zero = mpfr(0)
    lo = _ctx(x.bits, False).log(x.lo) if x.lo > 1 else zero
    hi = _ctx(x.bits, True).log(x.hi) if x.hi > 1 else zero
    return RealInterval._raw(lo, hi, x.bits)


def interval_exp(x: RealInterval) -> RealInterval:
    return RealInterval._raw(_ctx(x.bits, False).exp(x.lo), _ctx(x.bits, True).exp(x.hi), x.bits)


def log_of_rational(q, bits: int = DEFAULT_BITS) -> RealInterval:
    return interval_log(RealInterval(as_rational(q), bits=bits))


# --------------------------------------------------------------------------
#  complex boxes
# --------------------------------------------------------------------------

class ComplexBox:
    """Rectangular enclosure ``re + i*im`` of a complex number."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0, bits: int = DEFAULT_BITS):
        self.re = re if isinstance(re, RealInterval) else RealInterval(as_rational(re), bits=bits)
        self.im = im if isinstance(im, RealInterval) else RealInterval(as_rational(im), bits=bits)

    @property
    def bits(self) -> int:
        return max(self.re.bits, self.im.bits)

    def _coerce(self, other) -> ComplexBox:
        if isinstance(other, ComplexBox):
            return other
        if isinstance(other, (int, Fraction, RealInterval)):
            return ComplexBox(other, 0, bits=self.bits)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ComplexBox(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexBox(-self.re, -self.im)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ComplexBox(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ComplexBox(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        den = o.re.sqr() + o.im.sqr()
        num = self * ComplexBox(o.re, -o.im)
        return ComplexBox(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __pow__(self, n: int) -> ComplexBox:
        result = ComplexBox(1, 0, bits=self.bits)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def abs(self) -> RealInterval:
        return (self.re.sqr() + self.im.sqr()).sqrt()

    def contains(self, z: complex) -> bool:
        return self.re.contains(Fraction(z.real)) and self.im.contains(Fraction(z.imag))

    def to_json(self) -> dict:
        return {"re": self.re.to_json(), "im": self.im.to_json()}

    def __repr__(self) -> str:
        return f"ComplexBox({self.re!r}, {self.im!r})"
