"""Polynomials over Q, orbits, Chebyshev polynomials and integrability.

A polynomial is stored low-to-high: ``PolyQ([e0, e1, ..., ed])``.  The text
syntax accepted by :func:`parse_poly` is a sum of terms ``c*z^k`` with rational
literals ``p/q`` (the ``*`` and the coefficient are optional, whitespace is
ignored), e.g. ``"z^2 + 1/2"`` or ``"2z^2+4z"``; a JSON list of coefficients
``"[1/2, 0, 1]"`` (low-to-high) is accepted too.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .numeric import (
    RealInterval,
    as_rational,
    bit_size,
    format_rational,
    rational_root,
)

DEFAULT_ORBIT_BITS = 8 * 2**20  # one MiB per orbit entry
MAX_CHEBYSHEV_DEGREE = 64


class PolySyntaxError(ValueError):
    def __init__(self, text: str, pos: int, msg: str):
        self.text, self.pos = text, pos
        super().__init__(f"{msg} at position {pos}\n  {text}\n  {' ' * pos}^")


class PolyQ:
    """Univariate polynomial with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = (0,)):
        cs = [as_rational(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs) if cs else (Fraction(0),)

    @classmethod
    def monomial(cls, k: int, c=1) -> PolyQ:
        return cls([0] * k + [c])

    @classmethod
    def z(cls) -> PolyQ:
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return -1 if self.is_zero() else len(self.coeffs) - 1

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def coeff(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __call__(self, x):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def eval_interval(self, x: RealInterval) -> RealInterval:
        """Interval evaluation in the power basis (even powers are tight)."""
        acc = RealInterval(self.coeffs[0], bits=x.bits)
        for i, c in enumerate(self.coeffs[1:], start=1):
            if c:
                acc = acc + (x ** i) * c
        return acc

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return PolyQ(self.coeff(i) + other.coeff(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self):
        return PolyQ(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return PolyQ(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> PolyQ:
        result, base = PolyQ([1]), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def compose(self, inner: PolyQ) -> PolyQ:
        """``self(inner(z))``."""
        acc = PolyQ([self.coeffs[-1]])
        for c in reversed(self.coeffs[:-1]):
            acc = acc * inner + c
        return acc

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = PolyQ([other])
        return isinstance(other, PolyQ) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"PolyQ({self})"

    def __str__(self) -> str:
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c == 0 and not (k == 0 and not terms):
                continue
            sign = "-" if c < 0 else "+"
            a = abs(c)
            mono = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
            if mono and a == 1:
                body = mono
            elif mono:
                body = f"{format_rational(a)}{mono}" if a.denominator == 1 else f"{format_rational(a)}*{mono}"
            else:
                body = format_rational(a)
            terms.append((sign, body))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out

    def to_json(self) -> list[str]:
        return [format_rational(c) for c in self.coeffs]


def _as_poly(x) -> PolyQ:
    return x if isinstance(x, PolyQ) else PolyQ([as_rational(x)])


_TERM = re.compile(r"([+-])?(\d+(?:\.\d+)?(?:/\d+)?)?(\*)?([zx](?:\^(\d+))?)?")


def parse_poly(text: str) -> PolyQ:
    """Parse ``"z^2 + 1/2"``-style text or a JSON coefficient list."""
    s = text.strip()
    if s.startswith("["):
        try:
            items = json.loads(s)
        except json.JSONDecodeError as exc:
            raise PolySyntaxError(text, exc.pos, "bad JSON coefficient list") from None
        try:
            return PolyQ(as_rational(str(c)) for c in items)
        except (ValueError, TypeError):
            raise PolySyntaxError(text, 0, "bad coefficient in list") from None
    # keep track of original positions while dropping whitespace
    chars = [(i, ch) for i, ch in enumerate(text) if not ch.isspace()]
    compact = "".join(ch for _, ch in chars)
    if not compact:
        raise PolySyntaxError(text, 0, "empty polynomial")

    def orig(k: int) -> int:
        return chars[k][0] if k < len(chars) else len(text)

    coeffs: dict[int, Fraction] = {}
    pos = 0
    first = True
    while pos < len(compact):
        m = _TERM.match(compact, pos)
        sign, num, star, mono, power = m.groups()
        if m.end() == pos or (num is None and mono is None):
            raise PolySyntaxError(text, orig(pos), "expected a term")
        if sign is None and not first:
            raise PolySyntaxError(text, orig(pos), "expected '+' or '-'")
        if star and mono is None:
            raise PolySyntaxError(text, orig(m.end()), "expected 'z' after '*'")
        c = as_rational(num) if num is not None else Fraction(1)
        if sign == "-":
            c = -c
        k = 0 if mono is None else (int(power) if power is not None else 1)
        coeffs[k] = coeffs.get(k, Fraction(0)) + c
        pos = m.end()
        first = False
    deg = max(coeffs)
    return PolyQ(coeffs.get(i, 0) for i in range(deg + 1))


def as_poly(x) -> PolyQ:
    if isinstance(x, PolyQ):
        return x
    if isinstance(x, str):
        return parse_poly(x)
    return PolyQ(x)


def eval_poly(f: PolyQ, x) -> Fraction:
    return f(as_rational(x))


# --------------------------------------------------------------------------
#  orbits
# --------------------------------------------------------------------------

class Orbit(list):
    """``[a, f(a), ..., f^n(a)]``; ``truncated`` is set when the bit budget stopped it."""

    truncated: bool = False
    max_bits: int = 0


def orbit(f: PolyQ, a, n: int, max_bits: int = DEFAULT_ORBIT_BITS) -> Orbit:
    if n < 0:
        raise ValueError("orbit length must be nonnegative")
    z = as_rational(a)
    out = Orbit([z])
    out.max_bits = bit_size(z)
    for _ in range(n):
        if bit_size(z) > max_bits:
            out.truncated = True
            break
        z = f(z)
        out.append(z)
        out.max_bits = max(out.max_bits, bit_size(z))
    return out


# --------------------------------------------------------------------------
#  Chebyshev polynomials and linear conjugacy
# --------------------------------------------------------------------------

def chebyshev(d: int) -> PolyQ:
    """Monic ``C_d`` with ``C_d(z + 1/z) = z^d + z^-d``."""
    if not isinstance(d, int) or d < 1:
        raise ValueError("Chebyshev degree must be a positive integer")
    if d > MAX_CHEBYSHEV_DEGREE:
        raise ValueError(f"Chebyshev degree {d} exceeds the supported maximum {MAX_CHEBYSHEV_DEGREE}")
    z = PolyQ.z()
    prev, cur = PolyQ([2]), z  # C_0 = 2 fits the recurrence and gives C_2 = z^2 - 2
    for _ in range(d - 1):
        prev, cur = cur, z * cur - prev
    return cur


@dataclass(frozen=True)
class AffineMap:
    """``mu(z) = scale*z + shift``.

    When the scale is irrational only ``scale**root_degree == scale_power`` is
    known and ``scale`` is ``None``; ``root_degree == 2`` is the quadratic case.
    """

    shift: Fraction = Fraction(0)
    scale: Fraction | None = Fraction(1)
    scale_power: Fraction = Fraction(1)
    root_degree: int = 1

    @classmethod
    def rational(cls, scale, shift=0) -> AffineMap:
        a = as_rational(scale)
        if a == 0:
            raise ValueError("affine scale must be nonzero")
        return cls(as_rational(shift), a, a, 1)

    @property
    def is_rational(self) -> bool:
        return self.scale is not None

    def as_poly(self) -> PolyQ:
        self._need_rational()
        return PolyQ([self.shift, self.scale])

    def inverse_poly(self) -> PolyQ:
        self._need_rational()
        return PolyQ([-self.shift / self.scale, 1 / self.scale])

    def conjugate(self, f: PolyQ) -> PolyQ:
        """``mu^-1 o f o mu``."""
        return self.inverse_poly().compose(f.compose(self.as_poly()))

    def _need_rational(self):
        if self.scale is None:
            raise ValueError("affine map has an irrational scale")

    def to_json(self) -> dict:
        out = {"shift": format_rational(self.shift)}
        if self.scale is not None:
            out["scale"] = format_rational(self.scale)
        else:
            out["scale_power"] = format_rational(self.scale_power)
            out["root_degree"] = self.root_degree
        return out


def monic_center(f: PolyQ) -> tuple[PolyQ, AffineMap]:
    """Conjugate by a translation so that the degree ``d-1`` coefficient vanishes."""
    d = f.degree
    if d < 2:
        raise ValueError("centering needs degree >= 2")
    s = -f.coeff(d - 1) / (d * f.leading)
    mu = AffineMap.rational(1, s)
    return mu.conjugate(f), mu


class Integrability(str, enum.Enum):
    POWER = "PowerConjugate"
    CHEBYSHEV = "ChebyshevConjugate"
    NON_INTEGRABLE = "NonIntegrable"


@dataclass(frozen=True)
class IntegrabilityVerdict:
    kind: Integrability
    sign: int = 0
    witness: AffineMap | None = None
    degree: int = 0

    @property
    def label(self) -> str:
        if self.kind is Integrability.CHEBYSHEV:
            return f"ChebyshevConjugate({'+1' if self.sign > 0 else '-1'})"
        return self.kind.value

    @property
    def integrable(self) -> bool:
        return self.kind is not Integrability.NON_INTEGRABLE

    def model(self) -> PolyQ | None:
        if self.kind is Integrability.POWER:
            return PolyQ.monomial(self.degree)
        if self.kind is Integrability.CHEBYSHEV:
            return chebyshev(self.degree) * self.sign
        return None

    def verify(self, f: PolyQ) -> bool:
        """Re-check ``mu^-1 o f o mu == model`` coefficientwise.

        With an irrational scale ``a`` only ``a**k`` is known, so the check is
        done on the centered form ``g(z) = a*model(z/a)`` using the powers of
        ``a`` that actually occur.
        """
        model = self.model()
        if model is None:
            return False
        w = self.witness
        if w.is_rational:
            return w.conjugate(f) == model
        g = AffineMap.rational(1, w.shift).conjugate(f)
        d, k, A = self.degree, w.root_degree, w.scale_power
        for i in range(d + 1):
            mc = model.coeff(i)
            # g_i = mc * a^(1-i); only exponents divisible by k are expressible
            if mc == 0:
                if g.coeff(i) != 0:
                    return False
                continue
            e = 1 - i
            if e % k:
                return False
            if g.coeff(i) != mc * A ** (e // k):
                return False
        return True

    def to_json(self) -> dict:
        out = {"kind": self.label}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def classify_integrable(f: PolyQ) -> IntegrabilityVerdict:
    """Decide linear conjugacy (over the algebraic closure) to ``z^d`` or ``+-C_d``.

    Conjugacies fixing the centered normal form are pure scalings
    ``g(z) = a * M(z/a)``, so ``g_i = M_i * a**(1-i)``.  For the power map this
    forces ``g = l*z^d``; for Chebyshev the degree ``d-2`` coefficient pins
    ``a**2`` and parity makes every other index depend on ``a**2`` alone.
    """
    d = f.degree
    if d < 2:
        raise ValueError("integrability is defined for degree >= 2")
    g, center = monic_center(f)
    ell = g.leading

    if all(g.coeff(i) == 0 for i in range(d)):
        # ell * a^(d-1) = 1
        root = rational_root(1 / ell, d - 1)
        if root is not None:
            w = AffineMap(center.shift, root, root, 1)
        else:
            w = AffineMap(center.shift, None, 1 / ell, d - 1)
        return IntegrabilityVerdict(Integrability.POWER, 0, w, d)

    cheb = chebyshev(d)
    A = -g.coeff(d - 2) / (d * ell)  # a^2
    if A != 0:
        ok = all(g.coeff(i) == ell * cheb.coeff(i) * A ** ((d - i) // 2) if (d - i) % 2 == 0 else g.coeff(i) == 0
                 for i in range(d + 1))
        if ok:
            if d % 2 == 1:
                eps = ell * A ** ((d - 1) // 2)
                if eps in (1, -1):
                    r = rational_root(A, 2)
                    w = AffineMap(center.shift, r, r, 1) if r is not None else AffineMap(center.shift, None, A, 2)
                    return IntegrabilityVerdict(Integrability.CHEBYSHEV, int(eps), w, d)
            elif ell * ell * A ** (d - 1) == 1:
                # +C_d and -C_d are conjugate for even d; report eps = +1
                a = 1 / (ell * A ** ((d - 2) // 2))
                return IntegrabilityVerdict(Integrability.CHEBYSHEV, 1, AffineMap(center.shift, a, a, 1), d)
    return IntegrabilityVerdict(Integrability.NON_INTEGRABLE, 0, None, d)


# --------------------------------------------------------------------------
#  preperiodicity
# --------------------------------------------------------------------------

class PreperiodicKind(str, enum.Enum):
    PREPERIODIC = "Preperiodic"
    NOT_PREPERIODIC = "NotPreperiodic"
    UNKNOWN = "Unknown"


@dataclass
class PreperiodicResult:
    kind: PreperiodicKind
    tail: int | None = None
    period: int | None = None
    certificate: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.kind is PreperiodicKind.PREPERIODIC:
            out["tail"], out["period"] = self.tail, self.period
        if self.certificate:
            out["certificate"] = self.certificate
        return out


def detect_preperiodic(f: PolyQ, a, budget: int = 256,
                       max_bits: int = DEFAULT_ORBIT_BITS) -> PreperiodicResult:
    """Exact orbit with repetition detection and escape certificates.

    Escape at any place (beyond the escape threshold there) proves the orbit
    is infinite.  Only primes dividing a denominator can witness p-adic escape.
    """
    from .green import Place, escape_threshold, relevant_primes, escaped_beyond

    if f.degree < 2:
        raise ValueError("preperiodicity needs degree >= 2")
    z = as_rational(a)
    places = [Place.archimedean()] + [Place.finite(p) for p in sorted(relevant_primes(f, z))]
    thresholds = [escape_threshold(f, v) for v in places]
    seen: dict[Fraction, int] = {}
    for n in range(budget + 1):
        if z in seen:
            return PreperiodicResult(PreperiodicKind.PREPERIODIC, seen[z], n - seen[z])
        seen[z] = n
        for th in thresholds:
            if escaped_beyond(th, z):
                return PreperiodicResult(PreperiodicKind.NOT_PREPERIODIC,
                                         certificate={"place": str(th.place), "n": n})
        if bit_size(z) > max_bits or n == budget:
            break
        z = f(z)
    return PreperiodicResult(PreperiodicKind.UNKNOWN, certificate={"iterations": n})

