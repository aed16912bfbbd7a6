"""Local Green functions ``g_{f,v}(a)`` at the places of Q.

At a prime ``p`` the value is an exact rational multiple ``c * log p``: once an
iterate passes the p-adic escape threshold the top term dominates and
``c_{n+1} = d*c_n + c'`` with ``|l|_p = p**c'``, so ``c = (c_n0 + c'')/d**n0``
with ``c'' = c'/(d-1)``.

At the archimedean place, write ``G_n = d**-n * (log|f^n(a)| + log|l|/(d-1))``.
Then ``g = G_n + sum_{k>=n} d**-(k+1) * eps_k`` with
``eps_k = log|f(z_k) / (l z_k^d)|``.  Beyond the threshold ``R`` below,
``q = S/(|l||z|) < 1/2`` (``S`` the sum of the lower coefficient magnitudes),
so ``|eps| <= 2q`` and ``|f(z)| > 2|z|``; the tail is therefore bounded by
``2S/(|l||z_n|) * d**-(n+1) * 2d/(2d-1)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpq

from .numeric import (
    DEFAULT_BITS,
    _ctx,
    RealInterval,
    as_rational,
    bit_size,
    check_prime,
    format_rational,
    interval_log,
    log_of_rational,
    prime_factors,
    rational_root,
    valuation,
)
from .polydyn import PolyQ

DEFAULT_BUDGET = 256
DEFAULT_TOL = Fraction(1, 2**40)
EXACT_PHASE_BITS = 4096
MAX_PRECISION = 4096
_TRAP_PIECES = 32


@dataclass(frozen=True)
class Place:
    prime: int | None = None

    @classmethod
    def archimedean(cls) -> Place:
        return cls(None)

    @classmethod
    def finite(cls, p: int) -> Place:
        return cls(check_prime(p))

    @classmethod
    def parse(cls, text) -> Place:
        if isinstance(text, Place):
            return text
        if isinstance(text, int):
            return cls.finite(text)
        t = str(text).strip().lower()
        if t in ("inf", "infinity", "oo", "arch"):
            return cls.archimedean()
        try:
            return cls.finite(int(t))
        except ValueError:
            raise ValueError(f"bad place {text!r}: expected a prime or 'inf'") from None

    @property
    def is_archimedean(self) -> bool:
        return self.prime is None

    def __str__(self) -> str:
        return "inf" if self.prime is None else str(self.prime)


ARCH = Place.archimedean()


class Status(str, enum.Enum):
    ESCAPED = "Escaped"
    BOUNDED = "CertifiedBounded"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class EscapeThreshold:
    """Escape radius at a place.

    Finite place: escape means ``|z|_p > p**log_bound`` (``log_bound`` exact);
    ``bound`` is that radius rounded up to an integer power of ``p``.
    Archimedean place: escape means ``|z| > bound`` with ``bound`` rational.
    """

    place: Place
    bound: Fraction
    log_bound: Fraction | None = None

    @property
    def interval(self) -> RealInterval:
        return RealInterval(self.bound)


def _root_upper(x: Fraction, k: int) -> Fraction:
    """Rational upper bound for the real ``k``-th root of ``x >= 0``."""
    r = rational_root(x, k)
    if r is not None:
        return r
    scale = 64
    n = -(-x.numerator * 2 ** (scale * k) // x.denominator)
    root, _ = gmpy2.iroot(gmpy2.mpz(n), k)
    return Fraction(int(root) + 1, 2**scale)


def lower_coefficient_sum(f: PolyQ) -> Fraction:
    return sum((abs(f.coeff(i)) for i in range(f.degree)), Fraction(0))


def escape_threshold(f: PolyQ, v: Place) -> EscapeThreshold:
    d = f.degree
    if d < 2:
        raise ValueError("escape threshold needs degree >= 2")
    ell = f.leading
    if v.is_archimedean:
        S = lower_coefficient_sum(f)
        L = abs(ell)
        R = max(Fraction(1), (2 + 2 * S) / L, _root_upper(2 / L, d - 1))
        return EscapeThreshold(v, R)
    p = v.prime
    vl = valuation(ell, p)
    beta = max(Fraction(0), Fraction(vl, d - 1))
    for i in range(d):
        e = f.coeff(i)
        if e:
            beta = max(beta, Fraction(vl - valuation(e, p), d - i))
    ceil_beta = -((-beta.numerator) // beta.denominator)
    return EscapeThreshold(v, Fraction(p) ** ceil_beta, beta)


def escaped_beyond(th: EscapeThreshold, z: Fraction) -> bool:
    if th.place.is_archimedean:
        return abs(z) > th.bound
    if z == 0:
        return False
    return -valuation(z, th.place.prime) > th.log_bound


def relevant_primes(f: PolyQ, a) -> set[int]:
    """Primes dividing a denominator of ``a`` or of a coefficient of ``f``.

    Elsewhere ``f`` has p-integral coefficients and ``|a|_p <= 1``, which traps
    the orbit in the unit ball, so the Green function vanishes.
    """
    out: set[int] = set()
    for q in (*f.coeffs, as_rational(a)):
        out.update(prime_factors(q.denominator))
    return out


@dataclass
class GreenResult:
    place: Place
    status: Status
    c: Fraction | None = None
    enclosure: RealInterval | None = None
    n0: int | None = None
    budget_used: int = 0
    certificate: dict = field(default_factory=dict)

    @property
    def escaped(self) -> bool:
        return self.status is Status.ESCAPED

    @property
    def bounded(self) -> bool:
        return self.status is Status.BOUNDED

    def value(self, bits: int = DEFAULT_BITS) -> RealInterval | None:
        """Enclosure of ``g``; ``None`` when unknown."""
        if self.status is Status.BOUNDED:
            return RealInterval(0, bits=bits)
        if self.status is Status.UNKNOWN:
            return None
        if self.place.is_archimedean:
            return self.enclosure
        return log_of_rational(self.place.prime, bits) * self.c

    def to_json(self) -> dict:
        out: dict = {"place": str(self.place), "status": self.status.value}
        if self.c is not None:
            out["c"] = format_rational(self.c)
        if self.enclosure is not None:
            out["enclosure"] = self.enclosure.to_json()
        if self.n0 is not None:
            out["n0"] = self.n0
        out["budget_used"] = self.budget_used
        if self.certificate:
            out["certificate"] = self.certificate
        return out


# --------------------------------------------------------------------------
#  finite places
# --------------------------------------------------------------------------

def padic_trap_exponent(f: PolyQ, p: int) -> int | None:
    """Largest ``k`` with ``f`` mapping the ball ``|z|_p <= p**k`` into itself.

    ``|e_i z^i| <= p**k`` on that ball iff ``k*(i-1) <= v(e_i)`` (i >= 2),
    ``v(e_1) >= 0`` and ``-v(e_0) <= k``; ``None`` when no such ball exists.
    """
    d = f.degree
    e1 = f.coeff(1)
    if e1 and valuation(e1, p) < 0:
        return None
    k = min(Fraction(valuation(f.coeff(i), p), i - 1) for i in range(2, d + 1) if f.coeff(i))
    k = k.numerator // k.denominator
    e0 = f.coeff(0)
    if e0 and -valuation(e0, p) > k:
        return None
    return k


def green_nonarch(f: PolyQ, a, p: int, budget: int = DEFAULT_BUDGET,
                  max_bits: int = 8 * 2**20) -> GreenResult:
    check_prime(p)
    d = f.degree
    if d < 2:
        raise ValueError("Green functions need degree >= 2")
    place = Place.finite(p)
    th = escape_threshold(f, place)
    trap = padic_trap_exponent(f, p)
    c_lead = Fraction(-valuation(f.leading, p))
    c_shift = c_lead / (d - 1)
    z = as_rational(a)
    seen: set[Fraction] = set()
    n = 0
    while True:
        cn = None if z == 0 else -valuation(z, p)
        if cn is not None and cn > th.log_bound:
            c = (cn + c_shift) / Fraction(d) ** n
            return GreenResult(place, Status.ESCAPED, c=c, n0=n, budget_used=n,
                               certificate={"c_n0": cn, "c_prime": format_rational(c_lead),
                                            "threshold_log": format_rational(th.log_bound)})
        if trap is not None and (cn is None or cn <= trap):
            return GreenResult(place, Status.BOUNDED, budget_used=n,
                               certificate={"trap_ball_log": trap, "index": n})
        if z in seen:
            return GreenResult(place, Status.BOUNDED, budget_used=n, certificate={"cycle_at": n})
        seen.add(z)
        if n >= budget or bit_size(z) > max_bits:
            return GreenResult(place, Status.UNKNOWN, budget_used=n)
        z = f(z)
        n += 1


# --------------------------------------------------------------------------
#  archimedean place
# --------------------------------------------------------------------------

def _interval_image(f: PolyQ, box: RealInterval, pieces: int = _TRAP_PIECES) -> RealInterval:
    parts = [f.eval_interval(piece) for piece in box.split(pieces)]
    out = parts[0]
    for q in parts[1:]:
        out = out.hull(q)
    return out


def find_trapping_box(f: PolyQ, boxes: list[RealInterval], attempts: int = 4,
                      grow_steps: int = 12) -> tuple[RealInterval, int] | None:
    """Look for ``B`` with ``f(B)`` inside ``B`` containing a late orbit point.

    Starts from the hull of the second half of the orbit boxes, pads it, and
    lets it grow by ``B <- hull(B, f(B))``; padding doubles between attempts.
    """
    start = len(boxes) // 2
    tail = boxes[start:]
    if not tail or not all(b.is_finite() for b in tail):
        return None
    hull = tail[0]
    for b in tail[1:]:
        hull = hull.hull(b)
    bits = hull.bits
    w = Fraction(mpq(hull.width)) if hull.width < 2**64 else None
    if w is None:
        return None
    pad = (w + Fraction(1, 2**20)) / 16
    for _ in range(attempts):
        box = hull.widen(pad)
        for _ in range(grow_steps):
            image = _interval_image(f, box)
            if box.contains(image) and box.contains(boxes[start]):
                return box.with_bits(bits), start
            box = box.hull(image)
            if box.width > 2**32:
                break
        pad *= 2
    return None


def _arch_enclosure(f: PolyQ, Z: RealInterval, n: int, S: Fraction) -> RealInterval:
    d = f.degree
    ell = abs(f.leading)
    bits = Z.bits
    mag = Z.abs()
    G = interval_log(mag)
    if ell != 1:
        G = G + log_of_rational(ell, bits) / (d - 1)
    G = G * Fraction(1, d**n)
    if S == 0:
        return G
    # the tail bound is decreasing in |z|, so the lower endpoint is enough
    low = RealInterval._raw(mag.lo, mag.lo, bits)
    t = (RealInterval(2 * S / ell, bits=bits) / low * Fraction(2 * d, (2 * d - 1) * d ** (n + 1))).hi
    return G + RealInterval._raw(_ctx(bits, False).minus(t), t, bits)


def green_arch(f: PolyQ, a, tol=DEFAULT_TOL, budget: int = DEFAULT_BUDGET,
               bits: int = DEFAULT_BITS, max_precision: int = MAX_PRECISION) -> GreenResult:
    tol = as_rational(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    d = f.degree
    if d < 2:
        raise ValueError("Green functions need degree >= 2")
    th = escape_threshold(f, ARCH)
    R = th.bound
    Rq = mpq(R.numerator, R.denominator)
    S = lower_coefficient_sum(f)

    # exact phase: cheap cycle detection and exact escape test
    z = as_rational(a)
    seen: dict[Fraction, int] = {}
    n = 0
    while True:
        if abs(z) > R:
            break
        if z in seen:
            return GreenResult(ARCH, Status.BOUNDED, budget_used=n,
                               certificate={"cycle": {"tail": seen[z], "period": n - seen[z]}})
        seen[z] = n
        if n >= budget or bit_size(z) > EXACT_PHASE_BITS:
            break
        z = f(z)
        n += 1
    z_exact, n_exact = z, n

    prec = bits
    while prec <= max_precision:
        result = _arch_interval_phase(f, z_exact, n_exact, R, Rq, S, tol, budget, prec)
        if result is not None:
            return result
        prec *= 2
    return GreenResult(ARCH, Status.UNKNOWN, budget_used=budget,
                       certificate={"reason": "precision cap reached", "max_precision": max_precision})


def _arch_interval_phase(f, z_exact, n, R, Rq, S, tol, budget, prec) -> GreenResult | None:
    """One attempt at a fixed precision; ``None`` asks for more precision."""
    Z = RealInterval(z_exact, bits=prec)
    boxes = [Z]
    checkpoints = {16, 32, 64, 128, 256, 512, 1024}
    while not Z.abs().lo > Rq:
        if n >= budget:
            found = find_trapping_box(f, boxes)
            if found:
                box, idx = found
                return GreenResult(ARCH, Status.BOUNDED, budget_used=n,
                                   certificate={"trap_box": box.to_json(), "index": idx})
            return GreenResult(ARCH, Status.UNKNOWN, budget_used=n,
                               certificate={"reason": "no escape and no trapping box within budget"})
        Z = f.eval_interval(Z)
        n += 1
        boxes.append(Z)
        if not Z.is_finite() or Z.width > (abs(Z.mid) + 1) / 1024:
            return None
        if len(boxes) in checkpoints:
            found = find_trapping_box(f, boxes)
            if found:
                box, idx = found
                return GreenResult(ARCH, Status.BOUNDED, budget_used=n,
                                   certificate={"trap_box": box.to_json(), "index": idx})
    n0 = n
    enc = _arch_enclosure(f, Z, n, S)
    prev_width = None
    while enc.width > mpq(tol.numerator, tol.denominator):
        if n >= budget + 64:
            return GreenResult(ARCH, Status.UNKNOWN, budget_used=n,
                               certificate={"reason": "tolerance not reached within budget"})
        if prev_width is not None and enc.width >= prev_width:
            return None
        prev_width = enc.width
        Z = f.eval_interval(Z)
        n += 1
        enc = _arch_enclosure(f, Z, n, S)
    return GreenResult(ARCH, Status.ESCAPED, enclosure=enc, n0=n0, budget_used=n,
                       certificate={"threshold": format_rational(R), "refined_at": n, "bits": prec})


def green(f: PolyQ, a, place, tol=DEFAULT_TOL, budget: int = DEFAULT_BUDGET) -> GreenResult:
    v = Place.parse(place)
    if v.is_archimedean:
        return green_arch(f, a, tol=tol, budget=budget)
    return green_nonarch(f, a, v.prime, budget=budget)
