"""Truncated Laurent series at infinity and Böttcher coordinates.

A :class:`LaurentSeries` stores the coefficients of ``z^top, z^(top-1), ...``
down to ``z^low`` where ``low = top - window + 1``.  Coefficients below
``low`` are unknown, and every operation computes its own ``low`` from its
inputs so that nothing outside the valid range is ever reported:

=====================  =====================================================
operation              lowest valid exponent of the result
=====================  =====================================================
``S + T``              ``max(low_S, low_T)``
``S * T``              ``max(top_S + low_T, top_T + low_S)``  (window min)
``S ** k``, ``S**(1/m)``  same window as ``S`` (relative to the new top)
``S(B)``, ``B`` top δ>0   ``max((low_S - 1)*δ + 1, top_S*δ + low_B - top_B)``
=====================  =====================================================

Powers and roots use the J. C. P. Miller recurrence on the normalized form
``c z^t (1 + u)``, so ``u`` need only be known to the window depth.

Böttcher coordinates: writing ``x = 1/z`` and ``phi = a1 z H(x)`` with
``H = 1 + h_1 x + ...``, the equation ``phi(f(z)) = phi(z)^d`` becomes
``F(x) H(y) = H(x)^d`` with ``F = f(z)/(l z^d)`` and ``y = 1/f(z)``.  The
unknown ``h_k`` enters the right side at ``x^k`` as ``d*h_k`` and the left
side only through ``h_j`` with ``d*j <= k``, so the ``h_k`` are solved one at
a time.  ``H`` never involves ``a1``, hence it is always rational.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .numeric import (
    DEFAULT_BITS,
    ComplexBox,
    RealInterval,
    as_rational,
    format_rational,
    rational_root,
)
from .polydyn import PolyQ, as_poly

EXACT = "exact"
INTERVAL = "interval"


class WindowError(ValueError):
    """Requested coefficient lies outside the valid window."""


class NoRationalRoot(ValueError):
    pass


def _is_exact_zero(c) -> bool:
    if isinstance(c, RealInterval):
        return c.lo == 0 and c.hi == 0
    return c == 0


def _mode_of(c) -> str:
    return INTERVAL if isinstance(c, (RealInterval, ComplexBox)) else EXACT


def _miller_power(h: Sequence, alpha: Fraction, n: int) -> list:
    """First ``n`` coefficients of ``(1 + h_1 x + ...)**alpha``; ``h[0]`` must be 1."""
    g = [h[0]] + [None] * (n - 1)
    ap1 = alpha + 1
    for k in range(1, n):
        acc = None
        for j in range(1, min(k, len(h) - 1) + 1):
            hj = h[j]
            if _is_exact_zero(hj):
                continue
            w = ap1 * j - k
            if w == 0:
                continue
            term = hj * g[k - j] * w
            acc = term if acc is None else acc + term
        g[k] = Fraction(0) if acc is None else acc / k
    return g


class LaurentSeries:
    """Truncated Laurent series in ``z`` around infinity."""

    __slots__ = ("top", "coeffs", "poly")

    def __init__(self, top: int, coeffs: Sequence, poly: PolyQ | None = None):
        coeffs = [Fraction(c) if isinstance(c, int) else c for c in coeffs]
        if not coeffs:
            raise WindowError("empty window")
        k = 0
        while k < len(coeffs) - 1 and _is_exact_zero(coeffs[k]):
            k += 1
        if k and not _is_exact_zero(coeffs[k]):
            top -= k
            coeffs = coeffs[k:]
        self.top = top
        self.coeffs = coeffs
        self.poly = poly

    # -- construction -------------------------------------------------------

    @classmethod
    def from_poly(cls, p, window: int | None = None) -> LaurentSeries:
        p = as_poly(p)
        d = p.degree
        window = window or d + 1
        return cls(d, [p.coeff(d - i) for i in range(window)])

    @classmethod
    def monomial(cls, k: int, c=1, window: int = 1) -> LaurentSeries:
        return cls(k, [as_rational(c)] + [Fraction(0)] * (window - 1))

    @classmethod
    def from_dict(cls, terms: dict[int, object], low: int) -> LaurentSeries:
        top = max([e for e, c in terms.items() if not _is_exact_zero(c)], default=low)
        return cls(top, [terms.get(e, Fraction(0)) for e in range(top, low - 1, -1)])

    # -- basic accessors ------------------------------------------------------

    @property
    def window(self) -> int:
        return len(self.coeffs)

    @property
    def low(self) -> int:
        return self.top - len(self.coeffs) + 1

    @property
    def leading(self):
        return self.coeffs[0]

    @property
    def mode(self) -> str:
        return INTERVAL if any(_mode_of(c) == INTERVAL for c in self.coeffs) else EXACT

    def is_zero(self) -> bool:
        return all(_is_exact_zero(c) for c in self.coeffs)

    def coeff(self, e: int):
        if e > self.top:
            return Fraction(0)
        if e < self.low:
            raise WindowError(f"exponent {e} is below the valid window (lowest {self.low})")
        return self.coeffs[self.top - e]

    __getitem__ = coeff

    def items(self):
        return ((self.top - i, c) for i, c in enumerate(self.coeffs))

    def truncate(self, low: int) -> LaurentSeries:
        """Forget coefficients below ``low``."""
        if low < self.low:
            raise WindowError(f"cannot extend window down to {low} (lowest valid {self.low})")
        return LaurentSeries(self.top, self.coeffs[: self.top - low + 1], self.poly)

    # -- ring operations ------------------------------------------------------

    def _coerce(self, other) -> LaurentSeries:
        if isinstance(other, LaurentSeries):
            return other
        if isinstance(other, PolyQ):
            return LaurentSeries.from_poly(other, other.degree - self.low + 1 if self.low < 0 else None)
        if isinstance(other, (int, Fraction, RealInterval, ComplexBox)):
            low = min(self.low, 0)
            c = as_rational(other) if isinstance(other, int) else other
            return LaurentSeries(0, [c] + [Fraction(0)] * (-low))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        top, low = max(self.top, o.top), max(self.low, o.low)
        if low > top:
            raise WindowError("sum has an empty window")
        out = []
        for e in range(top, low - 1, -1):
            out.append(self.coeff(e) + o.coeff(e))
        return LaurentSeries(top, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(self.top, [-c for c in self.coeffs])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, RealInterval, ComplexBox)):
            c = as_rational(other) if isinstance(other, int) else other
            return LaurentSeries(self.top, [x * c for x in self.coeffs])
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = min(self.window, o.window)
        a, b = self.coeffs, o.coeffs
        out = []
        for k in range(n):
            acc = None
            for i in range(k + 1):
                x, y = a[i], b[k - i]
                if _is_exact_zero(x) or _is_exact_zero(y):
                    continue
                t = x * y
                acc = t if acc is None else acc + t
            out.append(Fraction(0) if acc is None else acc)
        return LaurentSeries(self.top + o.top, out)

    __rmul__ = __mul__

    def _normalized(self):
        c = self.leading
        if _is_exact_zero(c):
            raise ZeroDivisionError("series has zero leading coefficient")
        if _mode_of(c) == EXACT:
            return c, [Fraction(1)] + [x / c for x in self.coeffs[1:]]
        return c, [c / c] + [x / c for x in self.coeffs[1:]]

    def power(self, alpha) -> LaurentSeries:
        """``self ** alpha`` for integer or rational ``alpha``.

        A rational exponent ``p/q`` needs ``q`` to divide ``top`` and the
        leading coefficient to have a rational ``q``-th root.
        """
        alpha = as_rational(alpha) if not isinstance(alpha, Fraction) else alpha
        if alpha == 0:
            return LaurentSeries(0, [Fraction(1)] + [Fraction(0)] * (self.window - 1))
        if alpha.denominator == 1 and alpha > 0 and self.window == 1:
            return LaurentSeries(self.top * int(alpha), [self.leading ** int(alpha)])
        c, h = self._normalized()
        top = self.top * alpha
        if top.denominator != 1:
            raise ValueError(f"exponent {alpha} does not divide the top degree {self.top}")
        if alpha.denominator == 1:
            lead = c ** int(alpha) if _mode_of(c) == EXACT or alpha > 0 else (1 / c) ** int(-alpha)
        else:
            if _mode_of(c) != EXACT:
                raise ValueError("fractional powers need an exact leading coefficient")
            lead = rational_root(c, alpha.denominator)
            if lead is None:
                raise NoRationalRoot(f"leading coefficient {c} has no rational {alpha.denominator}-th root")
            lead = lead ** alpha.numerator
        g = _miller_power(h, alpha, self.window)
        return LaurentSeries(int(top), [lead * x for x in g])

    def __pow__(self, k: int) -> LaurentSeries:
        if not isinstance(k, int):
            raise TypeError("use .power() for rational exponents")
        return self.power(Fraction(k))

    def inverse(self) -> LaurentSeries:
        return self.power(-1)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / as_rational(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def substitute(self, inner) -> LaurentSeries:
        """Composition ``self(inner(z))``; ``inner`` has positive top degree."""
        if isinstance(inner, PolyQ):
            delta = inner.degree
            if delta < 1:
                raise ValueError("substitution needs an argument of positive degree")
            need_low = (self.low - 1) * delta + 1
            b = LaurentSeries.from_poly(inner, max(delta - need_low + 1, delta + 1))
        else:
            b = inner
        delta = b.top
        if delta < 1:
            raise ValueError("substitution needs an argument of positive top degree")
        low = max((self.low - 1) * delta + 1, self.top * delta + b.low - b.top)
        terms: dict[int, object] = {}
        for e, c in self.items():
            if _is_exact_zero(c):
                continue
            be = b ** e
            for x, bc in be.items():
                if x < low:
                    break
                if not _is_exact_zero(bc):
                    terms[x] = terms[x] + c * bc if x in terms else c * bc
        return LaurentSeries.from_dict(terms, low)

    def __call__(self, inner):
        return self.substitute(inner)

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, z, bits: int = DEFAULT_BITS):
        """Interval value of the truncated sum at a real or complex point."""
        if isinstance(z, complex):
            pt = ComplexBox(Fraction(z.real), Fraction(z.imag), bits=bits)
        elif isinstance(z, ComplexBox):
            pt = z
        else:
            pt = RealInterval(as_rational(z), bits=bits) if not isinstance(z, RealInterval) else z
        inv = 1 / pt
        acc = None
        for e, c in self.items():
            if _is_exact_zero(c):
                continue
            w = pt ** e if e >= 0 else inv ** (-e)
            t = w * c
            acc = t if acc is None else acc + t
        return acc if acc is not None else pt * 0

    # -- comparison and output -------------------------------------------------

    def agrees_with(self, other: LaurentSeries) -> bool:
        """Coefficients agree on the common window."""
        low = max(self.low, other.low)
        top = max(self.top, other.top)
        return all(self.coeff(e) == other.coeff(e) for e in range(top, low - 1, -1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.top == other.top and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.top, tuple(map(str, self.coeffs))))

    def __repr__(self) -> str:
        return f"LaurentSeries({self}, window={self.window})"

    def __str__(self) -> str:
        out = ""
        for e, c in self.items():
            if _is_exact_zero(c):
                continue
            mon = "" if e == 0 else ("z" if e == 1 else f"z^{e}")
            if isinstance(c, Fraction):
                sign, mag = ("-" if c < 0 else "+"), abs(c)
                cs = "" if mag == 1 and mon else format_rational(mag) + ("*" if mon else "")
            else:
                sign, cs = "+", repr(c) + ("*" if mon else "")
            term = cs + mon
            out = (f"-{term}" if sign == "-" else term) if not out else f"{out} {sign} {term}"
        return f"{out or '0'} + O(z^{self.low - 1})"

    def to_json(self) -> dict:
        def enc(c):
            return format_rational(c) if isinstance(c, Fraction) else c.to_json()
        return {
            "top": self.top,
            "window": self.window,
            "coefficients": {str(e): enc(c) for e, c in self.items() if not _is_exact_zero(c)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> LaurentSeries:
        top, window = int(obj["top"]), int(obj["window"])
        terms = {int(k): as_rational(v) for k, v in obj["coefficients"].items()}
        return cls(top, [terms.get(top - i, Fraction(0)) for i in range(window)])


# --------------------------------------------------------------------------
#  series operations by name
# --------------------------------------------------------------------------

def series_mth_root(S: LaurentSeries, m: int) -> LaurentSeries:
    if m < 1:
        raise ValueError("root index must be a positive integer")
    if S.top != 0 or S.leading != 1:
        raise ValueError("expected a series of the form 1 + (negative powers)")
    return S.power(Fraction(1, m))


# --------------------------------------------------------------------------
#  Böttcher coordinates
# --------------------------------------------------------------------------

def _choose_a1(ell: Fraction, d: int) -> Fraction | None:
    r = rational_root(ell, d - 1)
    if r is None:
        return None
    return abs(r) if (d - 1) % 2 == 0 else r


def _normalized_boettcher(f: PolyQ, n: int) -> list[Fraction]:
    """Coefficients ``h_0 .. h_{n-1}`` of ``H`` with ``phi = a1 z H(1/z)``."""
    d = f.degree
    ell = f.leading
    # F(x) = f(z) / (l z^d) as a polynomial in x = 1/z
    F = [Fraction(0)] * (d + 1)
    for i in range(d + 1):
        F[d - i] = f.coeff(i) / ell
    # 1/F(x) up to x^n
    invF = [Fraction(0)] * n
    invF[0] = Fraction(1)
    for k in range(1, n):
        s = Fraction(0)
        for i in range(1, min(k, d) + 1):
            if F[i]:
                s += F[i] * invF[k - i]
        invF[k] = -s
    # y^j = x^(dj) / l^j * F^-j ; build F^-j iteratively
    jmax = (n - 1) // d
    lhs = [Fraction(0)] * n
    for k in range(min(n, d + 1)):
        lhs[k] = F[k]  # contribution of h_0 = 1
    h = [Fraction(1)] + [Fraction(0)] * (n - 1)
    g = [Fraction(1)] + [Fraction(0)] * (n - 1)  # H^d
    Fpow = [Fraction(1)] + [Fraction(0)] * (n - 1)  # F^-j, updated lazily
    j_done = 0
    for k in range(1, n):
        # incorporate every h_j with d*j <= k that is now known
        while j_done < jmax and d * (j_done + 1) <= k:
            j = j_done + 1
            Fpow = _mul_trunc(Fpow, invF, n - d * j)
            if h[j]:
                # F * y^j = x^(dj) l^-j F^(1-j)
                term = _mul_trunc(Fpow, F, n - d * j)
                scale = h[j] / ell**j
                for t, c in enumerate(term):
                    if c:
                        lhs[d * j + t] += scale * c
            j_done = j
        r = Fraction(0)
        for j in range(1, k):
            w = (d + 1) * j - k
            if w and h[j] and g[k - j]:
                r += w * h[j] * g[k - j]
        r /= k
        h[k] = (lhs[k] - r) / d
        g[k] = lhs[k]
    return h


def _mul_trunc(a: list, b: list, n: int) -> list:
    n = max(n, 0)
    out = []
    for t in range(n):
        s = Fraction(0)
        for i in range(min(t, len(a) - 1) + 1):
            if t - i < len(b) and a[i] and b[t - i]:
                s += a[i] * b[t - i]
        out.append(s)
    return out


def boettcher_series(f, N: int, mode: str = EXACT, a1=None, bits: int = DEFAULT_BITS) -> LaurentSeries:
    """Böttcher coordinate of ``f`` with ``N`` coefficients (exponents 1 .. 2-N).

    ``a1`` defaults to the rational ``(d-1)``-th root of the leading
    coefficient (positive when both signs work).  ``mode="interval"`` uses the
    positive real root as an interval instead.
    """
    f = as_poly(f)
    d = f.degree
    if d < 2:
        raise ValueError("Böttcher coordinates need degree >= 2")
    if N < 2:
        raise ValueError("window must be at least 2")
    ell = f.leading
    h = _normalized_boettcher(f, N)
    if mode == EXACT:
        if a1 is None:
            a1 = _choose_a1(ell, d)
            if a1 is None:
                raise NoRationalRoot(
                    f"leading coefficient {format_rational(ell)} has no rational {d - 1}-th root; "
                    "use interval mode")
        else:
            a1 = as_rational(a1)
            if a1 ** (d - 1) != ell:
                raise ValueError("a1^(d-1) must equal the leading coefficient")
        return LaurentSeries(1, [a1 * c for c in h], poly=f)
    if mode != INTERVAL:
        raise ValueError(f"unknown mode {mode!r}")
    if a1 is None:
        root = RealInterval(abs(ell), bits=bits + 16)
        root = (root.log() / (d - 1)).exp()
        if ell < 0 and (d - 1) % 2 == 1:
            root = -root
        a1 = root.with_bits(bits)
    return LaurentSeries(1, [a1 * c for c in h], poly=f)


@dataclass
class FunctionalEquationReport:
    passed: bool
    checked_top: int
    checked_low: int
    first_failure: int | None = None
    residual: Fraction | None = None

    def to_json(self) -> dict:
        out = {"passed": self.passed, "checked": [self.checked_top, self.checked_low]}
        if self.first_failure is not None:
            out["first_failure"] = self.first_failure
            out["residual"] = format_rational(self.residual) if isinstance(self.residual, Fraction) \
                else repr(self.residual)
        return out


def verify_functional_equation(f, phi: LaurentSeries) -> FunctionalEquationReport:
    """Compare ``phi(f(z))`` with ``phi(z)^d`` on their common window."""
    f = as_poly(f)
    if phi.window < 2:
        raise ValueError("series window must be at least 2")
    lhs = phi.substitute(f)
    rhs = phi ** f.degree
    top, low = max(lhs.top, rhs.top), max(lhs.low, rhs.low)
    for e in range(top, low - 1, -1):
        r = lhs.coeff(e) - rhs.coeff(e)
        if not _is_exact_zero(r) and not (isinstance(r, RealInterval) and r.contains(0)):
            return FunctionalEquationReport(False, top, low, e, r)
    return FunctionalEquationReport(True, top, low)


# --------------------------------------------------------------------------
#  evaluation
# --------------------------------------------------------------------------

@dataclass
class SeriesValue:
    value: object
    modulus: RealInterval
    heuristic: bool = True
    margin_ok: bool = False
    last_term: RealInterval | None = None

    def to_json(self) -> dict:
        return {
            "value": self.value.to_json(),
            "modulus": self.modulus.to_json(),
            "heuristic": self.heuristic,
            "margin_ok": self.margin_ok,
            "last_term": self.last_term.to_json() if self.last_term is not None else None,
        }


def eval_series(phi: LaurentSeries, a, f=None, bits: int = DEFAULT_BITS) -> SeriesValue:
    """Truncated-series value of ``phi`` at ``a``; never a certified value.

    A real rational ``a`` must be certified to escape under ``f`` (archimedean
    Green function status Escaped); a complex point must lie beyond the
    escape radius.  ``margin_ok`` records whether ``|a|`` also clears twice
    the escape radius, where the truncation is expected to be accurate.
    """
    from .green import ARCH, Status, escape_threshold, green_arch

    f = as_poly(f) if f is not None else phi.poly
    if f is None:
        raise ValueError("eval_series needs the polynomial (pass f=...)")
    R = escape_threshold(f, ARCH).bound
    if isinstance(a, complex):
        mag2 = Fraction(a.real) ** 2 + Fraction(a.imag) ** 2
        if not mag2 > R * R:
            raise ValueError(f"|a| must exceed the escape radius {format_rational(R)}")
    else:
        a = as_rational(a)
        mag2 = a * a
        if not mag2 > R * R and green_arch(f, a).status is not Status.ESCAPED:
            raise ValueError("the point is not certified to escape; the series value is meaningless")
    val = phi.evaluate(a, bits)
    mod = val.abs()
    e, c = phi.low, phi.coeffs[-1]
    r = RealInterval(mag2, bits=bits).sqrt()
    last = (r ** e if e >= 0 else (1 / r) ** (-e)) * (abs(c) if isinstance(c, Fraction) else c.abs())
    return SeriesValue(val, mod, heuristic=True, margin_ok=mag2 > 4 * R * R, last_term=last)


# --------------------------------------------------------------------------
#  semiconjugacies
# --------------------------------------------------------------------------

class SemiconjugacyError(ValueError):
    pass


@dataclass
class SemiconjugacyWitness:
    A: PolyQ
    Q: PolyQ
    delta: int
    zeta: Fraction | None = None
    order: int | None = None
    constant: bool = False
    counterexample: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.order is not None

    def to_json(self) -> dict:
        out = {"A": str(self.A), "Q": str(self.Q), "delta": self.delta}
        if self.zeta is not None:
            out["zeta"] = format_rational(self.zeta)
        if self.order is not None:
            out["order"] = self.order
        if self.counterexample:
            out["counterexample"] = self.counterexample
        return out


def verify_semiconjugacy(f, A, Q, N: int = 12) -> SemiconjugacyWitness:
    f, A, Q = as_poly(f), as_poly(A), as_poly(Q)
    if Q.degree != f.degree:
        raise SemiconjugacyError(f"deg Q = {Q.degree} differs from deg f = {f.degree}")
    lhs, rhs = f.compose(A), A.compose(Q)
    if lhs != rhs:
        diff = lhs - rhs
        e = diff.degree
        raise SemiconjugacyError(
            f"f(A(z)) != A(Q(z)): coefficient of z^{e} is {format_rational(lhs.coeff(e))} "
            f"versus {format_rational(rhs.coeff(e))}")
    delta = A.degree
    d = f.degree
    phi = boettcher_series(f, N)
    psi = boettcher_series(Q, N)
    ratio = phi.substitute(A) / (psi ** delta)
    w = SemiconjugacyWitness(A, Q, delta)
    for e, c in ratio.items():
        if e != 0 and c != 0:
            w.counterexample = {"exponent": e, "coefficient": format_rational(c)}
            return w
    zeta = ratio.coeff(0)
    w.constant, w.zeta = True, zeta
    acc = Fraction(1)
    for k in range(1, (d - 1) * delta + 1):
        acc *= zeta
        if acc == 1:
            w.order = k
            return w
    w.counterexample = {"reason": f"ratio {format_rational(zeta)} is not a root of unity of order <= {(d - 1) * delta}"}
    return w
