"""Canonical heights over Q, their algebraicity status, and independence checks.

``hhat(a) = sum_p c_p log p + g_inf(a)``; the finite part is kept as the
formal product ``H0 = prod p^c_p`` with exact rational exponents.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import log as _flog

from .green import (
    DEFAULT_BUDGET,
    DEFAULT_TOL,
    GreenResult,
    Status,
    green_arch,
    green_nonarch,
    relevant_primes,
)
from .linalg import row_echelon
from .numeric import DEFAULT_BITS, RealInterval, as_rational, check_prime, format_rational, log_of_rational
from .polydyn import (
    Integrability,
    PolyQ,
    PreperiodicKind,
    as_poly,
    classify_integrable,
    detect_preperiodic,
)


# --------------------------------------------------------------------------
#  formal products and logs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FormalProduct:
    """``prod p^e`` with exact rational exponents; the empty product is 1."""

    exponents: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def of(cls, mapping: dict[int, Fraction]) -> FormalProduct:
        return cls(tuple(sorted((p, Fraction(e)) for p, e in mapping.items() if e)))

    @classmethod
    def of_integer(cls, n: int) -> FormalProduct:
        from .numeric import prime_factors
        if n < 1:
            raise ValueError("formal products of positive integers only")
        return cls.of({p: Fraction(k) for p, k in prime_factors(n).items()})

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.exponents)

    def value(self) -> Fraction | None:
        """Exact rational value when every exponent is an integer."""
        out = Fraction(1)
        for p, e in self.exponents:
            if e.denominator != 1:
                return None
            out *= Fraction(p) ** int(e)
        return out

    def log_interval(self, bits: int = DEFAULT_BITS) -> RealInterval:
        acc = RealInterval(0, bits=bits)
        for p, e in self.exponents:
            acc = acc + log_of_rational(p, bits) * e
        return acc

    def __mul__(self, other: FormalProduct) -> FormalProduct:
        d = self.as_dict()
        for p, e in other.exponents:
            d[p] = d.get(p, Fraction(0)) + e
        return FormalProduct.of(d)

    def __pow__(self, k) -> FormalProduct:
        return FormalProduct.of({p: e * k for p, e in self.exponents})

    def __str__(self) -> str:
        if not self.exponents:
            return "1"
        parts = []
        for p, e in self.exponents:
            parts.append(str(p) if e == 1 else f"{p}^({format_rational(e)})")
        return " * ".join(parts)

    def to_json(self) -> dict:
        return {str(p): format_rational(e) for p, e in self.exponents}


@dataclass(frozen=True)
class FormalLog:
    """``log n`` for a positive integer ``n`` kept symbolically."""

    argument: int

    def interval(self, bits: int = DEFAULT_BITS) -> RealInterval:
        return log_of_rational(self.argument, bits)

    def product(self) -> FormalProduct:
        return FormalProduct.of_integer(self.argument)

    def __float__(self) -> float:
        return _flog(self.argument)

    def __str__(self) -> str:
        return "0" if self.argument == 1 else f"log {self.argument}"


def weil_height(a) -> FormalLog:
    a = as_rational(a)
    return FormalLog(max(abs(a.numerator), a.denominator))


# --------------------------------------------------------------------------
#  decomposition
# --------------------------------------------------------------------------

@dataclass
class HeightDecomposition:
    nonarch: dict[int, Fraction]
    arch: GreenResult
    total: RealInterval | None
    places: dict[str, GreenResult] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.flags

    @property
    def H0(self) -> FormalProduct:
        return FormalProduct.of(self.nonarch)

    def is_zero(self) -> bool:
        return self.complete and not self.nonarch and self.arch.status is Status.BOUNDED

    def to_json(self) -> dict:
        out = {
            "nonarch": {str(p): format_rational(c) for p, c in self.nonarch.items()},
            "arch": self.arch.to_json(),
            "total": self.total.to_json() if self.total is not None else None,
        }
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def canonical_height(f, a, tol=DEFAULT_TOL, budget: int = DEFAULT_BUDGET) -> HeightDecomposition:
    f = as_poly(f)
    if f.degree < 2:
        raise ValueError("canonical heights need degree >= 2")
    a = as_rational(a)
    tol = as_rational(tol)
    nonarch: dict[int, Fraction] = {}
    places: dict[str, GreenResult] = {}
    flags: list[str] = []
    for p in sorted(relevant_primes(f, a)):
        r = green_nonarch(f, a, p, budget=budget)
        places[str(p)] = r
        if r.status is Status.ESCAPED:
            nonarch[p] = r.c
        elif r.status is Status.UNKNOWN:
            flags.append(f"place {p}: unknown after {r.budget_used} iterations")
    arch = green_arch(f, a, tol=tol, budget=budget)
    places["inf"] = arch
    if arch.status is Status.UNKNOWN:
        flags.append("place inf: " + str(arch.certificate.get("reason", "unknown")))
        total = None
    else:
        total = FormalProduct.of(nonarch).log_interval() + arch.value()
    return HeightDecomposition(nonarch, arch, total, places, flags)


# --------------------------------------------------------------------------
#  algebraicity status
# --------------------------------------------------------------------------

class Verdict(str, enum.Enum):
    ALGEBRAIC = "AlgebraicCertified"
    TRANSCENDENTAL = "TranscendentalCertified"
    INTEGRABLE = "IntegrableCase"
    PREPERIODIC = "PreperiodicZero"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class HhatStatus:
    verdict: Verdict
    H0: FormalProduct | None = None
    decomposition: HeightDecomposition | None = None
    reasons: list[str] = field(default_factory=list)
    certificates: list[dict] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.verdict is not Verdict.INCONCLUSIVE

    def to_json(self) -> dict:
        out: dict = {}
        if self.decomposition is not None:
            out["hhat"] = self.decomposition.to_json()
        out["status"] = self.verdict.value
        if self.H0 is not None:
            out["H0"] = self.H0.to_json()
        if self.reasons:
            out["reasons"] = list(self.reasons)
        out["certificates"] = list(self.certificates)
        return out


def hhat_status(f, a, tol=DEFAULT_TOL, budget: int = DEFAULT_BUDGET) -> HhatStatus:
    f = as_poly(f)
    a = as_rational(a)
    verdict = classify_integrable(f)
    certs: list[dict] = [{"integrability": verdict.to_json()}]
    if verdict.kind is not Integrability.NON_INTEGRABLE:
        return HhatStatus(Verdict.INTEGRABLE, certificates=certs)
    pre = detect_preperiodic(f, a, budget=budget)
    certs.append({"preperiodicity": pre.to_json()})
    if pre.kind is PreperiodicKind.PREPERIODIC:
        dec = canonical_height(f, a, tol=tol, budget=budget)
        return HhatStatus(Verdict.PREPERIODIC, H0=FormalProduct(), decomposition=dec, certificates=certs)
    dec = canonical_height(f, a, tol=tol, budget=budget)
    certs.append({"arch": dec.arch.to_json()})
    if dec.arch.status is Status.ESCAPED:
        # escape at infinity already proves the orbit is infinite
        return HhatStatus(Verdict.TRANSCENDENTAL, decomposition=dec, certificates=certs)
    if dec.arch.status is Status.BOUNDED:
        if dec.flags:
            return HhatStatus(Verdict.INCONCLUSIVE, decomposition=dec, reasons=dec.flags, certificates=certs)
        return HhatStatus(Verdict.ALGEBRAIC, H0=dec.H0, decomposition=dec, certificates=certs)
    return HhatStatus(Verdict.INCONCLUSIVE, decomposition=dec,
                      reasons=dec.flags or ["archimedean status unknown"], certificates=certs)


# --------------------------------------------------------------------------
#  independence of non-archimedean parts
# --------------------------------------------------------------------------

class IndependenceKind(str, enum.Enum):
    INDEPENDENT = "IndependentCertified"
    HYPOTHESIS_FAILED = "HypothesisFailed"
    INCONCLUSIVE = "Inconclusive"


CONSEQUENCE = "the hhat values have full Q-linear rank, so no two of them are rational"


@dataclass
class IndependenceResult:
    kind: IndependenceKind
    primes: list[int] = field(default_factory=list)
    matrix: list[list[Fraction]] = field(default_factory=list)
    rank: int | None = None
    pivots: list[int] = field(default_factory=list)
    reason: str = ""

    def to_json(self) -> dict:
        out: dict = {"result": self.kind.value}
        if self.reason:
            out["reason"] = self.reason
        if self.matrix:
            out["primes"] = self.primes
            out["matrix"] = [[format_rational(x) for x in row] for row in self.matrix]
            out["rank"] = self.rank
            out["pivot_primes"] = [self.primes[j] for j in self.pivots]
        if self.kind is IndependenceKind.INDEPENDENT:
            out["consequence"] = CONSEQUENCE
        return out


def independence_check(entries, S, budget: int = DEFAULT_BUDGET) -> IndependenceResult:
    """Certify that the finite parts ``H_{i,0}`` are multiplicatively independent.

    Entry ``i`` must escape at ``S[i]`` and stay bounded at every other
    ``S[j]``; the exponent matrix over all primes involved must then have full
    row rank.
    """
    entries = [(as_poly(f), as_rational(a)) for f, a in entries]
    S = [check_prime(p) for p in S]
    r = len(entries)
    if r < 2 or len(S) != r:
        raise ValueError("need r >= 2 entries and exactly r primes")
    if len(set(S)) != r:
        raise ValueError("primes must be distinct")
    for i, (f, _) in enumerate(entries, start=1):
        if classify_integrable(f).integrable:
            raise ValueError(f"entry {i}: {f} is integrable")
    rows: list[dict[int, Fraction]] = []
    for i, (f, a) in enumerate(entries):
        for j in [i] + [j for j in range(r) if j != i]:
            p = S[j]
            g = green_nonarch(f, a, p, budget=budget)
            want = Status.ESCAPED if i == j else Status.BOUNDED
            if g.status is Status.UNKNOWN:
                return IndependenceResult(IndependenceKind.INCONCLUSIVE,
                                          reason=f"entry {i + 1}: status at {p} unknown")
            if g.status is not want:
                what = "not escaping" if i == j else "not bounded"
                return IndependenceResult(IndependenceKind.HYPOTHESIS_FAILED,
                                          reason=f"entry {i + 1} {what} at {p}")
        row: dict[int, Fraction] = {}
        for p in sorted(relevant_primes(f, a)):
            g = green_nonarch(f, a, p, budget=budget)
            if g.status is Status.UNKNOWN:
                return IndependenceResult(IndependenceKind.INCONCLUSIVE,
                                          reason=f"entry {i + 1}: status at {p} unknown")
            if g.status is Status.ESCAPED:
                row[p] = g.c
        rows.append(row)
    primes = sorted(set().union(*rows))
    matrix = [[row.get(p, Fraction(0)) for p in primes] for row in rows]
    _, pivots = row_echelon(matrix)
    res = IndependenceResult(IndependenceKind.INDEPENDENT, primes, matrix, len(pivots), pivots)
    if len(pivots) < r:
        res.kind = IndependenceKind.INCONCLUSIVE
        res.reason = f"exponent matrix has rank {len(pivots)} < {r}"
    return res
