"""Auxiliary polynomials ``A = sum_l P_l * Phi^l`` with low Laurent terms killed.

For ``Phi(z_1..z_r) = prod_i phi_i(z_i)^n_i`` the Laurent coefficient of
``z^j * Phi^l`` at a multi-exponent ``delta`` factors as
``prod_i [phi_i^(n_i l)]_(delta_i - j_i)``, so the linear system is assembled
from univariate power series only.  Unknowns are the coefficients of the
``P_l`` (degree <= L in each variable, l = 1..L); there is one equation per
``delta`` in ``[-C L, (n+1) L]^r``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .boettcher import LaurentSeries, NoRationalRoot, boettcher_series
from .green import Status, green_arch
from .linalg import mat_vec, nullspace_vector
from .numeric import DEFAULT_BITS, RealInterval, as_rational, bit_size, format_rational
from .polydyn import Integrability, PolyQ, as_poly, classify_integrable

MAX_ROWS = 20_000
MAX_UNKNOWNS = 20_000
_ALPHA_SEARCH_STEPS = 8
_ALPHA_SEARCH_BITS = 1 << 16


class AuxSystemTooLarge(RuntimeError):
    def __init__(self, rows: int, cols: int, max_rows: int, max_cols: int):
        self.rows, self.cols = rows, cols
        super().__init__(
            f"auxiliary system has {rows} equations and {cols} unknowns; "
            f"exact elimination is capped at {max_rows} x {max_cols}")


class InsufficientDepth(ValueError):
    def __init__(self, have: int, need: int):
        self.have, self.need = have, need
        super().__init__(f"series depth {have} is too small; need at least {need}")


# --------------------------------------------------------------------------
#  the value Phi(a_1, ..., a_r)
# --------------------------------------------------------------------------

@dataclass
class FormalAlpha:
    """``prod_i phi_i(a_i)^n_i`` rewritten over base points.

    When ``a_i = f^k(a_j)`` with the same ``f`` the factor becomes
    ``phi(a_j)^(n_i d^k)``; ``exponents`` maps ``(f, base point)`` to the
    total exponent.  If every total vanishes the value is exactly 1.
    """

    exponents: dict[tuple[PolyQ, Fraction], int]

    @property
    def exact(self) -> Fraction | None:
        return Fraction(1) if all(e == 0 for e in self.exponents.values()) else None

    def estimate(self, bits: int = DEFAULT_BITS) -> RealInterval:
        """Value with rigorous modulus ``exp(g_inf)`` and a heuristic sign.

        The sign of ``phi(a)`` is taken from its leading term ``a1 * a``.
        """
        acc = RealInterval(1, bits=bits)
        tol = Fraction(1, 2 ** max(bits - 32, 40))
        for (f, a), e in self.exponents.items():
            if e == 0:
                continue
            g = green_arch(f, a, tol=tol, bits=bits, max_precision=4 * bits)
            if g.status is not Status.ESCAPED:
                raise ValueError(f"{format_rational(a)} is not certified to escape under {f}")
            v = g.enclosure.exp()
            if boettcher_series(f, 2, mode="interval").leading.hi * a < 0:
                v = -v
            acc = acc * (v ** e if e > 0 else (1 / v) ** (-e))
        return acc

    def __str__(self) -> str:
        if self.exact is not None:
            return format_rational(self.exact)
        parts = [f"phi_[{f}]({format_rational(a)})^{e}" for (f, a), e in self.exponents.items() if e]
        return " * ".join(parts)


def formal_alpha(f_list, a_list, n_list) -> FormalAlpha:
    base: list[tuple[int, int]] = []
    orbits: list[list[Fraction]] = []
    for i, (f, a) in enumerate(zip(f_list, a_list)):
        orb = [a]
        for _ in range(_ALPHA_SEARCH_STEPS):
            if bit_size(orb[-1]) > _ALPHA_SEARCH_BITS:
                break
            orb.append(f(orb[-1]))
        orbits.append(orb)
        found = (i, 0)
        for j in range(i):
            if f_list[j] == f and a in orbits[j]:
                bj, kj = base[j]
                found = (bj, kj + orbits[j].index(a))
                break
        base.append(found)
    exps: dict[tuple[PolyQ, Fraction], int] = {}
    for i, (j, k) in enumerate(base):
        key = (f_list[j], a_list[j])
        exps[key] = exps.get(key, 0) + n_list[i] * f_list[i].degree ** k
    return FormalAlpha(exps)


# --------------------------------------------------------------------------
#  instances
# --------------------------------------------------------------------------

@dataclass
class AuxInstance:
    f_list: list[PolyQ]
    a_list: list[Fraction]
    n_list: list[int]
    C: int | None = None
    L: int | None = None
    alpha: FormalAlpha = field(init=False)

    def __post_init__(self):
        self.f_list = [as_poly(f) for f in self.f_list]
        self.a_list = [as_rational(a) for a in self.a_list]
        self.n_list = [int(k) for k in self.n_list]
        r = len(self.f_list)
        if r < 1 or len(self.a_list) != r or len(self.n_list) != r:
            raise ValueError("f_list, a_list and n_list must have the same positive length")
        if any(k == 0 for k in self.n_list):
            raise ValueError("exponents n_i must be nonzero")
        degs = {f.degree for f in self.f_list}
        if len(degs) != 1 or min(degs) < 2:
            raise ValueError("all polynomials must share one degree d >= 2")
        for i, f in enumerate(self.f_list, start=1):
            if classify_integrable(f).kind is not Integrability.NON_INTEGRABLE:
                raise ValueError(f"f_{i} = {f} is integrable")
        if self.C is None:
            self.C = self.n + 2
        if self.L is None:
            self.L = (2 * self.C) ** r + 1
        if not self.C > self.n + 1:
            raise ValueError(f"need C > n + 1 = {self.n + 1}, got C = {self.C}")
        if not self.L > (2 * self.C) ** r:
            raise ValueError(f"need L > (2C)^r = {(2 * self.C) ** r}, got L = {self.L}")
        self.alpha = formal_alpha(self.f_list, self.a_list, self.n_list)

    @property
    def r(self) -> int:
        return len(self.f_list)

    @property
    def d(self) -> int:
        return self.f_list[0].degree

    @property
    def n(self) -> int:
        return max(self.n_list)

    @property
    def exponent_range(self) -> tuple[int, int]:
        return -self.C * self.L, (self.n + 1) * self.L

    @property
    def num_unknowns(self) -> int:
        return self.L * (self.L + 1) ** self.r

    @property
    def num_equations(self) -> int:
        lo, hi = self.exponent_range
        return (hi - lo + 1) ** self.r

    @property
    def required_depth(self) -> int:
        return max(2, (self.C + self.n + 2) * self.L)

    @classmethod
    def from_json(cls, obj) -> AuxInstance:
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls([as_poly(f) for f in obj["f"]], obj["a"], obj["n"], obj.get("C"), obj.get("L"))

    def to_json(self) -> dict:
        return {
            "f": [str(f) for f in self.f_list],
            "a": [format_rational(a) for a in self.a_list],
            "n": list(self.n_list),
            "C": self.C,
            "L": self.L,
            "alpha": str(self.alpha),
        }


# --------------------------------------------------------------------------
#  linear system
# --------------------------------------------------------------------------

@dataclass
class AuxSystem:
    instance: AuxInstance
    rows: list[dict[int, Fraction]]
    row_exponents: list[tuple[int, ...]]
    columns: list[tuple[int, tuple[int, ...]]]
    depth: int

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.columns)


def _columns(r: int, L: int) -> list[tuple[int, tuple[int, ...]]]:
    return [(l, j) for l in range(1, L + 1) for j in itertools.product(range(L + 1), repeat=r)]


def _power_tables(inst: AuxInstance, depth: int) -> list[list[LaurentSeries]]:
    """``tables[i][l-1] = phi_i^(n_i l)`` computed directly by the power recurrence."""
    tables = []
    for f, k in zip(inst.f_list, inst.n_list):
        try:
            phi = boettcher_series(f, depth)
        except NoRationalRoot as exc:
            raise ValueError(f"exact Böttcher series unavailable: {exc}") from None
        tables.append([phi ** (k * l) for l in range(1, inst.L + 1)])
    return tables


def build_aux_system(inst: AuxInstance, depth: int | None = None,
                     max_rows: int = MAX_ROWS, max_unknowns: int = MAX_UNKNOWNS) -> AuxSystem:
    need = inst.required_depth
    if depth is None:
        depth = need
    elif depth < need:
        raise InsufficientDepth(depth, need)
    rows_n, cols_n = inst.num_equations, inst.num_unknowns
    if rows_n > max_rows or cols_n > max_unknowns:
        raise AuxSystemTooLarge(rows_n, cols_n, max_rows, max_unknowns)
    tables = _power_tables(inst, depth)
    cols = _columns(inst.r, inst.L)
    lo, hi = inst.exponent_range
    row_exps = list(itertools.product(range(lo, hi + 1), repeat=inst.r))
    rows: list[dict[int, Fraction]] = []
    for delta in row_exps:
        row: dict[int, Fraction] = {}
        for c, (l, j) in enumerate(cols):
            v = Fraction(1)
            for i in range(inst.r):
                v *= tables[i][l - 1].coeff(delta[i] - j[i])
                if not v:
                    break
            if v:
                row[c] = v
        rows.append(row)
    return AuxSystem(inst, rows, row_exps, cols, depth)


def solve_nullspace(M, ncols: int | None = None) -> list[Fraction]:
    """Nonzero exact kernel vector (first nonzero entry positive, coprime integers)."""
    if isinstance(M, AuxSystem):
        rows, ncols = M.rows, len(M.columns)
    else:
        rows = M
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
    v = nullspace_vector(rows, ncols)
    if v is None:
        raise ValueError("the matrix has a trivial kernel")
    return v


# --------------------------------------------------------------------------
#  the polynomial P
# --------------------------------------------------------------------------

@dataclass
class AuxPolynomial:
    r: int
    L: int
    coeffs: dict[tuple[int, tuple[int, ...]], Fraction]

    @classmethod
    def from_vector(cls, system: AuxSystem, vec: list[Fraction]) -> AuxPolynomial:
        inst = system.instance
        coeffs = {col: x for col, x in zip(system.columns, vec) if x}
        if not coeffs:
            raise ValueError("the zero vector does not define an auxiliary polynomial")
        return cls(inst.r, inst.L, coeffs)

    def P(self, l: int) -> dict[tuple[int, ...], Fraction]:
        return {j: c for (ll, j), c in self.coeffs.items() if ll == l}

    def is_zero(self) -> bool:
        return not any(self.coeffs.values())

    def evaluate(self, xs, y):
        """``sum_l P_l(xs) * y^l``; exact for rationals, interval otherwise."""
        acc = None
        for (l, j), c in self.coeffs.items():
            t = y ** l * c
            for x, e in zip(xs, j):
                if e:
                    t = t * x ** e
            acc = t if acc is None else acc + t
        return acc if acc is not None else Fraction(0)

    def to_json(self) -> list[dict]:
        out = []
        for l in range(1, self.L + 1):
            terms = [{"exponents": list(j), "coeff": format_rational(c)} for j, c in sorted(self.P(l).items())]
            out.append({"l": l, "terms": terms})
        return out


def solve_aux(inst: AuxInstance, **kw) -> tuple[AuxSystem, AuxPolynomial]:
    system = build_aux_system(inst, **kw)
    vec = solve_nullspace(system)
    return system, AuxPolynomial.from_vector(system, vec)


# --------------------------------------------------------------------------
#  independent re-extraction
# --------------------------------------------------------------------------

@dataclass
class AnnihilationReport:
    checked: int
    nonzero: dict[tuple[int, ...], Fraction]

    @property
    def passed(self) -> bool:
        return not self.nonzero


def verify_annihilation(P: AuxPolynomial, inst: AuxInstance) -> AnnihilationReport:
    """Expand ``A`` by multivariate convolution and read off the designated terms.

    Powers of ``Phi`` are built by repeated multiplication (not the power
    recurrence used for the matrix) and each ``P_l`` is convolved in.
    """
    lo, hi = inst.exponent_range
    floor = lo - inst.L  # exponents of Phi^l below this never reach the window
    depth = inst.required_depth
    base = []
    for f, k in zip(inst.f_list, inst.n_list):
        phi = boettcher_series(f, depth)
        step = phi if k > 0 else phi.inverse()
        acc = step
        for _ in range(abs(k) - 1):
            acc = acc * step
        base.append(acc)
    total: dict[tuple[int, ...], Fraction] = {}
    powers = list(base)
    for l in range(1, P.L + 1):
        if l > 1:
            powers = [p * b for p, b in zip(powers, base)]
        Pl = P.P(l)
        if not Pl:
            continue
        factors = [[(e, c) for e, c in p.items() if c and e >= floor] for p in powers]
        for p in powers:
            if p.low > floor:
                raise InsufficientDepth(depth, depth + p.low - floor)
        for combo in itertools.product(*factors):
            e0 = tuple(e for e, _ in combo)
            v = Fraction(1)
            for _, c in combo:
                v *= c
            for j, pc in Pl.items():
                key = tuple(a + b for a, b in zip(e0, j))
                if all(lo <= x <= hi for x in key):
                    total[key] = total.get(key, Fraction(0)) + v * pc
    nonzero = {k: v for k, v in total.items() if v}
    return AnnihilationReport(inst.num_equations, nonzero)


# --------------------------------------------------------------------------
#  residuals along orbits
# --------------------------------------------------------------------------

@dataclass
class DecayRow:
    k: int
    magnitude: RealInterval
    exact: Fraction | None = None
    heuristic: bool = False


def aux_residual_decay(P: AuxPolynomial, inst: AuxInstance, k_max: int,
                       bits: int = 512) -> list[DecayRow]:
    """``|P(f_1^k(a_1), ..., f_r^k(a_r), alpha^(d^k))|`` for ``k = 0..k_max``.

    With an exactly known ``alpha`` the residuals are exact rationals;
    otherwise ``alpha`` comes from truncated series and rows are flagged.
    """
    for i, (f, a) in enumerate(zip(inst.f_list, inst.a_list), start=1):
        g = green_arch(f, a)
        if g.status is not Status.ESCAPED:
            raise ValueError(f"a_{i} = {format_rational(a)} is not certified to escape (status {g.status.value})")
    alpha = inst.alpha.exact
    est = None if alpha is not None else inst.alpha.estimate(bits=bits)
    d = inst.d
    pts = list(inst.a_list)
    rows = []
    for k in range(k_max + 1):
        if alpha is not None:
            val = P.evaluate(pts, alpha ** (d ** k))
            mag = abs(Fraction(val))
            rows.append(DecayRow(k, RealInterval(mag, bits=bits), mag))
        else:
            xs = [RealInterval(x, bits=bits) for x in pts]
            val = P.evaluate(xs, est ** (d ** k))
            rows.append(DecayRow(k, val.abs(), None, True))
        if k < k_max:
            pts = [f(x) for f, x in zip(inst.f_list, pts)]
    return rows


def decay_csv(rows: list[DecayRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "magnitude_upper"])
    for row in rows:
        w.writerow([row.k, row.magnitude.to_json()["hi"]])
    return buf.getvalue()


def residual_check(P: AuxPolynomial, system: AuxSystem) -> bool:
    """Matrix-vector re-check of the kernel vector."""
    vec = [P.coeffs.get(col, Fraction(0)) for col in system.columns]
    return all(x == 0 for x in mat_vec(system.rows, vec))
