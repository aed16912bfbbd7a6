"""Fraction-free elimination over Q: rank and kernel vectors.

Rows are cleared of denominators first, then eliminated with Bareiss'
one-step division so that every intermediate entry stays an integer minor.
Pivots are chosen in row-major order (leftmost column with a nonzero entry
among the remaining rows, topmost such row), which makes results
deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

import gmpy2
from gmpy2 import mpz


def _integer_rows(rows: Sequence[Sequence]) -> list[list]:
    out = []
    for row in rows:
        q = [Fraction(x) for x in row]
        m = lcm(*(x.denominator for x in q)) if q else 1
        out.append([mpz(x.numerator * (m // x.denominator)) for x in q])
    return out


def _sparse(rows: list[list]) -> list[dict[int, object]]:
    return [{j: x for j, x in enumerate(r) if x} for r in rows]


def row_echelon(rows: Sequence[Sequence], ncols: int | None = None) -> tuple[list[dict[int, object]], list[int]]:
    """Bareiss echelon form of an integer-scaled copy of ``rows``.

    Returns the pivot rows (sparse dicts column -> mpz) and pivot columns.
    Accepts dense rows or sparse ``dict`` rows.
    """
    if rows and isinstance(rows[0], dict):
        work = []
        for r in rows:
            m = lcm(*(Fraction(x).denominator for x in r.values())) if r else 1
            work.append({j: mpz(Fraction(x).numerator * (m // Fraction(x).denominator)) for j, x in r.items() if x})
    else:
        work = _sparse(_integer_rows(rows))
    pivots: list[int] = []
    echelon: list[dict[int, object]] = []
    prev = mpz(1)
    remaining = [r for r in work if r]
    while remaining:
        col = min(min(r) for r in remaining)
        k = next(i for i, r in enumerate(remaining) if col in r)
        prow = remaining.pop(k)
        pv = prow[col]
        nxt = []
        for r in remaining:
            a = r.get(col)
            if a is None:
                # Bareiss step with a zero entry: scale by pv / prev exactly
                nr = {j: gmpy2.divexact(x * pv, prev) for j, x in r.items()}
            else:
                keys = set(r) | set(prow)
                keys.discard(col)
                nr = {}
                for j in keys:
                    x = gmpy2.divexact(r.get(j, 0) * pv - a * prow.get(j, 0), prev)
                    if x:
                        nr[j] = x
            if nr:
                nxt.append(nr)
        echelon.append(prow)
        pivots.append(col)
        prev = pv
        remaining = nxt
    return echelon, pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(row_echelon(rows)[1])


def nullspace_vector(rows: Sequence[Sequence], ncols: int) -> list[Fraction] | None:
    """A nonzero kernel vector, or ``None`` if the kernel is trivial.

    The free variable is the first non-pivot column, set to 1; the others are
    zero.  The vector is scaled to coprime integers with its first nonzero
    entry positive.
    """
    echelon, pivots = row_echelon(rows, ncols)
    pivset = set(pivots)
    free = next((j for j in range(ncols) if j not in pivset), None)
    if free is None:
        return None
    x: dict[int, Fraction] = {free: Fraction(1)}
    for prow, col in zip(reversed(echelon), reversed(pivots)):
        s = sum((Fraction(int(v)) * x[j] for j, v in prow.items() if j != col and j in x), Fraction(0))
        if s:
            x[col] = -s / int(prow[col])
    vec = [x.get(j, Fraction(0)) for j in range(ncols)]
    m = lcm(*(v.denominator for v in vec))
    ints = [int(v * m) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, v)
    first = next(v for v in ints if v)
    sign = 1 if first > 0 else -1
    return [Fraction(sign * v // g) for v in ints]


def mat_vec(rows: Sequence[Sequence], v: Sequence[Fraction]) -> list[Fraction]:
    out = []
    for r in rows:
        if isinstance(r, dict):
            out.append(sum((Fraction(c) * v[j] for j, c in r.items()), Fraction(0)))
        else:
            out.append(sum((Fraction(c) * x for c, x in zip(r, v)), Fraction(0)))
    return out
