import random
from fractions import Fraction

import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from canheight.linalg import mat_vec, nullspace_vector, rank, row_echelon


def test_single_row_kernel():
    assert nullspace_vector([[1, 1]], 2) == [1, -1]


def test_two_by_three_kernel():
    v = nullspace_vector([[1, 0, 1], [0, 1, 1]], 3)
    assert v in ([-1, -1, 1], [1, 1, -1])


def test_trivial_kernel():
    assert nullspace_vector([[1, 2], [3, 4]], 2) is None


def test_rational_entries_and_sparse_rows():
    rows = [{0: Fraction(1, 2), 2: Fraction(-1, 3)}, {1: 2, 2: 2}]
    v = nullspace_vector(rows, 3)
    assert mat_vec(rows, v) == [0, 0]
    assert v == [2, -3, 3]


def test_rank_matches_sympy():
    rng = random.Random(5)
    for _ in range(25):
        m, n = rng.randint(1, 6), rng.randint(1, 6)
        rows = [[Fraction(rng.randint(-3, 3), rng.choice([1, 2, 3])) for _ in range(n)] for _ in range(m)]
        if rng.random() < 0.5 and m > 1:
            rows[-1] = [a + 2 * b for a, b in zip(rows[0], rows[1 % m])]
        ref = sp.Matrix([[sp.Rational(x.numerator, x.denominator) for x in r] for r in rows]).rank()
        assert rank(rows) == ref


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5), st.integers(2, 7), st.data())
def test_kernel_vector_is_normalised(m, n, data):
    rows = [data.draw(st.lists(st.integers(-4, 4), min_size=n, max_size=n)) for _ in range(m)]
    v = nullspace_vector(rows, n)
    if rank(rows) == n:
        assert v is None
        return
    assert v is not None and any(v)
    assert mat_vec(rows, v) == [0] * m
    assert all(x.denominator == 1 for x in v)
    nz = [int(x) for x in v if x]
    assert nz[0] > 0
    g = 0
    for x in nz:
        g = sp.igcd(g, x)
    assert g == 1


def test_echelon_pivots_leftmost_topmost():
    _, piv = row_echelon([[0, 1, 1], [1, 0, 0], [0, 2, 2]])
    assert piv == [0, 1]
