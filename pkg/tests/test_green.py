import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canheight.green import (
    ARCH,
    Place,
    Status,
    escape_threshold,
    escaped_beyond,
    green,
    green_arch,
    green_nonarch,
    relevant_primes,
)
from canheight.numeric import RealInterval, valuation
from canheight.polydyn import PolyQ, orbit, parse_poly

F = parse_poly("z^2 + 1/2")
# 2^-60 * log|f^60(1/3)| at 256 bits (mpmath)
GSTAR = Fraction("0.04992314764274040451605075074895099339958")
LOG2 = Fraction("0.69314718055994530941723212145817656807550013436026")


def brute_c(f: PolyQ, a, p: int, n: int) -> Fraction:
    """``-v_p(f^n(a)) / d^n`` from the exact orbit."""
    z = orbit(f, a, n)[n]
    return Fraction(-valuation(z, p), f.degree**n)


class TestThreshold:
    def test_unit_case(self):
        assert escape_threshold(F, Place(3)).bound == 1

    def test_rounded_up_power(self):
        th = escape_threshold(F, Place(2))
        assert th.bound == 2 and th.log_bound == Fraction(1, 2)

    def test_power_map_arch(self):
        assert escape_threshold(parse_poly("z^2"), ARCH).bound == 2

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.fractions(min_value=-20, max_value=20, max_denominator=30), min_size=3, max_size=4)
           .filter(lambda c: c[-1] != 0), st.sampled_from([2, 3, 5]), st.integers(1, 6))
    def test_escape_grows_at_finite_place(self, coeffs, p, k):
        f = PolyQ(coeffs)
        th = escape_threshold(f, Place(p))
        z = Fraction(1, p ** (int(th.log_bound) + k))
        assert escaped_beyond(th, z)
        fz = f(z)
        assert -valuation(fz, p) == valuation(f.leading, p) * -1 + f.degree * -valuation(z, p)
        assert escaped_beyond(th, fz)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.fractions(min_value=-20, max_value=20, max_denominator=30), min_size=3, max_size=4)
           .filter(lambda c: c[-1] != 0), st.fractions(min_value=0, max_value=5), st.booleans())
    def test_arch_growth(self, coeffs, extra, neg):
        f = PolyQ(coeffs)
        R = escape_threshold(f, ARCH).bound
        z = (R + extra + Fraction(1, 1000)) * (-1 if neg else 1)
        fz = f(z)
        assert abs(fz) > 2 * abs(z)
        assert abs(fz) >= abs(f.leading) * abs(z) ** f.degree / 2


class TestNonArch:
    def test_three(self):
        r = green_nonarch(F, Fraction(1, 3), 3)
        assert r.status is Status.ESCAPED and r.c == 1 and r.n0 == 0

    def test_two(self):
        r = green_nonarch(F, Fraction(1, 3), 2)
        assert r.status is Status.ESCAPED and r.c == Fraction(1, 2) and r.n0 == 1

    def test_five_bounded(self):
        r = green_nonarch(F, Fraction(1, 3), 5)
        assert r.status is Status.BOUNDED and r.value() == RealInterval(0)

    def test_brute_force_valuations(self):
        for n in range(1, 6):
            z = orbit(F, Fraction(1, 3), n)[n]
            assert valuation(z, 3) == -(2**n)
            assert valuation(z, 2) == -(2 ** (n - 1))

    def test_closed_form_consistency(self):
        rng = random.Random(7)
        seen = 0
        while seen < 20:
            f = PolyQ([Fraction(rng.randint(-9, 9), rng.choice([1, 2, 3, 4, 9])), rng.randint(-3, 3),
                       Fraction(rng.choice([1, 2, 3, -1]), rng.choice([1, 2, 5]))])
            p = rng.choice([2, 3, 5])
            a = Fraction(rng.randint(1, 30), p ** rng.randint(1, 2))
            r = green_nonarch(f, a, p)
            if r.status is not Status.ESCAPED:
                continue
            seen += 1
            assert r.c > 0
            cpp = Fraction(-valuation(f.leading, p), f.degree - 1)
            for n in range(r.n0, r.n0 + 6):
                cn = -valuation(orbit(f, a, n)[n], p)
                assert r.c * f.degree**n == cn + cpp
            for n in range(1, 9):
                assert abs(r.c - brute_c(f, a, p, n)) <= abs(cpp) / Fraction(f.degree) ** n

    def test_functional_equation(self):
        for a in (Fraction(1, 3), Fraction(5, 9), Fraction(7, 6)):
            for p in (2, 3):
                g0, g1 = green_nonarch(F, a, p), green_nonarch(F, F(a), p)
                assert g0.escaped and g1.escaped and g1.c == 2 * g0.c

    def test_json(self):
        j = green_nonarch(F, Fraction(1, 3), 2).to_json()
        assert j["place"] == "2" and j["status"] == "Escaped" and j["c"] == "1/2" and j["n0"] == 1


class TestArch:
    def test_power_map(self):
        r = green_arch(parse_poly("z^2"), 2, tol=Fraction(1, 10**12))
        assert r.escaped and r.enclosure.contains(LOG2) and r.enclosure.width <= Fraction(1, 10**12)

    def test_cycle(self):
        r = green_arch(parse_poly("z^2 - 1"), 0)
        assert r.status is Status.BOUNDED and "cycle" in r.certificate

    def test_against_high_precision_oracle(self):
        r = green_arch(F, Fraction(1, 3), tol=Fraction(1, 10**9))
        assert r.escaped and r.enclosure.width <= Fraction(1, 10**9)
        assert r.enclosure.lo <= GSTAR + Fraction(1, 10**30) and r.enclosure.hi >= GSTAR - Fraction(1, 10**30)

    def test_trapping_box(self):
        r = green_arch(parse_poly("z^2 - 1"), Fraction(1, 2))
        assert r.status is Status.BOUNDED
        f = parse_poly("z^2 - 1")
        box = RealInterval.from_json(r.certificate["trap_box"])
        assert all(box.contains(f.eval_interval(piece)) for piece in box.split(64))
        assert box.contains(orbit(f, Fraction(1, 2), r.certificate["index"])[-1])

    def test_unknown_is_honest(self):
        # z^2 - 2 at 1/3: bounded but chaotic; no cycle, no trapping box inside [-2, 2]
        r = green_arch(parse_poly("z^2 - 2"), Fraction(1, 3), budget=40)
        assert r.status in (Status.UNKNOWN, Status.BOUNDED)
        assert r.value() is None or r.value() == RealInterval(0)

    def test_functional_equation(self):
        tol = Fraction(1, 2**40)
        for a in (Fraction(1, 3), Fraction(7, 5), Fraction(-3, 2)):
            g0, g1 = green_arch(F, a, tol=tol), green_arch(F, F(a), tol=tol)
            assert g0.enclosure.width <= 2 * tol and g1.enclosure.width <= 2 * tol
            assert (g0.enclosure * 2).overlaps(g1.enclosure)
            assert g0.enclosure.lo >= -tol

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            green_arch(F, 1, tol=0)


def test_relevant_primes():
    assert relevant_primes(F, Fraction(1, 3)) == {2, 3}
    assert relevant_primes(parse_poly("z^2 - 1"), Fraction(1, 2)) == {2}
    assert relevant_primes(parse_poly("z^2"), 7) == set()


def test_dispatch_and_place_parsing():
    assert green(F, Fraction(1, 3), "inf").place == ARCH
    assert green(F, Fraction(1, 3), "5").status is Status.BOUNDED
    with pytest.raises(ValueError):
        Place.parse("4")
