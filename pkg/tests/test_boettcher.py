import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canheight.boettcher import (
    LaurentSeries,
    NoRationalRoot,
    SemiconjugacyError,
    WindowError,
    boettcher_series,
    eval_series,
    series_mth_root,
    verify_functional_equation,
    verify_semiconjugacy,
)
from canheight.green import green_arch
from canheight.numeric import RealInterval, interval_exp
from canheight.polydyn import PolyQ, chebyshev, parse_poly

Z = LaurentSeries.monomial(1, 1, window=8)

# exp of the archimedean Green function (mpmath, 30 digits)
EXP_G = {
    ("z^2 + 1/2", 4): Fraction("4.06388635606645251550324281965"),
    ("z^2 + 1/2", 6): Fraction("6.04208997298777177943494055915"),
    ("z^2 + 1/2", 10): Fraction("10.0250929000452843553879789713"),
    ("z^2 - 2", 4): Fraction("3.73205080756887729352744634151"),
    ("z^2 - 2", 6): Fraction("5.82842712474619009760337744842"),
    ("z^2 - 2", 10): Fraction("9.89897948556635619639456814941"),
}
GOLDEN_SQ = Fraction("2.6180339887498948482045868343656")


def catalan(k: int) -> int:
    return comb(2 * k, k) // (k + 1)


def series_strategy(max_top=3, max_window=8):
    coeff = st.fractions(min_value=-4, max_value=4, max_denominator=5)
    return st.builds(
        lambda top, cs: LaurentSeries(top, cs),
        st.integers(-2, max_top),
        st.lists(coeff, min_size=1, max_size=max_window).filter(lambda c: c[0] != 0),
    )


class TestSolver:
    def test_power_map(self):
        phi = boettcher_series(parse_poly("z^2"), 20)
        assert phi.top == 1 and phi.window == 20
        assert phi.coeffs == [1] + [0] * 19

    def test_chebyshev_catalan(self):
        phi = boettcher_series(chebyshev(2), 20)
        for e in range(1, -19, -1):
            if e == 1:
                want = 1
            elif e % 2 == 0:
                want = 0
            else:
                want = -catalan((-e - 1) // 2)
            assert phi.coeff(e) == want, e

    def test_quadratic_hand_value(self):
        phi = boettcher_series(parse_poly("z^2 + 1/2"), 6)
        assert phi.coeff(1) == 1 and phi.coeff(0) == 0 and phi.coeff(-1) == Fraction(1, 4)

    def test_non_monic(self):
        f = parse_poly("4z^3 - z + 2")
        phi = boettcher_series(f, 12)
        assert phi.coeff(1) ** 2 == 4
        assert verify_functional_equation(f, phi).passed

    def test_no_rational_root(self):
        with pytest.raises(NoRationalRoot, match="interval"):
            boettcher_series(parse_poly("2z^3 + 1"), 8)

    def test_interval_mode(self):
        f = parse_poly("2z^3 + 1")
        phi = boettcher_series(f, 8, mode="interval")
        a1 = phi.coeff(1)
        assert isinstance(a1, RealInterval) 
        assert (a1 * a1).contains(2) and a1.lo > 0
        assert verify_functional_equation(f, phi).passed

    def test_rejects_small_window(self):
        with pytest.raises(ValueError):
            boettcher_series(parse_poly("z^2"), 1)

    def test_random_functional_equation(self):
        rng = random.Random(17)
        for _ in range(10):
            d = rng.choice([2, 3])
            f = PolyQ([Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(d)] + [1])
            assert verify_functional_equation(f, boettcher_series(f, 16)).passed

    @pytest.mark.parametrize("text", ["z^3 + z + 1", "z^3 - 1/2", "4z^3 - z"])
    def test_sign_uniqueness(self, text):
        # for odd d both square roots of the leading coefficient are rational
        f = parse_poly(text)
        phi = boettcher_series(f, 14)
        a1 = phi.coeff(1)
        neg = boettcher_series(f, 14, a1=-a1)
        assert verify_functional_equation(f, neg).passed
        assert neg.coeffs == [-c for c in phi.coeffs]

    def test_window_soundness(self):
        f = parse_poly("z^3 - 2z + 1/3")
        small, big = boettcher_series(f, 8), boettcher_series(f, 20)
        assert all(small.coeff(e) == big.coeff(e) for e in range(small.top, small.low - 1, -1))


class TestRing:
    def test_square(self):
        s = LaurentSeries(1, [1, 0, 1, 0, 0])
        sq = s * s
        assert [sq.coeff(e) for e in (2, 1, 0, -1, -2)] == [1, 0, 2, 0, 1]

    def test_inverse_of_z(self):
        inv = LaurentSeries.monomial(1, 1, window=5).inverse()
        assert inv.top == -1 and inv.window == 5 and inv.coeffs == [1, 0, 0, 0, 0]

    def test_substitute_square(self):
        phi = LaurentSeries(1, [1, 0, -1])
        out = phi.substitute(parse_poly("z^2"))
        assert out.coeff(2) == 1 and out.coeff(0) == 0 and out.coeff(-2) == -1

    def test_below_window_raises(self):
        s = LaurentSeries(1, [1, 2])
        with pytest.raises(WindowError):
            s.coeff(-1)
        assert s.coeff(5) == 0

    def test_product_window_is_min(self):
        a, b = LaurentSeries(2, [1] * 6), LaurentSeries(-1, [3] * 4)
        assert (a * b).window == 4

    def test_str_and_json(self):
        s = LaurentSeries(1, [1, 0, Fraction(1, 4)])
        assert str(s).endswith("O(z^-2)")
        assert LaurentSeries.from_json(s.to_json()).coeffs == s.coeffs

    @settings(max_examples=60, deadline=None)
    @given(series_strategy(), series_strategy())
    def test_product_window_sound(self, a, b):
        """Every reported coefficient equals the exact product of the known parts."""
        p = a * b
        for e in range(p.top, p.low - 1, -1):
            exact = sum((c1 * b.coeff(e - e1) for e1, c1 in a.items()
                         if b.low <= e - e1 <= b.top), Fraction(0))
            # contributions from unknown tails would land below p.low
            assert p.coeff(e) == exact

    @settings(max_examples=40, deadline=None)
    @given(series_strategy(max_window=6), st.integers(1, 3))
    def test_substitution_sound(self, a, k):
        A = parse_poly("z^2 + z") if k == 1 else parse_poly("z^3 - 2")
        short = a.substitute(A)
        longer = LaurentSeries(a.top, list(a.coeffs) + [Fraction(k)] * 5).substitute(A)
        for e in range(short.top, short.low - 1, -1):
            assert short.coeff(e) == longer.coeff(e)


class TestRoot:
    def test_binomial_half(self):
        r = series_mth_root(LaurentSeries(0, [1, 1, 0, 0, 0]), 2)
        assert [r.coeff(-k) for k in range(4)] == [1, Fraction(1, 2), Fraction(-1, 8), Fraction(1, 16)]
        sq = r * r
        assert [sq.coeff(-k) for k in range(5)] == [1, 1, 0, 0, 0]

    def test_identity(self):
        s = LaurentSeries(0, [1, 0, 1, 0])
        assert series_mth_root(s, 1).coeffs == s.coeffs

    def test_shape_rejected(self):
        with pytest.raises(ValueError):
            series_mth_root(LaurentSeries(1, [1, 1]), 2)
        with pytest.raises(ValueError):
            series_mth_root(LaurentSeries(0, [2, 1]), 2)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=4), min_size=1, max_size=7),
           st.integers(1, 5))
    def test_round_trip(self, tail, m):
        S = LaurentSeries(0, [Fraction(1)] + tail)
        back = series_mth_root(S, m) ** m
        assert back.window == S.window
        assert all(back.coeff(e) == S.coeff(e) for e in range(0, S.low - 1, -1))


class TestFunctionalEquation:
    def test_power_map_identity(self):
        assert verify_functional_equation(parse_poly("z^2"), LaurentSeries(1, [1, 0, 0])).passed

    def test_chebyshev_passes(self):
        assert verify_functional_equation(chebyshev(2), boettcher_series(chebyshev(2), 12)).passed

    def test_identity_fails_for_chebyshev(self):
        rep = verify_functional_equation(chebyshev(2), LaurentSeries(1, [1, 0, 0]))
        assert not rep.passed and rep.first_failure == 0 and rep.residual == -2


class TestEvaluation:
    def test_identity_series(self):
        v = eval_series(boettcher_series(parse_poly("z^2"), 4), 3)
        assert v.value.contains(3) and v.heuristic

    def test_chebyshev_closed_form(self):
        v = eval_series(boettcher_series(chebyshev(2), 40), 3)
        assert v.value.widen(Fraction(1, 10**6)).contains(GOLDEN_SQ)
        assert not v.margin_ok

    @pytest.mark.parametrize("key", sorted(EXP_G))
    def test_frozen_values(self, key):
        text, a = key
        f = parse_poly(text)
        v = eval_series(boettcher_series(f, 40), a)
        assert v.modulus.widen(Fraction(1, 10**6)).contains(EXP_G[key])

    def test_green_consistency(self):
        f = parse_poly("z^2 + 1/2")
        phi = boettcher_series(f, 40)
        for a in (4, 5, 6, 7, 8, 10, 12, -4, -9, Fraction(17, 4)):
            mod = eval_series(phi, a).modulus
            g = green_arch(f, a, tol=Fraction(1, 10**12))
            assert interval_exp(g.enclosure).widen(Fraction(1, 10**6)).contains(mod)

    def test_complex_point(self):
        v = eval_series(boettcher_series(parse_poly("z^2"), 4), complex(3, 4))
        assert v.modulus.contains(5)

    def test_rejects_bounded_point(self):
        with pytest.raises(ValueError):
            eval_series(boettcher_series(parse_poly("z^2 - 1"), 8), Fraction(1, 2))


class TestSemiconjugacy:
    def test_power_maps(self):
        w = verify_semiconjugacy(parse_poly("z^2"), parse_poly("z^3"), parse_poly("z^2"))
        assert w.ok and w.zeta == 1 and w.delta == 3

    def test_commuting_chebyshev(self):
        w = verify_semiconjugacy(chebyshev(2), chebyshev(3), chebyshev(2), 12)
        assert w.ok and w.zeta == 1 and w.order == 1

    def test_sign_symmetry(self):
        w = verify_semiconjugacy(parse_poly("z^3"), parse_poly("-z"), parse_poly("z^3"))
        assert w.ok and w.zeta == -1 and w.order == 2

    def test_rejected(self):
        with pytest.raises(SemiconjugacyError, match="z\\^0"):
            verify_semiconjugacy(chebyshev(2), parse_poly("z^3"), parse_poly("z^2"))

    def test_degree_mismatch(self):
        with pytest.raises(SemiconjugacyError):
            verify_semiconjugacy(parse_poly("z^2"), parse_poly("z"), parse_poly("z^3"))
