from fractions import Fraction

import pytest

from canheight.boettcher import LaurentSeries, boettcher_series
from canheight.linalg import rank
from canheight.numeric import RealInterval
from canheight.polydyn import parse_poly
from canheight.relations import (
    AuxInstance,
    AuxPolynomial,
    AuxSystemTooLarge,
    InsufficientDepth,
    aux_residual_decay,
    build_aux_system,
    decay_csv,
    formal_alpha,
    residual_check,
    solve_aux,
    solve_nullspace,
    verify_annihilation,
)

F = parse_poly("z^2 + 1/2")


@pytest.fixture(scope="module")
def solved():
    inst = AuxInstance([F], [3], [1], C=3, L=7)
    system, P = solve_aux(inst)
    return inst, system, P


class TestInstance:
    def test_example_shape(self):
        inst = AuxInstance([F], [3], [1], C=3, L=7)
        assert inst.num_unknowns == 56
        assert inst.exponent_range == (-21, 14)
        assert inst.num_equations == 36 <= 2 * 3 * 7 + 1

    def test_defaults(self):
        inst = AuxInstance([F], [3], [1])
        assert (inst.C, inst.L) == (3, 7)
        two = AuxInstance([F, F], [3, 5], [1, 1])
        assert (two.C, two.L) == (3, 37)

    def test_L_too_small(self):
        with pytest.raises(ValueError, match="L > "):
            AuxInstance([F], [3], [1], C=3, L=6)

    def test_C_too_small(self):
        with pytest.raises(ValueError, match="C > "):
            AuxInstance([F], [3], [1], C=2, L=5)

    def test_two_variable_shape(self):
        inst = AuxInstance([F, F], [3, 5], [1, 1], C=3, L=37)
        assert inst.num_unknowns == 37 * 38**2 == 53428

    @pytest.mark.parametrize("r,C,L", [(1, 3, 7), (1, 4, 9), (2, 3, 37), (2, 4, 65)])
    def test_count_inequalities(self, r, C, L):
        inst = AuxInstance([F] * r, [3 + i for i in range(r)], [1] * r, C=C, L=L)
        assert inst.num_unknowns > L ** (r + 1)
        assert inst.num_equations <= (2 * C * L) ** r

    def test_rejects_integrable_and_bad_input(self):
        with pytest.raises(ValueError, match="integrable"):
            AuxInstance([parse_poly("z^2 - 2")], [3], [1])
        with pytest.raises(ValueError):
            AuxInstance([F], [3], [0])
        with pytest.raises(ValueError):
            AuxInstance([F, parse_poly("z^3 + 1")], [3, 3], [1, 1])

    def test_json_round_trip(self):
        inst = AuxInstance([F], [Fraction(7, 2)], [1], C=3, L=7)
        back = AuxInstance.from_json(inst.to_json())
        assert back.to_json() == inst.to_json()

    def test_formal_alpha(self):
        assert formal_alpha([F, F], [3, F(3)], [2, -1]).exact == 1
        assert formal_alpha([F, F], [3, F(F(3))], [4, -1]).exact == 1
        a = formal_alpha([F, F], [3, F(3)], [1, 1])
        assert a.exact is None and list(a.exponents.values()) == [3]


class TestSystem:
    def test_solution(self, solved):
        inst, system, P = solved
        assert system.shape == (36, 56)
        assert 56 - rank(system.rows) >= 13
        assert not P.is_zero()
        assert residual_check(P, system)

    def test_independent_annihilation(self, solved):
        inst, _, P = solved
        rep = verify_annihilation(P, inst)
        assert rep.passed and rep.checked == 36

    def test_perturbed_vector_is_caught(self, solved):
        inst, system, P = solved
        key = next(iter(P.coeffs))
        bad = AuxPolynomial(P.r, P.L, dict(P.coeffs))
        bad.coeffs[key] += 1
        assert not residual_check(bad, system)
        assert not verify_annihilation(bad, inst).passed

    def test_solve_nullspace_examples(self):
        assert solve_nullspace([[1, 1]]) == [1, -1]

    def test_insufficient_depth(self):
        inst = AuxInstance([F], [3], [1], C=3, L=7)
        with pytest.raises(InsufficientDepth, match=str(inst.required_depth)):
            build_aux_system(inst, depth=10)

    def test_size_guard(self):
        inst = AuxInstance([F, F], [3, 5], [1, 1])
        with pytest.raises(AuxSystemTooLarge):
            build_aux_system(inst)

    def test_consistency_with_series(self, solved):
        """``sum_l P_l(x) Phi(x)^l`` agrees with the expanded series of A at large x."""
        inst, _, P = solved
        bits = 512
        phi = boettcher_series(F, inst.required_depth)
        A = None
        for l in range(1, P.L + 1):
            for (j,), c in P.P(l).items():
                term = (phi ** l) * LaurentSeries.monomial(j, c, window=phi.window)
                A = term if A is None else A + term
        for x in (40, 55, 80, -64, 100):
            direct = P.evaluate([RealInterval(x, bits=bits)], phi.evaluate(x, bits))
            series = A.evaluate(x, bits)
            scale = max(abs(c) for c in P.coeffs.values()) * Fraction(abs(x)) ** (2 * P.L)
            assert (direct - series).abs().hi <= scale * Fraction(1, 10**60)


class TestDecay:
    def test_single_row(self, solved):
        inst, _, P = solved
        rows = aux_residual_decay(P, inst, 0)
        assert len(rows) == 1 and rows[0].magnitude.is_finite() and rows[0].heuristic

    def test_rejects_non_escaping(self, solved):
        _, _, P = solved
        bad = AuxInstance([parse_poly("z^2 - 1")], [0], [1], C=3, L=7)
        with pytest.raises(ValueError, match="not certified to escape"):
            aux_residual_decay(P, bad, 2)

    def test_csv(self, solved):
        inst, _, P = solved
        text = decay_csv(aux_residual_decay(P, inst, 2))
        lines = text.strip().splitlines()
        assert lines[0] == "k,magnitude_upper" and len(lines) == 4
