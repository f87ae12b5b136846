import math
from fractions import Fraction

import pytest

from mcdeform.algebra import homotopy_operators, mc_eval, twist
from mcdeform.errors import (NotCocycle, NotKDeformation, NotMaurerCartan,
                             SeriesDivergence)
from mcdeform.graded import GradedSpace
from mcdeform.instances import cubic_algebra, parabola_algebra, parabola_mc_point
from mcdeform.obstructions import (ElementPoly, FormalSeries, alpha_bound,
                                   coefficient_bounds, derivative_formula_check,
                                   extend_formal, mc_derivative_cocycle_check,
                                   obstruction, poly_eval_bracket, psi,
                                   sum_series, taylor_mc, verify_cocycle)

from conftest import random_algebra, random_element


@pytest.fixture
def parabola():
    return parabola_algebra()


def basis0(alg, i):
    return alg.space.basis(0, i)


class TestElementPoly:
    def test_taylor_roundtrip(self, parabola):
        sp = parabola.space
        derivs = [sp.zero(), sp.basis(0, 0), 6 * sp.basis(0, 1)]
        poly = ElementPoly.from_taylor(sp, derivs)
        assert poly.coeff(2) == 3 * sp.basis(0, 1)
        for k in range(3):
            assert poly.taylor(k) == derivs[k]

    def test_derivative(self, parabola):
        sp = parabola.space
        poly = ElementPoly(sp, [sp.basis(0, 0), sp.basis(0, 1), sp.basis(0, 0)])
        d = poly.derivative()
        assert d.coeff(0) == sp.basis(0, 1)
        assert d.coeff(1) == 2 * sp.basis(0, 0)
        assert poly.derivative(3).is_zero()

    def test_poly_eval_matches_pointwise(self, rng, parabola):
        sp = parabola.space
        b = parabola.bracket(2)
        u = ElementPoly(sp, [random_element(rng, sp, 0) for _ in range(3)])
        v = ElementPoly(sp, [random_element(rng, sp, 0) for _ in range(2)])
        prod = poly_eval_bracket(b, [u, v])
        from mcdeform.graded import eval_bracket
        for t in (Fraction(0), Fraction(1), Fraction(-2), Fraction(1, 3)):
            assert prod.at(t) == eval_bracket(b, [u.at(t), v.at(t)])

    def test_cap_truncates(self, rng, parabola):
        sp = parabola.space
        b = parabola.bracket(2)
        u = ElementPoly(sp, [random_element(rng, sp, 0) for _ in range(4)])
        capped = poly_eval_bracket(b, [u, u], cap=2)
        full = poly_eval_bracket(b, [u, u])
        assert capped.degree() <= 2
        for j in range(3):
            assert capped.coeff(j) == full.coeff(j)


class TestObstruction:
    def test_first_obstruction_is_quadratic(self, parabola):
        z = parabola.space.zero()
        x1 = basis0(parabola, 0)
        y = parabola.space.basis(1, 0)
        assert obstruction(parabola, [z, x1]) == y

    def test_second_obstruction_weights(self, parabola):
        # prefix (0, x1, x1): parts (1,2) and (2,1) each weigh 3/2, so the
        # l2(u1, u2) term carries 3; the cubic term needs l3
        z = parabola.space.zero()
        x1 = basis0(parabola, 0)
        y = parabola.space.basis(1, 0)
        assert obstruction(parabola, [z, x1, x1]) == 3 * y
        cubic = cubic_algebra()
        zc = cubic.space.zero()
        c1 = basis0(cubic, 0)
        yc = cubic.space.basis(1, 0)
        assert obstruction(cubic, [zc, c1, zc]) == yc  # only l3(u1,u1,u1)

    def test_vanishes_when_u1_zero(self, parabola):
        z = parabola.space.zero()
        assert obstruction(parabola, [z, z]).is_zero()

    def test_literal_path_agrees(self, rng, parabola):
        for alg in (parabola, cubic_algebra(),
                    random_algebra(rng, {0: 3, 1: 2}, 4, density=0.5)):
            z = alg.space.zero()
            prefix = [z] + [random_element(rng, alg.space, 0) for _ in range(5)]
            fast = obstruction(alg, prefix)
            literal = obstruction(alg, prefix, all_compositions=True)
            assert fast == literal

    def test_base_must_solve_mc(self, parabola):
        x2 = basis0(parabola, 1)
        with pytest.raises(NotMaurerCartan):
            obstruction(parabola, [x2, x2])

    def test_nonzero_base_point(self, parabola):
        u0 = parabola_mc_point(Fraction(1, 2))
        x1 = basis0(parabola, 0)
        # twisted l2 equals l2 (3-strict), twisted l1 gains l2(u0, .)
        obs = obstruction(parabola, [u0, x1])
        assert obs == parabola.space.basis(1, 0)


class TestTaylorMC:
    def test_order_zero_is_mc_value(self, parabola):
        u0 = parabola_mc_point(2)
        assert taylor_mc(parabola, [u0], order=0) == [parabola.space.zero()]

    def test_first_order_is_twisted_differential(self, parabola):
        z = parabola.space.zero()
        x1, x2 = basis0(parabola, 0), basis0(parabola, 1)
        y = parabola.space.basis(1, 0)
        assert taylor_mc(parabola, [z, x2], order=1)[1] == y
        assert taylor_mc(parabola, [z, x1], order=1)[1].is_zero()

    def test_parabola_second_order_cancellation(self, parabola):
        z = parabola.space.zero()
        series = [z, basis0(parabola, 0), -1 * basis0(parabola, 1)]
        values = taylor_mc(parabola, series, order=2)
        assert all(v.is_zero() for v in values)

    def test_substitution_oracle_agreement(self, rng):
        shapes = [({0: 2, 1: 1}, 3), ({0: 3, 1: 2}, 4), ({0: 2, 1: 2, 2: 1}, 4),
                  ({-1: 1, 0: 2, 1: 2}, 3)]
        for dims, strictness in shapes:
            for _ in range(4):
                alg = random_algebra(rng, dims, strictness, density=0.5)
                z = alg.space.zero()
                coeffs = [z] + [random_element(rng, alg.space, 0)
                                for _ in range(6)]
                a = taylor_mc(alg, coeffs, order=6)
                b = taylor_mc(alg, coeffs, order=6, substitution=True)
                assert a == b

    def test_base_need_not_be_mc(self, parabola):
        x2 = basis0(parabola, 1)
        values = taylor_mc(parabola, [x2, x2], order=1)
        assert values[0] == parabola.space.basis(1, 0)
        assert values == taylor_mc(parabola, [x2, x2], order=1, substitution=True)


class TestVerifyCocycle:
    def test_valid_prefix(self, parabola):
        z = parabola.space.zero()
        report = verify_cocycle(parabola, [z, basis0(parabola, 0)])
        assert report.k == 1
        assert report.is_cocycle
        assert report.class_zero  # l1 is onto V_1 here
        assert report.value == parabola.space.basis(1, 0)

    def test_top_degree_is_trivially_closed(self, parabola):
        # the obstruction lands in the top degree, so closedness is vacuous
        z = parabola.space.zero()
        report = verify_cocycle(parabola, [z, basis0(parabola, 0)])
        assert report.is_cocycle

    def test_corrupted_prefix_rejected_with_order(self, parabola):
        z = parabola.space.zero()
        x1, x2 = basis0(parabola, 0), basis0(parabola, 1)
        with pytest.raises(NotKDeformation) as err:
            verify_cocycle(parabola, [z, x1, x2])  # u2 should be -x2
        assert err.value.order == 2


class TestExtendFormal:
    def test_parabola_closed_form(self, parabola):
        pair = homotopy_operators(parabola, 1)
        v = Fraction(1, 7)
        series = extend_formal(parabola, pair, v * basis0(parabola, 0), order=9)
        assert series.coefficient(2) == -(v ** 2) * basis0(parabola, 1)
        for k in range(3, 10):
            assert series.coefficient(k).is_zero()

    def test_cubic_closed_form(self):
        alg = cubic_algebra()
        pair = homotopy_operators(alg, 1)
        v = Fraction(2, 5)
        series = extend_formal(alg, pair, v * alg.space.basis(0, 0), order=9)
        assert series.coefficient(2) == -(v ** 2) * alg.space.basis(0, 1)
        assert series.coefficient(3) == -(v ** 3) * alg.space.basis(0, 1)
        for k in range(4, 10):
            assert series.coefficient(k).is_zero()

    def test_zero_direction(self, parabola):
        pair = homotopy_operators(parabola, 1)
        series = extend_formal(parabola, pair, parabola.space.zero(), order=6)
        assert all(c.is_zero() for c in series.coeffs)

    def test_rejects_non_cocycle(self, parabola):
        pair = homotopy_operators(parabola, 1)
        with pytest.raises(NotCocycle):
            extend_formal(parabola, pair, basis0(parabola, 1), order=3)

    def test_residual_law(self, parabola):
        pair = homotopy_operators(parabola, 1)
        for alg in (parabola, cubic_algebra()):
            p = homotopy_operators(alg, 1)
            series = extend_formal(alg, p, Fraction(1, 3) * alg.space.basis(0, 0),
                                   order=7)
            assert all(v.is_zero() for v in taylor_mc(alg, series))

    def test_cocycle_law(self, parabola):
        pair = homotopy_operators(parabola, 1)
        series = extend_formal(parabola, pair,
                               Fraction(1, 5) * basis0(parabola, 0), order=6)
        talg = twist(parabola, series.base)
        from mcdeform.obstructions import _obstruction_twisted
        from mcdeform.graded import eval_bracket
        for k in range(1, series.order):
            obs = _obstruction_twisted(talg, list(series.coeffs[:k + 1]))
            assert eval_bracket(talg.bracket(1), [obs]).is_zero()

    def test_scaling_of_coefficients(self, parabola):
        pair = homotopy_operators(parabola, 1)
        base = extend_formal(parabola, pair, basis0(parabola, 0), order=6)
        for s in (Fraction(1, 2), Fraction(1, 3)):
            scaled = extend_formal(parabola, pair, s * basis0(parabola, 0), order=6)
            for k in range(7):
                assert scaled.coefficient(k) == (s ** k) * base.coefficient(k)

    def test_extension_around_nonzero_base(self, parabola):
        # translate the problem to the Maurer-Cartan point (a, -a^2/2)
        a = Fraction(1, 4)
        u0 = parabola_mc_point(a)
        talg = twist(parabola, u0)
        pair = homotopy_operators(talg, 1)
        sp = parabola.space
        # kernel of the twisted differential: l1^{u0}(x) = l1(x) + l2(u0, x)
        direction = sp.basis(0, 0) - a * sp.basis(0, 1)
        series = extend_formal(parabola, pair, direction, order=8, u0=u0)
        assert series.base == u0
        assert all(v.is_zero() for v in taylor_mc(parabola, series))

    def test_validates_homotopy_pair(self, parabola):
        pair = homotopy_operators(parabola, 1)
        bad = type(pair)(pair.degree, pair.h_low.scaled(2), pair.h_high,
                         pair.residual)
        with pytest.raises(ValueError):
            extend_formal(parabola, bad, basis0(parabola, 0), order=3)


class TestBounds:
    def test_alpha_parabola(self, parabola):
        assert alpha_bound(parabola) == Fraction(3, 2)

    def test_alpha_differential_only(self):
        sp = GradedSpace({0: 1, 1: 1})
        from mcdeform.graded import Bracket
        from mcdeform.algebra import LInftyAlgebra
        alg = LInftyAlgebra(sp, [Bracket(sp, 1, {((0, 0),): {(1, 0): 1}})],
                            strictness=2)
        assert alpha_bound(alg) == 1

    def test_alpha_scales_linearly(self, parabola):
        scaled = type(parabola)(parabola.space,
                                [parabola.bracket(1).scaled(3),
                                 parabola.bracket(2).scaled(3)],
                                strictness=3)
        assert alpha_bound(scaled) == 3 * alpha_bound(parabola)

    def test_certificate_rows(self, parabola):
        pair = homotopy_operators(parabola, 1)
        u1 = Fraction(1, 20) * basis0(parabola, 0)
        series = extend_formal(parabola, pair, u1, order=6)
        cert = coefficient_bounds(parabola, series, pair.h_low_norm())
        assert cert.all_within
        first = cert.rows[0]
        assert first.k == 1 and first.bound == Fraction(1, 20)  # C_1 = 1
        second = cert.rows[1]
        assert second.bound == Fraction(1, 20) ** 2 * cert.h1_norm * cert.alpha
        assert cert.radius == pytest.approx(1 / (12 * 1.5))

    def test_degenerate_norms_rejected(self, parabola):
        pair = homotopy_operators(parabola, 1)
        series = extend_formal(parabola, pair, basis0(parabola, 0), order=2)
        with pytest.raises(ValueError):
            coefficient_bounds(parabola, series, 0)


class TestSummation:
    def test_value_and_zero_residual(self, parabola):
        pair = homotopy_operators(parabola, 1)
        v = Fraction(1, 20)
        result = psi(parabola, pair, v * basis0(parabola, 0), order=10)
        coords = result.float_coords()
        assert coords[(0, 0)] == pytest.approx(0.05, abs=0)
        assert coords[(0, 1)] == pytest.approx(-0.00125, abs=0)
        assert result.residual == 0.0
        assert result.within_radius

    def test_psi_at_zero_returns_base(self, parabola):
        pair = homotopy_operators(parabola, 1)
        result = psi(parabola, pair, parabola.space.zero(), order=4)
        assert result.value.is_zero()

    def test_time_scaling_matches_direction_scaling(self, parabola):
        pair = homotopy_operators(parabola, 1)
        v = basis0(parabola, 0)
        half_time = psi(parabola, pair, Fraction(1, 10) * v, order=12, t=0.5)
        half_dir = psi(parabola, pair, Fraction(1, 20) * v, order=12, t=1.0)
        for slot, val in half_time.float_coords().items():
            assert val == pytest.approx(half_dir.float_coords()[slot], rel=1e-12)

    def test_divergence_detected(self, rng):
        # quadratic recursion with huge direction: factorially growing terms
        alg = parabola_algebra()
        pair = homotopy_operators(alg, 1)
        sp = alg.space
        series = FormalSeries(alg, tuple(
            [sp.zero()] + [math.factorial(k) ** 2 * sp.basis(0, 0)
                           for k in range(1, 12)]))
        with pytest.raises(SeriesDivergence):
            sum_series(series, t=1.0)


class TestDerivativeFormula:
    def test_constant_paths(self, rng, parabola):
        sp = parabola.space
        u = ElementPoly(sp, [random_element(rng, sp, 0)])
        v = ElementPoly(sp, [random_element(rng, sp, 0)])
        for k in range(1, 4):
            assert derivative_formula_check(parabola, u, v, k)

    def test_chain_rule_case(self, rng):
        alg = cubic_algebra()
        sp = alg.space
        u = ElementPoly(sp, [random_element(rng, sp, 0) for _ in range(3)])
        v = ElementPoly(sp, [random_element(rng, sp, 0) for _ in range(3)])
        assert derivative_formula_check(alg, u, v, 1)

    def test_random_cases(self, rng):
        count = 0
        while count < 12:
            dims, strictness = ({0: 2, 1: 2}, 4) if count % 2 else ({0: 3, 1: 1}, 3)
            alg = random_algebra(rng, dims, strictness, density=0.5)
            sp = alg.space
            u = ElementPoly(sp, [random_element(rng, sp, 0) for _ in range(3)])
            v = ElementPoly(sp, [random_element(rng, sp, 0) for _ in range(2)])
            for k in range(0, 5):
                assert derivative_formula_check(alg, u, v, k)
            count += 1

    def test_degree_budget(self, parabola):
        sp = parabola.space
        u = ElementPoly(sp, [sp.basis(0, 0)] * 400)
        with pytest.raises(ValueError):
            derivative_formula_check(parabola, u, u, 2, max_degree=100)


class TestMCDerivativeCocycle:
    def test_order_zero(self, parabola):
        u0 = parabola_mc_point(Fraction(1, 3))
        assert mc_derivative_cocycle_check(parabola, [u0], 0)

    def test_on_solution_series(self, parabola):
        pair = homotopy_operators(parabola, 1)
        series = extend_formal(parabola, pair,
                               Fraction(1, 6) * basis0(parabola, 0), order=5)
        for k in range(0, 5):
            assert mc_derivative_cocycle_check(parabola, series, k)

    def test_on_cubic_series(self):
        alg = cubic_algebra()
        pair = homotopy_operators(alg, 1)
        series = extend_formal(alg, pair,
                               Fraction(1, 4) * alg.space.basis(0, 0), order=5)
        for k in range(0, 5):
            assert mc_derivative_cocycle_check(alg, series, k)
