import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from mcdeform.algebra import (cohomology_dim, differential_blocks, mc_eval,
                              verify_linfty)
from mcdeform.errors import OutsidePerturbationNeighbourhood
from mcdeform.instances import abelian_lie, heisenberg3, sl2, solvable4
from mcdeform.lie import (Cochain, DeformationPath, LieStructure, act_array,
                          action_derivative, build_deformation_linfty,
                          ce_apply, ce_stabilizer, cochain_to_element, comp_bar,
                          dem_apply, deformation_space, element_to_cochain,
                          expm, gl_action, gl_action_lie, is_lie, jac_array,
                          jac_derivative, jac_directional, jac_polarization,
                          jacobiator_lie, nr_bracket, orbit_parametrization,
                          parallel_transport, perturbed_homotopies,
                          rigidity_check, vector_to_cochain)
from mcdeform.linalg import RationalMatrix

from conftest import random_invertible


def random_cochain(rng, n, arity, density=0.6, span=3):
    values = {}
    for T in itertools.combinations(range(n), arity):
        vec = {m: Fraction(rng.randint(-span, span)) for m in range(n)
               if rng.random() < density}
        vec = {m: c for m, c in vec.items() if c}
        if vec:
            values[T] = vec
    return Cochain(n, arity, values)


class TestJacobiatorLie:
    def test_abelian(self):
        assert jacobiator_lie(abelian_lie(3)).is_zero()

    def test_sl2_and_friends(self):
        for mu in (sl2(), heisenberg3(), solvable4()):
            assert jacobiator_lie(mu).is_zero()

    def test_non_jacobi_detected(self):
        mu = LieStructure(3, {(0, 1, 0): 1, (1, 2, 1): 1, (0, 2, 2): 1})
        assert not jacobiator_lie(mu).is_zero()

    def test_matches_insertion_square(self, rng):
        for n in (3, 4):
            for _ in range(5):
                mu = random_cochain(rng, n, 2)
                assert jacobiator_lie(mu) == comp_bar(mu, mu)


class TestDisplayedFormulasMatchInsertions:
    def test_action_differential(self, rng):
        for n in (3, 4):
            mu = random_cochain(rng, n, 2)
            A = random_cochain(rng, n, 1)
            assert dem_apply(mu, A) == nr_bracket(mu, A)

    def test_jacobiator_differential(self, rng):
        for n in (3, 4):
            mu = random_cochain(rng, n, 2)
            g = random_cochain(rng, n, 2)
            assert jac_directional(mu, g) == nr_bracket(mu, g)

    def test_ce_stabilizer(self, rng):
        for n in (4, 5):
            mu = random_cochain(rng, n, 2)
            eta = random_cochain(rng, n, 3)
            assert ce_apply(mu, eta) == nr_bracket(mu, eta)


class TestGLAction:
    def test_identity(self, rng):
        eta = random_cochain(rng, 3, 2)
        assert gl_action(eta, RationalMatrix.identity(3)) == eta

    def test_group_law_inverse(self, rng):
        eta = random_cochain(rng, 3, 2)
        A = random_invertible(rng, 3)
        assert gl_action(gl_action(eta, A), A.inverse()) == eta

    def test_equivariance_of_jacobiator(self, rng):
        for _ in range(5):
            mu = random_cochain(rng, 3, 2)
            A = random_invertible(rng, 3)
            lhs = jacobiator_lie(gl_action(mu, A))
            rhs = gl_action(jacobiator_lie(mu), A)
            assert lhs == rhs

    def test_singular_rejected(self, rng):
        eta = random_cochain(rng, 3, 2)
        with pytest.raises(ValueError):
            gl_action(eta, RationalMatrix.zeros(3, 3))

    def test_conjugates_stay_lie(self, rng):
        A = random_invertible(rng, 3)
        moved = gl_action_lie(sl2(), A)
        assert is_lie(moved)


class TestActionDerivative:
    def test_zero_at_abelian(self):
        assert action_derivative(abelian_lie(3)).is_zero()

    def test_sl2_rank_six(self):
        assert action_derivative(sl2()).rank() == 6

    def test_kernel_elements_are_derivations(self, rng):
        mu = sl2()
        dem = action_derivative(mu)
        for vec in dem.nullspace_basis():
            A = vector_to_cochain(3, 1, vec)
            # derivation law: A mu(x,y) = mu(Ax, y) + mu(x, Ay)
            assert dem_apply(mu, A).is_zero()


class TestJacDerivative:
    def test_quadratic_expansion_exact(self, rng):
        mu = sl2().as_cochain()
        for _ in range(20):
            v = random_cochain(rng, 3, 2)
            lhs = jacobiator_lie(mu + v)
            rhs = jacobiator_lie(mu) + jac_directional(mu, v) \
                + jac_polarization(v, v).scaled(Fraction(1, 2))
            assert lhs == rhs

    def test_abelian_has_zero_linear_part(self, rng):
        zero = abelian_lie(3).as_cochain()
        v = random_cochain(rng, 3, 2)
        assert jac_directional(zero, v).is_zero()
        assert jac_polarization(v, v) == jacobiator_lie(v).scaled(2)

    def test_complex_property(self):
        for mu in (sl2(), heisenberg3(), solvable4()):
            prod = jac_derivative(mu) @ action_derivative(mu)
            assert prod.is_zero()


class TestCEStabilizer:
    def test_dimension_three_has_zero_target(self):
        m = ce_stabilizer(sl2())
        assert m.rows == 0 and m.cols == 3

    def test_abelian_zero(self):
        assert ce_stabilizer(abelian_lie(4)).is_zero()

    def test_stabilizes_jacobiator_linearization(self):
        mu = solvable4()
        assert (ce_stabilizer(mu) @ jac_derivative(mu)).is_zero()


class TestDeformationAlgebra:
    def test_dim2_collapses(self):
        alg = build_deformation_linfty(abelian_lie(2))
        assert alg.space.dim(1) == 0
        assert mc_eval(alg, alg.space.element(
            {(0, 0): 3, (0, 1): Fraction(1, 2)})).is_zero()

    def test_block_shapes_sl2(self):
        alg = build_deformation_linfty(sl2())
        blocks = differential_blocks(alg)
        assert (blocks[-1].rows, blocks[-1].cols) == (9, 9)
        assert (blocks[0].rows, blocks[0].cols) == (3, 9)

    def test_blocks_match_named_matrices(self):
        mu = solvable4()
        alg = build_deformation_linfty(mu)
        blocks = differential_blocks(alg)
        assert blocks[-1] == action_derivative(mu)
        assert blocks[0] == jac_derivative(mu)
        assert blocks[1] == ce_stabilizer(mu)

    def test_jacobi_gate(self, rng):
        mus = [sl2(), heisenberg3(), abelian_lie(3), solvable4(),
               gl_action_lie(sl2(), random_invertible(rng, 3)),
               gl_action_lie(heisenberg3(), random_invertible(rng, 3))]
        for mu in mus:
            report = verify_linfty(build_deformation_linfty(mu))
            assert report.passed, mu

    def test_mc_identity(self, rng):
        for mu in (sl2(), heisenberg3(), solvable4()):
            alg = build_deformation_linfty(mu)
            sp = alg.space
            for _ in range(4):
                g = random_cochain(rng, mu.n, 2)
                lhs = mc_eval(alg, cochain_to_element(sp, g))
                total = LieStructure.from_cochain(mu.as_cochain() + g)
                rhs_coch = jacobiator_lie(total)
                rhs = cochain_to_element(sp, rhs_coch) if not rhs_coch.is_zero() \
                    else sp.zero()
                assert lhs == rhs

    def test_rejects_non_lie(self):
        mu = LieStructure(3, {(0, 1, 0): 1, (1, 2, 1): 1, (0, 2, 2): 1})
        with pytest.raises(ValueError):
            build_deformation_linfty(mu)

    def test_cochain_element_roundtrip(self, rng):
        sp = deformation_space(3)
        g = random_cochain(rng, 3, 2)
        assert element_to_cochain(3, cochain_to_element(sp, g), 2) == g


class TestRigidity:
    def test_sl2_rigid_with_exact_identity(self):
        result = rigidity_check(sl2())
        assert result.rigid and result.cohomology == 0
        assert result.pair.is_exact
        assert cohomology_dim(result.algebra, 0) == 0

    def test_sl2_numbers(self):
        dj = jac_derivative(sl2())
        assert dj.cols - dj.rank() == 6
        assert action_derivative(sl2()).rank() == 6

    def test_heisenberg_flexible(self):
        result = rigidity_check(heisenberg3())
        assert not result.rigid
        assert result.cohomology > 0
        assert result.pair is None

    def test_abelian_dim2_witness(self):
        result = rigidity_check(abelian_lie(2))
        assert not result.rigid
        assert result.cohomology == 2

    def test_rigidity_is_basis_invariant(self, rng):
        moved = gl_action_lie(sl2(), random_invertible(rng, 3))
        assert rigidity_check(moved).rigid


class TestExpm:
    def test_against_scipy(self):
        rng = np.random.default_rng(5)
        for scale in (0.1, 1.0, 7.0):
            A = rng.normal(size=(4, 4)) * scale
            assert np.abs(expm(A) - scipy.linalg.expm(A)).max() < 1e-11 * max(1, np.abs(scipy.linalg.expm(A)).max())

    def test_nilpotent_exact(self):
        N = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(expm(N), np.array([[1, 1], [0, 1]]), atol=1e-15)


class TestOrbitParametrization:
    def setup_method(self):
        self.mu = sl2()
        self.result = rigidity_check(self.mu)
        self.h1 = self.result.pair.h_low
        dj = jac_derivative(self.mu)
        self.kernel = dj.nullspace_basis()

    def test_zero_gives_base_point(self):
        out = orbit_parametrization(self.mu, self.h1, Cochain(3, 2, {}))
        assert np.abs(out.to_array() - self.mu.to_array()).max() == 0

    def test_orbit_points_satisfy_jacobi(self):
        for vec in self.kernel:
            v = vector_to_cochain(3, 2, [Fraction(c) / 100 for c in vec])
            out = orbit_parametrization(self.mu, self.h1, v)
            assert np.abs(jac_array(out.to_array())).max() < 1e-9

    def test_derivative_at_zero_is_identity(self):
        eps = 1e-5
        for vec in self.kernel:
            plus = orbit_parametrization(
                self.mu, self.h1, vector_to_cochain(3, 2, [float(c) * eps for c in vec]))
            minus = orbit_parametrization(
                self.mu, self.h1, vector_to_cochain(3, 2, [-float(c) * eps for c in vec]))
            fd = (plus.to_array() - minus.to_array()) / (2 * eps)
            direction = LieStructure.from_cochain(
                vector_to_cochain(3, 2, [Fraction(c) for c in vec])).to_array()
            assert np.abs(fd - direction).max() < 1e-6

    def test_warns_on_large_direction(self):
        big = vector_to_cochain(3, 2, [Fraction(50)] * 9)
        with pytest.warns(UserWarning):
            orbit_parametrization(self.mu, self.h1, big)


class TestPerturbedHomotopies:
    def setup_method(self):
        self.mu = sl2()
        self.pair = rigidity_check(self.mu).pair

    def test_unchanged_at_base_point(self):
        h1m, h2m = perturbed_homotopies(self.mu, self.pair.h_low,
                                        self.pair.h_high, self.mu)
        assert np.abs(h1m - np.array(self.pair.h_low.to_float_rows())).max() == 0

    def test_identity_near_base(self):
        rng = np.random.default_rng(0)
        from mcdeform.lie import _linear_block_stacks, _mu_vec
        stacks = _linear_block_stacks(self.mu)
        dem0 = np.array(action_derivative(self.mu).to_float_rows())
        djac0 = np.array(jac_derivative(self.mu).to_float_rows())
        for _ in range(3):
            A = rng.normal(size=(3, 3))
            A *= 0.01 / np.abs(A).max()
            mu_eps = LieStructure.from_array(act_array(self.mu.to_array(), expm(A)))
            h1m, h2m = perturbed_homotopies(self.mu, self.pair.h_low,
                                            self.pair.h_high, mu_eps)
            delta = _mu_vec(3, mu_eps.to_array() - self.mu.to_array())
            dem = dem0 + np.tensordot(delta, stacks[0], axes=(0, 0))
            djac = djac0 + np.tensordot(delta, stacks[1], axes=(0, 0))
            residual = dem @ h1m + h2m @ djac - np.eye(9)
            assert np.abs(residual).max() < 1e-10

    def test_outside_neighbourhood_rejected(self):
        far = LieStructure.from_array(self.mu.to_array() * 80.0)
        with pytest.raises(OutsidePerturbationNeighbourhood):
            perturbed_homotopies(self.mu, self.pair.h_low, self.pair.h_high, far)


class TestParallelTransport:
    def setup_method(self):
        self.mu = sl2()
        self.result = rigidity_check(self.mu)
        rng = np.random.default_rng(12)
        A = rng.normal(size=(3, 3))
        self.A = A * (0.05 / np.abs(A).max())
        self.path = DeformationPath.exponential(self.mu, self.A)

    def test_constant_path_is_identity(self):
        const = DeformationPath(lambda t: self.mu.to_array(),
                                lambda t: np.zeros((3, 3, 3)))
        tr = parallel_transport(self.mu, const, steps=40, pair=self.result.pair)
        assert np.abs(tr.transports[-1] - np.eye(3)).max() < 1e-13
        assert tr.final_defect < 1e-13

    def test_trivial_deformation_untwisted(self):
        tr = parallel_transport(self.mu, self.path, steps=1000,
                                pair=self.result.pair)
        assert tr.times[0] == 0.0
        assert np.abs(tr.transports[0] - np.eye(3)).max() == 0
        assert tr.final_defect <= 1e-6

    def test_fourth_order_convergence(self):
        coarse = parallel_transport(self.mu, self.path, steps=4,
                                    pair=self.result.pair, samples=2).final_defect
        fine = parallel_transport(self.mu, self.path, steps=8,
                                  pair=self.result.pair, samples=2).final_defect
        assert coarse / fine >= 12.0

    def test_sampled_path_matches_closed_form(self):
        ts = np.linspace(0.0, 1.0, 60)
        samples = [self.path.value(float(t)) for t in ts]
        sampled = DeformationPath.from_samples(ts, samples)
        tr = parallel_transport(self.mu, sampled, steps=200,
                                pair=self.result.pair)
        assert tr.final_defect < 1e-6
