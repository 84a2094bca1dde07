import numpy as np
import pytest
from numpy.testing import assert_allclose

from impulsectrl import (
    ControlPair,
    apply_M,
    apply_M_star,
    control_inner_product,
    gamma_gramian,
    gamma_tilde_gramian,
    gramian_set,
    mild_solution,
    piecewise_constant,
    theta_gramian,
    theta_tilde_gramian,
    zero_control,
)
from impulsectrl.model import DenseGenerator, ImpulseStage, ImpulsiveSystem
from impulsectrl.quadrature import QuadratureConfig
from conftest import FAST_QUAD, random_pwc_control, random_system
from oracles import quad_gamma_gramian


def scalar_two_stage(c1=0.0, c2=0.0, d=1.0):
    return ImpulsiveSystem(
        generator=DenseGenerator(np.zeros((1, 1))),
        input_matrix=np.array([[1.0]]),
        horizon=1.0,
        stages=(
            ImpulseStage(0.3, np.array([[c1]]), np.array([[d]])),
            ImpulseStage(0.6, np.array([[c2]]), np.array([[d]])),
        ),
    )


class TestClosedForms:
    def test_s1_gamma(self, s1):
        assert_allclose(gamma_gramian(s1), [[0.5]], rtol=1e-13)

    def test_s2_gamma(self, s2):
        assert_allclose(gamma_gramian(s2), [[1.0, 0.0], [0.0, 0.0]], rtol=1e-13, atol=1e-16)

    def test_zero_b(self, s1):
        sys = ImpulsiveSystem(
            generator=s1.generator, input_matrix=np.zeros((1, 1)), horizon=1.0, stages=s1.stages
        )
        assert_allclose(gamma_gramian(sys), [[0.0]])
        assert_allclose(theta_gramian(sys), [[0.0]])

    def test_s1_gamma_tilde(self, s1):
        assert_allclose(gamma_tilde_gramian(s1), [[1.0]])

    def test_gamma_tilde_p0(self, s2):
        assert_allclose(gamma_tilde_gramian(s2), np.zeros((2, 2)))

    def test_gamma_tilde_zero_d(self, s1):
        sys = ImpulsiveSystem(
            generator=s1.generator,
            input_matrix=s1.input_matrix,
            horizon=1.0,
            stages=(ImpulseStage(0.5, s1.stages[0].c, np.zeros((1, 1))),),
        )
        assert_allclose(gamma_tilde_gramian(sys), [[0.0]])

    def test_s1_theta(self, s1):
        assert_allclose(theta_gramian(s1), [[1.125]], rtol=1e-13)

    def test_theta_identity_blocks(self):
        sys = ImpulsiveSystem(
            generator=DenseGenerator(np.zeros((2, 2))),
            input_matrix=np.eye(2),
            horizon=1.0,
            stages=(ImpulseStage(0.5, np.zeros((2, 2)), np.eye(2)),),
        )
        assert_allclose(theta_gramian(sys), 0.5 * np.eye(2), rtol=1e-13)

    def test_s1_theta_tilde_empty(self, s1):
        assert_allclose(theta_tilde_gramian(s1), [[0.0]])

    def test_theta_tilde_two_stage(self):
        assert_allclose(theta_tilde_gramian(scalar_two_stage()), [[1.0]])

    def test_theta_tilde_zero_d(self):
        assert_allclose(theta_tilde_gramian(scalar_two_stage(d=0.0)), [[0.0]])

    def test_s1_total(self, s1):
        gs = gramian_set(s1)
        assert_allclose(gs.total, [[2.625]], rtol=1e-13)

    def test_s2_total(self, s2):
        gs = gramian_set(s2)
        assert_allclose(gs.total, np.diag([1.0, 0.0]), rtol=1e-13, atol=1e-16)
        assert_allclose(gs.theta, np.zeros((2, 2)))
        assert_allclose(gs.theta_tilde, np.zeros((2, 2)))
        assert_allclose(gs.gamma_tilde, np.zeros((2, 2)))
        assert np.array_equal(gs.total, gs.gamma + gs.theta + gs.theta_tilde + gs.gamma_tilde)

    def test_all_zero_inputs(self):
        sys = ImpulsiveSystem(
            generator=DenseGenerator(np.zeros((1, 1))),
            input_matrix=np.zeros((1, 1)),
            horizon=1.0,
            stages=(ImpulseStage(0.5, np.array([[0.5]]), np.zeros((1, 1))),),
        )
        assert_allclose(gramian_set(sys).total, [[0.0]])


class TestProperties:
    @pytest.mark.parametrize("seed", range(5))
    def test_symmetric_psd(self, seed):
        rng = np.random.default_rng(700 + seed)
        sys = random_system(rng, max_n=6, max_p=4)
        gs = gramian_set(sys, FAST_QUAD)
        for g in (gs.theta, gs.gamma, gs.theta_tilde, gs.gamma_tilde, gs.total):
            assert np.max(np.abs(g - g.T)) <= 1e-12 * max(1.0, np.max(np.abs(g)))
            eigs = np.linalg.eigvalsh(g)
            assert eigs[0] >= -1e-10 * max(1.0, eigs[-1])

    @pytest.mark.parametrize("seed", range(3))
    def test_quadrature_convergence(self, seed):
        rng = np.random.default_rng(800 + seed)
        sys = random_system(rng, max_n=4, max_p=2)
        w64 = gramian_set(sys, QuadratureConfig(64)).total
        w128 = gramian_set(sys, QuadratureConfig(128)).total
        assert np.max(np.abs(w64 - w128)) <= 1e-10 * max(1.0, np.max(np.abs(w64)))

    def test_gamma_against_adaptive_quadrature(self):
        rng = np.random.default_rng(14)
        sys = random_system(rng, max_n=4, max_p=2, dense_only=True)
        assert_allclose(gamma_gramian(sys, FAST_QUAD), quad_gamma_gramian(sys), rtol=1e-9, atol=1e-12)

    def test_p0_reduction(self, s2):
        gs = gramian_set(s2)
        assert np.array_equal(gs.total, ((gs.theta + gs.gamma) + gs.theta_tilde) + gs.gamma_tilde)
        assert_allclose(gs.total, gamma_gramian(s2), rtol=0, atol=0)


class TestM:
    def test_apply_m_worked_example(self, s1):
        w = ControlPair(piecewise_constant(s1, [[[1.0]], [[1.0]]]), (np.array([1.0]),))
        assert_allclose(apply_M(s1, w), [2.25], rtol=1e-13)

    def test_apply_m_zero(self, s1):
        assert_allclose(apply_M(s1, zero_control(s1)), [0.0], atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_apply_m_matches_mild_solution(self, seed):
        rng = np.random.default_rng(900 + seed)
        sys = random_system(rng, max_n=5, max_p=4)
        w = random_pwc_control(rng, sys)
        got = apply_M(sys, w, FAST_QUAD)
        want = mild_solution(sys, np.zeros(sys.n), w, sys.horizon, FAST_QUAD)
        assert np.linalg.norm(got - want) <= 1e-10 * (1.0 + np.linalg.norm(want))

    def test_apply_m_star_s1(self, s1):
        pair = apply_M_star(s1, [1.0])
        from impulsectrl import control_values

        assert_allclose(control_values(s1, pair.distributed, [0.25]), [[1.5]])
        assert_allclose(control_values(s1, pair.distributed, [0.75]), [[1.0]])
        assert_allclose(pair.impulses[0], [1.0])

    def test_apply_m_star_zero(self, s1):
        pair = apply_M_star(s1, [0.0])
        from impulsectrl import control_values

        assert_allclose(control_values(s1, pair.distributed, np.linspace(0.1, 0.9, 5)), 0.0)
        assert_allclose(pair.impulses[0], [0.0])

    @pytest.mark.parametrize("seed", range(5))
    def test_adjoint_pairing(self, seed):
        # <M w, phi> = <w, M* phi>_1
        rng = np.random.default_rng(1000 + seed)
        sys = random_system(rng, max_n=5, max_p=3)
        w = random_pwc_control(rng, sys)
        phi = rng.standard_normal(sys.n)
        lhs = float(apply_M(sys, w, FAST_QUAD) @ phi)
        rhs = control_inner_product(sys, w, apply_M_star(sys, phi), FAST_QUAD)
        assert abs(lhs - rhs) <= 1e-8 * (1.0 + abs(lhs))

    @pytest.mark.parametrize("seed", range(5))
    def test_decomposition_identity(self, seed):
        # M M* phi = (theta + gamma + theta~ + gamma~) phi, in action form
        rng = np.random.default_rng(1100 + seed)
        sys = random_system(rng, max_n=5, max_p=3)
        phi = rng.standard_normal(sys.n)
        got = apply_M(sys, apply_M_star(sys, phi), FAST_QUAD)
        want = gramian_set(sys, FAST_QUAD).total @ phi
        assert np.linalg.norm(got - want) <= 1e-8 * (1.0 + np.linalg.norm(want))
