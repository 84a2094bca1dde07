import numpy as np
import pytest
from numpy.testing import assert_allclose

from impulsectrl import (
    DenseGenerator,
    ImpulseStage,
    ImpulsiveSystem,
    SpectralBlocks,
    ValidationError,
    generator_matrix,
    jump_propagator_apply,
    product_propagator_apply,
    semigroup_adjoint_apply,
    semigroup_apply,
    semigroup_matrix,
    validate_system,
)
from conftest import random_system


class TestValidation:
    def test_s1_is_valid(self, s1):
        assert validate_system(s1).ok

    def test_impulse_time_outside_horizon(self, s1):
        broken = ImpulsiveSystem(
            generator=s1.generator,
            input_matrix=s1.input_matrix,
            horizon=1.0,
            stages=(ImpulseStage(1.5, s1.stages[0].c, s1.stages[0].d),),
            validate=False,
        )
        report = validate_system(broken)
        assert not report.ok
        assert any("outside (0," in v for v in report.violations)

    def test_dimension_mismatch(self, s1):
        broken = ImpulsiveSystem(
            generator=s1.generator,
            input_matrix=s1.input_matrix,
            horizon=1.0,
            stages=(ImpulseStage(0.5, s1.stages[0].c, np.zeros((2, 1))),),
            validate=False,
        )
        report = validate_system(broken)
        assert not report.ok
        assert any("dimension mismatch" in v for v in report.violations)

    def test_constructor_raises_on_violation(self, s1):
        with pytest.raises(ValidationError):
            ImpulsiveSystem(
                generator=s1.generator,
                input_matrix=s1.input_matrix,
                horizon=1.0,
                stages=(ImpulseStage(1.5, s1.stages[0].c, s1.stages[0].d),),
            )

    def test_non_increasing_times_reported(self, s1):
        stage = s1.stages[0]
        broken = ImpulsiveSystem(
            generator=s1.generator,
            input_matrix=s1.input_matrix,
            horizon=1.0,
            stages=(ImpulseStage(0.5, stage.c, stage.d), ImpulseStage(0.25, stage.c, stage.d)),
            validate=False,
        )
        assert any("strictly increasing" in v for v in validate_system(broken).violations)


class TestSemigroup:
    def test_dense_identity(self):
        g = DenseGenerator(np.zeros((1, 1)))
        assert_allclose(semigroup_apply(g, 2.7, np.array([3.0])), [3.0])

    def test_rotation_quarter_period(self):
        g = SpectralBlocks([1.0])
        assert_allclose(semigroup_apply(g, np.pi / 2, np.array([1.0, 0.0])), [0.0, -1.0], atol=1e-15)

    def test_dense_nilpotent_by_hand(self):
        g = DenseGenerator(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert_allclose(semigroup_apply(g, 1.0, np.array([0.0, 1.0])), [1.0, 1.0], rtol=1e-14)

    def test_adjoint_identity(self):
        g = DenseGenerator(np.zeros((1, 1)))
        assert_allclose(semigroup_adjoint_apply(g, 0.3, np.array([3.0])), [3.0])

    def test_adjoint_rotation_inverts(self):
        g = SpectralBlocks([1.0])
        assert_allclose(
            semigroup_adjoint_apply(g, np.pi / 2, np.array([0.0, -1.0])), [1.0, 0.0], atol=1e-15
        )

    def test_adjoint_dense_transpose_by_hand(self):
        g = DenseGenerator(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert_allclose(semigroup_adjoint_apply(g, 1.0, np.array([1.0, 0.0])), [1.0, 1.0], rtol=1e-14)

    def test_rejects_nonfinite_time(self):
        g = DenseGenerator(np.zeros((1, 1)))
        with pytest.raises(ValueError):
            semigroup_apply(g, np.nan, np.array([1.0]))

    def test_dense_rejects_negative_time(self):
        g = DenseGenerator(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            semigroup_apply(g, -0.1, np.zeros(2))

    @pytest.mark.parametrize("seed", range(6))
    def test_semigroup_property(self, seed):
        rng = np.random.default_rng(seed)
        sys = random_system(rng, max_n=8, with_impulses=False)
        g = sys.generator
        t, s = rng.uniform(0.0, 2.0, size=2)
        x = rng.standard_normal(g.dim)
        x /= np.linalg.norm(x)
        lhs = semigroup_apply(g, t + s, x)
        rhs = semigroup_apply(g, t, semigroup_apply(g, s, x))
        assert np.linalg.norm(lhs - rhs) <= 1e-10

    @pytest.mark.parametrize("seed", range(6))
    def test_adjoint_pairing(self, seed):
        rng = np.random.default_rng(100 + seed)
        sys = random_system(rng, max_n=8, with_impulses=False)
        g = sys.generator
        t = float(rng.uniform(0.0, 2.0))
        x = rng.standard_normal(g.dim)
        y = rng.standard_normal(g.dim)
        lhs = float(semigroup_apply(g, t, x) @ y)
        rhs = float(x @ semigroup_adjoint_apply(g, t, y))
        assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))

    @pytest.mark.parametrize("m", [0.5, 1.0, 2.5])
    def test_block_energy_conservation(self, m):
        # the canonical Euclidean norm per block is the wave energy
        # m^2 alpha^2 + beta^2 written in canonical coordinates
        g = SpectralBlocks([m])
        rng = np.random.default_rng(7)
        y = rng.standard_normal(2)
        for t in rng.uniform(-5.0, 5.0, size=10):
            yt = semigroup_apply(g, t, y)
            energy = yt @ yt
            assert abs(energy - y @ y) <= 1e-10 * (y @ y)
            # equivalently in wave coefficients (alpha, beta) = (y1/m, y2)
            alpha, beta = yt[0] / m, yt[1]
            assert abs(m * m * alpha * alpha + beta * beta - y @ y) <= 1e-10 * (y @ y)

    def test_generator_matrix_matches_semigroup(self):
        g = SpectralBlocks([1.0, 2.0])
        a = generator_matrix(g)
        t = 0.37
        import scipy.linalg

        assert_allclose(semigroup_matrix(g, t), scipy.linalg.expm(t * a), rtol=0, atol=1e-13)


class TestPropagators:
    def test_jump_propagator_s1(self, s1):
        assert_allclose(jump_propagator_apply(s1, 1, np.array([1.0])), [1.5])

    def test_jump_propagator_identity(self):
        sys = ImpulsiveSystem(
            generator=DenseGenerator(np.zeros((2, 2))),
            input_matrix=np.eye(2),
            horizon=1.0,
            stages=(ImpulseStage(0.4, np.zeros((2, 2)), np.eye(2)),),
        )
        x = np.array([1.0, -2.0])
        assert_allclose(jump_propagator_apply(sys, 1, x), x)

    def test_jump_propagator_annihilates(self, s1):
        sys = ImpulsiveSystem(
            generator=s1.generator,
            input_matrix=s1.input_matrix,
            horizon=1.0,
            stages=(ImpulseStage(0.5, np.array([[-1.0]]), np.array([[1.0]])),),
        )
        assert_allclose(jump_propagator_apply(sys, 1, np.array([4.0])), [0.0])

    def test_product_single_factor(self, s1):
        assert_allclose(product_propagator_apply(s1, 1, 1, np.array([2.0])), [3.0])

    def test_product_empty_convention(self, s1):
        x = np.array([0.7])
        assert_allclose(product_propagator_apply(s1, 1, 2, x), x)

    def test_product_two_stage_scalar(self):
        sys = ImpulsiveSystem(
            generator=DenseGenerator(np.zeros((1, 1))),
            input_matrix=np.array([[1.0]]),
            horizon=1.0,
            stages=(
                ImpulseStage(0.3, np.array([[0.5]]), np.array([[1.0]])),
                ImpulseStage(0.6, np.array([[1.0]]), np.array([[1.0]])),
            ),
        )
        assert_allclose(product_propagator_apply(sys, 2, 1, np.array([1.0])), [3.0])

    def test_product_equals_composition_exactly(self):
        rng = np.random.default_rng(42)
        sys = random_system(rng, max_p=4)
        while sys.p < 2:
            sys = random_system(rng, max_p=4)
        x = rng.standard_normal(sys.n)
        composed = x
        for j in range(1, sys.p + 1):
            composed = jump_propagator_apply(sys, j, composed)
        assert np.array_equal(product_propagator_apply(sys, sys.p, 1, x), composed)

    def test_index_out_of_range(self, s1):
        with pytest.raises(ValueError):
            jump_propagator_apply(s1, 2, np.array([1.0]))
        with pytest.raises(ValueError):
            product_propagator_apply(s1, 1, 0, np.array([1.0]))
