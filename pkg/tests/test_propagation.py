import numpy as np
import pytest
from numpy.testing import assert_allclose

from impulsectrl import (
    ControlPair,
    adjoint_post_impulse,
    adjoint_solution,
    duality_gap,
    mild_solution,
    piecewise_constant,
    simulate,
    state_after_impulse,
    zero_control,
)
from impulsectrl.model import DenseGenerator, ImpulseStage, ImpulsiveSystem, apply_jump
from conftest import FAST_QUAD, random_pwc_control, random_system
from oracles import expanded_state_after_impulse, ivp_adjoint_solution, ivp_mild_solution


def unit_control_s1(s1):
    return ControlPair(piecewise_constant(s1, [[[1.0]], [[1.0]]]), (np.array([1.0]),))


class TestStateAfterImpulse:
    def test_free_term_only(self, s1):
        assert_allclose(state_after_impulse(s1, [1.0], zero_control(s1), 1), [1.5])

    def test_forced_with_impulse(self, s1):
        assert_allclose(state_after_impulse(s1, [0.0], unit_control_s1(s1), 1), [1.75], rtol=1e-13)

    def test_zero_everything(self):
        rng = np.random.default_rng(3)
        sys = random_system(rng)
        while sys.p == 0:
            sys = random_system(rng)
        out = state_after_impulse(sys, np.zeros(sys.n), zero_control(sys), sys.p, FAST_QUAD)
        assert_allclose(out, np.zeros(sys.n), atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_expanded_display(self, seed):
        # the recursion must reproduce the fully unrolled
        # product/quadrature/impulse-sum formula
        rng = np.random.default_rng(200 + seed)
        sys = random_system(rng, max_n=4, max_p=3, dense_only=True)
        while sys.p == 0:
            sys = random_system(rng, max_n=4, max_p=3, dense_only=True)
        w = random_pwc_control(rng, sys)
        x0 = rng.standard_normal(sys.n)
        for k in range(1, sys.p + 1):
            got = state_after_impulse(sys, x0, w, k, FAST_QUAD)
            want = expanded_state_after_impulse(sys, x0, w, k)
            assert np.linalg.norm(got - want) <= 1e-10 * (1.0 + np.linalg.norm(want))


class TestMildSolution:
    def test_free_terminal(self, s1):
        assert_allclose(mild_solution(s1, [1.0], zero_control(s1), 1.0), [1.5])

    def test_worked_example(self, s1):
        assert_allclose(mild_solution(s1, [0.0], unit_control_s1(s1), 1.0), [2.25], rtol=1e-13)

    def test_left_value_at_impulse(self, s1):
        assert_allclose(mild_solution(s1, [1.0], zero_control(s1), 0.5), [1.0])

    def test_time_out_of_range(self, s1):
        with pytest.raises(ValueError):
            mild_solution(s1, [1.0], zero_control(s1), 1.5)

    @pytest.mark.parametrize("seed", range(4))
    def test_superposition(self, seed):
        rng = np.random.default_rng(300 + seed)
        sys = random_system(rng, max_n=4, max_p=3)
        w = random_pwc_control(rng, sys)
        x0 = rng.standard_normal(sys.n)
        t = float(rng.uniform(0.0, sys.horizon))
        full = mild_solution(sys, x0, w, t, FAST_QUAD)
        free = mild_solution(sys, x0, zero_control(sys), t, FAST_QUAD)
        forced = mild_solution(sys, np.zeros(sys.n), w, t, FAST_QUAD)
        assert np.linalg.norm(full - (free + forced)) <= 1e-10 * (1.0 + np.linalg.norm(full))

    @pytest.mark.parametrize("seed", range(5))
    def test_oracle_equivalence(self, seed):
        rng = np.random.default_rng(400 + seed)
        sys = random_system(rng, max_n=4, max_p=3)
        w = random_pwc_control(rng, sys)
        x0 = rng.standard_normal(sys.n)
        for t in rng.uniform(0.0, sys.horizon, size=3):
            got = mild_solution(sys, x0, w, float(t), FAST_QUAD)
            want = ivp_mild_solution(sys, x0, w, float(t))
            assert np.linalg.norm(got - want) <= 1e-6 * (1.0 + np.linalg.norm(want))


class TestSimulate:
    def test_s1_grid(self, s1):
        traj = simulate(s1, [1.0], zero_control(s1), [0.0, 0.5, 1.0])
        assert traj.sides == ("-", "L", "R", "-")
        assert_allclose(traj.times, [0.0, 0.5, 0.5, 1.0])
        assert_allclose(traj.states.ravel(), [1.0, 1.0, 1.5, 1.5])

    def test_s2_forced(self, s2):
        w = ControlPair(piecewise_constant(s2, [[[1.0]]]), ())
        traj = simulate(s2, np.zeros(2), w, [1.0])
        assert_allclose(traj.states[-1], [1.0, 0.0], rtol=1e-13, atol=1e-15)

    def test_zero_trajectory(self):
        rng = np.random.default_rng(9)
        sys = random_system(rng)
        traj = simulate(sys, np.zeros(sys.n), zero_control(sys), np.linspace(0, sys.horizon, 7), FAST_QUAD)
        assert_allclose(traj.states, np.zeros_like(traj.states), atol=1e-14)

    def test_jump_identity_exact(self):
        rng = np.random.default_rng(10)
        sys = random_system(rng, max_p=4)
        while sys.p == 0:
            sys = random_system(rng, max_p=4)
        w = random_pwc_control(rng, sys)
        x0 = rng.standard_normal(sys.n)
        traj = simulate(sys, x0, w, np.linspace(0, sys.horizon, 9), FAST_QUAD)
        for k, stage in enumerate(sys.stages):
            rows = np.nonzero(traj.times == stage.time)[0]
            assert [traj.sides[i] for i in rows] == ["L", "R"]
            left, right = traj.states[rows[0]], traj.states[rows[1]]
            # identical floating-point expression, so equality is exact
            assert np.array_equal(right, apply_jump(stage, left, w.impulses[k]))

    def test_two_samples_per_impulse(self, s1):
        traj = simulate(s1, [1.0], zero_control(s1), np.linspace(0, 1, 11))
        assert sum(1 for t in traj.times if t == 0.5) == 2
        assert np.all(np.diff(traj.times) >= 0)

    def test_grid_outside_horizon(self, s1):
        with pytest.raises(ValueError):
            simulate(s1, [1.0], zero_control(s1), [2.0])


class TestAdjoint:
    def test_after_last_impulse(self, s1):
        assert_allclose(adjoint_solution(s1, [1.0], 0.75), [1.0])

    def test_before_impulse(self, s1):
        assert_allclose(adjoint_solution(s1, [1.0], 0.25), [1.5])

    def test_no_jump_no_drift(self):
        sys = ImpulsiveSystem(
            generator=DenseGenerator(np.zeros((2, 2))),
            input_matrix=np.eye(2),
            horizon=1.0,
            stages=(ImpulseStage(0.6, np.zeros((2, 2)), np.eye(2)),),
        )
        phi = np.array([0.3, -0.7])
        for t in [0.0, 0.3, 0.6, 0.9, 1.0]:
            assert_allclose(adjoint_solution(sys, phi, t), phi)

    def test_post_impulse_s1(self, s1):
        assert_allclose(adjoint_post_impulse(s1, [1.0], 1), [1.0])

    def test_post_impulse_two_stage(self):
        sys = ImpulsiveSystem(
            generator=DenseGenerator(np.zeros((1, 1))),
            input_matrix=np.array([[1.0]]),
            horizon=1.0,
            stages=(
                ImpulseStage(0.3, np.array([[0.5]]), np.array([[1.0]])),
                ImpulseStage(0.6, np.array([[1.0]]), np.array([[1.0]])),
            ),
        )
        assert_allclose(adjoint_post_impulse(sys, [1.0], 1), [2.0])

    def test_left_recursion_exact(self):
        rng = np.random.default_rng(11)
        sys = random_system(rng, max_p=3)
        while sys.p == 0:
            sys = random_system(rng, max_p=3)
        phi = rng.standard_normal(sys.n)
        for k, stage in enumerate(sys.stages, start=1):
            plus = adjoint_post_impulse(sys, phi, k)
            left = adjoint_solution(sys, phi, stage.time)
            assert_allclose(left, plus + stage.c.T @ plus, rtol=0, atol=1e-14)

    def test_terminal_window_formula(self):
        from impulsectrl import semigroup_adjoint_apply

        rng = np.random.default_rng(12)
        sys = random_system(rng, max_p=3)
        phi = rng.standard_normal(sys.n)
        for t in rng.uniform(sys.last_impulse_time, sys.horizon, size=4):
            got = adjoint_solution(sys, phi, float(t))
            want = semigroup_adjoint_apply(sys.generator, sys.horizon - float(t), phi)
            assert_allclose(got, want, rtol=0, atol=1e-13)

    @pytest.mark.parametrize("seed", range(4))
    def test_oracle_equivalence(self, seed):
        rng = np.random.default_rng(500 + seed)
        sys = random_system(rng, max_n=4, max_p=3)
        phi = rng.standard_normal(sys.n)
        impulse_times = set(float(t) for t in sys.times)
        for t in rng.uniform(0.0, sys.horizon, size=3):
            if float(t) in impulse_times:
                continue
            got = adjoint_solution(sys, phi, float(t))
            want = ivp_adjoint_solution(sys, phi, float(t))
            assert np.linalg.norm(got - want) <= 1e-6 * (1.0 + np.linalg.norm(want))


class TestDuality:
    def test_worked_example(self, s1):
        w = unit_control_s1(s1)
        gap = duality_gap(s1, [0.0], w, [1.0])
        assert abs(gap) <= 1e-12
        assert_allclose(mild_solution(s1, [0.0], w, 1.0) @ np.array([1.0]), 2.25, rtol=1e-13)

    def test_zero_control_any_phi(self):
        rng = np.random.default_rng(13)
        sys = random_system(rng, max_p=3)
        phi = rng.standard_normal(sys.n)
        x0 = rng.standard_normal(sys.n)
        assert abs(duality_gap(sys, x0, zero_control(sys), phi, FAST_QUAD)) <= 1e-10

    @pytest.mark.parametrize("seed", range(8))
    def test_randomized_identity(self, seed):
        rng = np.random.default_rng(600 + seed)
        sys = random_system(rng, max_n=6, max_p=4)
        w = random_pwc_control(rng, sys)
        phi = rng.standard_normal(sys.n)
        x0 = rng.standard_normal(sys.n)
        x_b = mild_solution(sys, x0, w, sys.horizon, FAST_QUAD)
        lhs_scale = abs(float(x_b @ phi))
        gap = duality_gap(sys, x0, w, phi, FAST_QUAD)
        assert abs(gap) <= 1e-8 * (1.0 + lhs_scale)
