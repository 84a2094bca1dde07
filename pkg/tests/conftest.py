import numpy as np
import pytest

from impulsectrl import (
    ControlPair,
    DenseGenerator,
    ImpulseStage,
    ImpulsiveSystem,
    SpectralBlocks,
    fixture_s1,
    fixture_s2,
    fixture_w3,
    piecewise_constant,
)
from impulsectrl.quadrature import QuadratureConfig

FAST_QUAD = QuadratureConfig(16)


@pytest.fixture
def s1():
    return fixture_s1()


@pytest.fixture
def s2():
    return fixture_s2()


@pytest.fixture
def w3():
    return fixture_w3()


@pytest.fixture
def fast_quad():
    return FAST_QUAD


def random_system(rng, max_n=6, max_p=4, dense_only=False, with_impulses=True):
    """A well-separated random system for property tests."""
    if dense_only or rng.random() < 0.5:
        n = int(rng.integers(1, max_n + 1))
        gen = DenseGenerator(0.8 * rng.standard_normal((n, n)))
    else:
        blocks = int(rng.integers(1, max_n // 2 + 1))
        gen = SpectralBlocks(rng.uniform(0.3, 3.0, size=blocks))
        n = 2 * blocks
    m = int(rng.integers(1, 3))
    horizon = float(rng.uniform(0.6, 1.8))
    p = int(rng.integers(0, max_p + 1)) if with_impulses else 0
    # impulse times separated by at least 5% of the horizon
    times = np.sort(rng.uniform(0.1 * horizon, 0.9 * horizon, size=p))
    while p >= 2 and np.min(np.diff(times)) < 0.05 * horizon:
        times = np.sort(rng.uniform(0.1 * horizon, 0.9 * horizon, size=p))
    stages = tuple(
        ImpulseStage(t, 0.5 * rng.standard_normal((n, n)), rng.standard_normal((n, m)))
        for t in times
    )
    return ImpulsiveSystem(
        generator=gen,
        input_matrix=rng.standard_normal((n, m)),
        horizon=horizon,
        stages=stages,
    )


def random_pwc_control(rng, sys):
    """Random piecewise-constant control aligned with the impulse grid."""
    values = [
        rng.standard_normal((int(rng.integers(1, 4)), sys.m_inputs)) for _ in range(sys.p + 1)
    ]
    law = piecewise_constant(sys, values)
    impulses = tuple(rng.standard_normal(sys.m_inputs) for _ in range(sys.p))
    return ControlPair(law, impulses)
