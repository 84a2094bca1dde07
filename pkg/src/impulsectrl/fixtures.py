"""Canonical fixtures shared by the test surface and the documentation.

S1: scalar system with one impulse; every Gramian has a hand closed form
    (theta = 1.125, gamma = 0.5, gamma_tilde = 1, theta_tilde = 0,
    W = 2.625).
S2: two-dimensional driftless system controlling only the first coordinate;
    W = diag(1, 0), the canonical uncontrollable example.
W3: three-mode wave model with gamma_m = 1/m and one fixed impulse, horizon
    1 + 2*pi, so the final window is exactly one period and
    lambda_min(Gamma) = pi/9.
"""

import numpy as np

from .model import DenseGenerator, ImpulseStage, ImpulsiveSystem
from .wave import WaveImpulse, WaveModel

__all__ = ["fixture_s1", "fixture_s2", "fixture_w3"]


def fixture_s1() -> ImpulsiveSystem:
    return ImpulsiveSystem(
        generator=DenseGenerator(np.zeros((1, 1))),
        input_matrix=np.array([[1.0]]),
        horizon=1.0,
        stages=(ImpulseStage(0.5, np.array([[0.5]]), np.array([[1.0]])),),
    )


def fixture_s2() -> ImpulsiveSystem:
    return ImpulsiveSystem(
        generator=DenseGenerator(np.zeros((2, 2))),
        input_matrix=np.array([[1.0], [0.0]]),
        horizon=1.0,
    )


def fixture_w3() -> WaveModel:
    return WaveModel(
        gamma=np.array([1.0, 0.5, 1.0 / 3.0]),
        alpha=np.zeros(3),
        beta=np.zeros(3),
        horizon=1.0 + 2.0 * np.pi,
        stages=(
            WaveImpulse(1.0, a=np.array([0.1, 0.0, 0.0]), b=np.array([0.0, 0.2, 0.0])),
        ),
    )
