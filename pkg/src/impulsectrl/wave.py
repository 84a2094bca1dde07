"""Truncated impulsive wave equation on (0, pi) with Dirichlet ends.

The PDE

    x_tt = x_thth + h(theta) u(t),     h(theta) = sum_m gamma_m sin(m theta),

with state jumps Delta x = a_i(theta), Delta x_t = b_i(theta) at times t_i,
diagonalizes over the sine basis: mode m carries the coefficient pair
(alpha_m, beta_m) of position and velocity.  The natural energy inner
product sum_m (m^2 alpha alpha~ + beta beta~) becomes Euclidean in the
canonical coordinates (m alpha_m, beta_m), in which the per-mode evolution
is the pure rotation block of :class:`impulsectrl.model.SpectralBlocks` and
every adjoint is a transpose.  This module performs that isometric change
of coordinates, builds the equivalent ``ImpulsiveSystem``, and reproduces
the controllability threshold b - t_p >= 2pi with nonvanishing gamma_m by
Fourier-coefficient recovery from the scalar adjoint trace.

The impulses are fixed data, not decision variables: the built system
carries them as D_k v_k with D_k the canonical impulse column and v_k = 1,
and synthesis holds them fixed (they stay in the forward dynamics but drop
out of the decision Gramian).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .controllability import (
    DEFAULT_RANK_TOL,
    ControllabilityReport,
    controllability_report,
    positivity_test,
)
from .errors import ValidationError
from .gramian import gamma_gramian, gramian_set
from .model import ImpulseStage, ImpulsiveSystem, SpectralBlocks
from .propagation import control_values, simulate
from .quadrature import QuadratureConfig, panel_rule
from .synthesis import SynthesisResult, steer

__all__ = [
    "WaveImpulse",
    "WaveModel",
    "WaveDemoResult",
    "wave_to_canonical",
    "canonical_to_wave",
    "impulse_canonical",
    "fixed_impulse_controls",
    "build_wave_system",
    "adjoint_trace",
    "fourier_recovery",
    "wave_demo",
    "THETA_GRID_POINTS",
]

THETA_GRID_POINTS = 257  # uniform on [0, pi]
WAVE_QUADRATURE = QuadratureConfig(256)


@dataclass(frozen=True)
class WaveImpulse:
    """Fourier sine coefficients of one fixed impulse (position jump a, velocity jump b)."""

    time: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "a", np.array(self.a, dtype=np.float64))
        object.__setattr__(self, "b", np.array(self.b, dtype=np.float64))


@dataclass(frozen=True)
class WaveModel:
    """Truncated Fourier description of the impulsive wave equation.

    ``gamma[m-1]`` is the m-th sine coefficient of the control shape;
    ``alpha``/``beta`` are the initial position/velocity coefficients.
    """

    gamma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    horizon: float
    stages: tuple[WaveImpulse, ...] = ()

    def __post_init__(self):
        for name in ("gamma", "alpha", "beta"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "stages", tuple(self.stages))
        m = self.modes
        bad = []
        for name in ("gamma", "alpha", "beta"):
            arr = getattr(self, name)
            if arr.ndim != 1 or arr.shape[0] != m:
                bad.append(f"{name} must be a length-{m} vector")
            elif not np.all(np.isfinite(arr)):
                bad.append(f"{name} has non-finite entries")
        for i, st in enumerate(self.stages, start=1):
            if st.a.shape != (m,) or st.b.shape != (m,):
                bad.append(f"impulse {i} coefficient lists must have length {m}")
        if bad:
            raise ValidationError(bad)

    @property
    def modes(self) -> int:
        return self.gamma.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(1, self.modes + 1, dtype=np.float64)

    @property
    def last_impulse_time(self) -> float:
        return self.stages[-1].time if self.stages else 0.0

    def truncated(self, modes: int) -> "WaveModel":
        """Keep only the first ``modes`` Fourier modes."""
        if not 1 <= modes <= self.modes:
            raise ValueError(f"cannot truncate a {self.modes}-mode model to {modes} modes")
        return WaveModel(
            gamma=self.gamma[:modes],
            alpha=self.alpha[:modes],
            beta=self.beta[:modes],
            horizon=self.horizon,
            stages=tuple(
                WaveImpulse(st.time, st.a[:modes], st.b[:modes]) for st in self.stages
            ),
        )


def wave_to_canonical(alpha, beta) -> np.ndarray:
    """Isometry (alpha_m, beta_m) -> interleaved (m alpha_m, beta_m)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    m = np.arange(1, alpha.shape[0] + 1)
    out = np.empty(2 * alpha.shape[0])
    out[0::2] = m * alpha
    out[1::2] = beta
    return out


def canonical_to_wave(y) -> tuple[np.ndarray, np.ndarray]:
    """Inverse isometry: canonical coordinates back to (alpha, beta) coefficients."""
    y = np.asarray(y, dtype=np.float64)
    m = np.arange(1, y.shape[0] // 2 + 1)
    return y[0::2] / m, np.array(y[1::2])


def impulse_canonical(stage: WaveImpulse) -> np.ndarray:
    """Canonical coordinates of a fixed impulse: per mode (m a_m, b_m)."""
    return wave_to_canonical(stage.a, stage.b)


def fixed_impulse_controls(wm: WaveModel) -> list[np.ndarray]:
    """The held impulse-control vectors: v_k = [1] scales each impulse column."""
    return [np.ones(1) for _ in wm.stages]


def build_wave_system(wm: WaveModel) -> ImpulsiveSystem:
    """Map the wave model to canonical coordinates as an ``ImpulsiveSystem``.

    B is the single column with per-mode block (0, gamma_m); each fixed
    impulse becomes a stage with C = 0 and D the impulse's canonical
    coordinates as an n x 1 column, driven by v_k = 1.
    """
    n = 2 * wm.modes
    b_col = np.zeros((n, 1))
    b_col[1::2, 0] = wm.gamma
    stages = tuple(
        ImpulseStage(st.time, np.zeros((n, n)), impulse_canonical(st)[:, None]) for st in wm.stages
    )
    return ImpulsiveSystem(
        generator=SpectralBlocks(wm.frequencies),
        input_matrix=b_col,
        horizon=wm.horizon,
        stages=stages,
    )


def adjoint_trace(wm: WaveModel, phi, t: float) -> float:
    """B* S*(b - t) phi as the explicit series over modes.

    Equals sum_m gamma_m (m alpha_m sin(m (b-t)) + beta_m cos(m (b-t))) for
    phi with wave coefficients (alpha, beta); must agree with the generic
    matrix evaluation B^T S*(b-t) phi to machine precision.
    """
    t = float(t)
    if not wm.last_impulse_time <= t <= wm.horizon:
        raise ValueError(f"trace time {t} outside [{wm.last_impulse_time}, {wm.horizon}]")
    phi = np.asarray(phi, dtype=np.float64)
    tau = wm.horizon - t
    m = wm.frequencies
    return float(np.sum(wm.gamma * (phi[0::2] * np.sin(m * tau) + phi[1::2] * np.cos(m * tau))))


def fourier_recovery(wm: WaveModel, trace: Callable[[float], float], nodes: int = 256) -> np.ndarray:
    """Recover (m gamma_m alpha_m, gamma_m beta_m) pairs from one trace period.

    The trace s -> B* S*(s) phi is 2pi-periodic, so on a horizon with
    b - t_p >= 2pi the sine/cosine moments return the weighted Fourier data:
    a vanishing trace forces alpha = beta = 0 whenever every gamma_m is
    nonzero, which is the injectivity behind the controllability theorem.

    Returns an (M, 2) array: column 0 from the sine moments, column 1 from
    the cosine moments.
    """
    if wm.horizon - wm.last_impulse_time < 2.0 * np.pi:
        raise ValueError("horizon too short: need b - t_p >= 2*pi for Fourier recovery")
    s_nodes, weights = panel_rule(0.0, 2.0 * np.pi, QuadratureConfig(nodes))
    values = np.array([trace(float(s)) for s in s_nodes])
    out = np.empty((wm.modes, 2))
    for j, m in enumerate(wm.frequencies):
        out[j, 0] = float(weights @ (values * np.sin(m * s_nodes))) / np.pi
        out[j, 1] = float(weights @ (values * np.cos(m * s_nodes))) / np.pi
    return out


@dataclass(frozen=True)
class WaveDemoResult:
    """Everything the wave demo reports."""

    system: ImpulsiveSystem
    lambda_min_gamma: float
    gamma_eigs: np.ndarray
    verdict: str
    report: Optional[ControllabilityReport]
    synthesis: SynthesisResult
    profile_times: np.ndarray
    profile_thetas: np.ndarray
    profile_values: np.ndarray
    trace_times: np.ndarray
    trace_values: np.ndarray


def _profile_from_states(states: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """x(t, theta) = sum_m alpha_m(t) sin(m theta) from canonical states."""
    modes = states.shape[1] // 2
    m = np.arange(1, modes + 1)
    alphas = states[:, 0::2] / m  # (T, M)
    return alphas @ np.sin(np.outer(m, thetas))


def wave_demo(
    wm: WaveModel,
    target_alpha: Sequence[float],
    target_beta: Sequence[float],
    epsilon: float,
    q: QuadratureConfig = WAVE_QUADRATURE,
    rank_tol: float = DEFAULT_RANK_TOL,
    time_samples: int = 129,
) -> WaveDemoResult:
    """Build the system, certify controllability through the final-window
    Gramian, steer to the target shape, and sample the profile x(t, theta).

    The impulses stay fixed: steering optimizes the distributed control only.
    """
    sys = build_wave_system(wm)
    gam = gamma_gramian(sys, q)
    gamma_eigs = np.linalg.eigvalsh(gam)
    lam_min, positive = positivity_test(gam, rank_tol)

    report = None
    if positive:
        verdict = "controllable"  # single positive Gramian suffices
    else:
        gs = gramian_set(sys, q)
        report = controllability_report(
            sys, q, rank_tol=rank_tol, include_impulse_controls=False, gramians=gs
        )
        verdict = report.verdict

    x0 = wave_to_canonical(wm.alpha, wm.beta)
    h = wave_to_canonical(np.asarray(target_alpha, dtype=np.float64), np.asarray(target_beta, dtype=np.float64))
    synthesis = steer(
        sys, q, x0, h, epsilon,
        include_impulse_controls=False,
        fixed_impulses=fixed_impulse_controls(wm),
    )

    grid = np.linspace(0.0, wm.horizon, time_samples)
    traj = simulate(sys, x0, synthesis.control, grid, q)
    thetas = np.linspace(0.0, np.pi, THETA_GRID_POINTS)
    profile = _profile_from_states(traj.states, thetas)
    trace_vals = control_values(sys, synthesis.control.distributed, grid)[:, 0]

    return WaveDemoResult(
        system=sys,
        lambda_min_gamma=lam_min,
        gamma_eigs=gamma_eigs,
        verdict=verdict,
        report=report,
        synthesis=synthesis,
        profile_times=traj.times,
        profile_thetas=thetas,
        profile_values=profile,
        trace_times=grid,
        trace_values=trace_vals,
    )
