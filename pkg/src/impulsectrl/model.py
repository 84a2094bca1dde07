"""Problem data for impulsive linear evolution systems.

A system is the tuple (generator, input matrix, impulse stages, horizon):

    x'(t) = A x(t) + B u(t)          t in [0, b] off the impulse times
    x(t_k+) = (I + C_k) x(t_k) + D_k v_k      k = 1..p
    x(0) = x0

Generators come in two flavours.  ``DenseGenerator`` wraps an explicit
matrix A and propagates with the matrix exponential.  ``SpectralBlocks``
encodes a direct sum of 2x2 rotation blocks, one per frequency m, acting on
canonical coordinate pairs; this is the truncated wave-equation semigroup
after the isometric change of coordinates performed by
:mod:`impulsectrl.wave`.  In canonical coordinates every adjoint is a plain
transpose, so both flavours satisfy <S(t)x, y> = <x, S*(t)y> in the
Euclidean inner product.

All types are immutable after construction and every operation is pure.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field
from typing import Sequence, Union

import numpy as np

from ._backend import kernels
from .errors import ValidationError

__all__ = [
    "DenseGenerator",
    "SpectralBlocks",
    "GeneratorSpec",
    "ImpulseStage",
    "ImpulsiveSystem",
    "PiecewiseConstantLaw",
    "AdjointFeedbackLaw",
    "ControlLaw",
    "ControlPair",
    "ValidationReport",
    "validate_system",
    "validate_control",
    "semigroup_apply",
    "semigroup_adjoint_apply",
    "semigroup_propagate_batch",
    "semigroup_matrix",
    "generator_matrix",
    "jump_propagator_apply",
    "product_propagator_apply",
    "piecewise_constant",
    "zero_control",
]


def _frozen_array(value, dtype=np.float64, ndim=None):
    arr = np.array(value, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DenseGenerator:
    """Bounded generator given as an explicit real matrix."""

    a: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.a, ndim=2)
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"generator matrix must be square, got {a.shape}")
        object.__setattr__(self, "a", a)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class SpectralBlocks:
    """Direct sum of rotation blocks, one per positive frequency.

    Frequency m contributes the canonical-coordinate block

        S_m(t) = [[cos(m t), sin(m t)], [-sin(m t), cos(m t)]],

    an orthogonal matrix, so S*(t) = S(t)^T = S(-t) and the formula is
    meaningful for every real t (group, not just semigroup).
    """

    frequencies: np.ndarray

    def __post_init__(self):
        f = _frozen_array(self.frequencies, ndim=1)
        object.__setattr__(self, "frequencies", f)

    @property
    def dim(self) -> int:
        return 2 * self.frequencies.shape[0]


GeneratorSpec = Union[DenseGenerator, SpectralBlocks]


@dataclass(frozen=True)
class ImpulseStage:
    """One impulse: at ``time`` the state jumps by C x(t-) + D v."""

    time: float
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "c", _frozen_array(self.c, ndim=2))
        object.__setattr__(self, "d", _frozen_array(self.d, ndim=2))


@dataclass(frozen=True)
class ImpulsiveSystem:
    """Full problem data; validated at construction unless ``validate=False``.

    ``validate=False`` skips the invariant checks so that
    :func:`validate_system` can produce a report for a broken configuration.
    """

    generator: GeneratorSpec
    input_matrix: np.ndarray
    horizon: float
    stages: tuple[ImpulseStage, ...] = ()
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        object.__setattr__(self, "input_matrix", _frozen_array(self.input_matrix, ndim=2))
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "stages", tuple(self.stages))
        if validate:
            report = validate_system(self)
            if not report.ok:
                raise ValidationError(report.violations)

    @property
    def n(self) -> int:
        """State dimension."""
        return self.generator.dim

    @property
    def m_inputs(self) -> int:
        """Control dimension (columns of B and of every D_k)."""
        return self.input_matrix.shape[1]

    @property
    def p(self) -> int:
        """Number of impulse stages."""
        return len(self.stages)

    @property
    def times(self) -> np.ndarray:
        """Impulse times t_1..t_p."""
        return np.array([s.time for s in self.stages])

    @property
    def boundaries(self) -> np.ndarray:
        """Subinterval boundaries 0 = t_0 < t_1 < ... < t_p < t_{p+1} = b."""
        return np.concatenate(([0.0], self.times, [self.horizon]))

    @property
    def last_impulse_time(self) -> float:
        """t_p, or 0 when the system has no impulses."""
        return self.stages[-1].time if self.stages else 0.0


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def validate_system(sys: ImpulsiveSystem) -> ValidationReport:
    """Check every structural invariant; report style, never raises."""
    bad: list[str] = []
    gen = sys.generator
    if isinstance(gen, DenseGenerator):
        if not np.all(np.isfinite(gen.a)):
            bad.append("generator matrix has non-finite entries")
    else:
        f = gen.frequencies
        if not np.all(np.isfinite(f)):
            bad.append("spectral frequencies must be finite")
        elif f.size and np.min(f) <= 0.0:
            bad.append("spectral frequencies must be strictly positive")

    n = gen.dim
    if not math.isfinite(sys.horizon) or sys.horizon <= 0.0:
        bad.append(f"horizon must be a positive finite number, got {sys.horizon}")
    if not np.all(np.isfinite(sys.input_matrix)):
        bad.append("input matrix B has non-finite entries")
    if sys.input_matrix.shape[0] != n:
        bad.append(f"dimension mismatch: B has {sys.input_matrix.shape[0]} rows, state dimension is {n}")

    m = sys.input_matrix.shape[1]
    prev = 0.0
    for k, stage in enumerate(sys.stages, start=1):
        if not math.isfinite(stage.time):
            bad.append(f"impulse time t_{k} is not finite")
            continue
        if not (0.0 < stage.time < sys.horizon):
            bad.append(f"impulse time t_{k} = {stage.time} outside (0, {sys.horizon})")
        if stage.time <= prev:
            bad.append(f"impulse times not strictly increasing at t_{k} = {stage.time}")
        prev = stage.time
        if stage.c.shape != (n, n):
            bad.append(f"dimension mismatch: C_{k} has shape {stage.c.shape}, expected {(n, n)}")
        if stage.d.shape != (n, m):
            bad.append(f"dimension mismatch: D_{k} has shape {stage.d.shape}, expected {(n, m)}")
        if not (np.all(np.isfinite(stage.c)) and np.all(np.isfinite(stage.d))):
            bad.append(f"impulse stage {k} has non-finite entries")
    return ValidationReport(ok=not bad, violations=tuple(bad))


# ---------------------------------------------------------------------------
# control laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseConstantLaw:
    """Piecewise-constant control on a per-subinterval uniform grid.

    ``breaks`` are the system's subinterval boundaries (so no constant piece
    ever straddles an impulse time); subinterval k is divided into
    ``values[k].shape[0]`` equal pieces with the rows of ``values[k]`` as
    control values.
    """

    breaks: tuple[float, ...]
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(t) for t in self.breaks))
        object.__setattr__(self, "values", tuple(_frozen_array(v, ndim=2) for v in self.values))
        if len(self.values) != len(self.breaks) - 1:
            raise ValueError("need one value grid per subinterval")
        for v in self.values:
            if v.shape[0] == 0:
                raise ValueError("each subinterval needs at least one constant piece")

    def piece_edges(self, k: int) -> np.ndarray:
        """Edges of the uniform pieces inside subinterval ``k``."""
        lo, hi = self.breaks[k], self.breaks[k + 1]
        return np.linspace(lo, hi, self.values[k].shape[0] + 1)

    def value_at(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.breaks, t, side="left")) - 1
        k = min(max(k, 0), len(self.values) - 1)
        lo, hi = self.breaks[k], self.breaks[k + 1]
        count = self.values[k].shape[0]
        j = int((t - lo) / (hi - lo) * count)
        j = min(max(j, 0), count - 1)
        return self.values[k][j]


@dataclass(frozen=True)
class AdjointFeedbackLaw:
    """Control law u(t) = B* psi(t) driven by the adjoint state seeded by phi.

    This is the minimum-energy control family: the synthesis module picks
    phi = phi_hat and the propagation module evaluates the law through the
    closed-form adjoint solution.
    """

    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen_array(self.phi, ndim=1))


ControlLaw = Union[PiecewiseConstantLaw, AdjointFeedbackLaw]


@dataclass(frozen=True)
class ControlPair:
    """A control w = (u(.), {v_k}): distributed law plus impulse vectors."""

    distributed: ControlLaw
    impulses: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "impulses", tuple(_frozen_array(v, ndim=1) for v in self.impulses))


def piecewise_constant(sys: ImpulsiveSystem, values: Sequence) -> PiecewiseConstantLaw:
    """Build a piecewise-constant law on the system's subinterval grid."""
    vals = tuple(np.atleast_2d(np.asarray(v, dtype=np.float64)) for v in values)
    return PiecewiseConstantLaw(breaks=tuple(sys.boundaries), values=vals)


def zero_control(sys: ImpulsiveSystem) -> ControlPair:
    """The zero control pair (one zero piece per subinterval, zero impulses)."""
    law = piecewise_constant(sys, [np.zeros((1, sys.m_inputs)) for _ in range(sys.p + 1)])
    return ControlPair(law, tuple(np.zeros(sys.m_inputs) for _ in range(sys.p)))


def validate_control(sys: ImpulsiveSystem, w: ControlPair) -> ValidationReport:
    """Check a control pair against the system it is meant to drive."""
    bad: list[str] = []
    if len(w.impulses) != sys.p:
        bad.append(f"control has {len(w.impulses)} impulse vectors, system has {sys.p} stages")
    for k, v in enumerate(w.impulses, start=1):
        if v.shape != (sys.m_inputs,):
            bad.append(f"impulse control v_{k} has shape {v.shape}, expected {(sys.m_inputs,)}")
        elif not np.all(np.isfinite(v)):
            bad.append(f"impulse control v_{k} has non-finite entries")
    law = w.distributed
    if isinstance(law, PiecewiseConstantLaw):
        if len(law.breaks) != sys.p + 2 or not np.allclose(law.breaks, sys.boundaries, rtol=0.0, atol=0.0):
            bad.append("piecewise-constant grid does not align with the impulse times")
        for k, v in enumerate(law.values):
            if v.shape[1] != sys.m_inputs:
                bad.append(f"piecewise values in subinterval {k} have width {v.shape[1]}, expected {sys.m_inputs}")
    else:
        if law.phi.shape != (sys.n,):
            bad.append(f"adjoint feedback seed has shape {law.phi.shape}, expected {(sys.n,)}")
    return ValidationReport(ok=not bad, violations=tuple(bad))


# ---------------------------------------------------------------------------
# semigroup providers
# ---------------------------------------------------------------------------


def _check_time(g: GeneratorSpec, t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"semigroup time must be finite, got {t}")
    if isinstance(g, DenseGenerator) and t < 0.0:
        raise ValueError(f"dense generators define a semigroup: t must be >= 0, got {t}")
    return t


def semigroup_apply(g: GeneratorSpec, t: float, x: np.ndarray) -> np.ndarray:
    """S(t) x: matrix exponential (dense) or rotation blocks (spectral)."""
    t = _check_time(g, t)
    x = np.asarray(x, dtype=np.float64)
    if isinstance(g, DenseGenerator):
        return kernels.pade_expm(t * g.a) @ x
    return kernels.rotation_propagate(g.frequencies, np.array([t]), x)[0]


def semigroup_adjoint_apply(g: GeneratorSpec, t: float, x: np.ndarray) -> np.ndarray:
    """S*(t) x; the transpose semigroup, which for rotation blocks is S(-t)."""
    t = _check_time(g, t)
    x = np.asarray(x, dtype=np.float64)
    if isinstance(g, DenseGenerator):
        return kernels.pade_expm(t * g.a.T) @ x
    return kernels.rotation_propagate(g.frequencies, np.array([-t]), x)[0]


def semigroup_propagate_batch(g: GeneratorSpec, ts, x, adjoint: bool = False) -> np.ndarray:
    """Stack of S(ts[j]) x (or S*(ts[j]) x); the quadrature hot path."""
    ts = np.asarray(ts, dtype=np.float64)
    if not np.all(np.isfinite(ts)):
        raise ValueError("semigroup times must be finite")
    if isinstance(g, DenseGenerator):
        if ts.size and float(np.min(ts)) < 0.0:
            raise ValueError("dense generators define a semigroup: all times must be >= 0")
        return kernels.dense_propagate(g.a.T if adjoint else g.a, ts, x)
    return kernels.rotation_propagate(g.frequencies, -ts if adjoint else ts, x)


def semigroup_matrix(g: GeneratorSpec, t: float) -> np.ndarray:
    """S(t) as a dense matrix."""
    return semigroup_apply(g, t, np.eye(g.dim))


def generator_matrix(g: GeneratorSpec) -> np.ndarray:
    """The generator as a dense matrix (rotation blocks expand to [[0, m], [-m, 0]])."""
    if isinstance(g, DenseGenerator):
        return np.array(g.a)
    n = g.dim
    a = np.zeros((n, n))
    for i, m in enumerate(g.frequencies):
        a[2 * i, 2 * i + 1] = m
        a[2 * i + 1, 2 * i] = -m
    return a


def _check_stage_index(sys: ImpulsiveSystem, j: int) -> int:
    j = int(j)
    if not 1 <= j <= sys.p:
        raise ValueError(f"stage index {j} outside 1..{sys.p}")
    return j


def apply_jump(stage: ImpulseStage, x_minus: np.ndarray, v: np.ndarray) -> np.ndarray:
    """The jump map x(t_k+) = (I + C_k) x(t_k-) + D_k v_k.

    This exact expression is shared by simulation and by the trajectory
    invariant check, so the identity holds in floating point, not just in
    exact arithmetic.
    """
    return x_minus + stage.c @ x_minus + stage.d @ v


def jump_propagator_apply(sys: ImpulsiveSystem, j: int, x: np.ndarray) -> np.ndarray:
    """One free propagation step through stage j: (I + C_j) S(t_j - t_{j-1}) x."""
    j = _check_stage_index(sys, j)
    t_prev = sys.stages[j - 2].time if j >= 2 else 0.0
    y = semigroup_apply(sys.generator, sys.stages[j - 1].time - t_prev, x)
    return y + sys.stages[j - 1].c @ y


def product_propagator_apply(sys: ImpulsiveSystem, k: int, i: int, x: np.ndarray) -> np.ndarray:
    """Descending product of stage propagators applied to x.

    Applies stage i first and stage k last; an empty range (i > k) is the
    identity, matching the empty-product convention.
    """
    if i <= k:
        _check_stage_index(sys, k)
        _check_stage_index(sys, i)
    x = np.asarray(x, dtype=np.float64)
    for j in range(i, k + 1):
        x = jump_propagator_apply(sys, j, x)
    return x
