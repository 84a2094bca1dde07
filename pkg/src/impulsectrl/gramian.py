"""The four controllability operators and the control-to-state map M.

With Q_k denoting the free propagator from just after stage k to the
horizon (Q_p = S(b - t_p), Q_{k-1} = Q_k (I + C_k) S(t_k - t_{k-1}), and
Q_0 the full zero-control propagator), the operators assemble as

    gamma       = int_{t_p}^{b} S(b-s) B B^T S^T(b-s) ds
    gamma_tilde = Q_p D_p D_p^T Q_p^T
    theta       = sum_{i=1}^{p} Q_i G_i Q_i^T,
                  G_i = int_{t_{i-1}}^{t_i} S_C(t_i,s) B B^T S_C^T(t_i,s) ds
    theta_tilde = sum_{k=1}^{p-1} Q_k D_k D_k^T Q_k^T

and their sum is M M^T: the Gramian of the combined distributed-plus-impulse
control map.  Integrals use the shared Gauss-Legendre rule; node
contributions accumulate through a fixed pairwise summation tree, so
assembly is deterministic for a given node count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .model import (
    AdjointFeedbackLaw,
    ControlPair,
    ImpulsiveSystem,
    PiecewiseConstantLaw,
    semigroup_matrix,
    semigroup_propagate_batch,
)
from .propagation import adjoint_post_impulse, control_values
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, panel_rule

__all__ = [
    "GramianSet",
    "stage_propagators",
    "gamma_gramian",
    "gamma_tilde_gramian",
    "theta_gramian",
    "theta_tilde_gramian",
    "gramian_set",
    "apply_M",
    "apply_M_star",
    "control_inner_product",
]


def _sym(g: np.ndarray) -> np.ndarray:
    # scrub roundoff asymmetry before any eigen-analysis
    return 0.5 * (g + g.T)


@dataclass(frozen=True)
class GramianSet:
    """The four symmetric nonnegative operators and their fixed-order sum."""

    theta: np.ndarray
    gamma: np.ndarray
    theta_tilde: np.ndarray
    gamma_tilde: np.ndarray
    total: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        for name in ("theta", "gamma", "theta_tilde", "gamma_tilde"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        total = ((self.theta + self.gamma) + self.theta_tilde) + self.gamma_tilde
        total.setflags(write=False)
        object.__setattr__(self, "total", total)

    def operative_total(self, include_impulse_controls: bool = True) -> np.ndarray:
        """W for synthesis: all four operators, or theta + gamma when the
        impulse controls are held fixed rather than optimized."""
        if include_impulse_controls:
            return self.total
        return self.theta + self.gamma


def stage_propagators(sys: ImpulsiveSystem) -> list[np.ndarray]:
    """[Q_0, ..., Q_p]: free propagators from just after stage k to the horizon."""
    q = [np.empty(0)] * (sys.p + 1)
    q[sys.p] = semigroup_matrix(sys.generator, sys.horizon - sys.last_impulse_time)
    for k in range(sys.p, 0, -1):
        stage = sys.stages[k - 1]
        prev_t = sys.stages[k - 2].time if k >= 2 else 0.0
        s = semigroup_matrix(sys.generator, stage.time - prev_t)
        q[k - 1] = q[k] @ (s + stage.c @ s)
    return q


def gamma_gramian(sys: ImpulsiveSystem, q: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Distributed-control Gramian over the final subinterval [t_p, b]."""
    nodes, weights = panel_rule(sys.last_impulse_time, sys.horizon, q)
    e = semigroup_propagate_batch(sys.generator, sys.horizon - nodes, sys.input_matrix)
    return _sym(kernels.weighted_outer_accumulate(e, weights))


def gamma_tilde_gramian(sys: ImpulsiveSystem) -> np.ndarray:
    """Final impulse-control Gramian S(b-t_p) D_p D_p^T S^T(b-t_p); zero when p = 0."""
    if sys.p == 0:
        return np.zeros((sys.n, sys.n))
    s = semigroup_matrix(sys.generator, sys.horizon - sys.last_impulse_time)
    sd = s @ sys.stages[-1].d
    return _sym(sd @ sd.T)


def theta_gramian(sys: ImpulsiveSystem, q: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Distributed-control Gramian accumulated over the first p subintervals."""
    n = sys.n
    if sys.p == 0:
        return np.zeros((n, n))
    qs = stage_propagators(sys)
    total = np.zeros((n, n))
    prev_t = 0.0
    for i, stage in enumerate(sys.stages, start=1):
        nodes, weights = panel_rule(prev_t, stage.time, q)
        e = semigroup_propagate_batch(sys.generator, stage.time - nodes, sys.input_matrix)
        e = e + np.einsum("rc,jcm->jrm", stage.c, e)  # (I + C_i) S(t_i - s) B
        inner = kernels.weighted_outer_accumulate(e, weights)
        total = total + qs[i] @ inner @ qs[i].T
        prev_t = stage.time
    return _sym(total)


def theta_tilde_gramian(sys: ImpulsiveSystem) -> np.ndarray:
    """Impulse-control Gramian for stages 1..p-1; empty sum when p <= 1."""
    n = sys.n
    if sys.p <= 1:
        return np.zeros((n, n))
    qs = stage_propagators(sys)
    total = np.zeros((n, n))
    for k in range(1, sys.p):
        qd = qs[k] @ sys.stages[k - 1].d
        total = total + qd @ qd.T
    return _sym(total)


def gramian_set(sys: ImpulsiveSystem, q: QuadratureConfig = DEFAULT_QUADRATURE) -> GramianSet:
    """Assemble all four operators and their sum W = M M^T."""
    return GramianSet(
        theta=theta_gramian(sys, q),
        gamma=gamma_gramian(sys, q),
        theta_tilde=theta_tilde_gramian(sys),
        gamma_tilde=gamma_tilde_gramian(sys),
    )


def apply_M(sys: ImpulsiveSystem, w: ControlPair, q: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """M w: the terminal state reached from zero by the control pair.

    Evaluated through the propagator-product display (push each subinterval
    integral and each impulse forward by Q_k), which is an independent code
    path from the stage recursion in :func:`impulsectrl.propagation.mild_solution`.
    """
    qs = stage_propagators(sys)
    out = np.zeros(sys.n)

    prev_t = 0.0
    for i, stage in enumerate(sys.stages, start=1):
        j = _forced_panel_integral(sys, w, i - 1, prev_t, stage.time, q)
        out = out + qs[i] @ (j + stage.c @ j)
        prev_t = stage.time
    out = out + _forced_panel_integral(sys, w, sys.p, sys.last_impulse_time, sys.horizon, q)
    for k, stage in enumerate(sys.stages, start=1):
        out = out + qs[k] @ (stage.d @ w.impulses[k - 1])
    return out


def _forced_panel_integral(sys, w, k, lo, hi, q):
    """int_lo^hi S(hi - s) B u(s) ds, split at the law's discontinuities."""
    total = np.zeros(sys.n)
    edges = [lo, hi]
    if isinstance(w.distributed, PiecewiseConstantLaw):
        edges = [lo, *(e for e in w.distributed.piece_edges(k)[1:-1] if lo < e < hi), hi]
    for a, e in zip(edges[:-1], edges[1:]):
        nodes, weights = panel_rule(a, e, q)
        g = semigroup_propagate_batch(sys.generator, hi - nodes, sys.input_matrix)
        u = control_values(sys, w.distributed, nodes)
        total = total + np.einsum("jnm,jm->n", g, weights[:, None] * u)
    return total


def apply_M_star(sys: ImpulsiveSystem, phi) -> ControlPair:
    """M* phi = (B* psi(.), {D_k* psi(t_k+)}), as an adjoint-feedback control pair."""
    phi = np.asarray(phi, dtype=np.float64)
    impulses = tuple(
        sys.stages[k - 1].d.T @ adjoint_post_impulse(sys, phi, k) for k in range(1, sys.p + 1)
    )
    return ControlPair(AdjointFeedbackLaw(phi), impulses)


def control_inner_product(
    sys: ImpulsiveSystem, w1: ControlPair, w2: ControlPair, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """<w1, w2>_1 = int_0^b <u1, u2> dt + sum_k <v_1k, v_2k>."""
    total = 0.0
    bounds = sys.boundaries
    for k in range(sys.p + 1):
        lo, hi = bounds[k], bounds[k + 1]
        edges = {lo, hi}
        for w in (w1, w2):
            if isinstance(w.distributed, PiecewiseConstantLaw):
                edges.update(e for e in w.distributed.piece_edges(k)[1:-1] if lo < e < hi)
        pts = sorted(edges)
        for a, e in zip(pts[:-1], pts[1:]):
            nodes, weights = panel_rule(a, e, q)
            u1 = control_values(sys, w1.distributed, nodes)
            u2 = control_values(sys, w2.distributed, nodes)
            total += float(weights @ np.einsum("jm,jm->j", u1, u2))
    for v1, v2 in zip(w1.impulses, w2.impulses):
        total += float(v1 @ v2)
    return total
