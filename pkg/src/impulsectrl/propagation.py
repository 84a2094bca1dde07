"""Closed-form propagation through impulses.

Forward states follow the stage recursion

    x(t) = S(t - t_k) x(t_k+) + int_{t_k}^{t} S(t - s) B u(s) ds,
    x(t_k+) = (I + C_k) x(t_k-) + D_k v_k,

which unrolls to the product/quadrature display of the mild solution.
Backward adjoint states follow

    psi(t) = S*(b - t) phi                     on (t_p, b],
    psi(t) = S*(t_k - t) (I + C_k^T) psi(t_k+) on (t_{k-1}, t_k],

with psi(t_k+) obtained by the reversed-order recursion.  Forward values at
an impulse time are the left limits (x(t_k) = x(t_k-)); the adjoint formula
likewise returns the value of the half-open interval containing t.

The duality pairing of the two solutions is exposed as
:func:`duality_gap`, the package's cross-cutting correctness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    AdjointFeedbackLaw,
    ControlLaw,
    ControlPair,
    ImpulsiveSystem,
    PiecewiseConstantLaw,
    apply_jump,
    semigroup_adjoint_apply,
    semigroup_apply,
    semigroup_propagate_batch,
)
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, panel_rule

__all__ = [
    "Trajectory",
    "control_values",
    "state_after_impulse",
    "mild_solution",
    "simulate",
    "adjoint_solution",
    "adjoint_solution_batch",
    "adjoint_post_impulse",
    "duality_gap",
]


# ---------------------------------------------------------------------------
# adjoint solution (needed first: feedback laws evaluate through it)
# ---------------------------------------------------------------------------


def _adjoint_plus_states(sys: ImpulsiveSystem, phi: np.ndarray) -> list[np.ndarray]:
    """psi(t_k+) for k = 1..p, by the reversed-order stage recursion."""
    phi = np.asarray(phi, dtype=np.float64)
    p = sys.p
    if p == 0:
        return []
    plus: list[np.ndarray] = [np.empty(0)] * p
    plus[p - 1] = semigroup_adjoint_apply(sys.generator, sys.horizon - sys.stages[-1].time, phi)
    for k in range(p - 1, 0, -1):
        stage_next = sys.stages[k]
        g = plus[k] + stage_next.c.T @ plus[k]
        plus[k - 1] = semigroup_adjoint_apply(sys.generator, stage_next.time - sys.stages[k - 1].time, g)
    return plus


def adjoint_post_impulse(sys: ImpulsiveSystem, phi: np.ndarray, k: int) -> np.ndarray:
    """psi(t_k+): the right-limit adjoint value consumed by the duality sum."""
    k = int(k)
    if not 1 <= k <= sys.p:
        raise ValueError(f"stage index {k} outside 1..{sys.p}")
    return _adjoint_plus_states(sys, phi)[k - 1]


def _subinterval_index(boundaries: np.ndarray, t: float) -> int:
    """Index k such that t lies in (boundaries[k], boundaries[k+1]], with 0 at t = 0."""
    idx = int(np.searchsorted(boundaries, t, side="left")) - 1
    return min(max(idx, 0), len(boundaries) - 2)


def adjoint_solution_batch(sys: ImpulsiveSystem, phi: np.ndarray, ts) -> np.ndarray:
    """psi(ts[j]) stacked; each time is resolved on its half-open subinterval."""
    phi = np.asarray(phi, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    if ts.size and (np.min(ts) < 0.0 or np.max(ts) > sys.horizon):
        raise ValueError("adjoint times must lie within [0, horizon]")
    bounds = sys.boundaries
    plus = _adjoint_plus_states(sys, phi)
    out = np.empty((ts.shape[0], sys.n))
    idx = np.array([_subinterval_index(bounds, t) for t in ts], dtype=int)
    for k in range(sys.p + 1):
        sel = np.nonzero(idx == k)[0]
        if sel.size == 0:
            continue
        if k == sys.p:
            seed = phi
            right = sys.horizon
        else:
            stage = sys.stages[k]
            seed = plus[k] + stage.c.T @ plus[k]
            right = stage.time
        out[sel] = semigroup_propagate_batch(sys.generator, right - ts[sel], seed, adjoint=True)
    return out


def adjoint_solution(sys: ImpulsiveSystem, phi: np.ndarray, t: float) -> np.ndarray:
    """psi(t) for a single time (see :func:`adjoint_solution_batch`)."""
    t = float(t)
    if not 0.0 <= t <= sys.horizon:
        raise ValueError(f"time {t} outside [0, {sys.horizon}]")
    return adjoint_solution_batch(sys, phi, np.array([t]))[0]


# ---------------------------------------------------------------------------
# control evaluation and forced integrals
# ---------------------------------------------------------------------------


def control_values(sys: ImpulsiveSystem, law: ControlLaw, ts) -> np.ndarray:
    """u(ts[j]) stacked, for either control-law variant."""
    ts = np.asarray(ts, dtype=np.float64)
    if isinstance(law, AdjointFeedbackLaw):
        psi = adjoint_solution_batch(sys, law.phi, ts)
        return psi @ sys.input_matrix
    return np.array([law.value_at(t) for t in ts])


def _smooth_panels(law: ControlLaw, k: int, lo: float, hi: float) -> list[tuple[float, float]]:
    """Split [lo, hi] (inside subinterval k) at the law's discontinuities."""
    if hi <= lo:
        return []
    if isinstance(law, PiecewiseConstantLaw):
        edges = [e for e in law.piece_edges(k)[1:-1] if lo < e < hi]
        pts = [lo, *edges, hi]
        return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    return [(lo, hi)]


def _forced_increment(
    sys: ImpulsiveSystem, w: ControlPair, k: int, lo: float, hi: float, q: QuadratureConfig
) -> np.ndarray:
    """int_lo^hi S(hi - s) B u(s) ds for [lo, hi] inside subinterval k."""
    total = np.zeros(sys.n)
    for a, e in _smooth_panels(w.distributed, k, lo, hi):
        nodes, weights = panel_rule(a, e, q)
        g = semigroup_propagate_batch(sys.generator, hi - nodes, sys.input_matrix)
        u = control_values(sys, w.distributed, nodes)
        total = total + np.einsum("jnm,jm->n", g, weights[:, None] * u)
    return total


def _forward_states(sys: ImpulsiveSystem, x0: np.ndarray, w: ControlPair, q: QuadratureConfig):
    """Left and right one-sided states at every impulse time."""
    x0 = np.asarray(x0, dtype=np.float64)
    minus: list[np.ndarray] = []
    plus: list[np.ndarray] = []
    current = x0
    prev_t = 0.0
    for k, stage in enumerate(sys.stages):
        drift = semigroup_apply(sys.generator, stage.time - prev_t, current)
        x_minus = drift + _forced_increment(sys, w, k, prev_t, stage.time, q)
        x_plus = apply_jump(stage, x_minus, w.impulses[k])
        minus.append(x_minus)
        plus.append(x_plus)
        current = x_plus
        prev_t = stage.time
    return minus, plus


def state_after_impulse(
    sys: ImpulsiveSystem, x0, w: ControlPair, k: int, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> np.ndarray:
    """x(t_k+): free term, pushed-forward quadrature terms, and impulse controls."""
    k = int(k)
    if not 1 <= k <= sys.p:
        raise ValueError(f"stage index {k} outside 1..{sys.p}")
    return _forward_states(sys, x0, w, q)[1][k - 1]


def mild_solution(
    sys: ImpulsiveSystem, x0, w: ControlPair, t: float, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> np.ndarray:
    """x(t); at an impulse time this is the left value x(t_k-)."""
    t = float(t)
    if not 0.0 <= t <= sys.horizon:
        raise ValueError(f"time {t} outside [0, {sys.horizon}]")
    x0 = np.asarray(x0, dtype=np.float64)
    times = sys.times
    k = int(np.searchsorted(times, t, side="left"))  # stages strictly before t
    if k == 0:
        start, prev_t = x0, 0.0
    else:
        start = _forward_states(sys, x0, w, q)[1][k - 1]
        prev_t = times[k - 1]
    if t == prev_t:
        return np.array(start)
    drift = semigroup_apply(sys.generator, t - prev_t, start)
    return drift + _forced_increment(sys, w, k, prev_t, t, q)


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory with both one-sided values at impulse times.

    ``sides[i]`` is "-" for ordinary samples and "L"/"R" for the left/right
    values at an impulse time; the R row equals the jump map applied to the
    L row by construction.
    """

    times: np.ndarray
    sides: tuple[str, ...]
    states: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=np.float64)
        s = np.array(self.states, dtype=np.float64)
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "sides", tuple(self.sides))


def simulate(
    sys: ImpulsiveSystem, x0, w: ControlPair, grid, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> Trajectory:
    """Sample the mild solution on ``grid`` plus both sides of every impulse."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size and (np.min(grid) < 0.0 or np.max(grid) > sys.horizon):
        raise ValueError("sample grid must lie within [0, horizon]")
    x0 = np.asarray(x0, dtype=np.float64)
    impulse_times = set(float(t) for t in sys.times)
    plain = sorted(set(float(t) for t in grid) - impulse_times)

    minus, plus = _forward_states(sys, x0, w, q)
    rows: list[tuple[float, str, np.ndarray]] = []
    for k, stage in enumerate(sys.stages):
        rows.append((stage.time, "L", minus[k]))
        rows.append((stage.time, "R", plus[k]))
    for t in plain:
        rows.append((t, "-", mild_solution(sys, x0, w, t, q)))
    rows.sort(key=lambda r: (r[0], 0 if r[1] in ("-", "L") else 1))
    return Trajectory(
        times=np.array([r[0] for r in rows]),
        sides=tuple(r[1] for r in rows),
        states=np.array([r[2] for r in rows]) if rows else np.zeros((0, sys.n)),
    )


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------


def duality_gap(
    sys: ImpulsiveSystem,
    x0,
    w: ControlPair,
    phi,
    q: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Defect of the forward/adjoint pairing identity; zero up to quadrature.

    Left side: <x(b), psi(b)> - <x(0), psi(0)>.  Right side: the control
    pairings int <u, B* psi> summed over subintervals plus
    sum_k <v_k, D_k* psi(t_k+)>.
    """
    phi = np.asarray(phi, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    x_b = mild_solution(sys, x0, w, sys.horizon, q)
    psi_0 = adjoint_solution(sys, phi, 0.0)
    lhs = float(x_b @ phi - x0 @ psi_0)

    rhs = 0.0
    bounds = sys.boundaries
    for k in range(sys.p + 1):
        for a, e in _smooth_panels(w.distributed, k, bounds[k], bounds[k + 1]):
            nodes, weights = panel_rule(a, e, q)
            u = control_values(sys, w.distributed, nodes)
            psi = adjoint_solution_batch(sys, phi, nodes)
            rhs += float(weights @ np.einsum("jm,jm->j", u, psi @ sys.input_matrix))
    plus = _adjoint_plus_states(sys, phi)
    for k, stage in enumerate(sys.stages):
        rhs += float(w.impulses[k] @ (stage.d.T @ plus[k]))
    return lhs - rhs
