"""Gauss-Legendre quadrature shared by propagation and Gramian assembly.

One fixed interpolatory rule is applied per smooth panel: an impulse
subinterval for analytic integrands, or one constant piece of a
piecewise-constant control.  Both the Gramians and the mild-solution
integrals draw their nodes from here, so the terminal-error identity holds
to solver precision instead of mixed-rule error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureConfig", "panel_rule", "DEFAULT_QUADRATURE"]

_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


@dataclass(frozen=True)
class QuadratureConfig:
    """Node count for the Gauss-Legendre rule used on each smooth panel."""

    nodes_per_subinterval: int = 64

    def __post_init__(self):
        if int(self.nodes_per_subinterval) < 2:
            raise ValueError("nodes_per_subinterval must be >= 2")
        object.__setattr__(self, "nodes_per_subinterval", int(self.nodes_per_subinterval))


DEFAULT_QUADRATURE = QuadratureConfig()


def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _leggauss_cache:
        x, w = np.polynomial.legendre.leggauss(n)
        x.setflags(write=False)
        w.setflags(write=False)
        _leggauss_cache[n] = (x, w)
    return _leggauss_cache[n]


def panel_rule(lo: float, hi: float, config: QuadratureConfig) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on the panel [lo, hi], ordered by position."""
    x, w = _leggauss(config.nodes_per_subinterval)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid + half * x, half * w
