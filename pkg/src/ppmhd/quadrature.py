"""Quadrature rules on the reference interval [-1/2, 1/2].

Both rules are normalized so the weights sum to one (the reference cell has
unit measure), which is the convention used throughout the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureSet", "gauss_legendre", "gauss_lobatto"]

_MAX_POINTS = 10


@dataclass(frozen=True)
class QuadratureSet:
    """Nodes/weights on [-1/2, 1/2] with unit total weight."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1D arrays of equal length")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-14:
            raise ValueError("weights must sum to 1")

    @property
    def n(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum; approximates the mean of a function over the cell."""
        return float(np.dot(self.weights, values))


def _legendre(n: int, x: np.ndarray) -> np.ndarray:
    """P_n(x) by the three-term recurrence."""
    p0 = np.ones_like(x)
    if n == 0:
        return p0
    p1 = x.copy()
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return p1


def _legendre_and_derivative(n: int, x: np.ndarray):
    """P_n(x) and P_n'(x) on (-1, 1) by the three-term recurrence."""
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(q: int) -> QuadratureSet:
    """Q-point Gauss-Legendre rule, exact for degree <= 2Q-1.

    Nodes are found by Newton iteration from the Chebyshev initial guess,
    converged to 1e-15.
    """
    if not 1 <= q <= _MAX_POINTS:
        raise ValueError(f"gauss_legendre order must be in [1, {_MAX_POINTS}], got {q}")
    # initial guesses on [-1, 1]
    k = np.arange(1, q + 1)
    x = np.cos(np.pi * (k - 0.25) / (q + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(q, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre_and_derivative(q, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # symmetrize exactly and rescale to [-1/2, 1/2] with unit total weight
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    return QuadratureSet(0.5 * x, w)


def gauss_lobatto(ell: int) -> QuadratureSet:
    """L-point Gauss-Lobatto rule (endpoints included), exact degree <= 2L-3.

    Interior nodes are the roots of P_{L-1}', found by Newton iteration.
    On the unit cell the endpoint weight is 1/(L(L-1)).
    """
    if not 2 <= ell <= _MAX_POINTS:
        raise ValueError(f"gauss_lobatto order must be in [2, {_MAX_POINTS}], got {ell}")
    n = ell - 1
    if ell == 2:
        x = np.array([-1.0, 1.0])
    else:
        # initial guesses: extrema of cos between the endpoints
        x_int = np.cos(np.pi * np.arange(1, n) / n)
        for _ in range(100):
            p, dp = _legendre_and_derivative(n, x_int)
            # Newton on P_n'(x) = 0: P_n'' from the Legendre ODE
            d2p = (2.0 * x_int * dp - n * (n + 1) * p) / (1.0 - x_int * x_int)
            dx = dp / d2p
            x_int = x_int - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        x = np.concatenate([[-1.0], np.sort(x_int), [1.0]])
    p = _legendre(n, x)
    w = 2.0 / (n * (n + 1) * p * p)
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    return QuadratureSet(0.5 * x, w)
