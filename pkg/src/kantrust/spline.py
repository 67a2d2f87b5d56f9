"""Clamped uniform B-spline bases on [0, 1].

Every edge of the surrogate network is a univariate spline expressed in
this basis: ``s(t) = sum_i c_i * B_i(t)`` with ``grid + degree`` basis
functions over a clamped uniform knot vector. Evaluation uses the
Cox-de Boor recursion; derivatives use the standard lower-degree
difference formula. All functions are pure and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KnotVector:
    """Clamped uniform knot vector on [0, 1].

    ``knots`` has ``grid + 2*degree + 1`` entries: ``degree + 1`` copies
    of 0, ``grid - 1`` uniform interior knots, and ``degree + 1`` copies
    of 1. The associated basis has ``grid + degree`` functions.
    """

    knots: np.ndarray = field(repr=False)
    degree: int
    grid: int

    @property
    def n_basis(self) -> int:
        return self.grid + self.degree


def make_knots(grid: int, degree: int) -> KnotVector:
    """Build the clamped uniform knot vector for the given resolution."""
    if grid < 1:
        raise ValueError(f"grid must be >= 1, got {grid}")
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    interior = np.linspace(0.0, 1.0, grid + 1)
    knots = np.concatenate([np.zeros(degree), interior, np.ones(degree)])
    knots.flags.writeable = False
    return KnotVector(knots=knots, degree=degree, grid=grid)


def _bases_upto(kv: KnotVector, t: np.ndarray, degree: int) -> np.ndarray:
    """Cox-de Boor recursion up to ``degree`` (may be below kv.degree).

    Returns shape ``t.shape + (len(knots) - 1 - degree,)``. Zero-width
    spans contribute nothing (0/0 terms are defined as 0). The domain
    end t == 1 is folded into the last non-empty span so the basis is
    right-continuous there and endpoint interpolation is exact.
    """
    u = kv.knots
    m = len(u)
    tcol = t[..., None]
    b = ((tcol >= u[:-1]) & (tcol < u[1:])).astype(np.float64)
    # t == 1 belongs to the closed last interval [u_last-1, 1]
    b[..., kv.degree + kv.grid - 1] = np.where(
        t == u[-1], 1.0, b[..., kv.degree + kv.grid - 1]
    )
    for k in range(1, degree + 1):
        left_den = u[k : m - 1] - u[: m - 1 - k]
        right_den = u[k + 1 : m] - u[1 : m - k]
        left = np.where(
            left_den > 0.0,
            (tcol - u[: m - 1 - k]) / np.where(left_den > 0.0, left_den, 1.0),
            0.0,
        )
        right = np.where(
            right_den > 0.0,
            (u[k + 1 : m] - tcol) / np.where(right_den > 0.0, right_den, 1.0),
            0.0,
        )
        b = left * b[..., :-1] + right * b[..., 1:]
    return b


def basis_matrix(kv: KnotVector, t: np.ndarray) -> np.ndarray:
    """Evaluate all basis functions at an array of points.

    Input is clamped to [0, 1]. Output shape is ``t.shape + (n_basis,)``;
    rows are non-negative, sum to 1, and have at most ``degree + 1``
    non-zero entries.
    """
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    return _bases_upto(kv, t, kv.degree)


def basis(kv: KnotVector, t: float) -> np.ndarray:
    """Basis vector at a single point, shape ``(n_basis,)``."""
    return basis_matrix(kv, np.asarray(float(t)))


def basis_derivative_matrix(kv: KnotVector, t: np.ndarray) -> np.ndarray:
    """First derivatives of all basis functions at an array of points.

    Uses B'_{i,p} = p * (N_{i,p-1}/(u_{i+p}-u_i) - N_{i+1,p-1}/(u_{i+p+1}-u_{i+1}))
    with 0-width spans dropping out. Entries sum to 0. At the domain
    endpoints this is the one-sided derivative.
    """
    p = kv.degree
    if p < 1:
        raise ValueError("degree-0 splines are piecewise constant; no derivative basis")
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    u = kv.knots
    n = kv.n_basis
    low = _bases_upto(kv, t, p - 1)  # n + 1 functions of degree p-1
    den_l = u[p : p + n] - u[:n]
    den_r = u[p + 1 : p + 1 + n] - u[1 : 1 + n]
    left = np.where(den_l > 0.0, low[..., :n] / np.where(den_l > 0.0, den_l, 1.0), 0.0)
    right = np.where(den_r > 0.0, low[..., 1:] / np.where(den_r > 0.0, den_r, 1.0), 0.0)
    return p * (left - right)


def basis_derivative(kv: KnotVector, t: float) -> np.ndarray:
    """Derivative basis vector at a single point, shape ``(n_basis,)``."""
    return basis_derivative_matrix(kv, np.asarray(float(t)))


@dataclass
class SplineEdge:
    """One learnable univariate spline: coefficients over a shared knot vector."""

    knots: KnotVector
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (self.knots.n_basis,):
            raise ValueError(
                f"expected {self.knots.n_basis} coefficients, got {self.coeffs.shape}"
            )


def eval_edge(e: SplineEdge, t):
    """Spline value at t (clamped to [0, 1]); scalar in, scalar out."""
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(basis(e.knots, t) @ e.coeffs)
    return basis_matrix(e.knots, np.asarray(t, dtype=np.float64)) @ e.coeffs


def eval_edge_derivative(e: SplineEdge, t):
    """Spline derivative at t (clamped to [0, 1]); one-sided at the ends."""
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(basis_derivative(e.knots, t) @ e.coeffs)
    return basis_derivative_matrix(e.knots, np.asarray(t, dtype=np.float64)) @ e.coeffs
