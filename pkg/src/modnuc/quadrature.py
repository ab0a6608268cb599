"""Composite Gauss-Legendre discretization of L^2(R, d theta).

A function g becomes the coefficient vector v_i = sqrt(w_i) g(theta_i), so the
Euclidean inner product of coefficient vectors approximates the L^2 inner
product, and an integral kernel K becomes the matrix
sqrt(w_i) K(theta_i, theta_j) sqrt(w_j).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError

DEFAULT_THETA_MAX = 10.0


def gauss_legendre_panels(lo: float, hi: float, panels: int, order: int):
    """Nodes and weights of a composite Gauss-Legendre rule on [lo, hi]."""
    x, w = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class RapidityGrid:
    """Immutable weighted rapidity grid on [-theta_max, theta_max]."""

    nodes: np.ndarray
    weights: np.ndarray
    theta_max: float
    panels: int
    order: int
    sqrt_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)
        sw = np.sqrt(self.weights)
        sw.setflags(write=False)
        object.__setattr__(self, "sqrt_weights", sw)

    def __len__(self):
        return self.nodes.size

    @property
    def size(self) -> int:
        return self.nodes.size

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return bool(
            np.all(np.abs(self.nodes + self.nodes[::-1]) <= tol)
            and np.all(np.abs(self.weights - self.weights[::-1]) <= tol)
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["node", "weight"])
        for t, w in zip(self.nodes, self.weights):
            writer.writerow([format(t, ".17g"), format(w, ".17g")])
        return buf.getvalue()

    def describe(self) -> dict:
        return {
            "theta_max": self.theta_max,
            "panels": self.panels,
            "order": self.order,
            "nodes": self.size,
        }


def build_grid(theta_max: float = DEFAULT_THETA_MAX, panels: int = 16, order: int = 16) -> RapidityGrid:
    """Composite Gauss-Legendre grid with ``panels`` equal panels of ``order`` points.

    Nodes and weights are symmetrised so that theta_i = -theta_{n+1-i} holds
    exactly; this lets reflections act as index reversal.
    """
    if not theta_max > 0 or not np.isfinite(theta_max):
        raise ConfigError(f"theta_max must be positive, got {theta_max}", "theta_max")
    if int(panels) != panels or panels < 1:
        raise ConfigError(f"panels must be >= 1, got {panels}", "panels")
    if int(order) != order or order < 2:
        raise ConfigError(f"order must be >= 2, got {order}", "order")
    nodes, weights = gauss_legendre_panels(-theta_max, theta_max, int(panels), int(order))
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return RapidityGrid(nodes, weights, float(theta_max), int(panels), int(order))


def discretize_function(g, grid: RapidityGrid) -> np.ndarray:
    """Coefficient vector sqrt(w_i) g(theta_i); ``g`` must accept an array."""
    vals = np.asarray(g(grid.nodes), dtype=complex)
    if vals.shape != grid.nodes.shape:
        vals = np.broadcast_to(vals, grid.nodes.shape)
    return grid.sqrt_weights * vals


def values_from_coefficients(v: np.ndarray, grid: RapidityGrid) -> np.ndarray:
    """Inverse of :func:`discretize_function`: pointwise values at the nodes."""
    return np.asarray(v) / grid.sqrt_weights


def discretize_kernel(K, grid: RapidityGrid) -> np.ndarray:
    """Matrix sqrt(w_i) K(theta_i, theta_j) sqrt(w_j); ``K`` is called on 2D arrays."""
    t = grid.nodes
    vals = np.asarray(K(t[:, None], t[None, :]), dtype=complex)
    vals = np.broadcast_to(vals, (t.size, t.size))
    sw = grid.sqrt_weights
    return sw[:, None] * vals * sw[None, :]


def tail_mass(v: np.ndarray, grid: RapidityGrid, edge_fraction: float = 0.05) -> float:
    """Fraction of squared norm carried by nodes within the outer ``edge_fraction`` of the cutoff."""
    total = float(np.vdot(v, v).real)
    if total == 0.0:
        return 0.0
    edge = np.abs(grid.nodes) >= (1.0 - edge_fraction) * grid.theta_max
    return float(np.vdot(v[edge], v[edge]).real) / total
