"""Discontinuous piecewise-polynomial space on a 1D mesh."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshgen import Mesh1D
from .polyquad import LocalBasis, local_basis

LEFT, RIGHT, INTERIOR = "left", "right", "element-interior"


@dataclass
class DGSpace:
    mesh: Mesh1D
    k: int

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ValueError(f"polynomial degree must be 1, 2 or 3, got {self.k}")

    @property
    def basis(self) -> LocalBasis:
        return local_basis(self.k)

    @property
    def N(self) -> int:
        return self.mesh.N

    @property
    def ndofs(self) -> int:
        return self.N * (self.k + 1)

    def map_points(self, t) -> np.ndarray:
        """Physical images of reference points, shape (N, len(t))."""
        x = self.mesh.nodes
        t = np.asarray(t, dtype=float)
        return x[:-1, None] + 0.5 * (t[None, :] + 1.0) * np.diff(x)[:, None]

    def dof_points(self) -> np.ndarray:
        return self.map_points(self.basis.nodes)

    def function(self, coeffs=None) -> "DGFunction":
        if coeffs is None:
            coeffs = np.zeros(self.ndofs)
        return DGFunction(self, np.asarray(coeffs, dtype=float))


@dataclass
class DGFunction:
    space: DGSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        if self.coeffs.size != self.space.ndofs:
            raise ValueError(f"expected {self.space.ndofs} coefficients, "
                             f"got {self.coeffs.size}")

    @property
    def local(self) -> np.ndarray:
        """Coefficients reshaped to (N, k+1)."""
        return self.coeffs.reshape(self.space.N, self.space.k + 1)

    def at_reference(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Values and x-derivatives at reference points t on every element, shape (N, len(t))."""
        basis = self.space.basis
        h = self.space.mesh.widths
        vals = self.local @ basis.values(t).T
        ders = (self.local @ basis.derivatives(t).T) * (2.0 / h)[:, None]
        return vals, ders

    def traces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(left-end value, right-end value, left-end derivative, right-end derivative) per element."""
        vals, ders = self.at_reference(np.array([-1.0, 1.0]))
        return vals[:, 0], vals[:, 1], ders[:, 0], ders[:, 1]

    def __call__(self, x, side: str = INTERIOR):
        return dg_eval(self, x, side)[0]


def _locate(nodes: np.ndarray, x: float, side: str) -> int:
    N = len(nodes) - 1
    if not nodes[0] <= x <= nodes[-1]:
        raise ValueError(f"x={x} outside [0, 1]")
    j = int(np.searchsorted(nodes, x))
    at_node = j <= N and nodes[j] == x
    if not at_node:
        return j - 1
    if side == LEFT:
        if j == 0:
            raise ValueError("no left trace at x_0")
        return j - 1
    if side == RIGHT:
        if j == N:
            raise ValueError("no right trace at x_N")
        return j
    if j == 0:
        return 0
    if j == N:
        return N - 1
    raise ValueError(f"x={x} is the mesh node x_{j}; choose side 'left' or 'right'")


def dg_eval(fn: DGFunction, x: float, side: str = INTERIOR) -> tuple[float, float]:
    """Value and derivative of a DG function at x, with one-sided limits at nodes."""
    if side not in (LEFT, RIGHT, INTERIOR):
        raise ValueError(f"unknown side {side!r}")
    nodes = fn.space.mesh.nodes
    e = _locate(nodes, float(x), side)
    a, b = nodes[e], nodes[e + 1]
    h = b - a
    t = min(max(2.0 * (x - a) / h - 1.0, -1.0), 1.0)
    basis = fn.space.basis
    c = fn.local[e]
    return float(basis.values(t) @ c), float(basis.derivatives(t) @ c) * 2.0 / h
