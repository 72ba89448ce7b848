"""Gauss-Legendre quadrature and nodal Lagrange bases on the reference element [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_QUAD = 5


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.points)

    def integrate(self, func) -> float:
        return float(np.dot(self.weights, func(self.points)))


@lru_cache(maxsize=None)
def gauss_legendre_rule(n: int = DEFAULT_QUAD) -> QuadratureRule:
    if not 1 <= n <= 10:
        raise ValueError(f"quadrature order must be in [1, 10], got {n}")
    pts, wts = np.polynomial.legendre.leggauss(n)
    # enforce exact symmetry about 0
    pts = 0.5 * (pts - pts[::-1])
    wts = 0.5 * (wts + wts[::-1])
    pts.flags.writeable = False
    wts.flags.writeable = False
    return QuadratureRule(pts, wts)


def lobatto_nodes(k: int) -> np.ndarray:
    if k == 1:
        return np.array([-1.0, 1.0])
    if k == 2:
        return np.array([-1.0, 0.0, 1.0])
    if k == 3:
        r = 1.0 / np.sqrt(5.0)
        return np.array([-1.0, -r, r, 1.0])
    raise ValueError(f"polynomial degree must be 1, 2 or 3, got {k}")


class LocalBasis:
    """Lagrange basis of degree k through the Gauss-Lobatto points.

    ``coef[m, j]`` is the coefficient of ``t**m`` in the j-th basis function.
    """

    def __init__(self, k: int):
        self.k = k
        self.nodes = lobatto_nodes(k)
        vander = np.vander(self.nodes, k + 1, increasing=True)
        self.coef = np.linalg.inv(vander)
        self._dcoef = self.coef[1:] * np.arange(1, k + 1)[:, None]

    @property
    def size(self) -> int:
        return self.k + 1

    def values(self, t) -> np.ndarray:
        """All basis values, shape ``t.shape + (k+1,)``."""
        t = np.asarray(t, dtype=float)
        powers = t[..., None] ** np.arange(self.k + 1)
        return powers @ self.coef

    def derivatives(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        powers = t[..., None] ** np.arange(self.k)
        return powers @ self._dcoef

    def eval(self, j: int, t: float) -> tuple[float, float]:
        if not 0 <= j <= self.k:
            raise IndexError(f"basis index {j} out of range for k={self.k}")
        return float(self.values(t)[j]), float(self.derivatives(t)[j])


@lru_cache(maxsize=None)
def local_basis(k: int) -> LocalBasis:
    return LocalBasis(k)


def basis_eval(basis: LocalBasis, j: int, t: float) -> tuple[float, float]:
    return basis.eval(j, t)
