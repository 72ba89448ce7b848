"""Nonsymmetric interior penalty (NIPG) discretisation of

    -eps^2 u'' + c(x) u = f(x) on (0, 1),    u(0) = u(1) = 0.

The bilinear form is

    a(w, v) = sum_I int (eps^2 w' v' + c w v)
              + sum_i ( eps^2 <w'>_i [v]_i - eps^2 [w]_i <v'>_i + sigma_i [w]_i [v]_i )

with ``[v]_i = v(x_i+0) - v(x_i-0)`` at interior nodes, ``[v]_0 = <v>_0 = v(0+0)``
and ``[v]_N = -<v>_N = -v(1-0)``; the same one-sided conventions apply to v'.
Dirichlet data enter only through these boundary jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .meshgen import COARSE, FINE, Mesh1D, MeshKind, max_psi_prime
from .polyquad import DEFAULT_QUAD, QuadratureRule, gauss_legendre_rule
from .space import DGFunction, DGSpace

Func = Callable[[np.ndarray], np.ndarray]


class SingularPivotError(np.linalg.LinAlgError):
    """A diagonal block became singular during block elimination."""


@dataclass
class ProblemSpec:
    eps: float
    c: Func
    f: Func
    exact_u: Optional[Func] = None
    exact_du: Optional[Func] = None
    exact_ddu: Optional[Func] = None
    gamma_tilde: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not 0.0 < self.gamma <= self.gamma_tilde:
            raise ValueError("need 0 < gamma <= gamma_tilde")
        grid = np.linspace(0.0, 1.0, 10_000)
        cmin = float(np.min(_as_array(self.c, grid)))
        if cmin < self.gamma_tilde ** 2 * (1.0 - 1e-14):
            raise ValueError(f"c(x) >= gamma_tilde^2 violated: min c = {cmin}")

    @property
    def has_exact(self) -> bool:
        return self.exact_u is not None and self.exact_du is not None


def _as_array(func: Func, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(func(x), dtype=float), np.shape(x))


def manufacture_rhs(exact_u: Func, exact_ddu: Func, c: Func, eps: float) -> Func:
    def f(x):
        x = np.asarray(x, dtype=float)
        return -eps ** 2 * _as_array(exact_ddu, x) + _as_array(c, x) * _as_array(exact_u, x)
    return f


@dataclass
class PenaltyScheme:
    sigma: np.ndarray

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        if not np.all(self.sigma > 0):
            raise ValueError("penalty parameters must be positive")

    def __len__(self):
        return len(self.sigma)


def penalty_scheme(mesh: Mesh1D, eps: float, boundary: str = "eps",
                   psi_bound: str = "max") -> PenaltyScheme:
    """Region-dependent penalties: eps*N in the coarse part and eps*N/max|psi'| in
    the fine part of an S-type mesh, eps/H at every interior node of a DL mesh.

    ``boundary="eps"`` puts sigma = eps at x_0 and x_N; ``boundary="local"`` uses
    eps/h of the adjacent cell instead.  ``psi_bound="max"`` takes the true
    maximum of |psi'|, ``psi_bound="table"`` its order with unit constant
    (see :func:`table_psi_bound`).
    """
    N = mesh.N
    sigma = np.empty(N + 1)
    if mesh.variant.kind is MeshKind.DL:
        if "H" not in mesh.meta:
            raise ValueError("DL mesh lacks its H parameter")
        sigma[:] = eps / mesh.meta["H"]
    else:
        fine = eps * N
        if FINE in mesh.region[1:-1]:
            if psi_bound == "table":
                bound = table_psi_bound(mesh.variant, N)
            elif psi_bound == "max":
                bound = mesh.meta.get("max_psi_prime")
                if bound is None:
                    if mesh.meta.get("uniform"):
                        raise ValueError("mesh lacks max|psi'| metadata")
                    bound = max_psi_prime(mesh.variant, N)
            else:
                raise ValueError(f"unknown psi_bound {psi_bound!r}")
            fine = eps * N / bound
        for i, tag in enumerate(mesh.region):
            sigma[i] = eps * N if tag == COARSE else fine
    h = mesh.widths
    if boundary == "eps":
        sigma[0] = sigma[N] = eps
    elif boundary == "local":
        sigma[0], sigma[N] = eps / h[0], eps / h[-1]
    else:
        raise ValueError(f"unknown boundary penalty rule {boundary!r}")
    return PenaltyScheme(sigma)


def table_psi_bound(variant, N: int) -> float:
    """Orders of max|psi'| with the generic constant set to one."""
    lnN = math.log(N)
    return {MeshKind.S: lnN, MeshKind.PS: lnN ** (1.0 / variant.m),
            MeshKind.BS: 1.0, MeshKind.MBS: 1.0}[variant.kind]


def constant_penalty(mesh: Mesh1D, value: float) -> PenaltyScheme:
    return PenaltyScheme(np.full(mesh.N + 1, float(value)))


def jump_and_average(fn: DGFunction, i: int, derivative: bool = False) -> tuple[float, float]:
    N = fn.space.N
    if not 0 <= i <= N:
        raise IndexError(f"node index {i} out of range 0..{N}")
    left_v, right_v, left_d, right_d = fn.traces()
    start, end = (left_d, right_d) if derivative else (left_v, right_v)
    if i == 0:
        return float(start[0]), float(start[0])
    if i == N:
        return float(-end[-1]), float(end[-1])
    plus, minus = start[i], end[i - 1]
    return float(plus - minus), float(0.5 * (plus + minus))


def node_jumps(fn: DGFunction) -> np.ndarray:
    """All jumps [v]_0 .. [v]_N."""
    left_v, right_v, _, _ = fn.traces()
    return np.concatenate([[left_v[0]], left_v[1:] - right_v[:-1], [-right_v[-1]]])


@dataclass
class BlockTriSystem:
    """Block tridiagonal matrix: ``lower[e]`` couples row block e+1 to column block e,
    ``upper[e]`` couples row block e to column block e+1."""

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray
    space: Optional[DGSpace] = None

    @property
    def nblocks(self) -> int:
        return self.diag.shape[0]

    @property
    def bs(self) -> int:
        return self.diag.shape[1]

    def matvec(self, w: np.ndarray) -> np.ndarray:
        W = np.asarray(w, dtype=float).reshape(self.nblocks, self.bs)
        out = np.einsum("eij,ej->ei", self.diag, W)
        out[1:] += np.einsum("eij,ej->ei", self.lower, W[:-1])
        out[:-1] += np.einsum("eij,ej->ei", self.upper, W[1:])
        return out.ravel()

    def to_dense(self) -> np.ndarray:
        n, b = self.nblocks, self.bs
        A = np.zeros((n * b, n * b))
        for e in range(n):
            A[e * b:(e + 1) * b, e * b:(e + 1) * b] = self.diag[e]
            if e + 1 < n:
                A[(e + 1) * b:(e + 2) * b, e * b:(e + 1) * b] = self.lower[e]
                A[e * b:(e + 1) * b, (e + 1) * b:(e + 2) * b] = self.upper[e]
        return A


def assemble(space: DGSpace, problem: ProblemSpec, penalties: PenaltyScheme,
             quad: Optional[QuadratureRule] = None) -> BlockTriSystem:
    quad = quad or gauss_legendre_rule(DEFAULT_QUAD)
    N, k = space.N, space.k
    n = k + 1
    if len(penalties) != N + 1:
        raise ValueError(f"need {N + 1} penalties, got {len(penalties)}")
    eps2 = problem.eps ** 2
    h = space.mesh.widths
    basis = space.basis
    B = basis.values(quad.points)        # (nq, n)
    dB = basis.derivatives(quad.points)  # (nq, n)
    xq = space.map_points(quad.points)   # (N, nq)
    cq = _as_array(problem.c, xq)
    fq = _as_array(problem.f, xq)
    w = quad.weights

    stiff_ref = np.einsum("q,qi,qj->ij", w, dB, dB)
    diag = eps2 * (2.0 / h)[:, None, None] * stiff_ref[None]
    diag += 0.5 * h[:, None, None] * np.einsum("q,eq,qi,qj->eij", w, cq, B, B)
    rhs = (0.5 * h[:, None] * np.einsum("q,eq,qi->ei", w, fq, B)).ravel()

    ends = np.array([-1.0, 1.0])
    v_m, v_p = basis.values(ends)
    d_m, d_p = basis.derivatives(ends)
    sigma = penalties.sigma

    def local(J, Ad, s):
        # row = test function, column = trial function
        return (eps2 * (np.einsum("...p,...q->...pq", J, Ad) - np.einsum("...p,...q->...pq", Ad, J))
                + s[..., None, None] * np.einsum("...p,...q->...pq", J, J))

    # x_0: only the first element sees it
    diag[0] += local(v_m, d_m * 2.0 / h[0], np.asarray(sigma[0]))
    # x_N
    diag[-1] += local(-v_p, d_p * 2.0 / h[-1], np.asarray(sigma[N]))

    lower = np.zeros((N - 1, n, n))
    upper = np.zeros((N - 1, n, n))
    if N > 1:
        J = np.concatenate([-v_p, v_m])
        Ad = np.concatenate([np.outer(1.0 / h[:-1], d_p), np.outer(1.0 / h[1:], d_m)], axis=1)
        Jb = np.broadcast_to(J, Ad.shape)
        loc = local(Jb, Ad, sigma[1:N])
        diag[:-1] += loc[:, :n, :n]
        upper += loc[:, :n, n:]
        lower += loc[:, n:, :n]
        diag[1:] += loc[:, n:, n:]
    return BlockTriSystem(diag, lower, upper, rhs, space)


def block_thomas(system: BlockTriSystem) -> np.ndarray:
    """Block tridiagonal elimination without inter-block pivoting."""
    n, b = system.nblocks, system.bs
    D, L, U = system.diag, system.lower, system.upper
    y = system.rhs.reshape(n, b).copy()
    piv = np.empty_like(D)
    gain = np.empty((max(n - 1, 0), b, b))  # piv[e]^{-1} U[e]
    piv[0] = D[0]
    for e in range(n):
        if e > 0:
            piv[e] = D[e] - L[e - 1] @ gain[e - 1]
            y[e] = y[e] - L[e - 1] @ y[e - 1]
        rhs = np.column_stack([U[e], y[e]]) if e < n - 1 else y[e][:, None]
        try:
            sol = np.linalg.solve(piv[e], rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularPivotError(f"singular pivot block at element {e}") from exc
        if e < n - 1:
            gain[e] = sol[:, :b]
        y[e] = sol[:, -1]
    x = np.empty_like(y)
    x[-1] = y[-1]
    for e in range(n - 2, -1, -1):
        x[e] = y[e] - gain[e] @ x[e + 1]
    return x.ravel()


def solve(system: BlockTriSystem) -> DGFunction:
    coeffs = block_thomas(system)
    if not np.all(np.isfinite(coeffs)):
        raise SingularPivotError("non-finite solution; check mesh and penalties")
    return DGFunction(system.space, coeffs)


def discretize_and_solve(mesh: Mesh1D, k: int, problem: ProblemSpec,
                         penalties: Optional[PenaltyScheme] = None,
                         quad: Optional[QuadratureRule] = None):
    """Assemble and solve; returns (u^N, penalties, system)."""
    space = DGSpace(mesh, k)
    penalties = penalties or penalty_scheme(mesh, problem.eps)
    system = assemble(space, problem, penalties, quad)
    return solve(system), penalties, system


def relative_residual(system: BlockTriSystem, coeffs: np.ndarray) -> float:
    r = system.matvec(coeffs) - system.rhs
    return float(np.linalg.norm(r) / max(np.linalg.norm(system.rhs), math.ulp(1.0)))
