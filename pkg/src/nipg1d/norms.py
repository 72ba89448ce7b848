"""Energy and balanced norms, interpolants and projections into the DG space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .meshgen import COARSE, FINE, Mesh1D, MeshVariant, build_mesh
from .nipg_core import (Func, PenaltyScheme, ProblemSpec, _as_array, node_jumps,
                        penalty_scheme)
from .polyquad import DEFAULT_QUAD, QuadratureRule, gauss_legendre_rule
from .space import DGFunction, DGSpace


@dataclass
class ErrorReport:
    e_dG: float
    e_dGb: float
    grad_sq: float      # sum of int (u' - uN')^2, unweighted
    l2c_sq: float       # sum of int c (u - uN)^2
    jump_sq: float      # sum of sigma_i [u - uN]_i^2
    eps: float

    @property
    def components_dG(self) -> tuple[float, float, float]:
        return self.eps ** 2 * self.grad_sq, self.l2c_sq, self.jump_sq

    @property
    def components_dGb(self) -> tuple[float, float, float]:
        return self.eps * self.grad_sq, self.l2c_sq, self.jump_sq


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def error_norms(exact_u: Optional[Func], exact_du: Optional[Func], uN: DGFunction,
                penalties: PenaltyScheme, c: Func, eps: float,
                quad: Optional[QuadratureRule] = None) -> ErrorReport:
    """Energy and balanced norms of ``u - uN``.

    ``exact_u = None`` measures ``uN`` itself, which makes this the independent
    norm ``||w||_dG`` used to check coercivity.
    """
    quad = quad or gauss_legendre_rule(DEFAULT_QUAD)
    space = uN.space
    if len(penalties) != space.N + 1:
        raise ValueError("penalties do not match the mesh of uN")
    exact_u = exact_u or _zero
    exact_du = exact_du or _zero
    h = space.mesh.widths
    xq = space.map_points(quad.points)
    vals, ders = uN.at_reference(quad.points)
    ev = _as_array(exact_u, xq) - vals
    ed = _as_array(exact_du, xq) - ders
    cq = _as_array(c, xq)
    half_h = 0.5 * h
    grad_sq = float(np.sum(half_h * (ed ** 2 @ quad.weights)))
    l2c_sq = float(np.sum(half_h * ((cq * ev ** 2) @ quad.weights)))

    u_ends = _as_array(exact_u, np.array([0.0, 1.0]))
    jumps = -node_jumps(uN)
    jumps[0] += u_ends[0]
    jumps[-1] -= u_ends[1]
    jump_sq = float(np.dot(penalties.sigma, jumps ** 2))

    e_dG = math.sqrt(eps ** 2 * grad_sq + l2c_sq + jump_sq)
    e_dGb = math.sqrt(eps * grad_sq + l2c_sq + jump_sq)
    return ErrorReport(e_dG, e_dGb, grad_sq, l2c_sq, jump_sq, eps)


def dg_norm(w: DGFunction, penalties: PenaltyScheme, c: Func, eps: float,
            quad: Optional[QuadratureRule] = None) -> float:
    return error_norms(None, None, w, penalties, c, eps, quad).e_dG


def convergence_rate(e_coarse: float, e_fine: float) -> float:
    if e_coarse <= 0 or e_fine <= 0:
        raise ValueError("errors must be positive to form a rate")
    return math.log(e_coarse / e_fine) / math.log(2.0)


def lagrange_interpolant(exact_u: Func, space: DGSpace) -> DGFunction:
    pts = space.dof_points()
    return space.function(_as_array(exact_u, pts).ravel())


def weighted_l2_projection(exact_u: Func, c: Func, space: DGSpace,
                           quad: Optional[QuadratureRule] = None) -> DGFunction:
    """Elementwise solve of (c u_pi, xi) = (c u, xi) for all xi in the DG space."""
    quad = quad or gauss_legendre_rule(DEFAULT_QUAD)
    B = space.basis.values(quad.points)
    xq = space.map_points(quad.points)
    cq = _as_array(c, xq)
    uq = _as_array(exact_u, xq)
    hw = 0.5 * space.mesh.widths[:, None] * quad.weights[None, :]
    mass = np.einsum("eq,qi,qj->eij", hw * cq, B, B)
    load = np.einsum("eq,qi->ei", hw * cq * uq, B)
    coeffs = np.linalg.solve(mass, load[..., None])[..., 0]
    return space.function(coeffs.ravel())


def projection_residuals(exact_u: Func, c: Func, proj: DGFunction,
                         quad: Optional[QuadratureRule] = None) -> np.ndarray:
    """(c (u_pi - u), xi) for every basis function xi, shape (N, k+1)."""
    quad = quad or gauss_legendre_rule(DEFAULT_QUAD)
    space = proj.space
    B = space.basis.values(quad.points)
    xq = space.map_points(quad.points)
    vals, _ = proj.at_reference(quad.points)
    hw = 0.5 * space.mesh.widths[:, None] * quad.weights[None, :]
    diff = _as_array(c, xq) * (vals - _as_array(exact_u, xq))
    return np.einsum("eq,qi->ei", hw * diff, B)


# -- interpolation error measurements ---------------------------------------

@dataclass
class ElementErrors:
    """Per-element pieces of eta = u - u*; sup-type values are maxima over
    quadrature points and one-sided end values, hence lower bounds on the sup."""
    linf: np.ndarray
    dinf: np.ndarray
    l2_sq: np.ndarray
    h1_sq: np.ndarray


def element_errors(exact_u: Func, exact_du: Func, approx: DGFunction,
                   quad: Optional[QuadratureRule] = None) -> ElementErrors:
    quad = quad or gauss_legendre_rule(DEFAULT_QUAD)
    space = approx.space
    pts = np.concatenate([[-1.0], quad.points, [1.0]])
    xs = space.map_points(pts)
    vals, ders = approx.at_reference(pts)
    ev = _as_array(exact_u, xs) - vals
    ed = _as_array(exact_du, xs) - ders
    half_h = 0.5 * space.mesh.widths
    w = quad.weights
    return ElementErrors(
        linf=np.max(np.abs(ev), axis=1),
        dinf=np.max(np.abs(ed), axis=1),
        l2_sq=half_h * (ev[:, 1:-1] ** 2 @ w),
        h1_sq=half_h * (ed[:, 1:-1] ** 2 @ w),
    )


def region_quantities(errs: ElementErrors, eps: float, mask: np.ndarray) -> dict:
    if not np.any(mask):
        return {"Linf": 0.0, "eps_W1inf": 0.0, "L2": 0.0, "sqrt_eps_H1": 0.0}
    return {
        "Linf": float(errs.linf[mask].max()),
        "eps_W1inf": eps * float(errs.dinf[mask].max()),
        "L2": math.sqrt(float(errs.l2_sq[mask].sum())),
        "sqrt_eps_H1": math.sqrt(eps * float(errs.h1_sq[mask].sum())),
    }


def lemma_quantities(mesh: Mesh1D, errs: ElementErrors, eps: float) -> dict:
    """Sup, L2 and weighted seminorm errors split by mesh region.

    S-type meshes yield ``coarse_*`` and ``fine_*`` entries; a DL mesh yields
    whole-domain entries only.
    """
    if not mesh.variant.is_stype:
        out = region_quantities(errs, eps, np.ones(mesh.N, dtype=bool))
        # the two combined quantities bounded on graded meshes
        out["value_max"] = max(out["Linf"], out["L2"])
        out["grad_max"] = max(out["eps_W1inf"], out["sqrt_eps_H1"])
        return out
    regions = np.array(mesh.element_regions())
    out = {}
    for name, tag in (("coarse", COARSE), ("fine", FINE)):
        for key, val in region_quantities(errs, eps, regions == tag).items():
            out[f"{name}_{key}"] = val
    return out


def interpolate(kind: str, exact_u: Func, c: Func, space: DGSpace,
                quad: Optional[QuadratureRule] = None) -> DGFunction:
    if kind == "lagrange":
        return lagrange_interpolant(exact_u, space)
    if kind in ("projection", "weighted-projection"):
        return weighted_l2_projection(exact_u, c, space, quad)
    raise ValueError(f"unknown interpolant kind {kind!r}")


def observed_rates(values: list, scales: list) -> list:
    """Rates log(v_j/v_{j+1}) / log(s_j/s_{j+1}); None where undefined."""
    out = []
    for j in range(len(values) - 1):
        v0, v1, s0, s1 = values[j], values[j + 1], scales[j], scales[j + 1]
        if v0 > 0 and v1 > 0 and s0 != s1:
            out.append(math.log(v0 / v1) / math.log(s0 / s1))
        else:
            out.append(None)
    return out


# Expected orders: (quantity, variable the rate is measured in, order - k).
# Coarse-region S-type quantities go like N^-r, fine-region ones like s^-r with
# s = N^-1 max|psi'|, DL quantities like H^r.
STYPE_ORDERS = {
    "coarse_Linf": ("N", 1), "coarse_eps_W1inf": ("N", 0),
    "coarse_L2": ("N", 1), "coarse_sqrt_eps_H1": ("N", 0),
    "fine_Linf": ("s", 1), "fine_eps_W1inf": ("s", 0),
    "fine_L2": ("s", 1), "fine_sqrt_eps_H1": ("s", 0),
}
DL_ORDERS = {"Linf": ("H", 1), "L2": ("H", 1), "eps_W1inf": ("H", 0),
             "sqrt_eps_H1": ("H", 0), "value_max": ("H", 1), "grad_max": ("H", 0)}


@dataclass
class InterpRow:
    N: int
    H: Optional[float]
    s: Optional[float]          # N^-1 max|psi'| on S-type meshes
    quantities: dict
    e_dG: float                 # ||eta||_dG with the default penalties
    bound: float                # structure of the dG-norm bound, unit constants


@dataclass
class InterpStudyResult:
    variant: MeshVariant
    kind: str
    k: int
    eps: float
    rows: list

    @property
    def orders(self) -> dict:
        table = STYPE_ORDERS if self.variant.is_stype else DL_ORDERS
        return {name: (var, self.k + extra) for name, (var, extra) in table.items()}

    def scale(self, var: str) -> list:
        if var == "N":
            return [1.0 / r.N for r in self.rows]
        if var == "H":
            return [r.H for r in self.rows]
        if var == "s":
            return [r.s for r in self.rows]
        raise ValueError(f"unknown rate variable {var!r}")

    def rates(self, name: str, var: Optional[str] = None) -> list:
        var = var or self.orders[name][0]
        return observed_rates([r.quantities[name] for r in self.rows], self.scale(var))

    def fitted_rate(self, name: str, var: Optional[str] = None) -> float:
        """Least-squares slope of log(quantity) against log(scale)."""
        var = var or self.orders[name][0]
        y = np.log([r.quantities[name] for r in self.rows])
        x = np.log(self.scale(var))
        return float(np.polyfit(x, y, 1)[0])

    def table(self) -> list:
        """Rows of (name, variable, expected order, observed rates)."""
        return [(name, var, order, self.rates(name, var))
                for name, (var, order) in self.orders.items()]


def interpolation_error_study(problem: ProblemSpec, variant: MeshVariant, kind: str,
                              k: int, *, Ns=None, Hs=None,
                              quad: Optional[QuadratureRule] = None) -> InterpStudyResult:
    """Interpolation errors of u* (Lagrange or weighted projection) with observed rates."""
    if not problem.has_exact:
        raise ValueError("interpolation study needs the exact solution")
    quad = quad or gauss_legendre_rule(DEFAULT_QUAD)
    eps = problem.eps
    params = Ns if variant.is_stype else Hs
    if not params:
        raise ValueError("need N values for S-type meshes or H values for DL")
    rows = []
    for p in params:
        if variant.is_stype:
            mesh = build_mesh(variant, eps=eps, N=p, gamma=problem.gamma, k=k)
        else:
            mesh = build_mesh(variant, eps=eps, H=p)
        space = DGSpace(mesh, k)
        approx = interpolate(kind, problem.exact_u, problem.c, space, quad)
        errs = element_errors(problem.exact_u, problem.exact_du, approx, quad)
        pen = penalty_scheme(mesh, eps)
        e_dG = error_norms(problem.exact_u, problem.exact_du, approx, pen,
                           problem.c, eps, quad).e_dG
        N = mesh.N
        if variant.is_stype:
            mpsi = mesh.meta["max_psi_prime"]
            s = mpsi / N
            bound = N ** -(k + 1) + math.sqrt(eps) * N ** -k * mpsi ** (k + 0.5)
            H = None
        else:
            s, H = None, p
            bound = H ** (k + 1) + math.sqrt(eps * N) * H ** (k + 0.5)
        rows.append(InterpRow(N, H, s, lemma_quantities(mesh, errs, eps), e_dG, bound))
    return InterpStudyResult(variant, kind, k, eps, rows)
