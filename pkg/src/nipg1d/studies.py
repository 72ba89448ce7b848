"""Convergence, robustness and slope studies for the model problem

    -eps^2 u'' + (3 - x^2) u = f,    u(0) = u(1) = 0,

whose exact solution is
``u = (exp(-x/eps) + exp(-(1-x)/eps)) / (1 + exp(-1/eps)) - 1 + x^2 (1-x)^2``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .meshgen import MeshKind, MeshVariant, build_dl_mesh, build_mesh
from .nipg_core import (ProblemSpec, discretize_and_solve, manufacture_rhs,
                        penalty_scheme)
from .norms import convergence_rate, error_norms
from .polyquad import DEFAULT_QUAD, gauss_legendre_rule

CSV_HEADER = ["variant", "k", "N", "H", "eps", "gamma",
              "e_dG", "rate_dG", "e_dGb", "rate_dGb"]


@dataclass(frozen=True)
class Profile:
    """Conventions the tables depend on but the method description leaves open.

    ``literal`` follows the written formulas (sigma = eps on the boundary, the
    true max|psi'|, gamma = 1, the 5-point rule everywhere).  ``calibrated`` is the
    set fitted to the published tables: boundary penalties eps/h, max|psi'|
    replaced by its order with unit constant, gamma = 0.40406 and a 10-point
    rule for the error integrals.
    """
    name: str
    gamma: float
    boundary_penalty: str
    psi_bound: str
    error_quad: int


LITERAL = Profile("literal", 1.0, "eps", "max", DEFAULT_QUAD)
CALIBRATED = Profile("calibrated", 0.40406, "local", "table", 10)
PROFILES = {p.name: p for p in (LITERAL, CALIBRATED)}


def layer_test_problem(eps: float, gamma: float = 1.0) -> ProblemSpec:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    den = 1.0 + math.exp(-1.0 / eps)

    def layer(x):
        return (np.exp(-x / eps) + np.exp(-(1.0 - x) / eps)) / den

    def u(x):
        x = np.asarray(x, dtype=float)
        return layer(x) - 1.0 + x ** 2 * (1.0 - x) ** 2

    def du(x):
        x = np.asarray(x, dtype=float)
        return ((np.exp(-(1.0 - x) / eps) - np.exp(-x / eps)) / (eps * den)
                + 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x))

    def ddu(x):
        x = np.asarray(x, dtype=float)
        return layer(x) / eps ** 2 + 2.0 - 12.0 * x + 12.0 * x ** 2

    def c(x):
        return 3.0 - np.asarray(x, dtype=float) ** 2

    return ProblemSpec(eps=eps, c=c, f=manufacture_rhs(u, ddu, c, eps),
                       exact_u=u, exact_du=du, exact_ddu=ddu,
                       gamma_tilde=math.sqrt(2.0), gamma=gamma)


@dataclass
class StudyConfig:
    variants: list = field(default_factory=lambda: [MeshVariant(MeshKind.S)])
    ks: list = field(default_factory=lambda: [1, 2, 3])
    Ns: list = field(default_factory=lambda: [2 ** j for j in range(4, 11)])
    Hs: list = field(default_factory=lambda: [2.0 ** -j for j in range(1, 7)])
    eps_values: list = field(default_factory=lambda: [2.0 ** -20])
    profile: Profile = CALIBRATED
    gamma: Optional[float] = None
    quad: int = DEFAULT_QUAD
    error_quad: Optional[int] = None
    workers: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        self.variants = [v if isinstance(v, MeshVariant) else MeshVariant(v)
                         for v in self.variants]
        for N in self.Ns:
            if N < 4 or N % 4:
                raise ValueError(f"N must be a multiple of 4, got {N}")
        for k in self.ks:
            if k not in (1, 2, 3):
                raise ValueError(f"k must be 1, 2 or 3, got {k}")
        for eps in self.eps_values:
            if not 0.0 < eps < 1.0:
                raise ValueError(f"eps must lie in (0, 1), got {eps}")

    @property
    def effective_gamma(self) -> float:
        return self.profile.gamma if self.gamma is None else self.gamma

    @property
    def effective_error_quad(self) -> int:
        return self.profile.error_quad if self.error_quad is None else self.error_quad


@dataclass
class StudyRow:
    variant: str
    k: int
    N: int
    H: Optional[float]
    eps: float
    gamma: Optional[float]
    e_dG: float
    e_dGb: float
    rate_dG: Optional[float] = None
    rate_dGb: Optional[float] = None

    @property
    def is_dl(self) -> bool:
        return self.H is not None


@dataclass
class StudyResult:
    rows: list = field(default_factory=list)

    def series(self, variant: str, k: int, eps: Optional[float] = None) -> list:
        return [r for r in self.rows if r.variant == variant and r.k == k
                and (eps is None or r.eps == eps)]

    def find(self, variant: str, k: int, N: Optional[int] = None,
             H: Optional[float] = None, eps: Optional[float] = None) -> StudyRow:
        for r in self.rows:
            if (r.variant == variant and r.k == k and (N is None or r.N == N)
                    and (H is None or r.H == H) and (eps is None or r.eps == eps)):
                return r
        raise KeyError((variant, k, N, H, eps))


def solve_case(variant: MeshVariant, k: int, eps: float, *, N: Optional[int] = None,
               H: Optional[float] = None, profile: Profile = CALIBRATED,
               gamma: Optional[float] = None, quad: int = DEFAULT_QUAD,
               error_quad: Optional[int] = None):
    """One mesh/solve/measure cycle on the model problem.

    Returns (mesh, u^N, penalties, ErrorReport).
    """
    g = profile.gamma if gamma is None else gamma
    problem = layer_test_problem(eps, min(g, math.sqrt(2.0)))
    mesh = build_mesh(variant, eps=eps, N=N, H=H, gamma=g, k=k)
    pen = penalty_scheme(mesh, eps, boundary=profile.boundary_penalty,
                         psi_bound=profile.psi_bound)
    uN, _, _ = discretize_and_solve(mesh, k, problem, pen, gauss_legendre_rule(quad))
    eq = profile.error_quad if error_quad is None else error_quad
    rep = error_norms(problem.exact_u, problem.exact_du, uN, pen, problem.c, eps,
                      gauss_legendre_rule(eq))
    return mesh, uN, pen, rep


def _run_rows(tasks: Sequence[dict], config: StudyConfig) -> list:
    def run(task):
        variant = task["variant"]
        mesh, _, _, rep = solve_case(
            variant, task["k"], task["eps"], N=task.get("N"), H=task.get("H"),
            profile=config.profile, gamma=config.gamma, quad=config.quad,
            error_quad=config.error_quad)
        return StudyRow(variant.label, task["k"], mesh.N, task.get("H"), task["eps"],
                        config.effective_gamma if variant.is_stype else None,
                        rep.e_dG, rep.e_dGb)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]


def attach_rates(rows: list) -> None:
    """Rates between consecutive rows of each (variant, k, eps) series."""
    for a, b in zip(rows, rows[1:]):
        if (a.variant, a.k, a.eps) == (b.variant, b.k, b.eps):
            a.rate_dG = convergence_rate(a.e_dG, b.e_dG)
            a.rate_dGb = convergence_rate(a.e_dGb, b.e_dGb)


def run_convergence_study(config: StudyConfig) -> StudyResult:
    tasks = []
    for variant in config.variants:
        for eps in config.eps_values:
            for k in config.ks:
                if variant.is_stype:
                    tasks += [dict(variant=variant, k=k, eps=eps, N=N) for N in config.Ns]
                else:
                    tasks += [dict(variant=variant, k=k, eps=eps, H=H) for H in config.Hs]
    rows = _run_rows(tasks, config)
    attach_rates(rows)
    return StudyResult(rows)


def run_epsilon_sweep(config: StudyConfig) -> StudyResult:
    """One row per eps at fixed N (S-type) or H (DL); no rates."""
    if len(config.ks) != 1:
        raise ValueError("an eps sweep needs exactly one k")
    tasks = []
    for variant in config.variants:
        for eps in config.eps_values:
            if variant.is_stype:
                if len(config.Ns) != 1:
                    raise ValueError("an eps sweep needs exactly one N")
                tasks.append(dict(variant=variant, k=config.ks[0], eps=eps, N=config.Ns[0]))
            else:
                tasks.append(dict(variant=variant, k=config.ks[0], eps=eps, H=config.Hs[0]))
    return StudyResult(_run_rows(tasks, config))


# -- fixed-N_DL slope study --------------------------------------------------

def dl_count(H: float, eps: float) -> int:
    return build_dl_mesh(H, eps).N


def find_H_for_N(target_N: int, eps: float, tol: float = 1e-13) -> tuple[float, int]:
    """Bisection in log H for a DL mesh with ``target_N`` cells.

    N_DL is nonincreasing in H apart from omission-rule jitter, so the search
    brackets the largest H with N_DL >= target_N and then returns whichever of
    the two bracket ends lands closer.
    """
    # N_DL >= 2 floor(1/H), so H = 1/target_N already overshoots
    lo, hi = math.log(1.0 / target_N), math.log(min(0.999, 0.5 / eps * 0.999))
    n_lo = dl_count(math.exp(lo), eps)
    if n_lo < target_N:
        raise ValueError(f"N_DL={target_N} unreachable for eps={eps}")
    if dl_count(math.exp(hi), eps) >= target_N:
        return math.exp(hi), dl_count(math.exp(hi), eps)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        n = dl_count(math.exp(mid), eps)
        if n == target_N:
            return math.exp(mid), n
        if n > target_N:
            lo = mid
        else:
            hi = mid
    cands = [(abs(dl_count(math.exp(x), eps) - target_N), math.exp(x)) for x in (lo, hi)]
    _, H = min(cands)
    return H, dl_count(H, eps)


@dataclass
class SlopeRow:
    eps: float
    H: float
    N_DL: int
    e_dGb: float
    comparison: float


@dataclass
class SlopeResult:
    target_N: int
    k: int
    rows: list

    def fitted_slopes(self) -> tuple[float, float]:
        """Least-squares slopes of log(e_dGb) and log(comparison) against log(ln(1/eps))."""
        x = np.log([math.log(1.0 / r.eps) for r in self.rows])
        e = np.log([r.e_dGb for r in self.rows])
        c = np.log([r.comparison for r in self.rows])
        return float(np.polyfit(x, e, 1)[0]), float(np.polyfit(x, c, 1)[0])

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "H", "N_DL", "e_dGb", "comparison"])
            for r in self.rows:
                w.writerow([f"{r.eps:.6e}", f"{r.H:.17g}", r.N_DL,
                            f"{r.e_dGb:.3e}", f"{r.comparison:.3e}"])


def comparison_curve(N: int, k: int, eps: float) -> float:
    return N ** (-k) * math.log(1.0 / eps) ** (k + 0.5)


def run_slope_study(target_N: int, k: int, eps_values: Iterable[float],
                    profile: Profile = CALIBRATED, quad: int = DEFAULT_QUAD) -> SlopeResult:
    rows = []
    for eps in eps_values:
        H, n = find_H_for_N(target_N, eps)
        _, _, _, rep = solve_case(MeshVariant(MeshKind.DL), k, eps, H=H,
                                  profile=profile, quad=quad)
        rows.append(SlopeRow(eps, H, n, rep.e_dGb, comparison_curve(n, k, eps)))
    return SlopeResult(target_N, k, rows)


# -- CSV report --------------------------------------------------------------

def _fmt_err(x: float) -> str:
    return f"{x:.3e}"


def _fmt_rate(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.3f}"


def format_row(r: StudyRow) -> list:
    return [r.variant, str(r.k), str(r.N),
            "" if r.H is None else repr(r.H),
            repr(r.eps), "" if r.gamma is None else repr(r.gamma),
            _fmt_err(r.e_dG), _fmt_rate(r.rate_dG),
            _fmt_err(r.e_dGb), _fmt_rate(r.rate_dGb)]


def emit_report(result: StudyResult, path) -> None:
    if not result.rows:
        raise ValueError("nothing to report")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in result.rows:
            w.writerow(format_row(r))


def read_report(path) -> StudyResult:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            opt = lambda s, conv: conv(s) if s != "" else None
            rows.append(StudyRow(
                variant=rec["variant"], k=int(rec["k"]), N=int(rec["N"]),
                H=opt(rec["H"], float), eps=float(rec["eps"]),
                gamma=opt(rec["gamma"], float),
                e_dG=float(rec["e_dG"]), e_dGb=float(rec["e_dGb"]),
                rate_dG=opt(rec["rate_dG"], float), rate_dGb=opt(rec["rate_dGb"], float)))
    return StudyResult(rows)


def rounded(result: StudyResult) -> StudyResult:
    """The result as it reads back from CSV, i.e. at printed precision."""
    out = []
    for r in result.rows:
        out.append(replace(
            r, e_dG=float(_fmt_err(r.e_dG)), e_dGb=float(_fmt_err(r.e_dGb)),
            rate_dG=None if r.rate_dG is None else float(_fmt_rate(r.rate_dG)),
            rate_dGb=None if r.rate_dGb is None else float(_fmt_rate(r.rate_dGb))))
    return StudyResult(out)
