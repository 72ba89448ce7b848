"""Layer-adapted meshes for reaction-diffusion problems with two boundary layers.

Four Shishkin-type meshes (S, pS, BS, mBS) share the three-piece construction

    x_i = (k+1)(eps/gamma) phi(i/N)              0 <= i <= N/4
    x_i = lam + 2(1 - 2 lam)(i/N - 1/4)          N/4 < i <= 3N/4
    x_i = 1 - (k+1)(eps/gamma) phi(1 - i/N)      3N/4 < i <= N

with ``phi = -ln(psi)`` taken from the characterising function ``psi`` of each
variant.  The Duran-Lombardi (DL) mesh is built by the geometric recursion
``x_i = (1 + H) x_{i-1}`` after ``floor(1/H)`` cells of width ``H eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

BOUNDARY, FINE, COARSE = "boundary", "fine", "coarse"

# Omit x_{M-1} when the last cell is narrower than this fraction of the one
# before it.  Any value below 0.0217 reproduces the N_DL counts at eps = 2^-20.
DL_OMIT_RATIO = 0.01


class MeshKind(str, Enum):
    S = "S"
    PS = "pS"
    BS = "BS"
    MBS = "mBS"
    DL = "DL"

    @classmethod
    def parse(cls, name: str) -> "MeshKind":
        for kind in cls:
            if kind.value.lower() == name.lower():
                return kind
        raise ValueError(f"unknown mesh variant {name!r}")


@dataclass(frozen=True)
class MeshVariant:
    kind: MeshKind
    m: float = 3.0

    def __post_init__(self):
        if isinstance(self.kind, str) and not isinstance(self.kind, MeshKind):
            object.__setattr__(self, "kind", MeshKind.parse(self.kind))
        if self.kind is MeshKind.PS and not self.m > 1:
            raise ValueError("polynomial Shishkin mesh needs m > 1")

    @property
    def is_stype(self) -> bool:
        return self.kind is not MeshKind.DL

    @property
    def label(self) -> str:
        return self.kind.value

    def mbs_q(self, N: int) -> float:
        return 0.5 + 0.5 / math.log(N)

    def phi(self, t, N: int):
        """Mesh generating function on [0, 1/4]; phi(0) = 0, phi(1/4) = ln N."""
        t = np.asarray(t, dtype=float)
        lnN = math.log(N)
        if self.kind is MeshKind.S:
            return 4.0 * t * lnN
        if self.kind is MeshKind.PS:
            return (4.0 * t) ** self.m * lnN
        if self.kind is MeshKind.BS:
            return -np.log1p(-4.0 * (1.0 - 1.0 / N) * t)
        if self.kind is MeshKind.MBS:
            return 2.0 * t / (self.mbs_q(N) - 2.0 * t)
        raise ValueError("DL mesh has no generating function")

    def psi(self, t, N: int):
        return np.exp(-self.phi(t, N))

    def dpsi(self, t, N: int):
        """Derivative of psi_1 on [0, 1/4]."""
        t = np.asarray(t, dtype=float)
        lnN = math.log(N)
        if self.kind is MeshKind.S:
            return -4.0 * lnN * N ** (-4.0 * t)
        if self.kind is MeshKind.PS:
            s = 4.0 * t
            return -4.0 * self.m * lnN * s ** (self.m - 1.0) * N ** (-(s ** self.m))
        if self.kind is MeshKind.BS:
            return np.full_like(t, -4.0 * (1.0 - 1.0 / N))
        if self.kind is MeshKind.MBS:
            q = self.mbs_q(N)
            dphi = 2.0 * q / (q - 2.0 * t) ** 2
            return -dphi * np.exp(-2.0 * t / (q - 2.0 * t))
        raise ValueError("DL mesh has no generating function")


@dataclass
class Mesh1D:
    nodes: np.ndarray
    region: list
    variant: MeshVariant
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def element_regions(self) -> list:
        """Coarse if both end nodes lie in the closed coarse region, else fine."""
        out = []
        if not self.variant.is_stype:
            return [FINE] * self.N
        q1, q3 = self.N // 4, 3 * self.N // 4
        for i in range(1, self.N + 1):
            out.append(COARSE if q1 < i <= q3 else FINE)
        return out


def transition_parameter(N: int, eps: float, gamma: float, k: int) -> float:
    if N < 4 or N % 4:
        raise ValueError(f"N must be a multiple of 4 and >= 4, got {N}")
    if eps <= 0 or gamma <= 0:
        raise ValueError("eps and gamma must be positive")
    return min(0.25, (k + 1) * eps / gamma * math.log(N))


def max_psi_prime(variant: MeshVariant, N: int, samples: int = 100_000) -> float:
    if variant.kind is MeshKind.S:
        return 4.0 * math.log(N)
    if variant.kind is MeshKind.BS:
        return 4.0 * (1.0 - 1.0 / N)
    return numeric_max_psi_prime(variant, N, samples)


def numeric_max_psi_prime(variant: MeshVariant, N: int, samples: int = 100_000) -> float:
    t = np.linspace(0.0, 0.25, samples + 1)
    vals = np.abs(variant.dpsi(t, N))
    j = int(np.argmax(vals))
    # golden-section refinement around the best sample
    lo, hi = t[max(j - 1, 0)], t[min(j + 1, samples)]
    f = lambda s: -abs(float(variant.dpsi(s, N)))
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    for _ in range(80):
        if f(c) < f(d):
            b = d
        else:
            a = c
        c, d = b - g * (b - a), a + g * (b - a)
    return max(float(vals[j]), -f(0.5 * (a + b)), float(vals[0]), float(vals[-1]))


def build_stype_mesh(variant: MeshVariant, N: int, eps: float, gamma: float = 1.0,
                     k: int = 1) -> Mesh1D:
    if not variant.is_stype:
        raise ValueError("use build_dl_mesh for the Duran-Lombardi mesh")
    lam = transition_parameter(N, eps, gamma, k)
    clamped = (k + 1) * eps / gamma * math.log(N) >= 0.25
    q1, q3 = N // 4, 3 * N // 4
    scale = lam / math.log(N)  # (k+1) eps / gamma unless clamped

    i = np.arange(N + 1)
    x = np.empty(N + 1)
    left = i[: q1 + 1]
    x[: q1 + 1] = scale * variant.phi(left / N, N)
    mid = i[q1 + 1: q3 + 1]
    x[q1 + 1: q3 + 1] = lam + 2.0 * (1.0 - 2.0 * lam) * (mid / N - 0.25)
    x[0], x[q1], x[q3] = 0.0, lam, 1.0 - lam
    # right layer mirrors the left one: phi_2(t) = phi_1(1 - t)
    x[q3 + 1:] = 1.0 - x[N - i[q3 + 1:]]

    region = [BOUNDARY] + [FINE if (j <= q1 or j >= q3) else COARSE
                           for j in range(1, N)] + [BOUNDARY]
    meta = {"N": N, "eps": eps, "gamma": gamma, "k": k, "lambda": lam,
            "clamped": clamped, "max_psi_prime": max_psi_prime(variant, N)}
    return Mesh1D(x, region, variant, meta)


def _dl_left_half(H: float, eps: float) -> list:
    ell = math.floor(1.0 / H)
    x = [i * H * eps for i in range(ell + 1)]
    if x[-1] >= 0.5:
        # the uniform part already covers half the domain
        x = [v for v in x if v < 0.5]
    while (1.0 + H) * x[-1] < 0.5:
        x.append((1.0 + H) * x[-1])
    x.append(0.5)
    return x


def build_dl_mesh(H: float, eps: float, omit_ratio: float = DL_OMIT_RATIO) -> Mesh1D:
    if not 0.0 < H < 1.0:
        raise ValueError(f"H must lie in (0, 1), got {H}")
    if not 0.0 < eps < 1.0 or H * eps >= 0.5:
        raise ValueError("need 0 < eps < 1 and H*eps < 1/2")
    left = _dl_left_half(H, eps)
    M = len(left) - 1
    omitted = False
    if M >= 2:
        h_last = left[M] - left[M - 1]
        h_prev = left[M - 1] - left[M - 2]
        if h_last < omit_ratio * h_prev:
            del left[M - 1]
            omitted = True
    left = np.array(left)
    nodes = np.concatenate([left, 1.0 - left[-2::-1]])
    N = len(nodes) - 1
    region = [BOUNDARY] + [FINE] * (N - 1) + [BOUNDARY]
    meta = {"H": H, "eps": eps, "M": M, "ell": math.floor(1.0 / H),
            "omitted": omitted, "N": N}
    return Mesh1D(nodes, region, MeshVariant(MeshKind.DL), meta)


def build_mesh(variant: MeshVariant, *, eps: float, N: int | None = None,
               H: float | None = None, gamma: float = 1.0, k: int = 1) -> Mesh1D:
    if variant.is_stype:
        if N is None:
            raise ValueError(f"{variant.label} mesh needs N")
        return build_stype_mesh(variant, N, eps, gamma, k)
    if H is None:
        raise ValueError("DL mesh needs H")
    return build_dl_mesh(H, eps)


def uniform_mesh(N: int) -> Mesh1D:
    region = [BOUNDARY] + [COARSE] * (N - 1) + [BOUNDARY]
    return Mesh1D(np.linspace(0.0, 1.0, N + 1), region, MeshVariant(MeshKind.S),
                  {"N": N, "uniform": True})


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list:
        return [name for name, passed in self.checks.items() if not passed]

    def format(self) -> str:
        lines = [f"{name}: {'pass' if passed else 'FAIL'}"
                 for name, passed in self.checks.items()]
        lines += [f"{name} = {value:.6g}" for name, value in self.ratios.items()]
        return "\n".join(lines)


def validate_mesh(mesh: Mesh1D, rtol: float = 1e-12) -> ValidationReport:
    """Structural checks plus measured width ratios for constant-dependent bounds.

    The bounds whose constants are unspecified (fine-region minimum spacing,
    DL lower bound ``C H eps``) are reported as ratios, not as failures.
    """
    rep = ValidationReport()
    x = np.asarray(mesh.nodes, dtype=float)
    h = np.diff(x)
    N = len(x) - 1
    rep.checks["endpoints"] = x[0] == 0.0 and x[-1] == 1.0
    rep.checks["monotone"] = bool(np.all(h > 0))
    rep.checks["widths_sum"] = abs(h.sum() - 1.0) <= rtol
    rep.checks["symmetry"] = bool(np.allclose(x + x[::-1], 1.0, rtol=0, atol=1e-12))
    if not rep.checks["monotone"]:
        return rep

    if mesh.variant.is_stype and not mesh.meta.get("uniform"):
        q1, q3 = N // 4, 3 * N // 4
        lam = mesh.meta.get("lambda")
        if lam is not None:
            rep.checks["transition_points"] = (
                abs(x[q1] - lam) <= rtol * lam and abs(x[q3] - (1 - lam)) <= rtol)
        hc = h[q1:q3]
        tol = 1e-12 / N
        rep.checks["coarse_bounds"] = bool(np.all(hc >= 1.0 / N - tol)
                                           and np.all(hc <= 2.0 / N + tol))
        hf = np.concatenate([h[:q1], h[q3:]])
        k = mesh.meta.get("k", 1)
        eps = mesh.meta.get("eps")
        if eps is not None and hf.size:
            ref = (k + 1) * eps / N
            rep.ratios["fine_min_h_over_(k+1)eps/N"] = float(hf.min() / ref)
            rep.ratios["fine_max_h_over_(k+1)eps/N"] = float(hf.max() / ref)
    elif mesh.variant.kind is MeshKind.DL:
        H, eps, ell = mesh.meta["H"], mesh.meta["eps"], mesh.meta["ell"]
        rep.checks["dl_max_width"] = bool(np.all(h <= H * (1 + 1e-12)))
        n_uniform = min(ell, N // 2)
        # right-half nodes are stored as 1 - x, so widths there carry ulp(1) noise
        ulp = 8 * np.finfo(float).eps
        rep.checks["dl_uniform_cells"] = bool(
            np.allclose(h[:n_uniform], H * eps, rtol=1e-9, atol=0)
            and np.allclose(h[N - n_uniform:], H * eps, rtol=1e-9, atol=ulp))
        half = N // 2
        last = half - 1 if mesh.meta["omitted"] else half
        graded = [h[i - 1] <= H * x[i - 1] * (1 + 1e-12)
                  for i in range(ell + 1, last + 1)]
        rep.checks["dl_step_growth"] = all(graded)
        rep.ratios["dl_min_h_over_H_eps"] = float(h.min() / (H * eps))
        rep.ratios["H_N_over_ln(1/eps)"] = H * N / math.log(1.0 / eps)
    return rep
