"""End-to-end acceptance checks, one PASS/FAIL line per criterion.

Run as ``python tests/test_acceptance.py`` for the summary alone, or through
pytest, which prints the same lines and fails the criteria that miss.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import reference_tables as ref  # noqa: E402

from nipg1d.meshgen import MeshVariant, uniform_mesh  # noqa: E402
from nipg1d.nipg_core import ProblemSpec, discretize_and_solve, penalty_scheme  # noqa: E402
from nipg1d.norms import convergence_rate, error_norms, interpolation_error_study  # noqa: E402
from nipg1d.polyquad import gauss_legendre_rule  # noqa: E402
from nipg1d.studies import (StudyConfig, layer_test_problem, run_convergence_study,  # noqa: E402
                            run_epsilon_sweep, run_slope_study, solve_case)

EPS = 2.0 ** -20
REL = 0.05
RATE_TOL = 0.02
HERE = os.path.dirname(os.path.abspath(__file__))


def _rel(a, b):
    return abs(a / b - 1.0)


def golden_tables():
    t0 = time.perf_counter()
    res = run_convergence_study(StudyConfig(variants=["S", "BS", "DL"], ks=[1, 2, 3]))
    elapsed = time.perf_counter() - t0
    misses = []

    def compare(label, got, want, kind):
        if want is None and got is None:
            return
        if want is None or got is None:
            misses.append(f"{label} {kind}: {got} vs {want}")
        elif kind == "rate" and abs(got - want) > RATE_TOL:
            misses.append(f"{label} rate {got:.3f} vs {want:.3f}")
        elif kind == "err" and _rel(got, want) > REL:
            misses.append(f"{label} {got:.4g} vs {want:.4g} ({_rel(got, want):.1%})")

    for v in ("S", "BS"):
        for k in (1, 2, 3):
            for j in range(4, 11):
                row = res.find(v, k, N=2 ** j)
                e, r = ref.ENERGY[(v, k, 2 ** j)]
                eb, rb = ref.BALANCED[(v, k, 2 ** j)]
                tag = f"{v} k={k} N=2^{j}"
                compare(tag + " e_dG", row.e_dG, e, "err")
                compare(tag + " e_dG", row.rate_dG, r, "rate")
                compare(tag + " e_dGb", row.e_dGb, eb, "err")
                compare(tag + " e_dGb", row.rate_dGb, rb, "rate")
    for k in (1, 2, 3):
        for j in range(1, 7):
            row = res.find("DL", k, H=2.0 ** -j)
            n, e, r, eb, rb = ref.GRADED[(k, j)]
            tag = f"DL k={k} H=2^-{j}"
            if row.N != n:
                misses.append(f"{tag} N_DL {row.N} vs {n}")
            compare(tag + " e_dG", row.e_dG, e, "err")
            compare(tag + " e_dG", row.rate_dG, r, "rate")
            compare(tag + " e_dGb", row.e_dGb, eb, "err")
            compare(tag + " e_dGb", row.rate_dGb, rb, "rate")
    if elapsed > 60:
        misses.append(f"runtime {elapsed:.1f}s > 60s")
    detail = f"{len(misses)} mismatches in {elapsed:.1f}s"
    if misses:
        detail += ": " + "; ".join(misses)
    return not misses, detail


def robustness_sweep():
    eps_list = [2.0 ** -j for j in range(13, 21)]
    s = run_epsilon_sweep(StudyConfig(variants=["S"], ks=[2], Ns=[1024], eps_values=eps_list))
    eb = [r.e_dGb for r in s.rows]
    e20 = s.rows[-1].e_dG
    bs = solve_case(MeshVariant("BS"), 2, EPS, N=1024)[3].e_dGb
    ok = (all(1.50e-3 <= x <= 1.53e-3 for x in eb)
          and _rel(e20, 1.564e-6) <= REL and _rel(bs, 3.666e-5) <= REL)
    return ok, (f"S e_dGb in [{min(eb):.4e}, {max(eb):.4e}], "
                f"S e_dG(2^-20) = {e20:.4e}, BS e_dGb(2^-20) = {bs:.4e}")


def slope_in_log_eps():
    res = run_slope_study(1024, 2, [2.0 ** -j for j in range(9, 24)])
    measured, reference = res.fitted_slopes()
    counts = sorted({r.N_DL for r in res.rows})
    ok = abs(measured - 2.5) <= 0.5
    return ok, (f"fitted slope {measured:.3f} (comparison curve {reference:.3f}, "
                f"target 2.5 +- 0.5), N_DL values {counts}")


def interpolation_rates():
    prob = layer_test_problem(EPS)
    tol = 0.15
    misses = []
    worst = math.inf
    for name in ("S", "pS", "BS", "mBS"):
        for k in (1, 2, 3):
            res = interpolation_error_study(prob, MeshVariant(name), "lagrange", k,
                                            Ns=[2 ** j for j in range(5, 10)])
            for q in ("coarse_Linf", "coarse_L2"):
                low = min(res.rates(q, "N"))
                worst = min(worst, low - (k + 1))
                if low < k + 1 - tol:
                    misses.append(f"{name} k={k} {q} {low:.3f}")
            if name == "BS":
                low = min(res.rates("fine_sqrt_eps_H1", "s"))
                worst = min(worst, low - k)
                if low < k - tol:
                    misses.append(f"BS k={k} fine_sqrt_eps_H1 {low:.3f}")
    for k in (1, 2, 3):
        res = interpolation_error_study(prob, MeshVariant("DL"), "lagrange", k,
                                        Hs=[2.0 ** -j for j in range(3, 6)])
        # the DL bounds are stated for the maxima of each group
        for q in ("value_max", "grad_max"):
            var, order = res.orders[q]
            rate = res.fitted_rate(q, var)
            worst = min(worst, rate - order)
            if rate < order - tol:
                misses.append(f"DL k={k} {q} {rate:.3f} < {order}")
    detail = f"smallest margin over expected order {worst:+.3f}"
    if misses:
        detail += ": " + "; ".join(misses)
    return not misses, detail


def structural_suite():
    files = [os.path.join(HERE, f) for f in
             ("test_meshgen.py", "test_polyquad.py", "test_nipg_core.py", "test_norms.py")]
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files],
                          capture_output=True, text=True, cwd=os.path.dirname(HERE))
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    return proc.returncode == 0 and elapsed < 120, f"{tail} (wall {elapsed:.1f}s)"


def unperturbed_sanity():
    ch = math.cosh(0.5)

    def u(x):
        return 1.0 - np.cosh(np.asarray(x) - 0.5) / ch

    def du(x):
        return -np.sinh(np.asarray(x) - 0.5) / ch

    def one(x):
        return np.ones_like(np.asarray(x, dtype=float))

    prob = ProblemSpec(eps=1.0, c=one, f=one, exact_u=u, exact_du=du)
    quad = gauss_legendre_rule(10)
    lows = []
    for k in (1, 2, 3):
        errs = []
        for N in (8, 16, 32, 64, 128):
            mesh = uniform_mesh(N)
            pen = penalty_scheme(mesh, 1.0)
            uN, _, _ = discretize_and_solve(mesh, k, prob, pen)
            errs.append(error_norms(u, du, uN, pen, one, 1.0, quad).e_dG)
        lows.append(min(convergence_rate(a, b) for a, b in zip(errs, errs[1:])))
    ok = all(low >= k - 0.1 for k, low in zip((1, 2, 3), lows))
    return ok, "smallest rates " + ", ".join(f"k={k}: {r:.3f}" for k, r in zip((1, 2, 3), lows))


CRITERIA = [
    (1, "golden tables (S, BS, DL; eps = 2^-20)", golden_tables),
    (2, "robustness in eps at N = 1024", robustness_sweep),
    (3, "DL slope against ln(1/eps) at N_DL = 1024", slope_in_log_eps),
    (4, "interpolation error rates", interpolation_rates),
    (5, "structural invariant suite", structural_suite),
    (6, "eps = 1 sanity rates", unperturbed_sanity),
]


def _line(num, title, ok, detail):
    return f"criterion {num} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"


@pytest.mark.parametrize("num,title,check", CRITERIA, ids=[f"criterion{c[0]}" for c in CRITERIA])
def test_criterion(num, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(num, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, title, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(_line(num, title, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
