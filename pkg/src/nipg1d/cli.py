"""Command line front end: mesh, solve, study, sweep, slope, interp-study.

Every option may also come from a plain ``key=value`` file given with
``--config``; options on the command line win.  Lists are comma separated and
powers of two may be written ``2^-20``.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from typing import Optional

import numpy as np

from . import studies
from .meshgen import MeshKind, MeshVariant, build_mesh, validate_mesh
from .norms import interpolation_error_study
from .polyquad import DEFAULT_QUAD, gauss_legendre_rule

PROG = "nipg1d"


def parse_number(text: str) -> float:
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** float(exp)
    return float(text)


def number_list(text: str) -> list:
    return [parse_number(t) for t in str(text).split(",") if t.strip()]


def int_list(text: str) -> list:
    out = []
    for v in number_list(text):
        if v != int(v):
            raise argparse.ArgumentTypeError(f"expected an integer, got {v}")
        out.append(int(v))
    return out


def variant_list(text: str) -> list:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def read_config(path: str) -> dict:
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def fmt17(x: float) -> str:
    return f"{x:.17g}"


def write_values(path: str, values) -> None:
    with open(path, "w") as fh:
        for v in values:
            fh.write(fmt17(float(v)) + "\n")


# -- argument plumbing -------------------------------------------------------

def _common(p: argparse.ArgumentParser, lists: bool) -> None:
    num = number_list if lists else parse_number
    whole = int_list if lists else (lambda s: int_list(s)[0])
    p.add_argument("--config", help="key=value file supplying defaults")
    p.add_argument("--variant", type=variant_list if lists else str,
                   help="mesh variant: s, ps, bs, mbs or dl")
    p.add_argument("--k", type=whole, help="polynomial degree (1-3)")
    p.add_argument("--N", type=whole, help="number of cells (S-type meshes)")
    p.add_argument("--H", type=num, help="grading parameter (DL mesh)")
    p.add_argument("--eps", type=num, help="perturbation parameter")
    p.add_argument("--gamma", type=parse_number, help="transition-point constant")
    p.add_argument("--m", type=parse_number, help="exponent of the polynomial S-mesh")
    p.add_argument("--quad", type=lambda s: int_list(s)[0],
                   help=f"Gauss-Legendre points per cell (default {DEFAULT_QUAD})")
    p.add_argument("--profile", choices=sorted(studies.PROFILES),
                   help="penalty/quadrature conventions (default calibrated)")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.add_argument("--dump", help="write raw numbers, one per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate and validate a mesh")
    _common(p, lists=False)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("solve", help="solve the model problem once")
    _common(p, lists=False)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("study", help="convergence tables in N (S-type) or H (DL)")
    _common(p, lists=True)
    p.add_argument("--workers", type=int, help="rows solved concurrently")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("sweep", help="errors over eps at fixed N or H")
    _common(p, lists=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("slope", help="DL errors at a fixed cell count over eps")
    _common(p, lists=True)
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("interp-study", help="interpolation error rates")
    _common(p, lists=True)
    p.add_argument("--kind", choices=["lagrange", "projection"])
    p.set_defaults(func=cmd_interp)
    return parser


def merge_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fill options left unset on the command line from ``--config``."""
    if not args.config:
        return
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    for key, raw in cfg.items():
        if key not in actions or key in ("config", "help"):
            raise ValueError(f"unknown config key {key!r} for {args.command}")
        if getattr(args, key) is not None:
            continue
        action = actions[key]
        val = action.type(raw) if action.type else raw
        if action.choices is not None and val not in action.choices:
            raise ValueError(f"config {key}={raw!r}: choose from {sorted(action.choices)}")
        setattr(args, key, val)


def _variant(name: str, m: Optional[float]) -> MeshVariant:
    kind = MeshKind.parse(name)
    return MeshVariant(kind, m) if m is not None else MeshVariant(kind)


def _profile(args) -> studies.Profile:
    return studies.PROFILES[args.profile or "calibrated"]


def _need(args, *names) -> None:
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise ValueError(f"missing required option(s): {', '.join(missing)}")


def _gamma(args) -> float:
    return args.gamma if args.gamma is not None else _profile(args).gamma


# -- subcommands -------------------------------------------------------------

def cmd_mesh(args) -> int:
    _need(args, "variant", "eps")
    variant = _variant(args.variant, args.m)
    mesh = build_mesh(variant, eps=args.eps, N=args.N, H=args.H,
                      gamma=_gamma(args), k=args.k or 1)
    if args.dump:
        write_values(args.dump, mesh.nodes)
    else:
        for x in mesh.nodes:
            print(fmt17(x))
    report = validate_mesh(mesh)
    print(f"# {variant.label} mesh, N = {mesh.N}")
    print(report.format())
    return 0 if report.ok else 1


def cmd_solve(args) -> int:
    _need(args, "variant", "eps")
    variant = _variant(args.variant, args.m)
    mesh, uN, _, rep = studies.solve_case(
        variant, args.k or 1, args.eps, N=args.N, H=args.H, profile=_profile(args),
        gamma=args.gamma, quad=args.quad or DEFAULT_QUAD)
    print(f"N = {mesh.N}")
    print(f"e_dG = {rep.e_dG:.3e}")
    print(f"e_dGb = {rep.e_dGb:.3e}")
    if args.dump:
        write_values(args.dump, uN.coeffs)
    return 0


def _study_config(args, ks, Ns, Hs, eps, variants) -> studies.StudyConfig:
    return studies.StudyConfig(
        variants=[_variant(v, args.m) for v in (args.variant or variants)],
        ks=args.k or ks, Ns=args.N or Ns, Hs=args.H or Hs,
        eps_values=args.eps or eps, profile=_profile(args), gamma=args.gamma,
        quad=args.quad or DEFAULT_QUAD, workers=getattr(args, "workers", None) or 1,
        out=args.out)


def _emit(result: studies.StudyResult, out: Optional[str]) -> None:
    if out:
        studies.emit_report(result, out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(studies.CSV_HEADER)
        for r in result.rows:
            w.writerow(studies.format_row(r))


def cmd_study(args) -> int:
    cfg = _study_config(args, [1, 2, 3], [2 ** j for j in range(4, 11)],
                        [2.0 ** -j for j in range(1, 7)], [2.0 ** -20], ["s", "bs", "dl"])
    result = studies.run_convergence_study(cfg)
    _emit(result, args.out)
    if args.dump:
        write_values(args.dump, [v for r in result.rows for v in (r.e_dG, r.e_dGb)])
    return 0


def cmd_sweep(args) -> int:
    cfg = _study_config(args, [2], [2 ** 10], [2.0 ** -4],
                        [2.0 ** -j for j in range(10, 21)], ["s", "bs"])
    result = studies.run_epsilon_sweep(cfg)
    _emit(result, args.out)
    if args.dump:
        write_values(args.dump, [v for r in result.rows for v in (r.e_dG, r.e_dGb)])
    return 0


def cmd_slope(args) -> int:
    if args.variant and [MeshKind.parse(v) for v in args.variant] != [MeshKind.DL]:
        raise ValueError("the slope study runs on the DL mesh only")
    target = (args.N or [1024])[0]
    k = (args.k or [2])[0]
    eps = args.eps or [2.0 ** -j for j in range(9, 24)]
    result = studies.run_slope_study(target, k, eps, profile=_profile(args),
                                     quad=args.quad or DEFAULT_QUAD)
    for r in result.rows:
        if r.N_DL != target:
            print(f"note: eps={r.eps:.6e} reached N_DL={r.N_DL}, not {target}",
                  file=sys.stderr)
    if args.out:
        result.write_csv(args.out)
    else:
        print("eps,H,N_DL,e_dGb,comparison")
        for r in result.rows:
            print(f"{r.eps:.6e},{fmt17(r.H)},{r.N_DL},{r.e_dGb:.3e},{r.comparison:.3e}")
    measured, reference = result.fitted_slopes()
    print(f"# fitted slope: e_dGb {measured:.3f}, comparison {reference:.3f}",
          file=sys.stderr)
    if args.dump:
        write_values(args.dump, [r.e_dGb for r in result.rows])
    return 0


def cmd_interp(args) -> int:
    variant = _variant((args.variant or ["s"])[0], args.m)
    ks = args.k or [1]
    eps = (args.eps or [2.0 ** -20])[0]
    quad = gauss_legendre_rule(args.quad or DEFAULT_QUAD)
    kind = args.kind or "lagrange"
    gamma = min(_gamma(args), math.sqrt(2.0))
    problem = studies.layer_test_problem(eps, gamma)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["variant", "kind", "k", "quantity", "variable", "order",
                    "fitted_rate", "rates"])
        for k in ks:
            res = interpolation_error_study(
                problem, variant, kind, k, quad=quad,
                Ns=args.N or [2 ** j for j in range(5, 10)],
                Hs=args.H or [2.0 ** -j for j in range(3, 6)])
            for name, var, order, rates in res.table():
                w.writerow([variant.label, kind, k, name, var, order,
                            f"{res.fitted_rate(name, var):.3f}",
                            " ".join("" if r is None else f"{r:.3f}" for r in rates)])
            if args.dump:
                write_values(args.dump, [row.e_dG for row in res.rows])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        merge_config(parser, args)
        return args.func(args)
    except (ValueError, OSError, KeyError, np.linalg.LinAlgError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
