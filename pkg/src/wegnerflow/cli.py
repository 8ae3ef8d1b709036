"""Command-line front end.

Exit codes: 0 pass, 1 tolerance failure, 2 input or validation error,
3 unsupported case.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .errors import FlowError, UnsupportedExactCase
from .exact import exact_trajectory
from .flow_numeric import IntegrationPlan, eigen_drift, integrate, trace_drift
from .matcore import GeneratorKind, HermitianMatrix, principal_invariants
from .spectra import cubic_roots, depressed_cubic, eigh, exponents
from .tridiag import build_from_parameters, ff_rescale, ff_residual
from .verify4 import default_plan, residuals_g0zero, residuals_general

EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT, EXIT_UNSUPPORTED = 0, 1, 2, 3

VERIFY4_THRESHOLDS = {"gamma": 1e-5, "beta": 1e-4, "delta": 1e-6, "rho": 1e-4, "fit": 1e-5}


class InputError(Exception):
    pass


# -- matrix files and CSV --------------------------------------------------


def load_matrix(path: str) -> HermitianMatrix:
    """Read {"n", "entries_re", "entries_im"?} JSON into a HermitianMatrix."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read matrix file {path}: {exc}") from exc
    if not isinstance(obj, dict) or "n" not in obj or "entries_re" not in obj:
        raise InputError("matrix file needs fields 'n' and 'entries_re'")
    n = obj["n"]
    try:
        re = np.asarray(obj["entries_re"], dtype=float)
        im = np.asarray(obj.get("entries_im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"matrix entries must be numbers: {exc}") from exc
    if not isinstance(n, int) or re.shape != (n, n) or im.shape != (n, n):
        raise InputError(f"entries must be {n}x{n} arrays")
    return HermitianMatrix(re + 1j * im)


def dump_matrix(h: HermitianMatrix) -> dict:
    obj = {"n": h.n, "entries_re": h.data.real.tolist()}
    if not h.is_real:
        obj["entries_im"] = h.data.imag.tolist()
    return obj


def csv_header(n: int, phases: bool = False) -> str:
    cols = ["s"]
    for i in range(n):
        for j in range(i, n):
            cols += [f"H{i + 1}{j + 1}_re", f"H{i + 1}{j + 1}_im"]
    if phases:
        cols += ["phi_b", "phi_c", "phi_g"]
    return ",".join(cols)


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(out: TextIO, s: np.ndarray, h: np.ndarray, phases: Optional[np.ndarray] = None) -> None:
    n = h.shape[-1]
    iu = np.triu_indices(n)
    out.write(csv_header(n, phases is not None) + "\n")
    for k in range(len(s)):
        vals = [s[k]]
        for z in h[k][iu]:
            vals += [z.real, z.imag]
        if phases is not None:
            vals += list(phases[k])
        out.write(",".join(_g17(v) for v in vals) + "\n")


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return header, np.array(rows)


# -- commands --------------------------------------------------------------


def _fmt(values) -> str:
    return " ".join(format(float(v), ".12g") for v in values)


def _plan(args, generator=GeneratorKind.MIELKE) -> IntegrationPlan:
    if not (args.s_max > 0 and args.steps > 0 and args.samples > 1):
        raise InputError("--s-max, --steps must be positive and --samples at least 2")
    return IntegrationPlan.uniform(args.s_max, args.steps, args.samples, generator)


def cmd_eig(args, out: TextIO) -> int:
    h = load_matrix(args.file)
    spec = eigh(h)
    out.write(f"eigenvalues: {_fmt(spec.values)}\n")
    out.write(f"exponents: {_fmt(exponents(spec, h.trace).u)}\n")
    if h.n == 3:
        cubic = depressed_cubic(principal_invariants(h))
        out.write(f"P: {cubic.p:.12g}\nQ: {cubic.q:.12g}\n")
        out.write(f"roots: {_fmt(cubic_roots(cubic))}\n")
    return EXIT_OK


def cmd_flow(args, out: TextIO) -> int:
    h = load_matrix(args.file)
    gen = GeneratorKind(args.generator)
    if args.method == "exact" and gen is not GeneratorKind.MIELKE:
        raise UnsupportedExactCase("closed forms exist only for the Mielke generator")
    plan = _plan(args, gen)
    if args.method == "exact":
        run = exact_trajectory(h, plan.samples)
        s, mats, phases = run.s, run.h, run.phases
    else:
        traj = integrate(h, plan)
        s, mats, phases = traj.s, traj.h, None
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_csv(fh, s, mats, phases)
    else:
        write_csv(out, s, mats, phases)
    return EXIT_OK


def cmd_compare(args, out: TextIO) -> int:
    h = load_matrix(args.file)
    plan = _plan(args)
    traj = integrate(h, plan)
    run = exact_trajectory(h, traj.s)
    dev = np.max(np.abs(run.h - traj.h), axis=(1, 2))
    k = int(np.argmax(dev))
    out.write(f"solution: {run.kind}\n")
    out.write(f"max deviation: {dev[k]:.3e} at s = {traj.s[k]:.6g}\n")
    out.write(f"trace drift: {trace_drift(traj):.3e}\n")
    out.write(f"eigenvalue drift: {eigen_drift(traj):.3e}\n")
    ok = dev[k] <= args.tolerance
    out.write(f"{'PASS' if ok else 'FAIL'} (tolerance {args.tolerance:g})\n")
    return EXIT_OK if ok else EXIT_TOLERANCE


def _number_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", ",").split(",") if x]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}") from exc


def cmd_tridiag_build(args, out: TextIO) -> int:
    u = _number_list(args.exponents)
    p = _number_list(args.coeffs)
    if len(u) != len(p) or len(u) < 2:
        raise InputError("--exponents and --coeffs need the same length (at least 2)")
    if abs(sum(u)) > 1e-10 * max(1.0, max(abs(x) for x in u)):
        raise InputError("exponents must sum to zero")
    res = ff_residual(u, p)
    out.write(f"product constraint residual: {res:.3e}\n")
    if args.rescale:
        p, lam = ff_rescale(u, p)
        out.write(f"rescaled coefficients by {lam:.17g}\n")
    sol, h0 = build_from_parameters(args.trace, u, p)
    out.write(f"eta term counts: {' '.join(str(len(e)) for e in sol.etas)}\n")
    w = np.sort(np.linalg.eigvalsh(h0.data))[::-1]
    target = np.sort(args.trace / len(u) + np.asarray(u) / 2.0)[::-1]
    out.write(f"spectrum: {_fmt(w)}\n")
    out.write(f"spectrum check: {np.max(np.abs(w - target)):.3e}\n")
    text = json.dumps(dump_matrix(h0), indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        out.write(text + "\n")
    return EXIT_OK


def cmd_verify4(args, out: TextIO) -> int:
    h = load_matrix(args.file)
    plan = None
    if args.s_max is not None or args.steps is not None:
        base = default_plan(h) if h.n == 4 else None
        s_max = args.s_max if args.s_max is not None else (base.s_max if base else 1.0)
        steps = args.steps if args.steps is not None else (base.steps if base else 1000)
        plan = IntegrationPlan.uniform(s_max, steps)
    g0zero = h.n == 4 and h.data[0, 3] == 0
    rep = residuals_g0zero(h, plan) if g0zero else residuals_general(h, plan)
    t = VERIFY4_THRESHOLDS
    checks = [
        ("gamma product drift", rep.max_gamma_product_drift, t["gamma"]),
        *((f"beta_{k + 1} residual", r, t["beta"]) for k, r in enumerate(rep.max_beta_residuals)),
        ("eta_2 fit residual", rep.eta2_fit_residual, t["fit"]),
    ]
    if g0zero:
        checks += [(f"delta_{k + 1} ratio drift", r, t["delta"]) for k, r in enumerate(rep.max_delta_ratio_drift)]
        checks += [(f"rho_{k + 1} condition", r, t["rho"]) for k, r in enumerate(rep.rho_condition_residuals)]
    ok = True
    for name, val, thr in checks:
        good = math.isfinite(val) and val <= thr
        ok &= good
        out.write(f"{name:22s} {val:.3e}  (<= {thr:g}) {'ok' if good else 'FAIL'}\n")
    out.write(f"fit window [0, {rep.fit_window:.4g}], basis condition {rep.fit_condition:.3e}\n")
    out.write("PASS\n" if ok else "FAIL\n")
    return EXIT_OK if ok else EXIT_TOLERANCE


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wegnerflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def numeric_flags(p):
        p.add_argument("--s-max", type=float, default=5.0)
        p.add_argument("--steps", type=int, default=5000)
        p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("eig", help="eigenvalues, exponents and cubic data")
    p.add_argument("file")
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("flow", help="write H(s) samples as CSV")
    p.add_argument("file")
    p.add_argument("--method", choices=["exact", "numeric"], default="exact")
    p.add_argument("--generator", choices=[g.value for g in GeneratorKind], default="mielke")
    numeric_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("compare", help="closed form against RK4")
    p.add_argument("file")
    numeric_flags(p)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tridiag-build", help="tridiagonal H0 from exponents and eta_1 coefficients")
    p.add_argument("--trace", type=float, required=True)
    p.add_argument("--exponents", required=True, help="comma separated")
    p.add_argument("--coeffs", required=True, help="comma separated")
    p.add_argument("--rescale", action="store_true", help="project coefficients onto the product constraint")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tridiag_build)

    p = sub.add_parser("verify4", help="structural residuals of a 4x4 symmetric flow")
    p.add_argument("file")
    p.add_argument("--s-max", type=float)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_verify4)
    return parser


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args, out)
    except UnsupportedExactCase as exc:
        err.write(f"unsupported: {exc}\n")
        return EXIT_UNSUPPORTED
    except (FlowError, InputError, ValueError, OSError) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
