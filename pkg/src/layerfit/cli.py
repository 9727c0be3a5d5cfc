"""Command-line front end: ``layerfit {solve,sweep,mesh,check}``.

Exit codes: 0 success, 1 domain or numeric failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import re
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import FAMILY_ORDER, TABLE_EPSILONS, PRESETS, family_settings, max_error, sweep
from .errors import LayerfitError
from .mesh import FAMILY_NAMES, generate, mesh_to_csv, quality
from .problems import EXACT_RESIDUAL_TOL, PROBLEMS, exact_solution_residual, get_problem
from .scheme import beta, boglaev_identity_residual, fd_jacobian, jacobian, jacobian_to_csv, mmatrix_report
from .solver import SolverConfig, newton_solve

log = logging.getLogger("layerfit")

_POW2 = re.compile(r"^\s*2\s*(?:\^|\*\*)\s*\(?\s*(-?\d+)\s*\)?\s*$")

JACOBIAN_FD_TOL = 1e-5
BOGLAEV_TOL = 1e-6
SYMMETRY_TOL = 1e-12
QUAD_MAX = 4096
PANEL_BH = 1.0 / 16  # beta*h per Simpson panel


def parse_epsilon(text: str) -> float:
    """``"9.765625e-4"``, ``"2^-10"`` or ``"2**-10"``; must lie in (0, 1)."""
    m = _POW2.match(text)
    try:
        eps = 2.0 ** int(m.group(1)) if m else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number or 2^-k literal: {text!r}") from None
    if not 0.0 < eps < 1.0:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1), got {text}")
    return eps


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _add_common(sp: argparse.ArgumentParser, *, many_meshes: bool = False):
    sp.add_argument("--problem", default="paper-example-1", choices=sorted(PROBLEMS))
    if many_meshes:
        sp.add_argument("--mesh", action="append", choices=sorted(FAMILY_NAMES), help="repeatable; default all four")
    else:
        sp.add_argument("--mesh", default="modified-shishkin", choices=sorted(FAMILY_NAMES))
    sp.add_argument("--gamma", type=_positive_float, default=None, help="override the preset gamma")
    sp.add_argument("--preset", default="table1", choices=sorted(PRESETS),
                    help="table1: fitted settings that reproduce the reference table; stated: gamma=1, default meshes")
    sp.add_argument("--tol", type=_positive_float, default=1e-10)
    sp.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="layerfit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one instance and write the solution CSV")
    _add_common(s)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--epsilon", type=parse_epsilon, required=True)
    s.add_argument("--format", choices=("csv", "markdown"), default="csv")
    s.add_argument("--dump-jacobian", default=None, metavar="PATH", help="write the final Jacobian as CSV")

    w = sub.add_parser("sweep", help="convergence table over families, eps and N = 2^k")
    _add_common(w, many_meshes=True)
    w.add_argument("--epsilon", type=parse_epsilon, action="append", help="repeatable; default the six table columns")
    w.add_argument("--k-min", type=int, default=4)
    w.add_argument("--k-max", type=int, default=12)
    w.add_argument("--format", choices=("csv", "markdown"), default="csv")

    m = sub.add_parser("mesh", help="write mesh nodes and steps as CSV")
    _add_common(m)
    m.add_argument("--N", type=int, required=True)
    m.add_argument("--epsilon", type=parse_epsilon, required=True)

    c = sub.add_parser("check", help="run the diagnostic oracles")
    _add_common(c)
    c.add_argument("--N", type=int, default=16)
    c.add_argument("--epsilon", type=parse_epsilon, default=2.0**-3)
    return ap


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _info(args, msg: str):
    # keep stdout clean for data when no --out is given
    print(msg, file=sys.stderr if args.out is None else sys.stdout)


def _settings(args, name: str):
    return family_settings(name, args.preset, args.gamma)


def _setup(args):
    s = _settings(args, args.mesh)
    p = get_problem(args.problem, args.epsilon, gamma=s.gamma)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mesh = generate(s.family_for(args.epsilon), args.N, p)
    for wmsg in caught:
        log.warning("%s", wmsg.message)
    return s, p, mesh


def _markdown_rows(header, rows) -> str:
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(str(v) for v in r) + " |" for r in rows]
    return "\n".join(out) + "\n"


def cmd_solve(args) -> int:
    s, p, mesh = _setup(args)
    res = newton_solve(mesh, p, SolverConfig(tol=args.tol))
    x = mesh.points
    exact = p.exact(x) if p.exact is not None else None
    header = ["i", "x_i", "y_numeric", "y_exact", "abs_error"]
    rows = []
    for i in range(mesh.N + 1):
        if exact is None:
            rows.append([i, repr(float(x[i])), repr(float(res.y[i])), "", ""])
        else:
            rows.append([i, repr(float(x[i])), repr(float(res.y[i])), repr(float(exact[i])),
                         repr(float(abs(exact[i] - res.y[i])))])
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = _markdown_rows(header, rows)
    _emit(text, args.out)
    if args.dump_jacobian:
        with open(args.dump_jacobian, "w", newline="") as fh:
            jacobian_to_csv(jacobian(mesh, p, res.y), fh)

    ok, surplus = res.mmatrix
    _info(args, f"family={s.family_for(args.epsilon)!r} gamma={p.gamma} N={mesh.N} eps={p.epsilon!r}")
    _info(args, f"residual={res.residual_norm:.3e} iterations={res.iterations} stop={res.reason}")
    _info(args, f"M-matrix: {'yes' if ok else 'no'} (min surplus {surplus:.6g}, need {2 * p.m:g})")
    if exact is not None:
        _info(args, f"max error={max_error(res.y, p.exact, mesh):.6e}")
    if not res.converged:
        print(f"error: Newton did not converge (|T| = {res.residual_norm:.3e})", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    families = args.mesh or list(FAMILY_ORDER)
    eps = args.epsilon or list(TABLE_EPSILONS)
    if args.k_min < 3 or args.k_max < args.k_min:
        raise LayerfitError(f"need 3 <= k-min <= k-max, got {args.k_min}..{args.k_max}")
    chosen = [_settings(args, f) for f in dict.fromkeys(families)]
    report = sweep(args.problem, chosen, range(args.k_min, args.k_max + 1), eps, preset=args.preset, tol=args.tol)
    text = report.to_csv() if args.format == "csv" else report.to_markdown()
    _emit(text, args.out)
    failed = [r for r in report.rows if r.E_N is None]
    for r in failed:
        log.warning("cell %s eps=%r N=%d failed: %s", r.family, r.epsilon, r.N, r.status)
    if failed and len(failed) == len(report.rows):
        print("error: every cell failed", file=sys.stderr)
        return 1
    return 0


def cmd_mesh(args) -> int:
    _, _, mesh = _setup(args)
    _emit(mesh_to_csv(mesh), args.out)
    hmax, dh = quality(mesh)
    _info(args, f"h_max*N={hmax * mesh.N:.6g} dh_max*N^2={dh * mesh.N**2:.6g}")
    return 0


def run_checks(args) -> list[tuple[str, Optional[bool], str]]:
    """Each check is ``(name, passed, detail)``; ``passed`` is None when skipped."""
    s, p, mesh = _setup(args)
    checks = []

    meta = p.metadata
    if "exact_residual" in meta:
        rr = float(meta["exact_residual"])
        checks.append(("exact-solution residual", rr <= EXACT_RESIDUAL_TOL,
                       f"{rr:.3e} at eps={meta['exact_residual_epsilon']!r} (tol {EXACT_RESIDUAL_TOL:g})"))
    elif p.exact is not None:
        rr = exact_solution_residual(p, p.exact)
        checks.append(("exact-solution residual", rr <= EXACT_RESIDUAL_TOL, f"{rr:.3e}"))

    name = "three-point integral identity"
    if p.exact is None:
        checks.append((name, False, "no exact solution"))
    else:
        # Simpson needs a few panels per decay length of the sinh kernel
        bh = float(np.max(mesh.steps)) * beta(p.gamma, p.epsilon)
        panels = 256
        while bh / panels > PANEL_BH and panels < QUAD_MAX:
            panels *= 2
        if bh / panels > PANEL_BH:
            checks.append((name, None, f"skipped: beta*h_max = {bh:.3g} too sharp for {QUAD_MAX} panels"))
        else:
            b = boglaev_identity_residual(p, p.exact, mesh, panels)
            checks.append((name, b <= BOGLAEV_TOL, f"{b:.3e} with {panels} panels (tol {BOGLAEV_TOL:g})"))

    res = newton_solve(mesh, p, SolverConfig(tol=args.tol))
    checks.append(("newton convergence", res.converged,
                   f"|T|={res.residual_norm:.3e} after {res.iterations} iterations ({res.reason})"))

    y = res.y
    H = jacobian(mesh, p, y).to_dense()
    J = fd_jacobian(mesh, p, y)
    rel = float(np.max(np.abs(H - J)) / max(np.max(np.abs(H)), 1e-300))
    checks.append(("jacobian vs finite differences", rel <= JACOBIAN_FD_TOL, f"relative {rel:.3e}"))

    ok, surplus = mmatrix_report(jacobian(mesh, p, y), p.m)
    lo, hi = res.fy_range
    bounds = lo >= p.m and hi <= p.gamma
    checks.append(("M-matrix", ok and bounds,
                   f"sign pattern and surplus {'ok' if ok else 'violated'} (min surplus {surplus:.6g}, need {2 * p.m:g}); "
                   f"f_y in [{lo:g}, {hi:g}] vs [m, gamma] = [{p.m:g}, {p.gamma:g}]"))

    x = mesh.points
    hmax, dh = quality(mesh)
    sym = float(np.max(np.abs(x + x[::-1] - 1.0)))
    shape_ok = bool(np.all(np.diff(x) > 0)) and sym <= SYMMETRY_TOL and x[0] == 0.0 and x[-1] == 1.0
    checks.append(("mesh quality", shape_ok,
                   f"h_max*N={hmax * mesh.N:.6g} dh_max*N^2={dh * mesh.N**2:.6g} symmetry={sym:.1e}"))
    return checks


def cmd_check(args) -> int:
    checks = run_checks(args)
    tag = {True: "PASS", False: "FAIL", None: "SKIP"}
    lines = [f"{tag[ok]}  {name}: {detail}" for name, ok, detail in checks]
    _emit("\n".join(lines) + "\n", args.out)
    return 1 if any(ok is False for _, ok, _ in checks) else 0


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "mesh": cmd_mesh, "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (LayerfitError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
