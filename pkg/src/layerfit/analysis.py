"""Errors, convergence orders and full convergence sweeps."""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import __version__
from .errors import DomainError, LayerfitError, MissingExactSolution
from .mesh import (
    Bakhvalov,
    Liseikin,
    Mesh,
    MeshFamily,
    ModifiedShishkin,
    Shishkin,
    generate,
    is_shishkin_type,
    parse_family,
)
from .problems import get_problem
from .solver import SolverConfig, newton_solve

__all__ = [
    "FamilySettings",
    "TABLE1_SETTINGS",
    "STATED_SETTINGS",
    "TABLE_EPSILONS",
    "family_settings",
    "max_error",
    "conv_order",
    "ConvergenceRow",
    "ConvergenceReport",
    "solve_cell",
    "sweep",
]

TABLE_EPSILONS = tuple(2.0**-j for j in (3, 5, 10, 20, 30, 40))
FAMILY_ORDER = ("shishkin", "modified-shishkin", "bakhvalov", "liseikin")


@dataclass(frozen=True)
class FamilySettings:
    """A mesh family plus the scheme's gamma.

    ``sigma_by_epsilon`` optionally replaces the Shishkin ``sigma`` for
    particular eps values.
    """

    family: MeshFamily
    gamma: float
    sigma_by_epsilon: Optional[Mapping[float, float]] = None

    def family_for(self, epsilon: float) -> MeshFamily:
        if self.sigma_by_epsilon and is_shishkin_type(self.family):
            sigma = self.sigma_by_epsilon.get(float(epsilon))
            if sigma is not None:
                return replace(self.family, sigma=sigma)
        return self.family


# The reference large-eps Shishkin columns use a narrower layer region.
TABLE1_SIGMA = {2.0**-3: 2.0 / 9.0, 2.0**-5: 2.0 / 5.0}

# Settings under which the reference convergence table is reproduced.  The
# gamma values, Bakhvalov (a, q) and the large-eps sigma were recovered by
# fitting the table; the Shishkin-type blocks match to all printed digits.
TABLE1_SETTINGS = {
    "shishkin": FamilySettings(Shishkin(), 3.0, TABLE1_SIGMA),
    "modified-shishkin": FamilySettings(ModifiedShishkin(), 3.0, TABLE1_SIGMA),
    "bakhvalov": FamilySettings(Bakhvalov(a=0.5, q=0.25), 2.0),
    "liseikin": FamilySettings(Liseikin(), 1.0),
}

# Settings as written next to the table: gamma = 1 and default mesh constants.
STATED_SETTINGS = {
    "shishkin": FamilySettings(Shishkin(), 1.0),
    "modified-shishkin": FamilySettings(ModifiedShishkin(), 1.0),
    "bakhvalov": FamilySettings(Bakhvalov(), 1.0),
    "liseikin": FamilySettings(Liseikin(), 1.0),
}

PRESETS = {"table1": TABLE1_SETTINGS, "stated": STATED_SETTINGS}


def family_settings(name: str, preset: str = "table1", gamma: Optional[float] = None, **params) -> FamilySettings:
    """Family and gamma for ``name`` under ``preset``; overrides win."""
    try:
        table = PRESETS[preset]
    except KeyError:
        raise DomainError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}") from None
    base = table.get(name.strip().lower())
    if base is None:
        parse_family(name)  # raises with the list of valid names
    family = base.family
    if params:
        merged = {k: getattr(family, k) for k in family.__dataclass_fields__}
        merged.update(params)
        family = type(family)(**merged)
    sig = None if "sigma" in params else base.sigma_by_epsilon
    return FamilySettings(family, base.gamma if gamma is None else float(gamma), sig)


def max_error(numeric, exact_fn: Optional[Callable], mesh: Mesh) -> float:
    """``max_i |y(x_i) - numeric_i|``."""
    if exact_fn is None:
        raise MissingExactSolution("no exact solution attached to the problem")
    return float(np.max(np.abs(np.asarray(exact_fn(mesh.points)) - np.asarray(numeric))))


def conv_order(E_N: float, E_2N: float, k: int, family: MeshFamily) -> float:
    """Observed order between ``N = 2**k`` and ``2N``.

    Shishkin-type meshes divide by ``ln(2k / (k + 1))`` (the ``ln N / N``
    rate); Bakhvalov and Liseikin meshes by ``ln 2``.
    """
    if not (E_N > 0 and E_2N > 0):
        raise DomainError(f"errors must be positive, got {E_N}, {E_2N}")
    if is_shishkin_type(family):
        if k < 2:
            raise DomainError("k must be at least 2 for the Shishkin order formula")
        denom = math.log(2 * k / (k + 1))
    else:
        denom = math.log(2)
    return (math.log(E_N) - math.log(E_2N)) / denom


@dataclass
class ConvergenceRow:
    family: str
    epsilon: float
    k: int
    N: int
    E_N: Optional[float]
    Ord: Optional[float] = None
    status: str = "ok"
    gamma: float = math.nan
    iterations: int = 0
    mmatrix_ok: Optional[bool] = None
    min_surplus: float = math.nan
    seconds: float = 0.0  # wall time, not serialised


def _fmt_sci(v: float) -> str:
    mant, exp = f"{v:.3e}".split("e")
    return f"{mant}e{int(exp)}"


def _fmt_eps(eps: float) -> str:
    m, e = math.frexp(eps)
    if m == 0.5:
        return f"2^{e - 1}"
    return repr(eps)


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]
    metadata: dict = field(default_factory=dict)

    def cell(self, family: str, epsilon: float, k: int) -> ConvergenceRow:
        for r in self.rows:
            if r.family == family and r.epsilon == epsilon and r.k == k:
                return r
        raise KeyError((family, epsilon, k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "epsilon", "k", "N", "E_N", "Ord"])
        for r in self.rows:
            e = "—" if r.E_N is None else repr(r.E_N)
            o = "" if r.Ord is None else f"{r.Ord:.6f}"
            w.writerow([r.family, repr(r.epsilon), r.k, r.N, e, o])
        return buf.getvalue()

    def to_markdown(self) -> str:
        families = list(dict.fromkeys(r.family for r in self.rows))
        out = []
        meta = self.metadata
        out.append(f"<!-- layerfit {meta.get('version', '')}, tol={meta.get('tol', '')} -->")
        for fam in families:
            rows = [r for r in self.rows if r.family == fam]
            epss = list(dict.fromkeys(r.epsilon for r in rows))
            ks = sorted({r.k for r in rows})
            gam = meta.get("gamma", {}).get(fam, "")
            formula = meta.get("ord_formula", {}).get(fam, "")
            out.append("")
            out.append(f"### {fam} (gamma = {gam}, Ord = ln(E_N/E_2N)/{formula})")
            out.append("")
            head = ["N"]
            for e in epss:
                head += [f"{_fmt_eps(e)} E_N", "Ord"]
            out.append("| " + " | ".join(head) + " |")
            out.append("|" + "---|" * len(head))
            by = {(r.epsilon, r.k): r for r in rows}
            for k in ks:
                line = [f"2^{k}"]
                for e in epss:
                    r = by.get((e, k))
                    if r is None or r.E_N is None:
                        line += ["—", "—"]
                    else:
                        line += [_fmt_sci(r.E_N), "-" if r.Ord is None else f"{r.Ord:.2f}"]
                out.append("| " + " | ".join(line) + " |")
        return "\n".join(out) + "\n"


def solve_cell(problem_name: str, settings: FamilySettings, epsilon: float, k: int, tol: float = 1e-10):
    """Generate, solve and measure one ``(family, eps, N = 2**k)`` cell."""
    p = get_problem(problem_name, epsilon, gamma=settings.gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mesh = generate(settings.family_for(epsilon), 2**k, p)
    result = newton_solve(mesh, p, SolverConfig(tol=tol))
    return mesh, p, result


FamilyArg = Union[str, FamilySettings]


def sweep(
    problem_name: str,
    families: Sequence[FamilyArg] = FAMILY_ORDER,
    k_range: Iterable[int] = range(4, 13),
    epsilons: Sequence[float] = TABLE_EPSILONS,
    *,
    preset: str = "table1",
    gamma: Optional[float] = None,
    tol: float = 1e-10,
) -> ConvergenceReport:
    """Run every ``(family, eps, 2**k)`` cell and fill in the orders.

    Rows come out grouped by family, then eps, in the order given, with k
    ascending.  A cell that fails keeps ``E_N = None`` and a status tag.
    """
    ks = sorted(set(k_range))
    chosen = []
    for f in families:
        s = family_settings(f, preset, gamma) if isinstance(f, str) else f
        chosen.append(s)
    rows: list[ConvergenceRow] = []
    for s in chosen:
        name = s.family.name
        for eps in epsilons:
            block = []
            for k in ks:
                row = ConvergenceRow(name, float(eps), k, 2**k, None, gamma=s.gamma)
                t0 = time.perf_counter()
                try:
                    mesh, p, res = solve_cell(problem_name, s, eps, k, tol)
                    row.iterations = res.iterations
                    row.mmatrix_ok, row.min_surplus = res.mmatrix
                    if res.converged:
                        row.E_N = max_error(res.y, p.exact, mesh)
                    else:
                        row.status = f"no convergence (|T|={res.residual_norm:.2e})"
                except LayerfitError as exc:
                    row.status = f"{type(exc).__name__}: {exc}"
                row.seconds = time.perf_counter() - t0
                block.append(row)
            by_k = {r.k: r for r in block}
            for r in block:
                nxt = by_k.get(r.k + 1)
                if nxt is not None and r.E_N and nxt.E_N:
                    r.Ord = conv_order(r.E_N, nxt.E_N, r.k, s.family)
            rows.extend(block)
    meta = {
        "version": __version__,
        "problem": problem_name,
        "preset": preset,
        "tol": tol,
        "gamma": {s.family.name: s.gamma for s in chosen},
        "families": {s.family.name: repr(s.family) for s in chosen},
        "sigma_by_epsilon": {
            s.family.name: dict(s.sigma_by_epsilon) for s in chosen if s.sigma_by_epsilon
        },
        "ord_formula": {
            s.family.name: ("ln(2k/(k+1))" if is_shishkin_type(s.family) else "ln 2") for s in chosen
        },
    }
    return ConvergenceReport(rows, meta)
