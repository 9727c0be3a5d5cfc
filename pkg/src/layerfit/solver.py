"""Newton iteration for ``T y = 0`` with a Thomas tridiagonal solver."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch, DomainError, NoConvergence, SingularMatrix
from .mesh import Mesh
from .problems import ProblemSpec
from .scheme import TridiagonalMatrix, jacobian, mmatrix_report, residual

__all__ = ["Armijo", "SolverConfig", "SolverResult", "thomas_solve", "newton_solve"]

log = logging.getLogger(__name__)

PIVOT_MIN = 1e-30


@dataclass(frozen=True)
class Armijo:
    factor: float = 0.5
    max_backtracks: int = 20
    c: float = 1e-4

    def __post_init__(self):
        if not 0 < self.factor < 1:
            raise DomainError("Armijo factor must lie in (0, 1)")
        if self.max_backtracks < 0:
            raise DomainError("max_backtracks must be non-negative")


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and start for :func:`newton_solve`.

    ``initial_guess`` is a constant or a full vector; boundary entries are
    always overwritten with 0.
    """

    tol: float = 1e-10
    max_iter: int = 50
    damping: Optional[Armijo] = None
    initial_guess: Union[float, np.ndarray] = -0.5
    strict: bool = False

    def __post_init__(self):
        if self.tol < 0:
            raise DomainError("tol must be non-negative")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


@dataclass
class SolverResult:
    y: np.ndarray
    iterations: int
    residual_norm: float
    mmatrix: tuple[bool, float]
    converged: bool
    reason: str
    history: list[float] = field(default_factory=list)
    fy_range: tuple[float, float] = (math.nan, math.nan)


def thomas_solve(A: TridiagonalMatrix, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` by elimination without pivoting."""
    rhs = np.asarray(rhs, dtype=float)
    n = A.n
    if rhs.shape != (n,):
        raise DimensionMismatch(f"rhs of length {rhs.size} for matrix of size {n}")
    a, b, c = A.sub.tolist(), A.main.tolist(), A.sup.tolist()
    d = rhs.tolist()
    cp = [0.0] * n
    dp = [0.0] * n
    piv = b[0]
    if abs(piv) < PIVOT_MIN:
        raise SingularMatrix("zero pivot in row 0")
    cp[0] = c[0] / piv
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if abs(piv) < PIVOT_MIN:
            raise SingularMatrix(f"zero pivot in row {i}")
        cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv
    x = [0.0] * n
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)


def _interior(H: TridiagonalMatrix) -> TridiagonalMatrix:
    sub = H.sub[1:-1].copy()
    sup = H.sup[1:-1].copy()
    sub[0] = 0.0
    sup[-1] = 0.0
    return TridiagonalMatrix(sub, H.main[1:-1].copy(), sup)


def _norm(v) -> float:
    return float(np.max(np.abs(v))) if len(v) else 0.0


def newton_solve(mesh: Mesh, p: ProblemSpec, cfg: Optional[SolverConfig] = None) -> SolverResult:
    """Solve ``T y = 0`` by Newton's method with the boundary values pinned.

    Stops when ``max|T y| <= cfg.tol``, or when a full Newton step changes
    ``y`` by no more than rounding (``8 macheps max(1, |y|)``): on strongly
    graded meshes ``|T y|`` has a floor near ``macheps / (beta h)^2`` that no
    iterate can get under.  ``reason`` records which test fired.
    """
    cfg = cfg or SolverConfig()
    n = mesh.N + 1
    if np.ndim(cfg.initial_guess) == 0:
        y = np.full(n, float(cfg.initial_guess))
    else:
        y = np.array(cfg.initial_guess, dtype=float)
        if y.shape != (n,):
            raise DimensionMismatch(f"initial guess of length {y.size} for {n} nodes")
    y[0] = y[-1] = 0.0
    x = mesh.points
    roundoff = 8 * np.finfo(float).eps

    fy_lo, fy_hi = p.fy_range(x, y)
    T = residual(mesh, p, y)
    rnorm = _norm(T)
    history = [rnorm]
    iterations = 0
    reason = "max_iter"
    converged = rnorm <= cfg.tol
    if converged:
        reason = "tol"
    while not converged and iterations < cfg.max_iter:
        H = jacobian(mesh, p, y)
        delta = np.zeros(n)
        delta[1:-1] = thomas_solve(_interior(H), T[1:-1])
        step = 1.0
        y_new = y - delta
        T_new = residual(mesh, p, y_new)
        if cfg.damping is not None:
            arm = cfg.damping
            for _ in range(arm.max_backtracks):
                if _norm(T_new) <= (1 - arm.c * step) * rnorm:
                    break
                step *= arm.factor
                y_new = y - step * delta
                T_new = residual(mesh, p, y_new)
        iterations += 1
        tiny_step = step == 1.0 and _norm(delta) <= roundoff * max(1.0, _norm(y))
        y, T = y_new, T_new
        rnorm = _norm(T)
        history.append(rnorm)
        lo, hi = p.fy_range(x, y)
        fy_lo, fy_hi = min(fy_lo, lo), max(fy_hi, hi)
        log.debug("newton %d: |T| = %.3e, step = %g", iterations, rnorm, step)
        if rnorm <= cfg.tol:
            converged, reason = True, "tol"
        elif tiny_step:
            converged, reason = True, "stagnation"

    report = mmatrix_report(jacobian(mesh, p, y), p.m)
    result = SolverResult(
        y=y,
        iterations=iterations,
        residual_norm=rnorm,
        mmatrix=report,
        converged=converged,
        reason=reason,
        history=history,
        fy_range=(fy_lo, fy_hi),
    )
    if not converged and cfg.strict:
        raise NoConvergence(f"no convergence after {iterations} iterations, |T| = {rnorm:.3e}", result)
    return result
