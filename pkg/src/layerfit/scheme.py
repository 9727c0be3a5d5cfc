"""Fitted three-point scheme and its Jacobian.

With ``beta = sqrt(gamma) / eps`` and per-interval ratios
``th = tanh(beta h / 2)``, ``ch = coth(beta h / 2)`` the interior rows are

    T_i = gamma / (th_{i-1} + th_i) * [ ch_{i-1} y_{i-1} - (ch_{i-1} + ch_i) y_i
          + ch_i y_{i+1} - (f_{i-1} + f_i) th_{i-1} / gamma
          - (f_i + f_{i+1}) th_i / gamma ]

and the boundary rows are ``T_0 = -y_0``, ``T_N = -y_N``.  No cosh or sinh
of ``beta h`` is ever formed; ``beta h`` reaches 1e11 for eps = 2**-40.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, DomainError, MissingExactSolution, NonFiniteValue
from .mesh import Mesh
from .problems import ProblemSpec

__all__ = [
    "HyperbolicRatios",
    "TridiagonalMatrix",
    "beta",
    "ratios",
    "residual",
    "jacobian",
    "mmatrix_report",
    "fd_jacobian",
    "boglaev_identity_residual",
    "jacobian_to_csv",
]


@dataclass(frozen=True)
class HyperbolicRatios:
    tanh_half: np.ndarray
    coth_half: np.ndarray
    inv_sinh: np.ndarray


@dataclass
class TridiagonalMatrix:
    """Row ``i`` is ``sub[i] x[i-1] + main[i] x[i] + sup[i] x[i+1]``.

    ``sub[0]`` and ``sup[-1]`` are ignored and kept at zero.
    """

    sub: np.ndarray
    main: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        self.sub = np.asarray(self.sub, dtype=float)
        self.main = np.asarray(self.main, dtype=float)
        self.sup = np.asarray(self.sup, dtype=float)
        if not (self.sub.shape == self.main.shape == self.sup.shape) or self.main.ndim != 1:
            raise DimensionMismatch("sub, main and sup must be 1-D arrays of equal length")

    @property
    def n(self) -> int:
        return len(self.main)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.main.shape:
            raise DimensionMismatch(f"vector of length {len(x)} for matrix of size {self.n}")
        out = self.main * x
        out[1:] += self.sub[1:] * x[:-1]
        out[:-1] += self.sup[:-1] * x[1:]
        return out

    def to_dense(self) -> np.ndarray:
        A = np.diag(self.main)
        if self.n > 1:
            A += np.diag(self.sub[1:], -1) + np.diag(self.sup[:-1], 1)
        return A


def beta(gamma: float, epsilon: float) -> float:
    """Fitting exponent: ``u = sinh(beta (x_{i+1} - x)) / sinh(beta h)`` then solves ``eps^2 u'' = gamma u``."""
    if not (gamma > 0 and epsilon > 0):
        raise DomainError(f"gamma and epsilon must be positive, got {gamma}, {epsilon}")
    return math.sqrt(gamma) / epsilon


def ratios(beta_h) -> HyperbolicRatios:
    """``tanh(z/2)``, ``coth(z/2)`` and ``1/sinh(z)`` for ``z = beta h > 0``."""
    z = np.asarray(beta_h, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("beta*h must be positive")
    em = np.exp(-z)
    one_minus = -np.expm1(-z)  # 1 - e^{-z}, exact for small z
    th = one_minus / (1.0 + em)
    ch = (1.0 + em) / one_minus
    inv_sinh = 2.0 * em / (-np.expm1(-2.0 * z))
    return HyperbolicRatios(th, ch, inv_sinh)


def _interval_ratios(mesh: Mesh, p: ProblemSpec) -> HyperbolicRatios:
    return ratios(beta(p.gamma, p.epsilon) * mesh.steps)


def _check_state(mesh: Mesh, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (mesh.N + 1,):
        raise DimensionMismatch(f"state of length {y.size} for a mesh with {mesh.N + 1} nodes")
    return y


def _eval(fn, x, y, what):
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.broadcast_to(np.asarray(fn(x, y), dtype=float), x.shape)
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue(f"{what} is not finite on the mesh")
    return v


def residual(mesh: Mesh, p: ProblemSpec, y) -> np.ndarray:
    """The discrete operator ``T y``; a discrete solution has ``T y = 0``."""
    y = _check_state(mesh, y)
    x = mesh.points
    r = _interval_ratios(mesh, p)
    th, ch = r.tanh_half, r.coth_half
    f = _eval(p.f, x, y, "f")
    g = p.gamma
    pre = g / (th[:-1] + th[1:])
    bracket = (
        ch[:-1] * (y[:-2] - y[1:-1])
        + ch[1:] * (y[2:] - y[1:-1])
        - (f[:-2] + f[1:-1]) / g * th[:-1]
        - (f[1:-1] + f[2:]) / g * th[1:]
    )
    out = np.empty_like(y)
    out[0] = -y[0]
    out[-1] = -y[-1]
    out[1:-1] = pre * bracket
    return out


def jacobian(mesh: Mesh, p: ProblemSpec, y) -> TridiagonalMatrix:
    """Analytic Frechet derivative of :func:`residual` at ``y``."""
    y = _check_state(mesh, y)
    x = mesh.points
    r = _interval_ratios(mesh, p)
    th, ch = r.tanh_half, r.coth_half
    fy = _eval(p.f_y, x, y, "f_y") / p.gamma
    pre = p.gamma / (th[:-1] + th[1:])
    n = mesh.N + 1
    sub, main, sup = np.zeros(n), np.empty(n), np.zeros(n)
    main[0] = main[-1] = -1.0
    sub[1:-1] = pre * (ch[:-1] - fy[:-2] * th[:-1])
    sup[1:-1] = pre * (ch[1:] - fy[2:] * th[1:])
    main[1:-1] = -pre * (ch[:-1] + ch[1:] + fy[1:-1] * (th[:-1] + th[1:]))
    return TridiagonalMatrix(sub, main, sup)


def mmatrix_report(H: TridiagonalMatrix, m: float) -> tuple[bool, float]:
    """Sign pattern and minimum interior dominance surplus of ``H``.

    Returns ``(ok, min_i |h_ii| - |h_i,i-1| - |h_i,i+1|)``.  ``ok`` requires
    non-negative off-diagonals, a negative diagonal and a surplus of at
    least ``2m``, up to ``1e-10`` relative to the row's diagonal (the
    surplus is a difference of terms of size up to ``(beta h)^-2``).
    """
    sub, main, sup = H.sub, H.main, H.sup
    signs = bool(np.all(main < 0) and np.all(sub[1:-1] >= 0) and np.all(sup[1:-1] >= 0))
    if H.n < 3:
        return signs, math.inf
    d = np.abs(main[1:-1])
    surplus = d - np.abs(sub[1:-1]) - np.abs(sup[1:-1])
    allowed = 2 * m - 1e-10 * np.maximum(1.0, d)
    return signs and bool(np.all(surplus >= allowed)), float(surplus.min())


def fd_jacobian(mesh: Mesh, p: ProblemSpec, y, rel_step: float = 1e-6) -> np.ndarray:
    """Dense Jacobian of :func:`residual` by central differences, one column per node."""
    y = _check_state(mesh, y).copy()
    n = len(y)
    J = np.empty((n, n))
    for j in range(n):
        h = rel_step * max(1.0, abs(y[j]))
        saved = y[j]
        y[j] = saved + h
        up = residual(mesh, p, y)
        y[j] = saved - h
        down = residual(mesh, p, y)
        y[j] = saved
        J[:, j] = (up - down) / (2 * h)
    return J


def jacobian_to_csv(H: TridiagonalMatrix, stream=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "sub", "main", "super"])
    for i in range(H.n):
        w.writerow([i, repr(float(H.sub[i])), repr(float(H.main[i])), repr(float(H.sup[i]))])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


# --- Boglaev identity oracle ----------------------------------------------

def _sinh_ratio(a, b):
    # sinh(a) / sinh(b) for 0 <= a <= b without overflow
    return np.exp(a - b) * (-np.expm1(-2.0 * a)) / (-np.expm1(-2.0 * b))


def _simpson(values: np.ndarray, width: np.ndarray) -> np.ndarray:
    # composite Simpson along the last axis, even number of panels
    w = np.ones(values.shape[-1])
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return (values @ w) * width / (3.0 * (values.shape[-1] - 1))


def boglaev_identity_residual(
    p: ProblemSpec,
    y_exact: Callable | None,
    mesh: Mesh,
    quad_points: int = 256,
) -> float:
    """Max mismatch of the exact three-point integral identity at interior nodes.

    Left side: ``beta/sinh(beta h_{i-1}) y_{i-1} - (beta coth(beta h_{i-1})
    + beta coth(beta h_i)) y_i + beta/sinh(beta h_i) y_{i+1}``.
    Right side: ``eps^-2 [int u^II_{i-1} psi + int u^I_i psi]`` with
    ``psi = f - gamma y`` by composite Simpson on ``quad_points`` panels per
    interval.  Both sides are divided by ``beta``.
    """
    if y_exact is None:
        raise MissingExactSolution("the identity needs the exact solution")
    if quad_points < 32 or quad_points % 2:
        raise DomainError("quad_points must be an even number >= 32")
    x, h = mesh.points, mesh.steps
    b = beta(p.gamma, p.epsilon)
    r = ratios(b * h)
    coth = 0.5 * (r.coth_half + r.tanh_half)
    y = np.asarray(y_exact(x), dtype=float)
    lhs = r.inv_sinh[:-1] * y[:-2] - (coth[:-1] + coth[1:]) * y[1:-1] + r.inv_sinh[1:] * y[2:]

    s = np.linspace(0.0, 1.0, quad_points + 1)
    pts = x[:-1, None] + h[:, None] * s[None, :]  # one row per interval
    ys = np.asarray(y_exact(pts), dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        psi = np.asarray(p.f(pts, ys), dtype=float) - p.gamma * ys
    if not np.all(np.isfinite(psi)):
        raise NonFiniteValue("f is not finite at quadrature points")
    bh = (b * h)[:, None]
    u_rise = _sinh_ratio(b * (pts - x[:-1, None]), bh)  # u^II on interval j
    u_fall = _sinh_ratio(b * (x[1:, None] - pts), bh)  # u^I on interval j
    rise = _simpson(u_rise * psi, h)
    fall = _simpson(u_fall * psi, h)
    rhs = (rise[:-1] + fall[1:]) / (p.epsilon**2 * b)
    return float(np.max(np.abs(lhs - rhs)))
