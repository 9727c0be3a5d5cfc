"""Layer-adapted meshes ``x_i = psi(i / N)`` on [0, 1].

Every generating function is defined on [0, 1/2] and reflected through
``psi(t) = 1 - psi(1 - t)``.  Meshes are built by mirroring the left half,
which makes them symmetric to rounding.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "Shishkin",
    "ModifiedShishkin",
    "Bakhvalov",
    "Liseikin",
    "MeshFamily",
    "Mesh",
    "FAMILY_NAMES",
    "parse_family",
    "is_shishkin_type",
    "transition_point",
    "generating_function",
    "generate",
    "quality",
    "mesh_to_csv",
]


@dataclass(frozen=True)
class Shishkin:
    """Piecewise uniform mesh, N/4 intervals in each layer of width lambda."""

    sigma: float = 2.0
    name = "shishkin"


@dataclass(frozen=True)
class ModifiedShishkin:
    """Shishkin mesh with a cubic C^1 blend on [1/4, 1/2]."""

    sigma: float = 2.0
    name = "modified-shishkin"


@dataclass(frozen=True)
class Bakhvalov:
    """Modified Bakhvalov mesh: ``a eps t / (q - t)`` then a tangent line.

    ``a=None`` means ``2 / sqrt(m)``, the smallest value with ``a sqrt(m) >= 2``,
    reduced to ``0.9 q / eps`` when that would break ``a < q / eps``.
    """

    a: Optional[float] = None
    q: float = 0.4
    name = "bakhvalov"


@dataclass(frozen=True)
class Liseikin:
    a: float = 1.0
    k: float = 1.0
    n: float = 2.0
    c0: float = 0.0
    name = "liseikin"


MeshFamily = Union[Shishkin, ModifiedShishkin, Bakhvalov, Liseikin]

FAMILY_NAMES = {
    "shishkin": Shishkin,
    "modified-shishkin": ModifiedShishkin,
    "bakhvalov": Bakhvalov,
    "liseikin": Liseikin,
}


def parse_family(name: str, **params) -> MeshFamily:
    """Build a family from its CLI name, e.g. ``parse_family("bakhvalov", q=0.25)``."""
    try:
        cls = FAMILY_NAMES[name.strip().lower()]
    except KeyError:
        raise DomainError(f"unknown mesh family {name!r}; expected one of {sorted(FAMILY_NAMES)}") from None
    return cls(**params)


def is_shishkin_type(family: MeshFamily) -> bool:
    return isinstance(family, (Shishkin, ModifiedShishkin))


def transition_point(epsilon: float, N: int, m: float, sigma: float = 2.0) -> float:
    """``min(sigma * eps * ln N / sqrt(m), 1/4)``."""
    if N < 8:
        raise DomainError(f"N must be at least 8, got {N}")
    if not m > 0:
        raise DomainError(f"m must be positive, got {m}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return min(sigma * epsilon * math.log(N) / math.sqrt(m), 0.25)


# --- per-family constants --------------------------------------------------

BAKHVALOV_CLIP = 0.9

def _bakhvalov_params(family: Bakhvalov, epsilon: float, m: float):
    q = family.q
    if not 0.0 < q < 0.5:
        raise ParameterError(f"Bakhvalov q must lie in (0, 1/2), got {q}")
    if family.a is None:
        # default 2/sqrt(m), pulled below q/eps for large eps
        a = min(2.0 / math.sqrt(m), BAKHVALOV_CLIP * q / epsilon)
    else:
        a = family.a
    if not a > 0:
        raise ParameterError(f"Bakhvalov a must be positive, got {a}")
    if a >= q / epsilon:
        raise ParameterError(
            f"Bakhvalov constraint a < q/eps violated: a={a}, q/eps={q / epsilon:.6g}"
        )
    if a * math.sqrt(m) < 2.0:
        warnings.warn(
            f"Bakhvalov a*sqrt(m) = {a * math.sqrt(m):.3g} < 2; "
            "the layer may be under-resolved",
            stacklevel=3,
        )
    ae = a * epsilon
    root = math.sqrt(a * q * epsilon * (1 - 2 * q + 2 * ae))
    alpha = (q - root) / (1 + 2 * ae)
    gap = (2 * ae * q + root) / (1 + 2 * ae)  # q - alpha without cancellation
    mu_alpha = ae * alpha / gap
    dmu_alpha = ae * q / gap**2
    return a, q, alpha, mu_alpha, dmu_alpha


def _liseikin_params(family: Liseikin, epsilon: float):
    a, k, n, c0 = family.a, family.k, family.n, family.c0
    if not (a > 0 and k > 0 and n > 0):
        raise ParameterError(f"Liseikin a, k, n must be positive: {family}")
    if c0 < 0:
        raise ParameterError(f"Liseikin c0 must be non-negative, got {c0}")
    e = lambda p: epsilon ** (k * a * p / (1 + n * a))  # noqa: E731
    d = (1.0 - e(1.0)) / 0.25
    const = e(n) - epsilon**k
    lin = d / a * e(n - 1)
    quad = 0.5 * d * d / a * (1 / a + 1) * e(n - 2)
    inv_c1 = 2.0 * (const + lin / 4 + quad / 16 + c0 / 64)
    c1 = 1.0 / inv_c1
    half = c1 * (const + lin * 0.25 + quad * 0.0625 + c0 * 0.25**3)
    if abs(half - 0.5) > 1e-10:
        # fall back to normalising psi(1/2) = 1/2 directly
        c1 = 0.5 / (const + lin * 0.25 + quad * 0.0625 + c0 * 0.25**3)
    return c1, d, const, lin, quad


def _left_half(family: MeshFamily, t: np.ndarray, epsilon: float, lam: Optional[float], m: float) -> np.ndarray:
    if isinstance(family, (Shishkin, ModifiedShishkin)):
        if lam is None:
            raise DomainError("Shishkin-type meshes need the transition point lambda")
        if not 0 < lam <= 0.25:
            raise DomainError(f"lambda must lie in (0, 1/4], got {lam}")
        if isinstance(family, Shishkin):
            return np.where(t <= 0.25, 4 * lam * t, lam + 2 * (1 - 2 * lam) * (t - 0.25))
        p = 32.0 * (1 - 4 * lam)
        return 4 * lam * t + p * np.clip(t - 0.25, 0.0, None) ** 3
    if isinstance(family, Bakhvalov):
        a, q, alpha, mu_a, dmu_a = _bakhvalov_params(family, epsilon, m)
        tt = np.minimum(t, alpha)
        return np.where(t <= alpha, a * epsilon * tt / (q - tt), mu_a + dmu_a * (t - alpha))
    if isinstance(family, Liseikin):
        c1, d, const, lin, quad = _liseikin_params(family, epsilon)
        s = t - 0.25
        with np.errstate(invalid="ignore", divide="ignore"):
            inner = c1 * epsilon**family.k * ((1 - d * np.minimum(t, 0.25)) ** (-1 / family.a) - 1)
        outer = c1 * (const + lin * s + quad * s * s + family.c0 * s**3)
        return np.where(t <= 0.25, inner, outer)
    raise DomainError(f"not a mesh family: {family!r}")


def generating_function(family: MeshFamily, t, epsilon: float, lam: Optional[float] = None, m: float = 1.0):
    """Evaluate ``psi(t)`` for scalar or array ``t`` in [0, 1]."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)) or not np.all(np.isfinite(t)):
        raise DomainError("t must lie in [0, 1]")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    left = t <= 0.5
    tl = np.where(left, t, 1.0 - t)
    v = _left_half(family, tl, epsilon, lam, m)
    v = np.where(left, v, 1.0 - v)
    return float(v) if scalar else v


@dataclass(frozen=True)
class Mesh:
    points: np.ndarray
    family: MeshFamily
    epsilon: float
    lam: Optional[float] = None
    steps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pts.setflags(write=False)
        h = np.diff(pts)
        h.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "steps", h)

    @property
    def N(self) -> int:
        return len(self.points) - 1


def generate(family: MeshFamily, N: int, problem=None, *, epsilon: Optional[float] = None, m: Optional[float] = None) -> Mesh:
    """Mesh with ``N + 1`` nodes for ``problem`` (or explicit ``epsilon``/``m``).

    ``N`` must be a multiple of 4 and at least 8.
    """
    if problem is not None:
        epsilon = problem.epsilon if epsilon is None else epsilon
        m = problem.m if m is None else m
    if epsilon is None:
        raise DomainError("generate needs a problem or an explicit epsilon")
    m = 1.0 if m is None else m
    if int(N) != N or N < 8 or N % 4:
        raise DomainError(f"N must be a multiple of 4 and at least 8, got {N}")
    N = int(N)
    lam = transition_point(epsilon, N, m, family.sigma) if is_shishkin_type(family) else None
    t = np.arange(N // 2 + 1) / N
    left = np.asarray(_left_half(family, t, epsilon, lam, m), dtype=float)
    left[0] = 0.0
    left[-1] = 0.5
    x = np.concatenate([left, 1.0 - left[-2::-1]])
    if not np.all(np.diff(x) > 0):
        raise ParameterError(f"{family} produced a non-increasing mesh for eps={epsilon}, N={N}")
    return Mesh(points=x, family=family, epsilon=epsilon, lam=lam)


def quality(mesh: Mesh) -> tuple[float, float]:
    """``(max h_i, max |h_{i+1} - h_i|)``."""
    h = mesh.steps
    dh = float(np.max(np.abs(np.diff(h)))) if len(h) > 1 else 0.0
    return float(h.max()), dh


def mesh_to_csv(mesh: Mesh, stream=None) -> str:
    """Write columns ``i, x_i, h_i`` (``h_N`` empty); returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "x_i", "h_i"])
    for i, x in enumerate(mesh.points):
        h = repr(float(mesh.steps[i])) if i < mesh.N else ""
        w.writerow([i, repr(float(x)), h])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
