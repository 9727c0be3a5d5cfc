import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerfit.analysis import TABLE1_SETTINGS
from layerfit.errors import DimensionMismatch, DomainError, MissingExactSolution, NonFiniteValue
from layerfit.mesh import Bakhvalov, Liseikin, ModifiedShishkin, Shishkin, generate
from layerfit.problems import ProblemSpec, builtin_test_problem
from layerfit.scheme import (
    TridiagonalMatrix,
    beta,
    boglaev_identity_residual,
    fd_jacobian,
    jacobian,
    jacobian_to_csv,
    mmatrix_report,
    ratios,
    residual,
)

FAMILIES = [Shishkin(), ModifiedShishkin(), Bakhvalov(), Liseikin()]


def _mesh(family, N, p):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return generate(family, N, p)


def _sinh_problem(eps, gamma=3.0):
    # f_y = cosh(y) + 1 in [2, ...]; nonlinear, m = 2
    return ProblemSpec(
        f=lambda x, y: np.sinh(y) + y + np.cos(np.pi * x),
        f_y=lambda x, y: np.cosh(y) + 1.0,
        epsilon=eps,
        m=2.0,
        gamma=gamma,
    )


def test_beta():
    assert beta(4.0, 0.5) == 4.0
    with pytest.raises(DomainError):
        beta(0.0, 0.1)
    with pytest.raises(DomainError):
        beta(1.0, 0.0)


@pytest.mark.parametrize("z", [1e-3, 0.1, 1.0, 5.0, 30.0])
def test_ratios_match_numpy(z):
    r = ratios(np.array([z]))
    assert r.tanh_half[0] == pytest.approx(math.tanh(z / 2), rel=1e-14)
    assert r.coth_half[0] == pytest.approx(1 / math.tanh(z / 2), rel=1e-14)
    assert r.inv_sinh[0] == pytest.approx(1 / math.sinh(z), rel=1e-14)


def test_ratios_tiny_argument():
    mpmath = pytest.importorskip("mpmath")
    z = 1e-12
    r = ratios(np.array([z]))
    assert r.tanh_half[0] == pytest.approx(float(mpmath.tanh(mpmath.mpf(z) / 2)), rel=1e-14)
    assert r.inv_sinh[0] == pytest.approx(float(1 / mpmath.sinh(mpmath.mpf(z))), rel=1e-14)


def test_ratios_huge_argument():
    r = ratios(np.array([1e11, 800.0]))
    assert np.all(r.tanh_half == 1.0)
    assert np.all(r.coth_half == 1.0)
    assert np.all(r.inv_sinh == 0.0)


def test_ratios_reject_nonpositive():
    with pytest.raises(DomainError):
        ratios(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        ratios(np.array([np.nan]))


@settings(max_examples=200, deadline=None)
@given(z=st.floats(1e-10, 1e6))
def test_ratio_identities(z):
    r = ratios(np.array([z]))
    th, ch, s = r.tanh_half[0], r.coth_half[0], r.inv_sinh[0]
    assert 0 < th <= 1 <= ch
    assert th * ch == pytest.approx(1.0, rel=1e-14)
    # 1/sinh z = (coth(z/2) - tanh(z/2)) / 2, up to cancellation on the right
    assert s == pytest.approx((ch - th) / 2, abs=4 * np.finfo(float).eps * ch)
    if z < 700:
        assert s == pytest.approx(1 / math.sinh(z), rel=1e-13)


@pytest.mark.parametrize("family", FAMILIES, ids=repr)
def test_residual_matches_hyperbolic_form(family):
    # independent assembly with sinh/cosh, valid while beta h is moderate
    eps = 2.0**-3
    p = builtin_test_problem(eps).with_gamma(2.0)
    mesh = _mesh(family, 16, p)
    rng = np.random.default_rng(7)
    y = rng.normal(size=17)
    x, h = mesh.points, mesh.steps
    b = beta(p.gamma, eps)
    f = p.f(x, y)
    psi = 0.5 * (f[:-1] + f[1:]) - p.gamma * 0.5 * (y[:-1] + y[1:])
    th = np.tanh(b * h / 2)
    s, c = np.sinh(b * h), np.cosh(b * h)
    alt = (
        b * (y[:-2] / s[:-1] - (c[:-1] / s[:-1] + c[1:] / s[1:]) * y[1:-1] + y[2:] / s[1:])
        - (psi[:-1] * th[:-1] + psi[1:] * th[1:]) / (eps**2 * b)
    )
    expect = 2 * eps**2 * b / (th[:-1] + th[1:]) * alt
    T = residual(mesh, p, y)
    np.testing.assert_allclose(T[1:-1], expect, rtol=1e-10, atol=1e-12)
    assert T[0] == -y[0] and T[-1] == -y[-1]


def test_residual_small_eps_is_finite():
    p = builtin_test_problem(2.0**-40).with_gamma(3.0)
    for family in FAMILIES:
        mesh = _mesh(family, 4096, p)
        T = residual(mesh, p, np.zeros(4097))
        assert np.all(np.isfinite(T))


def test_residual_dimension_checks():
    p = builtin_test_problem(0.1)
    mesh = _mesh(Shishkin(), 16, p)
    with pytest.raises(DimensionMismatch):
        residual(mesh, p, np.zeros(16))
    with pytest.raises(DimensionMismatch):
        jacobian(mesh, p, np.zeros(18))


def test_residual_nonfinite_f():
    p = ProblemSpec(f=lambda x, y: np.log(y), f_y=lambda x, y: 1 / y, epsilon=0.1, m=1.0, gamma=1.0)
    mesh = _mesh(Shishkin(), 16, p)
    with pytest.raises(NonFiniteValue):
        residual(mesh, p, -np.ones(17))


def _local_fd(mesh, p, y, step=1e-6):
    n = len(y)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        J[:, j] = (residual(mesh, p, y + e) - residual(mesh, p, y - e)) / (2 * step)
    return J


@pytest.mark.parametrize("family", FAMILIES, ids=repr)
@pytest.mark.parametrize("k", [3, 10])
def test_jacobian_vs_finite_differences(family, k):
    p = _sinh_problem(2.0**-k)
    mesh = _mesh(family, 32, p)
    y = np.random.default_rng(k).uniform(-1, 1, 33)
    H = jacobian(mesh, p, y).to_dense()
    J = _local_fd(mesh, p, y)
    assert np.max(np.abs(H - J)) <= 1e-5 * np.max(np.abs(H))
    # the library oracle agrees with the local one
    assert np.max(np.abs(fd_jacobian(mesh, p, y) - J)) <= 1e-6 * np.max(np.abs(H))


def test_tridiagonal_matvec():
    rng = np.random.default_rng(1)
    A = TridiagonalMatrix(rng.normal(size=6), rng.normal(size=6), rng.normal(size=6))
    A.sub[0] = A.sup[-1] = 0.0
    v = rng.normal(size=6)
    np.testing.assert_allclose(A.matvec(v), A.to_dense() @ v, rtol=1e-14)
    with pytest.raises(DimensionMismatch):
        A.matvec(np.zeros(5))
    with pytest.raises(DimensionMismatch):
        TridiagonalMatrix(np.zeros(3), np.zeros(4), np.zeros(4))


@pytest.mark.parametrize("name", sorted(TABLE1_SETTINGS))
@pytest.mark.parametrize("k", [3, 10, 40])
def test_builtin_jacobian_is_mmatrix(name, k):
    s = TABLE1_SETTINGS[name]
    p = builtin_test_problem(2.0**-k).with_gamma(s.gamma)
    mesh = _mesh(s.family, 256, p)
    ok, surplus = mmatrix_report(jacobian(mesh, p, np.zeros(257)), p.m)
    assert ok
    assert surplus == pytest.approx(2.0, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.floats(2, 40), idx=st.integers(0, 3))
def test_surplus_at_least_2m(seed, k, idx):
    p = _sinh_problem(2.0**-k, gamma=10.0)
    mesh = _mesh(FAMILIES[idx], 64, p)
    y = np.random.default_rng(seed).uniform(-1.5, 1.5, 65)  # f_y <= cosh(1.5) + 1 < 10
    ok, surplus = mmatrix_report(jacobian(mesh, p, y), p.m)
    assert ok and surplus >= 2 * p.m * (1 - 1e-9)


def test_mmatrix_report_detects_violations():
    good = TridiagonalMatrix([0, 1, 1, 0], [-1, -4, -4, -1], [0, 1, 1, 0])
    assert mmatrix_report(good, 1.0) == (True, 2.0)
    assert mmatrix_report(good, 1.5)[0] is False
    bad_sign = TridiagonalMatrix([0, -1, 1, 0], [-1, -4, -4, -1], [0, 1, 1, 0])
    assert mmatrix_report(bad_sign, 1.0)[0] is False


def test_jacobian_csv():
    H = TridiagonalMatrix([0, 1.5, 0], [-1, -2, -1], [0, 0.5, 0])
    assert jacobian_to_csv(H).splitlines() == ["i,sub,main,super", "0,0.0,-1.0,0.0", "1,1.5,-2.0,0.5", "2,0.0,-1.0,0.0"]


@pytest.mark.parametrize("family", FAMILIES, ids=repr)
def test_integral_identity_on_exact_solution(family):
    p = builtin_test_problem(2.0**-3)
    mesh = _mesh(family, 16, p)
    assert boglaev_identity_residual(p, p.exact, mesh, 256) <= 1e-6


def test_integral_identity_detects_wrong_function():
    p = builtin_test_problem(2.0**-3)
    mesh = _mesh(Shishkin(), 16, p)
    wrong = lambda x: p.exact(x) + 0.01 * np.sin(np.pi * np.asarray(x))  # noqa: E731
    assert boglaev_identity_residual(p, wrong, mesh) > 1e-3


def test_integral_identity_arguments():
    p = builtin_test_problem(2.0**-3)
    mesh = _mesh(Shishkin(), 16, p)
    with pytest.raises(MissingExactSolution):
        boglaev_identity_residual(p, None, mesh)
    with pytest.raises(DomainError):
        boglaev_identity_residual(p, p.exact, mesh, quad_points=33)
