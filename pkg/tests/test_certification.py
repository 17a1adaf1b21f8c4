import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import linalg as sla

from qsrsched.certification import (
    LtiSystem,
    are_residual,
    certify_controller,
    certify_storage,
    dissipativity_residual,
    lyapunov_residual,
    solve_are,
    solve_lyapunov,
    spectral_abscissa,
    stability_check,
)
from qsrsched.errors import DimensionError, InfeasibleError, InvalidParameterError, SolverError
from qsrsched.qsr_core import QsrTriple, SpecialCase, make_special
from qsrsched.testbeds import random_certified

PASSIVE1 = make_special(SpecialCase.passive(), 1)


def test_residual_feasible_scalar():
    sys = LtiSystem([[-1.0]], [[1.0]], [[1.0]])
    block, worst = dissipativity_residual(sys, PASSIVE1, [[0.5]])
    assert np.allclose(block, np.diag([-1.0, 0.0]))
    assert worst == pytest.approx(0.0, abs=1e-15)


def test_residual_infeasible_scalar():
    sys = LtiSystem([[-1.0]], [[1.0]], [[1.0]])
    block, worst = dissipativity_residual(sys, PASSIVE1, [[1.0]])
    assert np.allclose(block, [[-2.0, 0.5], [0.5, 0.0]])
    assert worst == pytest.approx((-2 + np.sqrt(5)) / 2)
    with pytest.raises(InfeasibleError):
        certify_storage(sys, PASSIVE1, [[1.0]])


def test_residual_zero_supply():
    sys = LtiSystem(-np.eye(2), np.zeros((2, 1)), np.ones((1, 2)))
    zero = QsrTriple(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)))
    block, worst = dissipativity_residual(sys, zero, np.eye(2))
    assert np.allclose(block, np.diag([-2.0, -2.0, 0.0]))
    assert worst == pytest.approx(0.0)


def test_residual_dimension_checks():
    sys = LtiSystem(-np.eye(2), np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(DimensionError):
        dissipativity_residual(sys, make_special(SpecialCase.passive(), 2), np.eye(2))
    with pytest.raises(DimensionError):
        dissipativity_residual(sys, PASSIVE1, np.eye(3))


@pytest.mark.parametrize("kind", ["passive", "isp", "osp", "vsp", "finite-l2"])
def test_random_certified_systems(kind, rng):
    sub = random_certified(rng, kind)
    _, worst = dissipativity_residual(sub.sys, sub.triple, sub.certificate.p_mat)
    assert worst <= 1e-9
    assert np.linalg.eigvalsh(sub.certificate.p_mat)[0] > 0


def test_stability_plant_controller():
    d = np.diag([5.0, 2.5, 2.5])
    b_hat = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    plant = QsrTriple(-d, 0.5 * b_hat, np.zeros((2, 2)))
    ctrl = QsrTriple(-0.3 * np.eye(2), 0.5 * b_hat.T, np.zeros((3, 3)))
    cert = stability_check(plant, ctrl, 1.0)
    assert cert.certified
    assert np.allclose(cert.block[:3, 3:], 0.0)


def test_stability_two_passive_fails():
    p = make_special(SpecialCase.passive(), 2)
    for rho in (0.3, 1.0, 4.0):
        cert = stability_check(p, p, rho)
        assert not cert.certified and cert.block_max_eig >= 0


def test_stability_two_vsp():
    v = make_special(SpecialCase.vsp(eps=0.1, delta=0.1), 2)
    cert = stability_check(v, v, 1.0)
    assert np.allclose(cert.block, -0.2 * np.eye(4))
    assert cert.certified
    with pytest.raises(InvalidParameterError):
        stability_check(v, v, 0.0)


def test_lyapunov_examples():
    assert solve_lyapunov([[-1.0]], [[-2.0]]) == pytest.approx(np.array([[1.0]]))
    assert np.allclose(solve_lyapunov(-np.eye(2), -2 * np.eye(2)), np.eye(2))
    with pytest.raises(SolverError):
        solve_lyapunov([[1.0]], [[-1.0]])


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_lyapunov_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a -= (spectral_abscissa(a) + rng.uniform(0.1, 2.0)) * np.eye(n)
    m = rng.standard_normal((n, n))
    m = m + m.T
    p = solve_lyapunov(a, m)
    assert lyapunov_residual(a, p, m) <= 1e-9
    ref = sla.solve_continuous_lyapunov(a.T, m)
    assert np.allclose(p, ref, rtol=1e-7, atol=1e-9 * max(1.0, np.abs(ref).max()))


def test_are_examples():
    p, k = solve_are([[0.0]], [[1.0]], [[1.0]], [[1.0]])
    assert p[0, 0] == pytest.approx(1.0) and k[0, 0] == pytest.approx(1.0)
    p, k = solve_are([[-1.0]], [[0.0]], [[1.0]], [[1.0]])
    assert p[0, 0] == pytest.approx(0.5) and k[0, 0] == pytest.approx(0.0)
    with pytest.raises(InvalidParameterError):
        solve_are([[0.0]], [[1.0]], [[1.0]], [[-1.0]])
    with pytest.raises(SolverError):
        solve_are([[1.0]], [[0.0]], [[1.0]], [[1.0]])


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_are_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, n + 1))
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, m))
    h = rng.standard_normal((n, n))
    q = h @ h.T + 1e-2 * np.eye(n)
    g = rng.standard_normal((m, m))
    r = g @ g.T + 0.1 * np.eye(m)
    p, k = solve_are(a, b, q, r)
    assert are_residual(a, b, q, r, p) <= 1e-8
    assert spectral_abscissa(a - b @ k) < 0
    ref = sla.solve_continuous_are(a, b, q, r)
    assert np.allclose(p, ref, rtol=1e-6, atol=1e-8 * max(1.0, np.abs(ref).max()))


def test_controller_scalar_toy():
    # P (-2) * 2 = 2 * (1/2) - eps - beta  ->  P = (eps + beta - 1) / 4
    cert = certify_controller([[-2.0]], [[1.0]], [[1.0]], [[0.5]])
    assert cert.p_mat[0, 0] == pytest.approx((cert.eps + cert.beta - 1.0) / 4.0)
    assert (cert.eps, cert.beta) == (10.0, pytest.approx(1e-4))
    assert cert.lmi_residual_max_eig <= 1e-12
    # eps = 0.1, beta = 0.01 gives P = -0.2225 < 0: infeasible on that grid alone
    with pytest.raises(InfeasibleError) as info:
        certify_controller([[-2.0]], [[1.0]], [[1.0]], [[0.5]], eps_grid=[0.1], beta_grid=[0.01])
    assert info.value.best == pytest.approx(-0.2225)


def test_controller_requires_hurwitz():
    with pytest.raises(SolverError):
        certify_controller([[2.0]], [[1.0]], [[1.0]], [[0.5]])


def test_controller_dimension_mismatch():
    with pytest.raises(DimensionError):
        certify_controller(-np.eye(2), np.ones((1, 3)), np.ones((1, 2)), [[0.5]])
