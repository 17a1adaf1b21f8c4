import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsrsched.errors import DimensionError, InvalidParameterError
from qsrsched.qsr_core import (
    Kind,
    QsrTriple,
    SampledSignal,
    SpecialCase,
    classify,
    cumulative_supply,
    make_special,
    supply_integral,
)

pos = st.floats(0.01, 50.0)


def test_passive_triple():
    t = make_special(SpecialCase.passive(), 2)
    assert np.array_equal(t.q_mat, np.zeros((2, 2)))
    assert np.array_equal(t.s_mat, 0.5 * np.eye(2))
    assert np.array_equal(t.r_mat, np.zeros((2, 2)))


def test_vsp_triple():
    t = make_special(SpecialCase.vsp(eps=0.1, delta=0.2), 2)
    assert np.allclose(t.q_mat, -0.1 * np.eye(2))
    assert np.allclose(t.s_mat, 0.5 * np.eye(2))
    assert np.allclose(t.r_mat, -0.2 * np.eye(2))


def test_conic_from_bounds():
    case = SpecialCase.conic(a=-1.0, b=3.0)
    assert case.conic_center_radius() == (1.0, 2.0)
    t = make_special(case, 1)
    assert (t.q_mat[0, 0], t.s_mat[0, 0], t.r_mat[0, 0]) == (-1.0, 1.0, 3.0)


def test_classify_examples():
    assert classify(QsrTriple(np.zeros((2, 2)), 0.5 * np.eye(2), np.zeros((2, 2)))).kind is Kind.PASSIVE
    l2 = classify(QsrTriple(-np.eye(2), np.zeros((2, 2)), 4 * np.eye(2)))
    assert l2.kind is Kind.FINITE_L2 and l2.gamma == pytest.approx(2.0)
    wrong_sign = QsrTriple(-0.1 * np.eye(2), 0.5 * np.eye(2), 0.2 * np.eye(2))
    assert classify(wrong_sign).kind is Kind.GENERAL


def test_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        make_special(SpecialCase.isp(-1.0), 2)
    with pytest.raises(InvalidParameterError):
        make_special(SpecialCase.finite_l2(0.0), 2)
    with pytest.raises(InvalidParameterError):
        QsrTriple(np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        QsrTriple(np.zeros((2, 2)), np.zeros((3, 2)), np.zeros((2, 2)))


def test_symmetrizes_small_asymmetry():
    q = np.array([[-1.0, 1e-12], [0.0, -1.0]])
    t = QsrTriple(q, np.zeros((2, 1)), np.zeros((1, 1)))
    assert np.array_equal(t.q_mat, t.q_mat.T)
    assert t.asymmetry > 0


@st.composite
def special_cases(draw):
    kind = draw(st.sampled_from([k for k in Kind if k is not Kind.GENERAL]))
    if kind is Kind.PASSIVE:
        return SpecialCase.passive()
    if kind is Kind.ISP:
        return SpecialCase.isp(draw(pos))
    if kind is Kind.OSP:
        return SpecialCase.osp(draw(pos))
    if kind is Kind.VSP:
        return SpecialCase.vsp(eps=draw(pos), delta=draw(pos))
    if kind is Kind.FINITE_L2:
        return SpecialCase.finite_l2(draw(pos))
    c = draw(st.floats(-5.0, 5.0).filter(lambda v: abs(v) > 1e-3 and abs(abs(v) - 0.5) > 1e-3))
    return SpecialCase.conic(c=c, r=draw(pos))


@given(special_cases(), st.integers(1, 4))
def test_make_classify_round_trip(case, n):
    triple = make_special(case, n)
    back = classify(triple)
    assert make_special(back, n).allclose(triple, atol=1e-9)


def _signal(grid, fn):
    return SampledSignal.from_function(grid, fn)


def test_supply_integral_examples():
    grid = np.linspace(0.0, 1.0, 101)
    one = _signal(grid, lambda t: 1.0)
    assert supply_integral(one, one, make_special(SpecialCase.passive(), 1), 1.0) == pytest.approx(1.0)
    zero = _signal(grid, lambda t: 0.0)
    assert supply_integral(one, zero, make_special(SpecialCase.finite_l2(2.0), 1), 1.0) == pytest.approx(4.0)
    ramp = _signal(grid, lambda t: t)
    assert supply_integral(one, ramp, make_special(SpecialCase.passive(), 1), 1.0) == pytest.approx(0.5, abs=1e-14)


def _random_triple(rng, n_y, n_u):
    q = rng.standard_normal((n_y, n_y))
    r = rng.standard_normal((n_u, n_u))
    return QsrTriple(q + q.T, rng.standard_normal((n_y, n_u)), r + r.T)


@given(st.integers(0, 2**32 - 1))
def test_supply_linear_and_additive(seed):
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 2.0, 81)
    u = SampledSignal(grid, rng.standard_normal((81, 2)))
    y = SampledSignal(grid, rng.standard_normal((81, 3)))
    t1, t2 = _random_triple(rng, 3, 2), _random_triple(rng, 3, 2)
    a, b = rng.uniform(-2, 2, 2)
    combo = QsrTriple(a * t1.q_mat + b * t2.q_mat, a * t1.s_mat + b * t2.s_mat, a * t1.r_mat + b * t2.r_mat)
    lhs = supply_integral(u, y, combo, 2.0)
    rhs = a * supply_integral(u, y, t1, 2.0) + b * supply_integral(u, y, t2, 2.0)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
    # additivity over [0, 1] and [1, 2]
    cum = cumulative_supply(u, y, t1)
    first = supply_integral(u, y, t1, 1.0)
    assert cum[-1] == pytest.approx(first + (cum[-1] - cum[40]), rel=1e-10, abs=1e-12)
    assert first == pytest.approx(cum[40], rel=1e-10, abs=1e-12)


def test_supply_refinement_order():
    triple = make_special(SpecialCase.vsp(eps=0.3, delta=0.2), 1)
    exact_fn = lambda n: supply_integral(
        _signal(np.linspace(0, 1, n + 1), np.sin), _signal(np.linspace(0, 1, n + 1), lambda t: np.cos(3 * t)), triple, 1.0
    )
    ref = exact_fn(2**14)
    errs = [abs(exact_fn(n) - ref) for n in (16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)


def test_signal_validation():
    with pytest.raises(DimensionError):
        SampledSignal(np.array([0.0, 0.0]), np.zeros(2))
    grid = np.linspace(0, 1, 3)
    with pytest.raises(DimensionError):
        supply_integral(SampledSignal(grid, np.zeros(3)), SampledSignal(grid, np.zeros(3)), make_special(SpecialCase.passive(), 2), 1.0)
