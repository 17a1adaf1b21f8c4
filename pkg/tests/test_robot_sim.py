import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsrsched.errors import InvalidParameterError, SimulationDiverged
from qsrsched.plant import B_HAT, PlantModel
from qsrsched.robot_sim import (
    ChainDynamics,
    ControllerBank,
    Waypoints,
    dynamics_for,
    example_families,
    quintic_trajectory,
    rms,
    scheduling_signals,
    simulate_closed_loop,
    z_bar,
)
from qsrsched.scheduling import activity, uniform_grid, verify_pseudo_commute

angles = st.lists(st.floats(-np.pi, np.pi, allow_nan=False), min_size=3, max_size=3).map(np.array)
rates = st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3).map(np.array)


@given(angles)
def test_mass_matrix_symmetric_pd(q):
    m = dynamics_for(PlantModel()).mass(q)
    assert np.allclose(m, m.T, atol=1e-14)
    assert np.linalg.eigvalsh(m)[0] > 0


def test_single_link_inertia():
    dyn = ChainDynamics([1.1, 0.6, 0.5], [2.0, 0.0, 0.0])
    assert dyn.mass(np.array([0.3, -1.0, 2.0]))[0, 0] == pytest.approx(2.0 * 1.1**2 / 3)


@given(angles)
def test_mass_partials_match_finite_differences(q):
    dyn = dynamics_for(PlantModel())
    dm = dyn.mass_partials(q)
    assert np.allclose(dm[0], 0.0, atol=1e-14)
    h = 1e-6
    for j in range(3):
        dq = np.zeros(3)
        dq[j] = h
        fd = (dyn.mass(q + dq) - dyn.mass(q - dq)) / (2 * h)
        assert np.allclose(dm[j], fd, atol=1e-8)


@given(angles, rates, st.floats(-3, 3, allow_nan=False))
def test_nonlinear_forces(q, qd, c):
    dyn = dynamics_for(PlantModel())
    _, f0 = dyn.mass_and_forces(q, np.zeros(3))
    assert np.allclose(f0, 0.0)
    _, f1 = dyn.mass_and_forces(q, qd)
    _, fc = dyn.mass_and_forces(q, c * qd)
    assert np.allclose(fc, c**2 * f1, atol=1e-10)
    # the closed-form absolute-angle version agrees with the Christoffel route
    assert np.allclose(f1, dyn.forces(q, qd), atol=1e-10)
    # M_dot - 2C is skew: qd^T (M_dot qd / 2 + f_non) = 0
    assert qd @ (0.5 * dyn.mass_rate(q, qd) @ qd + f1) == pytest.approx(0.0, abs=1e-9)


def test_trajectory_waypoints():
    wp = Waypoints.default()
    for t, row in zip(wp.times, wp.angles):
        th, thd = quintic_trajectory(wp, t)
        assert np.allclose(th, row) and np.allclose(thd, 0.0)
    th, _ = quintic_trajectory(wp, 2.5)
    assert np.allclose(np.rad2deg(th), [0.0, 102.5, -22.5])
    ts = np.linspace(2.0, 3.0, 2001)
    mean = np.mean([quintic_trajectory(wp, t)[0] for t in ts], axis=0)
    assert np.allclose(np.rad2deg(mean), [0.0, 102.5, -22.5], atol=1e-6)
    th, thd = quintic_trajectory(wp, 50.0)
    assert np.allclose(th, wp.angles[-1]) and np.allclose(thd, 0.0)


def test_trajectory_rate_is_derivative():
    wp = Waypoints.default()
    h = 1e-6
    for t in (2.3, 7.5, 8.9):
        fd = (quintic_trajectory(wp, t + h)[0] - quintic_trajectory(wp, t - h)[0]) / (2 * h)
        assert np.allclose(quintic_trajectory(wp, t)[1], fd, atol=1e-6)


def test_waypoints_validation():
    with pytest.raises(InvalidParameterError):
        Waypoints([0.0, 0.0], np.zeros((2, 3)))


def test_signal_values_and_continuity():
    assert scheduling_signals(0.0) == pytest.approx((1.0, 0.0, 0.0))
    assert scheduling_signals(5.0) == pytest.approx((0.0, 1.0, 0.0))
    assert scheduling_signals(12.0) == pytest.approx((0.0, 0.0, 1.0))
    for t in (1.0, 4.0, 7.0, 9.0):
        lo = np.array(scheduling_signals(t - 1e-9))
        hi = np.array(scheduling_signals(t + 1e-9))
        assert np.allclose(lo, hi, atol=1e-7)
    for t in np.linspace(0, 12, 241):
        s = np.array(scheduling_signals(t))
        assert np.all((s >= 0) & (s <= 1))


def test_example_families(manipulator_bank):
    grid = uniform_grid(12.0, 1e-2)
    fams = example_families(grid)
    s_c = manipulator_bank[0].triple.s_mat
    for fam in fams:
        ok, worst = verify_pseudo_commute(fam, s_c, tol=1e-12)
        assert ok, worst
    z1 = np.array([z_bar(t)[0] for t in grid])
    assert np.all(np.linalg.matrix_rank(z1) < 3)
    assert activity(fams, "y").active


def test_rms_oracles():
    t = np.linspace(0.0, 4 * np.pi, 40001)
    assert rms(np.sin(t)[:, None], t)[0] == pytest.approx(1 / np.sqrt(2), rel=1e-6)
    assert np.all(rms(np.zeros((t.size, 3)), t) == 0.0)


def test_rk4_order():
    model = PlantModel()
    ends = [
        simulate_closed_loop(model, horizon=0.4, dt=dt, q0=[0.3, 1.0, -0.5]).q[-1]
        for dt in (0.02, 0.01, 0.005)
    ]
    order = np.log2(np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2]))
    assert order >= 3.5


def test_prewrapped_plant_is_passive():
    rng = np.random.default_rng(3)
    amp, freq = rng.normal(size=(2, 2)), rng.uniform(0.5, 3.0, size=2)
    u = lambda t, q, qd: amp[:, 0] * np.sin(freq * t) + amp[:, 1]
    hold = Waypoints([0.0], np.deg2rad([[0.0, 45.0, 45.0]]))
    res = simulate_closed_loop(PlantModel(), waypoints=hold, horizon=3.0, dt=2e-3, u_override=u)
    inflow = np.concatenate([[0.0], np.cumsum(np.diff(res.t) * 0.5 * (
        np.einsum("ti,ij,tj->t", res.q_dot, B_HAT, res.u_bar)[1:]
        + np.einsum("ti,ij,tj->t", res.q_dot, B_HAT, res.u_bar)[:-1]))])
    gain = res.storage - res.storage[0]
    assert np.allclose(gain, res.supply, atol=1e-7)
    assert np.all(gain <= inflow + 1e-4)


def test_regulation_to_constant_reference(manipulator_bank):
    hold = Waypoints([0.0], np.deg2rad([[0.0, 45.0, 45.0]]))
    res = simulate_closed_loop(
        PlantModel(), manipulator_bank[2], waypoints=hold, horizon=20.0, dt=1e-2,
        q0=np.deg2rad([5.0, 40.0, 50.0]), record_every=100,
    )
    assert np.linalg.norm(res.e[-1]) < 1e-3


def test_bank_from_subcontrollers(manipulator_bank):
    bank = ControllerBank.from_subcontrollers(manipulator_bank)
    assert (bank.n, bank.n_x) == (3, 6)
    assert bank.k.shape == (3, 2, 6) and bank.b.shape == (3, 6, 3)


def test_divergence_detected():
    with pytest.raises(SimulationDiverged):
        simulate_closed_loop(PlantModel(), horizon=5.0, dt=1e-2, u_override=lambda t, q, qd: np.full(2, 1e9))


def test_bad_schedule_shape(manipulator_bank):
    with pytest.raises(InvalidParameterError):
        simulate_closed_loop(
            PlantModel(), manipulator_bank, schedule=lambda t: (np.zeros((2, 3, 3)), np.zeros((2, 2, 2))),
            horizon=0.1, dt=1e-2,
        )
