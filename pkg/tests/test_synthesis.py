import numpy as np
import pytest
from scipy import linalg as sla

from qsrsched.certification import dissipativity_residual, spectral_abscissa, stability_check
from qsrsched.plant import B_HAT, PlantModel
from qsrsched.robot_sim.dynamics import ChainDynamics
from qsrsched.robot_sim.schedules import example_families, scalar_families, unit_schedule, families_from_schedule
from qsrsched.scheduling import stacked_sigma, uniform_grid
from qsrsched.synthesis import (
    LqrWeights,
    controller_bank_compose,
    linearize_prewrapped,
    default_points,
    plant_triple,
    synthesize_bank,
    synthesize_controller,
)

GRID = uniform_grid(12.0, 1e-2)


def test_default_weights():
    w = LqrWeights()
    assert np.allclose(np.diag(w.q_w), [15.0**-2] * 3 + [10.0**-2] * 3)
    assert np.allclose(w.r_w, np.diag([25.0**-2] * 2))
    assert np.count_nonzero(w.q_w - np.diag(np.diag(w.q_w))) == 0


def test_linearization_structure():
    model = PlantModel()
    for q in default_points():
        lin = linearize_prewrapped(model, q)
        assert np.array_equal(lin.c_mat, np.hstack([np.zeros((3, 3)), np.eye(3)]))
        assert np.array_equal(lin.d_mat, np.zeros((3, 2)))
        assert spectral_abscissa(lin.a_mat) < 0
        m_bar = ChainDynamics(model.lengths_measured, model.masses_measured).mass(q)
        assert np.allclose(lin.b_mat[3:], np.linalg.solve(m_bar, B_HAT))


def test_linearization_single_link_limit():
    tiny = 1e-9
    model = PlantModel(masses_measured=[2.4, tiny, tiny])
    lin = linearize_prewrapped(model, np.zeros(3))
    expected = -3.0 * model.kp[0] / (2.4 * model.lengths_measured[0] ** 2)
    assert lin.a_mat[3, 0] == pytest.approx(expected, rel=1e-6)


def test_measured_versus_true_parameters():
    model = PlantModel()
    swapped = model.with_(lengths_measured=model.lengths, masses_measured=model.masses)
    q = default_points()[0]
    diff = linearize_prewrapped(model, q).a_mat - linearize_prewrapped(swapped, q).a_mat
    assert np.abs(diff).max() > 1e-3


def test_lqr_gain_matches_scipy():
    model = PlantModel()
    lin = linearize_prewrapped(model, default_points()[2])
    sub = synthesize_controller(model, default_points()[2], index=3)
    w = LqrWeights()
    p = sla.solve_continuous_are(lin.a_mat, lin.b_mat, w.q_w, w.r_w)
    assert np.allclose(sub.k_gain, np.linalg.solve(w.r_w, lin.b_mat.T @ p), rtol=1e-7, atol=1e-10)
    assert spectral_abscissa(lin.a_mat - lin.b_mat @ sub.k_gain) < 0


def test_scalar_reduced_lqr():
    # A = 0, B = 1, Q = R = 1 -> K = 1
    from qsrsched.certification import solve_are

    _, k = solve_are([[0.0]], [[1.0]], np.eye(1), np.eye(1))
    assert k[0, 0] == pytest.approx(1.0)


def test_bank_certified(manipulator_bank):
    assert len(manipulator_bank) == 3
    p_triple = plant_triple(PlantModel())
    for sub in manipulator_bank:
        _, worst = dissipativity_residual(sub.realization, sub.triple, sub.certificate.p_mat)
        assert worst <= 1e-7
        assert np.linalg.eigvalsh(sub.certificate.p_mat)[0] > 0
        assert stability_check(p_triple, sub.triple, 1.0).certified
        assert spectral_abscissa(sub.a_c) < 0
        assert np.array_equal(sub.triple.s_mat, manipulator_bank[0].triple.s_mat)
        assert np.allclose(sub.a_c, sub.plant.a_mat - sub.plant.b_mat @ sub.k_gain - sub.b_c @ sub.plant.c_mat)


def test_bank_compose_matrix(manipulator_bank):
    fams = example_families(GRID)
    rep = controller_bank_compose(manipulator_bank, fams)
    eps_min = min(-np.linalg.eigvalsh(s.triple.q_mat)[-1] for s in manipulator_bank)
    assert rep.eps_composed > 0
    assert rep.eps_composed == pytest.approx(eps_min / stacked_sigma(fams) ** 2)
    assert np.allclose(rep.composed.r_mat, 0.0)


def test_bank_compose_identity_single(manipulator_bank):
    fams = families_from_schedule(lambda t: unit_schedule(t, 1), GRID)
    rep = controller_bank_compose(manipulator_bank[2:], fams)
    assert rep.composed.allclose(manipulator_bank[2].triple, atol=1e-12)


def test_bank_compose_scalar(manipulator_bank):
    fams = scalar_families(GRID)
    rep = controller_bank_compose(manipulator_bank, fams)
    sig = np.array([[f.phi_y[k][0, 0] for f in fams] for k in range(GRID.size)])
    assert rep.eps_composed == pytest.approx(rep.eps_min / np.max(np.sum(sig**2, axis=1)))


def test_empty_points_rejected():
    with pytest.raises(ValueError):
        synthesize_bank(PlantModel(), [])
