"""Observer-form QSR-dissipative subcontrollers for the prewrapped manipulator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .certification import (
    ControllerCertificate,
    LtiSystem,
    certify_controller,
    solve_are,
    spectral_abscissa,
)
from .composition import CompositionReport, compose_theorem2
from .errors import InfeasibleError, QsrError, SolverError
from .plant import B_HAT, PlantModel
from .qsr_core import QsrTriple
from .robot_sim.dynamics import dynamics_for

DEFAULT_POINTS_DEG = ((0.0, 160.0, -90.0), (0.0, 45.0, 45.0), (0.0, -90.0, 160.0))


@dataclass(frozen=True)
class LqrWeights:
    q_w: np.ndarray = field(default_factory=lambda: np.diag(np.array([15.0, 15.0, 15.0, 10.0, 10.0, 10.0]) ** -2.0))
    r_w: np.ndarray = field(default_factory=lambda: np.diag(np.array([25.0, 25.0]) ** -2.0))

    def __post_init__(self):
        object.__setattr__(self, "q_w", np.asarray(self.q_w, dtype=float))
        object.__setattr__(self, "r_w", np.asarray(self.r_w, dtype=float))

    @classmethod
    def bryson(cls, state_max, input_max):
        """Diagonal weights 1 / max^2 per entry."""
        state_max = np.asarray(state_max, dtype=float)
        input_max = np.asarray(input_max, dtype=float)
        return cls(np.diag(state_max**-2.0), np.diag(input_max**-2.0))


@dataclass(frozen=True)
class Subcontroller:
    index: int
    q_bar: np.ndarray  # rad
    plant: LtiSystem  # linearization used for design
    k_gain: np.ndarray
    a_c: np.ndarray
    b_c: np.ndarray
    certificate: ControllerCertificate

    @property
    def c_c(self):
        return self.k_gain

    @property
    def triple(self) -> QsrTriple:
        return self.certificate.triple

    @property
    def realization(self) -> LtiSystem:
        return LtiSystem(self.a_c, self.b_c, self.k_gain, label=f"controller {self.index}")

    @property
    def n_x(self):
        return self.a_c.shape[0]


def plant_triple(model: PlantModel) -> QsrTriple:
    """Supply rate (Q_P, S_P, R_P) = (-D, B_hat / 2, 0) of the prewrapped plant."""
    return QsrTriple(-model.d_mat, 0.5 * B_HAT, np.zeros((2, 2)))


def controller_s() -> np.ndarray:
    return 0.5 * B_HAT.T


def linearize_prewrapped(model: PlantModel, q_bar) -> LtiSystem:
    """Linearization of the prewrapped plant at q_bar, from the measured parameters.

    The input matrix includes B_hat, so B maps the two controller outputs.
    """
    q_bar = np.asarray(q_bar, dtype=float)
    m_bar = dynamics_for(model, use_measured=True).mass(q_bar)
    try:
        chol = linalg.cho_factor(m_bar)
    except linalg.LinAlgError:
        raise SolverError(f"measured mass matrix is singular at q_bar={q_bar.tolist()}") from None
    minv = lambda x: linalg.cho_solve(chol, x)
    zero = np.zeros((3, 3))
    a = np.block([[zero, np.eye(3)], [-minv(model.kp_mat), -minv(model.d_mat)]])
    b = np.vstack([np.zeros((3, 2)), minv(B_HAT)])
    c = np.hstack([zero, np.eye(3)])
    return LtiSystem(a, b, c, np.zeros((3, 2)), label="prewrapped linearization")


def synthesize_controller(model: PlantModel, q_bar, weights: Optional[LqrWeights] = None, index: int = 1) -> Subcontroller:
    weights = weights or LqrWeights()
    lin = linearize_prewrapped(model, q_bar)
    _, k = solve_are(lin.a_mat, lin.b_mat, weights.q_w, weights.r_w)
    a_hat = lin.a_mat - lin.b_mat @ k
    cert = certify_controller(a_hat, k, lin.c_mat, controller_s())
    return Subcontroller(index, np.asarray(q_bar, dtype=float), lin, k, cert.a_c, cert.b_c, cert)


def synthesize_bank(model: PlantModel, points: Sequence, weights: Optional[LqrWeights] = None) -> list[Subcontroller]:
    """One certified subcontroller per linearization point (rad); any failure aborts."""
    if len(points) == 0:
        raise ValueError("no linearization points given")
    bank = []
    for i, q_bar in enumerate(points, start=1):
        try:
            bank.append(synthesize_controller(model, q_bar, weights, index=i))
        except InfeasibleError as exc:
            raise InfeasibleError(f"point {i}: {exc}", best=exc.best) from exc
        except QsrError as exc:
            raise type(exc)(f"point {i}: {exc}") from exc
    return bank


def default_points() -> list[np.ndarray]:
    return [np.deg2rad(p) for p in DEFAULT_POINTS_DEG]


def controller_bank_compose(bank: Sequence[Subcontroller], families) -> CompositionReport:
    return compose_theorem2([c.triple for c in bank], families)


def is_hurwitz(a) -> bool:
    return spectral_abscissa(a) < 0
