"""Closed-loop simulation of the prewrapped manipulator under a scheduled controller bank."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, linalg

from ..errors import InvalidParameterError, SimulationDiverged
from ..plant import B_HAT, PlantModel
from .dynamics import dynamics_for
from .schedules import unit_schedule
from .trajectory import Waypoints, quintic_trajectory

DIVERGENCE_NORM = 1e6


@dataclass
class SimResult:
    t: np.ndarray
    q: np.ndarray
    q_dot: np.ndarray
    theta_d: np.ndarray
    theta_d_dot: np.ndarray
    e: np.ndarray
    e_dot: np.ndarray
    u_bar: np.ndarray
    tau: np.ndarray
    storage: np.ndarray
    supply: np.ndarray
    x_c: np.ndarray = field(repr=False, default=None)
    label: str = ""

    def columns(self):
        """Columns in the CSV order."""
        return np.column_stack(
            [self.t, self.q, self.q_dot, self.e, self.tau, self.u_bar, self.storage, self.supply]
        )


@dataclass(frozen=True)
class ControllerBank:
    """Stacked realizations: x_i' = A_i x_i + B_i u_i, y_i = K_i x_i."""

    a: np.ndarray  # (N, n, n)
    b: np.ndarray  # (N, n, 3)
    k: np.ndarray  # (N, 2, n)

    @classmethod
    def from_subcontrollers(cls, subs):
        return cls(
            np.array([s.a_c for s in subs]),
            np.array([s.b_c for s in subs]),
            np.array([s.k_gain for s in subs]),
        )

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def n_x(self):
        return self.a.shape[1]


def _as_bank(controllers) -> Optional[ControllerBank]:
    if controllers is None:
        return None
    if isinstance(controllers, ControllerBank):
        return controllers
    if hasattr(controllers, "a_c"):
        controllers = [controllers]
    return ControllerBank.from_subcontrollers(list(controllers))


def simulate_closed_loop(
    model: PlantModel,
    controllers=None,
    schedule: Optional[Callable] = None,
    waypoints: Optional[Waypoints] = None,
    horizon: float = 12.0,
    dt: float = 1e-3,
    rate_error: bool = True,
    q0=None,
    q_dot0=None,
    u_override: Optional[Callable] = None,
    record_every: int = 1,
    label: str = "",
) -> SimResult:
    """Fixed-step RK4 on the monolithic (plant, controllers, supply) state.

    ``schedule(t)`` returns stacked (phi_u, phi_y); None uses identities.
    ``controllers=None`` leaves u_bar = 0 (or ``u_override(t, q, q_dot)``).
    The plant uses the true link parameters.
    """
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    if not horizon > 0:
        raise InvalidParameterError(f"horizon must be positive, got {horizon}")
    steps = int(round(horizon / dt))
    if steps < 1:
        raise InvalidParameterError("horizon shorter than one step")
    waypoints = waypoints or Waypoints.default()
    bank = _as_bank(controllers)
    n_ctrl = bank.n if bank else 0
    n_xc = bank.n_x if bank else 0
    if schedule is None:
        schedule = lambda t: unit_schedule(t, max(n_ctrl, 1))

    dyn = dynamics_for(model, use_measured=False)
    d_mat, kp_mat = model.d_mat, model.kp_mat

    # everything time-dependent is tabulated on the half-step grid
    half = 0.5 * dt * np.arange(2 * steps + 1)
    ref = [quintic_trajectory(waypoints, t) for t in half]
    th = np.array([r[0] for r in ref])
    thd = np.array([r[1] for r in ref])
    if bank is not None:
        sched = [schedule(t) for t in half]
        phi_u = np.array([np.asarray(s[0]) for s in sched])
        phi_y = np.array([np.asarray(s[1]) for s in sched])
        if phi_u.shape[1:] != (n_ctrl, 3, 3) or phi_y.shape[1:] != (n_ctrl, 2, 2):
            raise InvalidParameterError(
                f"schedule must return ({n_ctrl}, 3, 3) and ({n_ctrl}, 2, 2) stacks, got {phi_u.shape[1:]} and {phi_y.shape[1:]}"
            )
        # fold the schedules into the gains once
        b_sched = np.einsum("nij,hnjk->hnik", bank.b, phi_u)
        k_sched = np.einsum("hnij,njk->hnik", phi_y, bank.k)

    def controller_out(h, xc):
        if bank is None:
            return np.zeros(2)
        return np.einsum("nij,nj->i", k_sched[h], xc)

    def rhs(h, state):
        q, qd = state[0:3], state[3:6]
        e = q - th[h]
        ed = qd - thd[h] if rate_error else qd
        if bank is not None:
            xc = state[6:6 + n_ctrl * n_xc].reshape(n_ctrl, n_xc)
            u_bar = -controller_out(h, xc)
            xc_dot = np.einsum("nij,nj->ni", bank.a, xc) + b_sched[h] @ ed
        else:
            u_bar = u_override(0.5 * dt * h, q, qd) if u_override else np.zeros(2)
            xc_dot = np.zeros((0,))
        mass, f_non = dyn.mass_and_forces(q, qd)
        d_qd = d_mat @ qd
        bu = B_HAT @ u_bar
        qdd = linalg.solve(mass, f_non - d_qd + bu - kp_mat @ e, assume_a="pos")
        w = -qd @ d_qd + qd @ bu
        return np.concatenate([qd, qdd, xc_dot.ravel(), [w]])

    n_state = 6 + n_ctrl * n_xc + 1
    state = np.zeros(n_state)
    state[0:3] = th[0] if q0 is None else np.asarray(q0, dtype=float)
    if q_dot0 is not None:
        state[3:6] = q_dot0

    rec_idx = list(range(0, steps + 1, record_every))
    if rec_idx[-1] != steps:
        rec_idx.append(steps)
    states = np.zeros((len(rec_idx), n_state))
    k_rec = 0
    for k in range(steps + 1):
        if k == rec_idx[k_rec]:
            states[k_rec] = state
            k_rec += 1
            if k_rec == len(rec_idx):
                break
        h = 2 * k
        k1 = rhs(h, state)
        k2 = rhs(h + 1, state + 0.5 * dt * k1)
        k3 = rhs(h + 1, state + 0.5 * dt * k2)
        k4 = rhs(h + 2, state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        norm = float(np.max(np.abs(state)))
        if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
            raise SimulationDiverged((k + 1) * dt, norm)

    idx = np.asarray(rec_idx)
    t = idx * dt
    q, qd = states[:, 0:3], states[:, 3:6]
    th_r, thd_r = th[2 * idx], thd[2 * idx]
    e = q - th_r
    ed = qd - thd_r
    xc = states[:, 6:6 + n_ctrl * n_xc].reshape(len(idx), n_ctrl, n_xc)
    if bank is not None:
        u_bar = -np.einsum("tnij,tnj->ti", k_sched[2 * idx], xc)
    elif u_override is not None:
        u_bar = np.array([u_override(tt, qq, qqd) for tt, qq, qqd in zip(t, q, qd)])
    else:
        u_bar = np.zeros((len(idx), 2))
    tau = u_bar @ B_HAT.T - e @ kp_mat.T
    storage = np.array(
        [0.5 * v @ dyn.mass(p) @ v + 0.5 * err @ kp_mat @ err for p, v, err in zip(q, qd, e)]
    )
    return SimResult(
        t=t, q=q, q_dot=qd, theta_d=th_r, theta_d_dot=thd_r, e=e, e_dot=ed,
        u_bar=u_bar, tau=tau, storage=storage, supply=states[:, -1], x_c=xc, label=label,
    )


def rms(series, t) -> np.ndarray:
    """Time-averaged RMS (trapezoidal) per column."""
    series = np.atleast_2d(np.asarray(series, dtype=float))
    if series.shape[0] != len(t):
        series = series.T
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        return np.sqrt(np.mean(series**2, axis=0))
    return np.sqrt(integrate.trapezoid(series**2, t, axis=0) / (t[-1] - t[0]))


@dataclass(frozen=True)
class RmsMetrics:
    angle_deg: np.ndarray
    rate_deg: np.ndarray


def rms_metrics(result: SimResult) -> RmsMetrics:
    return RmsMetrics(np.rad2deg(rms(result.e, result.t)), np.rad2deg(rms(result.e_dot, result.t)))
