"""Rigid-body dynamics of a planar serial chain of three uniform slender rods.

Each link has its center of mass at mid-length and inertia m L^2 / 12 about it.
With absolute link angles phi = T q (T lower triangular ones) the kinetic
energy gives M_abs[a, b] = W[a, b] cos(phi_a - phi_b) + I_a delta_ab and
M(q) = T^T M_abs T.
"""

from __future__ import annotations

import numpy as np

from ..plant import PlantModel

_T = np.tril(np.ones((3, 3)))
# _SEL[j, a] = 1 if link a's absolute angle moves with joint j
_SEL = (np.arange(3)[None, :] >= np.arange(3)[:, None]).astype(float)


class ChainDynamics:
    """Precomputed coefficients for fixed link lengths and masses."""

    def __init__(self, lengths, masses):
        lengths = np.asarray(lengths, dtype=float)
        masses = np.asarray(masses, dtype=float)
        n = lengths.size
        lc = 0.5 * lengths
        w = np.zeros((n, n))
        for k in range(n):
            d = lengths.copy()
            d[k] = lc[k]
            d[k + 1:] = 0.0
            w += masses[k] * np.outer(d, d)
        self.w = w
        self.inertia = masses * lengths**2 / 12.0
        self.lengths = lengths
        self.masses = masses

    def _angles(self, q):
        phi = np.cumsum(q)
        return phi[:, None] - phi[None, :]

    def mass(self, q):
        diff = self._angles(q)
        m_abs = self.w * np.cos(diff) + np.diag(self.inertia)
        return _T.T @ m_abs @ _T

    def mass_partials(self, q):
        """dM[j] = dM/dq_j, shape (3, 3, 3)."""
        diff = self._angles(q)
        ws = -self.w * np.sin(diff)
        # d/dq_j of cos(phi_a - phi_b) -> -sin(.) * (sel_ja - sel_jb)
        sign = _SEL[:, :, None] - _SEL[:, None, :]
        d_abs = ws[None, :, :] * sign
        return np.einsum("ai,jab,bk->jik", _T, d_abs, _T)

    def mass_rate(self, q, qd):
        return np.einsum("jik,j->ik", self.mass_partials(q), qd)

    def forces(self, q, qd):
        """f_non = -C(q, qd) qd from the Christoffel symbols of M."""
        dm = self.mass_partials(q)
        m_dot = np.einsum("jik,j->ik", dm, qd)
        grad = np.einsum("kij,i,j->k", dm, qd, qd)
        return -(m_dot @ qd - 0.5 * grad)

    def mass_and_forces(self, q, qd):
        diff = self._angles(q)
        cosd, sind = np.cos(diff), np.sin(diff)
        m_abs = self.w * cosd + np.diag(self.inertia)
        mass = _T.T @ m_abs @ _T
        # work in absolute rates: with phid = T qd the Coriolis term of M_abs is
        # w_ab sin(phi_a - phi_b) phid_b^2, mapped back by T^T
        phid = _T @ qd
        f_abs = -(self.w * sind) @ (phid * phid)
        return mass, _T.T @ f_abs


def dynamics_for(model: PlantModel, use_measured: bool = False) -> ChainDynamics:
    return ChainDynamics(*model.links(use_measured))


def mass_matrix(model: PlantModel, q, use_measured: bool = False) -> np.ndarray:
    return dynamics_for(model, use_measured).mass(np.asarray(q, dtype=float))


def mass_matrix_partials(model: PlantModel, q, use_measured: bool = False) -> np.ndarray:
    return dynamics_for(model, use_measured).mass_partials(np.asarray(q, dtype=float))


def nonlinear_forces(model: PlantModel, q, q_dot, use_measured: bool = False) -> np.ndarray:
    return dynamics_for(model, use_measured).forces(np.asarray(q, dtype=float), np.asarray(q_dot, dtype=float))
