"""Scheduling-matrix choices for the manipulator experiment."""

from __future__ import annotations

import numpy as np

from ..scheduling import SchedulingFamily
from .trajectory import scheduling_signals

# SVD factors of S_c = B_hat^T / 2 as printed
SC_U = np.eye(2)
SC_SIGMA1 = 0.5 * np.eye(2)
SC_V = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def z_bar(t):
    """The three 3x3 design matrices Z_bar_i(t)."""
    s1, s2, s3 = scheduling_signals(t)
    z1 = np.array([[s1, -0.5 * s1, 0.0], [0.0, 0.0, 0.0], [s3, s2, s1]])
    z2 = np.diag([s1 + s2, s2 + s3, s2])
    z3 = np.array([[s3, 0.0, 0.0], [s1, s3, 0.0], [0.0, 0.0, s2 + s3]])
    return z1, z2, z3


def matrix_schedule(t):
    """(phi_u (3, 3, 3), phi_y (3, 2, 2)) for the matrix-scheduled bank."""
    zs = z_bar(t)
    phi_u = np.array([SC_V @ z @ SC_V.T for z in zs])
    phi_y = np.array([SC_U @ z[:2, :2].T @ SC_U.T for z in zs])
    return phi_u, phi_y


def scalar_schedule(t):
    s = np.asarray(scheduling_signals(t))
    return s[:, None, None] * np.eye(3), s[:, None, None] * np.eye(2)


def unit_schedule(t, n=1):
    return np.broadcast_to(np.eye(3), (n, 3, 3)), np.broadcast_to(np.eye(2), (n, 2, 2))


def families_from_schedule(schedule, grid) -> list[SchedulingFamily]:
    grid = np.asarray(grid, dtype=float)
    samples = [schedule(t) for t in grid]
    n = samples[0][0].shape[0]
    return [
        SchedulingFamily(
            i + 1,
            grid,
            np.array([s[0][i] for s in samples]),
            np.array([s[1][i] for s in samples]),
        )
        for i in range(n)
    ]


def example_families(grid) -> list[SchedulingFamily]:
    """Matrix-scheduled bank built from the Z_bar design matrices."""
    return families_from_schedule(matrix_schedule, grid)


def scalar_families(grid) -> list[SchedulingFamily]:
    return families_from_schedule(scalar_schedule, grid)
