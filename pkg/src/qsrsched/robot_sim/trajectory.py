"""Quintic joint-space reference and the quartic scheduling signals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError

# (t [s], joint angles [deg])
DEFAULT_WAYPOINTS = (
    (0.0, (0.0, 160.0, -90.0)),
    (2.0, (0.0, 160.0, -90.0)),
    (3.0, (0.0, 45.0, 45.0)),
    (7.0, (0.0, 45.0, 45.0)),
    (9.0, (0.0, -90.0, 160.0)),
)


@dataclass(frozen=True)
class Waypoints:
    times: np.ndarray  # (K,)
    angles: np.ndarray  # (K, 3) rad

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        angles = np.atleast_2d(np.asarray(self.angles, dtype=float))
        if times.size < 1 or angles.shape[0] != times.size:
            raise InvalidParameterError("need one angle vector per waypoint time")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise InvalidParameterError("waypoint times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "angles", angles)

    @classmethod
    def from_degrees(cls, rows):
        rows = list(rows)
        return cls([r[0] for r in rows], np.deg2rad([r[1] for r in rows]))

    @classmethod
    def default(cls):
        return cls.from_degrees(DEFAULT_WAYPOINTS)


def smoothstep5(eta):
    return eta**3 * (10.0 - 15.0 * eta + 6.0 * eta**2)


def smoothstep5_rate(eta):
    return 30.0 * eta**2 * (1.0 - eta) ** 2


def quintic_trajectory(waypoints: Waypoints, t):
    """(theta_d, theta_d_dot) at time t; held constant outside the waypoint span."""
    times, angles = waypoints.times, waypoints.angles
    if t <= times[0]:
        return angles[0].copy(), np.zeros(angles.shape[1])
    if t >= times[-1]:
        return angles[-1].copy(), np.zeros(angles.shape[1])
    k = int(np.searchsorted(times, t, side="right")) - 1
    span = times[k + 1] - times[k]
    eta = (t - times[k]) / span
    delta = angles[k + 1] - angles[k]
    return angles[k] + smoothstep5(eta) * delta, smoothstep5_rate(eta) * delta / span


def scheduling_signals(t):
    """(s1, s2, s3) at time t >= 0."""
    if t < 1.0:
        s1 = 1.0
    elif t <= 4.0:
        s1 = 1.0 - ((t - 1.0) / 3.0) ** 4
    else:
        s1 = 0.0
    s2 = 1.0 - ((t - 5.0) / 4.0) ** 4 if 1.0 <= t <= 9.0 else 0.0
    if t < 7.0:
        s3 = 0.0
    elif t <= 9.0:
        s3 = 1.0 - ((t - 9.0) / 2.0) ** 4
    else:
        s3 = 1.0
    return s1, s2, s3
