"""Three-link planar manipulator parameters (true and measured)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError

B_HAT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
B_HAT.setflags(write=False)


def _vec3(x, name, allow_zero=False):
    v = np.asarray(x, dtype=float).ravel()
    if v.shape != (3,):
        raise InvalidParameterError(f"{name} must have 3 entries, got {v.size}")
    bad = v < 0 if allow_zero else v <= 0
    if not np.all(np.isfinite(v)) or np.any(bad):
        kind = "non-negative" if allow_zero else "positive"
        raise InvalidParameterError(f"{name} entries must be {kind}, got {v.tolist()}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class PlantModel:
    lengths: np.ndarray = field(default_factory=lambda: np.array([1.10, 0.60, 0.50]))
    lengths_measured: np.ndarray = field(default_factory=lambda: np.array([1.21, 0.54, 0.55]))
    masses: np.ndarray = field(default_factory=lambda: np.array([2.00, 0.90, 0.30]))
    masses_measured: np.ndarray = field(default_factory=lambda: np.array([2.40, 0.72, 0.36]))
    damping: np.ndarray = field(default_factory=lambda: np.array([5.00, 2.50, 2.50]))
    kp: np.ndarray = field(default_factory=lambda: np.array([5.0, 35.0, 35.0]))

    def __post_init__(self):
        for name in ("lengths", "lengths_measured", "masses", "masses_measured", "damping", "kp"):
            # damping and prewrap gains may vanish (conservative chain)
            object.__setattr__(self, name, _vec3(getattr(self, name), name, name in ("damping", "kp")))

    @property
    def d_mat(self):
        return np.diag(self.damping)

    @property
    def kp_mat(self):
        return np.diag(self.kp)

    @property
    def b_hat(self):
        return B_HAT

    def links(self, use_measured: bool = False):
        """(lengths, masses) for either the true or the measured model."""
        if use_measured:
            return self.lengths_measured, self.masses_measured
        return self.lengths, self.masses

    def with_(self, **kw) -> "PlantModel":
        return replace(self, **kw)
