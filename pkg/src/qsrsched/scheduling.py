"""Scheduling-matrix families: pseudo-commuting construction, activity, and bounds.

A family holds one subsystem's input and output scheduling matrices sampled on a
time grid. All suprema and infima over time are taken over that grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, RankZeroError

RANK_RTOL = 1e-8
NONZERO_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SchedulingFamily:
    index: int
    grid: np.ndarray
    phi_u: np.ndarray  # (T, n_u, n_u)
    phi_y: np.ndarray  # (T, n_y, n_y)

    def __post_init__(self):
        grid = _readonly(np.ravel(self.grid))
        phi_u = _readonly(self.phi_u)
        phi_y = _readonly(self.phi_y)
        if phi_u.ndim == 2:
            phi_u = _readonly(np.broadcast_to(phi_u, (grid.size,) + phi_u.shape))
        if phi_y.ndim == 2:
            phi_y = _readonly(np.broadcast_to(phi_y, (grid.size,) + phi_y.shape))
        if phi_u.ndim != 3 or phi_u.shape[1] != phi_u.shape[2]:
            raise DimensionError(f"phi_u must be (T, n_u, n_u), got {phi_u.shape}")
        if phi_y.ndim != 3 or phi_y.shape[1] != phi_y.shape[2]:
            raise DimensionError(f"phi_y must be (T, n_y, n_y), got {phi_y.shape}")
        if phi_u.shape[0] != grid.size or phi_y.shape[0] != grid.size:
            raise DimensionError("scheduling matrices must have one entry per grid stamp")
        if grid.size == 0:
            raise DimensionError("empty grid")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise DimensionError("grid must be strictly increasing")
        if not (np.all(np.isfinite(phi_u)) and np.all(np.isfinite(phi_y))):
            raise DimensionError("scheduling matrices must be finite (bounded)")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "phi_u", phi_u)
        object.__setattr__(self, "phi_y", phi_y)

    @property
    def n_u(self) -> int:
        return self.phi_u.shape[1]

    @property
    def n_y(self) -> int:
        return self.phi_y.shape[1]

    def phi(self, side: str) -> np.ndarray:
        if side in ("input", "u"):
            return self.phi_u
        if side in ("output", "y"):
            return self.phi_y
        raise ValueError(f"side must be 'input' or 'output', got {side!r}")


@dataclass(frozen=True)
class FactorBlocks:
    """Free design variables of the pseudo-commuting construction, one per grid stamp.

    Shapes (T leading): z11 (rho, rho); z21 (n_u-rho, rho); z22 (n_u-rho, n_u-rho);
    w21 (n_y-rho, rho); w22 (n_y-rho, n_y-rho).
    """

    grid: np.ndarray
    z11: np.ndarray
    z21: np.ndarray
    z22: np.ndarray
    w21: np.ndarray
    w22: np.ndarray

    @classmethod
    def random(cls, rng, grid, n_u, n_y, rho, scale=1.0):
        t = len(grid)
        draw = lambda r, c: scale * rng.standard_normal((t, r, c))
        return cls(
            np.asarray(grid, dtype=float),
            draw(rho, rho),
            draw(n_u - rho, rho),
            draw(n_u - rho, n_u - rho),
            draw(n_y - rho, rho),
            draw(n_y - rho, n_y - rho),
        )


@dataclass(frozen=True)
class SvBounds:
    sigma_bar_u: float
    sigma_bar_y: float
    nu_bar_u: float
    nu_bar_y: float
    full_rank_set: np.ndarray  # (T,) bool, input side
    sigma_u: np.ndarray  # (T,) per-stamp largest singular values
    nu_u: np.ndarray
    sigma_y: np.ndarray
    nu_y: np.ndarray


@dataclass(frozen=True)
class Activity:
    active: bool
    strongly_active: bool
    full_rank: np.ndarray  # (T, N) bool
    nonzero: np.ndarray  # (T, N) bool
    indices: tuple

    def index_sets(self) -> list[frozenset]:
        """F(t) as sets of subsystem indices, one per stamp."""
        idx = np.asarray(self.indices)
        return [frozenset(idx[row].tolist()) for row in self.full_rank]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so the first entry above 1e-12 in magnitude is non-negative."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def svd_reduced(s_mat) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """SVD S = U [[Sigma1, 0], [0, 0]] V^T with Sigma1 the rho x rho nonzero block.

    Left singular vectors (and their paired right vectors) are sign-normalized so
    the first nonzero entry of each column of U is non-negative.
    """
    s_mat = np.atleast_2d(np.asarray(s_mat, dtype=float))
    u, sv, vt = np.linalg.svd(s_mat, full_matrices=True)
    v = vt.T
    tol = max(s_mat.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rho = int(np.sum(sv > tol)) if sv.size else 0
    if rho == 0:
        raise RankZeroError("S is zero; scheduling matrices are unconstrained (use family_from_matrices)")
    u_fixed = _fix_signs(u)
    flips = np.sign(np.sum(u_fixed[:, :rho] * u[:, :rho], axis=0))
    v = v.copy()
    v[:, :rho] *= flips
    v[:, rho:] = _fix_signs(v[:, rho:])
    return u_fixed, np.diag(sv[:rho]), v, rho


def _check_blocks(blocks: FactorBlocks, n_u: int, n_y: int, rho: int):
    t = len(blocks.grid)
    expected = {
        "z11": (t, rho, rho),
        "z21": (t, n_u - rho, rho),
        "z22": (t, n_u - rho, n_u - rho),
        "w21": (t, n_y - rho, rho),
        "w22": (t, n_y - rho, n_y - rho),
    }
    for name, shape in expected.items():
        got = np.shape(getattr(blocks, name))
        if tuple(got) != shape:
            raise DimensionError(f"block {name} must have shape {shape}, got {tuple(got)}")


def build_pseudo_commuting(s_mat, blocks: FactorBlocks, index: int = 1, svd=None) -> SchedulingFamily:
    """Scheduling matrices satisfying Phi_y^T S = S Phi_u at every stamp.

    ``svd`` may supply a precomputed ``(U, Sigma1, V, rho)`` factorization
    (for example a hand-chosen one); otherwise :func:`svd_reduced` is used.
    """
    s_mat = np.atleast_2d(np.asarray(s_mat, dtype=float))
    n_y, n_u = s_mat.shape
    u, sig1, v, rho = svd if svd is not None else svd_reduced(s_mat)
    _check_blocks(blocks, n_u, n_y, rho)
    t = len(blocks.grid)
    sig = np.diag(sig1)
    z11 = np.asarray(blocks.z11, dtype=float)

    inner_u = np.zeros((t, n_u, n_u))
    inner_u[:, :rho, :rho] = z11
    inner_u[:, rho:, :rho] = blocks.z21
    inner_u[:, rho:, rho:] = blocks.z22

    inner_y = np.zeros((t, n_y, n_y))
    # Sigma1^{-1} Z11^T Sigma1 with diagonal Sigma1
    inner_y[:, :rho, :rho] = np.swapaxes(z11, 1, 2) * (sig[None, None, :] / sig[None, :, None])
    inner_y[:, rho:, :rho] = blocks.w21
    inner_y[:, rho:, rho:] = blocks.w22

    phi_u = v @ inner_u @ v.T
    phi_y = u @ inner_y @ u.T
    return SchedulingFamily(index, blocks.grid, phi_u, phi_y)


def family_from_matrices(index, grid, phi_u, phi_y) -> SchedulingFamily:
    """Free construction, used when S = 0 or matrices come from elsewhere."""
    return SchedulingFamily(index, grid, phi_u, phi_y)


def commutation_residuals(family: SchedulingFamily, s_mat) -> np.ndarray:
    s_mat = np.atleast_2d(np.asarray(s_mat, dtype=float))
    if s_mat.shape != (family.n_y, family.n_u):
        raise DimensionError(
            f"S must be {family.n_y}x{family.n_u} for this family, got {s_mat.shape}"
        )
    diff = np.swapaxes(family.phi_y, 1, 2) @ s_mat - s_mat @ family.phi_u
    return np.linalg.norm(diff, ord=2, axis=(1, 2))


def verify_pseudo_commute(family: SchedulingFamily, s_mat, tol: float = 1e-10) -> tuple[bool, float]:
    res = commutation_residuals(family, s_mat)
    worst = float(res.max()) if res.size else 0.0
    return worst <= tol, worst


def _singular_values(stack: np.ndarray) -> np.ndarray:
    """(T, n, n) -> (T, n) singular values, descending."""
    return np.linalg.svd(stack, compute_uv=False)


def _full_rank_mask(sv: np.ndarray) -> np.ndarray:
    floor = RANK_RTOL * np.maximum(sv[:, 0], 1.0)
    return sv[:, -1] > floor


def _check_bank(families: Sequence[SchedulingFamily]):
    if len(families) == 0:
        raise DimensionError("empty scheduling bank")
    grid = families[0].grid
    for fam in families[1:]:
        if fam.grid.shape != grid.shape or not np.array_equal(fam.grid, grid):
            raise DimensionError("all families in a bank must share one grid")
    return grid


def activity(families: Sequence[SchedulingFamily], side: str) -> Activity:
    _check_bank(families)
    full, nonzero = [], []
    for fam in families:
        mats = fam.phi(side)
        nonzero.append(np.max(np.abs(mats), axis=(1, 2)) > NONZERO_TOL)
        full.append(_full_rank_mask(_singular_values(mats)))
    full = np.column_stack(full)
    nonzero = np.column_stack(nonzero)
    return Activity(
        active=bool(np.all(nonzero.any(axis=1))),
        strongly_active=bool(np.all(full.any(axis=1))),
        full_rank=full,
        nonzero=nonzero,
        indices=tuple(f.index for f in families),
    )


def sv_bounds(family: SchedulingFamily) -> SvBounds:
    sv_u = _singular_values(family.phi_u)
    sv_y = _singular_values(family.phi_y)
    return SvBounds(
        sigma_bar_u=float(sv_u[:, 0].max()),
        sigma_bar_y=float(sv_y[:, 0].max()),
        nu_bar_u=float(sv_u[:, -1].min()),
        nu_bar_y=float(sv_y[:, -1].min()),
        full_rank_set=_full_rank_mask(sv_u),
        sigma_u=sv_u[:, 0],
        nu_u=sv_u[:, -1],
        sigma_y=sv_y[:, 0],
        nu_y=sv_y[:, -1],
    )


def stacked_sigma_series(families: Sequence[SchedulingFamily]) -> np.ndarray:
    """Largest singular value of [Phi_y,1(t) ... Phi_y,N(t)] at each stamp."""
    _check_bank(families)
    psi = np.concatenate([f.phi_y for f in families], axis=2)
    return np.linalg.svd(psi, compute_uv=False)[:, 0]


def stacked_sigma(families: Sequence[SchedulingFamily]) -> float:
    return float(stacked_sigma_series(families).max())


def uniform_grid(horizon: float, dt: float, t0: float = 0.0) -> np.ndarray:
    n = int(round((horizon - t0) / dt))
    return t0 + dt * np.arange(n + 1)


def sample_family(index, grid, fn_u, fn_y) -> SchedulingFamily:
    """Sample callables t -> matrix onto the grid."""
    grid = np.asarray(grid, dtype=float)
    return SchedulingFamily(
        index, grid, np.array([fn_u(t) for t in grid]), np.array([fn_y(t) for t in grid])
    )


def scalar_family(index, grid, signal, n_u, n_y) -> SchedulingFamily:
    """Base-case family Phi_u = s(t) I, Phi_y = s(t) I."""
    s = np.asarray([signal(t) for t in grid], dtype=float) if callable(signal) else np.asarray(signal, dtype=float)
    return SchedulingFamily(
        index,
        grid,
        s[:, None, None] * np.eye(n_u),
        s[:, None, None] * np.eye(n_y),
    )
