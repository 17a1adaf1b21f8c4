"""QSR supply-rate triples, their named special cases, and sampled signals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, InvalidParameterError

SYMMETRY_REJECT = 1e-8
CLASSIFY_TOL = 1e-9


def symmetrize(m: np.ndarray, name: str = "matrix") -> tuple[np.ndarray, float]:
    """Return ((M + M^T)/2, relative asymmetry residual); reject large asymmetry."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got {m.shape}")
    scale = max(np.linalg.norm(m), 1.0)
    residual = float(np.linalg.norm(m - m.T) / scale)
    if residual > SYMMETRY_REJECT:
        raise InvalidParameterError(f"{name} is not symmetric (relative residual {residual:.3e})")
    return 0.5 * (m + m.T), residual


@dataclass(frozen=True)
class QsrTriple:
    """Supply-rate weights (Q, S, R) for y^T Q y + 2 y^T S u + u^T R u."""

    q_mat: np.ndarray
    s_mat: np.ndarray
    r_mat: np.ndarray
    asymmetry: float = field(default=0.0, compare=False)

    def __post_init__(self):
        q, rq = symmetrize(self.q_mat, "Q")
        r, rr = symmetrize(self.r_mat, "R")
        s = np.atleast_2d(np.asarray(self.s_mat, dtype=float))
        if s.shape != (q.shape[0], r.shape[0]):
            raise DimensionError(
                f"S must be {q.shape[0]}x{r.shape[0]} to match Q and R, got {s.shape}"
            )
        for arr in (q, s, r):
            arr.setflags(write=False)
        object.__setattr__(self, "q_mat", q)
        object.__setattr__(self, "s_mat", s)
        object.__setattr__(self, "r_mat", r)
        object.__setattr__(self, "asymmetry", max(rq, rr))

    @property
    def n_y(self) -> int:
        return self.q_mat.shape[0]

    @property
    def n_u(self) -> int:
        return self.r_mat.shape[0]

    def scaled(self, alpha: float) -> "QsrTriple":
        return QsrTriple(alpha * self.q_mat, alpha * self.s_mat, alpha * self.r_mat)

    def allclose(self, other: "QsrTriple", atol: float = 1e-12) -> bool:
        return (
            self.q_mat.shape == other.q_mat.shape
            and self.r_mat.shape == other.r_mat.shape
            and np.allclose(self.q_mat, other.q_mat, rtol=0, atol=atol)
            and np.allclose(self.s_mat, other.s_mat, rtol=0, atol=atol)
            and np.allclose(self.r_mat, other.r_mat, rtol=0, atol=atol)
        )


class Kind(str, enum.Enum):
    PASSIVE = "passive"
    ISP = "isp"
    OSP = "osp"
    FINITE_L2 = "finite-l2"
    VSP = "vsp"
    CONIC = "conic"
    GENERAL = "general"


@dataclass(frozen=True)
class SpecialCase:
    """A named QSR special case and its scalar parameters.

    Only the parameters relevant to ``kind`` are meaningful. Conic systems may be
    given either by their bounds ``(a, b)`` or by center and radius ``(c, r)``.
    """

    kind: Kind
    delta: Optional[float] = None
    eps: Optional[float] = None
    gamma: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    r: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))

    @classmethod
    def passive(cls):
        return cls(Kind.PASSIVE)

    @classmethod
    def isp(cls, delta):
        return cls(Kind.ISP, delta=delta)

    @classmethod
    def osp(cls, eps):
        return cls(Kind.OSP, eps=eps)

    @classmethod
    def vsp(cls, eps, delta):
        return cls(Kind.VSP, eps=eps, delta=delta)

    @classmethod
    def finite_l2(cls, gamma):
        return cls(Kind.FINITE_L2, gamma=gamma)

    @classmethod
    def conic(cls, *, a=None, b=None, c=None, r=None):
        return cls(Kind.CONIC, a=a, b=b, c=c, r=r)

    def conic_center_radius(self) -> tuple[float, float]:
        """Resolve (c, r) for a conic case, checking consistency with (a, b)."""
        c, r = self.c, self.r
        if self.a is not None and self.b is not None:
            c_ab = 0.5 * (self.a + self.b)
            r2 = c_ab**2 - self.a * self.b
            r_ab = math.sqrt(max(r2, 0.0))
            if c is not None and not math.isclose(c, c_ab, rel_tol=1e-12, abs_tol=1e-12):
                raise InvalidParameterError(f"conic center c={c} inconsistent with (a+b)/2={c_ab}")
            if r is not None and not math.isclose(r, r_ab, rel_tol=1e-12, abs_tol=1e-12):
                raise InvalidParameterError(f"conic radius r={r} inconsistent with sqrt(c^2-ab)={r_ab}")
            c, r = c_ab, r_ab
        if c is None or r is None:
            raise InvalidParameterError("conic case needs (a, b) or (c, r)")
        if not r > 0:
            raise InvalidParameterError(f"conic radius must be positive, got {r}")
        return float(c), float(r)


def _positive(value, name):
    if value is None or not value > 0 or not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value}")
    return float(value)


def make_special(case: SpecialCase, n: int) -> QsrTriple:
    """Build the (Q, S, R) of a special case with n x n identity blocks."""
    if int(n) < 1:
        raise InvalidParameterError(f"dimension must be positive, got {n}")
    eye = np.eye(int(n))
    zero = np.zeros_like(eye)
    kind = case.kind
    if kind is Kind.PASSIVE:
        return QsrTriple(zero, 0.5 * eye, zero)
    if kind is Kind.ISP:
        return QsrTriple(zero, 0.5 * eye, -_positive(case.delta, "delta") * eye)
    if kind is Kind.OSP:
        return QsrTriple(-_positive(case.eps, "eps") * eye, 0.5 * eye, zero)
    if kind is Kind.VSP:
        eps = _positive(case.eps, "eps")
        delta = _positive(case.delta, "delta")
        return QsrTriple(-eps * eye, 0.5 * eye, -delta * eye)
    if kind is Kind.FINITE_L2:
        return QsrTriple(-eye, zero, _positive(case.gamma, "gamma") ** 2 * eye)
    if kind is Kind.CONIC:
        c, r = case.conic_center_radius()
        return QsrTriple(-eye, c * eye, (r * r - c * c) * eye)
    raise InvalidParameterError("the general case has no canonical triple")


def _scalar_of_identity(m: np.ndarray, tol: float) -> Optional[float]:
    """Return alpha if m == alpha*I within tol (square only), else None."""
    if m.shape[0] != m.shape[1]:
        return None
    alpha = float(np.mean(np.diag(m)))
    if np.max(np.abs(m - alpha * np.eye(m.shape[0]))) > tol:
        return None
    return alpha


def classify(triple: QsrTriple, tol: float = CLASSIFY_TOL) -> SpecialCase:
    """Most specific special case matching the triple; GENERAL when none does."""
    general = SpecialCase(Kind.GENERAL)
    if triple.n_u != triple.n_y:
        return general
    q = _scalar_of_identity(triple.q_mat, tol)
    s = _scalar_of_identity(triple.s_mat, tol)
    r = _scalar_of_identity(triple.r_mat, tol)
    if q is None or s is None or r is None:
        return general

    if abs(s - 0.5) <= tol:
        q_zero, r_zero = abs(q) <= tol, abs(r) <= tol
        if q_zero and r_zero:
            return SpecialCase.passive()
        if q < -tol and r < -tol:
            return SpecialCase.vsp(eps=-q, delta=-r)
        if q_zero and r < -tol:
            return SpecialCase.isp(delta=-r)
        if q < -tol and r_zero:
            return SpecialCase.osp(eps=-q)
    if abs(q + 1.0) <= tol:
        if abs(s) <= tol and r > tol:
            return SpecialCase.finite_l2(gamma=math.sqrt(r))
        r2 = r + s * s
        if r2 > tol:
            radius = math.sqrt(r2)
            return SpecialCase.conic(a=s - radius, b=s + radius, c=s, r=radius)
    return general


@dataclass(frozen=True)
class SampledSignal:
    """Vector signal sampled on a strictly increasing time grid.

    ``values`` has shape (len(grid), dim).
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != grid.size:
            raise DimensionError(
                f"values must have shape ({grid.size}, dim), got {values.shape}"
            )
        if grid.size == 0:
            raise DimensionError("empty grid")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise DimensionError("grid must be strictly increasing")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_function(cls, grid, fn) -> "SampledSignal":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.array([np.atleast_1d(fn(t)) for t in grid]))


def supply_density(u: SampledSignal, y: SampledSignal, triple: QsrTriple) -> np.ndarray:
    """Pointwise y^T Q y + 2 y^T S u + u^T R u on the shared grid."""
    if u.grid.shape != y.grid.shape or not np.array_equal(u.grid, y.grid):
        raise DimensionError("u and y must share one grid")
    if u.dim != triple.n_u or y.dim != triple.n_y:
        raise DimensionError(
            f"signal dims (u={u.dim}, y={y.dim}) do not match triple (n_u={triple.n_u}, n_y={triple.n_y})"
        )
    uu, yy = u.values, y.values
    return (
        np.einsum("ti,ij,tj->t", yy, triple.q_mat, yy)
        + 2.0 * np.einsum("ti,ij,tj->t", yy, triple.s_mat, uu)
        + np.einsum("ti,ij,tj->t", uu, triple.r_mat, uu)
    )


def cumulative_supply(u: SampledSignal, y: SampledSignal, triple: QsrTriple) -> np.ndarray:
    """Trapezoidal supply integral from grid[0] to every grid stamp."""
    w = supply_density(u, y, triple)
    out = np.zeros_like(w)
    if w.size > 1:
        out[1:] = np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(u.grid))
    return out


def supply_integral(u: SampledSignal, y: SampledSignal, triple: QsrTriple, T: float) -> float:
    """Trapezoidal approximation of the supply integral over [grid[0], T].

    A final partial interval is handled by linear interpolation of the integrand.
    """
    grid = u.grid
    if T < grid[0] or T > grid[-1] * (1 + 1e-12) + 1e-15:
        raise DimensionError(f"T={T} outside grid span [{grid[0]}, {grid[-1]}]")
    w = supply_density(u, y, triple)
    k = int(np.searchsorted(grid, T, side="right"))
    total = float(np.sum(0.5 * (w[1:k] + w[: k - 1]) * np.diff(grid[:k]))) if k > 1 else 0.0
    if k < grid.size and T > grid[k - 1]:
        h = T - grid[k - 1]
        w_T = w[k - 1] + (w[k] - w[k - 1]) * h / (grid[k] - grid[k - 1])
        total += 0.5 * (w[k - 1] + w_T) * h
    return total
