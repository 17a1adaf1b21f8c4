"""LMI certification kernel: QSR dissipativity of LTI realizations, feedback
stability of two QSR systems, Lyapunov/Riccati solvers and the controller
certificate search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DimensionError, InfeasibleError, InvalidParameterError, SolverError
from .qsr_core import QsrTriple

SYM_TOL = 1e-10
REL_TOL = 1e-9
# eps is scanned from the most strictly passive end so the first hit is not
# on the feasibility boundary (where P is nearly singular and B_c explodes)
EPS_GRID = np.logspace(1, -3, 13)
BETA_GRID = np.logspace(-4, -1, 7)


def _mat(x, name):
    return np.atleast_2d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class LtiSystem:
    a_mat: np.ndarray
    b_mat: np.ndarray
    c_mat: np.ndarray
    d_mat: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        a = _mat(self.a_mat, "A")
        b = _mat(self.b_mat, "B")
        c = _mat(self.c_mat, "C")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {b.shape}")
        if c.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {c.shape}")
        d = np.zeros((c.shape[0], b.shape[1])) if self.d_mat is None else _mat(self.d_mat, "D")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionError(f"D must be {c.shape[0]}x{b.shape[1]}, got {d.shape}")
        for name, arr in (("a_mat", a), ("b_mat", b), ("c_mat", c), ("d_mat", d)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_x(self):
        return self.a_mat.shape[0]

    @property
    def n_u(self):
        return self.b_mat.shape[1]

    @property
    def n_y(self):
        return self.c_mat.shape[0]


@dataclass(frozen=True)
class StorageCertificate:
    p_mat: np.ndarray
    lmi_residual_max_eig: float
    triple: QsrTriple

    def storage(self, x):
        """V(x) = x^T P x, row-wise for a (T, n_x) array."""
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.p_mat, x)


@dataclass(frozen=True)
class StabilityCertificate:
    rho: float
    block_max_eig: float
    certified: bool
    block: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class ControllerCertificate:
    """Outcome of the reduced-LMI search for an observer-form controller."""

    p_mat: np.ndarray
    q_c: np.ndarray
    eps: float
    beta: float
    b_c: np.ndarray
    a_c: np.ndarray
    lmi_residual_max_eig: float
    triple: QsrTriple
    tried: int

    @property
    def storage(self) -> StorageCertificate:
        return StorageCertificate(self.p_mat, self.lmi_residual_max_eig, self.triple)


def sym_eigvalsh(m, tol=1e-12):
    """Sorted spectrum of a symmetric matrix after enforcing symmetry."""
    m = np.asarray(m, dtype=float)
    scale = max(np.linalg.norm(m), 1.0)
    if np.linalg.norm(m - m.T) > tol * scale * 1e3:
        raise InvalidParameterError("matrix is not symmetric")
    return np.linalg.eigvalsh(0.5 * (m + m.T))


def qsr_blocks(sys: LtiSystem, triple: QsrTriple):
    """Q_hat, S_hat, R_hat of the realization under the given supply rate."""
    if triple.n_y != sys.n_y or triple.n_u != sys.n_u:
        raise DimensionError(
            f"triple (n_y={triple.n_y}, n_u={triple.n_u}) does not match system (n_y={sys.n_y}, n_u={sys.n_u})"
        )
    q, s, r = triple.q_mat, triple.s_mat, triple.r_mat
    c, d = sys.c_mat, sys.d_mat
    q_hat = c.T @ q @ c
    s_hat = c.T @ s + c.T @ q @ d
    ds = d.T @ s
    r_hat = d.T @ q @ d + ds + ds.T + r
    return q_hat, s_hat, r_hat


def dissipativity_residual(sys: LtiSystem, triple: QsrTriple, p_mat) -> tuple[np.ndarray, float]:
    """LMI block whose negative semidefiniteness certifies dissipativity with V = x^T P x."""
    p = _mat(p_mat, "P")
    if p.shape != (sys.n_x, sys.n_x):
        raise DimensionError(f"P must be {sys.n_x}x{sys.n_x}, got {p.shape}")
    if np.max(np.abs(p - p.T)) > SYM_TOL * max(1.0, np.max(np.abs(p))):
        raise InvalidParameterError("P is not symmetric")
    p = 0.5 * (p + p.T)
    q_hat, s_hat, r_hat = qsr_blocks(sys, triple)
    a, b = sys.a_mat, sys.b_mat
    top_left = p @ a + a.T @ p - q_hat
    top_right = p @ b - s_hat
    block = np.block([[top_left, top_right], [top_right.T, -r_hat]])
    block = 0.5 * (block + block.T)
    return block, float(np.linalg.eigvalsh(block)[-1])


def certify_storage(sys, triple, p_mat, tol=1e-7) -> StorageCertificate:
    """Check a candidate P; raise InfeasibleError unless P > 0 and the LMI holds to tol."""
    _, worst = dissipativity_residual(sys, triple, p_mat)
    p = 0.5 * (np.asarray(p_mat) + np.asarray(p_mat).T)
    lam_min = float(np.linalg.eigvalsh(p)[0])
    if lam_min <= 0:
        raise InfeasibleError(f"P is not positive definite (lambda_min = {lam_min:.3e})")
    if worst > tol:
        raise InfeasibleError(f"LMI violated: max eigenvalue {worst:.3e} > {tol:.1e}")
    return StorageCertificate(p, worst, triple)


def stability_block(t1: QsrTriple, t2: QsrTriple, rho: float) -> np.ndarray:
    if t1.n_u != t2.n_y or t2.n_u != t1.n_y:
        raise DimensionError(
            "negative feedback needs n_u1 == n_y2 and n_u2 == n_y1, got "
            f"({t1.n_u}, {t2.n_y}) and ({t2.n_u}, {t1.n_y})"
        )
    off = -rho * t1.s_mat + t2.s_mat.T
    return np.block([[rho * t1.q_mat + t2.r_mat, off], [off.T, rho * t1.r_mat + t2.q_mat]])


def stability_check(t1: QsrTriple, t2: QsrTriple, rho: float = 1.0, tol: float = REL_TOL) -> StabilityCertificate:
    """Asymptotic stability test for the negative feedback interconnection."""
    if not rho > 0:
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    block = stability_block(t1, t2, rho)
    worst = float(np.linalg.eigvalsh(0.5 * (block + block.T))[-1])
    return StabilityCertificate(float(rho), worst, worst < -tol, block)


def spectral_abscissa(a) -> float:
    return float(np.max(np.linalg.eigvals(np.atleast_2d(a)).real))


def solve_lyapunov(a_mat, m_mat) -> np.ndarray:
    """P with P A + A^T P = M for Hurwitz A.

    Bartels-Stewart on the complex Schur form A = Z T Z^H: the transformed
    equation Y T + T^H Y = Z^H M Z is solved one column at a time by triangular
    solves.
    """
    a = _mat(a_mat, "A")
    m = _mat(m_mat, "M")
    n = a.shape[0]
    if a.shape != (n, n) or m.shape != (n, n):
        raise DimensionError(f"A and M must be {n}x{n}, got {a.shape} and {m.shape}")
    m = 0.5 * (m + m.T)
    alpha = spectral_abscissa(a)
    if not alpha < 0:
        raise SolverError(f"A is not Hurwitz (spectral abscissa {alpha:.3e})")
    t, z = linalg.schur(a.astype(complex), output="complex")
    f = z.conj().T @ m @ z
    y = np.zeros((n, n), dtype=complex)
    for j in range(n):
        rhs = f[:, j] - y[:, :j] @ t[:j, j]
        shifted = t + np.conj(t[j, j]) * np.eye(n)
        y[:, j] = linalg.solve_triangular(shifted, rhs, trans="C", lower=False)
    p = (z @ y @ z.conj().T).real
    return 0.5 * (p + p.T)


def lyapunov_residual(a, p, m) -> float:
    """||P A + A^T P - M|| scaled by ||A|| ||P|| + ||M||."""
    a, p, m = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (a, p, m))
    res = np.linalg.norm(p @ a + a.T @ p - m)
    return float(res / (np.linalg.norm(a) * np.linalg.norm(p) + np.linalg.norm(m) + 1e-300))


def are_residual(a, b, q_w, r_w, p) -> float:
    a, b, q_w, r_w, p = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (a, b, q_w, r_w, p))
    quad = p @ b @ np.linalg.solve(r_w, b.T @ p)
    res = a.T @ p + p @ a - quad + q_w
    scale = 2 * np.linalg.norm(a) * np.linalg.norm(p) + np.linalg.norm(quad) + np.linalg.norm(q_w)
    return float(np.linalg.norm(res) / (scale + 1e-300))


def solve_are(a, b, q_w, r_w, refine: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Stabilizing solution of A^T P + P A - P B R^{-1} B^T P + Q = 0 and K = R^{-1} B^T P.

    Uses the stable invariant subspace of the Hamiltonian from an ordered real
    Schur form, followed by one Newton (Kleinman) correction.
    """
    a = _mat(a, "A")
    b = _mat(b, "B")
    q_w = _mat(q_w, "Q")
    r_w = _mat(r_w, "R")
    n, m = b.shape
    if a.shape != (n, n) or q_w.shape != (n, n) or r_w.shape != (m, m):
        raise DimensionError("inconsistent ARE dimensions")
    r_w = 0.5 * (r_w + r_w.T)
    q_w = 0.5 * (q_w + q_w.T)
    try:
        chol = linalg.cho_factor(r_w)
    except linalg.LinAlgError:
        raise InvalidParameterError("R must be positive definite") from None
    if np.linalg.eigvalsh(q_w)[0] < -1e-12 * max(1.0, np.linalg.norm(q_w)):
        raise InvalidParameterError("Q must be positive semidefinite")
    g = b @ linalg.cho_solve(chol, b.T)
    ham = np.block([[a, -g], [-q_w, -a.T]])
    _, u, sdim = linalg.schur(ham, output="real", sort="lhp")
    if sdim != n:
        raise SolverError(
            f"stable subspace has dimension {sdim}, expected {n}; (A, B) not stabilizable or Q not detectable"
        )
    u11, u21 = u[:n, :n], u[n:, :n]
    if np.linalg.cond(u11) > 1e12:
        raise SolverError("U11 is singular; no stabilizing solution")
    p = linalg.solve(u11.T, u21.T).T
    p = 0.5 * (p + p.T)
    k = linalg.cho_solve(chol, b.T @ p)
    if refine:
        a_cl = a - b @ k
        if spectral_abscissa(a_cl) < 0:
            p_new = solve_lyapunov(a_cl, -(q_w + k.T @ r_w @ k))
            if are_residual(a, b, q_w, r_w, p_new) <= are_residual(a, b, q_w, r_w, p):
                p = p_new
                k = linalg.cho_solve(chol, b.T @ p)
    if spectral_abscissa(a - b @ k) >= 0:
        raise SolverError("closed loop A - B K is not Hurwitz")
    return p, k


def certify_controller(
    a_hat,
    k_gain,
    c_mat,
    s_c,
    eps_grid=EPS_GRID,
    beta_grid=BETA_GRID,
    tol: float = 1e-7,
) -> ControllerCertificate:
    """Search Q_c = -eps I over a grid so the observer-form controller is QSR-dissipative.

    For each (eps, beta), in grid order with eps outermost, P solves
    P A_hat + A_hat^T P = S_hat C + C^T S_hat^T - eps K^T K - beta I with
    S_hat = K^T S_c. The first P > 0 wins and gives B_c = P^{-1} S_hat.
    """
    a_hat = _mat(a_hat, "A_hat")
    k = _mat(k_gain, "K")
    c = _mat(c_mat, "C")
    s_c = _mat(s_c, "S_c")
    n = a_hat.shape[0]
    n_out, n_in = s_c.shape
    if k.shape != (n_out, n) or c.shape != (n_in, n):
        raise DimensionError(
            f"expected K {n_out}x{n} and C {n_in}x{n}, got {k.shape} and {c.shape}"
        )
    alpha = spectral_abscissa(a_hat)
    if not alpha < 0:
        raise SolverError(f"A_hat is not Hurwitz (spectral abscissa {alpha:.3e})")
    s_hat = k.T @ s_c
    cross = s_hat @ c + c.T @ s_hat.T
    ktk = k.T @ k
    best = -np.inf
    tried = 0
    for eps in eps_grid:
        for beta in beta_grid:
            tried += 1
            p = solve_lyapunov(a_hat, cross - eps * ktk - beta * np.eye(n))
            lam = np.linalg.eigvalsh(p)
            rel = lam[0] / max(lam[-1], 1e-300)
            best = max(best, float(lam[0]))
            if lam[0] <= 0 or rel <= REL_TOL:
                continue
            b_c = linalg.solve(p, s_hat, assume_a="pos")
            a_c = a_hat - b_c @ c
            q_c = -float(eps) * np.eye(n_out)
            triple = QsrTriple(q_c, s_c, np.zeros((n_in, n_in)))
            sys = LtiSystem(a_c, b_c, k)
            _, worst = dissipativity_residual(sys, triple, p)
            if worst > tol:
                continue
            return ControllerCertificate(p, q_c, float(eps), float(beta), b_c, a_c, worst, triple, tried)
    raise InfeasibleError(
        f"no feasible (eps, beta) among {tried} grid points; best lambda_min(P) = {best:.3e}", best=best
    )
