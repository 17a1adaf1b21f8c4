"""Random LMI-certified LTI subsystems and a simulator for scheduled parallel banks.

Used by the soundness checks: a bank of certified subsystems is scheduled by
random pseudo-commuting families, driven from rest, and the composed supply
integral is compared against zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .certification import LtiSystem, StorageCertificate, certify_storage
from .errors import InfeasibleError
from .qsr_core import Kind, QsrTriple, SpecialCase, make_special
from .scheduling import FactorBlocks, SchedulingFamily, build_pseudo_commuting, family_from_matrices


@dataclass(frozen=True)
class CertifiedSystem:
    sys: LtiSystem
    case: SpecialCase
    triple: QsrTriple
    certificate: StorageCertificate


def _spd(rng, n, lo=0.5, hi=2.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q @ np.diag(rng.uniform(lo, hi, n)) @ q.T


def _passive_core(rng, n_x, m):
    """(A, B, C, P, W) with P A + A^T P = -2W and C = 2 B^T P, so P B = C^T / 2."""
    p = _spd(rng, n_x)
    w = _spd(rng, n_x, 0.3, 1.5)
    j = rng.standard_normal((n_x, n_x))
    j = j - j.T
    a = np.linalg.solve(p, j - w)
    b = rng.standard_normal((n_x, m)) / np.sqrt(n_x)
    c = 2.0 * b.T @ p
    return a, b, c, p, w


def random_certified(rng, kind, n_x: int = 3, m: int = 2, tol: float = 1e-9) -> CertifiedSystem:
    """Random square system certified for ``kind`` with V = x^T P x.

    ``kind`` is one of passive, isp, osp, vsp, finite-l2.
    """
    kind = Kind(kind)
    for _ in range(50):
        a, b, c, p, w = _passive_core(rng, n_x, m)
        d = np.zeros((m, m))
        lam_w = float(np.linalg.eigvalsh(w)[0])
        c_norm2 = float(np.linalg.norm(c, 2) ** 2)
        eps_max = 2.0 * lam_w / c_norm2
        if kind is Kind.PASSIVE:
            case = SpecialCase.passive()
        elif kind is Kind.OSP:
            case = SpecialCase.osp(rng.uniform(0.2, 0.8) * eps_max)
        elif kind is Kind.ISP:
            dd = rng.uniform(0.2, 1.0)
            d = dd * np.eye(m)
            case = SpecialCase.isp(rng.uniform(0.2, 0.8) * dd)
        elif kind is Kind.VSP:
            dd = rng.uniform(0.2, 1.0)
            d = dd * np.eye(m)
            eps = rng.uniform(0.1, 0.4) * min(eps_max, 1.0 / dd)
            case = SpecialCase.vsp(eps=eps, delta=rng.uniform(0.1, 0.4) * dd)
        elif kind is Kind.FINITE_L2:
            # OSP with eps has L2 gain 1/eps; storage scales by 2/eps
            eps = rng.uniform(0.2, 0.8) * eps_max
            case = SpecialCase.finite_l2(1.05 / eps)
            p = 2.0 * p / eps
        else:
            raise ValueError(f"unsupported kind {kind}")
        sys = LtiSystem(a, b, c, d)
        triple = make_special(case, m)
        try:
            cert = certify_storage(sys, triple, p, tol=tol)
        except InfeasibleError:
            continue
        return CertifiedSystem(sys, case, triple, cert)
    raise InfeasibleError(f"could not draw a certified {kind.value} system")


@dataclass(frozen=True)
class SmoothBlocks:
    """Time-varying factor blocks Z(t) = Z0 + Z1 sin(w t + phase), per block."""

    base: dict
    amp: dict
    omega: float
    phase: float

    @classmethod
    def random(cls, rng, n_u, n_y, rho, strong=True):
        shapes = {
            "z11": (rho, rho),
            "z21": (n_u - rho, rho),
            "z22": (n_u - rho, n_u - rho),
            "w21": (n_y - rho, rho),
            "w22": (n_y - rho, n_y - rho),
        }
        base = {k: 0.5 * rng.standard_normal(s) for k, s in shapes.items()}
        amp = {k: 0.5 * rng.standard_normal(s) for k, s in shapes.items()}
        if strong:
            # keep the diagonal blocks well conditioned so Phi_u stays full rank
            base["z11"] = base["z11"] * 0.2 + 1.5 * np.eye(rho)
            amp["z11"] = amp["z11"] * 0.3
            base["z22"] = base["z22"] * 0.2 + 1.5 * np.eye(n_u - rho)
            amp["z22"] = amp["z22"] * 0.3
        return cls(base, amp, float(rng.uniform(0.5, 3.0)), float(rng.uniform(0, 2 * np.pi)))

    def sample(self, grid) -> FactorBlocks:
        grid = np.asarray(grid, dtype=float)
        sn = np.sin(self.omega * grid + self.phase)[:, None, None]
        vals = {k: self.base[k][None] + self.amp[k][None] * sn for k in self.base}
        return FactorBlocks(grid, **vals)


def random_family(rng, s_mat, grid, index=1, strong=True) -> SchedulingFamily:
    """Smooth random family pseudo-commuting with s_mat (free construction when S = 0)."""
    s_mat = np.atleast_2d(s_mat)
    n_y, n_u = s_mat.shape
    if not np.any(s_mat):
        grid = np.asarray(grid, dtype=float)
        sn = np.sin(rng.uniform(0.5, 3.0) * grid + rng.uniform(0, 6.3))[:, None, None]
        base_u = 1.5 * np.eye(n_u) + 0.2 * rng.standard_normal((n_u, n_u))
        base_y = 1.5 * np.eye(n_y) + 0.2 * rng.standard_normal((n_y, n_y))
        phi_u = base_u[None] + 0.3 * rng.standard_normal((n_u, n_u))[None] * sn
        phi_y = base_y[None] + 0.3 * rng.standard_normal((n_y, n_y))[None] * sn
        return family_from_matrices(index, grid, phi_u, phi_y)
    rho = np.linalg.matrix_rank(s_mat)
    blocks = SmoothBlocks.random(rng, n_u, n_y, rho, strong).sample(grid)
    return build_pseudo_commuting(s_mat, blocks, index=index)


def simulate_bank(systems: Sequence[LtiSystem], families: Sequence[SchedulingFamily], inputs):
    """RK4 response of the scheduled parallel bank from rest.

    ``families`` must be sampled on the half-step grid t_k = k h / 2 and
    ``inputs`` has shape (batch, 2K+1, n_u) on the same grid. Returns (u, y) on
    the full-step grid, each (batch, K+1, dim).
    """
    inputs = np.asarray(inputs, dtype=float)
    batch, n_half, n_u = inputs.shape
    grid = families[0].grid
    h = 2.0 * (grid[1] - grid[0])
    steps = (n_half - 1) // 2
    xs = [np.zeros((batch, s.n_x)) for s in systems]

    def deriv(k, states):
        u = inputs[:, k, :]
        return [
            st @ s.a_mat.T + (u @ f.phi_u[k].T) @ s.b_mat.T
            for s, f, st in zip(systems, families, states)
        ]

    def output(k, states):
        u = inputs[:, k, :]
        y = 0.0
        for s, f, st in zip(systems, families, states):
            ui = u @ f.phi_u[k].T
            y = y + (st @ s.c_mat.T + ui @ s.d_mat.T) @ f.phi_y[k].T
        return y

    ys = [output(0, xs)]
    for n in range(steps):
        k = 2 * n
        k1 = deriv(k, xs)
        k2 = deriv(k + 1, [x + 0.5 * h * d for x, d in zip(xs, k1)])
        k3 = deriv(k + 1, [x + 0.5 * h * d for x, d in zip(xs, k2)])
        k4 = deriv(k + 2, [x + h * d for x, d in zip(xs, k3)])
        xs = [x + (h / 6.0) * (a + 2 * b + 2 * c + d) for x, a, b, c, d in zip(xs, k1, k2, k3, k4)]
        ys.append(output(k + 2, xs))
    y = np.stack(ys, axis=1)
    return inputs[:, ::2, :], y


def random_inputs(rng, batch, grid, n_u, n_terms=3):
    """Sums of random sinusoids, (batch, len(grid), n_u)."""
    grid = np.asarray(grid, dtype=float)
    out = np.zeros((batch, grid.size, n_u))
    for _ in range(n_terms):
        amp = rng.standard_normal((batch, 1, n_u))
        omega = rng.uniform(0.3, 6.0, (batch, 1, n_u))
        phase = rng.uniform(0, 2 * np.pi, (batch, 1, n_u))
        out += amp * np.sin(omega * grid[None, :, None] + phase)
    return out


def half_grid(horizon, dt):
    n = int(round(horizon / dt))
    return 0.5 * dt * np.arange(2 * n + 1)


def subsample(family: SchedulingFamily) -> SchedulingFamily:
    """Keep every second stamp (half-step grid -> full-step grid)."""
    return SchedulingFamily(family.index, family.grid[::2], family.phi_u[::2], family.phi_y[::2])


THEOREM_KINDS = {"1": ("osp", "vsp", "finite-l2"), "2": ("passive", "isp", "osp", "vsp")}


@dataclass(frozen=True)
class SoundnessResult:
    banks: int
    inputs_per_bank: int
    worst_prefix_supply: dict  # theorem -> min over banks, inputs and prefixes

    @property
    def worst(self) -> float:
        return min(self.worst_prefix_supply.values())


def run_soundness(seed=1, banks=100, inputs=10, horizon=4.0, dt=5e-3, max_size=3) -> SoundnessResult:
    """Drive random certified banks from rest and record the smallest composed supply prefix.

    Banks alternate between the two composition theorems; each draws 1..max_size
    subsystems of kinds meeting that theorem's preconditions.
    """
    from .composition import compose_theorem1, compose_theorem2
    from .qsr_core import SampledSignal, cumulative_supply

    rng = np.random.default_rng(seed)
    hg = half_grid(horizon, dt)
    g = hg[::2]
    worst = {"1": np.inf, "2": np.inf}
    for trial in range(banks):
        theorem = "1" if trial % 2 == 0 else "2"
        kinds = rng.choice(THEOREM_KINDS[theorem], int(rng.integers(1, max_size + 1)))
        subs = [random_certified(rng, k) for k in kinds]
        fams = [random_family(rng, s.triple.s_mat, hg, i + 1) for i, s in enumerate(subs)]
        compose_fn = compose_theorem1 if theorem == "1" else compose_theorem2
        rep = compose_fn([s.triple for s in subs], fams)
        u, y = simulate_bank([s.sys for s in subs], fams, random_inputs(rng, inputs, hg, subs[0].sys.n_u))
        for b in range(inputs):
            sup = cumulative_supply(SampledSignal(g, u[b]), SampledSignal(g, y[b]), rep.composed)
            worst[theorem] = min(worst[theorem], float(sup.min()))
    return SoundnessResult(banks, inputs, worst)
