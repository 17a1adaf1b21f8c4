"""QSR properties of a matrix-gain-scheduled parallel bank.

Two composition routes are provided. ``compose_theorem1`` handles subsystems
with negative definite Q_i and arbitrary S_i; ``compose_theorem2`` handles
negative semidefinite Q_i sharing one S. ``compose_special`` specializes both to
the named cases (passive, ISP, OSP, finite L2, VSP, conic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError
from .qsr_core import (
    Kind,
    QsrTriple,
    SampledSignal,
    SpecialCase,
    classify,
    cumulative_supply,
    make_special,
)
from .scheduling import (
    SchedulingFamily,
    activity,
    stacked_sigma,
    sv_bounds,
    verify_pseudo_commute,
)

DEFINITE_TOL = 1e-12
COMMON_S_TOL = 1e-12
PSEUDO_COMMUTE_TOL = 1e-10
CONIC_FLAG_TOL = 1e-9


@dataclass
class CompositionReport:
    composed: QsrTriple
    theorem: str
    n: int
    eps: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    lambda_max_r: list = field(default_factory=list)
    sigma_bar_y: list = field(default_factory=list)
    sigma_bar_u: list = field(default_factory=list)
    nu_bar_u: list = field(default_factory=list)
    nu_bar_y: list = field(default_factory=list)
    sigma_s: list = field(default_factory=list)
    commute_residual: list = field(default_factory=list)
    eps_min: float = float("nan")
    delta_bar: float = float("nan")
    delta_hat: float = float("nan")
    s_bar: Optional[np.ndarray] = None
    nu_s_bar: float = float("nan")
    sigma_bar_psi: float = float("nan")
    eps_composed: float = float("nan")
    delta_max: float = float("nan")
    delta_min: float = float("nan")
    sigma_bar_u_sum: float = float("nan")
    nu_bar_u_sum: float = float("nan")
    delta_composed: float = float("nan")
    r_pos: tuple = ()
    r_neg: tuple = ()
    r_zero: tuple = ()
    corollary_case: str = ""
    special: Optional[SpecialCase] = None
    extras: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def scalars(self) -> dict:
        """Flat name -> value map of every scalar and index set, for reporting."""
        out = {}
        for key in (
            "theorem", "n", "eps_min", "delta_bar", "delta_hat", "nu_s_bar",
            "sigma_bar_psi", "eps_composed", "delta_max", "delta_min",
            "sigma_bar_u_sum", "nu_bar_u_sum", "delta_composed", "corollary_case",
        ):
            out[key] = getattr(self, key)
        for key in (
            "eps", "delta", "lambda_max_r", "sigma_bar_y", "sigma_bar_u",
            "nu_bar_u", "nu_bar_y", "sigma_s", "commute_residual",
        ):
            out[key] = list(getattr(self, key))
        out["R_pos"], out["R_neg"], out["R_zero"] = list(self.r_pos), list(self.r_neg), list(self.r_zero)
        out.update(self.extras)
        return out


def _lam_max(m):
    return float(np.linalg.eigvalsh(m)[-1])


def _check_inputs(triples: Sequence[QsrTriple], families: Sequence[SchedulingFamily]):
    if len(triples) == 0:
        raise PreconditionError("no subsystems given")
    if len(triples) != len(families):
        raise DimensionError(f"{len(triples)} triples but {len(families)} scheduling families")
    n_u, n_y = triples[0].n_u, triples[0].n_y
    grid = families[0].grid
    for i, (tr, fam) in enumerate(zip(triples, families), start=1):
        if (tr.n_u, tr.n_y) != (n_u, n_y):
            raise DimensionError(f"subsystem {i} has dims (n_u={tr.n_u}, n_y={tr.n_y}), expected ({n_u}, {n_y})")
        if (fam.n_u, fam.n_y) != (n_u, n_y):
            raise DimensionError(f"family {i} has dims (n_u={fam.n_u}, n_y={fam.n_y}), expected ({n_u}, {n_y})")
        if not np.array_equal(fam.grid, grid):
            raise DimensionError("all families must share one grid")
    return n_u, n_y


def _check_commute(triples, families, tol):
    residuals = []
    for i, (tr, fam) in enumerate(zip(triples, families), start=1):
        ok, res = verify_pseudo_commute(fam, tr.s_mat, tol)
        if not ok:
            raise PreconditionError(
                f"scheduling matrices of subsystem {i} do not pseudo-commute with S_{i} "
                f"(max residual {res:.3e} > {tol:.1e})"
            )
        residuals.append(res)
    return residuals


def compose_theorem1(
    triples: Sequence[QsrTriple],
    families: Sequence[SchedulingFamily],
    commute_tol: float = PSEUDO_COMMUTE_TOL,
) -> CompositionReport:
    """Composition for negative definite Q_i and individual S_i."""
    n_u, n_y = _check_inputs(triples, families)
    n = len(triples)
    eps = []
    for i, tr in enumerate(triples, start=1):
        lam = _lam_max(tr.q_mat)
        if not lam < -DEFINITE_TOL:
            raise PreconditionError(
                f"Q_{i} is not negative definite (lambda_max = {lam:.3e}); theorem 1 needs Q_i < 0"
            )
        eps.append(-lam)
    residuals = _check_commute(triples, families, commute_tol)
    bounds = [sv_bounds(f) for f in families]

    sigma_y = [b.sigma_bar_y for b in bounds]
    for i, s in enumerate(sigma_y, start=1):
        if s <= 0:
            raise PreconditionError(f"output scheduling matrix of subsystem {i} is identically zero")
    lam_r = [_lam_max(tr.r_mat) for tr in triples]
    delta = []
    for lam, b in zip(lam_r, bounds):
        spread = b.sigma_bar_u if lam > 0 else b.nu_bar_u
        delta.append(lam * b.sigma_bar_y**2 * spread**2)
    sigma_s = [float(np.linalg.norm(tr.s_mat, 2)) for tr in triples]

    eps_min = min(eps)
    s_bar = sum((sy**2 / e) * tr.s_mat for sy, e, tr in zip(sigma_y, eps, triples))
    # smallest singular value of S_bar as a map on R^{n_u}; zero when n_u > n_y
    nu_s_bar = math.sqrt(max(float(np.linalg.eigvalsh(s_bar.T @ s_bar)[0]), 0.0))
    delta_bar = sum(d + sy**4 * ss**2 / e for d, sy, ss, e in zip(delta, sigma_y, sigma_s, eps))
    delta_hat = n * delta_bar - eps_min * nu_s_bar**2

    composed = QsrTriple(-eps_min * np.eye(n_y), eps_min * s_bar, delta_hat * np.eye(n_u))
    report = CompositionReport(
        composed=composed,
        theorem="1",
        n=n,
        eps=eps,
        delta=delta,
        lambda_max_r=lam_r,
        sigma_bar_y=sigma_y,
        sigma_bar_u=[b.sigma_bar_u for b in bounds],
        nu_bar_u=[b.nu_bar_u for b in bounds],
        nu_bar_y=[b.nu_bar_y for b in bounds],
        sigma_s=sigma_s,
        commute_residual=residuals,
        eps_min=eps_min,
        delta_bar=delta_bar,
        delta_hat=delta_hat,
        s_bar=s_bar,
        nu_s_bar=nu_s_bar,
    )
    _index_sets(report, lam_r)
    report.special = classify(composed)
    return report


def _index_sets(report: CompositionReport, lam_r):
    report.r_pos = tuple(i for i, l in enumerate(lam_r, start=1) if l > DEFINITE_TOL)
    report.r_neg = tuple(i for i, l in enumerate(lam_r, start=1) if l < -DEFINITE_TOL)
    report.r_zero = tuple(i for i, l in enumerate(lam_r, start=1) if abs(l) <= DEFINITE_TOL)


def _corollary_case(r_pos, r_neg, sigma_bar_u_sum, nu_bar_u_sum) -> str:
    if r_pos and not r_neg:
        return "1.1" if sigma_bar_u_sum > 0 else "1"
    if r_neg and not r_pos:
        return "2.1" if nu_bar_u_sum > 0 else "2"
    if not r_pos and not r_neg:
        return "3"
    return "indeterminate"


def compose_theorem2(
    triples: Sequence[QsrTriple],
    families: Sequence[SchedulingFamily],
    commute_tol: float = PSEUDO_COMMUTE_TOL,
    require_active: bool = True,
) -> CompositionReport:
    """Composition for negative semidefinite Q_i sharing a common S.

    ``require_active=False`` relaxes the output-activity hypothesis, which is
    only needed when some Q_i is nonzero.
    """
    n_u, n_y = _check_inputs(triples, families)
    n = len(triples)
    s_common = triples[0].s_mat
    for i, tr in enumerate(triples[1:], start=2):
        if np.max(np.abs(tr.s_mat - s_common)) > COMMON_S_TOL:
            raise PreconditionError(f"S_{i} differs from S_1; theorem 2 needs a common S")
    eps = []
    for i, tr in enumerate(triples, start=1):
        lam = _lam_max(tr.q_mat)
        if lam > DEFINITE_TOL:
            raise PreconditionError(
                f"Q_{i} has a positive eigenvalue ({lam:.3e}); theorem 2 needs Q_i <= 0"
            )
        eps.append(max(-lam, 0.0))
    out_act = activity(families, "output")
    if require_active and not out_act.active:
        raise PreconditionError("output scheduling matrices are not active")
    residuals = _check_commute(triples, families, commute_tol)
    bounds = [sv_bounds(f) for f in families]

    eps_min = min(eps)
    sigma_psi = stacked_sigma(families)
    if sigma_psi > 0:
        eps_c = eps_min / sigma_psi**2
    elif eps_min == 0:
        eps_c = 0.0
    else:
        raise PreconditionError("output scheduling matrices vanish identically")

    lam_r = [_lam_max(tr.r_mat) for tr in triples]
    report = CompositionReport(
        composed=None,
        theorem="2",
        n=n,
        eps=eps,
        lambda_max_r=lam_r,
        sigma_bar_y=[b.sigma_bar_y for b in bounds],
        sigma_bar_u=[b.sigma_bar_u for b in bounds],
        nu_bar_u=[b.nu_bar_u for b in bounds],
        nu_bar_y=[b.nu_bar_y for b in bounds],
        sigma_s=[float(np.linalg.norm(s_common, 2))] * n,
        commute_residual=residuals,
        eps_min=eps_min,
        sigma_bar_psi=sigma_psi,
        eps_composed=eps_c,
    )
    _index_sets(report, lam_r)
    report.delta = [abs(l) for l in lam_r]
    pos = [i - 1 for i in report.r_pos]
    neg = [i - 1 for i in report.r_neg]
    delta_max = max((report.delta[i] for i in pos), default=0.0)
    delta_min = min((report.delta[i] for i in neg), default=0.0)
    grid_len = families[0].grid.size
    sig_sum = np.zeros(grid_len)
    for i in pos:
        sig_sum += bounds[i].sigma_u**2
    nu_sum = np.zeros(grid_len)
    for i in neg:
        nu_sum += bounds[i].nu_u**2
    sigma_bar_u_sum = float(sig_sum.max()) if pos else 0.0
    nu_bar_u_sum = float(nu_sum.min()) if neg else 0.0
    delta_c = delta_max * sigma_bar_u_sum - delta_min * nu_bar_u_sum

    report.delta_max = delta_max
    report.delta_min = delta_min
    report.sigma_bar_u_sum = sigma_bar_u_sum
    report.nu_bar_u_sum = nu_bar_u_sum
    report.delta_composed = delta_c
    report.corollary_case = _corollary_case(report.r_pos, report.r_neg, sigma_bar_u_sum, nu_bar_u_sum)
    report.composed = QsrTriple(-eps_c * np.eye(n_y), s_common, delta_c * np.eye(n_u))
    report.special = classify(report.composed)
    return report


def compose(triples, families, theorem: str = "auto", **kw) -> CompositionReport:
    """Dispatch to theorem 1 or 2; ``auto`` prefers 2 when S is common and Q_i <= 0."""
    theorem = str(theorem)
    if theorem == "1":
        return compose_theorem1(triples, families, **kw)
    if theorem == "2":
        return compose_theorem2(triples, families, **kw)
    if theorem != "auto":
        raise ValueError(f"theorem must be 1, 2 or auto, got {theorem!r}")
    try:
        return compose_theorem2(triples, families, **kw)
    except PreconditionError:
        return compose_theorem1(triples, families, **kw)


def _special_triples(kind: Kind, params: Sequence[SpecialCase], families):
    if len(params) != len(families):
        raise DimensionError(f"{len(params)} parameter sets but {len(families)} families")
    for i, p in enumerate(params, start=1):
        if p.kind is not kind:
            raise PreconditionError(f"subsystem {i} is {p.kind.value}, expected {kind.value} (mixed kinds)")
    fam = families[0]
    if fam.n_u != fam.n_y:
        raise DimensionError("special cases need square subsystems (n_u == n_y)")
    return [make_special(p, fam.n_u) for p in params]


def _fully_active_delta(families, deltas) -> tuple[float, float]:
    """delta_min * inf_t sum_{i in F_u(t)} nu_{u,i}(t)^2."""
    act = activity(families, "input")
    nu = np.column_stack([sv_bounds(f).nu_u for f in families])
    inf_sum = float(np.min(np.sum(np.where(act.full_rank, nu**2, 0.0), axis=1)))
    return min(deltas) * inf_sum, inf_sum


def compose_special(kind, params: Sequence[SpecialCase], families: Sequence[SchedulingFamily]) -> CompositionReport:
    """Specialized composition for banks whose subsystems all share one special case."""
    kind = Kind(kind)
    triples = _special_triples(kind, params, families)
    n = len(triples)
    nu = families[0].n_u

    if kind is Kind.PASSIVE:
        report = compose_theorem2(triples, families, require_active=False)
        report.composed = make_special(SpecialCase.passive(), nu)

    elif kind in (Kind.ISP, Kind.VSP):
        act = activity(families, "input")
        if not act.strongly_active:
            raise PreconditionError(f"{kind.value} composition needs strongly active input scheduling matrices")
        report = compose_theorem2(triples, families, require_active=(kind is Kind.VSP))
        delta, inf_sum = _fully_active_delta(families, [p.delta for p in params])
        report.extras["inf_sum_nu_sq_full_rank"] = inf_sum
        report.extras["delta"] = delta
        if kind is Kind.ISP:
            report.composed = make_special(SpecialCase.isp(delta), nu)
        else:
            eps = report.eps_composed
            report.extras["eps"] = eps
            report.composed = make_special(SpecialCase.vsp(eps=eps, delta=delta), nu)

    elif kind is Kind.OSP:
        report = compose_theorem2(triples, families)
        report.extras["eps"] = report.eps_composed
        report.extras["gamma"] = 1.0 / report.eps_composed
        report.composed = make_special(SpecialCase.osp(report.eps_composed), nu)

    elif kind is Kind.FINITE_L2:
        report = compose_theorem2(triples, families)
        gmax2 = max(p.gamma for p in params) ** 2
        r_scaled = report.sigma_bar_psi**2 * report.sigma_bar_u_sum * gmax2
        report.extras["unscaled_Q"] = -1.0 / report.sigma_bar_psi**2
        report.extras["unscaled_R"] = report.sigma_bar_u_sum * gmax2
        report.extras["gamma"] = math.sqrt(r_scaled)
        report.composed = QsrTriple(-np.eye(nu), np.zeros((nu, nu)), r_scaled * np.eye(nu))

    elif kind is Kind.CONIC:
        cr = [p.conic_center_radius() for p in params]
        for i, ((c_i, _), fam) in enumerate(zip(cr, families), start=1):
            ok, res = verify_pseudo_commute(fam, c_i * np.eye(nu), PSEUDO_COMMUTE_TOL)
            if not ok:
                raise PreconditionError(f"family {i} does not pseudo-commute with c_{i} I (residual {res:.3e})")
        report = compose_theorem1(triples, families)
        center = sum(c_i * sy**2 for (c_i, _), sy in zip(cr, report.sigma_bar_y))
        r_bar = []
        for i, ((c_i, r_i), sy, su, nuu, nuy) in enumerate(
            zip(cr, report.sigma_bar_y, report.sigma_bar_u, report.nu_bar_u, report.nu_bar_y), start=1
        ):
            if c_i != 0:
                if abs(su - sy) > CONIC_FLAG_TOL:
                    report.flags.append(f"subsystem {i}: sigma_bar_u {su:.6g} != sigma_bar_y {sy:.6g}")
                if abs(nuu - nuy) > CONIC_FLAG_TOL:
                    report.flags.append(f"subsystem {i}: nu_bar_u {nuu:.6g} != nu_bar_y {nuy:.6g}")
            if r_i > abs(c_i) and c_i == 0:
                r_bar.append(sy * su * r_i)
            elif r_i > abs(c_i):
                r_bar.append(sy**2 * r_i)
            else:
                r_bar.append(sy * math.sqrt(nuu**2 * r_i**2 + (sy**2 - nuu**2) * c_i**2))
        radius = math.sqrt(n * sum(rb**2 for rb in r_bar))
        report.extras.update(center=center, radius=radius, r_bar=r_bar)
        report.composed = make_special(SpecialCase.conic(c=center, r=radius), nu)

    else:
        raise PreconditionError(f"no specialized composition for kind {kind.value}")

    report.theorem = f"{report.theorem}/{kind.value}"
    report.special = classify(report.composed)
    return report


def verify_dissipation(
    triple: QsrTriple,
    u: SampledSignal,
    y: SampledSignal,
    v0: float = 0.0,
    vT=0.0,
    tol: float = 1e-6,
) -> bool:
    """Check supply >= V(T) - V(0) - tol at every grid prefix.

    ``vT`` may be a scalar or one storage value per grid stamp.
    """
    supply = cumulative_supply(u, y, triple)
    storage = np.broadcast_to(np.asarray(vT, dtype=float), supply.shape)
    return bool(np.all(supply >= storage - v0 - tol))


def am_qm_gap(values) -> float:
    """N * sum(u_i^2) - (sum u_i)^2, non-negative for real vectors."""
    v = np.asarray(values, dtype=float)
    return float(v.size * np.sum(v * v) - np.sum(v) ** 2)
