"""Command-line front end.

Exit codes: 0 success, 1 internal or certification failure, 2 configuration
error, 3 theorem precondition failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certification import LtiSystem, dissipativity_residual, spectral_abscissa, stability_check
from .composition import CompositionReport, compose, compose_special
from .config import ScenarioConfig, load_scenario
from .errors import ConfigError, InfeasibleError, PreconditionError, QsrError
from .qsr_core import Kind, QsrTriple, classify
from .robot_sim import schedules
from .robot_sim.simulation import ControllerBank, rms_metrics, simulate_closed_loop
from .robot_sim.trajectory import scheduling_signals
from .scheduling import activity, scalar_family, stacked_sigma, sv_bounds, uniform_grid, verify_pseudo_commute
from .synthesis import controller_s, plant_triple, synthesize_bank
from .svgplot import render
from .textio import (
    FMT,
    dump_controller,
    dump_csv,
    dump_family,
    dump_triple,
    load_controller,
    load_family,
    load_triple,
    parse_header,
    read_text,
    write_matrix,
    write_text,
)

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_PRECONDITION = 0, 1, 2, 3


def _g(x) -> str:
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_g(v) for v in np.ravel(x)) + "]"
    if isinstance(x, (float, np.floating)):
        return FMT % x
    return str(x)


class Reporter:
    def __init__(self, out_dir=None):
        self.lines = []
        self.out_dir = Path(out_dir) if out_dir else None

    def __call__(self, line=""):
        self.lines.append(line)
        print(line)

    def save(self, name="report.txt"):
        if self.out_dir is not None:
            write_text(self.out_dir / name, "\n".join(self.lines) + "\n")


# synthesize / certify ------------------------------------------------------

def _scenario(args) -> ScenarioConfig:
    cfg = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    if getattr(args, "dt", None) is not None:
        if not args.dt > 0:
            raise ConfigError(f"--dt must be positive, got {args.dt}")
        cfg.dt = args.dt
    return cfg


def _bank_manifest(bank) -> str:
    lines = [f"gs-bank v1 n={len(bank)}"]
    lines += [f"controller_{c.index}.txt" for c in bank]
    return "\n".join(lines) + "\n"


def cmd_synthesize(args) -> int:
    cfg = _scenario(args)
    out = Path(args.output_dir)
    rep = Reporter(out)
    rep(f"scenario: {cfg.source}")
    if cfg.weights_defaulted:
        rep("LQR weights: table defaults Q = diag(15,15,15,10,10,10)^-2, R = diag(25,25)^-2")
    try:
        bank = synthesize_bank(cfg.plant, cfg.points_rad, cfg.weights)
    except InfeasibleError as exc:
        rep(f"certification failed: {exc}")
        rep.save("synthesize_report.txt")
        return EXIT_INTERNAL
    p_triple = plant_triple(cfg.plant)
    for c, pt in zip(bank, cfg.points_deg):
        stab = stability_check(p_triple, c.triple, 1.0)
        rep(f"controller {c.index}: q_bar_deg={_g(list(pt))} eps={_g(c.certificate.eps)} beta={_g(c.certificate.beta)}")
        rep(f"  lmi_max_eig={_g(c.certificate.lmi_residual_max_eig)} spectral_abscissa(A_c)={_g(spectral_abscissa(c.a_c))}")
        rep(f"  stability rho=1 block_max_eig={_g(stab.block_max_eig)} certified={stab.certified}")
        write_text(out / f"controller_{c.index}.txt", dump_controller(c))
    write_text(out / "bank.txt", _bank_manifest(bank))
    rep(f"wrote {len(bank)} controllers and bank.txt to {out}")
    rep.save("synthesize_report.txt")
    return EXIT_OK


def _load_bank(path):
    path = Path(path)
    lines = [l.strip() for l in read_text(path).splitlines() if l.strip() and not l.startswith("#")]
    if not lines:
        raise ConfigError(f"{path}:1: empty bank manifest")
    parse_header(lines[0], "gs-bank v1", str(path), 1)
    ctrls = []
    for name in lines[1:]:
        f = path.parent / name
        ctrls.append(load_controller(read_text(f), str(f)))
    if not ctrls:
        raise ConfigError(f"{path}: bank lists no controllers")
    return ctrls


def _controller_triple(c) -> QsrTriple:
    return QsrTriple(c["Q_c"], c["S_c"], np.zeros((c["S_c"].shape[1],) * 2))


def cmd_certify(args) -> int:
    cfg = _scenario(args)
    ctrls = _load_bank(args.bank)
    rep = Reporter(args.output_dir)
    p_triple = plant_triple(cfg.plant)
    ok = True
    for c in ctrls:
        triple = _controller_triple(c)
        sys_c = LtiSystem(c["A_c"], c["B_c"], c["C_c"])
        _, worst = dissipativity_residual(sys_c, triple, c["P"])
        lam_p = float(np.linalg.eigvalsh(c["P"])[0])
        stab = stability_check(p_triple, triple, 1.0)
        passed = worst <= args.tol and lam_p > 0 and stab.certified
        ok &= passed
        rep(
            f"controller {c['index']}: lmi_max_eig={_g(worst)} lambda_min(P)={_g(lam_p)} "
            f"stability_block_max_eig={_g(stab.block_max_eig)} {'PASS' if passed else 'FAIL'}"
        )
    rep.save("certify_report.txt")
    return EXIT_OK if ok else EXIT_INTERNAL


# compose -------------------------------------------------------------------

def format_report(report: CompositionReport) -> str:
    lines = [f"theorem: {report.theorem}"]
    lines.append(dump_triple(report.composed, "composed").rstrip())
    sc = report.special
    params = {k: getattr(sc, k) for k in ("delta", "eps", "gamma", "a", "b", "c", "r") if getattr(sc, k) is not None}
    lines.append(f"special_case: {sc.kind.value} " + " ".join(f"{k}={_g(v)}" for k, v in params.items()))
    for key, val in report.scalars().items():
        if key == "theorem":
            continue
        lines.append(f"{key}: {_g(val)}")
    if report.s_bar is not None:
        lines.append("s_bar: " + _g(report.s_bar))
    for flag in report.flags:
        lines.append(f"flag: {flag}")
    return "\n".join(lines) + "\n"


def cmd_compose(args) -> int:
    triples = []
    if args.bank:
        triples += [_controller_triple(c) for c in _load_bank(args.bank)]
    triples += [load_triple(read_text(f), f) for f in (args.triples or [])]
    families = [load_family(read_text(f), f) for f in (args.families or [])]
    if not triples:
        raise ConfigError("compose needs --triples or --bank")
    if args.special:
        kind = Kind(args.special)
        cases = [classify(t) for t in triples]
        report = compose_special(kind, cases, families)
    else:
        kw = {}
        if args.theorem in ("2", "auto") and args.no_require_active:
            kw["require_active"] = False
        report = compose(triples, families, args.theorem, **kw)
    text = format_report(report)
    print(text, end="")
    if args.output_dir:
        write_text(Path(args.output_dir) / "composition.txt", text)
    return EXIT_OK


# schedule ------------------------------------------------------------------

def cmd_schedule_build(args) -> int:
    if args.dt is None:
        args.dt = 1e-3
    if not args.dt > 0 or not args.horizon > 0:
        raise ConfigError("schedule horizon and dt must be positive")
    grid = uniform_grid(args.horizon, args.dt)
    if grid.size < 2:
        raise ConfigError("schedule grid needs at least two stamps")
    if args.kind == "matrix":
        fams = schedules.example_families(grid)
    elif args.kind == "scalar":
        fams = schedules.scalar_families(grid)
    elif args.kind == "unit":
        if args.triple:
            tr = load_triple(read_text(args.triple), args.triple)
            fams = [scalar_family(i + 1, grid, np.ones(grid.size), tr.n_u, tr.n_y) for i in range(args.count)]
        else:
            fams = schedules.families_from_schedule(lambda t: schedules.unit_schedule(t, args.count), grid)
    else:
        from .testbeds import random_family

        if not args.triple:
            raise ConfigError("--kind random needs --triple for the S matrix")
        s_mat = load_triple(read_text(args.triple), args.triple).s_mat
        rng = np.random.default_rng(args.seed)
        fams = [random_family(rng, s_mat, grid, index=i + 1) for i in range(args.count)]
    out = Path(args.output_dir)
    for f in fams:
        write_text(out / f"family_{f.index}.txt", dump_family(f))
    print(f"wrote {len(fams)} families ({grid.size} stamps, dt={_g(args.dt)}) to {out}")
    return EXIT_OK


def _s_for_verify(args):
    if args.triple:
        return load_triple(read_text(args.triple), args.triple).s_mat
    return controller_s()


def cmd_schedule_verify(args) -> int:
    s_mat = _s_for_verify(args)
    ok = True
    for path in args.families:
        fam = load_family(read_text(path), path)
        passed, worst = verify_pseudo_commute(fam, s_mat, args.tol)
        ok &= passed
        print(f"{path}: i={fam.index} max_residual={_g(worst)} {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_PRECONDITION


def cmd_schedule_bounds(args) -> int:
    fams = [load_family(read_text(p), p) for p in args.families]
    for f in fams:
        b = sv_bounds(f)
        print(
            f"i={f.index} sigma_bar_u={_g(b.sigma_bar_u)} sigma_bar_y={_g(b.sigma_bar_y)} "
            f"nu_bar_u={_g(b.nu_bar_u)} nu_bar_y={_g(b.nu_bar_y)} full_rank_fraction={_g(float(np.mean(b.full_rank_set)))}"
        )
    act_u, act_y = activity(fams, "input"), activity(fams, "output")
    print(f"input: active={act_u.active} strongly_active={act_u.strongly_active}")
    print(f"output: active={act_y.active} strongly_active={act_y.strongly_active}")
    print(f"sigma_bar_psi={_g(stacked_sigma(fams))}")
    return EXIT_OK


# simulate ------------------------------------------------------------------

def _bank_for_sim(cfg, args):
    if args.bank:
        ctrls = _load_bank(args.bank)
        return [ControllerBank(np.array([c["A_c"]]), np.array([c["B_c"]]), np.array([c["C_c"]])) for c in ctrls]
    subs = synthesize_bank(cfg.plant, cfg.points_rad, cfg.weights)
    return [ControllerBank.from_subcontrollers([s]) for s in subs]


def _stack(banks):
    return ControllerBank(
        np.concatenate([b.a for b in banks]),
        np.concatenate([b.b for b in banks]),
        np.concatenate([b.k for b in banks]),
    )


def _file_schedule(cfg, n):
    fams = [load_family(read_text(p), p) for p in cfg.family_files]
    if len(fams) != n:
        raise ConfigError(f"{len(fams)} family files for {n} controllers")
    grid = fams[0].grid

    def sched(t):
        k = int(np.clip(np.searchsorted(grid, t + 1e-12, side="right") - 1, 0, grid.size - 1))
        return np.array([f.phi_u[k] for f in fams]), np.array([f.phi_y[k] for f in fams])

    return sched


def run_mode(cfg, banks, mode):
    label = {"none": "unscheduled", "scalar": "scalar", "matrix": "matrix", "file": "file"}[mode]
    if mode == "none":
        ctrl, sched = banks[cfg.unscheduled_index - 1], None
    else:
        ctrl = _stack(banks)
        if mode in ("scalar", "matrix") and ctrl.n != 3:
            raise ConfigError(f"{mode} scheduling is defined for three controllers, got {ctrl.n}")
        sched = {"scalar": schedules.scalar_schedule, "matrix": schedules.matrix_schedule}.get(mode)
        if mode == "file":
            sched = _file_schedule(cfg, ctrl.n)
    return simulate_closed_loop(
        cfg.plant, ctrl, sched, cfg.waypoints, cfg.horizon, cfg.dt, rate_error=cfg.rate_error, label=label
    )


def rms_table(results) -> str:
    lines = [
        "RMS angle error [deg] and RMS angle rate error [deg/s]",
        f"{'method':<12} {'e1':>9} {'e2':>9} {'e3':>9} {'ed1':>9} {'ed2':>9} {'ed3':>9}",
    ]
    for r in results:
        m = rms_metrics(r)
        vals = " ".join(f"{v:9.4f}" for v in np.concatenate([m.angle_deg, m.rate_deg]))
        lines.append(f"{r.label:<12} {vals}")
    return "\n".join(lines) + "\n"


def _plots(out, results):
    t = results[0].t
    deg = np.rad2deg
    traj = [
        (f"q{j + 1} [deg]", {"desired": deg(results[0].theta_d[:, j]), **{r.label: deg(r.q[:, j]) for r in results}})
        for j in range(3)
    ]
    write_text(out / "trajectories.svg", render(traj, t, "Joint angles"))
    errs = [(f"e{j + 1} [deg]", {r.label: deg(r.e[:, j]) for r in results}) for j in range(3)]
    errs += [(f"ed{j + 1} [deg/s]", {r.label: deg(r.e_dot[:, j]) for r in results}) for j in range(3)]
    write_text(out / "errors.svg", render(errs, t, "Joint angle errors and error rates"))
    torques = [(f"tau{j + 1} [N m]", {r.label: r.tau[:, j] for r in results}) for j in range(3)]
    write_text(out / "torques.svg", render(torques, t, "Joint torques"))
    s = np.array([scheduling_signals(tt) for tt in t])
    write_text(out / "signals.svg", render([("s_i(t)", {f"s{i + 1}": s[:, i] for i in range(3)})], t, "Scheduling signals"))


def cmd_simulate(args) -> int:
    cfg = _scenario(args)
    out = Path(args.output_dir)
    banks = _bank_for_sim(cfg, args)
    modes = ["none", "scalar", "matrix"] if args.compare else [cfg.mode]
    results = []
    for mode in modes:
        res = run_mode(cfg, banks, mode)
        results.append(res)
        write_text(out / f"sim_{res.label}.csv", dump_csv(res.columns()))
    table = rms_table(results)
    print(table, end="")
    for r in results:
        print(f"{r.label}: max|tau|={_g(float(np.max(np.abs(r.tau))))} N m")
    write_text(out / "rms.txt", table)
    if not args.no_plots:
        _plots(out, results)
    return EXIT_OK


# entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsrsched", description="Matrix gain-scheduling of QSR-dissipative systems.")
    p.add_argument("--output-dir", default="out", help="directory for generated files (default: out)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized constructions")
    p.add_argument("--dt", type=float, default=None, help="override the scenario time step [s]")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="synthesize and certify the controller bank")
    s.add_argument("--scenario")
    s.set_defaults(func=cmd_synthesize)

    s = sub.add_parser("certify", help="re-check a stored controller bank")
    s.add_argument("--bank", required=True)
    s.add_argument("--scenario")
    s.add_argument("--tol", type=float, default=1e-7)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("compose", help="compose subsystem triples under scheduling families")
    s.add_argument("--triples", nargs="*")
    s.add_argument("--bank")
    s.add_argument("--families", nargs="+", required=True)
    s.add_argument("--theorem", choices=("1", "2", "auto"), default="auto")
    s.add_argument("--special", choices=[k.value for k in Kind if k is not Kind.GENERAL])
    s.add_argument("--no-require-active", action="store_true")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("schedule", help="build, verify or summarize scheduling families")
    ss = s.add_subparsers(dest="schedule_command", required=True)
    b = ss.add_parser("build")
    b.add_argument("--kind", choices=("matrix", "scalar", "unit", "random"), default="matrix")
    b.add_argument("--horizon", type=float, default=12.0)
    b.add_argument("--dt", type=float, default=argparse.SUPPRESS, dest="dt", help="stamp spacing (default: global --dt or 1e-3)")
    b.add_argument("--count", type=int, default=1)
    b.add_argument("--triple")
    b.set_defaults(func=cmd_schedule_build)
    v = ss.add_parser("verify")
    v.add_argument("--families", nargs="+", required=True)
    v.add_argument("--triple")
    v.add_argument("--tol", type=float, default=1e-10)
    v.set_defaults(func=cmd_schedule_verify)
    bd = ss.add_parser("bounds")
    bd.add_argument("--families", nargs="+", required=True)
    bd.set_defaults(func=cmd_schedule_bounds)

    s = sub.add_parser("simulate", help="closed-loop manipulator simulation")
    s.add_argument("--scenario")
    s.add_argument("--bank")
    s.add_argument("--compare", action="store_true", help="run unscheduled, scalar and matrix variants")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("version")
    s.set_defaults(func=lambda args: print(__version__) or EXIT_OK)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QsrError, ValueError) as exc:
        if isinstance(exc, InfeasibleError):
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INTERNAL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last resort
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
