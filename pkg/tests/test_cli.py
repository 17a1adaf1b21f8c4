import numpy as np
import pytest

from qsrsched import __version__
from qsrsched.cli import main
from qsrsched.qsr_core import SpecialCase, make_special
from qsrsched.robot_sim.simulation import rms
from qsrsched.textio import dump_triple


@pytest.fixture(scope="module")
def bank_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bank")
    assert main(["--output-dir", str(out), "synthesize"]) == 0
    return out


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_version(capsys):
    code, cap = _run(capsys, "version")
    assert code == 0 and cap.out.strip() == __version__


def test_unknown_command_is_usage_error(capsys):
    code, cap = _run(capsys, "frobnicate")
    assert code == 2 and "invalid choice" in cap.err


def test_synthesize_outputs(bank_dir):
    names = sorted(p.name for p in bank_dir.iterdir())
    assert names == ["bank.txt", "controller_1.txt", "controller_2.txt", "controller_3.txt", "synthesize_report.txt"]
    assert (bank_dir / "bank.txt").read_text().splitlines()[0].startswith("gs-bank v1 n=3")


def test_synthesize_is_deterministic(bank_dir, tmp_path):
    assert main(["--output-dir", str(tmp_path), "synthesize"]) == 0
    for name in ("controller_1.txt", "controller_2.txt", "controller_3.txt", "bank.txt"):
        assert (tmp_path / name).read_bytes() == (bank_dir / name).read_bytes()


def test_certify(bank_dir, tmp_path, capsys):
    code, _ = _run(capsys, "--output-dir", str(tmp_path), "certify", "--bank", str(bank_dir / "bank.txt"))
    assert code == 0


def test_negative_mass_is_config_error(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[plant]\nmasses = 2, -0.9, 0.3\n")
    code, cap = _run(capsys, "--output-dir", str(tmp_path), "synthesize", "--scenario", str(ini))
    assert code == 2
    assert "masses" in cap.err and "bad.ini:2" in cap.err


def test_schedule_build_verify_bounds(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["--output-dir", out, "schedule", "build", "--horizon", "2", "--dt", "0.01"]) == 0
    fams = [str(tmp_path / f"family_{i}.txt") for i in (1, 2, 3)]
    code, cap = _run(capsys, "schedule", "verify", "--families", *fams)
    assert code == 0 and cap.out.count("PASS") == 3
    code, cap = _run(capsys, "schedule", "bounds", "--families", *fams)
    assert code == 0


def test_schedule_verify_failure(tmp_path, capsys):
    (tmp_path / "t.txt").write_text(dump_triple(make_special(SpecialCase.passive(), 2)))
    fam = tmp_path / "f.txt"
    fam.write_text("gs-family v1 i=1 n_u=2 n_y=2 dt=0.1\n1 1 0 1 1 0 0 1\n1 1 0 1 1 0 0 1\n")
    code, _ = _run(capsys, "--output-dir", str(tmp_path), "schedule", "verify", "--families", str(fam), "--triple", str(tmp_path / "t.txt"))
    assert code == 3


def test_compose_bank(bank_dir, tmp_path, capsys):
    out = str(tmp_path)
    assert main(["--output-dir", out, "schedule", "build", "--horizon", "1", "--dt", "0.01"]) == 0
    fams = [str(tmp_path / f"family_{i}.txt") for i in (1, 2, 3)]
    code, cap = _run(capsys, "--output-dir", out, "compose", "--bank", str(bank_dir / "bank.txt"), "--families", *fams)
    assert code == 0
    assert (tmp_path / "composition.txt").exists()
    assert "R_zero: [1, 2, 3]" in cap.out


def test_theorem_one_rejects_passive(tmp_path, capsys):
    trip = tmp_path / "p.txt"
    trip.write_text(dump_triple(make_special(SpecialCase.passive(), 2)))
    out = str(tmp_path)
    args = ["--output-dir", out, "schedule", "build", "--kind", "unit", "--count", "2", "--horizon", "0.1", "--dt", "0.01"]
    assert main(args + ["--triple", str(trip)]) == 0
    fams = [str(tmp_path / "family_1.txt"), str(tmp_path / "family_2.txt")]
    base = ["--output-dir", out, "compose", "--triples", str(trip), str(trip), "--families", *fams]
    code, cap = _run(capsys, *base, "--theorem", "1")
    assert code == 3 and "negative definite" in cap.err
    code, _ = _run(capsys, *base, "--theorem", "2")
    assert code == 0


def _simulate(tmp_path, bank, dt, horizon):
    ini = tmp_path / f"s{dt}.ini"
    ini.write_text(f"[sim]\nhorizon = {horizon}\ndt = {dt}\n")
    out = tmp_path / f"o{dt}"
    assert main(["--output-dir", str(out), "simulate", "--scenario", str(ini), "--bank", str(bank), "--no-plots"]) == 0
    data = np.genfromtxt(out / "sim_matrix.csv", delimiter=",", names=True)
    e = np.column_stack([data["e1"], data["e2"], data["e3"]])
    return out, rms(e, data["t"])


def test_simulate_short_horizon(bank_dir, tmp_path):
    out, _ = _simulate(tmp_path, bank_dir / "bank.txt", 1e-3, 0.5)
    assert {p.name for p in out.iterdir()} == {"sim_matrix.csv", "rms.txt"}


def test_simulate_step_halving(bank_dir, tmp_path):
    _, coarse = _simulate(tmp_path, bank_dir / "bank.txt", 1e-3, 3.0)
    _, fine = _simulate(tmp_path, bank_dir / "bank.txt", 5e-4, 3.0)
    assert np.all(coarse > 0)
    assert np.allclose(coarse, fine, rtol=5e-5)


def test_simulate_compare_with_plots(bank_dir, tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[sim]\nhorizon = 2.5\ndt = 0.002\n")
    out = tmp_path / "cmp"
    assert main(["--output-dir", str(out), "simulate", "--scenario", str(ini), "--bank", str(bank_dir / "bank.txt"), "--compare"]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"sim_unscheduled.csv", "sim_scalar.csv", "sim_matrix.csv", "rms.txt"} <= names
    assert any(n.endswith(".svg") for n in names)
