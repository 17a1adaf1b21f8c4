"""Plain-text formats for triples, scheduling families and controller banks.

Matrices are written as a ``<name> <rows> <cols>`` line followed by one line per
row of ``%.17g`` fields, so values round-trip exactly.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import ConfigError
from .qsr_core import QsrTriple
from .scheduling import SchedulingFamily

FMT = "%.17g"


def fmt_row(values) -> str:
    return " ".join(FMT % v for v in np.ravel(values))


def write_matrix(out, name: str, mat) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    out.write(f"{name} {mat.shape[0]} {mat.shape[1]}\n")
    for row in mat:
        out.write(fmt_row(row) + "\n")


class _Lines:
    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.pos = 0
        self.source = source

    def error(self, msg):
        return ConfigError(f"{self.source}:{self.pos}: {msg}")

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line and not line.startswith("#"):
                return line
        raise self.error("unexpected end of file")

    def at_end(self) -> bool:
        rest = [l.strip() for l in self.lines[self.pos:]]
        return not any(l and not l.startswith("#") for l in rest)

    def matrix(self, name: Optional[str] = None):
        head = self.next().split()
        if len(head) != 3:
            raise self.error(f"expected '<name> <rows> <cols>', got {' '.join(head)!r}")
        if name is not None and head[0] != name:
            raise self.error(f"expected matrix {name!r}, got {head[0]!r}")
        try:
            rows, cols = int(head[1]), int(head[2])
        except ValueError:
            raise self.error("matrix dimensions must be integers") from None
        data = []
        for _ in range(rows):
            fields = self.next().split()
            if len(fields) != cols:
                raise self.error(f"matrix {head[0]}: expected {cols} entries, got {len(fields)}")
            try:
                data.append([float(f) for f in fields])
            except ValueError:
                raise self.error(f"matrix {head[0]}: non-numeric entry") from None
        return head[0], np.array(data, dtype=float).reshape(rows, cols)


def parse_header(line: str, tag: str, source="<string>", lineno=1) -> dict:
    parts = line.split()
    want = tag.split()
    if parts[: len(want)] != want:
        raise ConfigError(f"{source}:{lineno}: expected header starting with {tag!r}")
    out = {}
    for item in parts[len(want):]:
        if "=" not in item:
            raise ConfigError(f"{source}:{lineno}: malformed header field {item!r}")
        k, v = item.split("=", 1)
        out[k] = v
    return out


# triples -------------------------------------------------------------------

def dump_triple(triple: QsrTriple, label: str = "") -> str:
    out = io.StringIO()
    out.write(f"qsr-triple n_y={triple.n_y} n_u={triple.n_u}" + (f" label={label}" if label else "") + "\n")
    write_matrix(out, "Q", triple.q_mat)
    write_matrix(out, "S", triple.s_mat)
    write_matrix(out, "R", triple.r_mat)
    return out.getvalue()


def load_triple(text: str, source: str = "<string>") -> QsrTriple:
    lines = _Lines(text, source)
    head = parse_header(lines.next(), "qsr-triple", source, lines.pos)
    _, q = lines.matrix("Q")
    _, s = lines.matrix("S")
    _, r = lines.matrix("R")
    triple = QsrTriple(q, s, r)
    for key, val in (("n_y", triple.n_y), ("n_u", triple.n_u)):
        if key in head and int(head[key]) != val:
            raise ConfigError(f"{source}: header {key}={head[key]} disagrees with matrices ({val})")
    return triple


# families ------------------------------------------------------------------

def dump_family(family: SchedulingFamily) -> str:
    grid = family.grid
    dt = float(grid[1] - grid[0]) if grid.size > 1 else 0.0
    if grid.size > 2 and np.max(np.abs(np.diff(grid) - dt)) > 1e-9 * max(dt, 1.0):
        raise ConfigError("family files need a uniform grid")
    out = io.StringIO()
    out.write(
        f"gs-family v1 i={family.index} n_u={family.n_u} n_y={family.n_y} dt={FMT % dt} "
        f"t0={FMT % grid[0]} n={grid.size}\n"
    )
    for pu, py in zip(family.phi_u, family.phi_y):
        out.write(fmt_row(pu) + " " + fmt_row(py) + "\n")
    return out.getvalue()


def load_family(text: str, source: str = "<string>") -> SchedulingFamily:
    lines = text.splitlines()
    if not lines:
        raise ConfigError(f"{source}:1: empty family file")
    head = parse_header(lines[0], "gs-family v1", source, 1)
    try:
        idx, n_u, n_y = int(head["i"]), int(head["n_u"]), int(head["n_y"])
        dt = float(head["dt"])
        t0 = float(head.get("t0", 0.0))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{source}:1: bad or missing header field ({exc})") from None
    rows = []
    width = n_u * n_u + n_y * n_y
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split()
        if len(fields) != width:
            raise ConfigError(f"{source}:{no}: expected {width} entries, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise ConfigError(f"{source}:{no}: non-numeric entry") from None
    if not rows:
        raise ConfigError(f"{source}: no stamps")
    if "n" in head and int(head["n"]) != len(rows):
        raise ConfigError(f"{source}: header n={head['n']} but {len(rows)} stamps")
    data = np.array(rows)
    grid = t0 + dt * np.arange(len(rows))
    phi_u = data[:, : n_u * n_u].reshape(-1, n_u, n_u)
    phi_y = data[:, n_u * n_u:].reshape(-1, n_y, n_y)
    return SchedulingFamily(idx, grid, phi_u, phi_y)


# controllers ---------------------------------------------------------------

CONTROLLER_BLOCKS = ("A_c", "B_c", "C_c", "P", "Q_c", "S_c", "q_bar")


def dump_controller(sub) -> str:
    """Text block for a synthesized subcontroller."""
    cert = sub.certificate
    out = io.StringIO()
    out.write(f"controller i={sub.index} eps={FMT % cert.eps} beta={FMT % cert.beta}\n")
    write_matrix(out, "A_c", sub.a_c)
    write_matrix(out, "B_c", sub.b_c)
    write_matrix(out, "C_c", sub.k_gain)
    write_matrix(out, "P", cert.p_mat)
    write_matrix(out, "Q_c", cert.q_c)
    write_matrix(out, "S_c", cert.triple.s_mat)
    write_matrix(out, "q_bar", np.asarray(sub.q_bar)[None, :])
    return out.getvalue()


def load_controller(text: str, source: str = "<string>") -> dict:
    lines = _Lines(text, source)
    head = parse_header(lines.next(), "controller", source, lines.pos)
    out = {"index": int(head.get("i", 0)), "eps": float(head.get("eps", "nan")), "beta": float(head.get("beta", "nan"))}
    for name in CONTROLLER_BLOCKS:
        _, mat = lines.matrix(name)
        out[name] = mat
    return out


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None


def write_text(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


CSV_HEADER = "t,q1,q2,q3,qd1,qd2,qd3,e1,e2,e3,tau1,tau2,tau3,u1,u2,V,supply"


def dump_csv(columns: np.ndarray) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for row in columns:
        out.write(",".join("%.10g" % v for v in row) + "\n")
    return out.getvalue()
