"""Scenario files: INI sections [plant], [controller], [trajectory], [scheduling], [sim].

Angles are in degrees. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, InvalidParameterError
from .plant import PlantModel
from .robot_sim.trajectory import DEFAULT_WAYPOINTS, Waypoints
from .synthesis import DEFAULT_POINTS_DEG, LqrWeights

SCHEMA = {
    "plant": {"lengths", "lengths_measured", "masses", "masses_measured", "damping", "kp"},
    "controller": {"points_deg", "q_lqr", "r_lqr", "unscheduled_index"},
    "trajectory": {"waypoints"},
    "scheduling": {"mode", "families", "rate_error"},
    "sim": {"dt", "horizon"},
}
MODES = ("none", "scalar", "matrix", "file")


@dataclass
class ScenarioConfig:
    plant: PlantModel = field(default_factory=PlantModel)
    points_deg: tuple = DEFAULT_POINTS_DEG
    weights: LqrWeights = field(default_factory=LqrWeights)
    weights_defaulted: bool = True
    unscheduled_index: int = 3
    waypoints: Waypoints = field(default_factory=Waypoints.default)
    mode: str = "matrix"
    family_files: tuple = ()
    rate_error: bool = True
    dt: float = 1e-3
    horizon: float = 12.0
    source: str = "<defaults>"

    @property
    def points_rad(self):
        return [np.deg2rad(p) for p in self.points_deg]


def _line_of(text: str, section: str, key: str) -> int:
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and line.split("=", 1)[0].strip() == key:
            return no
    return 0


def _floats(value: str, n: Optional[int], where: str):
    try:
        out = [float(v) for v in value.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{where}: expected comma-separated numbers, got {value!r}") from None
    if n is not None and len(out) != n:
        raise ConfigError(f"{where}: expected {n} numbers, got {len(out)}")
    return out


def _positive(vals, where, allow_zero=False):
    if any(not np.isfinite(v) or v < 0 or (v == 0 and not allow_zero) for v in vals):
        kind = "non-negative" if allow_zero else "positive"
        raise ConfigError(f"{where}: all entries must be {kind}, got {vals}")
    return vals


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    where = lambda s, k: f"{source}:{_line_of(text, s, k)}: [{s}] {k}"
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where(section, key)}: unknown key")

    cfg = ScenarioConfig(source=source)
    if parser.has_section("plant"):
        kw = {}
        for key in SCHEMA["plant"]:
            if key in parser["plant"]:
                kw[key] = _positive(
                    _floats(parser["plant"][key], 3, where("plant", key)), where("plant", key), key in ("damping", "kp")
                )
        try:
            cfg.plant = PlantModel(**kw)
        except InvalidParameterError as exc:
            raise ConfigError(f"{source}: {exc}") from None

    if parser.has_section("controller"):
        sec = parser["controller"]
        if "points_deg" in sec:
            pts = [p for p in sec["points_deg"].split(";") if p.strip()]
            if not pts:
                raise ConfigError(f"{where('controller', 'points_deg')}: no points")
            cfg.points_deg = tuple(tuple(_floats(p, 3, where("controller", "points_deg"))) for p in pts)
        if "q_lqr" in sec or "r_lqr" in sec:
            q_max = _positive(_floats(sec.get("q_lqr", "15, 15, 15, 10, 10, 10"), 6, where("controller", "q_lqr")), where("controller", "q_lqr"))
            r_max = _positive(_floats(sec.get("r_lqr", "25, 25"), 2, where("controller", "r_lqr")), where("controller", "r_lqr"))
            cfg.weights = LqrWeights.bryson(q_max, r_max)
            cfg.weights_defaulted = False
        if "unscheduled_index" in sec:
            try:
                cfg.unscheduled_index = int(sec["unscheduled_index"])
            except ValueError:
                raise ConfigError(f"{where('controller', 'unscheduled_index')}: expected an integer") from None
        if not 1 <= cfg.unscheduled_index <= len(cfg.points_deg):
            raise ConfigError(f"{where('controller', 'unscheduled_index')}: must be in 1..{len(cfg.points_deg)}")

    if parser.has_section("trajectory") and "waypoints" in parser["trajectory"]:
        rows = []
        w = where("trajectory", "waypoints")
        for item in parser["trajectory"]["waypoints"].split(";"):
            if not item.strip():
                continue
            if ":" not in item:
                raise ConfigError(f"{w}: expected 't: a1, a2, a3' entries separated by ';'")
            t, angles = item.split(":", 1)
            rows.append((_floats(t, 1, w)[0], tuple(_floats(angles, 3, w))))
        try:
            cfg.waypoints = Waypoints.from_degrees(rows)
        except InvalidParameterError as exc:
            raise ConfigError(f"{w}: {exc}") from None

    if parser.has_section("scheduling"):
        sec = parser["scheduling"]
        if "mode" in sec:
            mode = sec["mode"].strip().lower()
            if mode not in MODES:
                raise ConfigError(f"{where('scheduling', 'mode')}: must be one of {', '.join(MODES)}")
            cfg.mode = mode
        if "families" in sec:
            base = Path(source).parent if source not in ("<string>", "<defaults>") else Path(".")
            cfg.family_files = tuple(str(base / f.strip()) for f in sec["families"].split(",") if f.strip())
        if "rate_error" in sec:
            try:
                cfg.rate_error = sec.getboolean("rate_error")
            except ValueError:
                raise ConfigError(f"{where('scheduling', 'rate_error')}: expected true/false") from None
        if cfg.mode == "file" and not cfg.family_files:
            raise ConfigError(f"{source}: [scheduling] mode = file needs a families list")

    if parser.has_section("sim"):
        sec = parser["sim"]
        for key in ("dt", "horizon"):
            if key in sec:
                val = _floats(sec[key], 1, where("sim", key))[0]
                if not val > 0:
                    raise ConfigError(f"{where('sim', key)}: must be positive, got {val}")
                setattr(cfg, key, val)
    return cfg


def load_scenario(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    return parse_scenario(text, str(path))


def default_scenario_text() -> str:
    way = "; ".join(f"{t:g}: {', '.join(f'{a:g}' for a in ang)}" for t, ang in DEFAULT_WAYPOINTS)
    pts = "; ".join(", ".join(f"{a:g}" for a in p) for p in DEFAULT_POINTS_DEG)
    return f"""[plant]
lengths = 1.10, 0.60, 0.50
lengths_measured = 1.21, 0.54, 0.55
masses = 2.00, 0.90, 0.30
masses_measured = 2.40, 0.72, 0.36
damping = 5.00, 2.50, 2.50
kp = 5, 35, 35

[controller]
points_deg = {pts}
# Bryson maxima: Q_LQR = diag(q_lqr)^-2, R_LQR = diag(r_lqr)^-2
q_lqr = 15, 15, 15, 10, 10, 10
r_lqr = 25, 25
unscheduled_index = 3

[trajectory]
waypoints = {way}

[scheduling]
mode = matrix
rate_error = true

[sim]
dt = 0.001
horizon = 12
"""
