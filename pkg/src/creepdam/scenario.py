"""Scenario configuration: parsing, validation and construction of problems.

A scenario is a small INI file with the sections ``[mesh]``, ``[material]``,
``[initial]``, ``[boundary]`` and ``[run]``. Every key is documented in
``SCHEMA`` below; unknown keys are rejected so that typos do not silently
fall back to defaults. Quantities are nondimensional: stresses in units of a
reference stress, time in units of ``1 / (B * sigma_ref**m)``.
"""
from __future__ import annotations

import configparser
import copy
import math
import os
from dataclasses import dataclass

import numpy as np

from . import fem
from .driver import Problem, SimConfig
from .errors import ConfigError, CreepDamError
from .geometry import (Mesh, Polyline, dist_to_polyline, notched_rect_mesh, read_mesh,
                       structured_rect_mesh)
from .material import Coupling, MaterialParams


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _points(text):
    pts = [_floats(chunk) for chunk in text.split(",") if chunk.strip()]
    if any(len(p) != 2 for p in pts):
        raise ValueError("points are written as 'x y, x y, ...'")
    return pts


def _choice(*options):
    def conv(text):
        value = text.strip().lower()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value
    return conv


# section -> key -> (converter, default); default None means "required when used"
SCHEMA = {
    "mesh": {
        "kind": (_choice("rect", "notch", "triangle", "file"), "rect"),
        "width": (float, 2.0),
        "height": (float, 1.0),
        "nx": (int, 16),
        "ny": (int, 8),
        "notch_depth": (float, 0.3),
        "notch_angle": (float, 60.0),
        "path": (str, None),
    },
    "material": {
        "e": (float, 1000.0),
        "nu": (float, 0.3),
        "a": (float, 0.0),
        "n": (float, 1.0),
        "b": (float, 1.0),
        "m": (float, 2.0),
        "qd": (float, 1.0),
        "omega_crit": (float, 0.99),
        "coupling": (_choice("fully", "partly"), "fully"),
    },
    "initial": {
        "kind": (_choice("uniform", "band", "gaussian", "file"), "uniform"),
        "value": (float, 0.0),
        "polyline": (_points, None),
        "h": (float, None),
        "amplitude": (float, 0.2),
        "center": (_floats, None),
        "radius": (float, 0.2),
        "path": (str, None),
    },
    "boundary": {
        "kind": (_choice("uniaxial", "grips", "affine"), "uniaxial"),
        "stretch": (float, 1e-3),
        "stretch_start": (float, None),
        "end": (_floats, None),
        "start": (_floats, None),
        "ramp_time": (float, 0.0),
        "body_load": (_floats, [0.0, 0.0]),
    },
    "run": {
        "t_end": (float, 10.0),
        "dt_init": (float, 1e-3),
        "dt_min": (float, 1e-14),
        "dt_max": (float, 0.05),
        "max_domega": (float, 0.01),
        "growth": (float, 1.5),
        "method": (_choice("rk4", "euler"), "rk4"),
        "picard_tol": (float, 1e-10),
        "picard_max_iters": (int, 50),
        "p": (float, 4.0),
        "beta1": (float, 0.05),
        "beta2": (float, 100.0),
        "damage_ceiling": (float, None),
        "max_steps": (int, 200_000),
        "snapshot_every": (int, 10),
    },
}

SWEEP_ALIASES = {"h": "initial.h", "nx": "mesh.nx", "mesh_size": "mesh.nx"}

BUILTIN = {
    "uniaxial": """
# One triangle under a constant uniaxial stress of 1; partly coupled so the
# stress stays constant and the damage history has a closed form (t* = 0.5).
[mesh]
kind = triangle
[material]
E = 1000
nu = 0.3
A = 0
B = 1
m = 2
qd = 1
omega_crit = 0.999999
coupling = partly
[initial]
kind = uniform
value = 0
[boundary]
kind = uniaxial
stretch = 0.001
[run]
t_end = 1.0
dt_init = 0.01
""",
    "band": """
# Damage concentrated near a straight internal curve of length L = 1, tension
# across the curve (0.1 % of the specimen height).
[mesh]
kind = rect
width = 2
height = 1
nx = 64
ny = 32
[material]
E = 1000
nu = 0.3
A = 0
B = 1
m = 2
qd = 0.5
omega_crit = 0.99
coupling = fully
[initial]
kind = band
polyline = 0.5 0.5, 1.5 0.5
h = 0.1
[boundary]
kind = uniaxial
stretch = 0.001
[run]
t_end = 20
""",
    "notch": """
# V-notched specimen pulled between grips; undamaged initially.
[mesh]
kind = notch
width = 2
height = 1
nx = 16
ny = 8
notch_depth = 0.3
notch_angle = 60
[material]
E = 1000
nu = 0.3
A = 0
B = 1
m = 2
qd = 2
omega_crit = 0.99
coupling = fully
[initial]
kind = uniform
value = 0
[boundary]
kind = grips
stretch = 0.001
[run]
t_end = 20
""",
    "smooth": """
# Same specimen and loading without the notch, smooth initial damage bump.
[mesh]
kind = rect
width = 2
height = 1
nx = 16
ny = 8
[material]
E = 1000
nu = 0.3
A = 0
B = 1
m = 2
qd = 2
omega_crit = 0.99
coupling = fully
[initial]
kind = gaussian
amplitude = 0.05
center = 1.0 0.5
radius = 0.2
[boundary]
kind = grips
stretch = 0.001
[run]
t_end = 20
""",
}


BUILTIN["counterexample"] = BUILTIN["band"]


def _raw_from_text(text: str, source: str) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return {sec: dict(cp[sec]) for sec in cp.sections()}


@dataclass
class Scenario:
    """Parsed scenario: validated values per section plus the raw text values."""

    name: str
    raw: dict
    values: dict

    @classmethod
    def from_text(cls, text: str, name: str = "<string>", base_dir: str = ".") -> "Scenario":
        raw = _raw_from_text(text, name)
        raw.setdefault("_meta", {})["base_dir"] = base_dir
        return cls(name, raw, _validate(raw))

    @classmethod
    def load(cls, source: str) -> "Scenario":
        """Load a config file, or a built-in scenario by name."""
        if os.path.isfile(source):
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
            return cls.from_text(text, os.path.splitext(os.path.basename(source))[0],
                                 os.path.dirname(os.path.abspath(source)))
        if source in BUILTIN:
            return cls.from_text(BUILTIN[source], source)
        raise ConfigError(f"{source}: no such config file or built-in scenario "
                          f"({', '.join(sorted(BUILTIN))})")

    def with_value(self, key: str, value) -> "Scenario":
        """Copy with ``section.key`` set to ``value``; ``mesh.nx`` also rescales ``ny``."""
        key = SWEEP_ALIASES.get(key, key)
        if "." not in key:
            raise ConfigError(f"{key}: expected 'section.key'")
        section, name = key.split(".", 1)
        if section not in SCHEMA or name.lower() not in SCHEMA[section]:
            raise ConfigError(f"{key}: unknown key")
        raw = copy.deepcopy(self.raw)
        raw.setdefault(section, {})
        if key == "mesh.nx":
            nx_old = self.values["mesh"]["nx"]
            ny_old = self.values["mesh"]["ny"]
            nx_new = int(round(float(value)))
            raw["mesh"]["ny"] = str(max(1, int(round(ny_old * nx_new / nx_old))))
            value = nx_new
        if isinstance(value, float) and SCHEMA[section][name.lower()][0] is int:
            if not value.is_integer():
                raise ConfigError(f"{key}: expected an integer, got {value!r}")
            value = int(value)
        raw[section][name.lower()] = repr(value) if isinstance(value, float) else str(value)
        return Scenario(self.name, raw, _validate(raw))

    @property
    def snapshot_every(self) -> int:
        return self.values["run"]["snapshot_every"]

    def to_problem(self) -> Problem:
        return build_problem(self.values)


def _validate(raw: dict) -> dict:
    unknown = set(raw) - set(SCHEMA) - {"_meta"}
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    values = {"_meta": raw.get("_meta", {"base_dir": "."})}
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        out = {}
        for key in given:
            if key not in keys:
                raise ConfigError(f"{section}.{key}: unknown key")
        for key, (conv, default) in keys.items():
            if key in given:
                try:
                    out[key] = conv(given[key])
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"{section}.{key}: {exc} (got {given[key]!r})") from None
                if isinstance(out[key], float) and not math.isfinite(out[key]):
                    raise ConfigError(f"{section}.{key}: must be finite")
            else:
                out[key] = default
        values[section] = out
    # build the typed objects once so that errors surface at load time
    try:
        _material(values)
        _sim_config(values)
    except CreepDamError as exc:
        raise ConfigError(str(exc)) from None
    _check_initial(values)
    _check_boundary(values)
    return values


def _material(values) -> MaterialParams:
    m = values["material"]
    try:
        return MaterialParams(E=m["e"], nu=m["nu"], A=m["a"], n=m["n"], B=m["b"], m=m["m"],
                              qd=m["qd"], omega_crit=m["omega_crit"],
                              coupling=Coupling.parse(m["coupling"]))
    except CreepDamError as exc:
        raise ConfigError(f"material: {exc}") from None


def _sim_config(values) -> SimConfig:
    r = values["run"]
    if r["t_end"] <= 0:
        raise ConfigError("run.t_end: must be positive")
    if r["snapshot_every"] < 1:
        raise ConfigError("run.snapshot_every: must be >= 1")
    try:
        cfg = SimConfig(dt_init=r["dt_init"], dt_min=r["dt_min"], dt_max=r["dt_max"],
                        max_domega=r["max_domega"], growth=r["growth"], method=r["method"],
                        picard_tol=r["picard_tol"], picard_max_iters=r["picard_max_iters"],
                        p=r["p"], beta1=r["beta1"], beta2=r["beta2"],
                        damage_ceiling=r["damage_ceiling"], max_steps=r["max_steps"])
        cfg.evolve_config(_material(values))
    except CreepDamError as exc:
        raise ConfigError(f"run: {exc}") from None
    return cfg


def _resolve(values, path):
    base = values["_meta"].get("base_dir", ".")
    return path if os.path.isabs(path) else os.path.join(base, path)


def _check_initial(values):
    ini = values["initial"]
    if ini["kind"] == "uniform" and not 0.0 <= ini["value"] < 1.0:
        raise ConfigError("initial.value: must lie in [0, 1)")
    if ini["kind"] == "band":
        if ini["polyline"] is None:
            raise ConfigError("initial.polyline: required for a band")
        if ini["h"] is None or ini["h"] <= 0:
            raise ConfigError("initial.h: band width must be positive")
        try:
            Polyline(ini["polyline"])
        except CreepDamError as exc:
            raise ConfigError(f"initial.polyline: {exc}") from None
    if ini["kind"] == "gaussian":
        if ini["center"] is None or len(ini["center"]) != 2:
            raise ConfigError("initial.center: expected 'x y'")
        if not 0.0 <= ini["amplitude"] < 1.0:
            raise ConfigError("initial.amplitude: must lie in [0, 1)")
        if ini["radius"] <= 0:
            raise ConfigError("initial.radius: must be positive")
    if ini["kind"] == "file":
        if not ini["path"]:
            raise ConfigError("initial.path: required for kind = file")
        if not os.path.isfile(_resolve(values, ini["path"])):
            raise ConfigError(f"initial.path: file {ini['path']!r} not found")
    mesh = values["mesh"]
    if mesh["kind"] == "file":
        if not mesh["path"]:
            raise ConfigError("mesh.path: required for kind = file")
        if not os.path.isfile(_resolve(values, mesh["path"])):
            raise ConfigError(f"mesh.path: file {mesh['path']!r} not found")
    elif mesh["kind"] in ("rect", "notch"):
        if mesh["nx"] < 1 or mesh["ny"] < 1:
            raise ConfigError("mesh.nx: grid divisions must be >= 1")
        if mesh["width"] <= 0 or mesh["height"] <= 0:
            raise ConfigError("mesh.width: sides must be positive")


def _check_boundary(values):
    bnd = values["boundary"]
    if bnd["kind"] == "affine":
        if bnd["end"] is None or len(bnd["end"]) != 6:
            raise ConfigError("boundary.end: expected six coefficients 'a b c d e f' "
                              "for ux = a x + b y + c, uy = d x + e y + f")
        if bnd["start"] is not None and len(bnd["start"]) != 6:
            raise ConfigError("boundary.start: expected six coefficients")
    if bnd["ramp_time"] < 0:
        raise ConfigError("boundary.ramp_time: must be non-negative")
    if len(bnd["body_load"]) != 2:
        raise ConfigError("boundary.body_load: expected 'qx qy'")


def build_mesh(values) -> Mesh:
    m = values["mesh"]
    if m["kind"] == "rect":
        return structured_rect_mesh(m["width"], m["height"], m["nx"], m["ny"])
    if m["kind"] == "notch":
        return notched_rect_mesh(m["width"], m["height"], m["notch_depth"], m["notch_angle"],
                                 m["nx"], m["ny"])
    if m["kind"] == "triangle":
        return Mesh.from_arrays([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])
    return read_mesh(_resolve(values, m["path"]))


def build_band_damage(mesh: Mesh, line: Polyline, h: float) -> np.ndarray:
    """Nodal damage ``max(0, (h - dist(x, line)) / (2 h))``; values in ``[0, 1/2]``."""
    if h <= 0:
        raise ConfigError("band width h must be positive")
    return np.maximum(0.0, (h - dist_to_polyline(mesh.nodes, line)) / (2.0 * h))


def build_initial_damage(mesh: Mesh, values) -> np.ndarray:
    ini = values["initial"]
    if ini["kind"] == "uniform":
        return np.full(mesh.n_nodes, ini["value"])
    if ini["kind"] == "band":
        return build_band_damage(mesh, Polyline(ini["polyline"]), ini["h"])
    if ini["kind"] == "gaussian":
        r2 = np.sum((mesh.nodes - np.asarray(ini["center"])) ** 2, axis=1)
        return ini["amplitude"] * np.exp(-0.5 * r2 / ini["radius"] ** 2)
    data = np.loadtxt(_resolve(values, ini["path"]), dtype=float, ndmin=1)
    if data.shape != (mesh.n_nodes,):
        raise ConfigError(f"initial.path: expected {mesh.n_nodes} nodal values, got {data.size}")
    if np.any(data < 0) or np.any(data >= 1):
        raise ConfigError("initial.path: damage values must lie in [0, 1)")
    return data


def boundary_pattern(mesh: Mesh, kind: str, stretch: float, nu: float, coeffs=None) -> np.ndarray:
    """Displacements of ``mesh.boundary_nodes`` for one loading pattern.

    ``uniaxial``: ``u = (-nu e (x - xc), e (y - ymin))``, a uniform uniaxial
    stress state. ``grips``: the top edge moves up by ``e * height``, the
    left and right edges follow linearly in ``y``, every other boundary node
    (bottom edge, notch faces) is held fixed. ``affine``: ``coeffs`` gives
    ``ux = a x + b y + c``, ``uy = d x + e y + f``.
    """
    x = mesh.nodes[mesh.boundary_nodes]
    lo, hi = mesh.nodes.min(axis=0), mesh.nodes.max(axis=0)
    if kind == "uniaxial":
        xc = 0.5 * (lo[0] + hi[0])
        return np.column_stack([-nu * stretch * (x[:, 0] - xc), stretch * (x[:, 1] - lo[1])])
    if kind == "grips":
        tol = 1e-9 * max(1.0, float(np.max(hi - lo)))
        out = np.zeros_like(x)
        side = (np.abs(x[:, 0] - lo[0]) < tol) | (np.abs(x[:, 0] - hi[0]) < tol)
        out[side, 1] = stretch * (x[side, 1] - lo[1])
        top = np.abs(x[:, 1] - hi[1]) < tol
        out[top, 1] = stretch * (hi[1] - lo[1])
        return out
    a, b, c, d, e, f = coeffs
    return fem.affine_dirichlet(mesh, [[a, b], [d, e]], [c, f])


@dataclass(frozen=True)
class BlendSchedule:
    """Boundary displacements blended linearly in time from ``start`` to ``end``."""

    start: np.ndarray
    end: np.ndarray
    ramp_time: float = 0.0

    def __call__(self, t: float) -> np.ndarray:
        if self.ramp_time <= 0:
            return self.end
        s = min(max(t / self.ramp_time, 0.0), 1.0)
        return self.start + s * (self.end - self.start)


def build_schedule(mesh: Mesh, values) -> BlendSchedule:
    bnd = values["boundary"]
    nu = values["material"]["nu"]
    if bnd["kind"] == "affine":
        end = boundary_pattern(mesh, "affine", 0.0, nu, bnd["end"])
        start = end if bnd["start"] is None else boundary_pattern(mesh, "affine", 0.0, nu,
                                                                  bnd["start"])
    else:
        end = boundary_pattern(mesh, bnd["kind"], bnd["stretch"], nu)
        s0 = bnd["stretch"] if bnd["stretch_start"] is None else bnd["stretch_start"]
        start = boundary_pattern(mesh, bnd["kind"], s0, nu)
    return BlendSchedule(start, end, bnd["ramp_time"])


def build_problem(values) -> Problem:
    try:
        mesh = build_mesh(values)
    except CreepDamError as exc:
        raise ConfigError(f"mesh: {exc}") from None
    params = _material(values)
    omega0 = build_initial_damage(mesh, values)
    schedule = build_schedule(mesh, values)
    q = values["boundary"]["body_load"]
    load = None if q == [0.0, 0.0] else np.tile(np.asarray(q, float), (mesh.n_nodes, 1))
    return Problem(mesh, params, omega0, schedule, values["run"]["t_end"], _sim_config(values),
                   load=load)


@dataclass(frozen=True)
class ScenarioFactory:
    """Picklable ``value -> Problem`` map sweeping one scenario key."""

    scenario: Scenario
    key: str

    def __call__(self, value: float) -> Problem:
        return self.scenario.with_value(self.key, value).to_problem()
