"""Scenario documents (TOML) and the small expression language for data.

Expressions are parsed with :mod:`ast` and only a whitelist of node types,
names and functions is accepted::

    t, x, y, z (coordinates), pi
    sin cos exp sqrt abs min max, ramp(t, t0, t1), step(t, t0)

A value may also be a table ``{ table = [[t0, v0], [t1, v1], ...] }`` which
is linearly interpolated (held constant outside its range).
"""
from __future__ import annotations

import ast
import math
import re
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from .errors import ConfigurationError, ScenarioParseError
from .grid import GeometrySpec, build_two_block_grid
from .material import (ConductivityLaw, HeatCapacityLaw, MaterialSet, TransmissionLaw,
                       adhesive_tensor, gradient_tensor, isotropic_elastic_tensor,
                       validate_material)
from .mixity import MixityLaw
from .solvers import SolverSettings
from .stepper import InitialData, LoadCase, Scenario


def _ramp(t, t0, t1):
    return np.clip((t - t0) / (t1 - t0), 0.0, 1.0)


def _step(t, t0):
    return np.where(t >= t0, 1.0, 0.0)


_FUNCS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs,
    "min": np.minimum, "max": np.maximum, "ramp": _ramp, "step": _step,
}
_CONSTS = {"pi": math.pi}
_VARS = ("t", "x", "y", "z")
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
          ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


class Expression:
    """Compiled whitelisted expression, callable on time or coordinates."""

    def __init__(self, source: str):
        self.source = source
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ScenarioParseError(f"bad expression {source!r}: {exc.msg}")
        names = set()
        for node in ast.walk(tree):
            if not isinstance(node, _NODES):
                raise ScenarioParseError(
                    f"expression {source!r} uses unsupported syntax {type(node).__name__}")
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
                raise ScenarioParseError(f"expression {source!r}: only numeric constants")
            if isinstance(node, ast.Call):
                if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                    raise ScenarioParseError(f"expression {source!r}: unknown function")
                if node.keywords:
                    raise ScenarioParseError(f"expression {source!r}: keyword arguments")
            if isinstance(node, ast.Name):
                names.add(node.id)
        unknown = names - set(_FUNCS) - set(_CONSTS) - set(_VARS)
        if unknown:
            raise ScenarioParseError(f"expression {source!r}: unknown names {sorted(unknown)}")
        self.names = names
        self._code = compile(tree, "<expression>", "eval")

    def __call__(self, t=0.0, coords=None):
        env = dict(_FUNCS)
        env.update(_CONSTS)
        env["t"] = t
        if coords is not None:
            coords = np.atleast_2d(coords)
            for i, name in enumerate(("x", "y", "z")[: coords.shape[1]]):
                env[name] = coords[:, i]
        out = eval(self._code, {"__builtins__": {}}, env)
        if coords is not None:
            return np.broadcast_to(np.asarray(out, dtype=float), (coords.shape[0],)).copy()
        return float(out)

    def depends_on_space(self) -> bool:
        return bool(self.names & {"x", "y", "z"})


class Table:
    def __init__(self, samples):
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ScenarioParseError("table must be a list of [t, value] pairs")
        if np.any(np.diff(arr[:, 0]) <= 0):
            raise ScenarioParseError("table times must be strictly increasing")
        self.t, self.v = arr[:, 0], arr[:, 1]

    def __call__(self, t=0.0, coords=None):
        return float(np.interp(t, self.t, self.v))

    def depends_on_space(self):
        return False


def time_function(value, what: str):
    """Number, expression string or table -> callable of ``t``."""
    if isinstance(value, bool):
        raise ScenarioParseError(f"{what}: boolean is not a valid value")
    if isinstance(value, (int, float)):
        c = float(value)
        return lambda t, _c=c: _c
    if isinstance(value, str):
        expr = Expression(value)
        if expr.depends_on_space():
            raise ScenarioParseError(f"{what}: loads must not depend on position")
        return expr
    if isinstance(value, dict) and "table" in value:
        return Table(value["table"])
    raise ScenarioParseError(f"{what}: expected number, expression or table")


def space_field(value, what: str):
    """Number or expression of ``x, y, z`` -> constant or callable of coords."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        expr = Expression(value)
        return lambda coords, _e=expr: _e(0.0, coords)
    raise ScenarioParseError(f"{what}: expected number or expression")


def vector_field(values, dim, what):
    if values is None:
        return None
    if not isinstance(values, list) or len(values) != dim:
        raise ScenarioParseError(f"{what}: expected a list of {dim} components")
    comps = [space_field(v, what) for v in values]

    def f(coords):
        return np.column_stack([c(coords) if callable(c) else np.full(len(coords), c)
                                for c in comps])
    return f


def _get(table: dict, key: str, default=Any, section=""):
    if key in table:
        return table[key]
    if default is Any:
        raise ScenarioParseError(f"missing key {key!r} in [{section}]")
    return default


def _check_keys(table: dict, allowed: set, section: str):
    extra = set(table) - allowed
    if extra:
        raise ScenarioParseError(f"unknown keys {sorted(extra)} in [{section}]")


def _tensor4(mat: dict, key: str, dim: int, fallback=None):
    if key not in mat:
        return fallback
    arr = np.asarray(mat[key], dtype=float)
    if arr.shape != (dim,) * 4:
        raise ConfigurationError(f"{key} must have shape {(dim,) * 4}")
    return arr


def _material(mat: dict, dim: int, normal) -> tuple:
    _check_keys(mat, {"lame", "viscous_ratio", "length_scale", "hyper_viscous_ratio",
                      "thermal_coupling", "density", "adhesive", "heat_capacity",
                      "conductivity", "transmission", "strict", "elastic", "viscous"},
                "material")
    lame = tuple(_get(mat, "lame", [1.0, 1.0]))
    C = _tensor4(mat, "elastic", dim, isotropic_elastic_tensor(dim, *lame))
    D = _tensor4(mat, "viscous", dim, float(_get(mat, "viscous_ratio", 0.1)) * C)
    ell = float(_get(mat, "length_scale", 0.02))
    H = gradient_tensor(C, ell)
    G = float(_get(mat, "hyper_viscous_ratio", 0.1)) * H
    B = np.asarray(_get(mat, "thermal_coupling", 0.0), dtype=float)
    if B.ndim == 0:
        B = float(B) * np.eye(dim)
    adh = dict(_get(mat, "adhesive", {}))
    kn, kt = float(adh.get("kappa_n", 1.0)), float(adh.get("kappa_t", adh.get("kappa_n", 1.0)))
    hc = dict(_get(mat, "heat_capacity", {}))
    cond = dict(_get(mat, "conductivity", {}))
    trans = dict(_get(mat, "transmission", {}))
    try:
        m = MaterialSet(
            elastic=C, viscous=D, hyper_elastic=H, hyper_viscous=G, thermal_coupling=B,
            adhesive=adhesive_tensor(normal, kn, kt),
            density=float(_get(mat, "density", 0.0)),
            heat_capacity=HeatCapacityLaw(**hc),
            conductivity=ConductivityLaw(**cond),
            transmission=TransmissionLaw(**trans),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid material: {exc}")
    return m, bool(_get(mat, "strict", True)), kn, kt


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and validate a TOML scenario document.

    Raises
    ------
    ScenarioParseError
        Malformed TOML (with line/column) or malformed values.
    ConfigurationError
        Data violating a modelling assumption; the message names it.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
            msg = re.sub(r"\s*\(at line.*\)$", "", str(exc))
        raise ScenarioParseError(f"invalid TOML: {msg}", line, col) from exc

    _check_keys(doc, {"name", "geometry", "material", "mixity", "loads", "initial", "time",
                      "solver"}, "document")
    name = doc.get("name", name)
    geo = dict(_get(doc, "geometry", None, "document") or {})
    _check_keys(geo, {"dim", "extent", "heights", "nodes", "nodes_normal", "dirichlet",
                      "cone", "allow_floating"}, "geometry")
    dim = int(geo.get("dim", 2))
    allow_floating = bool(geo.pop("allow_floating", False))
    try:
        spec = GeometrySpec(**geo)
    except TypeError as exc:
        raise ScenarioParseError(f"[geometry]: {exc}")
    normal = -np.eye(dim)[dim - 1]

    m, strict, kn, kt = _material(dict(doc.get("material", {})), dim, normal)

    tdoc = dict(doc.get("time", {}))
    _check_keys(tdoc, {"horizon", "tau", "gamma", "coupling", "fixed_point_tol",
                       "fixed_point_max", "stop_when_debonded", "snapshot_stride",
                       "theta_floor"}, "time")
    gamma = float(tdoc.get("gamma", 5.0))
    report = validate_material(m, gamma)
    failures = report.failures
    if not strict:
        soft = {"heat capacity growth exponent omega > 6/5",
                "regularization exponent gamma > max(4, 2 omega/(omega-1))"}
        failures = [f for f in failures if f.name not in soft]
    if failures:
        raise ConfigurationError("material violates assumptions: " + "; ".join(
            f"{f.name} ({f.detail})" for f in failures))

    mix = dict(doc.get("mixity", {}))
    _check_keys(mix, {"a_I", "sensitivity", "epsilon", "a1_floor", "reference_length"}, "mixity")
    a_I = float(_get(mix, "a_I", section="mixity"))
    try:
        law = MixityLaw.from_adhesive(
            m.adhesive, normal, a_I=a_I,
            sensitivity=float(mix.get("sensitivity", 0.2)), epsilon=mix.get("epsilon"),
            a1_floor=mix.get("a1_floor"),
            reference_length=float(mix.get("reference_length", max(spec.extent))))
    except ValueError as exc:
        raise ConfigurationError(f"invalid mixity law: {exc}")

    ldoc = dict(doc.get("loads", {}))
    _check_keys(ldoc, {"body", "traction", "heat_flux"}, "loads")
    loads = LoadCase()
    for entry in ldoc.get("body", []):
        comps = [time_function(v, "body force") for v in _get(entry, "value", section="loads.body")]
        loads.body.append((entry.get("block", "both"), comps))
    for entry in ldoc.get("traction", []):
        comps = [time_function(v, "traction") for v in _get(entry, "value", section="loads.traction")]
        loads.traction.append((_get(entry, "face", section="loads.traction"), comps))
    horizon = float(_get(tdoc, "horizon", section="time"))
    for entry in ldoc.get("heat_flux", []):
        f = time_function(_get(entry, "value", section="loads.heat_flux"), "heat flux")
        probe = np.linspace(0.0, horizon, 1001)
        if isinstance(f, Table):
            probe = np.concatenate([probe, f.t[(f.t >= 0) & (f.t <= horizon)]])
        if min(f(float(t)) for t in probe) < 0:
            raise ConfigurationError(
                "boundary heat flux must satisfy g >= 0 (needed for temperature positivity)")
        loads.heat_flux.append((_get(entry, "face", section="loads.heat_flux"), f))

    idoc = dict(doc.get("initial", {}))
    _check_keys(idoc, {"displacement", "velocity", "z", "theta"}, "initial")
    initial = InitialData(
        displacement=vector_field(idoc.get("displacement"), dim, "initial displacement"),
        velocity=vector_field(idoc.get("velocity"), dim, "initial velocity"),
        z=space_field(idoc.get("z", 1.0), "initial z"),
        theta=space_field(idoc.get("theta", 0.0), "initial theta"),
    )
    if m.density == 0 and idoc.get("velocity") is not None:
        raise ConfigurationError("an initial velocity needs density > 0")

    sdoc = dict(doc.get("solver", {}))
    try:
        settings = SolverSettings(**sdoc)
    except TypeError as exc:
        raise ScenarioParseError(f"[solver]: {exc}")

    coupling = str(tdoc.get("coupling", "lagged")).replace("-", "_")
    scen = Scenario(
        geometry=spec, material=m, mixity=law, horizon=horizon,
        tau=float(_get(tdoc, "tau", section="time")), gamma=gamma, loads=loads,
        initial=initial, coupling=coupling,
        fixed_point_tol=float(tdoc.get("fixed_point_tol", 1e-12)),
        fixed_point_max=int(tdoc.get("fixed_point_max", 50)),
        settings=settings, allow_floating=allow_floating,
        stop_when_debonded=bool(tdoc.get("stop_when_debonded", False)),
        snapshot_stride=int(tdoc.get("snapshot_stride", 1)),
        theta_floor=float(tdoc.get("theta_floor", 0.0)), name=name,
    )
    scen.validate()
    # geometry checks (cones vs inertia, clamping) happen when the grid is built
    build_two_block_grid(spec, density=m.density, allow_floating=allow_floating)
    return scen


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), name=path.stem)


def reference_scenario(name: str) -> Scenario:
    """One of the bundled scenarios: peel, static, thermal, pull, shear, opening."""
    text = resources.files("thermodelam.scenarios").joinpath(f"{name}.toml").read_text()
    return parse_scenario(text, name=name)
