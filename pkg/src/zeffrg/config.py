"""Strict YAML run configuration.

Schema (keys not listed here are rejected)::

    model:
      z: {polynomial: [1.0, 0.0, 1.0]}        # or {named: z-quadratic, params: {z0: 1, g: 1}}
      v: {named: harmonic, params: {m2: 1.0}}
      hbar: 1.0                               # default 1.0, must be > 0
    grid: {phi_min: -1.0, phi_max: 1.0, n: 11}
    methods: [derivative-expansion, erg-oneloop]
    quadrature: {rel_tol: 1.0e-9}             # optional; ptrg-/erg-quadrature
    flow:                                     # required by ptrg-flow / erg-flow
      k_uv: 1000.0
      k_ir: 0.001                             # default 0.0
      mode: frozen-oneloop                    # or running-z-frozen-v
      rel_tol: 1.0e-8                         # default 1e-8
      abs_tol: 1.0e-10                        # default 1e-10
      max_steps: 100000
      snapshots: 11
    discrete:                                 # required by erg-discrete
      phi0: 0.0
      n_modes: 100000
      epsilon: 0.001
      include_constant_term: false
      mode_frequency: fourier-periodic        # or lattice-sine
      stride: 1000                            # every stride-th Z_n is written
    shell:                                    # required by shell
      phi0: 1.0
      k_c: 10.0
      dk: 0.01
      q: [0.0, 0.005, 0.01]                   # explicit q values
    oracle:                                   # required by oracle
      phi0: 0.0
      n_modes: 4                              # Omega = 2 pi m / T, m = 1..n_modes
      window: 0.1                             # Z Omega_max^2 = window * V''
      epsilons: [0.1, 0.05]
      slices: [512, 1024, 2048]
      fit_degree: 1
    output:
      directory: out
      formats: [csv, json]
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import yaml

from .flows import FOURIER_PERIODIC, FROZEN_ONELOOP, LATTICE_SINE, RUNNING_Z
from .model import FieldGrid, FunctionSpec, ScalarFieldModel

METHODS = (
    "derivative-expansion", "erg-oneloop", "ptrg-quadrature", "erg-quadrature",
    "ptrg-flow", "erg-flow", "erg-discrete", "shell", "oracle",
)
FORMATS = ("csv", "json")

# which sub-config each method needs
_REQUIRES = {"ptrg-flow": "flow", "erg-flow": "flow", "erg-discrete": "discrete",
             "shell": "shell", "oracle": "oracle"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureSection:
    rel_tol: float = 1e-9


@dataclass(frozen=True)
class FlowSection:
    k_uv: float
    k_ir: float = 0.0
    mode: str = FROZEN_ONELOOP
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 100_000
    snapshots: int = 11


@dataclass(frozen=True)
class DiscreteSection:
    phi0: float
    n_modes: int
    epsilon: float
    include_constant_term: bool = False
    mode_frequency: str = FOURIER_PERIODIC
    stride: int = 1


@dataclass(frozen=True)
class ShellSection:
    phi0: float
    k_c: float
    dk: float
    q: tuple = ()


@dataclass(frozen=True)
class OracleSection:
    phi0: float
    n_modes: int = 4
    window: float = 0.1
    epsilons: tuple = (0.1, 0.05)
    slices: tuple = (512, 1024, 2048)
    fit_degree: int = 1


@dataclass(frozen=True)
class RunConfig:
    model: ScalarFieldModel
    grid: FieldGrid
    methods: tuple
    quadrature: QuadratureSection = QuadratureSection()
    flow: FlowSection | None = None
    discrete: DiscreteSection | None = None
    shell: ShellSection | None = None
    oracle: OracleSection | None = None
    output_directory: str = "out"
    formats: tuple = FORMATS

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "model": self.model.to_dict(),
            "grid": {"phi_min": self.grid.phi_min, "phi_max": self.grid.phi_max, "n": self.grid.n},
            "methods": list(self.methods),
            "quadrature": dataclasses.asdict(self.quadrature),
        }
        for name in ("flow", "discrete", "shell", "oracle"):
            sec = getattr(self, name)
            if sec is not None:
                d[name] = {k: list(v) if isinstance(v, tuple) else v
                           for k, v in dataclasses.asdict(sec).items()}
        d["output"] = {"directory": self.output_directory, "formats": list(self.formats)}
        return d

    def tolerances(self) -> dict:
        tol = {"quadrature_rel_tol": self.quadrature.rel_tol}
        if self.flow is not None:
            tol["flow_rel_tol"] = self.flow.rel_tol
            tol["flow_abs_tol"] = self.flow.abs_tol
        return tol

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def _check_keys(data, allowed, where):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where} must be a mapping")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key: {key}")


def _num(data, key, where, default=None, kind=float):
    if key not in data:
        if default is None:
            raise ConfigError(f"missing key: {where}.{key}")
        return default
    val = data[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {val!r}")
    if kind is int:
        if int(val) != val:
            raise ConfigError(f"{where}.{key} must be an integer")
        return int(val)
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(f"{where}.{key} must be finite")
    return val


def _section(cls, data, where, kinds):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    _check_keys(data, fields, where)
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            if f.default is dataclasses.MISSING:
                raise ConfigError(f"missing key: {where}.{name}")
            continue
        kind = kinds.get(name, float)
        val = data[name]
        if kind is bool:
            if not isinstance(val, bool):
                raise ConfigError(f"{where}.{name} must be true or false")
        elif kind is str:
            if not isinstance(val, str):
                raise ConfigError(f"{where}.{name} must be a string")
        elif kind in ("floats", "ints"):
            if not isinstance(val, list):
                raise ConfigError(f"{where}.{name} must be a list")
            k = float if kind == "floats" else int
            val = tuple(_num({"x": x}, "x", f"{where}.{name}[]", kind=k) for x in val)
        else:
            val = _num(data, name, where, kind=kind)
        kwargs[name] = val
    return cls(**kwargs)


def config_from_dict(data: Mapping) -> RunConfig:
    top = ("model", "grid", "methods", "quadrature", "flow", "discrete", "shell", "oracle", "output")
    _check_keys(data, top, "config")
    for key in ("model", "grid", "methods"):
        if key not in data:
            raise ConfigError(f"missing key: {key}")

    m = data["model"]
    _check_keys(m, ("z", "v", "hbar"), "model")
    try:
        z = FunctionSpec.from_dict(m.get("z", {}))
        v = FunctionSpec.from_dict(m.get("v", {}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    hbar = _num(m, "hbar", "model", default=1.0)
    if hbar <= 0:
        raise ConfigError(f"constraint violation: model.hbar must be > 0, got {hbar}")
    model = ScalarFieldModel(z, v, hbar)

    g = data["grid"]
    _check_keys(g, ("phi_min", "phi_max", "n"), "grid")
    try:
        grid = FieldGrid(_num(g, "phi_min", "grid"), _num(g, "phi_max", "grid"),
                         _num(g, "n", "grid", kind=int))
    except ValueError as exc:
        raise ConfigError(f"constraint violation: {exc}") from exc

    methods = data["methods"]
    if not isinstance(methods, list) or not methods:
        raise ConfigError("methods must be a non-empty list")
    for name in methods:
        if name not in METHODS:
            raise ConfigError(f"unknown method: {name}")
    if len(set(methods)) != len(methods):
        raise ConfigError("duplicate method")

    secs: dict[str, Any] = {}
    secs["quadrature"] = _section(QuadratureSection, data.get("quadrature") or {}, "quadrature", {})
    specs = {
        "flow": (FlowSection, {"mode": str, "max_steps": int, "snapshots": int}),
        "discrete": (DiscreteSection, {"n_modes": int, "include_constant_term": bool,
                                       "mode_frequency": str, "stride": int}),
        "shell": (ShellSection, {"q": "floats"}),
        "oracle": (OracleSection, {"n_modes": int, "epsilons": "floats", "slices": "ints",
                                   "fit_degree": int}),
    }
    for name, (cls, kinds) in specs.items():
        if name in data:
            secs[name] = _section(cls, data[name], name, kinds)
    for meth in methods:
        need = _REQUIRES.get(meth)
        if need and need not in secs:
            raise ConfigError(f"method {meth} needs a '{need}' section")
    _validate_sections(secs)

    out = data.get("output") or {}
    _check_keys(out, ("directory", "formats"), "output")
    directory = out.get("directory", "out")
    formats = out.get("formats", list(FORMATS))
    if not isinstance(directory, str) or not isinstance(formats, list) or not formats:
        raise ConfigError("output.directory must be a string and output.formats a non-empty list")
    for f in formats:
        if f not in FORMATS:
            raise ConfigError(f"unknown output format: {f}")

    return RunConfig(model=model, grid=grid, methods=tuple(methods),
                     output_directory=directory, formats=tuple(formats), **secs)


def _validate_sections(secs):
    def violation(msg):
        raise ConfigError(f"constraint violation: {msg}")

    if not 0 < secs["quadrature"].rel_tol <= 1e-2:
        violation("quadrature.rel_tol must lie in (0, 1e-2]")
    fl = secs.get("flow")
    if fl is not None:
        if fl.mode not in (FROZEN_ONELOOP, RUNNING_Z):
            violation(f"flow.mode {fl.mode!r}")
        if not (fl.k_uv > 0 and 0 <= fl.k_ir < fl.k_uv):
            violation("need 0 <= flow.k_ir < flow.k_uv")
        if not (0 < fl.rel_tol <= 1e-2 and 0 < fl.abs_tol <= 1e-2):
            violation("flow tolerances must lie in (0, 1e-2]")
        if fl.max_steps < 1 or fl.snapshots < 2:
            violation("flow.max_steps >= 1 and flow.snapshots >= 2")
    d = secs.get("discrete")
    if d is not None:
        if d.n_modes < 4 or d.epsilon <= 0 or d.stride < 1:
            violation("discrete needs n_modes >= 4, epsilon > 0, stride >= 1")
        if d.mode_frequency not in (FOURIER_PERIODIC, LATTICE_SINE):
            violation(f"discrete.mode_frequency {d.mode_frequency!r}")
    s = secs.get("shell")
    if s is not None:
        if not (s.k_c > 0 and 0 < s.dk <= s.k_c):
            violation("shell needs 0 < dk <= k_c")
        if not s.q:
            violation("shell.q must list at least one value")
    o = secs.get("oracle")
    if o is not None:
        if o.n_modes < o.fit_degree + 2 or not 0 < o.window <= 0.1:
            violation("oracle needs n_modes >= fit_degree + 2 and window in (0, 0.1]")
        if o.fit_degree not in (1, 2):
            violation("oracle.fit_degree must be 1 or 2")
        if not o.epsilons or min(o.epsilons) <= 0:
            violation("oracle.epsilons must be positive")
        if not o.slices or min(o.slices) < 8:
            violation("oracle.slices must be >= 8")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML run configuration."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"syntax error{where}: {problem}") from exc
    if not isinstance(data, Mapping):
        raise ConfigError("config must be a mapping at top level")
    return config_from_dict(data)
