"""Run configuration: JSON schema, validation with field paths, presets.

A configuration is a nested dict with the sections below; every key is
optional in a file and missing keys take the defaults in :data:`DEFAULTS`.

``domain``      ``nx`` (cells per side), ``lx`` (side length)
``params``      ``mu``, ``lam``, ``gamma``, ``eta``, ``sigma0``, ``sigmas`` (list)
``solver``      ``dt``, ``t_end``, ``scheme``, ``boundary_mode``, ``theta``
``noise``       ``seed``, ``w0_modes``, ``jump_rate``, ``jump_amplitude``
``initial``     ``preset`` plus preset options (see :data:`PRESETS`)
``boundary``    ``preset`` (``initial``, ``vertical`` or ``file``) and ``path``
``output``      ``dir``, ``snapshot_every``, ``record_every``

The config hash is the SHA-256 of the canonical JSON of every section
except ``output``, so the same run written to two directories carries the
same hash.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import DirectorField3, Domain, Params, VectorField2
from .noise import STREAM_INITIAL, make_rng
from .solver import BOUNDARY_MODES, SCHEMES, SolverConfig

PRESETS = ("equilibrium", "taylor-vortex", "random-smooth", "snapshot", "anticipating")

DEFAULTS = {
    "domain": {"nx": 32, "lx": 1.0},
    "params": {"mu": 1.0, "lam": 1.0, "gamma": 1.0, "eta": 1.0, "sigma0": 0.0, "sigmas": []},
    "solver": {"dt": 1e-3, "t_end": 0.1, "scheme": "semi-implicit", "boundary_mode": "fixed", "theta": 1.0},
    "noise": {"seed": 0, "w0_modes": 4, "jump_rate": 0.0, "jump_amplitude": 0.1},
    "initial": {
        "preset": "taylor-vortex",
        "amplitude": 1.0,
        "tilt": 0.5,
        "director": [0.0, 0.0, 1.0],
        "modes": 3,
        "velocity_path": None,
        "director_path": None,
        "t1": 0.05,
        "channel": 1,
        "terms": [["linear", 1.0]],
    },
    "boundary": {"preset": "initial", "path": None},
    "output": {"dir": "out", "snapshot_every": 0, "record_every": 1},
}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _merge(base: dict, over: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        path = f"{prefix}{k}"
        if k not in base:
            raise ConfigError(path, "unknown field")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(path, "expected an object")
            out[k] = _merge(base[k], v, path + ".")
        else:
            out[k] = v
    return out


def _num(cfg, path, positive=False, nonneg=False, integer=False):
    sec, key = path.split(".")
    v = cfg[sec][key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(path, "expected an integer")
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    if positive and not v > 0:
        raise ConfigError(path, "must be positive")
    if nonneg and v < 0:
        raise ConfigError(path, "must be non-negative")
    return int(v) if integer else float(v)


def validate(cfg: dict) -> dict:
    """Type- and range-check a merged config; returns a normalised copy."""
    c = copy.deepcopy(cfg)
    c["domain"]["nx"] = _num(c, "domain.nx", positive=True, integer=True)
    if c["domain"]["nx"] < 4:
        raise ConfigError("domain.nx", "must be at least 4")
    c["domain"]["lx"] = _num(c, "domain.lx", positive=True)
    for k in ("mu", "lam", "gamma", "eta"):
        c["params"][k] = _num(c, f"params.{k}", positive=True)
    c["params"]["sigma0"] = _num(c, "params.sigma0", nonneg=True)
    sig = c["params"]["sigmas"]
    if not isinstance(sig, list):
        raise ConfigError("params.sigmas", "expected a list")
    for i, s in enumerate(sig):
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s):
            raise ConfigError(f"params.sigmas[{i}]", f"expected a finite number, got {s!r}")
    c["params"]["sigmas"] = [float(s) for s in sig]
    c["solver"]["dt"] = _num(c, "solver.dt", positive=True)
    c["solver"]["t_end"] = _num(c, "solver.t_end", positive=True)
    c["solver"]["theta"] = _num(c, "solver.theta", nonneg=True)
    if c["solver"]["t_end"] < c["solver"]["dt"]:
        raise ConfigError("solver.t_end", "must be at least solver.dt")
    if c["solver"]["scheme"] not in SCHEMES:
        raise ConfigError("solver.scheme", f"must be one of {SCHEMES}")
    if c["solver"]["boundary_mode"] not in BOUNDARY_MODES:
        raise ConfigError("solver.boundary_mode", f"must be one of {BOUNDARY_MODES}")
    if c["solver"]["theta"] > 1:
        raise ConfigError("solver.theta", "must lie in [0, 1]")
    c["noise"]["seed"] = _num(c, "noise.seed", nonneg=True, integer=True)
    c["noise"]["w0_modes"] = _num(c, "noise.w0_modes", nonneg=True, integer=True)
    c["noise"]["jump_rate"] = _num(c, "noise.jump_rate", nonneg=True)
    c["noise"]["jump_amplitude"] = _num(c, "noise.jump_amplitude", nonneg=True)
    ini = c["initial"]
    if ini["preset"] not in PRESETS:
        raise ConfigError("initial.preset", f"must be one of {PRESETS}")
    c["initial"]["amplitude"] = _num(c, "initial.amplitude")
    c["initial"]["tilt"] = _num(c, "initial.tilt")
    c["initial"]["modes"] = _num(c, "initial.modes", positive=True, integer=True)
    c["initial"]["t1"] = _num(c, "initial.t1", nonneg=True)
    c["initial"]["channel"] = _num(c, "initial.channel", nonneg=True, integer=True)
    dvec = ini["director"]
    if not (isinstance(dvec, list) and len(dvec) == 3 and all(isinstance(x, (int, float)) for x in dvec)):
        raise ConfigError("initial.director", "expected three numbers")
    if ini["preset"] == "snapshot":
        for k in ("velocity_path", "director_path"):
            if not isinstance(ini[k], str):
                raise ConfigError(f"initial.{k}", "required by the snapshot preset")
    if ini["preset"] == "anticipating":
        if not 1 <= ini["channel"] <= len(c["params"]["sigmas"]):
            raise ConfigError("initial.channel", "must index a noise channel (1-based)")
        if ini["t1"] > c["solver"]["t_end"]:
            raise ConfigError("initial.t1", "must not exceed solver.t_end")
        if not isinstance(ini["terms"], list) or not ini["terms"]:
            raise ConfigError("initial.terms", "expected a non-empty list of [kind, coefficient]")
        for i, t in enumerate(ini["terms"]):
            if not (isinstance(t, list) and len(t) == 2 and t[0] in ("const", "linear", "quadratic", "sin")
                    and isinstance(t[1], (int, float))):
                raise ConfigError(f"initial.terms[{i}]", "expected [const|linear|quadratic|sin, coefficient]")
    if c["boundary"]["preset"] not in ("initial", "vertical", "file"):
        raise ConfigError("boundary.preset", "must be one of ('initial', 'vertical', 'file')")
    if c["boundary"]["preset"] == "file" and not isinstance(c["boundary"]["path"], str):
        raise ConfigError("boundary.path", "required by the file preset")
    for k in ("snapshot_every", "record_every"):
        c["output"][k] = _num(c, f"output.{k}", nonneg=True, integer=True)
    if c["output"]["record_every"] < 1:
        raise ConfigError("output.record_every", "must be at least 1")
    if not isinstance(c["output"]["dir"], str):
        raise ConfigError("output.dir", "expected a string")
    return c


@dataclass(frozen=True, eq=False)
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, d: dict | None = None) -> "RunConfig":
        return cls(validate(_merge(DEFAULTS, d or {})))

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError("<file>", f"invalid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("<file>", "top level must be an object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    def updated(self, **sections) -> "RunConfig":
        """New config with ``section={key: value}`` overrides applied."""
        return RunConfig.from_dict(_merge(self.data, sections))

    @property
    def hash(self) -> str:
        body = {k: v for k, v in self.data.items() if k != "output"}
        return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    # typed views

    @property
    def domain(self) -> Domain:
        return Domain(self.data["domain"]["nx"], self.data["domain"]["lx"])

    @property
    def params(self) -> Params:
        p = self.data["params"]
        return Params(p["mu"], p["lam"], p["gamma"], p["eta"], p["sigma0"], tuple(p["sigmas"]))

    @property
    def solver(self) -> SolverConfig:
        s = self.data["solver"]
        return SolverConfig(s["dt"], s["t_end"], s["scheme"], s["boundary_mode"], s["theta"])

    @property
    def seed(self) -> int:
        return self.data["noise"]["seed"]


def _bump(domain: Domain):
    X, Y = domain.node_coords()
    return X, Y, lambda X, Y: np.sin(np.pi * X / domain.lx) * np.sin(np.pi * Y / domain.lx)


def _low_pass(rng, k: int):
    a = rng.standard_normal((k, k)) / (1.0 + np.add.outer(np.arange(k), np.arange(k))) ** 2
    return lambda X, Y, L: sum(a[i, j] * np.sin((i + 1) * np.pi * X / L) * np.sin((j + 1) * np.pi * Y / L)
                               for i in range(k) for j in range(k))


def initial_fields(cfg: RunConfig, traj_index: int = 0):
    """Deterministic ``(v0, d0)`` for the non-anticipating presets."""
    from .io import read_snapshot

    dom = cfg.domain
    ini = cfg.data["initial"]
    L = dom.lx
    _, _, S = _bump(dom)
    preset = ini["preset"]
    amp, tilt = ini["amplitude"], ini["tilt"]
    if preset == "equilibrium":
        vec = np.asarray(ini["director"], dtype=float)
        v0 = VectorField2.zeros(dom)
        d0 = DirectorField3.constant(dom, vec / np.linalg.norm(vec))
    elif preset in ("taylor-vortex", "anticipating"):
        v0 = VectorField2.from_stream_function(dom, lambda X, Y: amp * S(X, Y) ** 2)
        d0 = DirectorField3.from_function(
            dom, lambda X, Y: (np.sin(tilt * S(X, Y)), 0 * X, np.cos(tilt * S(X, Y))))
    elif preset == "random-smooth":
        rng = make_rng(cfg.seed, traj_index, STREAM_INITIAL)
        k = ini["modes"]
        psi = _low_pass(rng, k)
        th, ph = _low_pass(rng, k), _low_pass(rng, k)
        v0 = VectorField2.from_stream_function(dom, lambda X, Y: amp * psi(X, Y, L) * S(X, Y))
        # angles vanish on the boundary so the trace is the vertical director
        d0 = DirectorField3.from_function(
            dom, lambda X, Y: (np.sin(tilt * th(X, Y, L)) * np.cos(ph(X, Y, L)),
                               np.sin(tilt * th(X, Y, L)) * np.sin(ph(X, Y, L)), np.cos(tilt * th(X, Y, L))))
    else:
        v0, _ = read_snapshot(ini["velocity_path"], L)
        d0, _ = read_snapshot(ini["director_path"], L)
        if not isinstance(v0, VectorField2) or not isinstance(d0, DirectorField3) or v0.domain != dom \
                or d0.domain != dom:
            raise ConfigError("initial.velocity_path", "snapshots do not match domain.nx")
    bnd = cfg.data["boundary"]
    if bnd["preset"] == "vertical":
        d0 = d0.with_boundary_of(DirectorField3.constant(dom, (0.0, 0.0, 1.0)))
    elif bnd["preset"] == "file":
        trace, _ = read_snapshot(bnd["path"], L)
        if not isinstance(trace, DirectorField3) or trace.domain != dom:
            raise ConfigError("boundary.path", "trace must be a director snapshot on the run grid")
        d0 = d0.with_boundary_of(trace)
    return v0, d0


def preset(name: str, **overrides) -> RunConfig:
    """Config for a named initial-data preset with optional section overrides."""
    if name not in PRESETS:
        raise ConfigError("initial.preset", f"must be one of {PRESETS}")
    base = {"initial": {"preset": name}}
    if name == "anticipating":
        base["params"] = {"sigmas": [1.0]}
    if name == "equilibrium":
        base["initial"]["director"] = [0.0, 0.6, 0.8]
    for sec, vals in overrides.items():
        base.setdefault(sec, {}).update(vals)
    return RunConfig.from_dict(base)
