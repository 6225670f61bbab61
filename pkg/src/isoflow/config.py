"""Strict run configuration read from a TOML file.

Every key is checked against a fixed schema. Unknown keys are rejected with
a suggestion, and the physics-relevant fields (grid, ``ds``, ``s_target``)
have no defaults. ``load_config`` runs the preconditions of every module the
experiment touches, so a config that loads will not fail on bad parameters
later.
"""

from __future__ import annotations

import csv
import difflib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import tomli

from .errors import ConfigError
from .grid import Field, Grid, make_grid
from .kdv import KdvParams, Scheme, SolitonParams

EXPERIMENTS = ("soliton", "evolve", "spectrum", "scatter", "lax-check", "tensor-demo")
INITIAL_KINDS = ("zero", "soliton", "two-soliton", "gaussian", "file")
FORMATS = ("csv", "json", "svg")

_REQUIRED = object()

# section -> key -> (accepted types, default or _REQUIRED)
_NUM = (int, float)
SCHEMA: dict[str, dict[str, tuple[tuple, Any]]] = {
    "grid": {"n": ((int,), _REQUIRED), "length": (_NUM, _REQUIRED), "kind": ((str,), _REQUIRED)},
    "flow": {
        "ds": (_NUM, _REQUIRED),
        "s_target": (_NUM, _REQUIRED),
        "snapshots": ((int,), 1),
        "scheme": ((str,), "if-rk4"),
        "dealias": ((bool,), True),
    },
    "initial": {
        "kind": ((str,), _REQUIRED),
        "lambda": (_NUM, None),
        "q0": (_NUM, 0.0),
        "lambdas": ((list,), None),
        "centers": ((list,), None),
        "amplitude": (_NUM, None),
        "center": (_NUM, 0.0),
        "width": (_NUM, 1.0),
        "path": ((str,), None),
    },
    "scattering": {
        "k_min": (_NUM, 0.25),
        "k_max": (_NUM, 4.0),
        "k_count": ((int,), 24),
        "fit_k_min": (_NUM, 0.5),
        "fit_k_max": (_NUM, 3.0),
    },
    "spectrum": {"bound_states": ((int,), None)},
    "lax": {
        "delta": (_NUM, 1e-4),
        "deltas": ((list,), None),
        "snapshot": ((int,), None),
        "substeps": ((int,), 1),
    },
    "tensor": {"eigenvalues": ((int,), 6), "probe_points": ((int,), 41)},
    "output": {"directory": ((str,), "isoflow_out"), "formats": ((list,), ["csv", "json", "svg"])},
}
TOP_LEVEL = {"experiment": ((str,), None)}
REQUIRED_SECTIONS = ("grid", "flow", "initial")

# names people reach for out of habit, mapped to the schema's spelling
ALIASES = {
    "dt": "ds",
    "h": "ds",
    "step": "ds",
    "t_final": "s_target",
    "t_end": "s_target",
    "t_target": "s_target",
    "s_final": "s_target",
    "s_end": "s_target",
    "t": "s_target",
    "N": "n",
    "points": "n",
    "L": "length",
    "extent": "length",
    "lam": "lambda",
    "velocity": "lambda",
    "x0": "q0",
    "boundary": "kind",
    "method": "scheme",
    "integrator": "scheme",
    "nsnap": "snapshots",
    "n_snapshots": "snapshots",
    "out": "directory",
    "dir": "directory",
}

# default tolerances; the [tolerances] table may override any of these by name
DEFAULT_TOLERANCES = {
    "soliton_center": None,  # one grid spacing unless overridden
    "soliton_mass": 1e-6,
    "zero_fixed_point": 0.0,
    "invariant_drift": 1e-7,
    "soliton_transport": 1e-6,
    "two_soliton_shape": 1e-3,
    "isospectral_drift": 1e-4,
    "bound_state_energy": 1e-4,
    "a_invariance": 1e-4,
    "b_modulus_invariance": 1e-4,
    "wronskian": 1e-6,
    "reflectionless": 1e-5,
    "phase_cubic_fit": 0.01,
    "phase_prefactor": 1e-3,
    "lax_residual": 1e-3,
    "lax_order": 3.5,
    "lax_halving_factor": 0.2,
    "unitarity": 1e-8,
    "conjugation": 1e-3,
    "free_flow": 1e-8,
    "commutator_preservation": 1e-9,
    "spectrum_preservation": 1e-9,
    "kronecker_sum": 1e-10,
    "tensor_isospectral": 2e-3,
    "coupling_witness": 0.1,
    "witness_at_origin": 0.0,
    "nonfactorizability": 1e-3,
}

# looser defaults that apply to two-soliton data, which overlaps during the interaction
_TWO_SOLITON_TOLERANCES = {"isospectral_drift": 2e-3, "bound_state_energy": 2e-3}


@dataclass(frozen=True)
class InitialSpec:
    kind: str
    lam: Optional[float] = None
    q0: float = 0.0
    lambdas: tuple[float, ...] = ()
    centers: tuple[float, ...] = ()
    amplitude: Optional[float] = None
    center: float = 0.0
    width: float = 1.0
    path: Optional[Path] = None

    @property
    def solitons(self) -> list[SolitonParams]:
        if self.kind == "soliton":
            return [SolitonParams(self.lam, self.q0)]
        if self.kind == "two-soliton":
            return [SolitonParams(lam, c) for lam, c in zip(self.lambdas, self.centers)]
        return []


@dataclass(frozen=True)
class ScatteringSpec:
    k_min: float
    k_max: float
    k_count: int
    fit_k_min: float
    fit_k_max: float


@dataclass(frozen=True)
class LaxSpec:
    delta: float
    deltas: tuple[float, ...]
    snapshot: Optional[int]
    substeps: int


@dataclass(frozen=True)
class RunConfig:
    experiment: Optional[str]
    grid: Grid
    params: KdvParams
    s_target: float
    snapshots: int
    initial: InitialSpec
    scattering: ScatteringSpec
    bound_states: Optional[int]
    lax: LaxSpec
    tensor_eigenvalues: int
    probe_points: int
    output_directory: Path
    formats: tuple[str, ...]
    tolerance_overrides: dict = field(default_factory=dict)
    source: Optional[Path] = None
    raw: dict = field(default_factory=dict, repr=False)

    def tolerance(self, name: str) -> Optional[float]:
        if name in self.tolerance_overrides:
            return self.tolerance_overrides[name]
        if self.initial.kind == "two-soliton" and name in _TWO_SOLITON_TOLERANCES:
            return _TWO_SOLITON_TOLERANCES[name]
        return DEFAULT_TOLERANCES[name]

    @property
    def s_values(self) -> np.ndarray:
        return np.arange(self.snapshots + 1) * (self.s_target / self.snapshots)


class _Problems:
    def __init__(self):
        self.messages: list[str] = []

    def add(self, where: str, message: str) -> None:
        self.messages.append(f"{where}: {message}")

    def __bool__(self) -> bool:
        return bool(self.messages)


def _suggest(key: str, valid) -> str:
    valid = list(valid)
    target = ALIASES.get(key)
    if target is None and key.lower() in ALIASES:
        target = ALIASES[key.lower()]
    if target in valid:
        return f'; did you mean "{target}"?'
    close = difflib.get_close_matches(key, valid, n=1, cutoff=0.6)
    if close:
        return f'; did you mean "{close[0]}"?'
    return f" (allowed: {', '.join(sorted(valid))})"


def _type_name(types: tuple) -> str:
    names = {int: "integer", float: "number", str: "string", bool: "boolean", list: "array"}
    if types == _NUM:
        return "number"
    return " or ".join(names[t] for t in types)


def _check_type(value, types: tuple) -> bool:
    if isinstance(value, bool) and bool not in types:
        return False
    return isinstance(value, types)


def _read_table(data: dict, problems: _Problems) -> dict[str, dict]:
    """Apply the schema: reject unknown names and wrong types, fill defaults."""
    out: dict[str, dict] = {}
    for key, value in data.items():
        if key in SCHEMA or key == "tolerances":
            if not isinstance(value, dict):
                problems.add(key, "must be a table")
            continue
        if key in TOP_LEVEL:
            types, _ = TOP_LEVEL[key]
            if not _check_type(value, types):
                problems.add(key, f"expected {_type_name(types)}, got {value!r}")
            continue
        problems.add(key, "unknown section or key" + _suggest(key, list(SCHEMA) + list(TOP_LEVEL) + ["tolerances"]))

    for section, keys in SCHEMA.items():
        table = data.get(section, {})
        if not isinstance(table, dict):
            table = {}
        if section in REQUIRED_SECTIONS and section not in data:
            problems.add(section, "missing required section")
        values = {}
        for key, value in table.items():
            if key not in keys:
                problems.add(f"{section}.{key}", "unknown key" + _suggest(key, keys))
                continue
            types, _ = keys[key]
            if not _check_type(value, types):
                problems.add(f"{section}.{key}", f"expected {_type_name(types)}, got {value!r}")
                continue
            values[key] = value
        for key, (_, default) in keys.items():
            if key not in values and key not in table:
                if default is _REQUIRED:
                    if section in data:
                        problems.add(f"{section}.{key}", "required (no default for this field)")
                else:
                    values[key] = default
        out[section] = values

    tol = data.get("tolerances", {})
    overrides = {}
    if isinstance(tol, dict):
        for key, value in tol.items():
            if key not in DEFAULT_TOLERANCES:
                problems.add(f"tolerances.{key}", "unknown tolerance" + _suggest(key, DEFAULT_TOLERANCES))
            elif not _check_type(value, _NUM) or not math.isfinite(value) or value < 0:
                problems.add(f"tolerances.{key}", f"expected a non-negative number, got {value!r}")
            else:
                overrides[key] = float(value)
    out["tolerances"] = overrides
    return out


def _numbers(where: str, value, problems: _Problems) -> tuple[float, ...]:
    if value is None:
        return ()
    if not all(_check_type(x, _NUM) for x in value):
        problems.add(where, f"expected an array of numbers, got {value!r}")
        return ()
    return tuple(float(x) for x in value)


def load_initial_file(path: Path, grid: Grid) -> Field:
    """Read V from a CSV with a header row: either ``q,V`` or a single ``V`` column."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError([f"initial.path: {path} is empty"])
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    try:
        table = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise ConfigError([f"initial.path: {path}: {exc}"]) from None
    if header == ["q", "V"] and table.ndim == 2 and table.shape[1] == 2:
        if table.shape[0] != grid.n or np.max(np.abs(table[:, 0] - grid.points)) > 1e-9 * grid.length:
            raise ConfigError([f"initial.path: {path}: q column does not match the configured grid"])
        values = table[:, 1]
    elif header == ["V"] and table.ndim == 2 and table.shape[1] == 1:
        values = table[:, 0]
    else:
        raise ConfigError([f"initial.path: {path}: expected header 'q,V' or 'V'"])
    if len(values) != grid.n:
        raise ConfigError([f"initial.path: {path}: {len(values)} values for a grid of {grid.n} points"])
    if not np.all(np.isfinite(values)):
        raise ConfigError([f"initial.path: {path}: values must be finite"])
    return Field(grid, values)


def _build(tables: dict, experiment: Optional[str], source: Optional[Path], problems: _Problems) -> Optional[RunConfig]:
    g, f, ini = tables["grid"], tables["flow"], tables["initial"]
    sc, la, out = tables["scattering"], tables["lax"], tables["output"]

    grid = None
    if {"n", "length", "kind"} <= g.keys():
        try:
            grid = make_grid(g["n"], float(g["length"]), g["kind"])
        except ValueError as exc:
            text = str(exc).removeprefix("make_grid: ")
            key = "grid.length" if "length" in text else "grid.kind" if "kind" in text else "grid.n"
            problems.add(key, f"core_grid.make_grid: {text}")

    params = None
    if "ds" in f:
        try:
            params = KdvParams(float(f["ds"]), Scheme.parse(f.get("scheme", "if-rk4")), f.get("dealias", True))
        except ValueError as exc:
            problems.add("flow", f"kdv_flow.KdvParams: {exc}")
    if params is not None and grid is not None:
        try:
            params.check_grid(grid)
        except ValueError as exc:
            problems.add("flow.ds", f"kdv_flow.KdvParams: {exc}")
    s_target = f.get("s_target")
    if s_target is not None:
        if not (math.isfinite(s_target) and s_target > 0):
            problems.add("flow.s_target", "kdv_flow.evolve: must be positive")
        elif "ds" in f and f["ds"] > 0 and s_target / f["ds"] < 1 - 1e-12:
            problems.add("flow.s_target", "kdv_flow.evolve: s_target/ds must be >= 1")
    snapshots = f.get("snapshots", 1)
    if snapshots < 1:
        problems.add("flow.snapshots", "kdv_flow.evolve: must be >= 1")

    kind = ini.get("kind")
    initial = None
    if kind is not None:
        if kind not in INITIAL_KINDS:
            problems.add("initial.kind", f"unknown kind {kind!r}" + _suggest(kind, INITIAL_KINDS))
        else:
            lambdas = _numbers("initial.lambdas", ini.get("lambdas"), problems)
            centers = _numbers("initial.centers", ini.get("centers"), problems)
            path = None
            if kind == "soliton":
                if ini.get("lambda") is None:
                    problems.add("initial.lambda", "required for a soliton")
                elif not ini["lambda"] > 0:
                    problems.add("initial.lambda", "kdv_flow.SolitonParams: lambda must be positive")
            elif kind == "two-soliton":
                if len(lambdas) != 2 or len(centers) != 2:
                    problems.add("initial", "two-soliton needs 'lambdas' and 'centers' with two entries each")
                elif min(lambdas) <= 0:
                    problems.add("initial.lambdas", "kdv_flow.SolitonParams: lambda must be positive")
            elif kind == "gaussian":
                if ini.get("amplitude") is None:
                    problems.add("initial.amplitude", "required for a gaussian")
                if not ini.get("width", 1.0) > 0:
                    problems.add("initial.width", "must be positive")
            elif kind == "file":
                if ini.get("path") is None:
                    problems.add("initial.path", "required for kind 'file'")
                else:
                    path = Path(ini["path"])
                    if not path.is_absolute() and source is not None:
                        path = source.parent / path
                    if not path.is_file():
                        problems.add("initial.path", f"no such file: {path}")
            initial = InitialSpec(
                kind=kind,
                lam=None if ini.get("lambda") is None else float(ini["lambda"]),
                q0=float(ini.get("q0", 0.0)),
                lambdas=lambdas,
                centers=centers,
                amplitude=None if ini.get("amplitude") is None else float(ini["amplitude"]),
                center=float(ini.get("center", 0.0)),
                width=float(ini.get("width", 1.0)),
                path=path,
            )

    if not 0 < sc["k_min"] < sc["k_max"]:
        problems.add("scattering", "scattering.scattering_coefficients: need 0 < k_min < k_max")
    if sc["k_count"] < 2:
        problems.add("scattering.k_count", "must be >= 2")
    if not sc["fit_k_min"] < sc["fit_k_max"]:
        problems.add("scattering", "need fit_k_min < fit_k_max")
    scattering = ScatteringSpec(float(sc["k_min"]), float(sc["k_max"]), sc["k_count"], float(sc["fit_k_min"]), float(sc["fit_k_max"]))

    deltas = _numbers("lax.deltas", la.get("deltas"), problems)
    if not la["delta"] > 0 or any(d <= 0 for d in deltas):
        problems.add("lax", "lax_verification.lax_residual: delta must be positive")
    if la["substeps"] < 1:
        problems.add("lax.substeps", "must be >= 1")
    if la.get("snapshot") is not None and not 0 <= la["snapshot"] <= snapshots:
        problems.add("lax.snapshot", f"must index a snapshot in 0..{snapshots}")
    lax = LaxSpec(float(la["delta"]), deltas, la.get("snapshot"), la["substeps"])

    bound_states = tables["spectrum"].get("bound_states")
    if bound_states is not None and bound_states < 1:
        problems.add("spectrum.bound_states", "schrodinger.isospectrality_report: must be >= 1")
    if tables["tensor"]["eigenvalues"] < 1:
        problems.add("tensor.eigenvalues", "must be >= 1")
    if tables["tensor"]["probe_points"] < 3:
        problems.add("tensor.probe_points", "must be >= 3")

    formats = out["formats"]
    bad = [x for x in formats if x not in FORMATS]
    if bad:
        problems.add("output.formats", f"unknown format(s) {bad}; allowed {list(FORMATS)}")

    if experiment is not None and grid is not None:
        _experiment_checks(experiment, grid, initial, f.get("dealias", True), problems)

    if problems:
        return None
    return RunConfig(
        experiment=experiment,
        grid=grid,
        params=params,
        s_target=float(s_target),
        snapshots=snapshots,
        initial=initial,
        scattering=scattering,
        bound_states=bound_states,
        lax=lax,
        tensor_eigenvalues=tables["tensor"]["eigenvalues"],
        probe_points=tables["tensor"]["probe_points"],
        output_directory=Path(out["directory"]),
        formats=tuple(dict.fromkeys(formats)),
        tolerance_overrides=tables["tolerances"],
        source=source,
    )


def _experiment_checks(experiment: str, grid: Grid, initial: Optional[InitialSpec], dealias: bool, problems: _Problems):
    if not grid.periodic:
        problems.add("grid.kind", f"{experiment}: the KdV flow needs a periodic grid")
    if experiment == "tensor-demo" and grid.n**2 > 4096:
        problems.add("grid.n", f"tensor_demo.build_2d_hamiltonian: n^2 = {grid.n ** 2} exceeds 4096")
    if experiment == "soliton" and initial is not None and initial.kind not in ("soliton", "two-soliton"):
        problems.add("initial.kind", "soliton experiment needs soliton or two-soliton initial data")


def parse_config(text: str, experiment: Optional[str] = None, source: Optional[Path] = None) -> RunConfig:
    """Parse and fully validate config text; raises ConfigError with every problem found."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        where = f"{source}:" if source else ""
        raise ConfigError([f"{where}{exc.lineno}:{exc.colno}: parse error: {exc.msg}"]) from None
    problems = _Problems()
    declared = data.get("experiment")
    if experiment is None:
        experiment = declared if isinstance(declared, str) else None
    elif isinstance(declared, str) and declared != experiment:
        problems.add("experiment", f"config is for {declared!r} but {experiment!r} was requested")
    if experiment is not None and experiment not in EXPERIMENTS:
        problems.add("experiment", f"unknown experiment {experiment!r}" + _suggest(experiment, EXPERIMENTS))
        experiment = None
    tables = _read_table(data, problems)
    cfg = _build(tables, experiment, source, problems)
    if problems:
        raise ConfigError(problems.messages)
    return RunConfig(**{**cfg.__dict__, "raw": data})


def load_config(path: str | Path, experiment: Optional[str] = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from None
    return parse_config(text, experiment, path)


def validate(path: str | Path) -> str:
    """``"ok"`` for a valid file, otherwise one field-level message per line."""
    try:
        load_config(path)
    except ConfigError as exc:
        return "\n".join(exc.messages)
    return "ok"
