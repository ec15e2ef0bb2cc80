"""Scenario files: JSON with a versioned ``schema`` field, checked by jsonschema.

A scenario fixes the chart, grid, material, energy variant, boundary
conditions, loads, solver options and output names.  :func:`load_scenario`
validates and normalizes (fills defaults); the normalized form serializes
back to an identical scenario.
"""

from __future__ import annotations

import copy
import csv
import json
import re
from pathlib import Path

import jsonschema
import numpy as np

from .constitutive import MaterialConstants
from .errors import ScenarioError
from .geometry import make_chart
from .kinematics import Discretization
from .solver import EDGES, BoundaryConditions, LoadSpec, SolveOptions

SCHEMA_VERSION = "cosshell-scenario/1"

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_range = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_edge = {
    "oneOf": [
        {"enum": ["clamped", "free"]},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"const": "dirichlet"},
                "rotation": _vec3,
                "about": _vec3,
                "displacement": _vec3,
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {"type": {"const": "neumann"}, "force": _vec3, "couple": _vec3},
        },
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "chart", "grid", "material"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "chart": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["plate", "cylinder", "sphere-cap", "user-sampled-grid"]},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "u_range": _range,
                "v_range": _range,
                "path": {"type": "string"},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_u", "n_v"],
            "properties": {
                "n_u": {"type": "integer", "minimum": 3},
                "n_v": {"type": "integer", "minimum": 3},
                "refinement": {"type": "array", "items": {"type": "integer", "minimum": 3}, "minItems": 2},
            },
        },
        "material": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mu", "lam", "mu_c", "L_c", "b1", "b2", "b3", "h"],
            "properties": {k: {"type": "number"} for k in ("mu", "lam", "mu_c", "L_c", "b1", "b2", "b3", "h")},
        },
        "variant": {"enum": ["harmonic", "arithmetic"]},
        "boundary": {
            "type": "object",
            "additionalProperties": False,
            "properties": {e: _edge for e in EDGES},
        },
        "loads": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "f": _vec3,
                "c": _vec3,
                "pressure": {"type": "number"},
                "table": {"type": "string"},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 0},
                "memory": {"type": "integer", "minimum": 1},
                "threads": {"type": "integer", "minimum": 1},
                "residual_margin": {"type": "number", "minimum": 0, "maximum": 0.5},
            },
        },
        "koiter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fixture": {"enum": ["plate", "cylinder", "sphere-cap", "reference"]},
                "amplitudes": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "n": {"type": "integer", "minimum": 3},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"fields": {"type": "string"}, "report": {"type": "string"}},
        },
    },
}

DEFAULTS = {
    "name": "",
    "variant": "harmonic",
    "boundary": {e: "free" for e in EDGES},
    "loads": {"f": [0.0, 0.0, 0.0], "c": [0.0, 0.0, 0.0], "pressure": 0.0},
    "solver": {"tol": None, "max_iter": 20000, "memory": 20, "threads": 1, "residual_margin": 0.25},
    "output": {"fields": "solution.csv", "report": "report.json"},
}


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of the JSON element at ``path`` (a sequence of keys)."""
    pos = 0
    line = None
    for key in path:
        if not isinstance(key, str):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            break
        pos = m.end()
        line = text.count("\n", 0, m.start()) + 1
    return line


def validate(data: dict, text: str | None = None, source: str = "<scenario>") -> None:
    """Raise :class:`ScenarioError` if ``data`` does not match the schema."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    msgs = []
    for err in errors:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        path = list(err.absolute_path)
        if err.validator == "additionalProperties" and isinstance(err.instance, dict):
            # point at the first unexpected key rather than its parent
            allowed = err.schema.get("properties", {})
            extra = [k for k in err.instance if k not in allowed]
            path += extra[:1]
        line = _line_of(text, path) if text else None
        prefix = f"{source}:{line}" if line else source
        msgs.append(f"{prefix}: {where}: {err.message}")
    raise ScenarioError("\n".join(msgs))


def normalize(data: dict) -> dict:
    """Scenario with every optional section filled with its defaults."""
    out = copy.deepcopy(data)
    for key, val in DEFAULTS.items():
        if isinstance(val, dict):
            merged = copy.deepcopy(val)
            merged.update(out.get(key, {}))
            out[key] = merged
        else:
            out.setdefault(key, val)
    chart = out["chart"]
    if chart["kind"] in ("cylinder", "sphere-cap"):
        chart.setdefault("radius", 1.0)
    if chart["kind"] != "user-sampled-grid":
        c = make_chart(chart)
        chart["u_range"] = list(c.u_range)
        chart["v_range"] = list(c.v_range)
    out["material"] = {k: float(v) for k, v in out["material"].items()}
    if "koiter" in out:
        k = out["koiter"]
        k.setdefault("fixture", "sphere-cap")
        k.setdefault("amplitudes", [1e-2, 1e-3, 1e-4])
        k.setdefault("n", 33)
    return out


class Scenario:
    """Validated, normalized scenario."""

    def __init__(self, data: dict, base_dir: Path | None = None, text: str | None = None, source="<scenario>"):
        validate(data, text, source)
        self.data = normalize(data)
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        try:
            self.material  # noqa: B018 - checks the invariants early
        except ValueError as exc:
            raise ScenarioError(f"{source}: material: {exc}") from None

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dumps(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.data == other.data

    # -- builders -----------------------------------------------------------
    def _resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def variant(self) -> str:
        return self.data["variant"]

    @property
    def material(self) -> MaterialConstants:
        return MaterialConstants.from_dict(self.data["material"])

    def chart(self):
        spec = dict(self.data["chart"])
        if spec["kind"] == "user-sampled-grid":
            if "path" not in spec:
                raise ScenarioError("chart: user-sampled-grid needs a 'path'")
            spec["path"] = str(self._resolve(spec["path"]))
        return make_chart(spec)

    def grid_sizes(self) -> list:
        g = self.data["grid"]
        return [(n, n) for n in g["refinement"]] if "refinement" in g else [(g["n_u"], g["n_v"])]

    def discretization(self, n_u=None, n_v=None) -> Discretization:
        g = self.data["grid"]
        chart = self.chart()
        if chart.kind == "user-sampled-grid":
            n_u, n_v = chart.u_nodes.size, chart.v_nodes.size
        return Discretization(chart, n_u or g["n_u"], n_v or g["n_v"])

    def boundary_conditions(self, disc: Discretization) -> BoundaryConditions:
        return BoundaryConditions.from_edges(disc, self.data["boundary"])

    def loads(self, disc: Discretization) -> LoadSpec:
        spec = self.data["loads"]
        loads = LoadSpec.constant(disc, spec["f"], spec["c"])
        if spec.get("pressure"):
            loads.f = loads.f + spec["pressure"] * disc.frame.n0
        if spec.get("table"):
            f, c = read_load_table(self._resolve(spec["table"]), disc)
            loads.f = loads.f + f
            loads.c = loads.c + c
        return loads

    def solve_options(self, threads: int | None = None) -> SolveOptions:
        s = self.data["solver"]
        return SolveOptions(tol=s["tol"], max_iter=s["max_iter"], memory=s["memory"],
                            threads=threads or s["threads"])

    def output_path(self, key: str, out_dir) -> Path:
        return Path(out_dir) / self.data["output"][key]


def read_load_table(path, disc: Discretization):
    """Per-node loads from CSV rows ``idx,fx,fy,fz,cx,cy,cz``."""
    n = disc.grid.size
    f = np.zeros((n, 3))
    c = np.zeros((n, 3))
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or rec[0].strip() in ("idx", "") or rec[0].startswith("#"):
                continue
            if len(rec) != 7:
                raise ScenarioError(f"{path}:{lineno}: expected 7 columns idx,fx,fy,fz,cx,cy,cz")
            try:
                k = int(rec[0])
                vals = [float(x) for x in rec[1:]]
            except ValueError as exc:
                raise ScenarioError(f"{path}:{lineno}: {exc}") from None
            if not 0 <= k < n:
                raise ScenarioError(f"{path}:{lineno}: node index {k} outside grid")
            f[k], c[k] = vals[:3], vals[3:]
    return f.reshape(disc.shape + (3,)), c.reshape(disc.shape + (3,))


def loads_scenario_text(text: str, base_dir=None, source="<scenario>") -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}:1: scenario must be a JSON object")
    return Scenario(data, base_dir, text, source)


def load_scenario(path) -> Scenario:
    """Read, validate and normalize a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    return loads_scenario_text(text, path.parent, str(path))


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. ``"cylinder_pressure"``)."""
    p = Path(__file__).parent / "scenarios" / f"{name}.json"
    if not p.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return p


def bundled_scenarios() -> list:
    return sorted(p.stem for p in (Path(__file__).parent / "scenarios").glob("*.json"))
