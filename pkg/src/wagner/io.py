"""Surface definition files, trajectory CSV and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .catalog import CatalogEntry, entry
from .errors import ConfigError, ExprSyntaxError
from .expr import evaluate, parse
from .geomcore import EmbeddingChart, MetricChart, SurfaceChart
from .revolution import RevolutionProfile

__all__ = [
    "SURFACE_SCHEMA",
    "CSV_HEADER",
    "Surface",
    "load_surface",
    "surface_from_dict",
    "parse_builtin_ref",
    "write_csv",
    "read_csv",
    "write_json",
    "to_jsonable",
]

CSV_HEADER = ("t", "u1", "u2", "phi", "Q1", "Q2", "Q3", "K", "C1", "C2", "C3sq")

_bound = {"oneOf": [{"type": "number"}, {"type": "string"}, {"type": "null"}]}
_domain = {"type": "array", "items": _bound, "minItems": 2, "maxItems": 2}
_common = {"u1_period": _bound, "u2_period": _bound, "u1_domain": _domain, "u2_domain": _domain,
           "name": {"type": "string"}, "kind": {}}

SURFACE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["revolution", "metric", "embedding", "builtin"]}},
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "revolution"}}},
            "then": {"required": ["A", "u2_domain"], "additionalProperties": False,
                     "properties": {**_common, "A": {"type": "string"}}},
        },
        {
            "if": {"properties": {"kind": {"const": "metric"}}},
            "then": {"required": ["g11", "g12", "g22", "u1_domain", "u2_domain"], "additionalProperties": False,
                     "properties": {**_common, "g11": {"type": "string"}, "g12": {"type": "string"},
                                    "g22": {"type": "string"}}},
        },
        {
            "if": {"properties": {"kind": {"const": "embedding"}}},
            "then": {"required": ["x", "y", "z", "u1_domain", "u2_domain"], "additionalProperties": False,
                     "properties": {**_common, "x": {"type": "string"}, "y": {"type": "string"},
                                    "z": {"type": "string"}}},
        },
        {
            "if": {"properties": {"kind": {"const": "builtin"}}},
            "then": {"required": ["name"], "additionalProperties": False,
                     "properties": {"kind": {}, "name": {"type": "string"},
                                    "params": {"type": "object",
                                               "additionalProperties": {"type": ["number", "string", "null"]}}}},
        },
    ],
}


class Surface:
    """A loaded chart plus its catalog entry when it is a built-in."""

    def __init__(self, chart: SurfaceChart, catalog: CatalogEntry | None = None, source: str = ""):
        self.chart = chart
        self.catalog = catalog
        self.source = source

    @property
    def profile(self):
        return getattr(self.chart, "profile", None)

    @property
    def embed(self):
        if self.catalog is not None and self.catalog.embed is not None:
            return self.catalog.embed
        if isinstance(self.chart, EmbeddingChart):
            return self.chart.embed
        return None


def _const(value, what: str) -> float | None:
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(evaluate(parse(value, variables=())))
    except ExprSyntaxError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _domain_of(d: dict, key: str, default=(None, None)):
    lo, hi = d.get(key, default)
    lo = _const(lo, key)
    hi = _const(hi, key)
    return (-math.inf if lo is None else lo, math.inf if hi is None else hi)


def _expr_error(field: str, exc: ExprSyntaxError) -> ConfigError:
    err = ExprSyntaxError(f"in {field!r}: {exc.args[0].rsplit(' at byte offset', 1)[0]}", exc.text, exc.offset)
    return err


def surface_from_dict(d: dict, source: str = "") -> Surface:
    try:
        jsonschema.validate(d, SURFACE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid surface definition: {exc.message}") from exc
    kind = d["kind"]
    if kind == "builtin":
        cat = entry(d["name"], d.get("params"))
        return Surface(cat.chart, cat, source)
    u1_period = _const(d.get("u1_period", "2*pi" if kind == "revolution" else None), "u1_period")
    u2_period = _const(d.get("u2_period"), "u2_period")
    name = d.get("name")
    try:
        if kind == "revolution":
            field = "A"
            lo, hi = _domain_of(d, "u2_domain")
            prof = RevolutionProfile(d["A"], (lo, hi), u1_period=u1_period, u2_period=u2_period, name=name)
            return Surface(prof.chart(), None, source)
        u1_dom = _domain_of(d, "u1_domain")
        u2_dom = _domain_of(d, "u2_domain")
        if kind == "metric":
            for field in ("g11", "g12", "g22"):
                parse(d[field])
            return Surface(MetricChart(d["g11"], d["g12"], d["g22"], u1_dom, u2_dom, u1_period, u2_period, name),
                           None, source)
        for field in ("x", "y", "z"):
            parse(d[field])
        return Surface(EmbeddingChart(d["x"], d["y"], d["z"], u1_dom, u2_dom, u1_period, u2_period, name),
                       None, source)
    except ExprSyntaxError as exc:
        raise _expr_error(field, exc) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_builtin_ref(ref: str) -> tuple[str, dict]:
    """``builtin:torus:R=2,r=1`` -> ``("torus", {"R": "2", "r": "1"})``."""
    parts = ref.split(":", 2)
    name = parts[1] if len(parts) > 1 else ""
    params = {}
    if len(parts) == 3 and parts[2].strip():
        for item in parts[2].split(","):
            if "=" not in item:
                raise ConfigError(f"bad builtin parameter {item!r}; expected key=value")
            k, v = item.split("=", 1)
            params[k.strip()] = v.strip()
    return name, params


def load_surface(ref: str) -> Surface:
    """Load a surface from a JSON file path or a ``builtin:name[:k=v,...]`` reference."""
    if ref.startswith("builtin:"):
        name, params = parse_builtin_ref(ref)
        parsed = {}
        for k, v in params.items():
            parsed[k] = v if k == "A" else _const(v, k)
        cat = entry(name, parsed)
        return Surface(cat.chart, cat, ref)
    path = Path(ref)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read surface file {ref}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"surface file {ref} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("surface definition must be a JSON object")
    return surface_from_dict(data, ref)


# -- output ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


def write_csv(traj, path) -> None:
    cols = traj.columns()
    n = len(cols["t"])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(n):
            w.writerow([_fmt(cols[name][i]) for name in CSV_HEADER])


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {
        name: np.array([float(r[j]) if r[j] != "" else np.nan for r in body])
        for j, name in enumerate(header)
    }


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
