"""Loading and validating scenario manifests (JSON)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigError, FoliateError
from ..exterior import Form, Multivector
from ..expr import CoordinateSystem, ScalarExpr
from ..verify import DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_TOL_ABS, DEFAULT_TOL_REL, SampleBox, Sampling
from .geometry import parse_geometry

TOP_KEYS = {"coordinates", "box", "definitions", "foliation", "two_form", "volume",
            "functions", "tasks", "sampling", "description"}

# task name -> {option: kind}; kinds: form1, form2, top, bivector, scalar, scalars, any, bool
TASKS: dict[str, dict[str, str]] = {
    "check-foliation": {},
    "delta": {},
    "obstruction-certificate": {"certificate": "scalar"},
    "check-compatible": {"two_form": "form2"},
    "build-poisson": {"two_form": "form2", "bivector": "bivector", "volume": "top"},
    "jacobi": {},
    "modular": {"volume": "top", "rescale": "scalar"},
    "unimodular-certificate": {"certificate": "scalar"},
    "transversally-constant": {"two_form": "form2", "normalize": "bool"},
    "dirac": {"symplectic": "form2", "constraints": "scalars"},
    "custom-zero-check": {"expression": "any", "label": "text"},
}
REQUIRED = {
    "obstruction-certificate": ("certificate",),
    "unimodular-certificate": ("certificate",),
    "dirac": ("symplectic", "constraints"),
    "custom-zero-check": ("expression",),
}
NEEDS_FOLIATION = {"check-foliation", "delta", "obstruction-certificate", "check-compatible",
                   "unimodular-certificate", "transversally-constant"}
NEEDS_POISSON = {"jacobi", "modular", "unimodular-certificate", "transversally-constant"}


@dataclass
class Manifest:
    path: str
    digest: str
    coords: CoordinateSystem
    box: SampleBox
    names: dict[str, Any]
    foliation: list[str] | None
    two_form: str | None
    volume: str | None
    tasks: list[dict]
    sampling: Sampling
    functions: list[str] = field(default_factory=list)


def _require(cond, message, location):
    if not cond:
        raise ConfigError(message, location)


def _kind_ok(value, kind: str, m: int) -> bool:
    if kind == "scalar":
        return isinstance(value, ScalarExpr) or (isinstance(value, Form) and value.degree == 0)
    if kind == "form1":
        return isinstance(value, Form) and value.degree == 1
    if kind == "form2":
        return isinstance(value, Form) and value.degree == 2
    if kind == "top":
        return isinstance(value, Form) and value.degree == m
    if kind == "bivector":
        return isinstance(value, Multivector) and value.degree == 2
    return True


def _check_ref(names, ref, kind, m, location):
    _require(isinstance(ref, str), "expected the name of a definition", location)
    _require(ref in names, f"undefined name {ref!r}", location)
    _require(_kind_ok(names[ref], kind, m), f"{ref!r} is not a {kind} definition", location)


def _sampling(raw: dict, location: str) -> Sampling:
    _require(isinstance(raw, dict), "sampling must be an object", location)
    unknown = sorted(set(raw) - {"points", "seed", "tol_abs", "tol_rel"})
    _require(not unknown, f"unknown keys {unknown}",
             f"{location}/{unknown[0]}" if unknown else location)
    try:
        s = Sampling(int(raw.get("points", DEFAULT_POINTS)), int(raw.get("seed", DEFAULT_SEED)),
                     float(raw.get("tol_abs", DEFAULT_TOL_ABS)),
                     float(raw.get("tol_rel", DEFAULT_TOL_REL)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad sampling value: {exc}", location) from None
    _require(s.points >= 1, "points must be positive", location + "/points")
    _require(s.seed >= 0, "seed must be non-negative", location + "/seed")
    return s


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest: {exc.strerror}", "") from None
    digest = hashlib.sha256(raw_bytes).hexdigest()
    try:
        data = json.loads(raw_bytes)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "") from None
    return build_manifest(data, str(path.name), digest)


def build_manifest(data: Any, path: str = "<memory>", digest: str = "") -> Manifest:
    _require(isinstance(data, dict), "manifest must be a JSON object", "")
    unknown = sorted(set(data) - TOP_KEYS)
    _require(not unknown, f"unknown keys {unknown}", f"/{unknown[0]}" if unknown else "")

    coords_raw = data.get("coordinates")
    _require(isinstance(coords_raw, list) and coords_raw and all(isinstance(c, str) for c in coords_raw),
             "coordinates must be a non-empty list of names", "/coordinates")
    try:
        coords = CoordinateSystem(coords_raw)
    except (ValueError, FoliateError) as exc:
        raise ConfigError(str(exc), "/coordinates") from None
    m = coords.dimension

    box_raw = data.get("box")
    _require(isinstance(box_raw, dict), "box must map coordinate names to [lo, hi]", "/box")
    extra = set(box_raw) - set(coords.names)
    _require(not extra, f"box names unknown coordinates {sorted(extra)}", "/box")
    intervals = []
    for name in coords.names:
        iv = box_raw.get(name)
        loc = f"/box/{name}"
        _require(isinstance(iv, list) and len(iv) == 2
                 and all(isinstance(x, (int, float)) for x in iv), "expected [lo, hi]", loc)
        _require(iv[0] < iv[1], "interval must have lo < hi", loc)
        intervals.append(iv)
    box = SampleBox(intervals)

    names: dict[str, Any] = {}
    function_names: list[str] = []
    for section in ("definitions", "functions"):
        raw = data.get(section, {})
        _require(isinstance(raw, dict), f"{section} must be an object", f"/{section}")
        for name, text in raw.items():
            loc = f"/{section}/{name}"
            _require(isinstance(text, str), "expected an expression string", loc)
            _require(name not in names, f"{name!r} is defined twice", loc)
            _require(name not in coords.names, f"{name!r} shadows a coordinate", loc)
            try:
                value = parse_geometry(text, coords, names)
            except FoliateError as exc:
                raise ConfigError(str(exc), loc) from None
            if section == "functions":
                _require(isinstance(value, ScalarExpr), "functions must be scalar", loc)
                function_names.append(name)
            names[name] = value

    fol_raw = data.get("foliation")
    foliation: list[str] | None = None
    if fol_raw is not None:
        _require(isinstance(fol_raw, list), "foliation must list generator names", "/foliation")
        for i, ref in enumerate(fol_raw):
            _check_ref(names, ref, "form1", m, f"/foliation/{i}")
        foliation = list(fol_raw)

    two_form = data.get("two_form")
    if two_form is not None:
        _check_ref(names, two_form, "form2", m, "/two_form")
    volume = data.get("volume")
    if volume is not None:
        _check_ref(names, volume, "top", m, "/volume")

    sampling = _sampling(data.get("sampling", {}), "/sampling")

    tasks = data.get("tasks")
    _require(isinstance(tasks, list) and tasks, "tasks must be a non-empty list", "/tasks")
    have_poisson = False
    for i, task in enumerate(tasks):
        loc = f"/tasks/{i}"
        _require(isinstance(task, dict) and isinstance(task.get("task"), str),
                 "each task needs a 'task' name", loc)
        kind = task["task"]
        _require(kind in TASKS, f"unknown task {kind!r}", loc + "/task")
        options = TASKS[kind]
        unknown = set(task) - set(options) - {"task"}
        _require(not unknown, f"unknown options {sorted(unknown)}", loc)
        for key in REQUIRED.get(kind, ()):
            _require(key in task, f"missing option {key!r}", loc)
        for key, value in task.items():
            if key == "task":
                continue
            okind = options[key]
            if okind == "bool":
                _require(isinstance(value, bool), "expected true or false", f"{loc}/{key}")
            elif okind == "text":
                _require(isinstance(value, str), "expected a string", f"{loc}/{key}")
            elif okind == "scalars":
                _require(isinstance(value, list) and value, "expected a list of names", f"{loc}/{key}")
                for j, ref in enumerate(value):
                    _check_ref(names, ref, "scalar", m, f"{loc}/{key}/{j}")
            else:
                _check_ref(names, value, okind, m, loc)
        if kind in NEEDS_FOLIATION:
            _require(fol_raw is not None, f"task {kind!r} needs a foliation", loc)
        if kind in ("check-compatible", "transversally-constant") or (
                kind == "build-poisson" and "bivector" not in task):
            _require("two_form" in task or two_form is not None,
                     f"task {kind!r} needs a two_form", loc)
        if kind == "build-poisson":
            _require("bivector" in task or fol_raw is not None,
                     "build-poisson needs a foliation or a bivector", loc)
            have_poisson = True
        if kind in NEEDS_POISSON:
            _require(have_poisson, f"task {kind!r} needs an earlier build-poisson", loc)

    return Manifest(path, digest, coords, box, names, foliation, two_form, volume, list(tasks),
                    sampling, function_names)
