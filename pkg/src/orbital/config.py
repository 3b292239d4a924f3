"""JSON system configurations.

A configuration document has exactly the top-level keys ``dimension``,
``maps``, ``map_probs``, ``p``, ``mu0`` and (optionally) ``run``::

    {
      "dimension": 1,
      "maps": [{"kind": "affine1d", "a": 0.5, "b": 0.5}],
      "map_probs": [1.0],
      "p": 0.5,
      "mu0": {"kind": "point", "point": [0.0]},
      "run": {"depth": 20}
    }

Unknown keys are rejected.  Map kinds are ``affine1d`` (``a``, ``b``),
``affine2d`` (``A`` 2x2, ``t``) and ``named`` (``name``, ``params``).
Condensation kinds are ``point``, ``uniform_interval``, ``uniform_box`` and
``atoms``.  The probability ``q`` is always ``1 - p``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import OrbitalError, ParseError, SchemaViolation
from .ifs import Affine1D, Affine2D, CondensationSystem, NamedNonlinear, validate_system
from .measure import DiscreteMeasure
from .sampler import Atoms, Mu0Spec, PointMass, UniformBox, UniformInterval
from .series import depth_for_tolerance

_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 1, "maxItems": 2}

TOP_SCHEMA = {
    "type": "object",
    "required": ["dimension", "maps", "map_probs", "p", "mu0"],
    "additionalProperties": False,
    "properties": {
        "dimension": {"enum": [1, 2]},
        "maps": {"type": "array", "minItems": 1, "items": {"type": "object"}},
        "map_probs": {"type": "array", "items": _num},
        "p": _num,
        "mu0": {"type": "object"},
        "run": {"type": "object"},
    },
}

MAP_SCHEMAS = {
    "affine1d": {
        "required": ["kind", "a", "b"],
        "properties": {"kind": {}, "a": _num, "b": _num},
    },
    "affine2d": {
        "required": ["kind", "A", "t"],
        "properties": {
            "kind": {},
            "A": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
            "t": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        },
    },
    "named": {
        "required": ["kind", "name"],
        "properties": {"kind": {}, "name": {"type": "string"}, "params": {"type": "array", "items": _num}},
    },
}

MU0_SCHEMAS = {
    "point": {"required": ["kind", "point"], "properties": {"kind": {}, "point": _vec}},
    "uniform_interval": {"required": ["kind", "lo", "hi"], "properties": {"kind": {}, "lo": _num, "hi": _num}},
    "uniform_box": {"required": ["kind", "lo", "hi"], "properties": {"kind": {}, "lo": _vec, "hi": _vec}},
    "atoms": {
        "required": ["kind", "atoms", "weights"],
        "properties": {
            "kind": {},
            "atoms": {"type": "array", "minItems": 1, "items": _vec},
            "weights": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        },
    },
}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "depth": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "route": {"enum": ["enum", "neumann"]},
        "weight_floor": {"type": "number", "minimum": 0},
        "prune_tol": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "count": {"type": "integer", "minimum": 1},
        "method": {"enum": ["exact", "chaos"]},
        "stride": {"type": "integer", "minimum": 1},
        "mu0_atoms": {"type": "integer", "minimum": 1},
        "box": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
        "resolution": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 2},
        "scale": {"enum": ["linear", "log"]},
        "workers": {"type": "integer", "minimum": 1},
    },
}

for _schema in list(MAP_SCHEMAS.values()) + list(MU0_SCHEMAS.values()):
    _schema["type"] = "object"
    _schema["additionalProperties"] = False

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class RunConfig:
    depth: int | None = None
    tol: float | None = None
    route: str = "enum"
    weight_floor: float = 0.0
    prune_tol: float = 1e-15
    seed: int = 0
    count: int = 100_000
    method: str = "exact"
    stride: int = 1
    mu0_atoms: int = 64
    box: tuple | None = None
    resolution: tuple | None = None
    scale: str = "linear"
    workers: int = 1

    def resolve_depth(self, q: float) -> int:
        if self.depth is not None:
            return self.depth
        return depth_for_tolerance(q, self.tol if self.tol is not None else DEFAULT_TOL)


@dataclass(frozen=True)
class SystemConfig:
    system: CondensationSystem
    mu0_spec: Mu0Spec
    run: RunConfig
    document: dict
    source: str | None = None


def _path(parts) -> str:
    out = ""
    for part in parts:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _schema_errors(instance, schema, prefix=()) -> list[tuple[str, str]]:
    validator = jsonschema.Draft202012Validator(schema)
    errs = sorted(validator.iter_errors(instance), key=lambda e: list(map(str, e.absolute_path)))
    return [(_path(list(prefix) + list(e.absolute_path)), e.message) for e in errs]


def _build_map(doc: dict):
    kind = doc["kind"]
    if kind == "affine1d":
        return Affine1D(float(doc["a"]), float(doc["b"]))
    if kind == "affine2d":
        return Affine2D(doc["A"], doc["t"])
    return NamedNonlinear(doc["name"], tuple(doc.get("params", ())))


def _build_mu0(doc: dict) -> Mu0Spec:
    kind = doc["kind"]
    if kind == "point":
        return PointMass(tuple(doc["point"]))
    if kind == "uniform_interval":
        return UniformInterval(float(doc["lo"]), float(doc["hi"]))
    if kind == "uniform_box":
        return UniformBox(tuple(doc["lo"]), tuple(doc["hi"]))
    atoms = doc["atoms"]
    return Atoms(DiscreteMeasure(atoms, doc["weights"], dim=len(atoms[0])))


def _kinded(items, schemas, prefix, build, violations, indexed=True):
    built = []
    for i, item in enumerate(items):
        path = prefix + ((i,) if indexed else ())
        kind = item.get("kind")
        if kind not in schemas:
            violations.append((_path(path + ("kind",)), f"unknown kind {kind!r}; expected one of {sorted(schemas)}"))
            continue
        errs = _schema_errors(item, schemas[kind], path)
        if errs:
            violations.extend(errs)
            continue
        try:
            built.append(build(item))
        except (OrbitalError, ValueError) as exc:
            violations.append((_path(path), str(exc)))
    return built


def _reject_constant(name):
    raise ValueError(f"non-finite literal {name} is not allowed")


def parse_document(text: str) -> dict:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}", exc.lineno, exc.colno) from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return doc


def config_from_document(doc, source: str | None = None) -> SystemConfig:
    violations = _schema_errors(doc, TOP_SCHEMA)
    if violations:
        raise SchemaViolation("; ".join(f"{p}: {m}" for p, m in violations), violations)

    maps = _kinded(doc["maps"], MAP_SCHEMAS, ("maps",), _build_map, violations)
    mu0s = _kinded([doc["mu0"]], MU0_SCHEMAS, ("mu0",), _build_mu0, violations, indexed=False)
    run_doc = doc.get("run", {})
    violations.extend(_schema_errors(run_doc, RUN_SCHEMA, ("run",)))
    dim = doc["dimension"]
    for i, m in enumerate(maps):
        if m.dim != dim:
            violations.append((f"maps[{i}]", f"map acts on R^{m.dim}, dimension is {dim}"))
    if mu0s and mu0s[0].dim != dim:
        violations.append(("mu0", f"mu0 lives in R^{mu0s[0].dim}, dimension is {dim}"))
    if violations:
        raise SchemaViolation("; ".join(f"{p}: {m}" for p, m in violations), violations)

    run_kw = dict(run_doc)
    for key in ("box", "resolution"):
        if key in run_kw:
            run_kw[key] = tuple(tuple(v) if isinstance(v, list) else v for v in run_kw[key])
    run = RunConfig(**run_kw)
    mu0_spec = mu0s[0]
    try:
        system = validate_system(maps, doc["map_probs"], doc["p"], mu0=mu0_spec.to_measure(run.mu0_atoms))
    except OrbitalError as exc:
        raise SchemaViolation(str(exc), exc.violations or [("<root>", str(exc))]) from None
    return SystemConfig(system, mu0_spec, run, doc, source)


def load_config(document: str | Path) -> SystemConfig:
    """Parse and validate a configuration.

    ``document`` is either JSON text, a path to a file, or the name of a
    shipped preset (``"exercise"``, ``"exercise.cfg"``, ...).
    """
    source = None
    if isinstance(document, Path) or not str(document).lstrip().startswith("{"):
        path = resolve_config_path(str(document))
        source = str(path)
        text = path.read_text()
    else:
        text = str(document)
    return config_from_document(parse_document(text), source)


def preset_names() -> list[str]:
    return sorted(p.name for p in resources.files("orbital.presets").iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(name: str):
    path = Path(name)
    if path.exists():
        return path
    for candidate in (name, f"{name}.cfg"):
        res = resources.files("orbital.presets").joinpath(candidate)
        if res.is_file():
            return res
    raise FileNotFoundError(f"no config file or preset named {name!r}")
