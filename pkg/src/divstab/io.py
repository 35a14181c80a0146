"""Model and job files: JSON in, validated immutable models out.

Every number in a model file is an exact rational, written as an integer or a
"p/q" string.  Structural checks use jsonschema; mathematical invariants
(signature, completeness, primitivity) are enforced by the backend
constructors and surface here as SchemaError with the invariant named.
"""
import hashlib
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .curve import CurveModel
from .errors import DomainError, SchemaError
from .scalars import fmt, q
from .surface import SurfaceModel
from .toric import ToricModel

_RAT = {"anyOf": [{"type": "integer"}, {"type": "string", "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"}]}
_VEC = {"type": "array", "items": _RAT}
_CLASS = {"anyOf": [_VEC, {"type": "string"}]}

SCHEMAS = {
    "curve": {
        "type": "object",
        "required": ["kind", "genus", "V"],
        "properties": {
            "kind": {"const": "curve"}, "name": {"type": "string"},
            "genus": {"type": "integer", "minimum": 0}, "V": _RAT,
            "points": {"type": "array", "items": {
                "type": "object", "required": ["id", "b"],
                "properties": {"id": {"type": "string"}, "b": _RAT}, "additionalProperties": False}},
            "generic_point": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "surface": {
        "type": "object",
        "required": ["kind", "basis", "gram", "canonical", "primes", "extremal_curves"],
        "properties": {
            "kind": {"const": "surface"}, "name": {"type": "string"},
            "basis": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "gram": {"type": "array", "items": _VEC}, "canonical": _VEC,
            "primes": {"type": "object", "additionalProperties": _VEC},
            "boundary": {"type": "array", "items": {
                "type": "object", "required": ["prime", "b"],
                "properties": {"prime": {"type": "string"}, "b": _RAT}, "additionalProperties": False}},
            "negative_curves": {"type": "array", "items": _CLASS},
            "extremal_curves": {"type": "array", "items": _CLASS, "minItems": 1},
            "reference_ample": _VEC, "omega": _VEC,
            "blowups": {"type": "object", "additionalProperties": {
                "type": "object", "required": ["steps"],
                "properties": {
                    "steps": {"type": "array", "minItems": 1, "items": {
                        "type": "object", "required": ["name", "mult"],
                        "properties": {"name": {"type": "string"},
                                       "mult": {"type": "object", "additionalProperties": {"type": "integer",
                                                                                           "minimum": 0}}},
                        "additionalProperties": False}},
                    "extremal": {"type": "array", "items": {"type": "string"}},
                    "negative": {"type": "array", "items": {"type": "string"}},
                },
                "additionalProperties": False}},
        },
        "additionalProperties": False,
    },
    "toric": {
        "type": "object",
        "required": ["kind", "n", "rays", "max_cones"],
        "properties": {
            "kind": {"const": "toric"}, "name": {"type": "string"},
            "n": {"type": "integer", "minimum": 1},
            "rays": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}, "minItems": 2},
            "max_cones": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
            "boundary": _VEC, "omega": _VEC,
        },
        "additionalProperties": False,
    },
}


def _vec(xs):
    return [q(x) for x in xs]


def _cls_or_name(x):
    return x if isinstance(x, str) else _vec(x)


def model_from_dict(d, name=None):
    if not isinstance(d, dict) or d.get("kind") not in SCHEMAS:
        raise SchemaError('model file needs "kind" in {curve, surface, toric}')
    try:
        jsonschema.validate(d, SCHEMAS[d["kind"]])
    except jsonschema.ValidationError as e:
        loc = "/".join(map(str, e.absolute_path)) or "<root>"
        raise SchemaError(f"schema violation at {loc}: {e.message}") from None
    name = d.get("name", name or d["kind"])
    kind = d["kind"]
    try:
        if kind == "curve":
            pts = {}
            for p in d.get("points", []):
                if p["id"] in pts:
                    raise SchemaError(f"duplicate point id {p['id']!r}")
                pts[p["id"]] = q(p["b"])
            kw = {"generic_point": d["generic_point"]} if "generic_point" in d else {}
            return CurveModel(d["genus"], q(d["V"]), pts, name, **kw)
        if kind == "surface":
            boundary = {}
            for b in d.get("boundary", []):
                boundary[b["prime"]] = boundary.get(b["prime"], 0) + q(b["b"])
            return SurfaceModel(
                d["basis"], [_vec(r) for r in d["gram"]], _vec(d["canonical"]),
                {k: _vec(v) for k, v in d["primes"].items()}, boundary,
                [_cls_or_name(c) for c in d.get("negative_curves", [])],
                [_cls_or_name(c) for c in d["extremal_curves"]],
                _vec(d["reference_ample"]) if "reference_ample" in d else None,
                _vec(d["omega"]) if "omega" in d else None,
                d.get("blowups"), name)
        return ToricModel(d["n"], [tuple(r) for r in d["rays"]], [tuple(c) for c in d["max_cones"]],
                          _vec(d["boundary"]) if "boundary" in d else None,
                          _vec(d["omega"]) if "omega" in d else None, name)
    except DomainError as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"invalid {kind} model: {e}") from None


def corpus_dir():
    return resources.files("divstab") / "corpus"


def resolve_path(path, sub="models"):
    """A file path, or a bundled name like "f1" / "models/f1.json" / "jobs/ordE_antican.json"."""
    p = Path(path)
    if p.exists():
        return p
    root = corpus_dir()
    for cand in (root / str(path), root / sub / str(path), root / sub / (str(path) + ".json"),
                 root / sub / p.name):
        if cand.is_file():
            return Path(str(cand))
    raise SchemaError(f"no such model or job file: {path}")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from None
    except OSError as e:
        raise SchemaError(f"{path}: {e.strerror}") from None


def load_model(path):
    p = resolve_path(path)
    return model_from_dict(read_json(p), name=p.stem)


def load_job(path):
    p = resolve_path(path, "jobs")
    d = read_json(p)
    if not isinstance(d, dict):
        raise SchemaError("job file must be a JSON object")
    return d


def serialize(model):
    """Canonical dict; load(serialize(m)) reproduces m."""
    if model.kind == "curve":
        out = {"kind": "curve", "name": model.name, "genus": model.genus, "V": fmt(model.V),
               "points": [{"id": k, "b": fmt(b)} for k, b in sorted(model.points.items())]}
        if model.generic_point != "q":
            out["generic_point"] = model.generic_point
        return out
    if model.kind == "surface":
        out = {"kind": "surface", "name": model.name, "basis": list(model.names),
               "gram": [[fmt(x) for x in r] for r in model.G], "canonical": model.K_X.to_json(),
               "primes": {k: v.to_json() for k, v in sorted(model.primes.items())},
               "boundary": [{"prime": k, "b": fmt(b)} for k, b in sorted(model.boundary.items())],
               "negative_curves": [c.to_json() for c in model.negative_curves],
               "extremal_curves": [c.to_json() for c in model.extremal_curves],
               "reference_ample": model.reference_ample.to_json()}
        if model.omega is not None:
            out["omega"] = model.omega.to_json()
        if model.chain_specs:
            out["blowups"] = model.chain_specs
        return out
    out = {"kind": "toric", "name": model.name, "n": model.dim, "rays": [list(r) for r in model.rays],
           "max_cones": [list(c) for c in model.max_cones], "boundary": [fmt(b) for b in model.b]}
    if model.omega_support is not None:
        out["omega"] = [fmt(x) for x in model.omega_support]
    return out


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def model_hash(model):
    return "sha256:" + hashlib.sha256(canonical_json(serialize(model)).encode()).hexdigest()


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
