"""Instance file format (JSON) and deterministic result serialisation.

An instance file is a JSON object::

    {
      "dimension": 2,
      "ambient_friction": 2.0,            # or "inf"
      "nodes": [[0.0, 0.0], [1.0, 0.0]],
      "arcs": [{"u": 0, "v": 1, "friction": 1.0}],
      "mu_plus": [{"point": [0.0, 0.0], "mass": 1.0}],
      "mu_minus": [{"point": [1.0, 0.0], "mass": 1.0}],
      "tau": {"kind": "power", "params": {"alpha": 0.9}},            # optional
      "settings": {"subdivision_h": 0.25, "max_iter": 100, "tol": 1e-9},  # optional
      "node_frictions": [{"node": 0, "friction": 1.0}]               # optional
    }

Unknown keys are rejected.  Floats are written with ``repr`` so that a
parse/serialise round trip is bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .costs import PIECEWISE_LINEAR, POWER, TransportationCost
from .geometry import CityInstance, DiscreteMeasure, StreetArc

INF = math.inf
DEFAULT_SUBDIVISION_H = 0.25

TOP_KEYS = (
    "dimension",
    "ambient_friction",
    "nodes",
    "arcs",
    "mu_plus",
    "mu_minus",
    "tau",
    "settings",
    "node_frictions",
)
REQUIRED_KEYS = ("dimension", "ambient_friction", "nodes", "arcs", "mu_plus", "mu_minus")
SETTINGS_KEYS = ("subdivision_h", "max_iter", "tol")


class InstanceError(ValueError):
    """Malformed instance file."""


@dataclass(frozen=True)
class Settings:
    subdivision_h: float | None = None
    max_iter: int | None = None
    tol: float | None = None

    def merged(self, **flags) -> "Settings":
        """Command-line flags win over values stored in the file."""
        values = {k: getattr(self, k) for k in SETTINGS_KEYS}
        values.update({k: v for k, v in flags.items() if v is not None})
        return Settings(**values)


@dataclass(frozen=True, eq=False)
class Instance:
    city: CityInstance
    mu_plus: DiscreteMeasure
    mu_minus: DiscreteMeasure
    tau: TransportationCost | None = None
    settings: Settings = field(default_factory=Settings)

    @property
    def subdivision_h(self) -> float:
        h = self.settings.subdivision_h
        return DEFAULT_SUBDIVISION_H if h is None else h


def _number(value, where: str, allow_inf: bool = False) -> float:
    if allow_inf and value == "inf":
        return INF
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _check_keys(obj: dict, allowed, where: str) -> None:
    if not isinstance(obj, dict):
        raise InstanceError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise InstanceError(f"{where}: unknown key {key!r}")


def _point(value, dim: int, where: str) -> tuple[float, ...]:
    if not isinstance(value, list) or len(value) != dim:
        raise InstanceError(f"{where}: expected {dim} coordinates")
    return tuple(_number(c, where) for c in value)


def _measure(items, dim: int, where: str) -> DiscreteMeasure:
    if not isinstance(items, list):
        raise InstanceError(f"{where}: expected an array of atoms")
    atoms = []
    for i, atom in enumerate(items):
        w = f"{where}[{i}]"
        _check_keys(atom, ("point", "mass"), w)
        if "point" not in atom or "mass" not in atom:
            raise InstanceError(f"{w}: atoms need 'point' and 'mass'")
        atoms.append((_point(atom["point"], dim, w), _number(atom["mass"], w)))
    return DiscreteMeasure(tuple(atoms))


def _tau(obj) -> TransportationCost:
    _check_keys(obj, ("kind", "params"), "tau")
    kind = obj.get("kind")
    params = obj.get("params", {})
    if kind == PIECEWISE_LINEAR:
        _check_keys(params, ("breakpoints", "slopes"), "tau.params")
        bps = [_number(x, "tau.params.breakpoints") for x in params.get("breakpoints", [])]
        sls = [_number(x, "tau.params.slopes") for x in params.get("slopes", [])]
        return TransportationCost.piecewise_linear(bps, sls)
    if kind == POWER:
        _check_keys(params, ("alpha",), "tau.params")
        return TransportationCost.power(_number(params.get("alpha"), "tau.params.alpha"))
    raise InstanceError(f"tau: unknown kind {kind!r}")


def parse_instance(obj: Any) -> Instance:
    _check_keys(obj, TOP_KEYS, "instance")
    for key in REQUIRED_KEYS:
        if key not in obj:
            raise InstanceError(f"instance: missing key {key!r}")
    dim = obj["dimension"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise InstanceError("dimension must be a positive integer")
    a = _number(obj["ambient_friction"], "ambient_friction", allow_inf=True)
    nodes = [_point(p, dim, f"nodes[{i}]") for i, p in enumerate(obj["nodes"])]
    arcs = []
    for i, arc in enumerate(obj["arcs"]):
        w = f"arcs[{i}]"
        _check_keys(arc, ("u", "v", "friction"), w)
        try:
            u, v = int(arc["u"]), int(arc["v"])
            fr = _number(arc["friction"], w, allow_inf=True)
        except KeyError as exc:
            raise InstanceError(f"{w}: missing key {exc.args[0]!r}") from None
        arcs.append(StreetArc(u, v, fr))
    node_friction = {}
    for i, item in enumerate(obj.get("node_frictions", [])):
        w = f"node_frictions[{i}]"
        _check_keys(item, ("node", "friction"), w)
        node_friction[int(item["node"])] = _number(item["friction"], w)
    try:
        city = CityInstance(tuple(nodes), tuple(arcs), a, node_friction)
        mu_plus = _measure(obj["mu_plus"], dim, "mu_plus")
        mu_minus = _measure(obj["mu_minus"], dim, "mu_minus")
        tau = _tau(obj["tau"]) if "tau" in obj else None
    except InstanceError:
        raise
    except ValueError as exc:
        raise InstanceError(str(exc)) from None
    settings_obj = obj.get("settings", {})
    _check_keys(settings_obj, SETTINGS_KEYS, "settings")
    settings = Settings(
        subdivision_h=(
            _number(settings_obj["subdivision_h"], "settings.subdivision_h")
            if "subdivision_h" in settings_obj
            else None
        ),
        max_iter=int(settings_obj["max_iter"]) if "max_iter" in settings_obj else None,
        tol=_number(settings_obj["tol"], "settings.tol") if "tol" in settings_obj else None,
    )
    return Instance(city, mu_plus, mu_minus, tau, settings)


def load_instance(path: str | Path) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_instance(obj)


def _num_out(x: float):
    return "inf" if math.isinf(x) and x > 0 else float(x)


def instance_to_dict(inst: Instance) -> dict:
    city = inst.city
    out: dict[str, Any] = {
        "dimension": city.dimension or len(inst.mu_plus.points[0]),
        "ambient_friction": _num_out(city.ambient_friction),
        "nodes": [list(p) for p in city.nodes],
        "arcs": [{"u": a.u, "v": a.v, "friction": _num_out(a.friction)} for a in city.arcs],
        "mu_plus": [{"point": list(p), "mass": m} for p, m in inst.mu_plus.atoms],
        "mu_minus": [{"point": list(p), "mass": m} for p, m in inst.mu_minus.atoms],
    }
    if inst.tau is not None:
        tc = inst.tau
        if tc.kind == POWER:
            params: dict[str, Any] = {"alpha": tc.alpha}
        else:
            params = {"breakpoints": list(tc.breakpoints), "slopes": list(tc.slopes)}
        out["tau"] = {"kind": tc.kind, "params": params}
    settings = {k: getattr(inst.settings, k) for k in SETTINGS_KEYS if getattr(inst.settings, k) is not None}
    if settings:
        out["settings"] = settings
    if city.node_friction:
        out["node_frictions"] = [
            {"node": i, "friction": f} for i, f in sorted(city.node_friction.items())
        ]
    return out


def dump_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def format_float(x: float) -> str:
    """17 significant digits; infinities become the string ``"inf"``."""
    if math.isnan(x):
        raise ValueError("NaN cannot be serialised")
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dump_result(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: insertion-ordered keys, fixed float format."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_result(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dump_result(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dump_result(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def contains_inf(obj: Any) -> bool:
    if isinstance(obj, float):
        return math.isinf(obj)
    if isinstance(obj, dict):
        return any(contains_inf(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return any(contains_inf(v) for v in obj)
    return False
