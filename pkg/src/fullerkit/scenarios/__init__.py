"""Scenario registry and loader.

A scenario is a JSON document (version 1) that names a built-in vector field
with parameters, search settings, per-command option defaults, and a list of
expected quantities with provenance tags.  Built-in scenarios ship as package
data and go through the same loader and validation as user files.

Expected-entry provenance must be one of PAPER, TRIVIAL, DERIVED; DERIVED
entries must say which independent oracle produced the value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Optional

import numpy as np

from ..config import ToolConfig
from ..errors import ParseError, SchemaViolation, UnknownBuiltin
from ..geometry import (S3, SOLID_TORUS, T2, ContactFormFamily, VectorFieldFamily)
from ..orbits import analytic_jacobian
from ..reeb import (breaking_homotopy, broken_symmetry_form, rescale_homotopy,
                    round_contact)

# -- built-in field registry ------------------------------------------------------


def _params(given: dict, defaults: dict, field_name: str) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise SchemaViolation(f"unknown parameters for field {field_name!r}",
                              unknown=sorted(unknown), allowed=sorted(defaults))
    out = dict(defaults)
    out.update(given)
    return out


def _build_round(params: dict):
    _params(params, {}, "round-reeb-s3")
    c = round_contact()
    return c.reeb, c


def _build_broken(params: dict):
    p = _params(params, {"mu": 0.05}, "broken-reeb-s3")
    c = broken_symmetry_form(p["mu"])
    return c.reeb, c


def _build_rescale(params: dict):
    p = _params(params, {"rate": 0.1}, "rescale-reeb-s3")
    c = rescale_homotopy(p["rate"])
    return c.reeb, c


def _build_breaking(params: dict):
    p = _params(params, {"mu": 0.05}, "breaking-homotopy-s3")
    c = breaking_homotopy(p["mu"])
    return c.reeb, c


def _build_blue_sky(params: dict):
    p = _params(params, {"alpha0": 0.25, "gamma0": 0.15, "v1": 0.5,
                         "kappa": 1.0, "omega0": 1.0}, "blue-sky-torus")
    a0, g0, v1 = p["alpha0"], p["gamma0"], p["v1"]
    kap, w0 = p["kappa"], p["omega0"]

    def f(x, t):
        u, v = x[0], x[1]
        s = 1.0 - t
        return np.array([-a0 * s * u,
                         g0 * s * v * (1.0 - v * v / (v1 * v1)),
                         w0 * s + kap * (u * u + v * v)])

    fam = VectorFieldFamily("blue-sky-torus", SOLID_TORUS, f,
                            jac=analytic_jacobian(f), params=p)
    return fam, None


def _build_t2_linear(params: dict):
    p = _params(params, {"wx": 1.0, "wy": 0.5}, "t2-linear")
    w = np.array([p["wx"], p["wy"]])

    def f(x, t):
        return w.copy()

    fam = VectorFieldFamily("t2-linear", T2, f,
                            jac=lambda x, t: np.zeros((2, 2)), params=p)
    return fam, None


def _build_t2_shear(params: dict):
    p = _params(params, {"a": 0.3, "eps": 0.2}, "t2-shear")
    a, eps = p["a"], p["eps"]

    def f(x, t):
        return np.array([1.0 + a * np.cos(x[1]), eps * np.sin(x[1])])

    fam = VectorFieldFamily("t2-shear", T2, f, jac=analytic_jacobian(f), params=p)
    return fam, None


def _build_near_round(params: dict):
    p = _params(params, {"delta": 0.01}, "near-round-s3")
    delta = p["delta"]

    def f(x, t):
        h = np.array([-x[1], x[0], -x[3], x[2]])
        w = np.array([x[2] + 1.0, x[3], x[0], x[1]])
        return h + delta * (w - (x @ w) * x)

    fam = VectorFieldFamily(f"near-round-s3[{delta}]", S3, f,
                            jac=analytic_jacobian(f), params=p)
    return fam, None


FIELD_BUILDERS: dict[str, Callable[[dict], tuple[VectorFieldFamily, Optional[ContactFormFamily]]]] = {
    "round-reeb-s3": _build_round,
    "broken-reeb-s3": _build_broken,
    "rescale-reeb-s3": _build_rescale,
    "breaking-homotopy-s3": _build_breaking,
    "blue-sky-torus": _build_blue_sky,
    "t2-linear": _build_t2_linear,
    "t2-shear": _build_t2_shear,
    "near-round-s3": _build_near_round,
}


# -- schema ----------------------------------------------------------------------

_TOP_KEYS = {"v", "name", "title", "field", "contact", "config", "search",
             "defaults", "expected"}
_FIELD_KEYS = {"name", "params"}
_SEARCH_KEYS = {"seeds_count", "seed_points", "period_hints", "period_cap"}
_DEFAULTS_KEYS = {"classify-type", "continue", "detect-sky", "correspond",
                  "reeb-bound", "build-psys", "c0probe"}
_CMD_KEYS = {
    "classify-type": {"caps", "use_levels", "levels"},
    "continue": {"starts", "direction", "p_max"},
    "detect-sky": {"starts", "direction", "p_max"},
    "correspond": {"k", "covers"},
    "reeb-bound": {"start", "hint"},
    "build-psys": {"levels", "cap"},
    "c0probe": {"deltas", "base_point", "hint"},
}
_START_KEYS = {"name", "point", "hint"}
_EXPECTED_KEYS = {"quantity", "value", "tol", "tol_rel", "provenance", "oracle", "note"}
_PROVENANCE = {"PAPER", "TRIVIAL", "DERIVED"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaViolation(f"{where} must be an object", got=type(obj).__name__)
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaViolation(f"unknown keys in {where}", unknown=sorted(unknown),
                              allowed=sorted(allowed))


@dataclass
class Scenario:
    name: str
    field_name: str
    field_params: dict
    title: str = ""
    contact_enabled: bool = False
    config_overrides: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    defaults: dict = field(default_factory=dict)
    expected: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def build(self) -> tuple[VectorFieldFamily, Optional[ContactFormFamily]]:
        return FIELD_BUILDERS[self.field_name](self.field_params)

    def config(self, base: ToolConfig) -> ToolConfig:
        return base.replace(**self.config_overrides) if self.config_overrides else base

    def command_defaults(self, command: str) -> dict:
        return dict(self.defaults.get(command, {}))


def parse_scenario(doc: dict) -> Scenario:
    _check_keys(doc, _TOP_KEYS, "scenario")
    if doc.get("v") != 1:
        raise SchemaViolation("unsupported scenario version", v=doc.get("v"))
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaViolation("scenario needs a non-empty string name")
    fld = doc.get("field")
    _check_keys(fld or {}, _FIELD_KEYS, "field")
    if not fld or "name" not in fld:
        raise SchemaViolation("scenario needs field.name")
    if fld["name"] not in FIELD_BUILDERS:
        raise SchemaViolation(f"unknown field {fld['name']!r}",
                              known=sorted(FIELD_BUILDERS))
    params = fld.get("params", {})
    if not isinstance(params, dict):
        raise SchemaViolation("field.params must be an object")
    contact_enabled = doc.get("contact", False)
    if not isinstance(contact_enabled, bool):
        raise SchemaViolation("contact must be a boolean")
    config_overrides = doc.get("config", {})
    if not isinstance(config_overrides, dict):
        raise SchemaViolation("config must be an object of tool settings")
    search = doc.get("search", {})
    _check_keys(search, _SEARCH_KEYS, "search")
    defaults = doc.get("defaults", {})
    _check_keys(defaults, _DEFAULTS_KEYS, "defaults")
    for cmd, opts in defaults.items():
        _check_keys(opts, _CMD_KEYS[cmd], f"defaults.{cmd}")
        if cmd in ("continue", "detect-sky") and "starts" in opts:
            if not isinstance(opts["starts"], list) or not opts["starts"]:
                raise SchemaViolation(f"defaults.{cmd}.starts must be a non-empty list")
            for st in opts["starts"]:
                _check_keys(st, _START_KEYS, f"defaults.{cmd}.starts[]")
                if "point" not in st or "hint" not in st:
                    raise SchemaViolation("each start needs point and hint")
    expected = doc.get("expected", [])
    if not isinstance(expected, list):
        raise SchemaViolation("expected must be a list")
    for e in expected:
        _check_keys(e, _EXPECTED_KEYS, "expected[]")
        if "quantity" not in e or "value" not in e:
            raise SchemaViolation("expected entries need quantity and value")
        prov = e.get("provenance")
        if prov not in _PROVENANCE:
            raise SchemaViolation("expected provenance must be PAPER, TRIVIAL or DERIVED",
                                  got=prov)
        if prov == "DERIVED" and not e.get("oracle"):
            raise SchemaViolation("DERIVED expectations must name their oracle",
                                  quantity=e["quantity"])
    # instantiating validates parameter names and values
    FIELD_BUILDERS[fld["name"]](params)
    if config_overrides:
        ToolConfig().replace(**config_overrides)
    return Scenario(name=name, field_name=fld["name"], field_params=dict(params),
                    title=doc.get("title", ""), contact_enabled=contact_enabled,
                    config_overrides=dict(config_overrides), search=dict(search),
                    defaults={k: dict(v) for k, v in defaults.items()},
                    expected=list(expected), raw=doc)


def load_scenario_text(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"scenario is not valid JSON: {e}") from e
    return parse_scenario(doc)


def load_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario_text(fh.read())


def builtin_names() -> list[str]:
    base = resources.files(__package__) / "data"
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".json"))


def load_builtin(name: str) -> Scenario:
    base = resources.files(__package__) / "data"
    p = base / f"{name}.json"
    if not p.is_file():
        raise UnknownBuiltin(f"no built-in scenario named {name!r}",
                             known=builtin_names())
    return load_scenario_text(p.read_text(encoding="utf-8"))


def resolve_scenario(ref: str | dict) -> Scenario:
    """Name of a built-in, path to a JSON file, or an inline document."""
    if isinstance(ref, dict):
        return parse_scenario(ref)
    if ref.endswith(".json") or "/" in ref:
        return load_scenario_file(ref)
    return load_builtin(ref)
