"""Run configuration: TOML parsing and validation for the command-line tools.

A configuration file holds one table named after the subcommand with its
physical parameters, an optional ``[tolerances]`` table and an optional
``[run]`` table (``workers``, ``out``, ``format``). Missing tables and keys
take their defaults. Validation collects every violation before failing.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import toml
import tomli

SUBCOMMANDS = ("unruh", "cosmo-spectrum", "echo", "harvest-map", "harvest-point", "farm", "seismo")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations, line: int | None = None):
        self.violations = list(violations)
        self.line = line
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Param:
    kind: str  # float | int | str | bool | floats
    default: Any
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    choices: tuple = ()


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _all_pos(xs):
    return len(xs) > 0 and all(x > 0 for x in xs)


def _P(default, rule="must be positive"):
    return Param("float", default, _pos, rule)


def _Pi(default, rule="must be a positive integer"):
    return Param("int", default, _pos, rule)


def _L(default, check=_all_pos, rule="must be a non-empty list of positive numbers"):
    return Param("floats", list(default), check, rule)


def _choice(default, choices):
    return Param("str", default, None, "", tuple(choices))


_EPS = [1e-2, 5e-3, 2.5e-3]

_FARM = {
    "length": _P(1.0),
    "n_modes": _Pi(40),
    "gap": _P(math.pi),
    "lam0": Param("float", 0.3, _nonneg, "must be non-negative"),
    "cycle_duration": _P(8.0),
    "positions": _L([1 / math.pi, 1 - 1 / math.pi],
                    lambda xs: len(xs) == 2 and all(0 < x < 1 for x in xs),
                    "must be two positions strictly inside (0, 1) in units of the length"),
    "ramp": Param("float", 0.125, lambda x: 0 < x <= 0.5, "must lie in (0, 0.5]"),
    "initial_nbar": Param("float", 0.0, _nonneg, "must be non-negative"),
    "max_cycles": _Pi(200),
}
_FARM_TOL = {
    "convergence_tol": _P(1e-6),
    "state_tol": _P(1e-3),
    "patience": _Pi(5),
    "rel_tol": _P(1e-10),
}
_HARVEST_TOL = {
    "eps_schedule": _L(_EPS, lambda xs: len(xs) == 3 and all(x > 0 for x in xs),
                       "must be three positive regulator values"),
    "cut": _P(6.0),
}

SCHEMAS: dict[str, tuple[dict, dict]] = {
    "unruh": (
        {"omega": _L([1.0]), "accelerations": _L([0.5, 1.0, 2.0]), "n_max": _Pi(500)},
        {},
    ),
    "cosmo-spectrum": (
        {
            "statistics": _choice("boson", ("boson", "fermion")),
            "epsilon": Param("float", 0.5, lambda x: 0 < x < 1, "must lie in (0, 1)"),
            "rho": _P(1.0),
            "mass": Param("float", 1.0, _nonneg, "must be non-negative"),
            "k_min": _P(0.1),
            "k_max": _P(10.0),
            "n_k": _Pi(20),
        },
        {"tol": _P(1e-12), "window": _P(20.0)},
    ),
    "echo": (
        {
            "pi_phi": _P(1000.0),
            "l_values": _L([0.25, 0.5, 1.0]),
            "switching": _choice("chi1", ("chi1", "chi2", "chi3", "chi4")),
            "delta": _P(1e-3),
            "Omega": _P(0.1),
            "lam": _P(1.0),
            "x0": _L([0.0, 0.0, 0.0], lambda xs: len(xs) == 3 and all(0 <= x < 1 for x in xs),
                     "must be three coordinates in [0, 1) (units of the torus length)"),
            "T0": _P(0.01),
            "T_m": _P(0.5),
            "T_late": _P(20.0),
            "T": _P(40.0),
            "T_avg": _P(10.0),
            "n_max": _Pi(15),
        },
        {"step": _P(0.025)},
    ),
    "harvest-map": (
        {
            "case": _choice("minkowski", ("desitter", "thermal", "minkowski", "parallel", "antiparallel")),
            "method": _choice("numeric", ("numeric", "closed-form")),
            "n_L": _Pi(40),
            "n_s": _Pi(40),
            "L_kappa_max": _P(4.0),
            "ks2o_max": Param("float", math.pi, lambda x: 0 < x <= math.pi, "must lie in (0, pi]"),
            "sigma_omega": _P(4.0),
        },
        dict(_HARVEST_TOL),
    ),
    "harvest-point": (
        {
            "case": _choice("minkowski", ("minkowski", "parallel", "antiparallel")),
            "kappa": _P(0.5),
            "L": _P(1.0),
            "Omega": _P(2.0),
            "sigma": _P(1.0),
            "lam": _P(1.0),
        },
        dict(_HARVEST_TOL),
    ),
    "farm": (dict(_FARM), dict(_FARM_TOL)),
    "seismo": (
        dict(_FARM, amplitudes=_L([0.0, 0.01], lambda xs: len(xs) > 0 and all(x >= 0 for x in xs),
                                  "must be a non-empty list of non-negative numbers"),
             frequencies=_L([0.05, 0.1]), phase=Param("float", 0.0)),
        dict(_FARM_TOL),
    ),
}

_RUN = {"workers": Param("int", None, _pos, "must be a positive integer"),
        "out": Param("str", None), "format": Param("str", None, None, "", FORMATS)}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    tolerances: dict
    workers: int | None = None
    out: str | None = None
    format: str | None = None

    @property
    def record(self) -> dict:
        """Physical inputs only; run options do not affect results."""
        return {"subcommand": self.subcommand, "params": self.params, "tolerances": self.tolerances}

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.record, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _coerce(name: str, spec: Param, value, errors: list):
    """Type-check one value; append a violation naming ``name`` on failure."""
    ok = True
    if spec.kind == "float":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif spec.kind == "int":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif spec.kind == "bool":
        ok = isinstance(value, bool)
    elif spec.kind == "str":
        ok = isinstance(value, str)
    elif spec.kind == "floats":
        ok = isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        value = [float(v) for v in value] if ok else value
    if not ok:
        errors.append(f"{name}: expected {spec.kind}, got {type(value).__name__}")
        return None
    if spec.kind in ("float", "floats") and not all(math.isfinite(v) for v in (value if spec.kind == "floats" else [value])):
        errors.append(f"{name}: must be finite")
        return None
    if spec.choices and value not in spec.choices:
        errors.append(f"{name}: must be one of {', '.join(spec.choices)}")
        return None
    if spec.check is not None and not spec.check(value):
        errors.append(f"{name}: {spec.rule}")
        return None
    return value


def _section(table: dict, schema: dict, prefix: str, errors: list) -> dict:
    if not isinstance(table, dict):
        errors.append(f"{prefix}: expected a table")
        return {}
    out = {}
    for key in table:
        if key not in schema:
            errors.append(f"{prefix}.{key}: unknown parameter")
    for key, spec in schema.items():
        if key in table:
            out[key] = _coerce(f"{prefix}.{key}" if prefix else key, spec, table[key], errors)
        else:
            out[key] = list(spec.default) if isinstance(spec.default, list) else spec.default
    return out


def _cross_checks(sub: str, p: dict, errors: list):
    if None in p.values():
        return  # individual errors already reported
    if sub == "cosmo-spectrum" and not p["k_min"] < p["k_max"]:
        errors.append(f"{sub}.k_max: must exceed k_min")
    if sub == "echo":
        if not p["T0"] < p["T_m"] < p["T_late"] < p["T"]:
            errors.append(f"{sub}.T: need T0 < T_m < T_late < T")
        if not p["T_avg"] <= p["T_late"] - p["T0"]:
            errors.append(f"{sub}.T_avg: must not exceed T_late - T0")
    if sub == "harvest-map" and p["case"] == "antiparallel" and p["method"] == "closed-form":
        errors.append(f"{sub}.method: the anti-parallel case has no closed form")
    if sub in ("farm", "seismo"):
        if any(a > 0.05 * p["length"] for a in p.get("amplitudes", [])):
            errors.append(f"{sub}.amplitudes: must not exceed 5% of the length")


def validate(sub: str, data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from parsed TOML data, collecting all violations."""
    errors: list[str] = []
    if sub not in SCHEMAS:
        raise ConfigError([f"subcommand: unknown {sub!r}, expected one of {', '.join(SUBCOMMANDS)}"])
    for key in data:
        if key not in (sub, "tolerances", "run"):
            errors.append(f"{key}: unknown section for {sub}")
    pschema, tschema = SCHEMAS[sub]
    params = _section(data.get(sub, {}), pschema, sub, errors)
    tols = _section(data.get("tolerances", {}), tschema, "tolerances", errors)
    run = _section(data.get("run", {}), _RUN, "run", errors)
    if not errors:
        _cross_checks(sub, params, errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(sub, params, tols, run["workers"], run["out"], run["format"])


def parse_config(text: str, subcommand: str) -> RunConfig:
    """Parse TOML ``text`` for ``subcommand``.

    Raises:
        ConfigError: with the line number for syntax errors, or the list of
            all parameter violations (each naming its parameter).
    """
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError([f"syntax error: {exc}"], line=line) from None
    return validate(subcommand, data)


def emit_config(cfg: RunConfig) -> str:
    """TOML text that parses back to ``cfg``."""
    doc: dict = {cfg.subcommand: cfg.params}
    if cfg.tolerances:
        doc["tolerances"] = cfg.tolerances
    run = {k: v for k, v in (("workers", cfg.workers), ("out", cfg.out), ("format", cfg.format)) if v is not None}
    if run:
        doc["run"] = run
    return toml.dumps(doc)


def default_config(subcommand: str) -> RunConfig:
    return validate(subcommand, {})
