"""Result envelopes and their CSV/JSON serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from . import __version__

ENVELOPE_VERSION = "1"
UNITS = "natural units (hbar = c = k_B = 1); echo times and lengths in Planck units (l_p = 1)"

# Column schema per subcommand; a change bumps the version suffix.
COLUMNS = {
    "unruh": ("1", ["omega", "a", "r", "nbar", "nbar_from_distribution", "T_U", "n_max", "config_hash"]),
    "cosmo-spectrum": ("1", ["k", "statistics", "omega_in", "omega_out", "alpha_abs2", "beta_abs2",
                             "norm_defect", "entropy", "error", "tol", "window", "config_hash"]),
    "echo": ("1", ["l", "switching", "E", "tail_ratio", "flagged", "notes", "n_max", "step", "delta",
                   "config_hash"]),
    "harvest-map": ("1", ["L_kappa", "ks2o", "entangled", "A", "X_re", "X_im", "negativity", "flagged",
                          "method", "sigma_omega", "eps_schedule", "cut", "config_hash"]),
    "harvest-point": ("1", ["case", "kappa", "L", "Omega", "sigma", "A", "X_re", "X_im", "negativity",
                            "entangled", "flagged", "L_crit", "eps_schedule", "cut", "config_hash"]),
    "farm": ("1", ["cycle", "negativity", "n_modes", "rel_tol", "convergence_tol", "config_hash"]),
    "seismo": ("1", ["amplitude", "frequency", "phase", "negativity", "delta", "converged", "cycles",
                     "error", "n_modes", "rel_tol", "config_hash"]),
}


def _clean(v):
    """JSON-safe value: non-finite floats become ``None``, numpy scalars Python ones."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):  # numpy scalar
        return _clean(v.item())
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ResultEnvelope:
    """Rows of one run plus everything needed to reproduce them.

    ``provenance`` holds tolerances, cutoffs, the config hash and a run
    summary; ``wall_clock_s`` is the only field that varies between
    identical runs.
    """

    subcommand: str
    inputs: dict
    rows: list
    provenance: dict
    version: str = ENVELOPE_VERSION
    toolkit_version: str = __version__
    wall_clock_s: float = 0.0
    columns: list = field(default_factory=list)

    def __post_init__(self):
        if not self.columns:
            self.columns = list(COLUMNS[self.subcommand][1])
        extra = {c for r in self.rows for c in r} - set(self.columns)
        if extra:
            raise ValueError(f"rows carry undeclared columns: {sorted(extra)}")
        self.rows = [{c: _clean(r.get(c)) for c in self.columns} for r in self.rows]
        self.inputs = _clean(self.inputs)
        self.provenance = _clean(self.provenance)

    @property
    def schema(self) -> str:
        return f"{self.subcommand}/{COLUMNS[self.subcommand][0]}"

    def to_dict(self) -> dict:
        prov = dict(self.provenance, subcommand=self.subcommand, schema=self.schema, columns=self.columns,
                    toolkit_version=self.toolkit_version, units=UNITS, wall_clock_s=self.wall_clock_s)
        return {"inputs": self.inputs, "provenance": prov, "rows": self.rows, "version": self.version}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultEnvelope":
        d = json.loads(text)
        prov = dict(d["provenance"])
        meta = {k: prov.pop(k) for k in ("subcommand", "schema", "units", "toolkit_version", "wall_clock_s", "columns")}
        return cls(meta["subcommand"], d["inputs"], d["rows"], prov, d["version"], meta["toolkit_version"],
                   meta["wall_clock_s"], meta["columns"])

    def to_csv(self) -> str:
        head = [
            f"# curvedqi {self.toolkit_version}",
            f"# envelope_version: {self.version}",
            f"# schema: {self.schema}",
            f"# units: {UNITS}",
            f"# inputs: {json.dumps(self.inputs, sort_keys=True)}",
            f"# provenance: {json.dumps(self.provenance, sort_keys=True, allow_nan=False)}",
            f"# wall_clock_s: {self.wall_clock_s:.3f}",
        ]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(r[c]) for c in self.columns])
        return "\n".join(head) + "\n" + buf.getvalue()

    def dumps(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


def data_section(text: str) -> str:
    """Part of an output file that must not vary between identical runs."""
    if text.lstrip().startswith("{"):
        d = json.loads(text)
        d["provenance"].pop("wall_clock_s", None)
        return json.dumps(d, sort_keys=True)
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("# wall_clock_s"))
