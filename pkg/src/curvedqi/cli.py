"""Command-line front end: ``curvedqi <subcommand> --config <path>``.

Every subcommand reads a TOML configuration, runs its sweep (in parallel
over independent work items where that helps) and writes one
:class:`~curvedqi.envelope.ResultEnvelope` as CSV or JSON. Failures exit
nonzero with a JSON error record on stderr; failures of single grid points
are reported in their rows instead.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .config import FORMATS, SUBCOMMANDS, ConfigError, RunConfig, default_config, emit_config, parse_config
from .envelope import ResultEnvelope

EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 2, 3, 4
DEFAULT_FORMAT = {"harvest-point": "json"}  # scalar reports; grids go to CSV


# --- runners ---------------------------------------------------------------------

def run_unruh(cfg: RunConfig, workers: int):
    from .cosmo import rindler_number_distribution, unruh_mean_number, unruh_squeezing, unruh_temperature

    p = cfg.params
    rows = []
    for w in p["omega"]:
        for a in p["accelerations"]:
            r = unruh_squeezing(w, a)
            probs = rindler_number_distribution(r, p["n_max"])
            rows.append(dict(omega=w, a=a, r=r, nbar=unruh_mean_number(w, a),
                             nbar_from_distribution=float(np.arange(probs.size) @ probs),
                             T_U=unruh_temperature(a), n_max=p["n_max"]))
    return rows, {}


def _cosmo_point(k, model, tol, window):
    from .cosmo import (asymptotic_frequencies, bosonic_entropy, fermionic_entropy, fermionic_theta,
                        particle_spectrum, solve_mode)

    w_in, w_out = asymptotic_frequencies(k, model)
    row = dict(k=k, statistics=model.statistics, omega_in=w_in, omega_out=w_out, error="")
    try:
        pair = solve_mode(k, model, tol=tol, window=window)
    except Exception as exc:  # reported in the row
        return dict(row, error=str(exc))
    S = bosonic_entropy(pair) if model.statistics == "boson" else fermionic_entropy(fermionic_theta(pair, model))
    return dict(row, alpha_abs2=abs(pair.alpha) ** 2, beta_abs2=particle_spectrum(pair),
                norm_defect=pair.norm - 1, entropy=S)


def run_cosmo_spectrum(cfg: RunConfig, workers: int):
    from joblib import Parallel, delayed

    from .cosmo import ExpansionModel

    p, t = cfg.params, cfg.tolerances
    model = ExpansionModel(p["epsilon"], p["rho"], p["mass"], p["statistics"])
    ks = np.linspace(p["k_min"], p["k_max"], p["n_k"])
    rows = Parallel(n_jobs=workers)(delayed(_cosmo_point)(float(k), model, t["tol"], t["window"]) for k in ks)
    for r in rows:
        r.update(tol=t["tol"], window=t["window"])
    return rows, {"failed_points": sum(bool(r["error"]) for r in rows)}


def _echo_point(l, p, step):
    from .echo import CosmologyBackground, EchoConfig, SwitchingFunction, estimator_E

    row = dict(l=l, switching=p["switching"], n_max=p["n_max"], step=step, delta=p["delta"])
    try:
        ecfg = EchoConfig(Omega=p["Omega"], lam=p["lam"], x0=tuple(p["x0"]), T0=p["T0"], T_m=p["T_m"],
                          T_late=p["T_late"], T=p["T"], n_max=p["n_max"], T_avg=p["T_avg"], step=step)
        sw = SwitchingFunction(p["switching"], p["T0"], p["T"], p["delta"])
        est = estimator_E(ecfg, sw, CosmologyBackground.lqc(l, p["pi_phi"]))
    except Exception as exc:
        return dict(row, flagged=True, notes=f"error: {exc}")
    return dict(row, E=est.value, tail_ratio=est.tail_ratio, flagged=est.flagged, notes="; ".join(est.notes))


def run_echo(cfg: RunConfig, workers: int):
    from joblib import Parallel, delayed

    p = cfg.params
    rows = Parallel(n_jobs=workers)(delayed(_echo_point)(l, p, cfg.tolerances["step"]) for l in p["l_values"])
    return rows, {}


def run_harvest_map(cfg: RunConfig, workers: int):
    from .harvest import cell_centres, region_boundary, region_map

    p, t = cfg.params, cfg.tolerances
    Lk = cell_centres(0.0, p["L_kappa_max"], p["n_L"])
    s2 = cell_centres(0.0, p["ks2o_max"], p["n_s"])
    numeric = p["method"] == "numeric" and p["case"] in ("minkowski", "parallel", "antiparallel")
    prov = {"eps_schedule": ";".join(map(repr, t["eps_schedule"])), "cut": t["cut"]}
    if numeric:
        m = region_map(p["case"], Lk, s2, p["sigma_omega"], workers=workers,
                       eps_schedule=tuple(t["eps_schedule"]), cut=t["cut"])
        rows = [dict(r, method="numeric", sigma_omega=p["sigma_omega"], **prov) for r in m.rows()]
        summary = {"flagged_cells": int(m.flagged.sum()), "entangled_cells": int(m.entangled.sum())}
    else:
        rows = [dict(L_kappa=float(lk), ks2o=float(s), entangled=region_boundary(p["case"], lk, s),
                     flagged=False, method="closed-form") for s in s2 for lk in Lk]
        summary = {"flagged_cells": 0, "entangled_cells": sum(r["entangled"] for r in rows)}
    return rows, summary


def run_harvest_point(cfg: RunConfig, workers: int):
    from .harvest import HarvestConfiguration, compute_A, compute_X, critical_distance, negativity_estimate

    p, t = cfg.params, cfg.tolerances
    h = HarvestConfiguration(p["case"], p["kappa"], p["L"], p["Omega"], p["sigma"], p["lam"],
                             eps_schedule=tuple(t["eps_schedule"]), cut=t["cut"])
    A, X = compute_A(h), compute_X(h)
    row = dict(case=p["case"], kappa=p["kappa"], L=p["L"], Omega=p["Omega"], sigma=p["sigma"],
               A=A.value.real, X_re=X.value.real, X_im=X.value.imag,
               negativity=negativity_estimate(A.value.real, X.value), entangled=bool(abs(X.value) > A.value.real),
               flagged=bool(A.flagged or X.flagged), eps_schedule=";".join(map(repr, t["eps_schedule"])),
               cut=t["cut"])
    if p["case"] == "antiparallel":
        row["L_crit"] = critical_distance(p["kappa"], p["sigma"], p["Omega"])
    summary = {"A_raw": [float(v.real) for v in A.raw],
               "X_raw": [[float(v.real), float(v.imag)] for v in X.raw]}
    return [row], summary


def _farming_setup(cfg: RunConfig):
    from .detectors import CavitySpec, pair_protocol

    p, t = cfg.params, cfg.tolerances
    cavity = CavitySpec(p["length"], p["n_modes"])
    prot = pair_protocol(p["gap"], p["lam0"], p["cycle_duration"], positions=tuple(x * p["length"] for x in p["positions"]),
                         ramp=p["ramp"], max_cycles=p["max_cycles"], convergence_tol=t["convergence_tol"],
                         state_tol=t["state_tol"], patience=t["patience"], rel_tol=t["rel_tol"])
    return cavity, prot


def run_farm(cfg: RunConfig, workers: int):
    from .detectors import farm
    from .gaussian import PhaseSpaceLayout, thermal_state

    p, t = cfg.params, cfg.tolerances
    cavity, prot = _farming_setup(cfg)
    init = None
    if p["initial_nbar"] > 0:
        init = thermal_state(PhaseSpaceLayout(0, p["n_modes"]), p["initial_nbar"])
    rep = farm(cavity, prot, initial_cavity=init, keep_snapshots=False)
    rows = [dict(cycle=i + 1, negativity=e, n_modes=p["n_modes"], rel_tol=t["rel_tol"],
                 convergence_tol=t["convergence_tol"]) for i, e in enumerate(rep.negativities)]
    summary = {"converged": rep.converged, "fixed_point_negativity": rep.fixed_point_negativity,
               "cycles": rep.cycles, "notes": list(rep.notes)}
    return rows, summary


def run_seismo(cfg: RunConfig, workers: int):
    from .detectors import seismograph_scan

    p, t = cfg.params, cfg.tolerances
    cavity, prot = _farming_setup(cfg)
    rows = seismograph_scan(cavity, prot, p["amplitudes"], p["frequencies"], p["phase"], workers=workers)
    for r in rows:
        r.update(n_modes=p["n_modes"], rel_tol=t["rel_tol"])
    return rows, {"failed_points": sum(bool(r["error"]) for r in rows)}


RUNNERS = {
    "unruh": run_unruh,
    "cosmo-spectrum": run_cosmo_spectrum,
    "echo": run_echo,
    "harvest-map": run_harvest_map,
    "harvest-point": run_harvest_point,
    "farm": run_farm,
    "seismo": run_seismo,
}


def run(cfg: RunConfig, workers: int = 1) -> ResultEnvelope:
    """Run ``cfg`` and wrap the rows with their provenance."""
    t0 = time.perf_counter()
    rows, summary = RUNNERS[cfg.subcommand](cfg, max(1, int(workers)))
    h = cfg.config_hash
    for r in rows:
        r["config_hash"] = h
    prov = {"config_hash": h, "tolerances": cfg.tolerances, "summary": summary}
    return ResultEnvelope(cfg.subcommand, cfg.record, rows, prov, wall_clock_s=time.perf_counter() - t0)


# --- entry point -----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(EXIT_CONFIG, "UsageError", message)


def _fail(code: int, kind: str, message: str, **extra):
    err = {"error": dict(type=kind, message=message, **extra)}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    raise SystemExit(code)


def _workers(arg, cfg: RunConfig) -> int:
    if arg is not None:
        return arg
    if cfg.workers is not None:
        return cfg.workers
    env = os.environ.get("CURVEDQI_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            n = 0
        if n < 1:
            raise ConfigError([f"CURVEDQI_WORKERS: must be a positive integer, got {env!r}"])
        return n
    return 1


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="curvedqi", description="Relativistic quantum information toolkit")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="TOML configuration file")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--workers", type=int, help="worker processes (default: CURVEDQI_WORKERS or 1)")
    ap.add_argument("--format", choices=FORMATS, help="output format (default: csv; json for harvest-point)")
    ap.add_argument("--emit-defaults", action="store_true", help="print the default configuration and exit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.subcommand
    if args.emit_defaults:
        sys.stdout.write(emit_config(default_config(sub)))
        return 0
    if not args.config:
        _fail(EXIT_CONFIG, "UsageError", "--config is required", subcommand=sub)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        _fail(EXIT_IO, "IOError", str(exc), path=args.config)
    try:
        cfg = parse_config(text, sub)
        workers = _workers(args.workers, cfg)
        if workers < 1:
            raise ConfigError(["workers: must be a positive integer"])
    except ConfigError as exc:
        _fail(EXIT_CONFIG, "ConfigError", str(exc), violations=exc.violations, line=exc.line, subcommand=sub)
    try:
        env = run(cfg, workers)
    except Exception as exc:
        _fail(EXIT_RUNTIME, type(exc).__name__, str(exc), subcommand=sub, config_hash=cfg.config_hash)
    fmt = args.format or cfg.format or DEFAULT_FORMAT.get(sub, "csv")
    text = env.dumps(fmt)
    out = args.out or cfg.out
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            _fail(EXIT_IO, "IOError", str(exc), path=out)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
