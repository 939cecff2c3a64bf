"""``nqa`` command-line runner.

Every command writes one or more CSV tables and, next to each, a
``<name>.meta.yaml`` sidecar with the resolved configuration, the schema
version, integrator statistics and timing.  CSV bodies depend only on the
configuration, never on the worker count or on wall-clock time.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__, analytic, dynamics, spectrum, validation
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config
from .core import ParameterError

SCHEMA_VERSION = 1

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _cell(x) -> str:
    if isinstance(x, str):
        return x.replace(",", ";").replace("\n", " ")
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.14e}"


class Table:
    def __init__(self, name: str, columns: list[str]):
        self.name = name
        self.columns = columns
        self.rows: list[list] = []
        self.stats = {"steps": 0, "rejected": 0, "max_error": 0.0}

    def add(self, *row) -> None:
        if len(row) != len(self.columns):
            raise ValueError("row does not match schema")
        self.rows.append(list(row))

    def absorb(self, trajs) -> None:
        for t in trajs:
            self.stats["steps"] += t.stats.steps
            self.stats["rejected"] += t.stats.rejected
            self.stats["max_error"] = max(self.stats["max_error"], t.stats.max_error)

    def body(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(_cell(v) for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _metadata(cfg: ExperimentConfig, table: Table, wall: float) -> dict:
    return {
        "artifact_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "table": table.name,
        "columns": table.columns,
        "config": cfg.to_dict(),
        "integrator": {"rtol": cfg.rtol, "atol": cfg.atol, **{k: float(v) if k == "max_error" else int(v) for k, v in table.stats.items()}},
        "wall_clock_seconds": round(wall, 3),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }


# ------------------------------------------------------------------ commands


def _survival_sweep(cfg, p, engine, workers):
    """Per-mode final (P, 1-P) with the selected engine."""
    if engine == "weber":
        X = np.array(
            [analytic.weber_survival(p, k, detailed=True).excitation for k in range(1, p.n_modes + 1)]
        )
        return 1.0 - X, X, []
    trajs = dynamics.integrate_modes(
        p, None, [0.0, 1.0], engine=engine, rtol=cfg.rtol, atol=cfg.atol, workers=workers
    )
    P = np.array([t.final_survival for t in trajs])
    X = np.array([t.final_excitation for t in trajs])
    return P, X, trajs


def _sweep_values(cfg, param):
    if cfg.sweep.param != param:
        raise ConfigError(f"this command sweeps {param}, got sweep.param={cfg.sweep.param}")
    return cfg.sweep.values()


def cmd_sweep_delta(cfg, workers):
    deltas = _sweep_values(cfg, "delta")
    engine = "diabatic" if cfg.engine == "both" else cfg.engine
    tables = []
    for N in cfg.N_list:
        t = Table(f"sweep_delta_N{N}", ["delta", "P_gs", "log_P_gs", "error"])
        for d in deltas:
            try:
                p = cfg.params(N=N, delta=float(d))
                P, X, trajs = _survival_sweep(cfg, p, engine, workers)
                t.absorb(trajs)
                r = dynamics.ground_state_from_modes(P, X)
                t.add(d, r.p_gs, r.log_p_gs, "")
            except (dynamics.IntegrationError, ParameterError, analytic.SpecialFunctionError) as e:
                t.add(d, math.nan, math.nan, str(e))
        tables.append(t)
    return tables


def cmd_mode_dynamics(cfg, workers):
    p = cfg.params()
    ks = cfg.mode_list()
    grid = np.linspace(0.0, 1.0, cfg.samples)
    engines = ["diabatic", "adiabatic"] if cfg.engine == "both" else [cfg.engine]
    if "weber" in engines:
        raise ConfigError("mode-dynamics needs an ODE engine (diabatic, adiabatic or both)")
    runs = {}
    for e in engines:
        runs[e] = dynamics.integrate_modes(p, ks, grid, engine=e, rtol=cfg.rtol, atol=cfg.atol, workers=workers)
    cols = ["k", "s"] + [f"P_{e}" for e in engines] + [f"one_minus_P_{e}" for e in engines]
    t = Table("mode_dynamics", cols)
    for e in engines:
        t.absorb(runs[e])
    for i, k in enumerate(ks):
        for j, s in enumerate(grid):
            vals = [runs[e][i].survival[j] for e in engines] + [runs[e][i].excitation[j] for e in engines]
            t.add(k, s, *vals)
    return [t]


def cmd_kinks(cfg, workers):
    param = cfg.sweep.param
    if param not in ("delta", "tau"):
        raise ConfigError("kinks sweeps delta or tau")
    engine = "diabatic" if cfg.engine == "both" else cfg.engine
    t = Table("kinks", ["delta", "tau", "n_sim", "n_closed", "n0", "closed_in_validity", "error"])
    for v in cfg.sweep.values():
        kw = {param: float(v)}
        p = cfg.params(**kw)
        cd = analytic.kink_density_closed(p)
        try:
            _, X, trajs = _survival_sweep(cfg, p, engine, workers)
            t.absorb(trajs)
            n = dynamics.kink_number(excitation=X).density
            t.add(p.delta, p.tau, n, cd.density, cd.n0, cd.within_validity, "")
        except (dynamics.IntegrationError, ParameterError, analytic.SpecialFunctionError) as e:
            t.add(p.delta, p.tau, math.nan, cd.density, cd.n0, cd.within_validity, str(e))
    return [t]


def cmd_widths(cfg, workers):
    deltas = _sweep_values(cfg, "delta")
    phis = np.linspace(0.0, np.pi, cfg.phi_count + 2)[1:-1]
    w = Table("widths", ["delta", "phi", "E_super", "W_super", "E_sub", "W_sub"])
    o = Table("overlap", ["delta", "max_ratio", "argmax_k"])
    for d in deltas:
        p = cfg.params(delta=float(d))
        e1, w1, e2, w2 = spectrum.resonance_arrays(p, phis, cfg.s)
        for row in zip(phis, e1, w1, e2, w2):
            w.add(d, *row)
        r = spectrum.overlap_diagnostic(p, s=cfg.s)
        i = int(np.argmax(r))
        o.add(d, r[i], i + 1)
    return [w, o]


def cmd_adiabaticity(cfg, workers):
    p = cfg.params()
    t = Table("adiabaticity_modes", ["k", "phi", "eta", "min_gap", "max_theta_rate"])
    for k in cfg.mode_list():
        r = spectrum.adiabaticity(p, k)
        t.add(k, math.pi * (2 * k - 1) / p.N, r.eta, r.min_gap, r.max_theta_rate)
    alphas = np.linspace(0.0, np.pi / 2, cfg.phi_count + 1)[:-1]
    phis = np.linspace(0.0, np.pi, cfg.phi_count + 2)[1:-1]
    mag = abs(p.G)
    grid = Table("adiabaticity_surface", ["alpha", "phi", "eta"])
    for a in alphas:
        pa = p.replace(g=mag * math.cos(a), delta=mag * math.sin(a))
        for ph, eta in zip(phis, spectrum.adiabaticity_map(pa, phis)):
            grid.add(a, ph, eta)
    return [t, grid]


def cmd_excitation_surface(cfg, workers):
    if cfg.axis == "delta":
        vals = _sweep_values(cfg, "delta")
    else:
        vals = np.linspace(0.0, np.pi / 2, cfg.sweep.count + 1)[:-1]
    phis = np.linspace(0.0, np.pi, cfg.phi_count + 2)[1:-1]
    surf = dynamics.excitation_surface(
        cfg.params(), cfg.time_selector, vals, phis, axis=cfg.axis,
        workers=workers, rtol=cfg.rtol, atol=cfg.atol,
    )
    t = Table(f"excitation_surface_{cfg.time_selector}", [cfg.axis, "phi", "s_eval", "P_ex", "valid"])
    for i, v in enumerate(vals):
        for j, ph in enumerate(phis):
            t.add(v, ph, surf.s_eval[i], surf.excitation[i, j], bool(surf.valid[i, j]))
    return [t]


def cmd_estimate_time(cfg, workers):
    p = cfg.params()
    t = Table("estimate_time", ["tau_est", "tau0", "tau_min_hermitian", "delta_opt", "tau_at_delta_opt", "at1_value"])
    est = spectrum.nqa_time_estimate(p)
    ci = analytic.closed_form_inputs(p)
    at1 = p.tau * p.J / p.g * math.sin(2 * p.alpha) - math.log(ci.tau0 / (2 * math.pi * p.tau))
    t.add(est.tau_est, ci.tau0, spectrum.hermitian_time_bound(p), est.delta_opt, est.tau_at_opt, at1)
    return [t]


def cmd_validate(cfg, workers):
    ws = validation.Workspace(rtol=cfg.rtol, atol=cfg.atol, workers=workers)
    t = Table("validation", ["criterion", "passed", "measured", "bound"])
    results = []
    for fn in validation.CRITERIA:
        r = fn(ws)
        print(r.line(), flush=True)
        results.append(r)
        t.add(r.cid, r.passed, r.measured, r.bound)
    t.all_passed = all(r.passed for r in results)
    return [t]


HANDLERS = {
    "sweep-delta": cmd_sweep_delta,
    "mode-dynamics": cmd_mode_dynamics,
    "kinks": cmd_kinks,
    "widths": cmd_widths,
    "adiabaticity": cmd_adiabaticity,
    "excitation-surface": cmd_excitation_surface,
    "estimate-time": cmd_estimate_time,
    "validate": cmd_validate,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers=None) -> list[Path]:
    """Run ``cfg.command`` and persist its tables; returns the CSV paths in order."""
    return _run(cfg, out_dir, workers)[0]


def _run(cfg, out_dir, workers):
    out = Path(out_dir if out_dir is not None else cfg.out)
    if workers is None:
        workers = cfg.workers
    t0 = time.perf_counter()
    tables = HANDLERS[cfg.command](cfg, workers)
    wall = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in tables:
        path = out / f"{t.name}.csv"
        _atomic_write(path, t.body())
        _atomic_write(out / f"{t.name}.meta.yaml", yaml.safe_dump(_metadata(cfg, t, wall), sort_keys=False))
        paths.append(path)
    return paths, tables


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nqa", description="Non-Hermitian quantum annealing experiments")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="YAML configuration file")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry, e.g. --set delta=5 --set sweep.count=11")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, command=args.command)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be positive")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    workers = args.workers if args.workers is not None else cfg.workers
    try:
        paths, tables = _run(cfg, args.out, workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (dynamics.IntegrationError, ParameterError, analytic.SpecialFunctionError, OSError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    if cfg.command == "validate":
        return EXIT_OK if tables[0].all_passed else EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
