"""Command line front end.

Subcommands: flow, translator, verify, sweep, cheeger.  All outputs are
deterministic: floats are written with shortest round-trip repr, rows are
fixed-order, JSON keys sorted.  Exit codes: 0 success, 2 configuration
error, 3 solver failure, 4 monitor failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import yaml

from .config import SCHEMA_VERSION, ScenarioConfig, config_from_dict, parse_config
from .diagnostics import (RunReport, energy_identity_residual, cheeger_ratio,
                          inf_H_inequality, monitor_ut_max)
from .errors import BlowUpError, ConfigurationError, OracleError, SolverError
from .flow import Trajectory, estimate_speed, run_flow
from .translator import continuation_solve, speed_quadrature

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_MONITOR = 4


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, obj):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _error_json(outdir, kind, exc):
    payload = {"schema_version": SCHEMA_VERSION, "error": kind,
               "message": str(exc)}
    if isinstance(exc, ConfigurationError):
        payload["violations"] = exc.violations
    if isinstance(exc, SolverError) and exc.residual is not None:
        payload["residual"] = float(exc.residual)
    if isinstance(exc, BlowUpError):
        payload["dump"] = {k: (float(v) if isinstance(v, float) else v)
                           for k, v in exc.dump.items()}
    try:
        write_json(os.path.join(outdir, "error.json"), payload)
    except OSError:
        pass
    return payload


def _trajectory_csv(outdir, traj: Trajectory):
    rows = list(zip(traj.t, traj.dt, traj.mean_u, traj.max_abs_ut,
                    traj.max_w, traj.energy, traj.bc_residual))
    write_csv(os.path.join(outdir, "trajectory.csv"),
              ["t", "dt", "mean_u", "max_abs_ut", "max_w", "energy",
               "bc_residual"], rows)


def cmd_flow(cfg: ScenarioConfig, outdir, quiet=False):
    grid = cfg.build_grid()
    phi = cfg.build_phi()
    phi.validate(grid)
    u0 = cfg.build_u0(grid)
    traj = run_flow(u0, grid, phi, cfg.flow_params())
    _trajectory_csv(outdir, traj)
    report = RunReport.from_trajectory(traj, grid, phi,
                                       fingerprint=cfg.fingerprint())
    doc = report.to_dict()
    doc["schema_version"] = SCHEMA_VERSION
    doc["reached_translator"] = bool(traj.reached_translator)
    doc["n_steps"] = int(traj.n_steps)
    try:
        doc["speed_estimate"] = float(estimate_speed(traj))
    except Exception:
        doc["speed_estimate"] = None
    write_json(os.path.join(outdir, "report.json"), doc)
    if not quiet:
        print(f"flow: {traj.n_steps} steps, t={traj.t[-1]!r}, "
              f"reached_translator={traj.reached_translator}")
    return EXIT_OK


def cmd_translator(cfg: ScenarioConfig, outdir, quiet=False):
    grid = cfg.build_grid()
    phi = cfg.build_phi()
    phi.validate(grid)
    u0 = cfg.build_u0(grid)
    sol = continuation_solve(grid, phi, u0=u0, **cfg.translator_kwargs())
    doc = sol.to_dict()
    doc["schema_version"] = SCHEMA_VERSION
    doc["fingerprint"] = cfg.fingerprint()
    doc["speed_quadrature"] = float(speed_quadrature(sol.u, grid, phi))
    write_json(os.path.join(outdir, "translator.json"), doc)
    coords = np.meshgrid(*grid.axes, indexing="ij")
    cols = [c.ravel() for c in coords] + [sol.u.ravel()]
    names = ["x", "y"][:grid.dim] + ["u"]
    write_csv(os.path.join(outdir, "profile.csv"), names, list(zip(*cols)))
    if not quiet:
        print(f"translator: C={sol.speed!r} residual={sol.residual!r}")
    return EXIT_OK


def _fixture_trajectory(path):
    with open(path) as fh:
        data = json.load(fh)
    t = np.asarray(data["t"], float)
    n = len(t)
    def series(key):
        return np.asarray(data.get(key, np.zeros(n)), float)
    states = [np.asarray(s, float) for s in data.get("states", [])]
    if not states:
        states = [np.zeros(1) for _ in range(n)]
    return Trajectory(t=t, dt=series("dt"), mean_u=series("mean_u"),
                      max_abs_ut=series("max_abs_ut"), max_w=series("max_w"),
                      energy=series("energy"), bc_residual=series("bc_residual"),
                      states=states, reached_translator=False, completed=True,
                      n_steps=n)


def cmd_verify(cfg: ScenarioConfig, outdir, quiet=False):
    verdicts = {}
    fixture = (cfg.verify or {}).get("fixture")
    if fixture:
        traj = _fixture_trajectory(fixture)
        v = monitor_ut_max(traj)
        verdicts[v.name] = v
        grid = phi = None
    else:
        grid = cfg.build_grid()
        phi = cfg.build_phi()
        phi.validate(grid)
        u0 = cfg.build_u0(grid)
        traj = run_flow(u0, grid, phi, cfg.flow_params())
        _trajectory_csv(outdir, traj)
        k_r_budget = (cfg.verify or {}).get("k_r_budget")
        report = RunReport.from_trajectory(traj, grid, phi,
                                           k_r_budget=k_r_budget,
                                           fingerprint=cfg.fingerprint())
        verdicts.update(report.verdicts)
        sol = continuation_solve(grid, phi, **cfg.translator_kwargs())
        v = inf_H_inequality(sol.u, sol.speed, grid, phi)
        verdicts[v.name] = v
    report = RunReport(series={"t": list(map(float, traj.t))},
                       verdicts=verdicts, fingerprint=cfg.fingerprint())
    doc = report.to_dict()
    doc["schema_version"] = SCHEMA_VERSION
    write_json(os.path.join(outdir, "verify.json"), doc)
    table = report.to_table()
    with open(os.path.join(outdir, "verify_table.txt"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(table)
    if not quiet:
        sys.stdout.write(table)
    if not report.all_passed:
        failed = sorted(k for k, v in verdicts.items() if not v.passed)
        if not quiet:
            print(f"failed monitors: {', '.join(failed)}")
        return EXIT_MONITOR
    return EXIT_OK


def _set_path(raw, path, value):
    """Assign into a nested dict by dotted path with optional [index]."""
    keys = path.split(".")
    node = raw
    for k in keys[:-1]:
        node = node[k]
    last = keys[-1]
    if "[" in last:
        name, idx = last[:-1].split("[")
        node[name] = list(node[name])
        node[name][int(idx)] = value
    else:
        node[last] = value


def _sweep_point(payload):
    raw, param, value, outdir, quiet = payload
    raw = json.loads(json.dumps(raw))
    _set_path(raw, param, value)
    raw.pop("sweep", None)
    cfg = config_from_dict(raw)
    os.makedirs(outdir, exist_ok=True)
    grid = cfg.build_grid()
    phi = cfg.build_phi()
    phi.validate(grid)
    sol = continuation_solve(grid, phi, **cfg.translator_kwargs())
    row = {"value": float(value), "speed": float(sol.speed),
           "speed_quadrature": float(speed_quadrature(sol.u, grid, phi)),
           "max_w": float(sol.max_w)}
    v = inf_H_inequality(sol.u, sol.speed, grid, phi)
    row["two_inf_h"] = float(v.detail["two_inf_h"])
    row["boundary_over_volume"] = float(v.detail["boundary_over_volume"])
    row["inf_h_pass"] = bool(v.passed)
    row["cheeger_ratio"] = float(cheeger_ratio(grid)) if grid.dim == 2 else ""
    doc = sol.to_dict()
    doc["schema_version"] = SCHEMA_VERSION
    write_json(os.path.join(outdir, "translator.json"), doc)
    return row


def cmd_sweep(cfg: ScenarioConfig, outdir, jobs=1, quiet=False):
    if not cfg.sweep:
        raise ConfigurationError(["sweep: section required for the sweep command"])
    param = cfg.sweep["parameter"]
    values = cfg.sweep["values"]
    payloads = [(cfg.to_dict(), param, v,
                 os.path.join(outdir, f"point_{k:03d}"), quiet)
                for k, v in enumerate(values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        rows = [_sweep_point(p) for p in payloads]
    header = ["index", "parameter", "value", "speed", "speed_quadrature",
              "max_w", "two_inf_h", "boundary_over_volume", "inf_h_pass",
              "cheeger_ratio"]
    table = [[k, param] + [rows[k][c] for c in header[2:]]
             for k in range(len(rows))]
    write_csv(os.path.join(outdir, "summary.csv"), header, table)
    if not quiet:
        print(f"sweep: {len(rows)} points over {param}")
    return EXIT_OK


def cmd_cheeger(cfg: ScenarioConfig, outdir, quiet=False):
    rows = []
    if cfg.sweep:
        param = cfg.sweep["parameter"]
        for k, v in enumerate(cfg.sweep["values"]):
            raw = json.loads(json.dumps(cfg.to_dict()))
            _set_path(raw, param, v)
            raw.pop("sweep", None)
            sub = config_from_dict(raw)
            grid = sub.build_grid()
            length = grid.integrate_boundary(np.ones(len(grid.boundary_ds)))
            area = grid.integrate_domain(np.ones(grid.shape))
            rows.append([k, param, float(v), length, area, cheeger_ratio(grid)])
    else:
        grid = cfg.build_grid()
        length = grid.integrate_boundary(np.ones(len(grid.boundary_ds)))
        area = grid.integrate_domain(np.ones(grid.shape))
        rows.append([0, "", "", length, area, cheeger_ratio(grid)])
    write_csv(os.path.join(outdir, "cheeger.csv"),
              ["index", "parameter", "value", "length", "area", "ratio"], rows)
    if not quiet:
        for r in rows:
            print(f"cheeger[{r[0]}]: ratio={r[5]!r}")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mcflab",
        description="Graphical mean curvature flow with oblique boundary data")
    parser.add_argument("command",
                        choices=["flow", "translator", "verify", "sweep",
                                 "cheeger"])
    parser.add_argument("--config", required=True, help="scenario YAML path")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides config)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="concurrent sweep points")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    outdir = args.out or "out"
    try:
        cfg = parse_config(args.config)
        outdir = args.out or cfg.output
        os.makedirs(outdir, exist_ok=True)
        if args.command == "flow":
            return cmd_flow(cfg, outdir, quiet=args.quiet)
        if args.command == "translator":
            return cmd_translator(cfg, outdir, quiet=args.quiet)
        if args.command == "verify":
            return cmd_verify(cfg, outdir, quiet=args.quiet)
        if args.command == "sweep":
            return cmd_sweep(cfg, outdir, jobs=args.jobs, quiet=args.quiet)
        return cmd_cheeger(cfg, outdir, quiet=args.quiet)
    except (ConfigurationError, FileNotFoundError, yaml.YAMLError) as exc:
        _error_json(outdir, "configuration", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, BlowUpError, OracleError) as exc:
        _error_json(outdir, "solver", exc)
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
