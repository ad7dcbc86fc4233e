"""Experiment harness: spacetime catalog, config validation, batch runs.

Every run writes a JSON report, CSV artifacts and a manifest (with a hash
of the canonical config) under ``--out``.  Exit codes are scriptable:

* 0 success,
* 2 configuration or input validation failure,
* 3 numerical failure (stiffness, seed failure, unreachable endpoints),
* 4 a divergence verdict (connection certified divergent, or a shooting
  sweep that did not reach its target), so suites can assert expected
  failures.

Parameters come from ``--config FILE`` (JSON) and/or command-line flags;
flags override the file.  Unknown config keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, backend_name
from .catalog import catalog_list, get_entry
from .classical import lift_classical, reduce_to_classical
from .connect import ConnectOpts, minimize_action
from .diagnostics import causal_arrival, completeness_probe, growth_exponent
from .distance import DistanceOpts
from .errors import (ConfigError, DegenerateMetricError, OutOfDomainError,
                     SeedFailureError, StaticGeoError, StiffnessError,
                     UnreachableError)
from .serialize import (classical_from_csv, classical_to_csv, config_hash,
                        pairs_to_csv, trajectory_to_csv, write_report)
from .shooting import ShootOpts, shooting_connect
from .spacetime import GeodesicState, Termination, integrate_geodesic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DIVERGED = 4

# parameter schema per command: name -> (parser, default, required)
def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(v) for v in str(s).split(",")]

_SCHEMAS = {
    "integrate": {
        "spacetime": (str, None, True),
        "state": (_floats, None, True),
        "s_max": (float, 10.0, False),
        "tol": (float, 1e-10, False),
        "blowup_threshold": (float, 1e8, False),
    },
    "connect": {
        "spacetime": (str, None, True),
        "p0": (_floats, None, True),
        "p1": (_floats, None, True),
        "n_segments": (int, 256, False),
        "residual_tol": (float, 1e-6, False),
        "max_iter": (int, 800, False),
        "seed": (int, 0, False),
    },
    "shoot": {
        "spacetime": (str, None, True),
        "p0": (_floats, None, True),
        "p1": (_floats, None, True),
        "angle_res": (float, 1e-3, False),
        "s_max": (float, -1.0, False),
        "tol": (float, 1e-9, False),
    },
    "growth": {
        "spacetime": (str, None, True),
        "which": (str, "beta", False),
        "base": (_floats, None, False),
        "radii": (_floats, None, False),
    },
    "probe": {
        "spacetime": (str, None, True),
        "metric": (str, "g", False),
        "n_samples": (int, 100, False),
        "s_max": (float, 100.0, False),
        "tol": (float, 1e-9, False),
        "seed": (int, 0, False),
    },
    "arrival": {
        "spacetime": (str, None, True),
        "p": (_floats, None, True),
        "target": (_floats, None, True),
        "seed": (int, 0, False),
    },
    "reduce": {
        "spacetime": (str, None, True),
        "state": (_floats, None, True),
        "s_max": (float, 10.0, False),
        "tol": (float, 1e-10, False),
    },
    "lift": {
        "spacetime": (str, None, True),
        "classical": (str, None, True),
        "t0": (float, 0.0, False),
        "tol": (float, 1e-10, False),
    },
}

_POSITIVE = {"s_max", "tol", "blowup_threshold", "residual_tol", "angle_res"}


def _merge_config(command: str, file_cfg: dict, flag_cfg: dict) -> dict:
    schema = _SCHEMAS[command]
    merged = {}
    for src in (file_cfg, flag_cfg):
        for key, val in src.items():
            if key in ("command", "out"):
                continue
            if key not in schema:
                raise ConfigError(f"unknown config key {key!r} for {command!r}")
            if val is None:
                continue
            parser = schema[key][0]
            merged[key] = parser(val)
    for key, (_, default, required) in schema.items():
        if key not in merged:
            if required:
                raise ConfigError(f"missing required parameter {key!r}")
            if default is not None:
                merged[key] = default
    for key in _POSITIVE & merged.keys():
        if key == "s_max" and command == "shoot":
            continue  # sentinel -1 selects the automatic horizon
        if not merged[key] > 0.0:
            raise ConfigError(f"parameter {key!r} must be positive")
    return merged


def _parse_state(vals, dim):
    if len(vals) != 2 * dim + 2:
        raise ConfigError(
            f"state needs {2 * dim + 2} numbers (t, x[{dim}], tdot, xdot[{dim}])")
    return GeodesicState(vals[0], vals[1:1 + dim], vals[1 + dim], vals[2 + dim:])


def _run_integrate(cfg, out):
    st = get_entry(cfg["spacetime"]).spacetime
    state = _parse_state(cfg["state"], st.dim)
    try:
        traj = integrate_geodesic(st, state, cfg["s_max"], cfg["tol"],
                                  blowup_threshold=cfg["blowup_threshold"])
    except StiffnessError as exc:
        if exc.trajectory is None:
            raise
        traj = exc.trajectory
    trajectory_to_csv(traj, os.path.join(out, "trajectory.csv"))
    drift_lam, drift_C = traj.drift
    report = {
        "termination": traj.termination.kind,
        "s_exit": traj.termination.s_exit,
        "lambda0": traj.lambda0, "C0": traj.C0,
        "drift_lambda": drift_lam, "drift_C": drift_C,
        "n_samples": traj.n_samples,
    }
    return report, ["trajectory.csv"], EXIT_OK


def _run_connect(cfg, out):
    st = get_entry(cfg["spacetime"]).spacetime
    p0 = np.asarray(cfg["p0"], dtype=float)
    p1 = np.asarray(cfg["p1"], dtype=float)
    if len(p0) != st.dim + 1 or len(p1) != st.dim + 1:
        raise ConfigError(f"events need {st.dim + 1} coordinates (t, x)")
    opts = ConnectOpts(n_segments=cfg["n_segments"],
                       residual_tol=cfg["residual_tol"],
                       max_iter=cfg["max_iter"], seed=cfg["seed"])
    res = minimize_action(st, p0[1:], p1[1:], float(p1[0] - p0[0]), opts,
                          t0=float(p0[0]))
    artifacts = []
    if res.lifted is not None:
        trajectory_to_csv(res.lifted, os.path.join(out, "curve.csv"))
        artifacts.append("curve.csv")
    if res.history:
        pairs_to_csv(res.history, os.path.join(out, "history.csv"),
                     header="iteration,J,max_node_norm")
        artifacts.append("history.csv")
    report = {
        "status": res.status, "lambda": res.lam, "J": res.J_value,
        "residual": res.residual, "character": res.character,
        "iterations": res.iterations, "diverged_reason": res.diverged_reason,
    }
    code = EXIT_OK if res.status == "geodesic" else (
        EXIT_DIVERGED if res.status == "diverged" else EXIT_NUMERICAL)
    return report, artifacts, code


def _run_shoot(cfg, out):
    st = get_entry(cfg["spacetime"]).spacetime
    s_max = None if cfg["s_max"] <= 0 else cfg["s_max"]
    opts = ShootOpts(angle_res=cfg["angle_res"], s_max=s_max, tol=cfg["tol"])
    res = shooting_connect(st, cfg["p0"], cfg["p1"], opts)
    artifacts = []
    if res.reached:
        n = st.dim
        xs = ",".join(f"x{i}" for i in range(n))
        rows = [[i / (len(res.curve.nodes) - 1), res.t_samples[i]]
                + list(res.curve.nodes[i]) for i in range(len(res.curve.nodes))]
        pairs_to_csv(rows, os.path.join(out, "curve.csv"), header=f"s,t,{xs}")
        artifacts.append("curve.csv")
    report = {
        "verdict": res.verdict, "reached": res.reached, "miss": res.miss,
        "direction": list(res.direction), "s_hit": res.s_hit,
        "lambda": res.lam, "n_directions": res.n_directions,
    }
    return report, artifacts, EXIT_OK if res.reached else EXIT_DIVERGED


def _run_growth(cfg, out):
    entry = get_entry(cfg["spacetime"])
    st = entry.spacetime
    base = cfg.get("base") or [0.0] * st.dim
    radii = cfg.get("radii") or list(np.geomspace(1.0, 50.0, 12))
    rep = growth_exponent(st, cfg["which"], base, radii)
    pairs_to_csv(rep.samples, os.path.join(out, "growth.csv"))
    report = {
        "exponent": rep.exponent, "classification": rep.classification,
        "fit_residual": rep.fit_residual, "amplitude": rep.amplitude,
        "which": rep.which, "truncated_rays": rep.truncated_rays,
        "base_point": list(rep.base_point), "radii": list(rep.radii),
    }
    return report, ["growth.csv"], EXIT_OK


def _run_probe(cfg, out):
    entry = get_entry(cfg["spacetime"])
    rep = completeness_probe(entry.spacetime, cfg["metric"],
                             n_samples=cfg["n_samples"], s_max=cfg["s_max"],
                             tol=cfg["tol"], seed=cfg["seed"],
                             position_sampler=entry.sample_positions)
    artifacts = []
    if rep.witness is not None and hasattr(rep.witness.trajectory, "lam"):
        trajectory_to_csv(rep.witness.trajectory,
                          os.path.join(out, "witness.csv"))
        artifacts.append("witness.csv")
    report = {
        "verdict": rep.verdict, "metric": rep.metric_probed,
        "n_samples": rep.n_samples, "s_max": rep.s_max,
        "n_left_domain": rep.n_left_domain, "n_blow_up": rep.n_blow_up,
        "n_inconclusive": rep.n_inconclusive,
        "witness_s_exit": rep.witness.s_exit if rep.witness else None,
        "witness_termination": rep.witness.termination if rep.witness else None,
    }
    return report, artifacts, EXIT_OK


def _run_arrival(cfg, out):
    st = get_entry(cfg["spacetime"]).spacetime
    if len(cfg["p"]) != st.dim + 1:
        raise ConfigError(f"event p needs {st.dim + 1} coordinates (t, x)")
    res = causal_arrival(st, cfg["p"], cfg["target"],
                         DistanceOpts(seed=cfg["seed"]))
    artifacts = []
    if res.curve is not None:
        n = st.dim
        xs = ",".join(f"x{i}" for i in range(n))
        rows = [[i / (len(res.curve.nodes) - 1)] + list(res.curve.nodes[i])
                for i in range(len(res.curve.nodes))]
        pairs_to_csv(rows, os.path.join(out, "curve.csv"), header=f"s,{xs}")
        artifacts.append("curve.csv")
    report = {"infimum_t": res.infimum_t, "attained": res.attained}
    return report, artifacts, EXIT_OK


def _run_reduce(cfg, out):
    st = get_entry(cfg["spacetime"]).spacetime
    state = _parse_state(cfg["state"], st.dim)
    traj = integrate_geodesic(st, state, cfg["s_max"], cfg["tol"])
    cl, rep = reduce_to_classical(traj, cfg["tol"])
    classical_to_csv(cl, os.path.join(out, "classical.csv"))
    report = {
        "E": cl.E, "lambda_rescaled": rep.lambda_rescaled,
        "ode_residual": rep.ode_residual, "energy_drift": rep.energy_drift,
        "n_samples": cl.n_samples,
    }
    return report, ["classical.csv"], EXIT_OK


def _run_lift(cfg, out):
    st = get_entry(cfg["spacetime"]).spacetime
    cl = classical_from_csv(cfg["classical"], st)
    traj, rep = lift_classical(st, cl, cfg["t0"], cfg["tol"])
    trajectory_to_csv(traj, os.path.join(out, "trajectory.csv"))
    report = {"residual": rep.residual, "lambda0": traj.lambda0,
              "C0": traj.C0, "n_samples": traj.n_samples}
    return report, ["trajectory.csv"], EXIT_OK


_RUNNERS = {
    "integrate": _run_integrate, "connect": _run_connect, "shoot": _run_shoot,
    "growth": _run_growth, "probe": _run_probe, "arrival": _run_arrival,
    "reduce": _run_reduce, "lift": _run_lift,
}


def run_experiment(command: str, config: dict, out_dir: str) -> int:
    """Validate the config, dispatch, and write report + manifest.

    Returns the process exit code under the contract in the module doc.
    """
    try:
        cfg = _merge_config(command, config, {})
    except ConfigError as exc:
        print(f"staticgeo {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(out_dir, exist_ok=True)
    try:
        report, artifacts, code = _RUNNERS[command](cfg, out_dir)
    except (ConfigError, OutOfDomainError, ValueError) as exc:
        print(f"staticgeo {command}: validation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StiffnessError, SeedFailureError, UnreachableError,
            DegenerateMetricError) as exc:
        print(f"staticgeo {command}: numerical failure "
              f"({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_report(report, os.path.join(out_dir, "report.json"))
    manifest = {
        "command": command,
        "config": cfg,
        "config_sha256": config_hash({"command": command, **cfg}),
        "backend": backend_name(),
        "version": __version__,
        "artifacts": sorted(artifacts + ["report.json"]),
    }
    write_report(manifest, os.path.join(out_dir, "manifest.json"))
    return code


def _add_command_args(sub, command):
    p = sub.add_parser(command)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", default=None, help="output directory")
    for key, (parser, default, required) in _SCHEMAS[command].items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    return p


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="staticgeo",
        description="geodesics, connection and causal diagnostics for "
                    "standard static spacetimes")
    sub = ap.add_subparsers(dest="command", required=True)
    cat = sub.add_parser("catalog")
    cat.add_argument("--json", action="store_true")
    for cmd in _SCHEMAS:
        _add_command_args(sub, cmd)
    args = ap.parse_args(argv)

    if args.command == "catalog":
        entries = catalog_list()
        if args.json:
            print(json.dumps({e.name: {"dim": e.spacetime.dim, "note": e.note}
                              for e in entries}, indent=2, sort_keys=True))
        else:
            for e in entries:
                print(f"{e.name:24s} dim={e.spacetime.dim}  {e.note}")
        return EXIT_OK

    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"staticgeo: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if file_cfg.get("command", args.command) != args.command:
            print("staticgeo: config file is for a different command",
                  file=sys.stderr)
            return EXIT_CONFIG
    flag_cfg = {k: v for k, v in vars(args).items()
                if k in _SCHEMAS[args.command] and v is not None}
    if args.out is None:
        print("staticgeo: --out DIR is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        merged = _merge_config(args.command, file_cfg, flag_cfg)
    except ConfigError as exc:
        print(f"staticgeo {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(args.command, merged, args.out)


if __name__ == "__main__":
    sys.exit(main())
