"""CSV and JSON emission for trajectories, curves and reports.

Floats are printed with 17 significant digits, which round-trips IEEE
doubles exactly, so every emitted CSV parses back to the originating
arrays bit for bit.  JSON reports are written with sorted keys and no
timestamps: identical inputs and seeds produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from typing import Optional

import numpy as np

from .classical import ClassicalTrajectory
from .spacetime import GeodesicTrajectory, StaticSpacetime, Termination


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_csv_header(dim: int) -> str:
    xs = ",".join(f"x{i}" for i in range(dim))
    xds = ",".join(f"xdot{i}" for i in range(dim))
    return f"s,t,{xs},tdot,{xds},lambda,C,auxnorm"


def trajectory_to_csv(traj: GeodesicTrajectory, path) -> None:
    n = traj.x.shape[1]
    aux = np.sqrt(np.maximum(traj.aux_norm_sq, 0.0))
    with open(path, "w") as fh:
        fh.write(trajectory_csv_header(n) + "\n")
        for i in range(traj.n_samples):
            row = ([traj.s[i], traj.t[i]] + list(traj.x[i]) + [traj.t_dot[i]]
                   + list(traj.x_dot[i]) + [traj.lam[i], traj.C[i], aux[i]])
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_trajectory_csv(path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    data = np.array(rows)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    dim = sum(1 for name in header if name.startswith("x")
              and not name.startswith("xdot"))
    cols["x"] = np.stack([cols[f"x{i}"] for i in range(dim)], axis=1)
    cols["xdot"] = np.stack([cols[f"xdot{i}"] for i in range(dim)], axis=1)
    return cols


def trajectory_from_csv(path, st: StaticSpacetime,
                        termination: Termination) -> GeodesicTrajectory:
    cols = read_trajectory_csv(path)
    lam = cols["lambda"]
    C = cols["C"]
    return GeodesicTrajectory(
        spacetime=st, s=cols["s"], t=cols["t"], x=cols["x"],
        t_dot=cols["tdot"], x_dot=cols["xdot"], lam=lam, C=C,
        aux_norm_sq=cols["auxnorm"] ** 2, lambda0=float(lam[0]),
        C0=float(C[0]), termination=termination)


def classical_to_csv(cl: ClassicalTrajectory, path) -> None:
    n = cl.x.shape[1]
    xs = ",".join(f"x{i}" for i in range(n))
    vs = ",".join(f"v{i}" for i in range(n))
    with open(path, "w") as fh:
        fh.write(f"s,{xs},{vs},E\n")
        for i in range(cl.n_samples):
            row = [cl.s[i]] + list(cl.x[i]) + list(cl.v[i]) + [cl.E]
            fh.write(",".join(fmt(v) for v in row) + "\n")


def classical_from_csv(path, st: StaticSpacetime) -> ClassicalTrajectory:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    data = np.array(rows)
    n = (len(header) - 2) // 2
    return ClassicalTrajectory(spacetime=st, s=data[:, 0],
                               x=data[:, 1:1 + n], v=data[:, 1 + n:1 + 2 * n],
                               E=float(data[0, -1]))


def pairs_to_csv(pairs, path, header="d,f") -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in pairs:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def jsonable(obj):
    """Recursively convert dataclasses/arrays to JSON-compatible values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    return obj


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_hash(config: dict) -> str:
    blob = json.dumps(jsonable(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()
