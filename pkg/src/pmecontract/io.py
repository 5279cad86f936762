"""Field snapshots and trajectory directories.

Binary snapshot layout (little endian, version 1)::

    offset  size  content
    0       4     magic b"PMEF"
    4       4     uint32 format version (1)
    8       4     int32  dimension d
    12      4     int32  cells per dimension N
    16      8     float64 period L
    24      8     float64 time t
    32      8*N^d float64 values, row-major

CSV snapshots have the header ``i,value`` (1D) or ``i,j,value`` (2D) and
one row per node in row-major order.

A trajectory directory holds ``snap_00000.bin, ...`` and ``manifest.json``
with the solver configuration, times, file names and SHA-256 checksums.
"""
from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .admissible import DiffusionParams, ParameterError
from .grid import ScalarField, TorusGrid
from .solver import SolverConfig, Trajectory

MAGIC = b"PMEF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIiidd")
MANIFEST_VERSION = 1


def field_to_bytes(f: ScalarField, t: float = 0.0) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, g.d, g.N, float(g.L), float(t))
    return head + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def field_from_bytes(data: bytes) -> tuple[ScalarField, float]:
    if len(data) < _HEADER.size:
        raise ParameterError("snapshot too short for its header")
    magic, version, d, N, L, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParameterError("not a field snapshot (bad magic)")
    if version != FORMAT_VERSION:
        raise ParameterError(f"unsupported snapshot version {version}")
    grid = TorusGrid(d, N, L)
    body = data[_HEADER.size:]
    if len(body) != 8 * grid.size:
        raise ParameterError(f"snapshot body has {len(body)} bytes, expected {8 * grid.size}")
    vals = np.frombuffer(body, dtype="<f8").reshape(grid.shape).astype(float)
    return ScalarField(grid, vals), t


def write_field_binary(path, f: ScalarField, t: float = 0.0) -> str:
    data = field_to_bytes(f, t)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_field_binary(path) -> tuple[ScalarField, float]:
    return field_from_bytes(Path(path).read_bytes())


def write_field_csv(path, f: ScalarField) -> None:
    idx_names = ["i", "j"][: f.grid.d]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(idx_names + ["value"])
        for idx in np.ndindex(*f.grid.shape):
            w.writerow(list(idx) + [repr(float(f.values[idx]))])


def read_field_csv(path, L: float = 2.0 * np.pi) -> ScalarField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = len(header) - 1
    N = round(len(body) ** (1.0 / d))
    grid = TorusGrid(d, N, L)
    vals = np.empty(grid.shape)
    for row in body:
        vals[tuple(int(k) for k in row[:d])] = float(row[d])
    return ScalarField(grid, vals)


def save_trajectory(directory, traj: Trajectory, extra: dict | None = None) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files, sums = [], []
    for k, t in enumerate(traj.times):
        name = f"snap_{k:05d}.bin"
        sums.append(write_field_binary(out / name, traj.field(k), float(t)))
        files.append(name)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "snapshot_format_version": FORMAT_VERSION,
        "grid": {"d": traj.grid.d, "N": traj.grid.N, "L": traj.grid.L},
        "config": traj.config.to_dict(),
        "variable": "U" if traj.alpha is None else "u",
        "alpha": traj.alpha,
        "epsilon": traj.epsilon,
        "steps": traj.steps,
        "backend": traj.backend,
        "times": [float(t) for t in traj.times],
        "files": files,
        "sha256": sums,
    }
    if extra:
        manifest["extra"] = extra
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out


def load_trajectory(directory, verify: bool = True) -> Trajectory:
    src = Path(directory)
    manifest = json.loads((src / "manifest.json").read_text())
    snaps = []
    for name, digest in zip(manifest["files"], manifest["sha256"]):
        data = (src / name).read_bytes()
        if verify and hashlib.sha256(data).hexdigest() != digest:
            raise ParameterError(f"checksum mismatch for {name}")
        snaps.append(field_from_bytes(data)[0].values)
    c = manifest["config"]
    config = SolverConfig(DiffusionParams(c["params"]["m"], c["params"]["d"]), c["t_end"],
                          c["sample_every"], c["cfl_fraction"], c["epsilon_floor"], c["alpha"])
    g = manifest["grid"]
    return Trajectory(TorusGrid(g["d"], g["N"], g["L"]), np.array(manifest["times"]),
                      np.array(snaps), config, manifest["epsilon"], manifest["alpha"],
                      manifest["steps"], manifest["backend"])
