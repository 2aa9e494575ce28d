"""Binary snapshot, noise-dump and checkpoint formats plus CSV writers.

Snapshot (little-endian)::

    magic "NLCF" | version u32 | nx u32 | ny u32 | ncomp u32 | 4 pad bytes | time f64
    then ncomp row-major f64 arrays

``ncomp`` 1 is a cell scalar ``(nx, ny)``, 2 a MAC velocity (``u1`` of shape
``(nx + 1, ny)`` then ``u2`` of shape ``(nx, ny + 1)``) and 3 a director on
nodes, ``(nx + 1, ny + 1)`` per component.

Noise dump::

    magic "NLCN" | version u32 | n_steps u32 | K u32 | M u32 | traj_index u32 | seed u64 | dt f64
    M amplitudes f64, then n_steps records of K + M f64 (dW_1..dW_K, dbeta_1..dbeta_M)
"""
from __future__ import annotations

import csv
import json
import os
import struct

import numpy as np

from .grid import DirectorField3, Domain, SimState, VectorField2

SNAP_MAGIC = b"NLCF"
NOISE_MAGIC = b"NLCN"
FORMAT_VERSION = 1
_SNAP_HEADER = struct.Struct("<4sIIII4xd")
_NOISE_HEADER = struct.Struct("<4sIIIIIQd")


class FormatError(ValueError):
    pass


def snapshot_bytes(fld, t: float = 0.0) -> bytes:
    if isinstance(fld, VectorField2):
        n = fld.domain.n
        arrays, ncomp = [fld.u1, fld.u2], 2
    elif isinstance(fld, DirectorField3):
        n = fld.domain.n
        arrays, ncomp = list(fld.values), 3
    else:
        arr = np.asarray(fld, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise FormatError("cell scalars must be square 2-D arrays")
        n = arr.shape[0]
        arrays, ncomp = [arr], 1
    head = _SNAP_HEADER.pack(SNAP_MAGIC, FORMAT_VERSION, n, n, ncomp, float(t))
    return head + b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)


def write_snapshot(path, fld, t: float = 0.0):
    with open(path, "wb") as fh:
        fh.write(snapshot_bytes(fld, t))


def read_snapshot(path, lx: float = 1.0):
    """Returns ``(field, t)``; cell scalars come back as plain arrays."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _SNAP_HEADER.size:
        raise FormatError("truncated snapshot header")
    magic, ver, nx, ny, ncomp, t = _SNAP_HEADER.unpack_from(data)
    if magic != SNAP_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if ver != FORMAT_VERSION:
        raise FormatError(f"unsupported snapshot version {ver}")
    if nx != ny:
        raise FormatError("only square grids are supported")
    body = np.frombuffer(data, dtype="<f8", offset=_SNAP_HEADER.size)
    n = nx
    if ncomp == 1:
        shapes = [(n, n)]
    elif ncomp == 2:
        shapes = [(n + 1, n), (n, n + 1)]
    elif ncomp == 3:
        shapes = [(n + 1, n + 1)] * 3
    else:
        raise FormatError(f"unsupported component count {ncomp}")
    if body.size != sum(a * b for a, b in shapes):
        raise FormatError("snapshot payload size does not match header")
    arrays, off = [], 0
    for shp in shapes:
        k = shp[0] * shp[1]
        arrays.append(body[off:off + k].reshape(shp).astype(float))
        off += k
    if ncomp == 1:
        return arrays[0], t
    dom = Domain(n, lx)
    if ncomp == 2:
        return VectorField2(dom, arrays[0], arrays[1]), t
    return DirectorField3(dom, np.stack(arrays)), t


def write_noise(path, noise):
    K, M = noise.K, noise.M
    head = _NOISE_HEADER.pack(NOISE_MAGIC, FORMAT_VERSION, noise.n_steps, K, M, noise.traj_index,
                              int(noise.seed), float(noise.dt))
    rec = np.hstack([noise.dW, noise.dbeta]) if noise.n_steps else np.zeros((0, K + M))
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(noise.rho, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(rec, dtype="<f8").tobytes())


def read_noise(path):
    from .noise import NoisePath

    with open(path, "rb") as fh:
        data = fh.read()
    magic, ver, n_steps, K, M, traj, seed, dt = _NOISE_HEADER.unpack_from(data)
    if magic != NOISE_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if ver != FORMAT_VERSION:
        raise FormatError(f"unsupported noise version {ver}")
    body = np.frombuffer(data, dtype="<f8", offset=_NOISE_HEADER.size)
    if body.size != M + n_steps * (K + M):
        raise FormatError("noise payload size does not match header")
    rho = body[:M].copy()
    rec = body[M:].reshape(n_steps, K + M)
    return NoisePath(seed, dt, rec[:, :K].copy(), rec[:, K:].copy(), rho, traj)


# ---------------------------------------------------------------------------
# checkpoints


def write_checkpoint(directory, s: SimState, config_hash: str = ""):
    """SimState as four field snapshots plus a JSON sidecar for the scalars."""
    os.makedirs(directory, exist_ok=True)
    write_snapshot(os.path.join(directory, "u.nlcf"), s.u, s.t)
    write_snapshot(os.path.join(directory, "d.nlcf"), s.d, s.t)
    write_snapshot(os.path.join(directory, "z.nlcf"), s.z, s.t)
    write_snapshot(os.path.join(directory, "lift.nlcf"), s.lift, s.t)
    side = {
        "t": s.t,
        "q": s.q,
        "w_sum": s.w_sum,
        "z_coeffs": None if s.z_coeffs is None else [float(c) for c in s.z_coeffs],
        "config_hash": config_hash,
    }
    with open(os.path.join(directory, "state.json"), "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_checkpoint(directory, lx: float = 1.0) -> SimState:
    with open(os.path.join(directory, "state.json")) as fh:
        side = json.load(fh)
    u, _ = read_snapshot(os.path.join(directory, "u.nlcf"), lx)
    d, _ = read_snapshot(os.path.join(directory, "d.nlcf"), lx)
    z, _ = read_snapshot(os.path.join(directory, "z.nlcf"), lx)
    lift, _ = read_snapshot(os.path.join(directory, "lift.nlcf"), lx)
    zc = side.get("z_coeffs")
    return SimState(side["t"], u, d, side["q"], z, lift, side["w_sum"], None if zc is None else np.array(zc))


# ---------------------------------------------------------------------------
# CSV


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def write_csv(path, header, rows, meta=None):
    """RFC-4180 CSV; ``meta`` columns (e.g. config hash) are appended to every row."""
    meta = meta or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(list(header) + list(meta))
        for r in rows:
            w.writerow([_fmt(x) for x in r] + [_fmt(x) for x in meta.values()])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_records_csv(path, records, meta=None):
    from .diagnostics import DiagRecord

    write_csv(path, DiagRecord.columns(), [r.row() for r in records], meta)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
