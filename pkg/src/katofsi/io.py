"""On-disk formats: KFSI checkpoints, time-series and report CSVs, JSON summaries.

KFSI layout (little-endian)::

    b"KFSI"  u32 version  u32 nx  u32 ny
    f64[11]  L, t, nu, g_x, g_y, h_x, h_y, theta, ell_x, ell_y, r
    f64[ny*nx] u_x, then u_y, then p  (row-major, y slowest)
"""
from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import fields
from pathlib import Path

import numpy as np

from .body import BodyState
from .diagnostics import REPORT_COLUMNS, DiagnosticsReport, DiagnosticsRow
from .grid import Grid, ScalarField, VectorField
from .solver import NSState, Trajectory

MAGIC = b"KFSI"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
_META = 11

TIMESERIES_COLUMNS = ("t", "KE", "diss_deform", "diss_curl", "diss_grad", "strip_deform_rate",
                      "ell_x", "ell_y", "r", "h_x", "h_y", "theta", "f_work", "energy_residual")
REPORT_CSV_COLUMNS = REPORT_COLUMNS + ("status",)


class CheckpointError(ValueError):
    """File is not a readable KFSI checkpoint."""


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _atomic_write(path: Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# checkpoints


def checkpoint_bytes(state: NSState) -> bytes:
    g = state.grid
    b = state.body
    meta = np.array([g.L, state.t, state.nu, *np.asarray(state.g, dtype=float), *b.h, b.theta, *b.ell, b.r],
                    dtype="<f8")
    payload = np.concatenate([state.u.data[0].ravel(), state.u.data[1].ravel(), state.p.data.ravel()])
    return _HEADER.pack(MAGIC, VERSION, g.n, g.n) + meta.tobytes() + payload.astype("<f8").tobytes()


def write_checkpoint(path, state: NSState) -> Path:
    path = Path(path)
    _atomic_write(path, checkpoint_bytes(state))
    return path


def read_checkpoint(path) -> NSState:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{path}: too short for a KFSI header")
    magic, version, nx, ny = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    if nx != ny:
        raise CheckpointError(f"{path}: non-square grid {nx}x{ny}")
    n_expect = _META + 3 * nx * ny
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != n_expect:
        raise CheckpointError(f"{path}: payload has {body.size} values, expected {n_expect}")
    meta, data = body[:_META], body[_META:]
    L, t, nu, gx, gy, hx, hy, theta, lx, ly, r = (float(v) for v in meta)
    grid = Grid(nx, L, True)
    m = nx * ny
    u = np.stack([data[:m].reshape(ny, nx), data[m:2 * m].reshape(ny, nx)]).astype(float)
    p = data[2 * m:].reshape(ny, nx).astype(float)
    bs = BodyState(np.array([hx, hy]), theta, np.array([lx, ly]), r)
    return NSState(t, VectorField(grid, u), ScalarField(grid, p), bs, nu, np.array([gx, gy]))


# ---------------------------------------------------------------------------
# time series


def timeseries_rows(traj: Trajectory) -> list[dict]:
    k0 = traj.ledger[0].kinetic
    out = []
    for s, row in zip(traj.states, traj.ledger):
        b = s.body
        out.append({
            "t": row.t, "KE": row.kinetic, "diss_deform": row.dissipation_deform,
            "diss_curl": row.dissipation_curl, "diss_grad": row.dissipation_grad,
            "strip_deform_rate": row.strip_deform_rate, "ell_x": b.ell[0], "ell_y": b.ell[1], "r": b.r,
            "h_x": b.h[0], "h_y": b.h[1], "theta": b.theta, "f_work": row.work,
            "energy_residual": row.residual("deform", k0),
        })
    return out


def _csv_text(columns, rows) -> str:
    import io as _io

    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_timeseries(path, traj: Trajectory) -> Path:
    path = Path(path)
    _atomic_write(path, _csv_text(TIMESERIES_COLUMNS, timeseries_rows(traj)).encode())
    return path


def _read_csv(path, columns) -> list[dict]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header) != tuple(columns):
            raise ValueError(f"{path}: header {header} does not match {list(columns)}")
        return [dict(zip(header, rec)) for rec in rd]


def read_timeseries(path) -> dict[str, np.ndarray]:
    recs = _read_csv(path, TIMESERIES_COLUMNS)
    return {c: np.array([float(r[c]) for r in recs]) for c in TIMESERIES_COLUMNS}


# ---------------------------------------------------------------------------
# reports


def report_csv_text(rows) -> str:
    recs = []
    for r in rows:
        d = {c: getattr(r, c) for c in REPORT_COLUMNS}
        d["status"] = r.status
        recs.append(d)
    return _csv_text(REPORT_CSV_COLUMNS, recs)


def write_report(path, rows) -> Path:
    path = Path(path)
    _atomic_write(path, report_csv_text(rows).encode())
    return path


def read_report(path) -> list[DiagnosticsRow]:
    out = []
    for rec in _read_csv(path, REPORT_CSV_COLUMNS):
        kw = {c: float(rec[c]) for c in REPORT_COLUMNS}
        out.append(DiagnosticsRow(**kw, status=rec["status"]))
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_summary(path, summary: dict | DiagnosticsReport) -> Path:
    if isinstance(summary, DiagnosticsReport):
        summary = summary.summary()
    text = json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"
    path = Path(path)
    _atomic_write(path, text.encode())
    return path


def read_summary(path) -> dict:
    return json.loads(Path(path).read_text())


def write_row(path, row: DiagnosticsRow) -> Path:
    """Every field of one row, used to resume a sweep without rerunning a finished ν."""
    d = {f.name: getattr(row, f.name) for f in fields(DiagnosticsRow)}
    d = {k: (v if isinstance(v, str) else _fmt(v)) for k, v in d.items()}
    _atomic_write(Path(path), (json.dumps(d, indent=2, sort_keys=True) + "\n").encode())
    return Path(path)


def read_row(path) -> DiagnosticsRow:
    d = json.loads(Path(path).read_text())
    kw = {}
    for f in fields(DiagnosticsRow):
        if f.name not in d:
            raise ValueError(f"{path}: missing field {f.name}")
        kw[f.name] = d[f.name] if f.name == "status" else float(d[f.name])
    return DiagnosticsRow(**kw)
