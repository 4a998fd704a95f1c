"""ν-sweep orchestration: one NS run per viscosity against a shared Euler reference.

Layout of the output directory::

    config.yaml        resolved configuration
    report.csv         one row per ν (failed runs keep their row)
    summary.json       fits, rank correlations, monotonicity flags
    nu_<k>_<nu>/       timeseries.csv, samples/*.kfsi, final.kfsi, row.json

A finished ``row.json`` is reused on rerun; an unfinished run is recomputed
from scratch, which is deterministic.
"""
from __future__ import annotations

import logging
import math
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .body import BodyState
from .config import RunConfig, dump_config
from .diagnostics import (
    DiagnosticsReport,
    DiagnosticsRow,
    InsufficientSweep,
    convergence_report,
    diagnose_run,
)
from .euler import PotentialDisk, euler_run
from .io import (
    read_checkpoint,
    read_row,
    write_checkpoint,
    write_report,
    write_row,
    write_summary,
    write_timeseries,
)
from .solver import Solver, SolverConfig, Trajectory, stable_dt

log = logging.getLogger(__name__)


def run_dir(cfg: RunConfig, k: int, nu: float) -> Path:
    return cfg.output_dir() / f"nu_{k:02d}_{nu:.6g}"


def reference_speed(cfg: RunConfig) -> float:
    """Upper estimate of ``max |u - u_S|`` used to fix the step size."""
    geom = cfg.geometry()
    acc = abs(geom.apparent_mass) * float(np.hypot(*cfg.gravity)) / geom.mass
    spin = abs(cfg.initial.r) * math.sqrt(2.0) * cfg.grid.L
    return spin + float(np.hypot(*cfg.initial.ell)) + acc * cfg.time.T + 1.0


def time_step(cfg: RunConfig, nu: float) -> float:
    dt = stable_dt(cfg.make_grid(), reference_speed(cfg), nu, cfg.time.cfl)
    return cfg.time.T / math.ceil(cfg.time.T / dt)


def euler_reference(cfg: RunConfig):
    """The ν-independent inviscid reference, computed once per sweep."""
    geom = cfg.geometry()
    if geom.is_disk:
        return PotentialDisk(geom, np.asarray(cfg.gravity, dtype=float),
                             np.asarray(cfg.initial.ell, dtype=float), float(cfg.initial.r))
    grid = cfg.make_grid()
    sol_dt = time_step(cfg, 0.0)
    body0 = BodyState.at_rest(cfg.initial.ell, cfg.initial.r)
    return euler_run(grid, geom, cfg.gravity, cfg.time.T, sol_dt, None, body0, cfg.time.sample_stride)


def initial_state(cfg: RunConfig, solver: Solver, ref):
    body0 = BodyState.at_rest(cfg.initial.ell, cfg.initial.r)
    if isinstance(ref, PotentialDisk):
        u0 = ref.state(0.0, solver.cfg.grid).u
        return solver.initial_state(u0, body0)
    return solver.initial_state(None, body0)


def simulate(cfg: RunConfig, nu: float, out: Path | None = None, ref=None, *,
             frozen_body: bool = False) -> Trajectory:
    """One NS run; writes the time series, samples and checkpoints when ``out`` is given."""
    geom = cfg.geometry()
    grid = cfg.make_grid()
    ref = ref if ref is not None else euler_reference(cfg)
    dt = time_step(cfg, nu)
    solver = Solver(SolverConfig(grid, geom, nu, tuple(cfg.gravity), cfg.fluid.penalty_eps, dt,
                                 frozen_body=frozen_body, strip_c=cfg.kato.c))
    state = initial_state(cfg, solver, ref)
    stride = cfg.output.checkpoint_stride

    def checkpoint(k, st, row):
        if k % stride == 0:
            write_checkpoint(out / "latest.kfsi", st)

    callback = checkpoint if out is not None and stride > 0 else None
    traj = solver.run(cfg.time.T, state, cfg.time.sample_stride, callback)
    if out is not None:
        write_trajectory(out, traj)
    return traj


def write_trajectory(out: Path, traj: Trajectory):
    out.mkdir(parents=True, exist_ok=True)
    write_timeseries(out / "timeseries.csv", traj)
    samples = out / "samples"
    samples.mkdir(exist_ok=True)
    for i, s in enumerate(traj.states):
        write_checkpoint(samples / f"{i:05d}.kfsi", s)
    write_checkpoint(out / "final.kfsi", traj.states[-1])


def load_trajectory(out: Path) -> Trajectory:
    """Sampled states from disk; the ledger is left empty."""
    files = sorted((out / "samples").glob("*.kfsi"))
    if not files:
        raise FileNotFoundError(f"no samples under {out}")
    traj = Trajectory()
    traj.states = [read_checkpoint(f) for f in files]
    return traj


def _run_one(args) -> DiagnosticsRow:
    cfg, k, nu, ref = args
    out = run_dir(cfg, k, nu)
    done = out / "row.json"
    if done.exists():
        return read_row(done)
    if out.exists():
        shutil.rmtree(out)
    try:
        traj = simulate(cfg, nu, out, ref)
        row = diagnose_run(traj, ref, cfg.geometry(), cfg.kato.c, profile=cfg.corrector.xi_profile)
    except Exception as exc:  # a failed ν must not take the sweep down
        log.warning("run at nu=%g failed: %s", nu, exc)
        row = DiagnosticsRow.failed(nu, f"{type(exc).__name__}: {exc}")
    write_row(done, row)
    return row


@dataclass
class SweepResult:
    rows: list
    report: DiagnosticsReport | None
    out_dir: Path


def run_sweep(cfg: RunConfig, *, min_points: int = 4) -> SweepResult:
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(cfg))
    ref = euler_reference(cfg)
    jobs = [(cfg, k, nu, ref) for k, nu in enumerate(cfg.fluid.nu_list)]
    if cfg.sweep.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.sweep.workers, len(jobs))) as ex:
            rows = list(ex.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    return finish_report(rows, out, min_points=min_points)


def finish_report(rows, out: Path, *, min_points: int = 4) -> SweepResult:
    write_report(out / "report.csv", rows)
    try:
        rep = convergence_report(rows, min_points=min_points)
        summary = rep.summary()
    except InsufficientSweep as exc:
        rep = None
        summary = {"nu": [r.nu for r in rows], "status": [r.status for r in rows], "note": str(exc)}
    write_summary(out / "summary.json", summary)
    return SweepResult(rows, rep, out)


def diagnose_existing(cfg: RunConfig, *, min_points: int = 4) -> SweepResult:
    """Recompute every row from the stored samples without simulating."""
    out = cfg.output_dir()
    ref = euler_reference(cfg)
    rows = []
    for k, nu in enumerate(cfg.fluid.nu_list):
        d = run_dir(cfg, k, nu)
        try:
            traj = load_trajectory(d)
            row = diagnose_run(traj, ref, cfg.geometry(), cfg.kato.c, profile=cfg.corrector.xi_profile)
        except Exception as exc:
            row = DiagnosticsRow.failed(nu, f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return finish_report(rows, out, min_points=min_points)
