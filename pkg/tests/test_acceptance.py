"""Acceptance criteria 1-9, one PASS/FAIL line each at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import record
from katofsi.body import BodyGeometry, BodyState
from katofsi.config import apply_overrides, from_dict
from katofsi.experiments import (
    CORRECTOR_BANDS,
    corrector_experiment,
    euler_energy_convergence,
    falling_disk,
    identity_suite,
    r1_dual_check,
)
from katofsi.forms import TestField, trilinear_b
from katofsi.grid import Grid, norm_H, weighted_h1_seminorm
from katofsi.io import checkpoint_bytes, read_checkpoint, write_checkpoint
from katofsi.solver import Solver, SolverConfig, energy_ledger, stable_dt
from katofsi.sweep import run_sweep
from katofsi.testfields import random_admissible

import yaml

BENCHMARK = Path(__file__).resolve().parent.parent / "configs" / "benchmark.yaml"
CONDITIONS = ("strip_deform", "strip_curl", "strip_grad", "total_deform", "energy_distance", "weak_gap_max")


def _benchmark_config(out: Path, workers: int):
    raw = yaml.safe_load(BENCHMARK.read_text())
    return from_dict(apply_overrides(raw, [f"output.dir={out}", f"sweep.workers={workers}"]))


@pytest.fixture(scope="module")
def sweep_pair(tmp_path_factory):
    """The benchmark sweep twice: two workers, then one, into separate directories."""
    a = tmp_path_factory.mktemp("sweep_a")
    b = tmp_path_factory.mktemp("sweep_b")
    ra = run_sweep(_benchmark_config(a, 2))
    rb = run_sweep(_benchmark_config(b, 1))
    return ra, rb


def test_criterion_1_identity_suite():
    rows, orders = identity_suite(n_fields=20, grids=(64, 128, 256), seed=0)
    finest = {r.kind: r.max_gap for r in rows if r.n == 256}
    ok = all(g <= 1e-3 for g in finest.values()) and all(p >= 1.8 for p in orders.values())
    detail = ", ".join(f"{k} gap {finest[k]:.2e} order {orders[k]:.2f}" for k in finest)
    assert record(1, ok, detail)


def test_criterion_2_b_skew():
    rng = np.random.default_rng(2)
    geom = BodyGeometry.disk(1.0, 2.0)
    grid = Grid(128, 4.0)
    worst = 0.0
    for _ in range(100):
        U = TestField.from_analytic(random_admissible(rng, 1.0, 4.0), grid)
        V = TestField.from_analytic(random_admissible(rng, 1.0, 4.0), grid)
        scale = norm_H(U.field, geom) * norm_H(V.field, geom) * weighted_h1_seminorm(V.field)
        worst = max(worst, abs(trilinear_b(U, V, V, geom)) / scale)
    assert record(2, worst <= 1e-8, f"max |b(u,v,v)| relative {worst:.2e} over 100 pairs")


def test_criterion_3_energy():
    grid = Grid(128, 4.0, True)
    geom = BodyGeometry.disk(1.0, 2.0)
    u0 = random_admissible(np.random.default_rng(3), 1.0, 4.0, rigid=False).scaled(0.1).sample(grid)
    worst = -math.inf
    for nu in (1e-2, 1e-3):
        sol = Solver(SolverConfig(grid, geom, nu, dt=stable_dt(grid, 8.0, nu)))
        traj = sol.run(1.0, sol.initial_state(u0, BodyState.at_rest((1.0, 0.0), 1.0)), sample_stride=5)
        k0 = traj.ledger[0].kinetic
        for variant in ("deform", "curl", "grad"):
            for row in energy_ledger(traj, variant)[1:]:
                worst = max(worst, row["residual"] / (k0 * row["t"]))
    res, orders = euler_energy_convergence(grids=(64, 128, 256), cfls=(0.4, 0.2, 0.1))
    ok = worst <= 1e-6 and all(p >= 1.0 for p in orders) and res[-1] < res[0]
    detail = (f"NS residual/(KE0 t) max {worst:.2e} (<= 1e-6); Euler residual/work {', '.join(f'{r:.3g}' for r in res)}"
              f" orders {', '.join(f'{p:.2f}' for p in orders)} (dt ~ h^2)")
    assert record(3, ok, detail)


def test_criterion_4_added_mass():
    fd = falling_disk(n=256, L=8.0, T=1.0)
    ok = abs(fd.oracle + 1.0 / 3.0) < 1e-4 and fd.rel_error <= 0.02
    assert record(4, ok, f"grid accel {fd.accel:.5f}, BEM oracle {fd.oracle:.5f}, rel err {fd.rel_error:.2e}")


def test_criterion_5_corrector_scalings():
    exp = corrector_experiment((8e-3, 4e-3, 2e-3, 1e-3))
    ok = all(abs(exp.exponents[k] - t) <= tol for k, (t, tol) in CORRECTOR_BANDS.items())
    detail = ", ".join(f"{k} {exp.exponents[k]:+.3f}" for k in CORRECTOR_BANDS)
    assert record(5, ok, detail)


def test_criterion_6_co_vanishing(sweep_pair):
    rep = sweep_pair[0].report
    assert rep is not None, "benchmark sweep did not complete"
    dec = all(rep.decreasing[c] for c in CONDITIONS)
    rho = min(rep.spearman.values())
    detail = f"all decreasing={dec}, min pairwise Spearman {rho:.3f} over {len(rep.spearman)} pairs"
    assert record(6, dec and rho >= 0.9, detail)


def test_criterion_7_remainders(sweep_pair):
    rep = sweep_pair[0].report
    e2, e3, e5 = (rep.exponents.get(f"R{i}_integral", math.nan) for i in (2, 3, 5))
    r1 = r1_dual_check(n=768, L=1.5, profile="cubic")
    parts = {
        "R2 exponent in 0.5 +/- 0.15": abs(e2 - 0.5) <= 0.15,
        "R5 exponent in 0.5 +/- 0.15": abs(e5 - 0.5) <= 0.15,
        "R3 exponent >= 0.35": e3 >= 0.35,
        "R1 dual gap <= 1e-2": r1.rel_gap <= 1e-2,
    }
    detail = (f"R2 {e2:+.2f}, R5 {e5:+.2f}, R3 {e3:+.2f}, R1 dual gap {r1.rel_gap:.2e}; "
              f"failing: {[k for k, v in parts.items() if not v] or 'none'}")
    assert record(7, all(parts.values()), detail)


def test_criterion_8_hardy(sweep_pair):
    rows = [r for r in sweep_pair[0].rows if r.ok]
    hm = np.array([r.hardy_max for r in rows])
    spread = hm.max() / np.median(hm)
    assert record(8, spread <= 10.0, f"max/median of per-nu Hardy max = {spread:.3f} ({', '.join(f'{v:.3g}' for v in hm)})")


def test_criterion_9_determinism(sweep_pair, tmp_path):
    a, b = (r.out_dir for r in sweep_pair)
    same = {name: (a / name).read_bytes() == (b / name).read_bytes() for name in ("report.csv", "summary.json")}
    run_a = sorted((a / "nu_00_0.04" / "samples").glob("*.kfsi"))
    run_b = sorted((b / "nu_00_0.04" / "samples").glob("*.kfsi"))
    same["samples"] = len(run_a) > 0 and all(x.read_bytes() == y.read_bytes() for x, y in zip(run_a, run_b))
    st = read_checkpoint(a / "nu_00_0.04" / "final.kfsi")
    p = write_checkpoint(tmp_path / "again.kfsi", st)
    roundtrip = p.read_bytes() == (a / "nu_00_0.04" / "final.kfsi").read_bytes() == checkpoint_bytes(st)
    ok = all(same.values()) and roundtrip
    assert record(9, ok, f"byte-identical across worker counts: {same}; checkpoint round-trip bit-exact: {roundtrip}")
