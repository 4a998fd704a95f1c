"""Reproducible experiments behind the CLI subcommands and the acceptance suite."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .body import BodyGeometry
from .corrector import (
    CorrectorNorms,
    build_corrector,
    build_stream_tensor,
    corrector_norms,
    corrector_scalings,
    divergence_ratio,
)
from .euler import PotentialDisk
from .forms import IDENTITY_KINDS, identity_check
from .grid import Grid, VectorField
from .testfields import AnalyticField, GaussianBlob, random_admissible, zero_circulation

ROUNDOFF_GAP = 1e-12


@dataclass(frozen=True)
class IdentityRow:
    kind: str
    n: int
    max_gap: float


def observed_order(gaps, factor: float = 2.0) -> float:
    """Order from the last two refinements; ``inf`` when both gaps sit at round-off."""
    g1, g2 = gaps[-2], gaps[-1]
    if g2 <= ROUNDOFF_GAP and g1 <= ROUNDOFF_GAP:
        return math.inf
    if g2 <= ROUNDOFF_GAP:
        return math.inf
    return math.log(g1 / g2) / math.log(factor)


def wall_field(rng, radius: float, L: float, n_blobs: int = 3) -> AnalyticField:
    """Blobs straddling the body boundary, with the circulation around it removed."""
    s = 0.25 * radius
    blobs = []
    for _ in range(n_blobs):
        rad = rng.uniform(radius, radius + 2 * s)
        ang = rng.uniform(0, 2 * np.pi)
        blobs.append(GaussianBlob(rad * np.array([np.cos(ang), np.sin(ang)]), rng.normal(), s))
    return zero_circulation(AnalyticField(blobs), radius, (L - radius) / 25)


def identity_suite(n_fields: int = 20, grids=(64, 128, 256), seed: int = 0, L: float = 3.0,
                   radius: float = 1.0, kinds=IDENTITY_KINDS) -> tuple[list[IdentityRow], dict]:
    """Largest relative gap per identity and grid over random admissible pairs; also the orders."""
    geom = BodyGeometry.disk(radius, 2.0)
    rng = np.random.default_rng(seed)
    pairs, wall = [], []
    for _ in range(n_fields):
        U = random_admissible(rng, radius, L)
        V = random_admissible(rng, radius, L)
        pairs.append((U, V))
        wall.append((wall_field(rng, radius, L), V))
    rows, orders = [], {}
    for kind in kinds:
        gaps = []
        for n in grids:
            grid = Grid(n, L)
            worst = 0.0
            for U, V in (wall if kind == "boundary_moments" else pairs):
                worst = max(worst, identity_check(kind, U, V, grid, geom).gap)
            gaps.append(worst)
            rows.append(IdentityRow(kind, n, worst))
        orders[kind] = observed_order(gaps)
    return rows, orders


@dataclass(frozen=True)
class CorrectorExperiment:
    norms: list
    exponents: dict
    max_divergence_ratio: float


def corrector_experiment(nus=(8e-3, 4e-3, 2e-3, 1e-3), c: float = 20.0, t: float = 0.5,
                         cells: float = 8.0, profile: str = "quadratic", r0: float = 1.0,
                         g=(0.0, -1.0), dt: float = 1e-3) -> CorrectorExperiment:
    """Fake-layer norms on grids with ``cells`` cells across the strip at every ν."""
    geom = BodyGeometry.disk(1.0, 2.0)
    ref = PotentialDisk(geom, np.asarray(g, dtype=float), np.zeros(2), r0)
    norms: list[CorrectorNorms] = []
    div_max = 0.0
    for nu in nus:
        w = c * nu
        h = w / cells
        L = 1.0 + w + 6 * h
        grid = Grid(int(math.ceil(2 * L / h)), L)

        def make(tt):
            psi = build_stream_tensor(lambda X, Y: ref.relative_velocity(tt, X, Y), geom, grid, width=w)
            return build_corrector(psi, c, nu, geom, profile)

        corr = make(t)
        vdt = VectorField(grid, (make(t + dt).v_F.data - make(t - dt).v_F.data) / (2 * dt))
        norms.append(corrector_norms(corr, vdt))
        div_max = max(div_max, divergence_ratio(corr))
    return CorrectorExperiment(norms, corrector_scalings(norms), div_max)


CORRECTOR_BANDS = {
    "sup": (0.0, 0.1),
    "h_norm": (0.5, 0.1),
    "dt_h_norm": (0.5, 0.15),
    "grad_strip": (-0.5, 0.15),
    "d_sup": (1.0, 0.1),
}


# ---------------------------------------------------------------------------
# inviscid checks


@dataclass(frozen=True)
class FallingDisk:
    n: int
    accel: float  # measured vertical acceleration
    oracle: float  # boundary-element value

    @property
    def rel_error(self) -> float:
        return abs(self.accel - self.oracle) / abs(self.oracle)


def falling_disk(n: int = 256, L: float = 8.0, T: float = 1.0, cfl: float = 0.4,
                 radius: float = 1.0, density: float = 2.0, g=(0.0, -1.0)) -> FallingDisk:
    """Grid Euler run from rest; average acceleration over ``[0, T]`` against the BEM oracle."""
    from .euler import euler_run
    from .oracles import falling_disk_acceleration

    geom = BodyGeometry.disk(radius, density)
    grid = Grid(n, L, True)
    dt = T / math.ceil(T / (cfl * grid.h))
    traj = euler_run(grid, geom, g, T, dt, sample_stride=10**6)
    b = traj.states[-1].body
    v = b.Q @ b.ell  # lab frame
    oracle = falling_disk_acceleration(geom, g)
    return FallingDisk(n, float(v[1] / T), float(oracle[1]))


def euler_energy_convergence(grids=(64, 128, 256), cfls=(0.4, 0.2, 0.1), L: float = 8.0, T: float = 1.0,
                             g=(0.0, -1.0)) -> tuple[list[float], list[float]]:
    """Energy-equality residual of the falling disk relative to the gravity work, per grid.

    Pass ``cfls`` halving with ``h`` for ``dt ~ h^2`` or constant for a fixed CFL.
    """
    from .euler import euler_energy_residual, euler_run

    geom = BodyGeometry.disk(1.0, 2.0)
    res = []
    for n, cfl in zip(grids, cfls):
        grid = Grid(n, L, True)
        dt = T / math.ceil(T / (cfl * grid.h))
        traj = euler_run(grid, geom, g, T, dt, sample_stride=10)
        res.append(float(euler_energy_residual(traj).max() / abs(traj.ledger[-1].work)))
    factor = grids[1] / grids[0]
    orders = [math.log(a / b) / math.log(factor) for a, b in zip(res, res[1:])]
    return res, orders


# ---------------------------------------------------------------------------
# R1 evaluated two ways on a state with a resolved wall layer


def manufactured_state(grid: Grid, t: float, nu: float, ell, r: float, geom: BodyGeometry):
    """``u_S + curl(d^2 phi)`` in the fluid, rigid inside: no-slip with a generic wall profile.

    ``phi`` has no symmetry about the disk, so neither R1 form cancels.
    """
    from .body import BodyState
    from .grid import ScalarField
    from .solver import NSState

    if not geom.is_disk:
        raise ValueError("the manufactured state is built for a disk")
    X, Y = grid.coords()
    R = np.maximum(np.hypot(X, Y), 1e-300)
    d = R - geom.radius
    A, B = X + 0.3, 2 * Y - 0.1
    phi = np.sin(A) * np.cos(B) + X + 0.5 * Y**2
    px = np.cos(A) * np.cos(B) + 1.0
    py = -2 * np.sin(A) * np.sin(B) + Y
    f1 = 2 * d * (X / R) * phi + d * d * px
    f2 = 2 * d * (Y / R) * phi + d * d * py
    ell = np.asarray(ell, dtype=float)
    us = np.stack([ell[0] - r * Y, ell[1] + r * X])
    u = us + np.stack([f2, -f1]) * (d > 0)
    return NSState(t, VectorField(grid, u), ScalarField(grid, np.zeros(grid.shape)),
                   BodyState(np.zeros(2), 0.0, ell, float(r)), nu, np.zeros(2))


@dataclass(frozen=True)
class R1Check:
    n: int
    direct: float
    dual: float

    @property
    def rel_gap(self) -> float:
        return abs(self.direct - self.dual) / abs(self.direct)


def r1_dual_check(n: int = 768, L: float = 1.5, c: float = 18.0, nu: float = 0.02, t: float = 0.3,
                  profile: str = "cubic", ell=(0.3, -0.2), r: float = 1.0) -> R1Check:
    """Direct R1 against its rewritten form on :func:`manufactured_state`."""
    from .diagnostics import corrector_at, remainders

    geom = BodyGeometry.disk(1.0, 2.0)
    ref = PotentialDisk(geom, np.array([0.0, -1.0]), np.asarray(ell, dtype=float), r)
    grid = Grid(n, L, True)
    state = manufactured_state(grid, t, nu, ref.body(t).ell, r, geom)
    rem = remainders(state, ref, corrector_at(ref, t, grid, c, nu, profile), geom)
    return R1Check(n, rem.R1, rem.R1_dual)
