"""Inviscid reference: exact added-mass solution for a disk and a grid Euler solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body import BodyGeometry, BodyState, rotation2
from .grid import Grid, ScalarField, VectorField, solid_mask
from .solver import NSState, Solver, SolverConfig, Trajectory


@dataclass(frozen=True)
class EulerState:
    t: float
    u: VectorField | None
    p: ScalarField | None
    body: BodyState


@dataclass(frozen=True)
class PotentialDisk:
    """Disk falling through ideal fluid at rest at infinity.

    The lab velocity solves ``(m + A) V' = m_a g`` with ``A = pi a^2``; the
    spin is constant because ideal fluid exerts no torque on a disk.
    Fields are body-frame quantities.
    """

    geom: BodyGeometry
    g: np.ndarray
    ell0: np.ndarray
    r0: float = 0.0

    def __post_init__(self):
        if not self.geom.is_disk:
            raise ValueError("the potential-flow reference needs a disk")

    @property
    def added_mass(self) -> float:
        return self.geom.volume

    @property
    def accel_lab(self) -> np.ndarray:
        return self.geom.apparent_mass * np.asarray(self.g, dtype=float) / (self.geom.mass + self.added_mass)

    def body(self, t: float) -> BodyState:
        theta = self.r0 * t
        Q = rotation2(theta)
        V0 = np.asarray(self.ell0, dtype=float)  # Q(0) = I
        V = V0 + self.accel_lab * t
        h = V0 * t + 0.5 * self.accel_lab * t * t
        return BodyState(h, float(theta), Q.T @ V, float(self.r0))

    def velocity(self, t: float, X, Y) -> np.ndarray:
        b = self.body(t)
        a2 = self.geom.radius**2
        r2 = np.maximum(X**2 + Y**2, 1e-24)
        lx, ly = b.ell
        dot = lx * X + ly * Y
        u = np.stack([-a2 * (lx / r2 - 2 * dot * X / r2**2), -a2 * (ly / r2 - 2 * dot * Y / r2**2)])
        inside = r2 < a2
        rig = np.stack([lx - b.r * Y, ly + b.r * X])
        return np.where(inside, rig, u)

    def grad_velocity(self, t: float, X, Y) -> np.ndarray:
        """``G[i, j] = d_j u_i`` of :meth:`velocity`; the rigid part inside."""
        b = self.body(t)
        a2 = self.geom.radius**2
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        r2 = np.maximum(X**2 + Y**2, 1e-24)
        ell = b.ell
        x = (X, Y)
        dot = ell[0] * X + ell[1] * Y
        G = np.empty((2, 2) + X.shape)
        for i in range(2):
            for j in range(2):
                G[i, j] = (2 * a2 * (ell[i] * x[j] + ell[j] * x[i] + dot * (i == j)) / r2**2
                           - 8 * a2 * dot * x[i] * x[j] / r2**3)
        rig = np.zeros_like(G)
        rig[0, 1] = -b.r
        rig[1, 0] = b.r
        return np.where(r2 < a2, rig, G)

    def relative_velocity(self, t: float, X, Y) -> np.ndarray:
        """``u^E - u^E_S`` from the dipole formula, smooth across the boundary."""
        b = self.body(t)
        a2 = self.geom.radius**2
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        r2 = np.maximum(X**2 + Y**2, 1e-24)
        lx, ly = b.ell
        dot = lx * X + ly * Y
        ux = -a2 * (lx / r2 - 2 * dot * X / r2**2) - (lx - b.r * Y)
        uy = -a2 * (ly / r2 - 2 * dot * Y / r2**2) - (ly + b.r * X)
        return np.stack([ux, uy])

    def relative_psi(self, t: float, X, Y) -> np.ndarray:
        """Closed-form stream function of the relative flow, zero on the boundary."""
        b = self.body(t)
        a2 = self.geom.radius**2
        r2 = np.maximum(X**2 + Y**2, 1e-24)
        wedge = b.ell[0] * Y - b.ell[1] * X
        return -wedge * (1.0 - a2 / r2) + 0.5 * b.r * (r2 - a2)

    def pressure(self, t: float, X, Y) -> np.ndarray:
        """Unsteady Bernoulli plus the hydrostatic ``Q^T g . x``."""
        b = self.body(t)
        a2 = self.geom.radius**2
        r2 = np.maximum(X**2 + Y**2, 1e-24)
        lx, ly = b.ell
        Ab = b.Q.T @ self.accel_lab
        dot = lx * X + ly * Y
        phi_t = -a2 * (Ab[0] * X + Ab[1] * Y) / r2 + a2 * ((lx**2 + ly**2) / r2 - 2 * dot**2 / r2**2)
        u = self.velocity(t, X, Y)
        qg = b.Q.T @ np.asarray(self.g, dtype=float)
        p = qg[0] * X + qg[1] * Y - phi_t - 0.5 * np.sum(u * u, axis=0)
        return np.where(r2 < a2, np.nan, p)

    def kinetic(self, t: float) -> float:
        b = self.body(t)
        return 0.5 * (self.geom.mass + self.added_mass) * float(b.ell @ b.ell) + 0.5 * self.geom.inertia * self.r0**2

    def state(self, t: float, grid: Grid | None = None) -> EulerState:
        if grid is None:
            return EulerState(t, None, None, self.body(t))
        X, Y = grid.coords()
        p = self.pressure(t, X, Y)
        return EulerState(t, VectorField(grid, self.velocity(t, X, Y)),
                          ScalarField(grid, np.nan_to_num(p, nan=0.0)), self.body(t))


def potential_disk_solution(geom: BodyGeometry, g, ell0, t: float, grid: Grid | None = None,
                            r0: float = 0.0) -> EulerState:
    return PotentialDisk(geom, np.asarray(g, dtype=float), np.asarray(ell0, dtype=float), r0).state(t, grid)


# ---------------------------------------------------------------------------
# grid solver


def euler_solver(grid: Grid, geom: BodyGeometry | None, g=(0.0, 0.0), dt: float = 0.01,
                 penalty_eps: float = 1e-8) -> Solver:
    """The shared one-fluid scheme with the viscous stage switched off."""
    return Solver(SolverConfig(grid, geom, 0.0, tuple(g), penalty_eps, dt, inviscid=True))


def euler_step(state: EulerState, dt: float, g, geom: BodyGeometry | None) -> EulerState:
    """One inviscid step of the shared fractional scheme."""
    sol = euler_solver(state.u.grid, geom, g, dt)
    ns = NSState(state.t, state.u, state.p if state.p is not None else ScalarField(state.u.grid, np.zeros(state.u.grid.shape)),
                 state.body, 0.0, np.asarray(g, dtype=float))
    out, _ = sol.step(ns, dt)
    return EulerState(out.t, out.u, out.p, out.body)


def euler_run(grid: Grid, geom: BodyGeometry, g, T: float, dt: float, u0: VectorField | None = None,
              body0: BodyState | None = None, sample_stride: int = 1) -> Trajectory:
    sol = euler_solver(grid, geom, g, dt)
    return sol.run(T, sol.initial_state(u0, body0), sample_stride)


def euler_energy_residual(traj) -> np.ndarray:
    """``|KE(t) - KE(0) - int_0^t f_s|`` per sample.

    Accepts a grid :class:`Trajectory` or a sequence of ``(t, kinetic, work)``.
    """
    if isinstance(traj, Trajectory):
        rows = [(r.t, r.kinetic, r.work) for r in traj.ledger]
    else:
        rows = list(traj)
    k0 = rows[0][1]
    return np.array([abs(k - k0 - w) for _, k, w in rows])


def potential_ledger(ref: PotentialDisk, times, grid: Grid) -> list[tuple[float, float, float]]:
    """Sampled kinetic energy and trapezoid work of the analytic solution on ``grid``."""
    chi = solid_mask(grid, ref.geom)
    w = 1.0 + (ref.geom.density - 1.0) * chi
    X, Y = grid.coords()
    rows, work, prev = [], 0.0, None
    for t in times:
        u = ref.velocity(t, X, Y)
        ke = 0.5 * float(np.sum(w * np.sum(u * u, axis=0)) * grid.cell_area)
        b = ref.body(t)
        qg = b.Q.T @ np.asarray(ref.g, dtype=float)
        f = ref.geom.apparent_mass * float(qg @ b.ell)
        if prev is not None:
            work += 0.5 * (t - prev[0]) * (f + prev[1])
        prev = (t, f)
        rows.append((t, ke, work))
    return rows
