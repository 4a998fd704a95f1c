"""Body-frame Navier-Stokes solver coupled to the rigid-body equations.

One-fluid formulation on a periodic collocated grid.  Each step does
explicit second-order upwind advection with Heun's method, an exact
Fourier Leray projection with the centred-difference symbol, an implicit
5-point viscous solve (also diagonal in Fourier, so it commutes with the
projection) and a momentum-conserving rigid reset over the solid cells.
Gravity is absorbed into the pressure in the fluid; the body receives the
net gravity/buoyancy force through its excess mass.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .body import BodyGeometry, BodyState, cross2, perp, rigid_field, rotation2
from .grid import (
    Grid,
    ScalarField,
    VectorField,
    bilinear,
    curl_tensor,
    deformation,
    distance_field,
    div,
    gradient_tensor,
    solid_mask,
)


class CFLError(RuntimeError):
    """Time step exceeds the advective or viscous stability limit."""


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    geom: BodyGeometry | None
    nu: float
    gravity: tuple = (0.0, 0.0)
    penalty_eps: float = 1e-8
    dt: float = 0.01
    frozen_body: bool = False
    inviscid: bool = False
    strip_c: float | None = None  # strip width c*nu for the per-sample strip rate

    def __post_init__(self):
        if not self.grid.periodic:
            raise ValueError("the solver works on a periodic grid")
        if self.nu < 0:
            raise ValueError("viscosity must be nonnegative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.penalty_eps <= 0:
            raise ValueError("penalty eps must be positive")


@dataclass(frozen=True)
class NSState:
    t: float
    u: VectorField
    p: ScalarField
    body: BodyState
    nu: float
    g: np.ndarray

    @property
    def grid(self) -> Grid:
        return self.u.grid


@dataclass
class LedgerRow:
    t: float
    kinetic: float
    dissipation_deform: float
    dissipation_curl: float
    dissipation_grad: float
    work: float
    strip_deform_rate: float = 0.0

    def residual(self, variant: str, kinetic0: float) -> float:
        """LHS minus RHS of the energy inequality; nonpositive when it holds."""
        d = {"deform": self.dissipation_deform, "curl": self.dissipation_curl,
             "grad": self.dissipation_grad}[variant]
        return self.kinetic + d - kinetic0 - self.work


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    ledger: list = field(default_factory=list)
    max_div: float = 0.0  # largest post-projection divergence seen

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def append(self, state: NSState, row: LedgerRow):
        if self.states and state.t <= self.states[-1].t:
            raise ValueError("trajectory times must increase")
        self.states.append(state)
        self.ledger.append(row)


# ---------------------------------------------------------------------------
# spectral helpers


@dataclass(frozen=True)
class _Symbols:
    kx: np.ndarray  # centred-difference symbols sin(k h) / h
    ky: np.ndarray
    k2: np.ndarray
    lap5: np.ndarray  # -symbol of the 5-point Laplacian

    @classmethod
    def build(cls, grid: Grid) -> "_Symbols":
        n, h = grid.n, grid.h
        k = 2 * np.pi * np.fft.fftfreq(n, d=h)
        sx = np.sin(k * h) / h
        KX, KY = np.meshgrid(sx, sx, indexing="xy")
        k2 = KX**2 + KY**2
        s2 = (2.0 / h * np.sin(k * h / 2)) ** 2
        L5 = s2[None, :] + s2[:, None]
        return cls(KX, KY, k2, L5)


def project(u: np.ndarray, sym: _Symbols) -> tuple[np.ndarray, np.ndarray]:
    """Leray projection; returns the field and the potential removed."""
    uh = np.fft.fft2(u, axes=(-2, -1))
    dv = 1j * (sym.kx * uh[0] + sym.ky * uh[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        phih = np.where(sym.k2 > 0, -dv / sym.k2, 0.0)
    # grad phi has symbol i k phi; u - grad phi is centred-div free
    uh[0] -= 1j * sym.kx * phih
    uh[1] -= 1j * sym.ky * phih
    return np.real(np.fft.ifft2(uh, axes=(-2, -1))), np.real(np.fft.ifft2(phih))


def viscous(u: np.ndarray, nu_dt: float, sym: _Symbols) -> np.ndarray:
    if nu_dt == 0.0:
        return u
    uh = np.fft.fft2(u, axes=(-2, -1))
    uh /= 1.0 + nu_dt * sym.lap5
    return np.real(np.fft.ifft2(uh, axes=(-2, -1)))


def _upwind_derivative(q: np.ndarray, a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order upwind ``d q / d axis`` for advecting speed ``a``."""
    qm1, qm2 = np.roll(q, 1, axis), np.roll(q, 2, axis)
    qp1, qp2 = np.roll(q, -1, axis), np.roll(q, -2, axis)
    back = (3 * q - 4 * qm1 + qm2) / (2 * h)
    fwd = (-3 * q + 4 * qp1 - qp2) / (2 * h)
    return np.where(a > 0, back, fwd)


def advection_rhs(u: np.ndarray, us: np.ndarray, r: float, h: float) -> np.ndarray:
    """``-(u - u_S).grad u - r u^perp``."""
    a = u - us
    out = np.empty_like(u)
    for i in range(2):
        out[i] = -(a[0] * _upwind_derivative(u[i], a[0], h, -1) + a[1] * _upwind_derivative(u[i], a[1], h, -2))
    out[0] += r * u[1]
    out[1] -= r * u[0]
    return out


# ---------------------------------------------------------------------------
# solver


class Solver:
    """Fixed-step integrator; one instance owns one run."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        g = cfg.grid
        self.sym = _Symbols.build(g)
        self.X, self.Y = g.coords()
        self.chi = solid_mask(g, cfg.geom)
        self.has_body = bool(self.chi.any())
        rho = cfg.geom.density if cfg.geom is not None else 1.0
        self.rho = rho
        self.weight = 1.0 + (rho - 1.0) * self.chi
        dA = g.cell_area
        # discrete rigid mass matrix for (l1, l2, r) about the body origin
        xs, ys = self.X[self.chi > 0], self.Y[self.chi > 0]
        m = rho * dA * len(xs)
        mx, my = rho * dA * xs.sum(), rho * dA * ys.sum()
        jj = rho * dA * np.sum(xs**2 + ys**2)
        self.M = np.array([[m, 0.0, -my], [0.0, m, mx], [-my, mx, jj]])
        # discrete volume and centroid keep the load consistent with M
        self.vol_h = dA * len(xs)
        self.x0_h = np.array([xs.mean(), ys.mean()]) if len(xs) else np.zeros(2)
        if cfg.strip_c is not None and cfg.geom is not None and cfg.nu > 0:
            d = distance_field(g, cfg.geom).data
            self.strip = ((d > 0) & (d < cfg.strip_c * cfg.nu)).astype(float)
        else:
            self.strip = None

    # -- construction ------------------------------------------------------
    def initial_state(self, u0: VectorField | None = None, body: BodyState | None = None) -> NSState:
        cfg = self.cfg
        body = body if body is not None else BodyState.at_rest()
        if u0 is None:
            u = np.zeros((2,) + cfg.grid.shape)
        else:
            u, _ = project(u0.data, self.sym)
        u = self._impose_rigid(u, body.ell, body.r)
        return NSState(0.0, VectorField(cfg.grid, u), ScalarField(cfg.grid, np.zeros(cfg.grid.shape)),
                       body, cfg.nu, np.asarray(cfg.gravity, dtype=float))

    def _impose_rigid(self, u: np.ndarray, ell, r, factor: float = 1.0) -> np.ndarray:
        if not self.has_body:
            return u
        us = np.stack([ell[0] - r * self.Y, ell[1] + r * self.X])
        return u + factor * self.chi * (us - u)

    # -- diagnostics ---------------------------------------------------------
    def kinetic(self, u: np.ndarray) -> float:
        return 0.5 * float(np.sum(self.weight * np.sum(u * u, axis=0)) * self.cfg.grid.cell_area)

    def dissipation_rates(self, u: np.ndarray) -> tuple[float, float, float, float]:
        """Rates ``2 int_F |D|^2``, ``2 int_F |curl|^2``, ``int_F |grad|^2`` and the strip deform rate (times nu)."""
        vf = VectorField(self.cfg.grid, u)
        fl = 1.0 - self.chi
        dA = self.cfg.grid.cell_area
        D2 = deformation(vf).norm2()
        C2 = curl_tensor(vf).norm2()
        G2 = gradient_tensor(vf).norm2()
        nu = self.cfg.nu
        strip = 0.0 if self.strip is None else 2 * nu * float(np.sum(self.strip * D2) * dA)
        return (2 * nu * float(np.sum(fl * D2) * dA), 2 * nu * float(np.sum(fl * C2) * dA),
                nu * float(np.sum(fl * G2) * dA), strip)

    def gravity_load(self, body: BodyState) -> np.ndarray:
        """Net gravity/buoyancy force and torque on the body, dual to the work rate."""
        qg = body.Q.T @ np.asarray(self.cfg.gravity, dtype=float)
        ma = (self.rho - 1.0) * self.vol_h
        return np.array([*(ma * qg), -self.vol_h * float(qg @ perp(self.x0_h))])

    def state_kinetic(self, state: NSState) -> float:
        return self.kinetic(state.u.data)

    def work_rate(self, body: BodyState) -> float:
        """``f_s[u, u] = m_a Q^T g . l - Vol Q^T g . (r x0^perp)``."""
        if not self.has_body or self.cfg.frozen_body:
            return 0.0
        load = self.gravity_load(body)
        return float(load[:2] @ body.ell + load[2] * body.r)

    def check_cfl(self, state: NSState, dt: float):
        u = state.u.data
        b = state.body
        us = np.stack([b.ell[0] - b.r * self.Y, b.ell[1] + b.r * self.X])
        vmax = float(np.max(np.abs(u - us)))
        h = self.cfg.grid.h
        if vmax > 0 and dt > 0.5 * h / vmax:
            raise CFLError(f"dt = {dt:.3g} exceeds advective limit 0.5 h / max|u - u_S| = {0.5 * h / vmax:.3g}")
        if self.cfg.nu > 0 and dt > 0.25 * h * h / self.cfg.nu:
            raise CFLError(f"dt = {dt:.3g} exceeds viscous limit 0.25 h^2 / nu = {0.25 * h * h / self.cfg.nu:.3g}")

    # -- time step -----------------------------------------------------------
    def step(self, state: NSState, dt: float | None = None) -> tuple[NSState, float]:
        """Advance one step; returns the new state and the post-projection max |div u|."""
        cfg = self.cfg
        dt = cfg.dt if dt is None else dt
        self.check_cfl(state, dt)
        g = cfg.grid
        b = state.body
        u0 = state.u.data
        us = np.stack([b.ell[0] - b.r * self.Y, b.ell[1] + b.r * self.X])

        # (1) advection, Heun
        k1 = self._advection(u0, us, b.r)
        u1 = u0 + dt * k1
        k2 = self._advection(u1, us, b.r)
        ua = u0 + 0.5 * dt * (k1 + k2)
        # (2) projection and (3) implicit viscosity, both Fourier multipliers
        up, phi = project(ua, self.sym)
        max_div = float(np.max(np.abs(div(VectorField(g, up)).data)))
        nu_eff = 0.0 if cfg.inviscid else cfg.nu
        uv = viscous(up, nu_eff * dt, self.sym)

        # (4) rigid coupling over the solid cells
        if self.has_body:
            if cfg.frozen_body:
                ell, r = b.ell, b.r
            else:
                ell, r = self._rigid_update(uv, u0, b, dt)
            pen = (dt / cfg.penalty_eps) / (1.0 + dt / cfg.penalty_eps)
            un = self._impose_rigid(uv, ell, r, pen)
        else:
            ell, r = b.ell, b.r
            un = uv

        # (5) kinematics: trapezoid in r for theta, midpoint frame for h
        theta = b.theta + 0.5 * dt * (b.r + r)
        Qm = rotation2(0.5 * (b.theta + theta))
        hpos = b.h + dt * Qm @ (0.5 * (np.asarray(b.ell) + np.asarray(ell)))
        body = BodyState(hpos, float(theta), np.asarray(ell, dtype=float), float(r))
        p = phi / dt
        new = NSState(state.t + dt, VectorField(g, un), ScalarField(g, p), body, state.nu, state.g)
        return new, max_div

    def _advection(self, u: np.ndarray, us: np.ndarray, r: float) -> np.ndarray:
        return advection_rhs(u, us, r, self.cfg.grid.h)

    def _rigid_update(self, uf: np.ndarray, u_old: np.ndarray, b: BodyState, dt: float):
        """Body velocity from momentum of the solid cells.

        The fluid update carries unit density; the excess ``rho - 1`` rides at
        the previous rigid velocity, plus gravity and the frame term.
        """
        cfg = self.cfg
        dA = cfg.grid.cell_area
        ex = u_old.copy()
        ex[0] += dt * b.r * u_old[1]
        ex[1] -= dt * b.r * u_old[0]
        mom = self.chi * (uf + (self.rho - 1.0) * ex)
        # rigid moments of the momentum density
        P = np.array([
            mom[0].sum() * dA,
            mom[1].sum() * dA,
            float(np.sum(cross2(np.stack([self.X, self.Y], -1), np.moveaxis(mom, 0, -1))) * dA),
        ])
        P += dt * self.gravity_load(b)
        sol = np.linalg.solve(self.M, P)
        return sol[:2], float(sol[2])

    # -- run -----------------------------------------------------------------
    def ledger_row(self, state: NSState, prev: LedgerRow | None, rates_prev, work_prev, dt) -> tuple:
        rates = self.dissipation_rates(state.u.data)
        work = self.work_rate(state.body)
        if prev is None:
            row = LedgerRow(state.t, self.state_kinetic(state), 0.0, 0.0, 0.0, 0.0, rates[3])
        else:
            row = LedgerRow(
                state.t,
                self.state_kinetic(state),
                prev.dissipation_deform + dt * rates[0],
                prev.dissipation_curl + dt * rates[1],
                prev.dissipation_grad + dt * rates[2],
                prev.work + 0.5 * dt * (work + work_prev),
                rates[3],
            )
        return row, rates, work

    def run(self, T: float, state: NSState | None = None, sample_stride: int = 1,
            callback=None) -> Trajectory:
        """Integrate to time ``T`` at the configured fixed step.

        Dissipation is accumulated every step from the end-of-step field,
        which bounds the implicit viscous loss from below.
        """
        if T <= 0:
            raise ValueError("T must be positive")
        state = state if state is not None else self.initial_state()
        dt = self.cfg.dt
        nsteps = int(round((T - state.t) / dt))
        if nsteps < 1:
            raise ValueError("T shorter than one time step")
        traj = Trajectory()
        row, rates, work = self.ledger_row(state, None, None, 0.0, dt)
        traj.append(state, row)
        for k in range(1, nsteps + 1):
            state, md = self.step(state, dt)
            state = NSState(state.t if k < nsteps else T, state.u, state.p, state.body, state.nu, state.g)
            traj.max_div = max(traj.max_div, md)
            row, rates, work = self.ledger_row(state, row, rates, work, dt)
            if not np.isfinite(row.kinetic):
                raise FloatingPointError(f"solution diverged at t = {state.t:.4g}")
            if k % sample_stride == 0 or k == nsteps:
                traj.append(state, copy.copy(row))
            if callback is not None:
                callback(k, state, row)
        return traj


def energy_ledger(traj: Trajectory, variant: str = "deform") -> list[dict]:
    """Per-sample ledger with the residual of the chosen energy inequality."""
    if variant not in ("deform", "curl", "grad"):
        raise ValueError(f"unknown ledger variant {variant!r}")
    k0 = traj.ledger[0].kinetic
    out = []
    for row in traj.ledger:
        out.append({
            "t": row.t,
            "kinetic": row.kinetic,
            "dissipation": getattr(row, f"dissipation_{variant}"),
            "work": row.work,
            "residual": row.residual(variant, k0),
        })
    return out


def surface_force(state: NSState, geom: BodyGeometry, n_boundary: int = 256) -> tuple[np.ndarray, float]:
    """Force and torque exerted by the fluid on the body, ``-int sigma n``.

    ``n`` is the unit normal leaving the fluid (pointing into the solid).
    The hydrostatic part absorbed by the solver is added back to ``p``.
    """
    bq = geom.boundary_quadrature(n_boundary)
    grid = state.grid
    qg = state.body.Q.T @ np.asarray(state.g, dtype=float)
    # sample slightly outside the body: centred stencils straddling the
    # interface mix rigid and fluid values
    pts = bq.points + 1.5 * grid.h * bq.normals
    p = bilinear(state.p.data, grid, pts) + pts @ qg
    D = bilinear(deformation(state.u).data, grid, pts)
    n = -bq.normals
    sn = -p * n.T + 2.0 * state.nu * np.einsum("ij...,j...->i...", D, n.T)
    F = -np.sum(bq.weights * sn, axis=1)
    torque = -float(np.sum(bq.weights * cross2(bq.points, sn.T)))
    return F, torque


def pressure_force(p_fn, geom: BodyGeometry, n_boundary: int = 256) -> tuple[np.ndarray, float]:
    """``-int sigma n`` for a callable pressure and zero velocity (quadrature check)."""
    bq = geom.boundary_quadrature(n_boundary)
    p = p_fn(bq.points)
    n = -bq.normals
    sn = -p * n.T
    F = -np.sum(bq.weights * sn, axis=1)
    return F, -float(np.sum(bq.weights * cross2(bq.points, sn.T)))


def stable_dt(grid: Grid, u_ref: float, nu: float, cfl: float = 0.4) -> float:
    """Fixed step meeting both limits for speeds up to ``u_ref``."""
    dt = cfl * grid.h / max(u_ref, 1e-12)
    if nu > 0:
        dt = min(dt, 0.2 * grid.h**2 / nu)
    return dt


def rigid_initial(grid: Grid, geom: BodyGeometry, ell, r) -> VectorField:
    chi = solid_mask(grid, geom)
    return VectorField(grid, chi * rigid_field(grid, ell, r).data)
