"""Quantities of the Kato-type equivalence and of the fake-layer energy estimate.

Everything here is post-processing over finished trajectories.  The Euler
reference is either a :class:`PotentialDisk` (closed form) or a grid
:class:`Trajectory` on the same grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.stats import spearmanr

from .body import BodyGeometry
from .corrector import (
    Corrector,
    UnderResolvedStrip,
    build_corrector,
    build_stream_tensor,
    fit_exponent,
    xi,
)
from .euler import PotentialDisk
from .grid import (
    Grid,
    StripSpec,
    VectorField,
    curl_tensor,
    deformation,
    distance_field,
    gradient_tensor,
    solid_mask,
)
from .solver import Trajectory
from .testfields import AnalyticField, GaussianBlob, RigidCore


class InsufficientSweep(ValueError):
    """Fewer completed ν values than a convergence report needs."""


_INTEGRANDS = {
    "deform": lambda u: deformation(u).norm2(),
    "curl": lambda u: curl_tensor(u).norm2(),
    "grad": lambda u: gradient_tensor(u).norm2(),
}


def _trapezoid(t, y) -> float:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * np.diff(t) * (y[1:] + y[:-1])))


def _cumtrapz(t, y) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def _traj_nu(traj: Trajectory) -> float:
    nus = {float(s.nu) for s in traj.states}
    if len(nus) != 1:
        raise ValueError(f"trajectory mixes viscosities {sorted(nus)}")
    return nus.pop()


# ---------------------------------------------------------------------------
# strip and total dissipation


def strip_dissipation(traj: Trajectory, spec: StripSpec, kind: str, geom: BodyGeometry) -> float:
    """``nu int_0^T int_{Gamma_{c nu}} |X(u)|^2`` with ``X`` one of D, curl, grad."""
    if kind not in _INTEGRANDS:
        raise ValueError(f"unknown strip variant {kind!r}; choose deform, curl or grad")
    grid = traj.states[0].grid
    if spec.width < 2 * grid.h:
        raise UnderResolvedStrip(f"strip width {spec.width:.3g} is below two cells (h = {grid.h:.3g})")
    d = distance_field(grid, geom).data
    mask = (d > 0) & (d < spec.width)
    f = _INTEGRANDS[kind]
    rates = [float(np.sum(f(s.u)[mask]) * grid.cell_area) for s in traj.states]
    return spec.nu * _trapezoid(traj.times, rates)


def total_deform(traj: Trajectory) -> float:
    """``nu int_0^T int |D(u)|^2`` over the whole box; rigid cells contribute only at the interface."""
    nu = _traj_nu(traj)
    grid = traj.states[0].grid
    rates = [float(np.sum(deformation(s.u).norm2()) * grid.cell_area) for s in traj.states]
    return nu * _trapezoid(traj.times, rates)


# ---------------------------------------------------------------------------
# reference sampling


def _reference_velocity(ref, t: float, grid: Grid, interpolate: bool = True):
    """Euler velocity at time ``t`` on ``grid``; returns ``(data, interpolated)``."""
    if isinstance(ref, PotentialDisk):
        X, Y = grid.coords()
        return ref.velocity(t, X, Y), False
    times = ref.times
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"time {t:.6g} outside the reference range [{times[0]:.6g}, {times[-1]:.6g}]")
    if ref.states[0].grid != grid:
        raise ValueError("reference trajectory lives on a different grid")
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) <= 1e-9 * max(1.0, abs(t)):
        return ref.states[k].u.data, False
    if not interpolate:
        raise ValueError(f"no reference sample at t = {t:.6g}")
    j = int(np.searchsorted(times, t))
    j = min(max(j, 1), len(times) - 1)
    w = (t - times[j - 1]) / (times[j] - times[j - 1])
    return (1 - w) * ref.states[j - 1].u.data + w * ref.states[j].u.data, True


def _weight(grid: Grid, geom: BodyGeometry) -> np.ndarray:
    return 1.0 + (geom.density - 1.0) * solid_mask(grid, geom)


@dataclass(frozen=True)
class EnergyDistance:
    sup: float
    times: np.ndarray
    series: np.ndarray
    interpolated: bool


def energy_distance(traj: Trajectory, ref, geom: BodyGeometry) -> EnergyDistance:
    """``sup_t ||u(t) - u^E(t)||_H`` with the rho-weighted solid part."""
    grid = traj.states[0].grid
    w = _weight(grid, geom)
    vals, flagged = [], False
    for s in traj.states:
        ue, interp = _reference_velocity(ref, s.t, grid)
        flagged |= interp
        e = s.u.data - ue
        vals.append(math.sqrt(float(np.sum(w * np.sum(e * e, axis=0)) * grid.cell_area)))
    vals = np.array(vals)
    return EnergyDistance(float(vals.max()), traj.times, vals, flagged)


# ---------------------------------------------------------------------------
# weak convergence proxy


def default_dictionary(geom: BodyGeometry, L: float) -> list[AnalyticField]:
    """Twelve blobs on three radii and four angles plus two rigid-type fields near the body."""
    a = geom.inscribed_radius if not geom.is_disk else geom.radius
    span = L - a
    s = span / 24
    out = []
    for frac in (0.3, 0.5, 0.7):
        rad = a + frac * span
        for k in range(4):
            ang = np.pi / 4 + k * np.pi / 2
            out.append(AnalyticField([GaussianBlob(rad * np.array([np.cos(ang), np.sin(ang)]), 1.0, s)]))
    rho0, w = a + span / 4, span / 40
    out.append(AnalyticField([RigidCore((1.0, 0.0), 0.0, rho0, w)], np.array([1.0, 0.0]), 0.0))
    out.append(AnalyticField([RigidCore((0.0, 0.0), 1.0, rho0, w)], np.zeros(2), 1.0))
    return out


def weak_gap(traj: Trajectory, ref, dictionary, geom: BodyGeometry, *, normalize: bool = True) -> np.ndarray:
    """``|(u(t) - u^E(t), v_k)_H|`` for every sample ``t`` (rows) and field ``k`` (columns).

    With ``normalize`` each ``v_k`` is scaled to unit H-norm, so every entry
    is bounded by the energy distance at that time.
    """
    grid = traj.states[0].grid
    w = _weight(grid, geom)
    dA = grid.cell_area
    vs = []
    for f in dictionary:
        v = f.sample(grid).data if isinstance(f, AnalyticField) else np.asarray(getattr(f, "data", f))
        if normalize:
            nrm = math.sqrt(float(np.sum(w * np.sum(v * v, axis=0)) * dA))
            v = v / nrm if nrm > 0 else v
        vs.append(w * v)
    out = np.zeros((len(traj.states), len(vs)))
    for i, s in enumerate(traj.states):
        ue, _ = _reference_velocity(ref, s.t, grid)
        e = s.u.data - ue
        for k, v in enumerate(vs):
            out[i, k] = abs(float(np.sum(e * v) * dA))
    return out


# ---------------------------------------------------------------------------
# auxiliary fields, remainders, Hardy quotient


@dataclass(frozen=True)
class AuxiliaryFields:
    psi_S: np.ndarray
    chi: np.ndarray
    u_S_tilde: np.ndarray
    tau: np.ndarray  # zero outside the fluid


def cutoff_chi(d: np.ndarray, c: float, profile: str = "quadratic") -> np.ndarray:
    """1 for ``d <= c``, the corrector profile over ``[c, 2c]``, 0 beyond."""
    return np.where(d <= c, 1.0, xi((d - c) / c, profile))


def auxiliary_fields(state, geom: BodyGeometry, c: float, profile: str = "quadratic") -> AuxiliaryFields:
    grid = state.grid
    X, Y = grid.coords()
    ell, r = state.body.ell, state.body.r
    # curl of this psi_S is exactly l + r x^perp, also for centred differences
    psi = ell[0] * Y - ell[1] * X - 0.5 * r * (X**2 + Y**2)
    d = distance_field(grid, geom).data
    chi = cutoff_chi(d, c, profile)
    f = chi * psi
    from .grid import ddx

    ut = np.stack([ddx(f, grid, -2), -ddx(f, grid, -1)])
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(d > 0, (state.u.data - ut) / d, 0.0)
    return AuxiliaryFields(psi, chi, ut, tau)


def hardy_ratio(state, geom: BodyGeometry, c: float, nu: float | None = None,
                profile: str = "quadratic") -> float:
    """``||tau||_{L2(strip)} / ||grad(u - u~_S)||_{L2(F)}``; 0 when the denominator vanishes.

    Cells closer than ``h/2`` to the wall are left out of the numerator:
    the staircase no-slip wall sits within half a cell of the true one and
    ``1/d`` is not resolved there.
    """
    nu = state.nu if nu is None else nu
    grid = state.grid
    aux = auxiliary_fields(state, geom, c, profile)
    d = distance_field(grid, geom).data
    w = VectorField(grid, state.u.data - aux.u_S_tilde)
    fluid = d > 0
    # round-off in u - u~_S would otherwise give a ratio of noise over noise
    if np.abs(w.data[:, fluid]).max(initial=0.0) <= 1e-12 * max(1.0, np.abs(state.u.data).max()):
        return 0.0
    den = math.sqrt(float(np.sum(gradient_tensor(w).norm2()[fluid]) * grid.cell_area))
    strip = (d >= 0.5 * grid.h) & (d < c * nu)
    num = math.sqrt(float(np.sum(np.sum(aux.tau**2, axis=0)[strip]) * grid.cell_area))
    return num / den


@dataclass(frozen=True)
class Remainders:
    R1: float
    R2: float
    R3: float
    R4: float
    R5: float
    R1_dual: float
    R3_full: float

    def as_array(self) -> np.ndarray:
        return np.array([self.R1, self.R2, self.R3, self.R4, self.R5])


def _reference_deformation(ref, t: float, grid: Grid) -> np.ndarray:
    if isinstance(ref, PotentialDisk):
        X, Y = grid.coords()
        G = ref.grad_velocity(t, X, Y)
        return 0.5 * (G + G.transpose(1, 0, 2, 3))
    ue, _ = _reference_velocity(ref, t, grid)
    return deformation(VectorField(grid, ue)).data


def remainders(state, ref, corr: Corrector, geom: BodyGeometry) -> Remainders:
    """The five remainder integrands at one time, all but R3 over the strip."""
    if not math.isclose(corr.nu, state.nu, rel_tol=1e-12):
        raise ValueError(f"corrector built for nu = {corr.nu:g}, trajectory has nu = {state.nu:g}")
    grid = state.grid
    if corr.grid != grid:
        raise ValueError("corrector and state live on different grids")
    dA = grid.cell_area
    X, Y = grid.coords()
    b = state.body
    u = state.u.data
    us = np.stack([b.ell[0] - b.r * Y, b.ell[1] + b.r * X])
    w = u - us
    d = distance_field(grid, geom).data
    strip = (d > 0) & (d < corr.width)
    vF = corr.v_F_ext.data
    G = gradient_tensor(corr.v_F_ext).data
    adv = np.einsum("j...,ij...->i...", w, G)  # (w . grad) v_F
    R1 = -float(np.sum(np.sum(w * adv, axis=0)[strip]) * dA)
    R2 = -float(np.sum(np.sum(us * adv, axis=0)[strip]) * dA)
    Du = deformation(state.u).data
    DE = _reference_deformation(ref, state.t, grid)
    fluid = d > 0
    R3 = 2 * state.nu * float(np.sum(np.einsum("ij...,ij...->...", Du, DE)[fluid]) * dA)
    # the gradient form over the whole box: equal to R3 whenever D(u^E) = 0 in the solid
    GE = DE if not isinstance(ref, PotentialDisk) else ref.grad_velocity(state.t, X, Y)
    Gu = gradient_tensor(state.u).data
    R3_full = state.nu * float(np.sum(np.einsum("ij...,ij...->...", Gu, GE + GE.transpose(1, 0, 2, 3))) * dA)
    DF = deformation(corr.v_F_ext).data
    R4 = -2 * state.nu * float(np.sum(np.einsum("ij...,ij...->...", Du, DF)[strip]) * dA)
    R5 = -b.r * float(np.sum((u[0] * vF[1] - u[1] * vF[0])[strip]) * dA)
    # R1 after the P2 rewriting, with tau = (u - u~_S) / d and u~_S = u_S on the strip
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(strip, w / np.where(strip, d, 1.0), 0.0)
    Dtau = np.einsum("ij...,j...->i...", Du, tau)
    R1_dual = 2 * float(np.sum((d * np.sum(vF * Dtau, axis=0))[strip]) * dA)
    return Remainders(R1, R2, R3, R4, R5, R1_dual, R3_full)


def corrector_at(ref: PotentialDisk, t: float, grid: Grid, c: float, nu: float,
                 profile: str = "quadratic") -> Corrector:
    """Fake layer for the Euler relative flow at time ``t``."""
    u_rel = lambda X, Y: ref.relative_velocity(t, X, Y)  # noqa: E731
    psi = build_stream_tensor(u_rel, ref.geom, grid, width=c * nu)
    return build_corrector(psi, c, nu, ref.geom, profile)


@dataclass(frozen=True)
class RemainderSeries:
    times: np.ndarray
    values: np.ndarray  # (n_t, 5)
    r1_dual: np.ndarray
    r3_full: np.ndarray

    @property
    def integrals(self) -> np.ndarray:
        return np.array([_trapezoid(self.times, self.values[:, i]) for i in range(5)])

    @property
    def r1_dual_integral(self) -> float:
        return _trapezoid(self.times, self.r1_dual)

    def cumulative(self) -> np.ndarray:
        return np.stack([_cumtrapz(self.times, self.values[:, i]) for i in range(5)], axis=1)


def remainder_series(traj: Trajectory, ref: PotentialDisk, geom: BodyGeometry, c: float,
                     profile: str = "quadratic") -> RemainderSeries:
    nu = _traj_nu(traj)
    grid = traj.states[0].grid
    vals, dual, full = [], [], []
    for s in traj.states:
        corr = corrector_at(ref, s.t, grid, c, nu, profile)
        rem = remainders(s, ref, corr, geom)
        vals.append(rem.as_array())
        dual.append(rem.R1_dual)
        full.append(rem.R3_full)
    return RemainderSeries(traj.times, np.array(vals), np.array(dual), np.array(full))


# ---------------------------------------------------------------------------
# per-run row and sweep report

REPORT_COLUMNS = ("nu", "strip_deform", "strip_curl", "strip_grad", "total_deform", "energy_distance",
                  "weak_gap_max", "R1_integral", "R2_integral", "R3_integral", "R4_integral",
                  "R5_integral", "hardy_max")


@dataclass(frozen=True)
class DiagnosticsRow:
    nu: float
    strip_deform: float = math.nan
    strip_curl: float = math.nan
    strip_grad: float = math.nan
    total_deform: float = math.nan
    energy_distance: float = math.nan
    weak_gap_max: float = math.nan
    R1_integral: float = math.nan
    R2_integral: float = math.nan
    R3_integral: float = math.nan
    R4_integral: float = math.nan
    R5_integral: float = math.nan
    hardy_max: float = math.nan
    R1_dual_integral: float = math.nan
    hardy_median: float = math.nan
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @classmethod
    def failed(cls, nu: float, reason: str) -> "DiagnosticsRow":
        return cls(nu=nu, status="failed: " + " ".join(str(reason).split()))


def diagnose_run(traj: Trajectory, ref, geom: BodyGeometry, c: float, *,
                 profile: str = "quadratic", dictionary=None, box_L: float | None = None) -> DiagnosticsRow:
    """Every per-ν diagnostic of one NS trajectory against the Euler reference."""
    nu = _traj_nu(traj)
    grid = traj.states[0].grid
    spec = StripSpec(c, nu)
    if dictionary is None:
        dictionary = default_dictionary(geom, box_L if box_L is not None else grid.L)
    ed = energy_distance(traj, ref, geom)
    wg = weak_gap(traj, ref, dictionary, geom)
    hardy = np.array([hardy_ratio(s, geom, c, nu, profile) for s in traj.states[1:]] or [0.0])
    if isinstance(ref, PotentialDisk):
        rs = remainder_series(traj, ref, geom, c, profile)
        R, dual = rs.integrals, rs.r1_dual_integral
    else:
        R, dual = np.full(5, math.nan), math.nan
    return DiagnosticsRow(
        nu=nu,
        strip_deform=strip_dissipation(traj, spec, "deform", geom),
        strip_curl=strip_dissipation(traj, spec, "curl", geom),
        strip_grad=strip_dissipation(traj, spec, "grad", geom),
        total_deform=total_deform(traj),
        energy_distance=ed.sup,
        weak_gap_max=float(wg.max()),
        R1_integral=float(R[0]), R2_integral=float(R[1]), R3_integral=float(R[2]),
        R4_integral=float(R[3]), R5_integral=float(R[4]),
        hardy_max=float(hardy.max()),
        R1_dual_integral=float(dual),
        hardy_median=float(np.median(hardy)),
    )


CONDITION_COLUMNS = ("strip_deform", "strip_curl", "strip_grad", "total_deform", "energy_distance", "weak_gap_max")


@dataclass
class DiagnosticsReport:
    rows: list
    exponents: dict = field(default_factory=dict)
    spearman: dict = field(default_factory=dict)
    decreasing: dict = field(default_factory=dict)
    necessity_ok: bool | None = None
    hardy_spread: float | None = None

    def summary(self) -> dict:
        return {
            "nu": [r.nu for r in self.rows],
            "status": [r.status for r in self.rows],
            "exponents": self.exponents,
            "spearman": self.spearman,
            "decreasing": self.decreasing,
            "necessity_ok": self.necessity_ok,
            "hardy_spread": self.hardy_spread,
            "R1_dual_integral": [r.R1_dual_integral for r in self.rows],
        }


def _strictly_decreasing_as_nu_drops(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.isfinite(v)) and np.all(np.diff(v) < 0))


def convergence_report(rows, *, min_points: int = 4) -> DiagnosticsReport:
    """Fits, rank correlations and monotonicity over the completed rows.

    Rows must be ordered by strictly decreasing ν.
    """
    rows = list(rows)
    nus = [r.nu for r in rows]
    if any(b >= a for a, b in zip(nus, nus[1:])):
        raise ValueError("report rows must have strictly decreasing nu")
    good = [r for r in rows if r.ok]
    if len(good) < min_points:
        raise InsufficientSweep(f"convergence report needs {min_points} completed nu values, got {len(good)}")
    nu = np.array([r.nu for r in good])
    rep = DiagnosticsReport(rows)
    for name in CONDITION_COLUMNS + ("R1_integral", "R2_integral", "R3_integral", "R4_integral", "R5_integral"):
        vals = np.abs([getattr(r, name) for r in good])
        if np.all(np.isfinite(vals)) and np.all(vals > 0):
            rep.exponents[name] = fit_exponent(nu, vals)
    for name in CONDITION_COLUMNS:
        rep.decreasing[name] = _strictly_decreasing_as_nu_drops([getattr(r, name) for r in good])
    for i, a in enumerate(CONDITION_COLUMNS):
        for b in CONDITION_COLUMNS[i + 1:]:
            rho = spearmanr([getattr(r, a) for r in good], [getattr(r, b) for r in good]).statistic
            rep.spearman[f"{a}~{b}"] = float(rho)
    # necessity: convergence forces the total dissipation down as well
    rep.necessity_ok = (not rep.decreasing["energy_distance"]) or rep.decreasing["total_deform"]
    hm = np.array([r.hardy_max for r in good])
    rep.hardy_spread = float(hm.max() / np.median(hm)) if np.median(hm) > 0 else math.inf
    return rep


def row_values(row: DiagnosticsRow) -> dict:
    return {f.name: getattr(row, f.name) for f in fields(row)}
