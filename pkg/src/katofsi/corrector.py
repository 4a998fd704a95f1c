"""Boundary-layer corrector ("fake layer") supported in the strip of width c*nu.

In the plane the antisymmetric potential reduces to a scalar stream
function ``psi`` of the relative inviscid velocity, normalised to vanish on
the body boundary, and the corrector is ``v_F = curl(z psi)`` with the
cutoff ``z = xi(d / (c nu))``.  The primary evaluation takes the centred
discrete curl of ``z psi`` (exactly divergence free for the centred
divergence); :func:`fake_mother` assembles the same field from the
expanded product rule as an independent path.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .body import BodyGeometry
from .grid import Grid, ScalarField, VectorField, bilinear, ddx, div, gradient_tensor

# ---------------------------------------------------------------------------
# cutoff profiles on [0, 1]; extended by the same polynomial for r < 0 so
# the discrete curl near the wall sees smooth data


def _quadratic(r):
    return np.where(r < 1.0, (1.0 - r) ** 2, 0.0), np.where(r < 1.0, -2.0 * (1.0 - r), 0.0)


def _cubic(r):
    return np.where(r < 1.0, (1.0 - r) ** 3, 0.0), np.where(r < 1.0, -3.0 * (1.0 - r) ** 2, 0.0)


PROFILES = {"quadratic": _quadratic, "cubic": _cubic}


def xi(r, profile: str = "quadratic"):
    return PROFILES[profile](np.asarray(r, dtype=float))[0]


def xi_tilde(r, profile: str = "quadratic"):
    """``r xi'(r)``; vanishes at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    return r * PROFILES[profile](r)[1]


class SlipConditionError(ValueError):
    """Relative inviscid velocity has a normal component on the body boundary."""


class UnderResolvedStrip(ValueError):
    """Strip width c*nu is too small for the grid."""


def _normals(geom: BodyGeometry, pts: np.ndarray) -> np.ndarray:
    """Unit gradient of the signed distance at ``pts[..., 2]``."""
    if geom.is_disk:
        rho = np.maximum(np.linalg.norm(pts, axis=-1, keepdims=True), 1e-300)
        return pts / rho
    e = 1e-7 * max(geom.inscribed_radius, 1.0)
    gx = geom.signed_distance(pts + [e, 0.0]) - geom.signed_distance(pts - [e, 0.0])
    gy = geom.signed_distance(pts + [0.0, e]) - geom.signed_distance(pts - [0.0, e])
    n = np.stack([gx, gy], -1)
    return n / np.maximum(np.linalg.norm(n, axis=-1, keepdims=True), 1e-300)


def _as_callable(u_rel):
    if callable(u_rel):
        return u_rel
    if isinstance(u_rel, VectorField):
        return lambda X, Y: bilinear(u_rel.data, u_rel.grid, np.stack([X, Y], -1))
    raise TypeError("relative velocity must be a VectorField or a callable (X, Y) -> (2, ...)")


def slip_violation(u_rel, geom: BodyGeometry, m: int = 256) -> float:
    """``max |u_rel . n| / max |u_rel|`` over boundary quadrature nodes."""
    f = _as_callable(u_rel)
    bq = geom.boundary_quadrature(m)
    ub = f(bq.points[:, 0], bq.points[:, 1])
    un = np.abs(np.sum(ub.T * bq.normals, axis=1)).max()
    scale = np.abs(ub).max()
    return float(un / scale) if scale > 0 else 0.0


def build_stream_tensor(u_rel, geom: BodyGeometry, grid: Grid, *, width: float | None = None,
                        slip_tol: float = 1e-6, n_gauss: int = 12) -> ScalarField:
    """Stream function of ``u_rel`` vanishing on the body boundary.

    ``psi(x) = int_0^d u_rel^perp(p + s n) . n ds`` along the normal ray from
    the nearest boundary point ``p``.  Evaluated where ``-3h < d < width + 3h``
    (everywhere when ``width`` is None) and zero elsewhere.
    """
    f = _as_callable(u_rel)
    viol = slip_violation(f, geom)
    if viol > slip_tol:
        raise SlipConditionError(f"relative velocity crosses the boundary: |u.n|/|u| = {viol:.3e}")
    X, Y = grid.coords()
    pts = np.stack([X, Y], -1)
    d = geom.signed_distance(pts)
    sel = d > -3 * grid.h
    if width is not None:
        sel &= d < width + 3 * grid.h
    x = pts[sel]
    dd = d[sel]
    n = _normals(geom, x)
    foot = x - dd[:, None] * n
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    acc = np.zeros(len(x))
    for s, w in zip(nodes, weights):
        t = 0.5 * (s + 1.0) * dd
        q = foot + t[:, None] * n
        uq = f(q[:, 0], q[:, 1])
        # grad psi = u^perp = (-u2, u1)
        acc += 0.5 * w * (-uq[1] * n[:, 0] + uq[0] * n[:, 1])
    psi = np.zeros(grid.shape)
    psi[sel] = acc * dd
    return ScalarField(grid, psi)


@dataclass(frozen=True)
class Corrector:
    psi: ScalarField
    z: ScalarField
    z_tilde: ScalarField
    a_flat: ScalarField  # psi / d, extrapolated across d = 0
    v_F: VectorField  # zero in the solid
    v_F_ext: VectorField  # discrete curl of z psi on the whole grid
    c: float
    nu: float
    profile: str
    geom: BodyGeometry

    @property
    def width(self) -> float:
        return self.c * self.nu

    @property
    def grid(self) -> Grid:
        return self.psi.grid

    def distance(self) -> np.ndarray:
        X, Y = self.grid.coords()
        return self.geom.signed_distance(np.stack([X, Y], -1))

    def strip(self) -> np.ndarray:
        d = self.distance()
        return (d > 0) & (d < self.width)


def _discrete_curl(f: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack([ddx(f, grid, -2), -ddx(f, grid, -1)])


def build_corrector(psi: ScalarField, c: float, nu: float, geom: BodyGeometry,
                    profile: str = "quadratic", *, min_cells: float = 2.0) -> Corrector:
    """Assemble ``v_F = curl(z psi)``; refuses strips narrower than ``min_cells`` cells."""
    grid = psi.grid
    if c <= 0 or nu <= 0:
        raise ValueError("c and nu must be positive")
    if profile not in PROFILES:
        raise ValueError(f"unknown cutoff profile {profile!r}; choose from {sorted(PROFILES)}")
    width = c * nu
    if width < min_cells * grid.h:
        raise UnderResolvedStrip(f"strip width c*nu = {width:.3g} is below {min_cells} cells (h = {grid.h:.3g})")
    if width < 4 * grid.h:
        warnings.warn(f"strip width c*nu = {width:.3g} is under 4 cells", stacklevel=2)
    X, Y = grid.coords()
    d = geom.signed_distance(np.stack([X, Y], -1))
    r = d / width
    z = xi(r, profile)
    zt = xi_tilde(r, profile)
    # z is only meaningful where psi was built; beyond the strip both vanish
    zpsi = z * psi.data
    v_ext = _discrete_curl(zpsi, grid)
    v = np.where(d > 0, v_ext, 0.0)
    # psi / d: one-sided linear extrapolation over |d| < h/2 avoids 0/0
    with np.errstate(divide="ignore", invalid="ignore"):
        af = psi.data / d
    near = np.abs(d) < 0.5 * grid.h
    if near.any():
        n = _normals(geom, np.stack([X, Y], -1)[near])
        pn = np.stack([X, Y], -1)[near] + (grid.h - d[near])[:, None] * n
        psi_out = bilinear(psi.data, grid, pn)
        d_out = geom.signed_distance(pn)
        af[near] = psi_out / d_out
    af = np.nan_to_num(af)
    return Corrector(psi, ScalarField(grid, z), ScalarField(grid, zt), ScalarField(grid, af),
                     VectorField(grid, v), VectorField(grid, v_ext), c, nu, profile, geom)


def fake_mother(corr: Corrector, u_rel) -> VectorField:
    """``z u_rel + z~ (psi / d) (d2 d, -d1 d)`` evaluated pointwise in the fluid."""
    grid = corr.grid
    f = _as_callable(u_rel)
    X, Y = grid.coords()
    pts = np.stack([X, Y], -1)
    d = corr.distance()
    n = _normals(corr.geom, pts)
    u = f(X, Y)
    out = corr.z.data * u + corr.z_tilde.data * corr.a_flat.data * np.stack([n[..., 1], -n[..., 0]])
    return VectorField(grid, np.where(d > 0, out, 0.0))


def boundary_trace_gap(corr: Corrector, u_rel, m: int = 256) -> float:
    """``max |v_F - u_rel|`` at boundary nodes, v_F interpolated from the fluid-side field."""
    f = _as_callable(u_rel)
    bq = corr.geom.boundary_quadrature(m)
    vb = bilinear(corr.v_F_ext.data, corr.grid, bq.points)
    ub = f(bq.points[:, 0], bq.points[:, 1])
    return float(np.abs(vb - ub).max())


# ---------------------------------------------------------------------------
# scalings


@dataclass(frozen=True)
class CorrectorNorms:
    nu: float
    sup: float
    h_norm: float
    dt_h_norm: float
    grad_strip: float
    d_sup: float


def corrector_norms(corr: Corrector, corr_dt: VectorField | None = None) -> CorrectorNorms:
    """Norms entering the scaling estimates; ``corr_dt`` is ``d v_F / dt`` on the same grid."""
    grid = corr.grid
    d = corr.distance()
    fluid = d > 0
    v = corr.v_F.data
    dA = grid.cell_area
    mag = np.linalg.norm(v, axis=0)
    G = gradient_tensor(corr.v_F_ext).norm2()
    strip = corr.strip()
    dt_norm = float("nan")
    if corr_dt is not None:
        dt_norm = float(np.sqrt(np.sum(fluid * np.sum(corr_dt.data**2, axis=0)) * dA))
    return CorrectorNorms(
        nu=corr.nu,
        sup=float(mag[fluid].max()),
        h_norm=float(np.sqrt(np.sum(fluid * mag**2) * dA)),  # v_F vanishes in the solid
        dt_h_norm=dt_norm,
        grad_strip=float(np.sqrt(np.sum(strip * G) * dA)),
        d_sup=float(np.max(np.abs(d * mag)[fluid])),
    )


def fit_exponent(nus, values) -> float:
    """Least-squares slope of ``log value`` against ``log nu``."""
    nus = np.asarray(nus, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(nus) < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(np.log(nus), np.log(values), 1)[0])


def corrector_scalings(norms: list[CorrectorNorms]) -> dict[str, float]:
    """Fitted exponents for the five corrector norms against ``nu``."""
    if len(norms) < 4:
        raise ValueError(f"corrector scalings need at least 4 values of nu, got {len(norms)}")
    nus = [n.nu for n in norms]
    return {
        "sup": fit_exponent(nus, [n.sup for n in norms]),
        "h_norm": fit_exponent(nus, [n.h_norm for n in norms]),
        "dt_h_norm": fit_exponent(nus, [n.dt_h_norm for n in norms]),
        "grad_strip": fit_exponent(nus, [n.grad_strip for n in norms]),
        "d_sup": fit_exponent(nus, [n.d_sup for n in norms]),
    }


def corrected_test_field(euler_u: VectorField, ell, r: float, corr: Corrector):
    """``u^E - v_F`` in the fluid with the rigid extension inside the body."""
    from .forms import TestField

    if euler_u.grid != corr.grid:
        raise ValueError("Euler state and corrector live on different grids")
    grid = corr.grid
    X, Y = grid.coords()
    d = corr.distance()
    rig = np.stack([ell[0] - r * Y, ell[1] + r * X])
    data = np.where(d > 0, euler_u.data - corr.v_F.data, rig)
    return TestField(VectorField(grid, data), np.asarray(ell, dtype=float), float(r))


def tangential_jump(field: VectorField, ell, r: float, geom: BodyGeometry, offset: float, m: int = 256) -> float:
    """``max |u(p + offset n) - u_S(p)|`` over boundary nodes ``p``."""
    bq = geom.boundary_quadrature(m)
    pts = bq.points + offset * bq.normals
    ub = bilinear(field.data, field.grid, pts)
    us = np.stack([ell[0] - r * bq.points[:, 1], ell[1] + r * bq.points[:, 0]])
    return float(np.abs(ub - us).max())


def divergence_ratio(corr: Corrector) -> float:
    """``max |div v_F| / max |v_F|`` for the discrete curl field."""
    v = corr.v_F_ext
    scale = np.abs(v.data).max()
    return float(np.abs(div(v).data).max() / scale) if scale > 0 else 0.0
