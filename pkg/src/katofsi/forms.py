"""Weak-formulation algebra: the trilinear form, the gravity functional, the
discrete weak residual and numerical checks of the integration-by-parts
identities used to pass between the deformation, curl and gradient pairings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body import BodyGeometry, cross2, perp
from .grid import (
    Grid,
    VectorField,
    interpolate,
    curl_tensor,
    ddx,
    deformation,
    div,
    gradient_tensor,
    solid_mask,
    vorticity,
    weighted_h1_seminorm,
)
from .testfields import AnalyticField


class IdentityHypothesisError(ValueError):
    """Inputs violate the hypotheses an identity is stated under."""


@dataclass(frozen=True)
class TestField:
    """Grid field with its rigid part ``(ell, r)`` on the body."""

    field: VectorField
    ell: np.ndarray
    r: float
    support_radius: float = np.inf

    __test__ = False  # not a pytest class

    @classmethod
    def from_analytic(cls, f: AnalyticField, grid: Grid) -> "TestField":
        return cls(f.sample(grid), np.asarray(f.ell, dtype=float), float(f.r))

    @property
    def grid(self) -> Grid:
        return self.field.grid


def spectral_gradient(u: np.ndarray, grid: Grid) -> np.ndarray:
    """``G[i, j] = d_j u_i`` by FFT; exact for band-limited periodic data."""
    n = grid.n
    k = 2 * np.pi * np.fft.fftfreq(n, d=grid.h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    uh = np.fft.fft2(u, axes=(-2, -1))
    gx = np.real(np.fft.ifft2(1j * k[None, None, :] * uh, axes=(-2, -1)))
    gy = np.real(np.fft.ifft2(1j * k[None, :, None] * uh, axes=(-2, -1)))
    return np.stack([gx, gy], axis=1)


def _velocity_gradient(tf: TestField, deriv: str) -> np.ndarray:
    if deriv == "spectral":
        return spectral_gradient(tf.field.data, tf.grid)
    if deriv == "fd":
        return gradient_tensor(tf.field).data
    raise ValueError(f"unknown derivative scheme {deriv!r}")


def _solid_wedge_integral(geom: BodyGeometry, lv, rv, lw, rw) -> float:
    """``int_S (l_v + r_v x^perp) ^ (l_w + r_w x^perp) dx`` in closed form."""
    x0 = geom.centroid
    return geom.volume * (float(cross2(lv, lw)) + float((rw * np.asarray(lv) - rv * np.asarray(lw)) @ x0))


def trilinear_b(u: TestField, v: TestField, w: TestField, geom: BodyGeometry, *,
                deriv: str = "spectral", check_V: bool = False) -> float:
    """Convective form with the body determinant terms, planar reduction.

    The fluid integral is a box sum of an integrand that vanishes in the solid,
    minus the exact solid contribution of the rotation term.
    """
    g = u.grid
    if v.grid != g or w.grid != g:
        raise ValueError("grid mismatch between arguments of b")
    if check_V and not np.isfinite(weighted_h1_seminorm(w.field)):
        raise ValueError("third argument of b is not in V")
    m = geom.mass
    body = m * u.r * float(cross2(v.ell, w.ell))  # the J0 term vanishes: three vectors on e_z
    X, Y = g.coords()
    rel = u.field.data - np.stack([u.ell[0] - u.r * Y, u.ell[1] + u.r * X])
    Gw = _velocity_gradient(w, deriv)
    conv = np.einsum("j...,ij...,i...->...", rel, Gw, v.field.data)
    rot = u.r * cross2(np.moveaxis(v.field.data, 0, -1), np.moveaxis(w.field.data, 0, -1))
    fluid = np.sum(conv - rot) * g.cell_area
    fluid += u.r * _solid_wedge_integral(geom, v.ell, v.r, w.ell, w.r)
    return float(body + fluid)


def forcing_f(Q: np.ndarray, gvec, ell_v, r_v: float, geom: BodyGeometry) -> float:
    """Gravity/buoyancy work ``m_a Q^T g . l_v - Vol Q^T g . (r_v ^ x0)``."""
    qg = np.asarray(Q).T @ np.asarray(gvec, dtype=float)
    return float(geom.apparent_mass * qg @ np.asarray(ell_v, dtype=float)
                 - geom.volume * qg @ (r_v * perp(geom.centroid)))


# ---------------------------------------------------------------------------
# weak residual


def _h_product(a: np.ndarray, b: np.ndarray, weight: np.ndarray, grid: Grid) -> float:
    return float(np.sum(weight * np.sum(a * b, axis=0)) * grid.cell_area)


def _viscous_pairing(u: VectorField, v: VectorField, fluid: np.ndarray, variant: str) -> float:
    if variant == "deform":
        A, B, k = deformation(u), deformation(v), 2.0
    elif variant == "curl":
        A, B, k = curl_tensor(u), curl_tensor(v), 2.0
    elif variant == "grad":
        A, B, k = gradient_tensor(u), gradient_tensor(v), 1.0
    else:
        raise ValueError(f"unknown viscous variant {variant!r}")
    return k * float(np.sum(fluid * A.contract(B)) * u.grid.cell_area)


def weak_residual(times, fields, bodies, test_fn, nu: float, geom: BodyGeometry, gvec,
                  variant: str = "deform", dt_test: float = 1e-6) -> float:
    """LHS minus RHS of the weak formulation over the sampled interval.

    ``fields[k]`` is the body-frame velocity (rigid in the solid) at
    ``times[k]``, ``bodies[k]`` the matching body state, and ``test_fn(t)``
    returns a :class:`TestField`.  Time integrals use the trapezoid rule.
    """
    times = np.asarray(times, dtype=float)
    if len(times) != len(fields) or len(times) != len(bodies):
        raise ValueError("mismatched trajectory sampling")
    g = fields[0].grid
    chi = solid_mask(g, geom)
    weight = 1.0 + (geom.density - 1.0) * chi
    fluid = 1.0 - chi
    integrand = []
    for t, u, body in zip(times, fields, bodies):
        v = test_fn(t)
        vp, vm = test_fn(t + dt_test), test_fn(t - dt_test)
        dvdt = (vp.field.data - vm.field.data) / (2 * dt_test)
        uu = TestField(u, np.asarray(body.ell, dtype=float), float(body.r))
        val = _h_product(u.data, dvdt, weight, g)
        val += trilinear_b(uu, uu, v, geom, deriv="fd")
        val -= nu * _viscous_pairing(u, v.field, fluid, variant)
        val += forcing_f(body.Q, gvec, v.ell, v.r, geom)
        integrand.append(val)
    integrand = np.asarray(integrand)
    rhs = float(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))) if len(times) > 1 else 0.0
    v0, vT = test_fn(times[0]), test_fn(times[-1])
    lhs = _h_product(fields[-1].data, vT.field.data, weight, g) - _h_product(fields[0].data, v0.field.data, weight, g)
    return lhs - rhs


# ---------------------------------------------------------------------------
# identities


@dataclass(frozen=True)
class IdentityResult:
    kind: str
    lhs: float
    rhs: float
    scale: float

    def __iter__(self):
        return iter((self.lhs, self.rhs))

    @property
    def gap(self) -> float:
        """``|lhs - rhs|`` relative to a Cauchy-Schwarz bound of either side."""
        return abs(self.lhs - self.rhs) / self.scale if self.scale > 0 else abs(self.lhs - self.rhs)


IDENTITY_KINDS = ("P1", "P1curl", "P2", "divrot", "boundary_moments")


def _check_divergence_free(f: AnalyticField, grid: Grid, tol: float = 1e-8):
    X, Y = grid.coords()
    G = f.grad_velocity(X, Y)
    dv = np.max(np.abs(G[0, 0] + G[1, 1]))
    scale = max(np.max(np.abs(G)), 1e-300)
    if dv > tol * scale:
        raise IdentityHypothesisError(f"field is not divergence free: max|div| = {dv:.3e}")


def _check_grid_divergence_free(v: VectorField, tol: float):
    d = np.abs(div(v).data).max()
    scale = max(np.abs(gradient_tensor(v).data).max(), 1e-300)
    if d > tol * scale:
        raise IdentityHypothesisError(f"field is not divergence free: max|div| = {d:.3e}")


def identity_check(kind: str, U, V, grid: Grid, geom: BodyGeometry | None = None, *,
                   n_boundary: int = 512, div_tol: float = 1e-8) -> IdentityResult:
    """Evaluate both sides of an integration-by-parts identity on ``grid``.

    ``U`` and ``V`` are :class:`AnalyticField` (exactly divergence free) or
    grid :class:`VectorField` (checked to ``div_tol`` relative).  Volume
    identities integrate over the box and need fields vanishing near its
    edge; ``boundary_moments`` integrates over the body boundary and needs
    ``V`` rigid there.
    """
    if kind not in IDENTITY_KINDS:
        raise ValueError(f"unknown identity {kind!r}")
    for f in (U, V):
        if isinstance(f, AnalyticField):
            _check_divergence_free(f, grid)
        else:
            _check_grid_divergence_free(f, div_tol)
    Uf = U.sample(grid) if isinstance(U, AnalyticField) else U
    Vf = V.sample(grid) if isinstance(V, AnalyticField) else V
    dA = grid.cell_area

    if kind in ("P1", "P1curl"):
        GU, GV = gradient_tensor(Uf), gradient_tensor(Vf)
        lhs = float(np.sum(GU.contract(GV)) * dA)
        A, B = (deformation(Uf), deformation(Vf)) if kind == "P1" else (curl_tensor(Uf), curl_tensor(Vf))
        rhs = 2.0 * float(np.sum(A.contract(B)) * dA)
        scale = float(np.sum(np.sqrt(GU.norm2() * GV.norm2())) * dA)
        return IdentityResult(kind, lhs, rhs, scale)

    if kind == "P2":
        G = gradient_tensor(Uf).data
        u, v = Uf.data, Vf.data
        conv = np.einsum("j...,ij...->i...", u, G)
        lhs = float(np.sum(v * conv) * dA)
        D = deformation(Uf).data
        Du = np.einsum("ij...,j...->i...", D, u)
        rhs = 2.0 * float(np.sum(v * Du) * dA)
        scale = float(np.sum(np.linalg.norm(v, axis=0) * np.sqrt(np.sum(G**2, axis=(0, 1)))
                             * np.linalg.norm(u, axis=0)) * dA)
        return IdentityResult(kind, lhs, rhs, scale)

    if kind == "divrot":
        if not isinstance(V, AnalyticField):
            raise IdentityHypothesisError("divrot needs V as a stream function (AnalyticField)")
        # a = U (planar), b = psi_V e_z, weighted by a Gaussian
        X, Y = grid.coords()
        phi = np.exp(-(X**2 + Y**2) / (0.5 * grid.L) ** 2)
        psi = V.psi(X, Y)
        a = Uf.data
        curl_b = np.stack([ddx(psi, grid, -2), -ddx(psi, grid, -1)])
        lhs = -float(np.sum(phi * np.sum(a * curl_b, axis=0)) * dA)
        div_awb = ddx(a[1] * psi, grid, -1) - ddx(a[0] * psi, grid, -2)
        omega_a = vorticity(Uf).data
        rhs = float(np.sum(phi * (div_awb - psi * omega_a)) * dA)
        scale = float(np.sum(phi * (np.linalg.norm(a, axis=0) * np.linalg.norm(curl_b, axis=0)
                                    + np.abs(psi * omega_a))) * dA)
        return IdentityResult(kind, lhs, rhs, scale)

    # boundary_moments
    if geom is None:
        raise ValueError("boundary_moments needs a body geometry")
    # analytic inputs are smooth and periodic on the box, so the spectral
    # gradient leaves the boundary interpolation as the only grid error
    deriv = "spectral" if isinstance(U, AnalyticField) else "fd"
    terms = boundary_moment_terms(Uf, Vf, geom, n_boundary, deriv=deriv)
    # the rotational moment of v picks up r_v times the circulation of u
    if isinstance(U, AnalyticField):
        bq = geom.boundary_quadrature(n_boundary)
        ub = U.velocity(bq.points[:, 0], bq.points[:, 1])
        circ, tol = float(np.sum(bq.weights * np.sum(ub * perp(bq.normals).T, axis=0))), 1e-8
    else:
        circ, tol = terms["circulation"], max(1e-6, 4.0 * grid.h**2)
    if abs(terms["r_v"] * circ) > tol * terms["scale"] + 1e-12:
        raise IdentityHypothesisError(
            f"boundary identity needs zero circulation of U around the body when V rotates "
            f"(circulation {circ:.3e}, r_v {terms['r_v']:.3e})")
    lhs = terms["vorticity"]
    rhs = max(terms["gradient"], terms["deformation"], key=lambda x: abs(x - lhs))
    return IdentityResult(kind, lhs, rhs, terms["scale"])


def boundary_moment_terms(u: VectorField, v: VectorField, geom: BodyGeometry, n_boundary: int = 512,
                          deriv: str = "fd") -> dict:
    """The three boundary pairings that agree for rigid-on-boundary ``v``.

    Also returns the circulation of ``u`` around the body and the rotation
    rate of ``v`` fitted on the boundary: the pairings differ by their product.
    """
    grid = u.grid
    bq = geom.boundary_quadrature(n_boundary)
    n = -bq.normals  # outward from the fluid domain
    Gg = spectral_gradient(u.data, grid) if deriv == "spectral" else gradient_tensor(u).data
    G = interpolate(Gg, grid, bq.points)  # (2, 2, M)
    om = G[1, 0] - G[0, 1]
    vb = interpolate(v.data, grid, bq.points)  # (2, M)
    wedge = om * (vb[1] * n[:, 0] - vb[0] * n[:, 1])
    dn_u = np.einsum("ij...,j...->i...", G, n.T)  # n_j d_j u_i
    Dn = 0.5 * (dn_u + np.einsum("ji...,j...->i...", G, n.T))
    ub = interpolate(u.data, grid, bq.points)
    tang = perp(bq.normals)
    # least-squares rigid fit of v on the boundary
    P = bq.points
    A = np.zeros((2 * len(P), 3))
    A[0::2, 0] = 1.0
    A[1::2, 1] = 1.0
    A[0::2, 2] = -P[:, 1]
    A[1::2, 2] = P[:, 0]
    coef, *_ = np.linalg.lstsq(A, vb.T.reshape(-1), rcond=None)
    out = {
        "vorticity": float(np.sum(bq.weights * wedge)),
        "gradient": float(np.sum(bq.weights * np.sum(vb * dn_u, axis=0))),
        "deformation": float(np.sum(bq.weights * 2.0 * np.sum(Dn * vb, axis=0))),
        "circulation": float(np.sum(bq.weights * np.sum(ub * tang.T, axis=0))),
        "r_v": float(coef[2]),
    }
    out["scale"] = float(np.sum(bq.weights * np.linalg.norm(vb, axis=0) * np.sqrt(np.sum(G**2, axis=(0, 1)))))
    return out
