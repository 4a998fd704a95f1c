"""Independent reference solutions used to freeze expected values.

None of these share code with the solver: the added mass comes from a
boundary-element Laplace solve, the decaying vortex from its closed form.
"""
from __future__ import annotations

import numpy as np

from .body import BodyGeometry


def _panels(geom: BodyGeometry, n: int):
    """Straight panels with counter-clockwise ordering; normals point into the fluid."""
    if geom.is_disk:
        th = 2 * np.pi * np.arange(n + 1) / n
        nodes = geom.radius * np.stack([np.cos(th), np.sin(th)], -1)
    else:
        v = np.asarray(geom.vertices, dtype=float)
        v = np.vstack([v, v[:1]])
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.linspace(0.0, s[-1], n + 1)
        nodes = np.stack([np.interp(t, s, v[:, 0]), np.interp(t, s, v[:, 1])], -1)
    a, b = nodes[:-1], nodes[1:]
    mid = 0.5 * (a + b)
    tang = b - a
    length = np.linalg.norm(tang, axis=1)
    tang = tang / length[:, None]
    normal = np.stack([tang[:, 1], -tang[:, 0]], -1)  # outward for a CCW boundary
    return a, b, mid, length, normal


def _segment_log_integral(x, a, b):
    """``int_seg ln|x - y| ds_y`` in closed form for every (x, segment) pair."""
    t = b - a
    L = np.linalg.norm(t, axis=-1)
    e = t / L[..., None]
    rel = x[:, None, :] - a[None, :, :]
    s0 = np.einsum("ijk,jk->ij", rel, e)  # coordinate of x along the panel
    h = rel[..., 0] * e[None, :, 1] - rel[..., 1] * e[None, :, 0]
    h = np.where(np.abs(h) < 1e-300, 0.0, h)

    def F(u):
        # antiderivative of 0.5 ln(u^2 + h^2)
        r2 = u * u + h * h
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(r2 > 0, 0.5 * u * np.log(r2), 0.0)
            at = np.where(np.abs(h) > 0, h * np.arctan(u / h), 0.0)
        return lg - u + at

    return F(L[None, :] - s0) - F(-s0)


def _segment_normal_kernel(x, nx, a, b):
    """``int_seg d/dn_x ln|x - y| ds_y``; zero on the panel itself."""
    t = b - a
    L = np.linalg.norm(t, axis=-1)
    e = t / L[..., None]
    rel = x[:, None, :] - a[None, :, :]
    s0 = np.einsum("ijk,jk->ij", rel, e)
    h = rel[..., 0] * e[None, :, 1] - rel[..., 1] * e[None, :, 0]
    # gradient in x of int ln|x-y| ds = (along-panel part, normal-to-panel part)
    u1, u0 = L[None, :] - s0, -s0
    with np.errstate(divide="ignore", invalid="ignore"):
        g_par = -0.5 * (np.log(u1**2 + h**2) - np.log(u0**2 + h**2))
        g_nrm = np.arctan(u1 / h) - np.arctan(u0 / h)
    g_par = np.nan_to_num(g_par)
    g_nrm = np.where(np.abs(h) < 1e-14, 0.0, g_nrm)
    n_perp = np.stack([e[:, 1], -e[:, 0]], -1)  # direction in which h grows
    gx = g_par * e[None, :, 0] + g_nrm * n_perp[None, :, 0]
    gy = g_par * e[None, :, 1] + g_nrm * n_perp[None, :, 1]
    return gx * nx[:, None, 0] + gy * nx[:, None, 1]


def added_mass_bem(geom: BodyGeometry, n_panels: int = 256) -> np.ndarray:
    """Translational added-mass tensor (fluid density 1) by a constant-panel source method.

    Solves the exterior Neumann problem ``d phi_k / dn = n_k`` with a
    single-layer potential ``phi = (1/2pi) int sigma ln|x - y|`` and returns
    ``A_jk = -int phi_k n_j``.
    """
    a, b, mid, length, normal = _panels(geom, n_panels)
    K = _segment_normal_kernel(mid, normal, a, b) / (2 * np.pi)
    # fluid-side limit of the single-layer normal derivative
    M = 0.5 * np.eye(n_panels) + K
    S = _segment_log_integral(mid, a, b) / (2 * np.pi)
    A = np.zeros((2, 2))
    # zero net source keeps phi bounded at infinity
    Mc = np.vstack([M, length[None, :]])
    for k in range(2):
        rhs = np.concatenate([normal[:, k], [0.0]])
        sigma = np.linalg.lstsq(Mc, rhs, rcond=None)[0]
        phi = S @ sigma
        for j in range(2):
            A[j, k] = -float(np.sum(phi * normal[:, j] * length))
    return A


def added_mass_extrapolated(geom: BodyGeometry, n_panels: int = 512) -> np.ndarray:
    """Richardson extrapolation of the first-order panel error."""
    return 2 * added_mass_bem(geom, n_panels) - added_mass_bem(geom, n_panels // 2)


def falling_disk_acceleration(geom: BodyGeometry, g, n_panels: int = 512) -> np.ndarray:
    """``(m + A)^{-1} m_a g`` with the boundary-element added mass."""
    A = added_mass_extrapolated(geom, n_panels)
    return np.linalg.solve(geom.mass * np.eye(2) + A, geom.apparent_mass * np.asarray(g, dtype=float))


def taylor_green(L: float, nu: float, t: float, X, Y, amp: float = 1.0) -> np.ndarray:
    """Decaying vortex array of wavenumber ``pi / L``, periodic on ``[-L, L]^2``."""
    k = np.pi / L
    decay = amp * np.exp(-2 * nu * k * k * t)
    return decay * np.stack([np.sin(k * X) * np.cos(k * Y), -np.cos(k * X) * np.sin(k * Y)])


def taylor_green_kinetic(L: float, nu: float, t: float, amp: float = 1.0) -> float:
    """Kinetic energy ``0.5 int |u|^2`` over the box."""
    k = np.pi / L
    return 0.5 * amp**2 * np.exp(-4 * nu * k * k * t) * (2 * L) ** 2 / 2
