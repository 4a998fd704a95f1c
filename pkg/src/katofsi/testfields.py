"""Analytic divergence-free fields built from stream functions.

A field is ``u = (d2 psi, -d1 psi)`` for a sum of stream-function terms, each
providing its value, gradient and Hessian in closed form, so velocity
gradients are exact and can serve as quadrature oracles.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .grid import Grid, VectorField

_SQRT_PI = np.sqrt(np.pi)


class GaussianBlob:
    """``psi = amp * exp(-|x - c|^2 / s^2)``."""

    def __init__(self, center, amp: float, width: float):
        self.c = np.asarray(center, dtype=float)
        self.amp = float(amp)
        self.s = float(width)

    def derivs(self, X, Y):
        dx, dy = X - self.c[0], Y - self.c[1]
        s2 = self.s**2
        e = self.amp * np.exp(-(dx**2 + dy**2) / s2)
        gx, gy = -2 * dx / s2 * e, -2 * dy / s2 * e
        hxx = (4 * dx**2 / s2**2 - 2 / s2) * e
        hyy = (4 * dy**2 / s2**2 - 2 / s2) * e
        hxy = 4 * dx * dy / s2**2 * e
        return e, (gx, gy), (hxx, hxy, hyy)


class RigidCore:
    """Rigid stream function ``ell ^ x - r |x|^2 / 2`` faded out by an erfc step.

    Equal to the rigid field to round-off for ``|x| < rho0 - 6 w``.
    """

    def __init__(self, ell, r: float, rho0: float, width: float):
        self.ell = np.asarray(ell, dtype=float)
        self.r = float(r)
        self.rho0 = float(rho0)
        self.w = float(width)

    def _radial(self, rho):
        s = (rho - self.rho0) / self.w
        B = 0.5 * erfc(s)
        g = np.exp(-s * s) / (self.w * _SQRT_PI)
        return B, -g, 2 * s / self.w * g

    def derivs(self, X, Y):
        l1, l2, r = self.ell[0], self.ell[1], self.r
        P = l1 * Y - l2 * X - 0.5 * r * (X**2 + Y**2)
        Px, Py = -l2 - r * X, l1 - r * Y
        rho = np.hypot(X, Y)
        safe = np.maximum(rho, 1e-300)
        B, B1, B2 = self._radial(rho)
        nx, ny = X / safe, Y / safe
        Bx, By = B1 * nx, B1 * ny
        # Hessian of a radial function
        t = np.where(rho > 1e-12, B1 / safe, 0.0)
        Bxx = B2 * nx * nx + t * (1 - nx * nx)
        Byy = B2 * ny * ny + t * (1 - ny * ny)
        Bxy = (B2 - t) * nx * ny
        val = B * P
        gx = B * Px + P * Bx
        gy = B * Py + P * By
        hxx = -r * B + 2 * Bx * Px + P * Bxx
        hyy = -r * B + 2 * By * Py + P * Byy
        hxy = Bx * Py + By * Px + P * Bxy
        return val, (gx, gy), (hxx, hxy, hyy)


@dataclass
class AnalyticField:
    terms: list = field(default_factory=list)
    ell: np.ndarray = field(default_factory=lambda: np.zeros(2))
    r: float = 0.0

    def _sum(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        val = np.zeros_like(X)
        g = [np.zeros_like(X), np.zeros_like(X)]
        H = [np.zeros_like(X), np.zeros_like(X), np.zeros_like(X)]
        for t in self.terms:
            v, gg, hh = t.derivs(X, Y)
            val = val + v
            g = [a + b for a, b in zip(g, gg)]
            H = [a + b for a, b in zip(H, hh)]
        return val, g, H

    def psi(self, X, Y):
        return self._sum(X, Y)[0]

    def velocity(self, X, Y) -> np.ndarray:
        _, (gx, gy), _ = self._sum(X, Y)
        return np.stack([gy, -gx])

    def grad_velocity(self, X, Y) -> np.ndarray:
        """``G[i, j] = d_j u_i``."""
        _, _, (hxx, hxy, hyy) = self._sum(X, Y)
        return np.array([[hxy, hyy], [-hxx, -hxy]])

    def sample(self, grid: Grid) -> VectorField:
        X, Y = grid.coords()
        return VectorField(grid, self.velocity(X, Y))

    def scaled(self, a: float) -> "AnalyticField":
        out = AnalyticField(ell=self.ell * a, r=self.r * a)
        for t in self.terms:
            if isinstance(t, GaussianBlob):
                out.terms.append(GaussianBlob(t.c, t.amp * a, t.s))
            else:
                out.terms.append(RigidCore(t.ell * a, t.r * a, t.rho0, t.w))
        return out

    def __add__(self, other: "AnalyticField") -> "AnalyticField":
        return AnalyticField(self.terms + other.terms, self.ell + other.ell, self.r + other.r)


def random_blobs(rng, n: int, r_min: float, r_max: float, width: float, amp: float = 1.0) -> list:
    out = []
    for _ in range(n):
        rad = rng.uniform(r_min, r_max)
        ang = rng.uniform(0, 2 * np.pi)
        out.append(GaussianBlob(rad * np.array([np.cos(ang), np.sin(ang)]), amp * rng.normal(), width))
    return out


def random_admissible(rng, body_radius: float, box_L: float, *, rigid: bool = True,
                      n_blobs: int = 3, blob_width: float | None = None,
                      core_width: float | None = None) -> AnalyticField:
    """Random smooth field in H: rigid on a neighbourhood of the disk, decaying before the box edge."""
    a = body_radius
    span = box_L - a
    s = blob_width if blob_width is not None else span / 16
    w = core_width if core_width is not None else span / 16
    f = AnalyticField()
    if rigid:
        ell = rng.normal(size=2)
        r = float(rng.normal())
        rho0 = a + 6.5 * w
        f.terms.append(RigidCore(ell, r, rho0, w))
        f.ell, f.r = ell, r
    # blob tails must be negligible inside the body and at the box edge
    r_min = a + 6.5 * s
    r_max = box_L - 6.5 * s
    if r_max <= r_min:
        raise ValueError("box too small for the requested blob width")
    f.terms.extend(random_blobs(rng, n_blobs, r_min, r_max, s))
    return f


def compact_blobs(rng, box_L: float, n_blobs: int = 3, width: float | None = None) -> AnalyticField:
    """Random smooth field supported well inside the box, with no body constraint."""
    s = width if width is not None else 0.15 * box_L
    lim = box_L - 6.5 * s
    f = AnalyticField()
    for _ in range(n_blobs):
        c = rng.uniform(-lim, lim, size=2)
        f.terms.append(GaussianBlob(c, rng.normal(), s))
    return f


def circulation(f: AnalyticField, radius: float, m: int = 1024) -> float:
    """Circulation of ``f`` around the origin-centred circle of ``radius``."""
    th = 2 * np.pi * np.arange(m) / m
    X, Y = radius * np.cos(th), radius * np.sin(th)
    u = f.velocity(X, Y)
    return float(np.sum(-u[0] * np.sin(th) + u[1] * np.cos(th)) * radius * 2 * np.pi / m)


def zero_circulation(f: AnalyticField, radius: float, width: float) -> AnalyticField:
    """Add a solid-body swirl that cancels the circulation around the disk."""
    probe = RigidCore((0.0, 0.0), 1.0, radius + 6.5 * width, width)
    unit = circulation(AnalyticField([probe]), radius)
    gam = circulation(f, radius)
    return AnalyticField(f.terms + [RigidCore((0.0, 0.0), -gam / unit, probe.rho0, width)], f.ell, f.r)
