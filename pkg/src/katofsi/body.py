"""Rigid-body geometry, kinematics and body/lab frame changes."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson

from .grid import BoundaryQuadrature, Grid, VectorField, bilinear


def perp(v: np.ndarray) -> np.ndarray:
    """``x^perp = (-x2, x1)``, i.e. ``e_z ^ x``."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def cross2(a, b):
    """z-component of ``a ^ b`` for planar vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class BodyGeometry:
    """A disk of radius ``radius`` or a convex polygon, with constant density."""

    density: float
    radius: float | None = None
    vertices: tuple | None = None

    def __post_init__(self):
        if (self.radius is None) == (self.vertices is None):
            raise ValueError("give exactly one of radius or vertices")
        if self.density <= 0:
            raise ValueError("density must be positive")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.vertices is not None:
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise ValueError("polygon needs at least 3 planar vertices")
            e = np.roll(v, -1, axis=0) - v
            turn = cross2(e, np.roll(e, -1, axis=0))
            if not (np.all(turn > 0) or np.all(turn < 0)):
                raise ValueError("polygon must be strictly convex")

    @classmethod
    def disk(cls, radius: float, density: float) -> "BodyGeometry":
        return cls(density=density, radius=radius)

    @classmethod
    def polygon(cls, vertices, density: float) -> "BodyGeometry":
        v = np.asarray(vertices, dtype=float)
        if np.sum(cross2(v, np.roll(v, -1, axis=0))) < 0:
            v = v[::-1]
        return cls(density=density, vertices=tuple(map(tuple, v)))

    @property
    def is_disk(self) -> bool:
        return self.radius is not None

    @property
    def _verts(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def volume(self) -> float:
        if self.is_disk:
            return float(np.pi * self.radius**2)
        v = self._verts
        return float(0.5 * np.sum(cross2(v, np.roll(v, -1, axis=0))))

    @property
    def centroid(self) -> np.ndarray:
        """Centroid of the solid region (not of the fluid)."""
        if self.is_disk:
            return np.zeros(2)
        v = self._verts
        w = np.roll(v, -1, axis=0)
        c = cross2(v, w)
        return np.array([np.sum((v[:, 0] + w[:, 0]) * c), np.sum((v[:, 1] + w[:, 1]) * c)]) / (6.0 * self.volume)

    @property
    def second_moment(self) -> float:
        """``int_S |x|^2 dx`` about the origin of the body frame."""
        if self.is_disk:
            return float(0.5 * np.pi * self.radius**4)
        v = self._verts
        w = np.roll(v, -1, axis=0)
        c = cross2(v, w)
        ixx = np.sum(c * (v[:, 1] ** 2 + v[:, 1] * w[:, 1] + w[:, 1] ** 2)) / 12.0
        iyy = np.sum(c * (v[:, 0] ** 2 + v[:, 0] * w[:, 0] + w[:, 0] ** 2)) / 12.0
        return float(ixx + iyy)

    @property
    def mass(self) -> float:
        return self.density * self.volume

    @property
    def inertia(self) -> float:
        return self.density * self.second_moment

    @property
    def apparent_mass(self) -> float:
        return self.mass - self.volume

    @property
    def inscribed_radius(self) -> float:
        """Radius of the smallest origin-centred disk containing the body."""
        if self.is_disk:
            return float(self.radius)
        return float(np.max(np.linalg.norm(self._verts, axis=1)))

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.is_disk:
            return np.hypot(pts[..., 0], pts[..., 1]) - self.radius
        v = self._verts
        best = np.full(pts.shape[:-1], np.inf)
        inside = np.ones(pts.shape[:-1], dtype=bool)
        for k in range(len(v)):
            a, b = v[k], v[(k + 1) % len(v)]
            e = b - a
            t = np.clip(((pts - a) @ e) / (e @ e), 0.0, 1.0)
            proj = a + t[..., None] * e
            best = np.minimum(best, np.linalg.norm(pts - proj, axis=-1))
            inside &= cross2(e, pts - a) >= 0
        return np.where(inside, -best, best)

    def boundary_quadrature(self, m: int = 256) -> BoundaryQuadrature:
        if m < 16:
            raise ValueError(f"boundary quadrature needs at least 16 points, got {m}")
        if self.is_disk:
            th = 2 * np.pi * np.arange(m) / m
            n = np.stack([np.cos(th), np.sin(th)], axis=-1)
            return BoundaryQuadrature(self.radius * n, n, np.full(m, 2 * np.pi * self.radius / m))
        v = self._verts
        per_edge = max(m // len(v), 4)
        pts, nrm, wts = [], [], []
        for k in range(len(v)):
            a, b = v[k], v[(k + 1) % len(v)]
            e = b - a
            ln = np.linalg.norm(e)
            # midpoint rule on each edge
            s = (np.arange(per_edge) + 0.5) / per_edge
            pts.append(a + s[:, None] * e)
            nrm.append(np.tile(np.array([e[1], -e[0]]) / ln, (per_edge, 1)))
            wts.append(np.full(per_edge, ln / per_edge))
        return BoundaryQuadrature(np.concatenate(pts), np.concatenate(nrm), np.concatenate(wts))


@dataclass(frozen=True)
class BodyState:
    h: np.ndarray  # lab-frame centre of mass
    theta: float  # orientation angle (2D)
    ell: np.ndarray  # body-frame linear velocity
    r: float  # angular velocity

    @classmethod
    def at_rest(cls, ell=(0.0, 0.0), r: float = 0.0) -> "BodyState":
        return cls(np.zeros(2), 0.0, np.asarray(ell, dtype=float), float(r))

    @property
    def Q(self) -> np.ndarray:
        return rotation2(self.theta)

    @property
    def R(self) -> float:
        # in 2D Q r = r: rotations about e_z fix the axis
        return self.r

    def replace(self, **kw) -> "BodyState":
        return replace(self, **kw)


def rotation2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def hat(r: np.ndarray) -> np.ndarray:
    """Matrix of ``x -> r ^ x``."""
    return np.array([[0.0, -r[2], r[1]], [r[2], 0.0, -r[0]], [-r[1], r[0], 0.0]])


def orthonormalize(Q: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(Q)
    P = U @ Vt
    if np.linalg.det(P) < 0:
        U[:, -1] *= -1
        P = U @ Vt
    return P


def integrate_rotation(r, dt: float, theta0: float = 0.0):
    """Orientation history from uniformly sampled angular velocities.

    Scalar samples (2D) give angles by cumulative Simpson quadrature; a
    ``(K, 3)`` array (3D) gives rotation matrices solving ``Q' = Q hat(r)``
    with RK4 and re-orthonormalisation, starting from the identity.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    r = np.asarray(r, dtype=float)
    if r.ndim == 1:
        if len(r) < 3:
            return theta0 + np.concatenate([[0.0], np.cumsum(0.5 * dt * (r[1:] + r[:-1]))])
        return theta0 + cumulative_simpson(r, dx=dt, initial=0.0)
    if r.ndim != 2 or r.shape[1] != 3:
        raise ValueError("3D angular velocity samples must have shape (K, 3)")
    Qs = [np.eye(3)]
    Q = np.eye(3)
    for k in range(len(r) - 1):
        r0, r1 = r[k], r[k + 1]
        rm = 0.5 * (r0 + r1)
        k1 = Q @ hat(r0)
        k2 = (Q + 0.5 * dt * k1) @ hat(rm)
        k3 = (Q + 0.5 * dt * k2) @ hat(rm)
        k4 = (Q + dt * k3) @ hat(r1)
        Q = orthonormalize(Q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
        Qs.append(Q)
    return np.array(Qs)


def inertia_at(Q, J0):
    """Sylvester's law ``J = Q J0 Q^T`` (a scalar passes through unchanged in 2D)."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 0 or Q.shape == (2, 2) or np.ndim(J0) == 0:
        if Q.ndim == 2 and not np.allclose(Q.T @ Q, np.eye(len(Q)), atol=1e-10):
            raise ValueError("orientation is not orthonormal")
        return J0
    if not np.allclose(Q.T @ Q, np.eye(3), atol=1e-10) or np.linalg.det(Q) < 0:
        raise ValueError("orientation is not a rotation")
    return Q @ np.asarray(J0, dtype=float) @ Q.T


def solid_velocity(ell, r, x):
    """Rigid field ``ell + r ^ x``; 2D uses ``r x^perp``."""
    x = np.asarray(x, dtype=float)
    ell = np.asarray(ell, dtype=float)
    if np.ndim(r) == 0:
        return ell + r * perp(x)
    return ell + np.cross(np.asarray(r, dtype=float), x)


def rigid_field(grid: Grid, ell, r) -> VectorField:
    X, Y = grid.coords()
    return VectorField(grid, np.stack([ell[0] - r * Y, ell[1] + r * X]))


def body_to_lab(state: BodyState, u: VectorField, pts: np.ndarray) -> np.ndarray:
    """Lab-frame velocity ``U(y) = Q u(Q^T (y - h))`` at lab points ``pts[..., 2]``."""
    Q = state.Q
    x = (np.asarray(pts, dtype=float) - state.h) @ Q  # Q^T (y - h), row vectors
    ub = bilinear(u.data, u.grid, x)  # (2, ...)
    return np.moveaxis(np.tensordot(Q, ub, axes=(1, 0)), 0, -1)


def lab_to_body(state: BodyState, U_lab, grid: Grid) -> VectorField:
    """Inverse map for a callable lab field ``U_lab(y) -> (..., 2)``."""
    X, Y = grid.coords()
    x = np.stack([X, Y], axis=-1)
    y = x @ state.Q.T + state.h
    U = np.asarray(U_lab(y))
    return VectorField(grid, np.moveaxis(U @ state.Q, -1, 0))
