"""Fixed body-frame grid, field containers and discrete differential operators.

Fields live at cell centres of the square box ``[-L, L]^2``.  Arrays are
indexed ``[..., j, i]`` with ``j`` running along ``y`` and ``i`` along ``x``.
Derivatives are second-order centred differences; on a periodic grid they
wrap around, otherwise the edge rows use second-order one-sided stencils.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates


@dataclass(frozen=True)
class Grid:
    n: int
    L: float
    periodic: bool = False

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"grid needs at least 4 cells per side, got {self.n}")
        if self.L <= 0:
            raise ValueError("box half-width L must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def axis(self) -> np.ndarray:
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinate arrays ``(X, Y)`` of shape ``(n, n)``."""
        a = self.axis()
        X, Y = np.meshgrid(a, a, indexing="xy")
        return X, Y

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.n * factor, self.L, self.periodic)


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError(f"grid mismatch: {f.grid} vs {g}")
    return g


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != self.grid.shape:
            raise ValueError(f"scalar data has shape {self.data.shape}, expected {self.grid.shape}")


@dataclass(frozen=True)
class VectorField:
    grid: Grid
    data: np.ndarray  # (2, n, n)

    def __post_init__(self):
        if self.data.shape != (2,) + self.grid.shape:
            raise ValueError(f"vector data has shape {self.data.shape}")

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "VectorField":
        X, Y = grid.coords()
        ux, uy = fn(X, Y)
        return cls(grid, np.stack([np.broadcast_to(ux, X.shape), np.broadcast_to(uy, X.shape)]).astype(float))

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.data + other.data)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.data - other.data)

    def __mul__(self, s) -> "VectorField":
        return VectorField(self.grid, self.data * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class TensorField:
    grid: Grid
    data: np.ndarray  # (2, 2, n, n), data[i, j] = A_ij
    symmetric: bool = False
    antisymmetric: bool = False

    def __post_init__(self):
        if self.data.shape != (2, 2) + self.grid.shape:
            raise ValueError(f"tensor data has shape {self.data.shape}")
        if self.symmetric and not np.array_equal(self.data[0, 1], self.data[1, 0]):
            raise ValueError("tensor flagged symmetric but a12 != a21")
        if self.antisymmetric:
            d = self.data
            if np.any(d[0, 0] != 0) or np.any(d[1, 1] != 0) or not np.array_equal(d[0, 1], -d[1, 0]):
                raise ValueError("tensor flagged antisymmetric but entries disagree")

    def contract(self, other: "TensorField") -> np.ndarray:
        """Pointwise ``A : B``."""
        return np.einsum("ij...,ij...->...", self.data, other.data)

    def norm2(self) -> np.ndarray:
        return self.contract(self)


@dataclass(frozen=True)
class StripSpec:
    c: float
    nu: float

    def __post_init__(self):
        if self.c <= 0 or self.nu <= 0:
            raise ValueError(f"strip needs c > 0 and nu > 0, got c={self.c}, nu={self.nu}")

    @property
    def width(self) -> float:
        return self.c * self.nu


# ---------------------------------------------------------------------------
# finite differences


def ddx(a: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Centred derivative along ``axis`` (-1 for x, -2 for y)."""
    h = grid.h
    if grid.periodic:
        return (np.roll(a, -1, axis=axis) - np.roll(a, 1, axis=axis)) / (2.0 * h)
    return np.gradient(a, h, axis=axis, edge_order=2)


def gradient_tensor(u: VectorField) -> TensorField:
    """``G[i, j] = d_j u_i``."""
    g = u.grid
    G = np.empty((2, 2) + g.shape)
    for i in range(2):
        G[i, 0] = ddx(u.data[i], g, -1)
        G[i, 1] = ddx(u.data[i], g, -2)
    return TensorField(g, G)


def deformation(u: VectorField) -> TensorField:
    G = gradient_tensor(u).data
    D = 0.5 * (G + G.transpose(1, 0, 2, 3))
    D[1, 0] = D[0, 1]
    return TensorField(u.grid, D, symmetric=True)


def curl_tensor(u: VectorField) -> TensorField:
    """Antisymmetric part ``(d_j u_i - d_i u_j) / 2``."""
    G = gradient_tensor(u).data
    C = np.zeros_like(G)
    C[0, 1] = 0.5 * (G[0, 1] - G[1, 0])
    C[1, 0] = -C[0, 1]
    return TensorField(u.grid, C, antisymmetric=True)


def vorticity(u: VectorField) -> ScalarField:
    g = u.grid
    return ScalarField(g, ddx(u.data[1], g, -1) - ddx(u.data[0], g, -2))


def div(u: VectorField) -> ScalarField:
    g = u.grid
    return ScalarField(g, ddx(u.data[0], g, -1) + ddx(u.data[1], g, -2))


def grad(p: ScalarField) -> VectorField:
    g = p.grid
    return VectorField(g, np.stack([ddx(p.data, g, -1), ddx(p.data, g, -2)]))


def weighted_h1_seminorm(u: VectorField) -> float:
    """``(int |grad u|^2 (1 + |x|^2)^(1/2) dx)^(1/2)`` over the box."""
    g = u.grid
    X, Y = g.coords()
    w = np.sqrt(1.0 + X**2 + Y**2)
    G = gradient_tensor(u)
    return float(np.sqrt(np.sum(G.norm2() * w) * g.cell_area))


def integrate(a: np.ndarray, grid: Grid, mask: np.ndarray | None = None) -> float:
    if mask is not None:
        a = a * mask
    return float(np.sum(a) * grid.cell_area)


# ---------------------------------------------------------------------------
# geometry helpers (the body itself lives in ``body.py``)


def signed_distance(geom, points) -> np.ndarray:
    """Distance to the body boundary, positive in the fluid and negative inside."""
    return geom.signed_distance(np.asarray(points, dtype=float))


def distance_field(grid: Grid, geom) -> ScalarField:
    X, Y = grid.coords()
    return ScalarField(grid, geom.signed_distance(np.stack([X, Y], axis=-1)))


def solid_mask(grid: Grid, geom) -> np.ndarray:
    """Cell-centre indicator of the solid (``d <= 0``)."""
    if geom is None:
        return np.zeros(grid.shape)
    return (distance_field(grid, geom).data <= 0.0).astype(float)


def strip_mask(grid: Grid, geom, spec: StripSpec) -> ScalarField:
    d = distance_field(grid, geom).data
    if spec.width < 2.0 * grid.h:
        warnings.warn(
            f"strip width c*nu = {spec.width:.3g} is below 2h = {2 * grid.h:.3g}; strip under-resolved",
            stacklevel=2,
        )
    return ScalarField(grid, ((d > 0.0) & (d < spec.width)).astype(float))


def inner_product_H(phi: VectorField, psi: VectorField, geom) -> float:
    """Fluid L2 product plus the density-weighted solid product."""
    g = _check_same_grid(phi, psi)
    chi = solid_mask(g, geom)
    rho = 1.0 if geom is None else geom.density
    w = 1.0 + (rho - 1.0) * chi
    return float(np.sum(w * np.sum(phi.data * psi.data, axis=0)) * g.cell_area)


def norm_H(phi: VectorField, geom) -> float:
    return float(np.sqrt(max(inner_product_H(phi, phi, geom), 0.0)))


# ---------------------------------------------------------------------------
# interpolation


def bilinear(a: np.ndarray, grid: Grid, pts: np.ndarray) -> np.ndarray:
    """Sample cell-centred array(s) ``a[..., n, n]`` at points ``pts[..., 2]``."""
    pts = np.asarray(pts, dtype=float)
    h = grid.h
    fx = (pts[..., 0] + grid.L) / h - 0.5
    fy = (pts[..., 1] + grid.L) / h - 0.5
    n = grid.n
    if np.any(fx < 0) or np.any(fy < 0) or np.any(fx > n - 1) or np.any(fy > n - 1):
        raise ValueError("interpolation point outside the truncation box")
    i0 = np.clip(np.floor(fx).astype(int), 0, n - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, n - 2)
    tx = fx - i0
    ty = fy - j0
    return (
        a[..., j0, i0] * (1 - tx) * (1 - ty)
        + a[..., j0, i0 + 1] * tx * (1 - ty)
        + a[..., j0 + 1, i0] * (1 - tx) * ty
        + a[..., j0 + 1, i0 + 1] * tx * ty
    )


def interpolate(a: np.ndarray, grid: Grid, pts: np.ndarray, order: int = 3) -> np.ndarray:
    """Spline sample of cell-centred array(s) ``a[..., n, n]`` at ``pts[..., 2]``."""
    pts = np.asarray(pts, dtype=float)
    fx = (pts[..., 0] + grid.L) / grid.h - 0.5
    fy = (pts[..., 1] + grid.L) / grid.h - 0.5
    if np.any(np.abs(pts) > grid.L):
        raise ValueError("interpolation point outside the truncation box")
    mode = "grid-wrap" if grid.periodic else "nearest"
    flat = a.reshape((-1,) + a.shape[-2:])
    out = np.stack([map_coordinates(f, [fy, fx], order=order, mode=mode) for f in flat])
    return out.reshape(a.shape[:-2] + fx.shape)


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Trapezoid rule on a parameterised closed curve."""

    points: np.ndarray  # (M, 2)
    normals: np.ndarray  # (M, 2), outward from the solid
    weights: np.ndarray  # (M,) arc-length weights
    extra: dict = field(default_factory=dict)
