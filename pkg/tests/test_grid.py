import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from katofsi.body import BodyGeometry
from katofsi.grid import (
    Grid,
    ScalarField,
    StripSpec,
    TensorField,
    VectorField,
    bilinear,
    curl_tensor,
    deformation,
    div,
    grad,
    gradient_tensor,
    inner_product_H,
    interpolate,
    norm_H,
    signed_distance,
    strip_mask,
    weighted_h1_seminorm,
)


@pytest.mark.parametrize("radius, point, expected", [(1.0, (2.0, 0.0), 1.0), (1.0, (0.0, 0.0), -1.0),
                                                      (0.5, (0.3, 0.4), 0.0)])
def test_signed_distance_disk(radius, point, expected):
    geom = BodyGeometry.disk(radius, 2.0)
    assert signed_distance(geom, point) == pytest.approx(expected, abs=1e-15)


def test_signed_distance_square():
    geom = BodyGeometry.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)], 2.0)
    assert signed_distance(geom, (3.0, 0.0)) == pytest.approx(2.0)
    assert signed_distance(geom, (2.0, 2.0)) == pytest.approx(np.sqrt(2.0))
    assert signed_distance(geom, (0.0, 0.5)) == pytest.approx(-0.5)


@pytest.mark.parametrize("c, nu, area, tol", [(2.0, 0.05, np.pi * (1.1**2 - 1), 0.05),
                                              (1.0, 0.2, np.pi * (1.2**2 - 1), 0.05)])
def test_strip_mask_area(c, nu, area, tol):
    geom = BodyGeometry.disk(1.0, 2.0)
    grid = Grid(256, 2.0)  # h = 1/64
    m = strip_mask(grid, geom, StripSpec(c, nu))
    assert m.data.sum() * grid.cell_area == pytest.approx(area, rel=tol)


def test_strip_mask_area_converges():
    geom = BodyGeometry.disk(1.0, 2.0)
    exact = np.pi * (1.2**2 - 1)
    ns = np.array([64, 128, 256, 512])
    errs = []
    for n in ns:
        grid = Grid(int(n), 2.0)
        errs.append(abs(strip_mask(grid, geom, StripSpec(1.0, 0.2)).data.sum() * grid.cell_area - exact))
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert slope >= 0.9


def test_strip_mask_unresolved_warns_and_empties():
    geom = BodyGeometry.disk(1.0, 2.0)
    grid = Grid(64, 2.0)
    with pytest.warns(UserWarning, match="under-resolved"):
        m = strip_mask(grid, geom, StripSpec(1.0, 1e-6))
    assert m.data.sum() == 0


def test_strip_spec_rejects_nonpositive():
    with pytest.raises(ValueError):
        StripSpec(0.0, 1e-2)
    with pytest.raises(ValueError):
        StripSpec(1.0, -1.0)


def _smooth(grid):
    return VectorField.from_function(grid, lambda X, Y: (np.sin(X) * np.cos(2 * Y), np.exp(-X**2) * Y))


def test_gradient_splits_exactly():
    u = _smooth(Grid(48, 2.0))
    G = gradient_tensor(u).data
    assert np.array_equal(deformation(u).data + curl_tensor(u).data, G) or \
        np.abs(deformation(u).data + curl_tensor(u).data - G).max() < 1e-14


def test_deformation_and_curl_converge():
    def exact(X, Y):
        # u = (sin x cos 2y, exp(-x^2) y)
        G = np.array([[np.cos(X) * np.cos(2 * Y), -2 * np.sin(X) * np.sin(2 * Y)],
                      [-2 * X * np.exp(-X**2) * Y, np.exp(-X**2)]])
        return 0.5 * (G + G.transpose(1, 0, 2, 3)), 0.5 * (G - G.transpose(1, 0, 2, 3))

    errs = {"D": [], "C": []}
    for n in (32, 64, 128):
        grid = Grid(n, 2.0)
        X, Y = grid.coords()
        D, C = exact(X, Y)
        u = _smooth(grid)
        errs["D"].append(np.abs(deformation(u).data - D).max())
        errs["C"].append(np.abs(curl_tensor(u).data - C).max())
    for e in errs.values():
        assert np.log2(e[-2] / e[-1]) >= 1.8


def test_tensor_flags_validated():
    g = Grid(8, 1.0)
    bad = np.zeros((2, 2, 8, 8))
    bad[0, 1] = 1.0
    with pytest.raises(ValueError):
        TensorField(g, bad, symmetric=True)
    with pytest.raises(ValueError):
        TensorField(g, bad, antisymmetric=True)


def test_shape_checks():
    g = Grid(8, 1.0)
    with pytest.raises(ValueError):
        VectorField(g, np.zeros((2, 7, 8)))
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((8, 9)))
    with pytest.raises(ValueError):
        VectorField(g, np.zeros((2, 8, 8))) + VectorField(Grid(8, 2.0), np.zeros((2, 8, 8)))


def test_div_of_rotation_and_grad_of_linear():
    g = Grid(32, 2.0)
    rot = VectorField.from_function(g, lambda X, Y: (-Y, X))
    assert np.abs(div(rot).data).max() < 1e-12
    X, _ = g.coords()
    gp = grad(ScalarField(g, X.copy()))
    assert np.allclose(gp.data[0], 1.0) and np.allclose(gp.data[1], 0.0)


def test_inner_product_constant_field():
    geom = BodyGeometry.disk(1.0, 2.0)
    g = Grid(512, 1.5)
    one = VectorField.from_function(g, lambda X, Y: (1.0, 0.0))
    assert inner_product_H(one, one, geom) == pytest.approx((9 - np.pi) + 2 * np.pi, rel=2e-3)


def test_inner_product_rigid_decomposition():
    geom = BodyGeometry.disk(1.0, 2.0)
    g = Grid(256, 3.0)
    X, Y = g.coords()
    R = np.hypot(X, Y)
    fluid = np.exp(-((R - 2.0) / 0.3) ** 2) * (R > 1)
    phi = VectorField(g, np.stack([np.where(R <= 1, 1.0, fluid), np.zeros_like(X)]))
    chi = R <= 1
    expected = np.sum(fluid**2) * g.cell_area + geom.density * chi.sum() * g.cell_area
    assert norm_H(phi, geom) ** 2 == pytest.approx(expected, rel=1e-12)
    assert norm_H(phi, geom) ** 2 == pytest.approx(np.sum(fluid**2) * g.cell_area + geom.mass, rel=5e-3)


def test_weighted_seminorm_oracle():
    g = Grid(256, 2.0)
    u = VectorField.from_function(g, lambda X, Y: (Y, 0.0 * X))
    val, _ = sint.dblquad(lambda y, x: np.sqrt(1 + x * x + y * y), -2, 2, -2, 2)
    # one-sided stencils at the box edge keep d(y)/dy = 1 exactly
    assert weighted_h1_seminorm(u) ** 2 == pytest.approx(val, rel=0.01)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3, 3))
def test_inner_product_symmetric_bilinear_positive(seed, a):
    rng = np.random.default_rng(seed)
    geom = BodyGeometry.disk(0.5, 3.0)
    g = Grid(16, 1.0)
    p, q, s = (VectorField(g, rng.normal(size=(2, 16, 16))) for _ in range(3))
    assert inner_product_H(p, q, geom) == pytest.approx(inner_product_H(q, p, geom), rel=1e-12, abs=1e-12)
    lhs = inner_product_H(p * a + s, q, geom)
    rhs = a * inner_product_H(p, q, geom) + inner_product_H(s, q, geom)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
    assert inner_product_H(p, p, geom) > 0


def test_interpolation_of_linear_data():
    g = Grid(32, 2.0)
    X, Y = g.coords()
    a = 2 * X - Y
    pts = np.array([[0.1, 0.2], [-1.3, 0.77]])
    assert np.allclose(bilinear(a, g, pts), 2 * pts[:, 0] - pts[:, 1])
    assert np.allclose(interpolate(a, g, pts), 2 * pts[:, 0] - pts[:, 1], atol=1e-8)
    with pytest.raises(ValueError):
        bilinear(a, g, np.array([[5.0, 0.0]]))


def test_interpolation_periodic_smooth():
    g = Grid(64, np.pi, True)
    X, Y = g.coords()
    a = np.sin(X) * np.cos(Y)
    pts = np.array([[0.3, -1.1], [2.9, 3.0]])
    assert np.allclose(interpolate(a, g, pts), np.sin(pts[:, 0]) * np.cos(pts[:, 1]), atol=1e-5)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(2, 1.0)
    with pytest.raises(ValueError):
        Grid(16, -1.0)
    g = Grid(16, 1.0)
    assert g.refined().n == 32 and g.h == pytest.approx(0.125)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert g.axis()[0] == pytest.approx(-1 + g.h / 2)
