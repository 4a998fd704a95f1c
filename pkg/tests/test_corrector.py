import warnings

import numpy as np
import pytest

from katofsi.body import BodyGeometry
from katofsi.corrector import (
    CorrectorNorms,
    SlipConditionError,
    UnderResolvedStrip,
    boundary_trace_gap,
    build_corrector,
    build_stream_tensor,
    corrected_test_field,
    corrector_scalings,
    divergence_ratio,
    fake_mother,
    fit_exponent,
    tangential_jump,
    xi,
    xi_tilde,
)
from katofsi.euler import PotentialDisk
from katofsi.grid import Grid, ScalarField, VectorField

GEOM = BodyGeometry.disk(1.0, 2.0)
REF = PotentialDisk(GEOM, np.array([0.0, -1.0]), np.zeros(2), 1.0)
T = 0.5


def u_rel(X, Y):
    return REF.relative_velocity(T, X, Y)


def _corr(n=256, L=1.5, c=20.0, nu=0.01, profile="quadratic"):
    g = Grid(n, L)
    psi = build_stream_tensor(u_rel, GEOM, g, width=c * nu)
    return build_corrector(psi, c, nu, GEOM, profile)


@pytest.mark.parametrize("profile", ["quadratic", "cubic"])
def test_profiles(profile):
    assert xi(0.0, profile) == 1.0
    assert xi(1.0, profile) == 0.0 and xi(2.0, profile) == 0.0
    assert xi_tilde(0.0, profile) == 0.0
    assert xi_tilde(0.5, profile) == pytest.approx(0.5 * (-2 * 0.5 if profile == "quadratic" else -3 * 0.25))


def test_stream_function_of_zero_is_zero():
    g = Grid(32, 2.0)
    psi = build_stream_tensor(lambda X, Y: np.zeros((2,) + np.shape(X)), GEOM, g)
    assert np.all(psi.data == 0)


def test_dipole_stream_function():
    ref = PotentialDisk(GEOM, np.zeros(2), np.array([1.0, 0.0]))
    g = Grid(128, 2.0)
    psi = build_stream_tensor(lambda X, Y: ref.relative_velocity(0.0, X, Y), GEOM, g)
    X, Y = g.coords()
    fluid = np.hypot(X, Y) > 1
    assert np.abs(psi.data - ref.relative_psi(0.0, X, Y))[fluid].max() < 1e-10


def test_rotation_stream_function_is_radial():
    g = Grid(64, 2.0)
    rot = lambda X, Y: np.stack([-Y, X])  # noqa: E731  tangential on circles
    psi = build_stream_tensor(rot, GEOM, g)
    X, Y = g.coords()
    R2 = X**2 + Y**2
    fluid = R2 > 1
    assert np.abs(psi.data - 0.5 * (1 - R2))[fluid].max() < 1e-12


def test_slip_violation_rejected():
    with pytest.raises(SlipConditionError):
        build_stream_tensor(lambda X, Y: np.stack([np.ones_like(X), np.zeros_like(X)]), GEOM, Grid(32, 2.0))
    with pytest.raises(TypeError):
        build_stream_tensor(3.0, GEOM, Grid(32, 2.0))


def test_zero_psi_gives_zero_corrector():
    g = Grid(64, 2.0)
    corr = build_corrector(ScalarField(g, np.zeros(g.shape)), 10.0, 0.05, GEOM)
    assert np.all(corr.v_F.data == 0)


def test_under_resolved_strip():
    g = Grid(32, 2.0)
    psi = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(UnderResolvedStrip):
        build_corrector(psi, 1.0, 0.01, GEOM)
    with pytest.warns(UserWarning, match="4 cells"):
        build_corrector(psi, 1.0, 3 * g.h, GEOM)
    with pytest.raises(ValueError, match="profile"):
        build_corrector(psi, 10.0, 0.05, GEOM, "quartic")


def test_support_and_divergence():
    corr = _corr()
    d = corr.distance()
    v = np.linalg.norm(corr.v_F.data, axis=0)
    assert np.all(v[(d >= corr.width + 2 * corr.grid.h) | (d <= 0)] == 0)
    assert divergence_ratio(corr) < 1e-12


def test_boundary_trace_first_order():
    gaps = [boundary_trace_gap(_corr(n), u_rel) for n in (128, 256, 512)]
    assert gaps[2] < gaps[1] < gaps[0]
    assert np.log2(gaps[1] / gaps[2]) >= 0.8


def test_fake_mother_matches_direct_curl():
    errs = []
    for n in (128, 256, 512):
        corr = _corr(n)
        fm = fake_mother(corr, u_rel)
        s = corr.strip()
        errs.append(np.abs(fm.data - corr.v_F.data)[:, s].max() / np.abs(corr.v_F.data).max())
    assert errs[-1] < errs[0] / 2


def test_corrected_field_continuous():
    b = REF.body(T)
    fixed, bare = [], []
    for n in (256, 512):
        g = Grid(n, 1.5)
        X, Y = g.coords()
        ue = VectorField(g, REF.velocity(T, X, Y))
        tf = corrected_test_field(ue, b.ell, b.r, _corr(n))
        fixed.append(tangential_jump(tf.field, b.ell, b.r, GEOM, 1.5 * g.h))
        bare.append(tangential_jump(ue, b.ell, b.r, GEOM, 1.5 * g.h))
    # the corrected jump is O(h); the slip-only jump of u^E does not shrink
    assert fixed[1] < 0.6 * fixed[0]
    assert bare[1] > 0.9 * bare[0]
    with pytest.raises(ValueError, match="different grids"):
        corrected_test_field(VectorField(Grid(64, 1.5), np.zeros((2, 64, 64))), b.ell, b.r, _corr(256))


def test_rigid_euler_data_needs_no_corrector():
    g = Grid(64, 2.0)
    psi = build_stream_tensor(lambda X, Y: np.zeros((2,) + np.shape(X)), GEOM, g, width=0.5)
    corr = build_corrector(psi, 10.0, 0.05, GEOM)
    X, Y = g.coords()
    rig = VectorField(g, np.stack([0.3 - 2 * Y, -0.1 + 2 * X]))
    tf = corrected_test_field(rig, (0.3, -0.1), 2.0, corr)
    assert np.allclose(tf.field.data, rig.data)


def test_scalings_need_four_points():
    n = [CorrectorNorms(nu, 1, nu**0.5, nu**0.5, nu**-0.5, nu) for nu in (1e-2, 5e-3, 2.5e-3)]
    with pytest.raises(ValueError, match="4"):
        corrector_scalings(n)
    n.append(CorrectorNorms(1.25e-3, 1, 1.25e-3**0.5, 1.25e-3**0.5, 1.25e-3**-0.5, 1.25e-3))
    ex = corrector_scalings(n)
    assert ex["h_norm"] == pytest.approx(0.5) and ex["d_sup"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_exponent([1.0], [1.0])


def test_norm_exponents_on_two_points():
    from katofsi.corrector import corrector_norms

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a, b = corrector_norms(_corr(256, nu=0.02)), corrector_norms(_corr(512, nu=0.01))
    assert fit_exponent([0.02, 0.01], [a.h_norm, b.h_norm]) == pytest.approx(0.5, abs=0.1)
    assert fit_exponent([0.02, 0.01], [a.sup, b.sup]) == pytest.approx(0.0, abs=0.1)
