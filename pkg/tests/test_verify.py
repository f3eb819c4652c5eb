import math

import numpy as np
import pytest

from asympcharge import backgrounds as B
from asympcharge import verify as Vf
from asympcharge.catalog import decaying_zeta, schwarzschild
from asympcharge.charge import Perturbation
from asympcharge.errors import NotAnIsometry, WrongBackground
from asympcharge.fields import scalar_field, vector_field
from asympcharge.surface import QuadratureRule, coord_sphere, ellipsoid
from asympcharge.tensorcalc import Geometry, cov_deriv
from asympcharge import jets


def test_v_flat_examples():
    V, res = Vf.v_flat(vector_field(["x2^2", "0", "0"], 3), [1.0, 1.0, 0.0])
    assert V[0, 1] == -2.0 and V[1, 0] == 2.0 and res < 1e-10
    V, res = Vf.v_flat(vector_field(["2*x1*x2", "x1^2+x3", "x2"], 3), [0.3, -1.2, 2.0])  # gradient of x1^2 x2 + x2 x3
    assert np.max(np.abs(V)) < 1e-14 and res < 1e-12
    # rotation: d_i zeta_j - d_j zeta_i is constant, with V_12 = d_1 zeta_2 - d_2 zeta_1 = 2
    for p in ([5.0, 1.0, -3.0], [0.1, 0.2, 0.3]):
        V, res = Vf.v_flat(vector_field(["-x2", "x1", "0"], 3), p)
        np.testing.assert_array_equal(V, [[0, 2, 0], [-2, 0, 0], [0, 0, 0]])
        assert res == 0.0


def test_v_flat_needs_flat_space():
    with pytest.raises(WrongBackground):
        Vf.check_v_flat(B.hyperbolic(3), vector_field(["0", "0", "1"], 3), [[1.0, 1.0, 1.0]])


def test_kid_detects_non_members():
    bg = B.flat(3)
    rep = Vf.check_kid(bg, "scal", B.StaticPotential(scalar_field("x1^2", 3), None, "x1^2"), count=100)
    assert not rep.passed
    # adjoint of x1^2 is diag(0, -2, -2)
    assert rep.residuals[0] == pytest.approx(2 * math.sqrt(2), rel=1e-12)
    assert Vf.check_kid(B.hyperbolic(3), "scal", B.kernel_basis(B.hyperbolic(3))[1], count=100).passed


@pytest.mark.parametrize("kind", ["flat", "hyperbolic"])
def test_corpus_fields_are_not_killing_and_not_gradients(kind):
    bg = B.flat(3) if kind == "flat" else B.hyperbolic(3)
    pts = bg.sample_points(np.random.default_rng(0), 50, 1.0, 3.0)
    X = jets.seed(pts, 1)
    geo = Geometry(bg.metric(X))
    for name, z in Vf.zeta_corpus(bg)[:5]:
        dz = cov_deriv(geo.lower_index(z(X)), geo.gamma).value  # nabla_i zeta_j
        assert np.max(np.abs(dz + np.swapaxes(dz, 0, 1))) > 1e-3, name
        assert np.max(np.abs(dz - np.swapaxes(dz, 0, 1))) > 1e-3, name


def test_cancellation_on_sphere_and_ellipsoid():
    bg = B.flat(3)
    z = vector_field(["x2^2", "0", "0"], 3)
    surfaces = [coord_sphere(bg, 2.0), ellipsoid(2, 1, 1)]
    rep = Vf.check_cancellation(bg, "scal", B.kernel_basis(bg)[0], z, surfaces=surfaces)
    assert rep.passed and max(rep.residuals) < 1e-8
    assert len(rep.details["fluxes"]) == 2


def test_cancellation_fails_off_the_kernel():
    bg = B.flat(3)
    # flux = -integral of <DPhi*V, L_zeta delta> = 12 * integral of x2^2 over the ball
    z = vector_field(["0", "x2^3", "0"], 3)
    rep = Vf.check_cancellation(bg, "scal", B.StaticPotential(scalar_field("x1^2", 3), None, "x1^2"), z)
    assert not rep.passed
    assert max(rep.residuals) > 1e-3


def test_cancellation_trivial_for_killing_fields():
    bg = B.flat(3)
    rep = Vf.check_cancellation(bg, "scal", B.kernel_basis(bg), vector_field(["-x2", "x1", "0"], 3))
    assert rep.passed


def test_identity_driver():
    for bg in (B.flat(3), B.hyperbolic(3)):
        assert Vf.check_identity(bg, "scal", count=50).passed


def test_invariance_with_zero_zeta_is_exact():
    bg = B.flat(3)
    rep = Vf.check_invariance(bg, "scal", schwarzschild(), vector_field(["0", "0", "0"], 3), B.kernel_basis(bg)[0], [50, 100, 200, 400])
    assert rep.passed and rep.details["m1"] == rep.details["m2"]


def test_invariance_center_of_mass():
    bg = B.flat(3)
    rep = Vf.check_invariance(bg, "scal", schwarzschild(center=(1, 0, 0)), decaying_zeta(1.2, parity="odd"), B.kernel_basis(bg)[1], [50, 100, 200, 400])
    assert rep.passed and rep.details["r2_decreasing"]
    assert rep.details["m2_adm"] == pytest.approx(1.0, abs=0.01)


def test_equivariance_identity_and_rotation():
    bg = B.flat(3)
    e = schwarzschild(center=(1, 0, 0))
    ident = Vf.check_equivariance(bg, "scal", e, B.FlatIsometry(np.eye(3)), radii=(50, 100, 200, 400))
    assert ident.passed and max(ident.residuals) == 0.0
    rot = Vf.check_equivariance(bg, "scal", e, B.FlatIsometry(B.rotation(3, 0.7)), radii=(50, 100, 200, 400))
    assert rot.passed
    # the x-charges rotate as a vector
    base, right = np.array(rot.details["base"]), np.array(rot.details["right"])
    np.testing.assert_allclose(right[1:], B.rotation(3, 0.7) @ base[1:], atol=1e-3 * abs(base[1]))
    with pytest.raises(NotAnIsometry):
        Vf.check_equivariance(bg, "scal", e, B.boost(3, 0.1))


def test_momentum_split():
    rep = Vf.check_momentum_split(B.flat(3, lam0=0.0), schwarzschild(), radii=(5.0, 20.0), count=50)
    assert rep.passed
    np.testing.assert_allclose(np.array(rep.details["fluxes"])[:, 0], 16 * math.pi * np.array([0.3, -0.2, 0.5]), rtol=1e-10)
    with pytest.raises(WrongBackground):
        Vf.check_momentum_split(B.hyperbolic(3, lam0=1.0), schwarzschild())


def test_quadratic_driver_small_batch():
    rep = Vf.check_quadratic(B.flat(3), "scal", draws=40)
    assert rep.passed and rep.details["slope"] > 0.9


def test_report_serialization():
    rep = Vf.check_kid(B.flat(3), "scal", B.kernel_basis(B.flat(3))[0], count=10)
    d = rep.to_dict()
    assert d["pass"] is True and d["claim"].startswith("kid") and d["tolerance"] == Vf.KID_TOL
    assert all(r < d["tolerance"] for r in d["residuals"])
