import numpy as np
import pytest

from asympcharge import backgrounds as B
from asympcharge import diffeo as D
from asympcharge.charge import Perturbation
from asympcharge.errors import CertificationFailed, IdentityViolation, WrongBackground
from asympcharge.fields import tensor_field, vector_field
from asympcharge.surface import QuadratureRule


def radial(eps=1.0):
    return vector_field([f"{eps}*x{i}" for i in (1, 2, 3)], 3)


def test_unit_radial_shift():
    z = vector_field([f"x{i}/r" for i in (1, 2, 3)], 3)
    np.testing.assert_allclose(D.DiffeoAtInfinity(z, B.flat(3)).apply([3.0, 4.0, 0.0]), [3.6, 4.8, 0.0], rtol=1e-15)


def test_doubling_pulls_delta_back_to_four_delta():
    psi = D.DiffeoAtInfinity(radial(), B.flat(3))
    np.testing.assert_allclose(D.pullback(psi, B.flat(3).metric).values(np.array([[1.0, 2.0, 3.0]]))[:, :, 0], 4 * np.eye(3))


@pytest.mark.parametrize("eps, ok, eig", [(0.1, True, 1.21), (1.0, True, 4.0), (1.5, False, 6.25)])
def test_quasi_isometry_certificate(eps, ok, eig):
    psi = D.DiffeoAtInfinity(radial(eps), B.flat(3))
    pts = np.random.default_rng(0).normal(size=(20, 3)) + 3
    cert = D.check_quasi_isometry(psi, pts, raise_on_fail=False)
    assert cert.certified is ok
    assert cert.max_eigenvalue == pytest.approx(eig, rel=1e-12)
    if not ok:
        with pytest.raises(CertificationFailed):
            D.check_quasi_isometry(psi, pts)


def test_functoriality_of_pullback():
    bg = B.flat(3)
    t = tensor_field([["1+x1^2", "x2", "0"], ["x2", "2", "x3*x1"], ["0", "x3*x1", "1+sin(x2)"]], 3, symmetric=True)
    f = lambda X: X + 0.1 * X * X
    g = lambda X: X * 0.9 + 0.05
    pts = np.random.default_rng(1).normal(size=(6, 3))
    both = B.pullback_by(lambda X: f(g(X)), t, 3)
    nested = B.pullback_by(g, B.pullback_by(f, t, 3), 3)
    np.testing.assert_allclose(both.values(pts), nested.values(pts), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("kind", ["flat", "hyperbolic"])
def test_first_order_consistency(kind):
    bg = B.flat(3) if kind == "flat" else B.hyperbolic(3)
    pts = bg.sample_points(np.random.default_rng(0), 20, 1, 3)
    z = bg.vector_from_ambient(["0.05*x2/(1+x1^2+x2^2+x3^2)", "0.03*x1*x3/(1+x1^2+x2^2+x3^2)^1.5", "0.02/(1+x1^2+x2^2+x3^2)"])
    L = D.lie_perturbation(z, bg).gdot.values(pts)
    errs = []
    for t in (1e-2, 1e-3):
        zt = z.scale(t)
        zt.vector = True
        d = (D.pullback(D.DiffeoAtInfinity(zt, bg), bg.metric).values(pts) - bg.metric.values(pts)) / t
        errs.append(np.max(np.abs(d - L)))
    assert np.log10(errs[0] / errs[1]) == pytest.approx(1.0, abs=0.05)


def test_zero_zeta_leaves_data_unchanged():
    bg = B.flat(3)
    e1 = Perturbation(tensor_field([["1/r", "0", "0"], ["0", "1/r", "0"], ["0", "0", "1/r"]], 3))
    psi = D.DiffeoAtInfinity(vector_field(["0", "0", "0"], 3), bg)
    pts = np.random.default_rng(2).normal(size=(5, 3)) * 4
    np.testing.assert_array_equal(D.pulled_perturbation(psi, e1).gdot.values(pts), e1.gdot.values(pts))


def test_flat_r1_formula_agrees_with_exact_remainder():
    bg = B.flat(3)
    z = vector_field([f"x{i}*(1+x1^2+x2^2+x3^2)^(-0.4)" for i in (1, 2, 3)], 3)
    e1 = Perturbation(tensor_field([["2/r", "0", "0"], ["0", "2/r", "0"], ["0", "0", "2/r"]], 3))
    psi = D.DiffeoAtInfinity(z, bg)
    u = np.random.default_rng(1).normal(size=(30, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    pts = 20 * u
    R = D.remainder_r1(psi, e1, pts)
    assert np.max(np.abs(R - D.remainder_r1_flat(psi, e1, pts))) < 1e-13 * max(1.0, np.max(np.abs(R)))
    with pytest.raises(WrongBackground):
        D.remainder_r1_flat(D.DiffeoAtInfinity(z, B.hyperbolic(3)), e1, pts)


def test_r1_decays_faster_than_linear_terms():
    """With tau = 0.8 the remainder is O(r^-1.6): quadratic in zeta and in (zeta, e1)."""
    bg = B.flat(3)
    z = vector_field([f"x{i}*(1+x1^2+x2^2+x3^2)^(-0.4)" for i in (1, 2, 3)], 3)
    e1 = Perturbation(tensor_field([["2/r", "0", "0"], ["0", "2/r", "0"], ["0", "0", "2/r"]], 3))
    psi = D.DiffeoAtInfinity(z, bg)
    u = np.random.default_rng(1).normal(size=(50, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rs = [20.0, 40.0, 80.0]
    sup = [np.max(np.linalg.norm(D.remainder_r1_flat(psi, e1, r * u), axis=(0, 1))) for r in rs]
    slope = np.polyfit(np.log(rs), np.log(sup), 1)[0]
    assert slope == pytest.approx(-1.6, abs=0.15)


def test_r2_identity_hyperbolic():
    bg = B.hyperbolic(3)
    pts = bg.sample_points(np.random.default_rng(0), 20, 1, 3)
    z = bg.vector_from_ambient(["0.05*x2/(1+x1^2+x2^2+x3^2)", "0.03*x1*x3/(1+x1^2+x2^2+x3^2)^1.5", "0.02/(1+x1^2+x2^2+x3^2)"])
    e1 = Perturbation(bg.tensor_from_ambient([["0.01/(1+x1^2+x2^2+x3^2)", "0", "0.002*x1"], ["0", "0.01", "0"], ["0.002*x1", "0", "0"]]))
    res = D.remainder_r2(D.DiffeoAtInfinity(z, bg), e1, B.kernel_basis(bg)[1], pts)
    assert res.identity_residual < 1e-12 * res.scale
    with pytest.raises(IdentityViolation):
        D.remainder_r2(D.DiffeoAtInfinity(z, bg), e1, B.kernel_basis(bg)[1], pts, tol=-1.0)


def test_background_norm_of_metric_along_geodesics():
    bg = B.hyperbolic(3)
    pts = bg.sample_points(np.random.default_rng(0), 10, 1, 3)
    z = bg.vector_from_ambient(["0.05*x2/(1+x1^2+x2^2+x3^2)", "0.03", "0.02"])
    sup = D.sup_norms_along_geodesic(bg, bg.metric, pts, z, 1)
    np.testing.assert_allclose(sup, np.sqrt(3), rtol=1e-10)


@pytest.mark.parametrize("kind", ["flat", "hyperbolic"])
@pytest.mark.parametrize("ell", [0, 1])
def test_measured_bound_constant_is_finite_and_stable(kind, ell):
    bg = B.flat(3) if kind == "flat" else B.hyperbolic(3)
    rep = D.measure_bound(bg, ell, np.random.default_rng(ell), draws=60)
    assert rep.finite and rep.stable
    assert 0 < rep.constant < 10


def test_decay_diagnostics():
    bg = B.flat(3)
    V = B.kernel_basis(bg)[0]
    fast_z = vector_field(["0.3*x2*x3*(1+x1^2+x2^2+x3^2)^(-2)", "0.3*x1^2*(1+x1^2+x2^2+x3^2)^(-2)", "0"], 3)
    fast_e = Perturbation(tensor_field([["2/r^2", "0", "0"], ["0", "2/r^2", "0"], ["0", "0", "2/r^2"]], 3))
    s = D.decay_diagnostics(D.DiffeoAtInfinity(fast_z, bg), fast_e, V, [10.0, 20.0, 40.0]).summary()
    assert s["zeta_bounded"] and s["zeta_term_decreasing"] and s["e_term_decreasing"] and s["r2_term_decreasing"]
    # zeta = O(r^-0.2) and e1 = O(1/r): the unweighted sufficient conditions fail
    slow_z = vector_field(["0.3*x2*x3*(1+x1^2+x2^2+x3^2)^(-1.1)", "0.3*x1^2*(1+x1^2+x2^2+x3^2)^(-1.1)", "0"], 3)
    slow_e = Perturbation(tensor_field([["2/r", "0", "0"], ["0", "2/r", "0"], ["0", "0", "2/r"]], 3))
    s = D.decay_diagnostics(D.DiffeoAtInfinity(slow_z, bg), slow_e, V, [10.0, 20.0, 40.0], with_r2=False).summary()
    assert not s["zeta_term_decreasing"]
    e_term = s["area_sup_V_e2"]
    assert e_term[-1] > 0.75 * e_term[0]  # levels off at |e1|^2 Area = const
