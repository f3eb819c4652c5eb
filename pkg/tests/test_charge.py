import math

import numpy as np
import pytest

from asympcharge import backgrounds as B
from asympcharge import verify as Vf
from asympcharge.catalog import schwarzschild
from asympcharge.charge import (
    ChargeReport,
    Perturbation,
    charge_integrand,
    extrapolate,
    fit_limit,
    identity_residual,
    quadratic_remainder,
    total_charge,
)
from asympcharge.errors import NonConvergent
from asympcharge.fields import constant_field, tensor_field
from asympcharge.surface import QuadratureRule


def test_schwarzschild_integrand_closed_form():
    # for g = phi^4 delta: U_j = d_i e_ij - d_j tr e = -2 d_j phi^4 = 4 m phi^3 x_j / r^3
    m = 1.0
    bg = B.flat(3)
    pts = np.random.default_rng(0).normal(size=(20, 3)) * 10
    U = charge_integrand("scal", bg, B.kernel_basis(bg)[0], schwarzschild(m), pts)
    r = np.linalg.norm(pts, axis=1)
    phi = 1 + m / (2 * r)
    np.testing.assert_allclose(U, (4 * m * phi**3 * pts.T / r**3), rtol=1e-13)


def test_adm_mass_of_schwarzschild():
    bg = B.flat(3)
    rep = total_charge("scal", bg, B.kernel_basis(bg)[0], schwarzschild(1.0), [50, 100, 200, 400], normalization="adm")
    assert rep.converged
    assert 0.999 <= rep.value <= 1.001
    assert rep.scale == pytest.approx(16 * math.pi)
    rows = rep.rows()
    assert len(rows) == 4 and rows[-1][3] == pytest.approx(rep.value)
    d = rep.to_dict()
    assert d["normalization"] == "adm" and d["extrapolated"] == pytest.approx(rep.value)


@pytest.mark.parametrize("m", [0.5, 2.0])
def test_mass_scales_linearly_at_leading_order(m):
    bg = B.flat(3)
    rep = total_charge("scal", bg, B.kernel_basis(bg)[0], schwarzschild(m), [100, 200, 400, 800], normalization="adm")
    assert rep.value == pytest.approx(m, rel=1e-3)


def test_fit_limit_recovers_power_law():
    r = np.array([10.0, 20.0, 40.0, 80.0, 160.0])
    a, p, res = fit_limit(r, 2.0 + 3.0 * r**-1.3)
    assert a == pytest.approx(2.0, rel=1e-8) and p == pytest.approx(1.3, rel=1e-6) and res < 1e-10
    a, q, res = fit_limit(r / 20, 1.0 - 0.5 * np.exp(-2.0 * r / 20), model="exp")
    assert a == pytest.approx(1.0, rel=1e-8) and q == pytest.approx(2.0, rel=1e-6)


def test_extrapolate_flags_divergent_sequences():
    r = [10.0, 20.0, 40.0, 80.0, 160.0]
    running, est, p, res, ok = extrapolate(r, [math.log(x) for x in r], "power")
    assert not ok
    running, est, p, res, ok = extrapolate(r, [1 + 1 / x for x in r], "power")
    assert ok and est == pytest.approx(1.0, rel=1e-8)
    assert math.isnan(running[0]) and math.isnan(running[1])


def test_strict_non_convergence():
    bg = B.flat(3)
    e = Perturbation(tensor_field([["log(r)/r", "0", "0"], ["0", "log(r)/r", "0"], ["0", "0", "log(r)/r"]], 3))
    rep = total_charge("scal", bg, B.kernel_basis(bg)[0], e, [10, 20, 40, 80])
    assert not rep.converged and math.isnan(rep.extrapolated) and math.isfinite(rep.estimate)
    with pytest.raises(NonConvergent) as info:
        total_charge("scal", bg, B.kernel_basis(bg)[0], e, [10, 20, 40, 80], strict=True)
    assert isinstance(info.value.report, ChargeReport)


@pytest.mark.parametrize("bg, kind", [(B.flat(3), "scal"), (B.hyperbolic(3), "scal"), (B.flat(3, lam0=0.5), "constraints"), (B.hyperbolic(3, lam0=1.0), "constraints")])
def test_integration_by_parts_identity(bg, kind):
    rng = np.random.default_rng(1)
    V, e = Vf.random_test_data(bg, kind, rng)
    pts = bg.sample_points(rng, 50, 1.0, 3.0)
    res, scale = identity_residual(kind, bg, V, e, pts)
    assert np.max(np.abs(res) / scale) < 1e-12


def test_reduced_integrand_matches_full():
    for bg in (B.hyperbolic(3, lam0=1.0), B.flat(3, lam0=0.0), B.flat(3, lam0=0.7)):
        rng = np.random.default_rng(2)
        V, e = Vf.random_test_data(bg, "constraints", rng)
        pts = bg.sample_points(rng, 20, 1.0, 3.0)
        full = charge_integrand("constraints", bg, V, e, pts)
        red = charge_integrand("constraints", bg, V, e, pts, form="reduced")
        np.testing.assert_allclose(red, full, atol=1e-13 * np.max(np.abs(full)))


def test_constraints_with_lapse_only_reduce_to_scalar_integrand():
    bg = B.flat(3, lam0=0.0)
    pts = bg.sample_points(np.random.default_rng(3), 30, 1.0, 3.0)
    e = schwarzschild(1.0)
    one = B.StaticPotential(constant_field(1.0), None, "1")
    np.testing.assert_array_equal(charge_integrand("constraints", bg, one, e, pts), charge_integrand("scal", bg, one, e, pts))


def test_quadratic_remainder_is_quadratic():
    bg = B.flat(3)
    pts = bg.sample_points(np.random.default_rng(4), 10, 1.0, 2.0)
    one = B.StaticPotential(constant_field(1.0), None, "1")
    e = Perturbation(tensor_field([["0.1*sin(x1)", "0.05*x2", "0"], ["0.05*x2", "0.1*x3^2", "0"], ["0", "0", "0.1*cos(x2)"]], 3, symmetric=True))
    q = [quadratic_remainder("scal", bg, one, e.scale(t), pts) / t**2 for t in (1e-1, 1e-2, 1e-3)]
    d1, d2 = np.abs(q[0] - q[1]), np.abs(q[1] - q[2])
    assert np.median(np.log10(d1 / d2)) == pytest.approx(1.0, abs=0.1)


def test_worker_count_does_not_change_results():
    bg = B.flat(3)
    args = ("scal", bg, B.kernel_basis(bg)[1], schwarzschild(1.0, center=(1, 0, 0)), [50, 100, 200, 400], QuadratureRule(12, 24))
    a = total_charge(*args, workers=1)
    b = total_charge(*args, workers=4)
    assert a.integrals == b.integrals and a.extrapolated == b.extrapolated
