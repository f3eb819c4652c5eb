import math

import numpy as np
import pytest

from asympcharge import backgrounds as B
from asympcharge.errors import DegenerateSurface, QuadratureFailure
from asympcharge.surface import (
    QuadratureRule,
    annulus_integral,
    check_seams,
    coord_sphere,
    ellipsoid,
    integrate_oneform,
    map_ordered,
    normal_and_measure,
    parametrized_surface,
    radius_schedule,
    surface_area,
)


@pytest.mark.parametrize("n, unit", [(3, 4 * math.pi), (4, 2 * math.pi**2), (5, 8 * math.pi**2 / 3)])
def test_sphere_areas(n, unit):
    r = 2.5
    assert surface_area(coord_sphere(B.flat(n), r), B.flat(n), QuadratureRule(12, 24)) == pytest.approx(unit * r ** (n - 1), rel=1e-13)


def test_geodesic_sphere_area_hyperbolic():
    bg = B.hyperbolic(3)
    assert surface_area(coord_sphere(bg, 2.0), bg) == pytest.approx(4 * math.pi * math.sinh(2.0) ** 2, rel=1e-13)


def test_prolate_spheroid_area():
    a, b = 2.0, 1.0
    ecc = math.sqrt(1 - b * b / (a * a))
    exact = 2 * math.pi * b * b * (1 + a / (b * ecc) * math.asin(ecc))
    assert surface_area(ellipsoid(a, b, b), B.flat(3), QuadratureRule(32, 64)) == pytest.approx(exact, rel=1e-10)


def _coulomb_oneform(points):
    p = np.asarray(points)
    r = np.linalg.norm(p, axis=1)
    return (p / r[:, None] ** 3).T


@pytest.mark.parametrize("surf", [coord_sphere(B.flat(3), 3.0), ellipsoid(2, 1, 1), ellipsoid(1, 3, 0.5)])
def test_gauss_law(surf):
    res = integrate_oneform(surf, B.flat(3), _coulomb_oneform, QuadratureRule(32, 64))
    assert res.value == pytest.approx(4 * math.pi, rel=1e-8)
    # the reported error is the base/doubled gap, an upper estimate for the doubled value
    assert res.error >= abs(res.value - 4 * math.pi)


def test_outward_normals():
    nodes = normal_and_measure(ellipsoid(2, 1, 1), B.flat(3), QuadratureRule(8, 16))
    assert np.all(np.einsum("in,ni->n", nodes.nu, nodes.points) > 0)
    bg = B.hyperbolic(3)
    nodes = normal_and_measure(coord_sphere(bg, 1.5), bg, QuadratureRule(8, 16))
    np.testing.assert_allclose(nodes.nu[0], 1.0)
    np.testing.assert_allclose(nodes.nu[1:], 0.0, atol=1e-15)


def test_open_surface_is_rejected():
    with pytest.raises(DegenerateSurface):
        parametrized_surface(["cos(x1)", "sin(x1)*cos(x2/2)", "sin(x1)*sin(x2/2)"])
    assert check_seams(ellipsoid(2, 1, 1)) < 1e-12


def test_quadrature_tolerance():
    rough = lambda p: np.stack([np.zeros(len(p))] * 2 + [np.sin(40 * np.asarray(p)[:, 2])])
    with pytest.raises(QuadratureFailure):
        integrate_oneform(coord_sphere(B.flat(3), 3.0), B.flat(3), rough, QuadratureRule(4, 8), qtol=1e-10)


def test_schedule_must_increase():
    from asympcharge.errors import BadSchedule

    with pytest.raises(BadSchedule):
        radius_schedule(B.flat(3), [10, 5, 20])


def test_annulus_volume():
    vol = annulus_integral(B.flat(3), lambda p: np.ones(len(p)), 1.0, 2.0)
    assert vol == pytest.approx(4 * math.pi / 3 * 7, rel=1e-12)


def test_map_ordered_is_order_preserving_and_deterministic():
    bg = B.flat(3)
    surfaces = [coord_sphere(bg, r) for r in (2.0, 3.0, 4.0, 5.0)]
    f = lambda s: integrate_oneform(s, bg, _coulomb_oneform, QuadratureRule(8, 16)).value
    serial = map_ordered(f, surfaces, workers=1)
    parallel = map_ordered(f, surfaces, workers=4)
    assert serial == parallel
