"""Closed hypersurfaces, g0-outer normals, and quadrature of 1-forms.

Every surface is described by a chart embedding of the parameter box
``(th_1, ..., th_{n-2}, phi)`` in ``(0, pi)^{n-2} x [0, 2 pi)``.  The polar
angles use Gauss-Legendre nodes in ``cos(th)`` and the azimuth a periodic
trapezoid rule.  Tangents come from jets of the embedding, so normals and area
elements are exact for any smooth embedding.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import roots_legendre

from . import jets
from .errors import BadSchedule, DegenerateSurface, QuadratureFailure
from .expr import parse
from .tensorcalc import inverse

SEAM_TOL = 1e-10


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre order per polar angle and trapezoid count in the azimuth.

    ``theta_order`` is per polar axis, so the node count grows like
    ``theta_order**(n-2) * phi_count`` with the dimension.
    """

    theta_order: int = 24
    phi_count: int = 48
    estimate_error: bool = True

    def __post_init__(self):
        if self.theta_order < 2 or self.phi_count < 3:
            raise ValueError("quadrature orders too small")

    def doubled(self):
        return replace(self, theta_order=2 * self.theta_order, phi_count=2 * self.phi_count)

    def node_count(self, n):
        return self.theta_order ** (n - 2) * self.phi_count


@dataclass(frozen=True, eq=False)
class ClosedSurface:
    """A closed hypersurface given by a chart embedding of the angle box."""

    kind: str  # coord_sphere | geodesic_sphere | parametrized
    n: int
    radius: Optional[float] = None
    embedding: Optional[Callable] = field(default=None, repr=False)  # angle jets (n-1, ...) -> chart jets
    label: str = ""

    def embed(self, A):
        if self.kind == "coord_sphere":
            return _cartesian_sphere(A, self.radius, self.n)
        if self.kind == "geodesic_sphere":
            rad = jets.constant(A.space, np.full(A.shape[1:], float(self.radius)))
            return jets.jstack([rad] + [A[k] for k in range(self.n - 1)])
        return self.embedding(A)


def _unit_direction(A, n):
    out = []
    acc = None  # product of the sines so far
    for j in range(n - 1):
        c, s = jets.cos(A[j]), jets.sin(A[j])
        out.append(c if acc is None else acc * c)
        acc = s if acc is None else acc * s
    out.append(acc)
    return out


def _cartesian_sphere(A, radius, n):
    return jets.jstack([c * float(radius) for c in _unit_direction(A, n)])


def coord_sphere(background, radius):
    if background.kind == "flat":
        return ClosedSurface("coord_sphere", background.n, float(radius), label=f"S(r={radius:g})")
    return ClosedSurface("geodesic_sphere", background.n, float(radius), label=f"S(r={radius:g})")


def geodesic_sphere(background, radius):
    """Distance spheres; for flat space these are the coordinate spheres about 0."""
    return coord_sphere(background, radius)


def parametrized_surface(components, n=3, params=None, label="surface", check=True):
    """Closed surface in a Cartesian chart from expressions in x1 = th, x2 = phi."""
    if n != 3:
        raise ValueError("parametrized surfaces are supported for n = 3 only")
    exprs = [parse(str(c), 2, params) for c in components]
    if len(exprs) != 3:
        raise ValueError("need three embedding components")

    def emb(A):
        return jets.jstack([e.evaluate(A) for e in exprs])

    surf = ClosedSurface("parametrized", 3, None, emb, label)
    if check:
        check_seams(surf)
    return surf


def ellipsoid(a, b, c):
    return parametrized_surface(
        [f"{float(a)!r}*cos(x1)", f"{float(b)!r}*sin(x1)*cos(x2)", f"{float(c)!r}*sin(x1)*sin(x2)"],
        label=f"ellipsoid({a:g},{b:g},{c:g})",
    )


def check_seams(surface, samples=17):
    """Periodicity in phi and pole consistency of a parametrized embedding."""
    th = np.linspace(0.0, math.pi, samples)
    ph = np.linspace(0.0, 2 * math.pi, samples)

    def ev(t, p):
        A = jets.seed(np.stack([t, p], axis=-1), 0)
        return surface.embed(A).value

    seam = np.max(np.abs(ev(th, np.zeros_like(th)) - ev(th, np.full_like(th, 2 * math.pi))))
    north = ev(np.zeros_like(ph), ph)
    south = ev(np.full_like(ph, math.pi), ph)
    pole = max(np.max(np.ptp(north, axis=1)), np.max(np.ptp(south, axis=1)))
    if seam > SEAM_TOL or pole > SEAM_TOL:
        raise DegenerateSurface(f"surface is not closed: seam gap {seam:.3g}, pole spread {pole:.3g}")
    return max(seam, pole)


# --- nodes ---------------------------------------------------------------------


@lru_cache(maxsize=64)
def _angle_nodes(n, theta_order, phi_count):
    t, w = roots_legendre(theta_order)
    axes, waxes = [], []
    for k in range(n - 2):
        # area element carries sin(th_k)^p; odd p: GL in cos(th) (integrand / sin is
        # polynomial in cos for round spheres), even p: GL in th itself
        p = n - 2 - k
        if p % 2:
            th = np.arccos(t[::-1])
            wt = w[::-1] / np.sin(th)
        else:
            th = 0.5 * math.pi * (t + 1.0)
            wt = 0.5 * math.pi * w
        axes.append(th)
        waxes.append(wt)
    axes.append(2 * math.pi * np.arange(phi_count) / phi_count)
    waxes.append(np.full(phi_count, 2 * math.pi / phi_count))
    grids = np.meshgrid(*axes, indexing="ij")
    wgrids = np.meshgrid(*waxes, indexing="ij")
    angles = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return angles, weights


@dataclass
class SurfaceNodes:
    points: np.ndarray  # (N, n) chart points
    nu: np.ndarray  # (n, N) unit outer normal covector
    dS: np.ndarray  # (N,) quadrature weight times area element
    ginv: np.ndarray  # (n, n, N) inverse background metric at the nodes


def normal_and_measure(surface, background, rule=QuadratureRule(), angles=None):
    """Nodes, g0-unit outer normals and weighted area elements."""
    n = background.n
    if angles is None:
        angles, weights = _angle_nodes(n, rule.theta_order, rule.phi_count)
    else:
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        weights = np.ones(len(angles))
    A = jets.seed(angles, 1)
    Xs = surface.embed(A)
    pts = np.moveaxis(Xs.value, 0, -1)
    background.check_domain(pts)
    T = Xs.grad().value  # T[a, i] = d x^i / d angle_a, shape (n-1, n, N)
    g = background.metric(jets.seed(pts, 0)).value  # (n, n, N)
    ginv = inverse(background.metric(jets.seed(pts, 0))).value
    h = np.einsum("ai...,ij...,bj...->ab...", T, g, T)
    deth = np.linalg.det(np.moveaxis(h, (0, 1), (-2, -1)))
    if np.any(deth <= 0):
        raise DegenerateSurface(f"{surface.label}: rank-deficient tangent map")
    # normal covector: cofactor expansion of the tangent frame
    N = np.empty((n,) + pts.shape[:1])
    for i in range(n):
        M = np.concatenate([np.eye(n)[i][None, :, None].repeat(len(pts), axis=2), T], axis=0)
        N[i] = np.linalg.det(np.moveaxis(M, 2, 0))
    norm2 = np.einsum("ij...,i...,j...->...", ginv, N, N)
    nu = N / np.sqrt(norm2)
    radial = _radial_vector(background, pts)
    if math.fsum(np.einsum("i...,i...->...", nu, radial) * weights) < 0:
        nu = -nu
    return SurfaceNodes(pts, nu, weights * np.sqrt(deth), ginv)


def _radial_vector(background, pts):
    if background.kind == "flat":
        return pts.T
    out = np.zeros(pts.T.shape)
    out[0] = 1.0
    return out


# --- integration -----------------------------------------------------------------


@dataclass
class SurfaceIntegral:
    value: float
    error: float
    abs_value: float  # integral of |omega|_0, the natural scale for relative checks
    nodes: int


def _flux(nodes, omega_vals):
    flux = np.einsum("ij...,i...,j...->...", nodes.ginv, omega_vals, nodes.nu)
    norm = np.sqrt(np.maximum(np.einsum("ij...,i...,j...->...", nodes.ginv, omega_vals, omega_vals), 0.0))
    return math.fsum(flux * nodes.dS), math.fsum(norm * nodes.dS)


def _omega_values(omega, points):
    if hasattr(omega, "values"):
        return omega.values(points)
    return np.asarray(omega(points), dtype=float)


def integrate_oneform(surface, background, omega, rule=QuadratureRule(), qtol=None):
    """Flux of the covector field ``omega`` (TensorField or ``points -> (n, N)``)."""
    nodes = normal_and_measure(surface, background, rule)
    val, absval = _flux(nodes, _omega_values(omega, nodes.points))
    if not math.isfinite(val):
        raise QuadratureFailure(f"{surface.label}: non-finite integral")
    err = 0.0
    count = len(nodes.dS)
    if rule.estimate_error:
        fine = normal_and_measure(surface, background, rule.doubled())
        val2, absval = _flux(fine, _omega_values(omega, fine.points))
        err = abs(val2 - val)
        val = val2
        count += len(fine.dS)
    if qtol is not None and err > qtol * max(absval, 1e-300):
        raise QuadratureFailure(f"{surface.label}: quadrature error {err:.3g} exceeds {qtol:g} x {absval:.3g}")
    return SurfaceIntegral(val, err, absval, count)


def surface_area(surface, background, rule=QuadratureRule()):
    return math.fsum(normal_and_measure(surface, background, rule).dS)


def radius_schedule(background, radii, rule=QuadratureRule()):
    radii = [float(r) for r in radii]
    if not radii:
        raise BadSchedule("empty radius schedule")
    for a, b in zip(radii, radii[1:]):
        if not b > a:
            raise BadSchedule(f"radii must be strictly increasing ({a:g} then {b:g})")
    if radii[0] < background.r_min or not all(math.isfinite(r) for r in radii):
        raise BadSchedule(f"radius {radii[0]:g} below r_min = {background.r_min:g}")
    return [coord_sphere(background, r) for r in radii]


def annulus_integral(background, density, r1, r2, rule=QuadratureRule(), radial_order=24):
    """Integral of a scalar density over r1 < r < r2 (spheres are equidistant: dV = dr dS)."""
    t, w = roots_legendre(radial_order)
    rho = 0.5 * (r2 - r1) * t + 0.5 * (r2 + r1)
    wr = 0.5 * (r2 - r1) * w
    terms = []
    for r, wk in zip(rho, wr):
        nodes = normal_and_measure(coord_sphere(background, r), background, rule)
        vals = np.asarray(_omega_values(density, nodes.points), dtype=float)
        terms.append(wk * math.fsum(vals * nodes.dS))
    return math.fsum(terms)


def map_ordered(fn, items, workers=None):
    """Apply ``fn`` to ``items`` on a thread pool, preserving order."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
