"""Diffeomorphisms asymptotic to the identity, Psi = exp o zeta, and their remainders.

``R1 = (Psi* - Id - L_zeta) h0 + (Psi* - Id) e1`` is evaluated exactly from
pullbacks of the fields involved; ``R2 = U(V, R1)``.  The measured-constant
checks compare ``|nabla^l R1|`` against

    |zeta|_{l+1} (|zeta|_{l+1} ||h0||_{l+2} + ||e1||_{l+1})

where ``|k|_l = |k| + ... + |nabla^l k|`` pointwise and ``||k||_l`` is the
sup of ``|k|_l`` along the geodesic ``t -> exp_x(t zeta(x))``, sampled at
``m + 1`` equally spaced times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import roots_legendre

from . import jets
from .backgrounds import exp_jets, exp_map, pullback_by
from .charge import Perturbation, charge_integrand
from .errors import CertificationFailed, ChartDomainViolation, IdentityViolation, WrongBackground
from .fields import TensorField, zero_field
from .randomfields import batched_tensor_field, batched_vector_field, random_coefficients
from .surface import QuadratureRule, coord_sphere, normal_and_measure
from .tensorcalc import Geometry, cov_deriv, lie_field, norm_values

EIG_LO, EIG_HI = 0.25, 4.0


# --- the map ------------------------------------------------------------------------


@dataclass
class QuasiIsometryCertificate:
    certified: bool
    min_eigenvalue: float
    max_eigenvalue: float
    worst_point: np.ndarray
    curvature_term: float  # sup kappa0 |zeta|^2
    grad_zeta: float  # sup |nabla zeta|
    samples: int

    def to_dict(self):
        return {
            "certified": self.certified,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "worst_point": [float(v) for v in self.worst_point],
            "curvature_term": self.curvature_term,
            "grad_zeta": self.grad_zeta,
            "samples": self.samples,
        }


class DiffeoAtInfinity:
    """``Psi(x) = exp_x(zeta(x))`` on the region ``r >= r_min``."""

    def __init__(self, zeta, background, r_min=None, label=""):
        if not (zeta.vector and zeta.n == background.n):
            raise ValueError("zeta must be a vector field of the background dimension")
        self.zeta = zeta
        self.background = background
        self.r_min = background.r_min if r_min is None else float(r_min)
        self.label = label or zeta.label
        self.certificate: Optional[QuasiIsometryCertificate] = None

    def map(self, X):
        """Jets of Psi at coordinate jets ``X``."""
        return exp_jets(self.background, X, self.zeta(X))

    def _guard(self, points):
        r = self.background.radius(points)
        if np.any(r < self.r_min):
            raise ChartDomainViolation(f"point with r = {float(np.min(r)):.3g} below r_min = {self.r_min:g}")

    def apply(self, points):
        pts = np.asarray(points, dtype=float)
        self._guard(pts)
        return exp_map(self.background, pts, np.moveaxis(self.zeta.values(pts), 0, -1))

    def certify(self, points, raise_on_fail=True):
        self.certificate = check_quasi_isometry(self, points, raise_on_fail=raise_on_fail)
        return self.certificate


def pullback(psi, t):
    """``Psi* t`` for a covariant field ``t`` (a scalar field is simply composed)."""
    return pullback_by(psi.map, t, psi.background.n, label=f"Psi*({t.label})")


def pulled_perturbation(psi, e1):
    """``e2 = Psi*(h0 + e1) - h0``, summed as ``(Psi* h0 - h0) + Psi* e1``.

    The grouping avoids subtracting h0 from h0 + e1 and is exact for Psi = id.
    """
    bg = psi.background
    g0 = bg.metric
    gd = (pullback(psi, g0) - g0) + pullback(psi, e1.gdot)
    kd = None
    if bg.k0 is not None or e1.kdot is not None:
        parts = []
        if bg.k0 is not None:
            parts.append(pullback(psi, bg.k0) - bg.k0)
        if e1.kdot is not None:
            parts.append(pullback(psi, e1.kdot))
        kd = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return Perturbation(gd, kd, f"pullback[{psi.label}]({e1.provenance})")


def lie_perturbation(zeta, background):
    """``L_zeta h0`` as a perturbation."""
    gd = lie_field(zeta, background.metric)
    kd = None if background.k0 is None else lie_field(zeta, background.k0)
    return Perturbation(gd, kd, f"L[{zeta.label}]h0")


def remainder_field(psi, e1):
    """R1 as a perturbation-valued field, split as (Psi* h0 - h0 - L h0) + (Psi* e1 - e1)."""
    bg = psi.background
    z = psi.zeta
    g0 = bg.metric
    rg = (pullback(psi, g0) - g0 - lie_field(z, g0)) + (pullback(psi, e1.gdot) - e1.gdot)
    rk = None
    if bg.k0 is not None or e1.kdot is not None:
        parts = []
        if bg.k0 is not None:
            parts.append(pullback(psi, bg.k0) - bg.k0 - lie_field(z, bg.k0))
        if e1.kdot is not None:
            parts.append(pullback(psi, e1.kdot) - e1.kdot)
        rk = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return Perturbation(rg, rk, f"R1[{psi.label}]")


def remainder_r1(psi, e1, points):
    """R1 values at the points: the g-part, or the pair (g-part, k-part)."""
    pts = np.asarray(points, dtype=float)
    psi._guard(pts)
    R = remainder_field(psi, e1)
    if R.kdot is None:
        return R.gdot.values(pts)
    return R.gdot.values(pts), R.kdot.values(pts)


def _pullback_increment_flat(zeta_vals, dzeta, e, pts, nodes=24):
    """(Psi* - Id) e for Psi = x + zeta, by the coordinate formula with the t-integral done by Gauss-Legendre."""
    t, w = roots_legendre(nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    zT = zeta_vals.T  # (N, n)
    integral = 0.0
    for tk, wk in zip(t, w):
        de = e.at(pts + tk * zT, 1).grad().value  # [c, i, j, N]
        integral = integral + wk * de
    out = np.einsum("cN,cijN->ijN", zeta_vals, integral)
    e_shift = e.values(pts + zT)
    out = out + np.einsum("ajN,iaN->ijN", e_shift, dzeta)
    out = out + np.einsum("ibN,jbN->ijN", e_shift, dzeta)
    out = out + np.einsum("abN,iaN,jbN->ijN", e_shift, dzeta, dzeta)
    return out


def remainder_r1_flat(psi, e1, points, nodes=24):
    """R1 for a flat Cartesian background from the explicit coordinate expression.

    The h0 part is ``sum_k d_i zeta^k d_j zeta^k``; the e1 part integrates the
    first-order variation along the segment ``x + t zeta(x)``.
    """
    if psi.background.kind != "flat":
        raise WrongBackground("the coordinate formula for R1 needs the flat background")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    psi._guard(pts)
    Z = psi.zeta.at(pts, 1)
    zv = Z.value
    dz = Z.grad().value  # dz[i, a, N] = d_i zeta^a
    rg = np.einsum("ikN,jkN->ijN", dz, dz) + _pullback_increment_flat(zv, dz, e1.gdot, pts, nodes)
    k0 = psi.background.k0
    if k0 is None and e1.kdot is None:
        return rg
    rk = np.zeros_like(rg)
    if k0 is not None:
        # k0 = lam0 delta: (Psi* - Id - L) k0 = lam0 d zeta d zeta
        rk = rk + psi.background.lam * np.einsum("ikN,jkN->ijN", dz, dz)
    if e1.kdot is not None:
        rk = rk + _pullback_increment_flat(zv, dz, e1.kdot, pts, nodes)
    return rg, rk


@dataclass
class R2Result:
    value: np.ndarray  # U(V, R1), shape (n, N)
    identity_residual: float  # max |U(V,e2) - U(V,e1) - U(V,L h0) - R2|
    scale: float  # max of the absolute terms in that identity


def remainder_r2(psi, e1, V, points, kind="scal", tol=1e-9):
    """``R2 = U(V, R1)``, checking ``U(V,e2) - U(V,e1) = U(V, L_zeta h0) + R2`` pointwise."""
    bg = psi.background
    pts = np.asarray(points, dtype=float)
    psi._guard(pts)
    r2 = charge_integrand(kind, bg, V, remainder_field(psi, e1), pts)
    u2 = charge_integrand(kind, bg, V, pulled_perturbation(psi, e1), pts)
    u1 = charge_integrand(kind, bg, V, e1, pts)
    ul = charge_integrand(kind, bg, V, lie_perturbation(psi.zeta, bg), pts)
    res = float(np.max(np.abs(u2 - u1 - ul - r2))) if r2.size else 0.0
    scale = float(max(np.max(np.abs(u2)), np.max(np.abs(u1)), np.max(np.abs(ul)), np.max(np.abs(r2)), 1e-300))
    if res > tol * scale:
        raise IdentityViolation(f"U(V,e2) - U(V,e1) - U(V,L h0) - R2 = {res:.3g} exceeds {tol:g} x {scale:.3g}")
    return R2Result(r2, res, scale)


# --- pointwise and geodesic norms -----------------------------------------------------


def _as_list(t):
    if t is None:
        return []
    if isinstance(t, (list, tuple)):
        return [x for x in t if x is not None]
    return [t]


def pointwise_norms(background, t, points, ell):
    """``|t|_ell = sum_{j <= ell} |nabla^j t|`` at the points; ``t`` may be a tuple (norms add)."""
    if ell not in (0, 1, 2, 3):
        raise ValueError("ell must be between 0 and 3")
    pts = np.asarray(points, dtype=float)
    X = jets.seed(pts, ell)
    geo = Geometry(background.metric(X))
    g = geo.g.value
    ginv = geo.ginv.value
    total = np.zeros(pts.shape[:-1])
    for f in _as_list(t):
        T = f(X)
        var = "v" if f.vector else "c" * f.rank
        for j in range(ell + 1):
            total = total + norm_values(T.value, g, ginv, var or None)
            if j < ell:
                T = cov_deriv(T, geo.gamma.truncate(T.order - 1), var or None)
                var = "c" + var
    return total


def geodesic_samples(background, points, zeta_vals, m=16):
    """Points ``exp_x(s zeta(x))`` for ``s = 0, 1/m, ..., 1``; shape ``(N, m+1, n)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = np.atleast_2d(np.asarray(zeta_vals, dtype=float))
    out = [pts]
    for s in np.linspace(0.0, 1.0, m + 1)[1:]:
        out.append(exp_map(background, pts, s * z))
    return np.stack(out, axis=1)


def sup_norms_along_geodesic(background, t, points, zeta, ell, m=16):
    """``||t||_ell`` at each point: sup of ``|t|_ell`` over ``t -> exp_x(t zeta(x))``."""
    if ell not in (0, 1, 2):
        raise ValueError("ell must be 0, 1 or 2")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    zv = zeta if isinstance(zeta, np.ndarray) else np.moveaxis(zeta.values(pts), 0, -1)
    samples = geodesic_samples(background, pts, zv, m)
    return np.max(pointwise_norms(background, t, samples, ell), axis=1)


# --- quasi-isometry certificate -----------------------------------------------------------


def _sectional_bound(background):
    # constant curvature 0 or -1
    return 0.0 if background.kind == "flat" else 1.0


def check_quasi_isometry(psi, points, raise_on_fail=True, rtol=1e-12):
    """Generalized eigenvalues of Psi* g0 against g0 at the sample points; certified iff in [1/4, 4]."""
    bg = psi.background
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    psi._guard(pts)
    A = np.moveaxis(pullback(psi, bg.metric).values(pts), (0, 1), (-2, -1))
    G = np.moveaxis(bg.metric.values(pts), (0, 1), (-2, -1))
    Lc = np.linalg.cholesky(G)
    Li = np.linalg.inv(Lc)
    M = Li @ A @ np.swapaxes(Li, -1, -2)
    ev = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))
    lo, hi = ev[:, 0], ev[:, -1]
    bad = np.maximum(EIG_LO * (1 - rtol) - lo, hi - EIG_HI * (1 + rtol))
    worst = int(np.argmax(np.maximum(EIG_LO / np.maximum(lo, 1e-300), hi / EIG_HI)))
    zn = pointwise_norms(bg, psi.zeta, pts, 0)
    X = jets.seed(pts, 1)
    geo = Geometry(bg.metric(X))
    dz = cov_deriv(psi.zeta(X), geo.gamma, "v").value
    gz = norm_values(dz, geo.g.value, geo.ginv.value, "cv")
    cert = QuasiIsometryCertificate(
        certified=bool(np.all(bad <= 0.0)),
        min_eigenvalue=float(np.min(lo)),
        max_eigenvalue=float(np.max(hi)),
        worst_point=pts[worst].copy(),
        curvature_term=float(np.max(_sectional_bound(bg) * zn**2)),
        grad_zeta=float(np.max(gz)),
        samples=len(pts),
    )
    if not cert.certified and raise_on_fail:
        raise CertificationFailed(
            f"Psi*g0 eigenvalues in [{cert.min_eigenvalue:.4g}, {cert.max_eigenvalue:.4g}], outside [1/4, 4]; "
            f"worst point {np.array2string(cert.worst_point, precision=4)}",
            cert,
        )
    return cert


@dataclass
class BoundDraws:
    """Random (zeta, e1, x) triples, one per batch row."""

    background: object
    zeta: TensorField
    e1: Perturbation
    points: np.ndarray
    zeta_amplitude: np.ndarray
    e_amplitude: np.ndarray


def random_draws(background, rng, count=100, r_lo=0.5, r_hi=2.0, zeta_amp=(1e-3, 3e-2), e_amp=(1e-3, 1e-1)):
    """Log-uniform amplitudes, quadratic ambient polynomials, isotropic base points."""
    n = background.n
    za = np.exp(rng.uniform(math.log(zeta_amp[0]), math.log(zeta_amp[1]), size=count))
    ea = np.exp(rng.uniform(math.log(e_amp[0]), math.log(e_amp[1]), size=count))
    cz = random_coefficients(rng, (n,), background, r_hi, za)
    ce = random_coefficients(rng, (n, n), background, r_hi, ea)
    zeta = batched_vector_field(background, cz)
    e1 = Perturbation(batched_tensor_field(background, ce), None, "random")
    pts = background.sample_points(rng, count, r_lo, r_hi)
    return BoundDraws(background, zeta, e1, pts, za, ea)


def _h0_fields(background):
    return (background.metric, background.k0)


@dataclass
class BoundReport:
    ell: int
    constant: float  # measured C = max ratio
    ratios: np.ndarray
    half_constants: tuple
    stable: bool  # the two half-batch constants agree within a factor 2
    worst: list  # (index, point, ratio) of the largest ratios
    bound_min: float  # smallest bound expression (must be positive)
    finite: bool
    background: str = ""
    draws: int = 0

    def to_dict(self):
        return {
            "ell": self.ell,
            "constant": self.constant,
            "half_constants": list(self.half_constants),
            "stable": self.stable,
            "bound_min": self.bound_min,
            "finite": self.finite,
            "background": self.background,
            "draws": self.draws,
            "worst": [{"index": i, "point": [float(v) for v in p], "ratio": r} for i, p, r in self.worst],
        }


def _r1_derivative_norm(background, R, pts, ell):
    X = jets.seed(pts, ell)
    geo = Geometry(background.metric(X))
    total = np.zeros(pts.shape[:-1])
    for f in _as_list((R.gdot, R.kdot)):
        T = f(X)
        var = "cc"
        for _ in range(ell):
            T = cov_deriv(T, geo.gamma.truncate(T.order - 1), var)
            var = "c" + var
        total = total + norm_values(T.value, geo.g.value, geo.ginv.value, var)
    return total


def measure_bound(background, ell, rng=None, draws=100, m=16, top=5, **kw):
    """Empirical constant in ``|nabla^l R1| <= C |zeta|_{l+1}(|zeta|_{l+1} ||h0||_{l+2} + ||e1||_{l+1})``."""
    if ell not in (0, 1):
        raise ValueError("bound checks are provided for ell = 0 and 1")
    rng = np.random.default_rng(0) if rng is None else rng
    d = random_draws(background, rng, draws, **kw)
    pts = d.points
    psi = DiffeoAtInfinity(d.zeta, background, r_min=0.0, label="random")
    num = _r1_derivative_norm(background, remainder_field(psi, d.e1), pts, ell)
    zeta_l = pointwise_norms(background, d.zeta, pts, ell + 1)
    zv = np.moveaxis(d.zeta.values(pts), 0, -1)
    samples = geodesic_samples(background, pts, zv, m)  # (D, m+1, n)
    h0_sup = np.max(pointwise_norms(background, _h0_fields(background), samples, ell + 2 if ell + 2 <= 3 else 3), axis=1)
    e_sup = np.max(pointwise_norms(background, d.e1.gdot, samples, ell + 1), axis=1)
    bound = zeta_l * (zeta_l * h0_sup + e_sup)
    ratio = num / bound
    half = draws // 2
    c1, c2 = float(np.max(ratio[:half])), float(np.max(ratio[half:]))
    order = np.argsort(ratio)[::-1][:top]
    return BoundReport(
        ell=ell,
        constant=float(np.max(ratio)),
        ratios=ratio,
        half_constants=(c1, c2),
        stable=bool(max(c1, c2) <= 2.0 * min(c1, c2)),
        worst=[(int(i), pts[i], float(ratio[i])) for i in order],
        bound_min=float(np.min(bound)),
        finite=bool(np.all(np.isfinite(ratio)) and np.min(bound) > 0),
        background=f"{background.kind}(n={background.n})",
        draws=draws,
    )


# --- decay diagnostics on surfaces --------------------------------------------------------


@dataclass
class DecayDiagnostics:
    radii: list
    zeta_bound: list  # sup_S |zeta|_1
    zeta_term: list  # Area * sup_S |V|_1 |zeta|_2^2
    e_term: list  # Area * sup_S |V|_1 ||e1||_2^2
    r2_term: list = field(default_factory=list)  # Area * sup_S |R2| (theorem assumption)

    @staticmethod
    def _decreasing(seq):
        return bool(len(seq) >= 2 and all(b < a for a, b in zip(seq, seq[1:])))

    def summary(self):
        return {
            "radii": self.radii,
            "sup_zeta_1": self.zeta_bound,
            "area_sup_V_zeta2": self.zeta_term,
            "area_sup_V_e2": self.e_term,
            "area_sup_R2": self.r2_term,
            "zeta_bounded": bool(np.all(np.isfinite(self.zeta_bound))),
            "zeta_term_decreasing": self._decreasing(self.zeta_term),
            "e_term_decreasing": self._decreasing(self.e_term),
            "r2_term_decreasing": self._decreasing(self.r2_term) if self.r2_term else None,
        }


def _potential_norm(background, V, pts, ell):
    parts = [V.f] if V.f is not None else []
    if V.alpha is not None:
        parts.append(V.alpha)
    return pointwise_norms(background, tuple(parts), pts, ell)


def r2_area_sup(psi, e1, V, radius, rule=QuadratureRule(12, 24, False), kind="scal"):
    """``Area(S_r) * sup_{S_r} |R2|`` on the coordinate sphere of the given radius."""
    bg = psi.background
    nodes = normal_and_measure(coord_sphere(bg, radius), bg, rule)
    r2 = charge_integrand(kind, bg, V, remainder_field(psi, e1), nodes.points)
    nrm = np.sqrt(np.maximum(np.einsum("ij...,i...,j...->...", nodes.ginv, r2, r2), 0.0))
    return math.fsum(nodes.dS) * float(np.max(nrm))


def decay_diagnostics(psi, e1, V, radii, rule=QuadratureRule(8, 16, False), m=8, kind="scal", with_r2=True):
    """The three displayed sufficient conditions, evaluated on the spheres of the schedule."""
    bg = psi.background
    zb, zt, et, rt = [], [], [], []
    for r in radii:
        nodes = normal_and_measure(coord_sphere(bg, r), bg, rule)
        pts = nodes.points
        area = math.fsum(nodes.dS)
        v1 = _potential_norm(bg, V, pts, 1)
        zb.append(float(np.max(pointwise_norms(bg, psi.zeta, pts, 1))))
        z2 = pointwise_norms(bg, psi.zeta, pts, 2)
        zt.append(area * float(np.max(v1 * z2**2)))
        e2 = sup_norms_along_geodesic(bg, _as_list((e1.gdot, e1.kdot)), pts, psi.zeta, 2, m)
        et.append(area * float(np.max(v1 * e2**2)))
        if with_r2:
            rt.append(r2_area_sup(psi, e1, V, r, rule, kind))
    return DecayDiagnostics([float(r) for r in radii], zb, zt, et, rt)


__all__ = [
    "DiffeoAtInfinity",
    "QuasiIsometryCertificate",
    "BoundReport",
    "R2Result",
    "DecayDiagnostics",
    "pullback",
    "pulled_perturbation",
    "lie_perturbation",
    "remainder_field",
    "remainder_r1",
    "remainder_r1_flat",
    "remainder_r2",
    "pointwise_norms",
    "geodesic_samples",
    "sup_norms_along_geodesic",
    "check_quasi_isometry",
    "measure_bound",
    "random_draws",
    "decay_diagnostics",
    "r2_area_sup",
]
