"""Operators Phi, DPhi0, DPhi0*, the charge integrand U, the remainder Q, and total charges.

Two operator kinds are supported:

* ``"scal"``: Phi(g) = Scal(g); test sections V are functions.
* ``"constraints"``: Phi(g, k) = (Scal + (tr k)^2 - |k|^2, 2(div k - d tr k));
  test sections are pairs (f, alpha) of a function and a 1-form.

Jet-level functions take a :class:`Geometry` of g0 and jets of the data and
return jets.  The point-level wrappers (``evaluate_phi``, ``linearized_phi``,
``adjoint_phi``, ``charge_integrand``, ``quadratic_remainder``) take fields
and chart points and return plain arrays with tensor axes first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import jets
from .backgrounds import StaticPotential, adm_constant
from .errors import NonConvergent
from .fields import TensorField
from .surface import QuadratureRule, integrate_oneform, map_ordered, radius_schedule
from .tensorcalc import Geometry, hessian_jets, lie_jets

KINDS = ("scal", "constraints")


@dataclass(frozen=True, eq=False)
class Perturbation:
    """e = (gdot, kdot); ``kdot`` is ignored by scalar-curvature runs."""

    gdot: TensorField
    kdot: Optional[TensorField] = None
    provenance: str = "explicit"

    def scale(self, t):
        kd = None if self.kdot is None else self.kdot.scale(t)
        return Perturbation(self.gdot.scale(t), kd, f"{t:g}*{self.provenance}")

    def __add__(self, other):
        if self.kdot is None and other.kdot is None:
            kd = None
        elif self.kdot is None:
            kd = other.kdot
        elif other.kdot is None:
            kd = self.kdot
        else:
            kd = self.kdot + other.kdot
        return Perturbation(self.gdot + other.gdot, kd, "sum")


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"operator kind must be one of {KINDS}, got {kind!r}")


# --- jet-level operators -----------------------------------------------------------


def _circ(A, B, ginv):
    """(A o B)_ij = g^{kl} A_ik B_lj."""
    return jets.jeinsum("ik,kj->ij", A, jets.jeinsum("kl,lj->kj", ginv, B))


def phi_jets(kind, g, k=None):
    geo = Geometry(g)
    if kind == "scal":
        return geo.scalar
    if k is None:
        k = jets.constant(g.space, np.zeros(g.shape))
    trk = geo.tr(k)
    H = geo.scalar + trk * trk - geo.inner(k, k)
    M = (geo.div(k) - trk.grad()) * 2.0
    return H, M


def dphi_jets(kind, geo, k0, gd, kd=None):
    """Linearization at h0 in the direction e = (gd, kd)."""
    trg = geo.tr(gd)
    div_gd = geo.div(gd)
    lin = geo.div(div_gd - trg.grad()) - geo.inner(geo.ricci, gd)
    if kind == "scal":
        return lin
    if kd is None:
        kd = jets.constant(gd.space, np.zeros(gd.shape))
    if k0 is None:
        k0 = jets.constant(gd.space, np.zeros(gd.shape))
    gi = geo.ginv
    trk0 = geo.tr(k0)
    k0k0 = _circ(k0, k0, gi)
    H = lin + geo.inner(k0k0 * 2.0 - k0 * (trk0 * 2.0), gd) - geo.inner(k0, kd) * 2.0 + trk0 * geo.tr(kd) * 2.0
    # momentum part
    grad_trg = geo.raise_index(trg.grad())
    t1 = jets.jeinsum("i,ij->j", grad_trg, k0)
    k0_up = jets.jeinsum("ib,jb->ij", jets.jeinsum("ia,ab->ib", gi, k0), gi)
    t2 = jets.jeinsum("ij,mij->m", k0_up, geo.nabla(gd))
    t3 = geo.div(_circ(gd, k0, gi)) - geo.inner(k0, gd).grad()
    t4 = geo.div(kd) - geo.tr(kd).grad()
    M = t1 - t2 - t3 * 2.0 + t4 * 2.0
    return H, M


def adjoint_jets(kind, geo, k0, f, alpha=None):
    """DPhi0*(V): a 2-tensor (scal) or the pair ((d_g Phi)*, (d_k Phi)*)."""
    H = hessian_jets(f, geo.gamma)
    lap = -geo.tr(H)
    g0 = geo.g
    Ag = H + g0 * lap - geo.ricci * f
    if kind == "scal":
        return Ag
    gi = geo.ginv
    if alpha is None:
        alpha = jets.constant(f.space, np.zeros(g0.shape[:1] + f.shape))
    if k0 is None:
        k0 = jets.constant(g0.space, np.zeros(g0.shape))
    trk0 = geo.tr(k0)
    k0k0 = _circ(k0, k0, gi)
    a_up = geo.raise_index(alpha)
    Da = geo.nabla(alpha)
    div_a = geo.tr(Da)
    Ag = Ag + (k0k0 * 2.0 - k0 * (trk0 * 2.0)) * f
    Ag = Ag + lie_jets(a_up, k0) - k0 * div_a
    Ag = Ag - g0 * (geo.inner(Da, k0) + jets.jeinsum("i,i->", a_up, geo.div(k0)))
    Ak = (k0 - g0 * trk0) * (f * -2.0) - lie_jets(a_up, g0) + g0 * (div_a * 2.0)
    return Ag, Ak


def integrand_jets(kind, geo, k0, f, alpha, gd, kd=None, form="full", lam=0.0):
    """Charge integrand U(V, e) as a covector jet (one order below the inputs)."""
    trg = geo.tr(gd)
    df = f.grad()
    grad_f = geo.raise_index(df)
    U = (geo.div(gd) - trg.grad()) * f - jets.jeinsum("i,ij->j", grad_f, gd) + df * trg
    if kind == "scal":
        return U
    n = geo.n
    if alpha is None:
        alpha = jets.constant(f.space, np.zeros((n,) + f.shape))
    if kd is None:
        kd = jets.constant(gd.space, np.zeros(gd.shape))
    a_up = geo.raise_index(alpha)
    if form == "reduced":
        W = kd - gd * lam
        W = W - geo.g * geo.tr(W)
        return U + jets.jeinsum("i,ij->j", a_up, W) * 2.0
    if k0 is None:
        k0 = jets.constant(gd.space, np.zeros(gd.shape))
    U = U + (jets.jeinsum("i,ij->j", a_up, kd) - alpha * geo.tr(kd)) * 2.0
    U = U + jets.jeinsum("i,ij->j", a_up, k0) * trg + alpha * geo.inner(k0, gd)
    # alpha goes into the k0 slot of (gd o k0); contracting the gd slot instead breaks
    # the integration-by-parts identity once k0 is not a multiple of g0
    last = jets.jeinsum("ij,j->i", _circ(gd, k0, geo.ginv), a_up)
    return U - last * 2.0


def pair_jets(kind, geo, f, alpha, value):
    """<V, X>_0 = f X (scal) or f X_H + g0^{-1}(alpha, X_M) (constraints)."""
    if kind == "scal":
        return f * value
    H, M = value
    out = f * H
    if alpha is not None:
        out = out + jets.jeinsum("i,i->", geo.raise_index(alpha), M)
    return out


def pair_tensors_jets(kind, geo, A, gd, kd=None):
    """<DPhi0* V, e>_0 for the adjoint output ``A``."""
    if kind == "scal":
        return geo.inner(A, gd)
    Ag, Ak = A
    out = geo.inner(Ag, gd)
    if kd is not None:
        out = out + geo.inner(Ak, kd)
    return out


# --- point-level API ----------------------------------------------------------------


class _Context:
    """Jets of the background and inputs at a batch of chart points."""

    def __init__(self, background, points, order):
        pts = np.asarray(points, dtype=float)
        background.check_domain(pts)
        self.background = background
        self.X = jets.seed(pts, order)
        self.geo = Geometry(background.metric(self.X))
        self.k0 = None if background.k0 is None else background.k0(self.X)
        self.n = background.n

    def e(self, e):
        kd = None if e.kdot is None else e.kdot(self.X)
        return e.gdot(self.X), kd

    def V(self, V):
        f = V.f_jets(self.X, self.n)
        alpha = None if V.alpha is None else V.alpha(self.X)
        return f, alpha


def _values(x):
    if isinstance(x, tuple):
        return tuple(v.value for v in x)
    return x.value


def evaluate_phi(kind, data, background, points):
    """Phi at the points for data ``(g, k)`` (``k`` may be None for scal)."""
    _check_kind(kind)
    g, k = data if isinstance(data, tuple) else (data, None)
    if kind == "constraints" and k is None:
        raise ValueError("constraints kind requires k")
    X = jets.seed(np.asarray(points, dtype=float), 2)
    return _values(phi_jets(kind, g(X), None if k is None else k(X)))


def linearized_phi(kind, background, e, points):
    _check_kind(kind)
    c = _Context(background, points, 2)
    gd, kd = c.e(e)
    return _values(dphi_jets(kind, c.geo, c.k0, gd, kd))


def adjoint_phi(kind, background, V, points):
    _check_kind(kind)
    c = _Context(background, points, 2)
    f, alpha = c.V(V)
    return _values(adjoint_jets(kind, c.geo, c.k0, f, alpha))


def adjoint_norm(kind, background, V, points):
    """Pointwise g0-norm of DPhi0*(V) (combined norm for the constraints pair)."""
    c = _Context(background, points, 2)
    f, alpha = c.V(V)
    A = adjoint_jets(kind, c.geo, c.k0, f, alpha)
    if kind == "scal":
        sq = c.geo.inner(A, A).value
    else:
        sq = c.geo.inner(A[0], A[0]).value + c.geo.inner(A[1], A[1]).value
    return np.sqrt(np.maximum(sq, 0.0))


def charge_integrand(kind, background, V, e, points, form="full", order=1):
    """U(V, e) at the points, as an (n, ...) array.  Uses only first derivatives."""
    _check_kind(kind)
    if form == "reduced" and kind == "constraints" and background.lam0 is None:
        form = "full"
    c = _Context(background, points, order)
    f, alpha = c.V(V)
    gd, kd = c.e(e)
    return integrand_jets(kind, c.geo, c.k0, f, alpha, gd, kd, form=form, lam=background.lam).value


def integrand_field(kind, background, V, e, form="full"):
    """U(V, e) as a covector field (for surface quadrature)."""

    def fn(points):
        return charge_integrand(kind, background, V, e, points, form=form)

    return fn


def identity_residual(kind, background, V, eta, points):
    """<V, DPhi0 eta> - div0 U(V, eta) - <DPhi0* V, eta> at the points."""
    c = _Context(background, points, 2)
    f, alpha = c.V(V)
    gd, kd = c.e(eta)
    lhs = pair_jets(kind, c.geo, f, alpha, dphi_jets(kind, c.geo, c.k0, gd, kd))
    U = integrand_jets(kind, c.geo, c.k0, f, alpha, gd, kd)
    divU = c.geo.div(U)
    A = adjoint_jets(kind, c.geo, c.k0, f, alpha)
    rhs = pair_tensors_jets(kind, c.geo, A, gd, kd)
    return lhs.value - divU.value - rhs.value, np.abs(lhs.value) + np.abs(divU.value) + np.abs(rhs.value)


def quadratic_remainder(kind, background, V, e, points):
    """Q(V, e) = <V, Phi(h0 + e) - Phi(h0) - DPhi0(e)>_0, by direct evaluation."""
    _check_kind(kind)
    c = _Context(background, points, 2)
    f, alpha = c.V(V)
    gd, kd = c.e(e)
    g0 = c.geo.g
    if kind == "scal":
        full = phi_jets("scal", g0 + gd)
        base = c.geo.scalar
        lin = dphi_jets("scal", c.geo, None, gd)
        return (f * (full - base - lin)).value
    k0 = c.k0 if c.k0 is not None else jets.constant(g0.space, np.zeros(g0.shape))
    kdd = kd if kd is not None else jets.constant(g0.space, np.zeros(g0.shape))
    H1, M1 = phi_jets("constraints", g0 + gd, k0 + kdd)
    H0, M0 = phi_jets("constraints", g0, k0)
    dH, dM = dphi_jets("constraints", c.geo, c.k0, gd, kd)
    return pair_jets("constraints", c.geo, f, alpha, (H1 - H0 - dH, M1 - M0 - dM)).value


# --- total charge ---------------------------------------------------------------------


@dataclass
class ChargeReport:
    potential: str
    operator: str
    background: str
    radii: list
    integrals: list  # raw surface integrals
    quad_errors: list
    running: list  # extrapolation from radii[:k+1]; NaN where unavailable
    extrapolated: float  # raw limit, NaN unless converged
    estimate: float  # last running estimate, reported even when not converged
    fit_exponent: float
    fit_residual: float
    converged: bool
    normalization: str = "raw"
    scale: float = 1.0
    quadrature: dict = field(default_factory=dict)

    def normalized(self, x):
        return x / self.scale

    @property
    def value(self):
        return self.normalized(self.extrapolated)

    def rows(self):
        """(radius, integral, quad_error, extrapolated) in the chosen normalization."""
        s = self.scale
        return [(r, i / s, q / s, x / s) for r, i, q, x in zip(self.radii, self.integrals, self.quad_errors, self.running)]

    def to_dict(self):
        s = self.scale
        return {
            "potential": self.potential,
            "operator": self.operator,
            "background": self.background,
            "radii": list(self.radii),
            "integrals": [x / s for x in self.integrals],
            "quad_errors": [x / s for x in self.quad_errors],
            "running": [x / s for x in self.running],
            "extrapolated": self.extrapolated / s,
            "estimate": self.estimate / s,
            "fit_exponent": self.fit_exponent,
            "fit_residual": self.fit_residual,
            "converged": self.converged,
            "normalization": self.normalization,
            "scale": s,
            "quadrature": dict(self.quadrature),
        }


def _basis(model, x, p):
    return np.exp(-p * x) if model == "exp" else x ** (-p)


def fit_limit(radii, values, model="power", bounds=None):
    """Fit a + b * r^{-p} (``power``) or a + b * exp(-q r) (``exp``) by variable projection.

    Returns ``(a, p, relative rms residual)``.
    """
    x = np.asarray(radii, dtype=float)
    y = np.asarray(values, dtype=float)
    scale = max(np.max(np.abs(y)), 1e-300)
    if np.max(np.abs(y - y[-1])) <= 1e-14 * scale or len(y) < 3:
        return float(y[-1]), float("nan"), 0.0
    lo, hi = bounds or ((0.05, 6.0) if model == "power" else (0.05, 8.0))

    def solve(p):
        Amat = np.stack([np.ones_like(x), _basis(model, x, p)], axis=1)
        coef, *_ = np.linalg.lstsq(Amat, y, rcond=None)
        res = y - Amat @ coef
        return float(res @ res), coef

    grid = np.linspace(lo, hi, 241)
    vals = [solve(p)[0] for p in grid]
    k = int(np.argmin(vals))
    a_lo, a_hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    opt = minimize_scalar(lambda p: solve(p)[0], bounds=(a_lo, a_hi), method="bounded", options={"xatol": 1e-10})
    p = float(opt.x) if opt.fun <= vals[k] else float(grid[k])
    ss, coef = solve(p)
    return float(coef[0]), p, math.sqrt(ss / len(y)) / scale


def extrapolate(radii, integrals, model, rtol=1e-3, atol=0.0):
    """Running estimates, final estimate, exponent, residual and convergence flag."""
    running = []
    p = float("nan")
    resid = 0.0
    for k in range(1, len(radii) + 1):
        if k < 3:
            running.append(float("nan"))
            continue
        a, p, resid = fit_limit(radii[:k], integrals[:k], model)
        running.append(a)
    finite = [v for v in running if math.isfinite(v)]
    if len(finite) >= 2:
        est, prev = finite[-1], finite[-2]
        converged = abs(est - prev) <= rtol * abs(est) + atol
    else:
        est = finite[-1] if finite else float(integrals[-1])
        converged = False
    return running, est, p, resid, converged


def total_charge(
    kind,
    background,
    V,
    e,
    radii,
    rule=QuadratureRule(),
    *,
    normalization="raw",
    rtol=1e-3,
    atol=None,
    workers=None,
    strict=False,
    qtol=None,
    form="full",
):
    """Surface integrals of U(V, e) over the radius schedule and their extrapolated limit."""
    _check_kind(kind)
    surfaces = radius_schedule(background, radii, rule)
    omega = integrand_field(kind, background, V, e, form=form)
    results = map_ordered(lambda s: integrate_oneform(s, background, omega, rule, qtol=qtol), surfaces, workers)
    integrals = [r.value for r in results]
    errors = [r.error for r in results]
    model = "power" if background.kind == "flat" else "exp"
    if atol is None:
        atol = 1e-12 * max(max(abs(v) for v in integrals), max(r.abs_value for r in results), 1e-300)
    running, est, p, resid, converged = extrapolate(radii, integrals, model, rtol, atol)
    scale = adm_constant(background.n) if normalization == "adm" else 1.0
    report = ChargeReport(
        potential=V.label,
        operator=kind,
        background=f"{background.kind}(n={background.n})",
        radii=[float(r) for r in radii],
        integrals=integrals,
        quad_errors=errors,
        running=running,
        extrapolated=est if converged else float("nan"),
        estimate=est,
        fit_exponent=p,
        fit_residual=resid,
        converged=converged,
        normalization=normalization,
        scale=scale,
        quadrature={"theta_order": rule.theta_order, "phi_count": rule.phi_count, "model": model},
    )
    if strict and not converged:
        raise NonConvergent(f"charge for {V.label} did not converge (last estimates differ by more than rtol={rtol:g})", report)
    return report


__all__ = [
    "Perturbation",
    "ChargeReport",
    "StaticPotential",
    "evaluate_phi",
    "linearized_phi",
    "adjoint_phi",
    "adjoint_norm",
    "charge_integrand",
    "integrand_field",
    "identity_residual",
    "quadratic_remainder",
    "total_charge",
    "fit_limit",
    "extrapolate",
]
