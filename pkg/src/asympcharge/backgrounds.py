"""Model backgrounds h0 = (g0, k0): flat space and hyperbolic space.

Flat space lives in Cartesian coordinates.  Hyperbolic space lives in polar
coordinates ``(r, th_1, ..., th_{n-2}, phi)`` with

    g0 = dr^2 + sinh(r)^2 (dth_1^2 + sin(th_1)^2 dth_2^2 + ...)

and unit direction ``xi(th)`` whose first component is ``cos(th_1)``.  The
hyperboloid embedding ``P = (cosh r, sinh r xi)`` in R^{1,n} is used for the
exponential map and Lorentz isometries; ``y = sinh r xi`` ("ambient"
coordinates) is a smooth global chart used to write test fields without polar
singularities.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import jets
from .errors import ChartDomainViolation, NotAnIsometry, UnsupportedKernel
from .expr import parse
from .fields import TensorField, constant_field, scalar_field, tensor_field, zero_field

TWO_PI = 2.0 * math.pi


def sphere_area(n):
    """Area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def adm_constant(n):
    """c_n = 2(n-1) omega_{n-1}; equals 16 pi for n = 3."""
    return 2.0 * (n - 1) * sphere_area(n)


@dataclass(frozen=True, eq=False)
class StaticPotential:
    """Test section V = (f, alpha); scalar-curvature runs use only ``f``."""

    f: Optional[TensorField]
    alpha: Optional[TensorField] = None
    label: str = ""
    coeffs: Optional[np.ndarray] = None  # coordinates in the kernel basis, when known

    def f_jets(self, X, n):
        if self.f is None:
            return jets.constant(X.space, np.zeros(X.shape[1:]))
        return self.f(X)

    def alpha_jets(self, X, n):
        if self.alpha is None:
            return jets.constant(X.space, np.zeros((n,) + X.shape[1:]))
        return self.alpha(X)


def combine(potentials, weights, label=None):
    """Linear combination of potentials (used for bilinearity checks and basis actions)."""
    fs = [(w, p.f) for w, p in zip(weights, potentials) if p.f is not None and w != 0]
    als = [(w, p.alpha) for w, p in zip(weights, potentials) if p.alpha is not None and w != 0]

    def lin(terms):
        if not terms:
            return None
        total = terms[0][1].scale(terms[0][0])
        for w, t in terms[1:]:
            total = total + t.scale(w)
        return total

    coeffs = None
    if all(p.coeffs is not None for p in potentials):
        coeffs = sum(w * np.asarray(p.coeffs, float) for w, p in zip(weights, potentials))
    name = label or "+".join(f"{w:g}*{p.label}" for w, p in zip(weights, potentials))
    return StaticPotential(lin(fs), lin(als), name, coeffs)


@dataclass(frozen=True, eq=False)
class Background:
    """Reference data; construct with :func:`flat` or :func:`hyperbolic`."""

    kind: str
    n: int
    lam0: Optional[float] = None
    r_min: float = 1e-3
    metric: TensorField = field(init=False, repr=False)
    k0: Optional[TensorField] = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("flat", "hyperbolic"):
            raise ValueError(f"unknown background kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("dimension must be at least 2")
        if self.kind == "flat":
            g = constant_field(np.eye(self.n), label="delta")
            g.symmetry = ("symmetric", (0, 1))
        else:
            g = TensorField(self.n, 2, self._hyperbolic_metric, symmetry=("symmetric", (0, 1)), label="g_hyp")
        object.__setattr__(self, "metric", g)
        k0 = None if self.lam0 is None else g.scale(self.lam0)
        object.__setattr__(self, "k0", k0)

    # --- chart ---------------------------------------------------------------
    @property
    def chart(self):
        return "cartesian" if self.kind == "flat" else "polar"

    @property
    def scal0(self):
        return 0.0 if self.kind == "flat" else -float(self.n * (self.n - 1))

    @property
    def lam(self):
        return 0.0 if self.lam0 is None else float(self.lam0)

    def phi0(self, operator="scal"):
        """Constant value of Phi at h0: a float (scal) or the pair (H, M-vector)."""
        if operator == "scal":
            return self.scal0
        return self.scal0 + self.n * (self.n - 1) * self.lam**2, np.zeros(self.n)

    def radius(self, points):
        pts = np.asarray(points, dtype=float)
        if self.kind == "flat":
            return np.sqrt(np.sum(pts**2, axis=-1))
        return pts[..., 0]

    def check_domain(self, points):
        r = self.radius(points)
        if np.any(~np.isfinite(r)) or np.any(r < self.r_min):
            raise ChartDomainViolation(f"point with r = {float(np.min(r)):.3g} below r_min = {self.r_min}")

    def _hyperbolic_metric(self, X):
        n = self.n
        s2 = jets.sinh(X[0]) ** 2
        diag = [jets.constant(X.space, np.ones(X.shape[1:])), s2]
        acc = s2
        for k in range(1, n - 1):
            acc = acc * jets.sin(X[k]) ** 2
            diag.append(acc)
        zero = jets.constant(X.space, np.zeros(X.shape[1:]))
        rows = [jets.jstack([diag[i] if i == j else zero for j in range(n)]) for i in range(n)]
        return jets.jstack(rows)

    # --- ambient (hyperboloid) coordinates -------------------------------------
    def direction(self, X):
        """Unit direction jets ``xi`` and their angle derivatives ``dxi[m][j]``."""
        return _direction(X, self.n)

    def ambient(self, X):
        """Ambient coordinates y (flat: the chart itself; hyperbolic: sinh r xi)."""
        if self.kind == "flat":
            return X
        xi, _ = _direction(X, self.n)
        return jets.jstack([jets.sinh(X[0]) * c for c in xi])

    def hyperboloid(self, X):
        """Lift to R^{1,n}: P = (cosh r, sinh r xi)."""
        xi, _ = _direction(X, self.n)
        s = jets.sinh(X[0])
        return jets.jstack([jets.cosh(X[0])] + [s * c for c in xi])

    def ambient_frame(self, X):
        """``F[a, j] = d y^j / d x^a`` (identity for flat)."""
        n = self.n
        if self.kind == "flat":
            return jets.constant(X.space, np.broadcast_to(np.eye(n).reshape((n, n) + (1,) * (X.ndim - 1)), (n, n) + X.shape[1:]))
        xi, dxi = _direction(X, n)
        c, s = jets.cosh(X[0]), jets.sinh(X[0])
        rows = [jets.jstack([c * v for v in xi])]
        for m in range(n - 1):
            rows.append(jets.jstack([s * v for v in dxi[m]]))
        return jets.jstack(rows)

    def from_ambient_points(self, y, reference=None):
        """Chart coordinates of ambient points ``y`` (shape (..., n))."""
        y = np.asarray(y, dtype=float)
        if self.kind == "flat":
            return y
        X = jets.seed(y, 0)
        ref = None if reference is None else np.moveaxis(np.asarray(reference, float), -1, 0)
        return np.moveaxis(_polar_from_vector(X, ref).value, 0, -1)

    def scalar_from_ambient(self, text, params=None):
        e = parse(text, self.n, params, "cartesian")
        return TensorField(self.n, 0, lambda X: e.evaluate(self.ambient(X)), label=text)

    def vector_from_ambient(self, components, params=None, label=""):
        """The g0-dual of the 1-form ``w_j dy^j`` with ``w_j`` given in ambient coordinates y.

        On flat space this is the vector with Cartesian components ``w``.
        """
        exprs = [parse(str(c), self.n, params, "cartesian") for c in components]
        if len(exprs) != self.n:
            raise ValueError(f"need {self.n} components")
        if self.kind == "flat":
            return TensorField(self.n, 1, lambda X: jets.jstack([e.evaluate(X) for e in exprs]), vector=True, label=label)

        def fn(X):
            Y = self.ambient(X)
            w = jets.jstack([e.evaluate(Y) for e in exprs])
            F = self.ambient_frame(X)
            g = self.metric(X)
            comps = []
            for a in range(self.n):
                comps.append(sum(F[a, j] * w[j] for j in range(self.n)) / g[a, a])
            return jets.jstack(comps)

        return TensorField(self.n, 1, fn, vector=True, label=label)

    def tensor_from_ambient(self, components, params=None, label=""):
        """Covariant 2-tensor with Cartesian ambient components, pulled to the chart."""
        src = tensor_field(components, self.n, params, "cartesian")
        if self.kind == "flat":
            return src

        def fn(X):
            T = src(self.ambient(X))
            F = self.ambient_frame(X)
            return jets.jeinsum("aj,jb->ab", F, jets.jeinsum("jk,bk->jb", T, F))

        return TensorField(self.n, 2, fn, symmetry=src.symmetry, label=label)

    # --- sampling --------------------------------------------------------------
    def sample_points(self, rng, count, r_lo, r_hi):
        """Random chart points with radius uniform in [r_lo, r_hi] and isotropic direction."""
        u = rng.normal(size=(count, self.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = rng.uniform(r_lo, r_hi, size=count)
        if self.kind == "flat":
            return u * r[:, None]
        return polar_coordinates(r, u)


def with_k0(background, k0):
    """Copy of ``background`` with an arbitrary second fundamental form ``k0``.

    Such data need not satisfy the invariance condition on Phi0; it is meant for
    pointwise identities that hold for any (g0, k0).
    """
    out = Background(background.kind, background.n, background.lam0, background.r_min)
    object.__setattr__(out, "k0", k0)
    return out


def flat(n=3, lam0=None, r_min=1e-3):
    return Background("flat", n, lam0, r_min)


def hyperbolic(n=3, lam0=None, r_min=1e-3):
    return Background("hyperbolic", n, lam0, r_min)


# --- polar helpers -------------------------------------------------------------


def _direction(X, n):
    """xi(theta) and dxi[m][j] = d xi^j / d theta_m from the angle jets X[1:]."""
    ang = [X[k] for k in range(1, n)]
    sn = [jets.sin(a) for a in ang]
    cs = [jets.cos(a) for a in ang]
    one = jets.constant(X.space, np.ones(X.shape[1:]))
    zero = jets.constant(X.space, np.zeros(X.shape[1:]))

    def comp(j, m=None):
        # xi^j = prod_{k<j} sin th_k * (cos th_j if j < n-1 else 1), optionally d/d th_m
        out = one
        for k in range(min(j, n - 1)):
            if m == k:
                out = out * cs[k]
            else:
                out = out * sn[k]
        if j < n - 1:
            if m == j:
                out = out * (-sn[j])
            else:
                out = out * cs[j]
        if m is not None and m > j:
            return zero
        return out

    xi = [comp(j) for j in range(n)]
    dxi = [[comp(j, m) for j in range(n)] for m in range(n - 1)]
    return xi, dxi


def polar_coordinates(r, u):
    """Polar chart points from radii ``r`` and unit vectors ``u`` (shape (..., n))."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    out = np.empty(u.shape)
    out[..., 0] = r
    for k in range(n - 2):
        tail = np.sqrt(np.sum(u[..., k + 1 :] ** 2, axis=-1))
        out[..., k + 1] = np.arctan2(tail, u[..., k])
    out[..., n - 1] = np.arctan2(u[..., n - 1], u[..., n - 2])
    return out


def _polar_from_vector(Yv, ref_angles=None):
    """Polar coordinates (r, angles) of ambient vector jets ``Yv`` (shape (n, ...))."""
    n = Yv.shape[0]
    sq = [Yv[j] * Yv[j] for j in range(n)]
    rho = jets.sqrt(sum(sq))
    out = [jets.asinh(rho)]
    for k in range(n - 2):
        tail = jets.sqrt(sum(sq[k + 1 :]))
        out.append(jets.atan2(tail, Yv[k]))
    phi = jets.atan2(Yv[n - 1], Yv[n - 2])
    if ref_angles is not None:
        shift = np.round((np.asarray(ref_angles[n - 1]) - phi.value) / TWO_PI) * TWO_PI
        phi = phi + shift
    out.append(phi)
    return jets.jstack(out)


# --- exponential map -------------------------------------------------------------


def exp_jets(background, X, Z):
    """exp_X(Z) on jets: coordinate jets X (n, ...), vector jets Z (n, ...)."""
    if background.kind == "flat":
        return X + Z
    n = background.n
    g = background.metric(X)
    u = sum(g[a, a] * Z[a] * Z[a] for a in range(n))
    P = background.hyperboloid(X)
    xi, dxi = _direction(X, n)
    c, s = jets.cosh(X[0]), jets.sinh(X[0])
    # spatial part of the tangent lift Z^a d_a P
    Tv = []
    for j in range(n):
        t = c * xi[j] * Z[0]
        for m in range(n - 1):
            t = t + s * dxi[m][j] * Z[m + 1]
        Tv.append(t)
    C = jets.cosh_sqrt(u)
    S = jets.sinhc_sqrt(u)
    Yv = jets.jstack([C * P[j + 1] + S * Tv[j] for j in range(n)])
    out = _polar_from_vector(Yv, X.value)
    if np.any(out.value[0] < background.r_min):
        raise ChartDomainViolation("exponential map left the polar chart (r below r_min)")
    return out


def exp_map(background, x, zeta_at_x):
    """exp_x(zeta) at plain points; x and zeta have shape (n,) or (N, n)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(zeta_at_x, dtype=float)
    background.check_domain(x)
    X = jets.seed(x, 0)
    Z = jets.constant(X.space, np.moveaxis(z, -1, 0))
    return np.moveaxis(exp_jets(background, X, Z).value, 0, -1)


# --- kernel bases -------------------------------------------------------------------


def _xi_texts(n):
    texts = []
    for j in range(n):
        parts = [f"sin(x{k + 2})" for k in range(min(j, n - 1))]
        if j < n - 1:
            parts.append(f"cos(x{j + 2})")
        texts.append("*".join(parts) if parts else "1")
    return texts


def kernel_basis(background, operator="scal"):
    """Basis of static potentials (KIDs) for the supported (background, operator) pairs."""
    n = background.n
    if operator == "scal":
        if background.kind == "flat":
            texts = ["1"] + [f"x{i + 1}" for i in range(n)]
            labels = ["1"] + [f"x{i + 1}" for i in range(n)]
        else:
            texts = ["cosh(x1)"] + [f"sinh(x1)*{t}" for t in _xi_texts(n)]
            labels = [f"V({mu})" for mu in range(n + 1)]
        basis = []
        for k, (t, lab) in enumerate(zip(texts, labels)):
            c = np.zeros(len(texts))
            c[k] = 1.0
            basis.append(StaticPotential(scalar_field(t, n, chart=background.chart, label=lab), None, lab, c))
        return basis
    if operator != "constraints":
        raise ValueError(f"unknown operator kind {operator!r}")
    if background.kind != "flat" or background.lam != 0.0:
        raise UnsupportedKernel(f"no kernel basis for constraints on {background.kind} with lam0={background.lam}")
    out = []
    size = 1 + n + n + n * (n - 1) // 2
    idx = itertools.count()

    def unit():
        c = np.zeros(size)
        c[next(idx)] = 1.0
        return c

    for t in ["1"] + [f"x{i + 1}" for i in range(n)]:
        out.append(StaticPotential(scalar_field(t, n, label=t), None, f"f={t}", unit()))
    for i in range(n):
        comps = ["0"] * n
        comps[i] = "1"
        out.append(StaticPotential(None, _covector(comps, n), f"alpha=dx{i + 1}", unit()))
    for i, j in itertools.combinations(range(n), 2):
        comps = ["0"] * n
        comps[i] = f"-x{j + 1}"
        comps[j] = f"x{i + 1}"
        out.append(StaticPotential(None, _covector(comps, n), f"alpha=x{i + 1}dx{j + 1}-x{j + 1}dx{i + 1}", unit()))
    return out


def _covector(comps, n):
    exprs = [parse(c, n) for c in comps]
    return TensorField(n, 1, lambda X: jets.jstack([e.evaluate(X) for e in exprs]), label="alpha")


# --- isometries --------------------------------------------------------------------


class FlatIsometry:
    """x -> R x + T with R orthogonal."""

    def __init__(self, R, T=None, tol=1e-10):
        R = np.asarray(R, dtype=float)
        n = R.shape[0]
        if R.shape != (n, n) or np.max(np.abs(R.T @ R - np.eye(n))) > tol:
            raise NotAnIsometry("linear part is not orthogonal")
        self.R = R
        self.T = np.zeros(n) if T is None else np.asarray(T, dtype=float)
        self.n = n

    def __call__(self, X):
        return jets.jeinsum("ij,j->i", self.R, X) + self.T.reshape((self.n,) + (1,) * (X.ndim - 1))

    def inverse(self):
        return FlatIsometry(self.R.T, -self.R.T @ self.T)

    def basis_matrix(self):
        """M with (B_mu o A) = sum_nu M[mu, nu] B_nu for the basis {1, x^i}."""
        n = self.n
        M = np.zeros((n + 1, n + 1))
        M[0, 0] = 1.0
        M[1:, 0] = self.T
        M[1:, 1:] = self.R
        return M


class LorentzIsometry:
    """Hyperbolic isometry acting on the hyperboloid by an O+(1,n) matrix L."""

    def __init__(self, L, tol=1e-10):
        L = np.asarray(L, dtype=float)
        m = L.shape[0]
        eta = np.diag([-1.0] + [1.0] * (m - 1))
        if L.shape != (m, m) or np.max(np.abs(L.T @ eta @ L - eta)) > tol * max(1.0, np.max(np.abs(L)) ** 2):
            raise NotAnIsometry("matrix does not preserve the Minkowski form")
        if L[0, 0] <= 0:
            raise NotAnIsometry("matrix reverses time orientation")
        self.L = L
        self.n = m - 1
        self._bg = hyperbolic(self.n, r_min=0.0)

    def __call__(self, X):
        P = self._bg.hyperboloid(X)
        Y = jets.jeinsum("ij,j->i", self.L, P)
        Yv = jets.jstack([Y[j] for j in range(1, self.n + 1)])
        return _polar_from_vector(Yv, X.value)

    def inverse(self):
        eta = np.diag([-1.0] + [1.0] * self.n)
        return LorentzIsometry(eta @ self.L.T @ eta)

    def basis_matrix(self):
        # V_mu = P^mu, so V_mu o A = (L P)^mu = sum_nu L[mu, nu] V_nu
        return self.L.copy()


def boost(n, rapidity, axis=1):
    L = np.eye(n + 1)
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    L[0, 0] = L[axis, axis] = ch
    L[0, axis] = L[axis, 0] = sh
    return LorentzIsometry(L)


def rotation(n, angle, i=0, j=1):
    R = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    R[i, i] = R[j, j] = c
    R[i, j], R[j, i] = -s, s
    return R


def pullback_by(mapping, t, n=None, label=""):
    """Pullback of a covariant field by a chart map given on coordinate jets."""
    n = n or t.n

    def fn(X):
        Y = mapping(X)
        T = t(Y)
        if t.rank == 0:
            return T
        D = Y.grad()  # D[i, a] = d_i Y^a
        if t.rank == 1:
            return jets.jeinsum("ia,a->i", D, T)
        return jets.jeinsum("ia,ja->ij", D, jets.jeinsum("jb,ab->ja", D, T))

    return TensorField(n, t.rank, fn, symmetry=t.symmetry, loss=0 if t.rank == 0 else 1, label=label or f"pull({t.label})")


def isometry_action(background, A, V):
    """A*V: pulled-back potential, with basis coordinates when V carries them."""
    if background.kind == "flat" and not isinstance(A, FlatIsometry):
        raise NotAnIsometry("flat background needs a FlatIsometry")
    if background.kind == "hyperbolic" and not isinstance(A, LorentzIsometry):
        raise NotAnIsometry("hyperbolic background needs a LorentzIsometry")
    f = None if V.f is None else pullback_by(A, V.f, background.n)
    alpha = None if V.alpha is None else pullback_by(A, V.alpha, background.n)
    coeffs = None
    if V.coeffs is not None and V.alpha is None and len(V.coeffs) == background.n + 1:
        coeffs = A.basis_matrix().T @ np.asarray(V.coeffs, float)
    return StaticPotential(f, alpha, f"A*({V.label})", coeffs)


def basis_potential(background, coeffs, operator="scal", label=None):
    basis = kernel_basis(background, operator)
    return combine(basis, list(coeffs), label=label)


__all__ = [
    "Background",
    "StaticPotential",
    "flat",
    "hyperbolic",
    "with_k0",
    "kernel_basis",
    "exp_map",
    "exp_jets",
    "isometry_action",
    "FlatIsometry",
    "LorentzIsometry",
    "boost",
    "rotation",
    "pullback_by",
    "combine",
    "basis_potential",
    "sphere_area",
    "adm_constant",
    "polar_coordinates",
    "zero_field",
]
