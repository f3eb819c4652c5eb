"""Coordinate differential geometry on jets.

All tensors are stored fully covariant with tensor axes first and batch axes
last; indices are raised explicitly with the inverse metric.  Conventions:

* ``gamma[k, i, j]`` is the Christoffel symbol of the second kind.
* ``riemann[l, k, i, j] = R^l_{kij}`` with ``R(d_i, d_j) d_k = R^l_{kij} d_l``;
  ``ricci[k, j] = R^i_{kij}``.  The unit sphere has positive scalar curvature.
* The Laplacian is the geometric one, ``Delta f = -g^{ij} (nabla^2 f)_{ij}``.
* A covariant derivative puts the new index first: ``(nabla T)[i, ...] = nabla_i T_...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .errors import SingularMetric
from .fields import TensorField

_LETTERS = "abcdefghjklmnopqrstuvw"


def inverse(g):
    """Inverse of a jet-valued matrix field via a terminating Neumann series."""
    g0 = np.moveaxis(g.value, (0, 1), (-2, -1))
    det = np.linalg.det(g0)
    scale = np.max(np.abs(g0), axis=(-2, -1))
    if np.any(~np.isfinite(det)) or np.any(np.abs(det) <= 1e-300 + 1e-14 * scale ** g0.shape[-1]):
        raise SingularMetric("metric matrix is not invertible at an evaluation point")
    inv0 = np.moveaxis(np.linalg.inv(g0), (-2, -1), (0, 1))
    if g.order == 0:
        return jets.constant(g.space, inv0)
    nil = g - g.value
    step = jets.jeinsum("ij,jk->ik", inv0, nil) * -1.0
    term = jets.constant(g.space, inv0)
    total = term
    for _ in range(g.order):
        term = jets.jeinsum("ij,jk->ik", step, term)
        total = total + term
    return total


def christoffel_jets(g, ginv):
    """``gamma[k,i,j] = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)``; one order below ``g``."""
    dg = g.grad()  # dg[a, i, j] = d_a g_ij
    lower = (dg.transpose(0, 2, 1) + dg.transpose(2, 0, 1) - dg.transpose(1, 2, 0)) * 0.5
    # lower[i, j, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    return jets.jeinsum("kl,ijl->kij", ginv, lower)


def riemann_jets(gamma):
    """``R^l_{kij} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik``."""
    dG = gamma.grad()  # dG[a, l, i, j] = d_a G^l_ij
    t1 = dG.transpose(1, 3, 0, 2)  # [l, k, i, j] <- dG[i, l, j, k]
    quad = jets.jeinsum("lim,mjk->lkij", gamma, gamma)
    return t1 - t1.swapaxes(2, 3) + quad - quad.swapaxes(2, 3)


def _ricci(riemann):
    n = riemann.shape[0]
    return jets.jstack([jets.jstack([sum(riemann[i, k, i, j] for i in range(n)) for j in range(n)]) for k in range(n)])


class Geometry:
    """Metric jets with lazily computed inverse, connection and curvature."""

    def __init__(self, g):
        self.g = g
        self.n = g.shape[0]

    @cached_property
    def ginv(self):
        return inverse(self.g)

    @cached_property
    def gamma(self):
        return christoffel_jets(self.g, self.ginv)

    @cached_property
    def riemann(self):
        return riemann_jets(self.gamma)

    @cached_property
    def ricci(self):
        return _ricci(self.riemann)

    @cached_property
    def scalar(self):
        return jets.jeinsum("ij,ij->", self.ginv, self.ricci)

    # --- operators bound to this metric ---------------------------------
    def nabla(self, T, variance=None):
        return cov_deriv(T, self.gamma, variance)

    def div(self, T):
        return divergence(T, self)

    def tr(self, T):
        return jets.jeinsum("ij,ij->", self.ginv, T)

    def inner(self, A, B):
        return inner(A, B, self.ginv)

    def raise_index(self, w):
        return jets.jeinsum("ij,j->i", self.ginv, w)

    def lower_index(self, v):
        return jets.jeinsum("ij,j->i", self.g, v)


def cov_deriv(T, gamma, variance=None):
    """Covariant derivative of a tensor jet; ``variance`` is a string of 'c'/'v' per slot."""
    rank = T.ndim - (gamma.ndim - 3)
    if variance is None:
        variance = "c" * rank
    idx = _LETTERS[:rank]
    out = T.grad()
    for s in range(rank):
        t_spec = idx[:s] + "y" + idx[s + 1 :]
        if variance[s] == "c":
            out = out - jets.jeinsum(f"yz{idx[s]},{t_spec}->z{idx}", gamma, T)
        else:
            out = out + jets.jeinsum(f"{idx[s]}zy,{t_spec}->z{idx}", gamma, T)
    return out


def divergence(T, geo):
    """``(div T)_J = g^{ia} nabla_a T_{iJ}``."""
    rank = T.ndim - (geo.g.ndim - 2)
    DT = cov_deriv(T, geo.gamma)
    idx = _LETTERS[: rank - 1]
    return jets.jeinsum(f"yz,zy{idx}->{idx}", geo.ginv, DT)


def inner(A, B, ginv):
    """Full contraction ``<A, B>`` of two covariant tensors of equal rank."""
    rank = A.ndim - (ginv.ndim - 2)
    if rank == 0:
        return A * B
    cur = A
    idx = _LETTERS[:rank]
    for s in range(rank):
        spec = idx[:s] + "y" + idx[s + 1 :]
        cur = jets.jeinsum(f"{idx[s]}y,{spec}->{idx}", ginv, cur)
    return (cur * B).sum(axis=tuple(range(rank)))


def lie_jets(zeta, T):
    """Lie derivative of a covariant tensor jet along a vector jet (one order lost)."""
    rank = T.ndim - (zeta.ndim - 1)
    idx = _LETTERS[:rank]
    dT = T.grad()
    out = jets.jeinsum(f"y,y{idx}->{idx}", zeta, dT)
    if rank:
        dz = zeta.grad()  # dz[i, k] = d_i zeta^k
        for s in range(rank):
            spec = idx[:s] + "y" + idx[s + 1 :]
            out = out + jets.jeinsum(f"{idx[s]}y,{spec}->{idx}", dz, T)
    return out


def hessian_jets(f, gamma):
    return cov_deriv(f.grad(), gamma)


def norm_values(T, g, ginv, variance=None):
    """Pointwise metric norm ``|T|`` from plain arrays (tensor axes first)."""
    T = np.asarray(T, dtype=float)
    rank = T.ndim - (np.ndim(g) - 2)
    variance = variance or "c" * rank
    cur = T
    idx = _LETTERS[:rank]
    for s in range(rank):
        spec = idx[:s] + "y" + idx[s + 1 :]
        m = ginv if variance[s] == "c" else g
        cur = np.einsum(f"{idx[s]}y...,{spec}...->{idx}...", m, cur)
    sq = (cur * T).sum(axis=tuple(range(rank))) if rank else T * T
    return np.sqrt(np.maximum(sq, 0.0))


# --- point-level public API ---------------------------------------------------


def _metric_of(background):
    if isinstance(background, TensorField):
        return background
    return background.metric


def _seed(points, order):
    return jets.seed(np.asarray(points, dtype=float), order)


@dataclass
class ConnectionData:
    christoffel: object  # Jet [k, i, j]
    metric: object
    inverse: object

    def check_symmetric(self, tol=1e-12):
        G = self.christoffel.value
        return bool(np.max(np.abs(G - np.swapaxes(G, 1, 2))) <= tol * max(1.0, np.max(np.abs(G))))


@dataclass
class CurvatureData:
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray


def christoffel(metric, points, order=0):
    geo = Geometry(_metric_of(metric)(_seed(points, order + 1)))
    return ConnectionData(geo.gamma, geo.g.truncate(order), geo.ginv.truncate(order))


def curvature(metric, points):
    geo = Geometry(_metric_of(metric)(_seed(points, 2)))
    return CurvatureData(geo.riemann.value, geo.ricci.value, geo.scalar.value)


def metric_compatibility(metric, points):
    """Max over components of ``|nabla g|`` at ``points``."""
    geo = Geometry(_metric_of(metric)(_seed(points, 1)))
    return float(np.max(np.abs(geo.nabla(geo.g).value)))


def lie_derivative(zeta, t, points):
    X = _seed(points, 1)
    return lie_jets(zeta(X), t(X)).value


def cov_divergence(t, background, points):
    X = _seed(points, 1)
    geo = Geometry(_metric_of(background)(X))
    return geo.div(t(X)).value


def trace(t, background, points, order=0):
    X = _seed(points, order)
    geo = Geometry(_metric_of(background)(X))
    return geo.tr(t(X))


def hessian_laplacian(f, background, points):
    X = _seed(points, 2)
    geo = Geometry(_metric_of(background)(X))
    H = hessian_jets(f(X), geo.gamma)
    lap = -geo.tr(H)
    return H.value, lap.value


def lie_field(zeta, t):
    """The field ``L_zeta t`` (covariant ``t``)."""
    return TensorField(t.n, t.rank, lambda X: lie_jets(zeta(X), t(X)), symmetry=t.symmetry, loss=1, label=f"L({t.label})")
