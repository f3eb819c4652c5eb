"""Truncated multivariate Taylor arithmetic ("jets"), vectorized over arrays.

A :class:`Jet` stores, for every entry of an array of shape ``shape``, the
Taylor coefficients ``d^a f(x) / a!`` for all multi-indices ``|a| <= order``
in ``n`` variables.  Coefficients live in ``c`` with shape ``(K, *shape)``;
the multi-index axis comes first and is ordered graded-lexicographically
(degree first, then lexicographically descending, so ``x1`` before ``x2``).

Because lower-order multi-indices form a prefix of that ordering, truncating
a jet is a slice.  Products use a precomputed sparse Cauchy table reduced
with ``np.add.reduceat``, which sums in a fixed order: results do not depend
on how many points are evaluated at once.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import SingularEvaluation

__all__ = [
    "JetSpace",
    "Jet",
    "jet_space",
    "seed",
    "constant",
    "jstack",
    "jeinsum",
    "compose",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "tan",
    "sinh",
    "cosh",
    "tanh",
    "atan",
    "atan2",
    "asinh",
    "power",
    "cosh_sqrt",
    "sinhc_sqrt",
]


def _multi_indices(n, degree):
    """All multi-indices of total ``degree`` in lexicographically descending order."""
    if n == 1:
        return [(degree,)]
    out = []
    for first in range(degree, -1, -1):
        for rest in _multi_indices(n - 1, degree - first):
            out.append((first,) + rest)
    return out


class JetSpace:
    """Multi-index bookkeeping for jets in ``n`` variables up to ``order``."""

    def __init__(self, n, order):
        if n < 1 or order < 0:
            raise ValueError("jet space needs n >= 1 and order >= 0")
        self.n = n
        self.order = order
        self.indices = [a for d in range(order + 1) for a in _multi_indices(n, d)]
        self.index = {a: k for k, a in enumerate(self.indices)}
        self.size = len(self.indices)
        self.degree = np.array([sum(a) for a in self.indices])
        self.factorial = np.array(
            [math.prod(math.factorial(ai) for ai in a) for a in self.indices], dtype=float
        )

        left, right, starts = [], [], []
        for a in self.indices:
            starts.append(len(left))
            for b in self.indices:
                if sum(b) > sum(a):
                    break
                if all(bi <= ai for bi, ai in zip(b, a)):
                    left.append(self.index[b])
                    right.append(self.index[tuple(ai - bi for ai, bi in zip(a, b))])
        self.mul_left = np.array(left)
        self.mul_right = np.array(right)
        self.mul_starts = np.array(starts)

        self._diff = {}
        if order > 0:
            lower = _multi_indices_upto(n, order - 1)
            for v in range(n):
                src = []
                fac = []
                for b in lower:
                    up = list(b)
                    up[v] += 1
                    src.append(self.index[tuple(up)])
                    fac.append(b[v] + 1.0)
                self._diff[v] = (np.array(src), np.array(fac))

    def __repr__(self):
        return f"JetSpace(n={self.n}, order={self.order})"


def _multi_indices_upto(n, order):
    return [a for d in range(order + 1) for a in _multi_indices(n, d)]


@lru_cache(maxsize=None)
def jet_space(n, order) -> JetSpace:
    return JetSpace(n, order)


def _expand(arr, ndim):
    """Reshape a per-coefficient vector so it broadcasts against ``(K, *shape)``."""
    return arr.reshape((-1,) + (1,) * ndim)


class Jet:
    """Array of truncated Taylor expansions, see module docstring."""

    __slots__ = ("space", "c", "seed")
    __array_priority__ = 1000

    def __init__(self, space, c, seed=False):
        self.space = space
        self.c = c
        self.seed = seed

    # --- basic properties ---------------------------------------------
    @property
    def n(self):
        return self.space.n

    @property
    def order(self):
        return self.space.order

    @property
    def shape(self):
        return self.c.shape[1:]

    @property
    def ndim(self):
        return self.c.ndim - 1

    @property
    def value(self):
        return self.c[0]

    def __len__(self):
        return self.c.shape[1]

    def __repr__(self):
        return f"Jet(n={self.n}, order={self.order}, shape={self.shape})"

    def derivative(self, alpha):
        """Partial derivative ``d^alpha`` at the expansion point (not divided by alpha!)."""
        k = self.space.index[tuple(alpha)]
        return self.c[k] * self.space.factorial[k]

    def derivatives(self):
        """All partial derivatives, shape ``(K, *shape)`` in multi-index order."""
        return self.c * _expand(self.space.factorial, self.ndim)

    # --- structural operations ----------------------------------------
    def truncate(self, order):
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        sp = jet_space(self.n, order)
        return Jet(sp, self.c[: sp.size])

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.space, self.c[(slice(None),) + key])

    def sum(self, axis=None):
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % self.ndim + 1 for a in axis)
        return Jet(self.space, self.c.sum(axis=axis))

    def transpose(self, *axes):
        """Permute the leading axes; unmentioned trailing (batch) axes stay put."""
        if len(axes) == 1 and isinstance(axes[0], tuple):
            axes = axes[0]
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        axes = tuple(axes) + tuple(range(len(axes), self.ndim))
        return Jet(self.space, self.c.transpose((0,) + tuple(a + 1 for a in axes)))

    def swapaxes(self, a, b):
        return Jet(self.space, np.swapaxes(self.c, a % self.ndim + 1, b % self.ndim + 1))

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.space, self.c.reshape((self.c.shape[0],) + tuple(shape)))

    def broadcast_to(self, shape):
        return Jet(self.space, np.broadcast_to(self.c, (self.c.shape[0],) + tuple(shape)).copy())

    def copy(self):
        return Jet(self.space, self.c.copy())

    # --- differentiation ----------------------------------------------
    def d(self, var):
        """Partial derivative in variable ``var``; the result has one order less."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.space._diff[var]
        return Jet(jet_space(self.n, self.order - 1), self.c[src] * _expand(fac, self.ndim))

    def grad(self):
        """Stack of partials with the derivative index as new leading axis."""
        return jstack([self.d(v) for v in range(self.n)], axis=0)

    # --- arithmetic ---------------------------------------------------
    def _match(self, other):
        if other.n != self.n:
            raise ValueError("jets over different numbers of variables")
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order)

    def _align(self, other):
        a, b = self._match(other)
        # a lower-rank operand is a scalar over the same batch: pad its leading tensor axes
        if a.ndim < b.ndim:
            a = Jet(a.space, a.c.reshape(a.c.shape[:1] + (1,) * (b.ndim - a.ndim) + a.shape))
        elif b.ndim < a.ndim:
            b = Jet(b.space, b.c.reshape(b.c.shape[:1] + (1,) * (a.ndim - b.ndim) + b.shape))
        return a, b

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.c + b.c)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        c = np.broadcast_to(self.c, (self.c.shape[0],) + shape).copy()
        c[0] += other
        return Jet(self.space, c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            sp = a.space
            prod = a.c[sp.mul_left] * b.c[sp.mul_right]
            return Jet(sp, np.add.reduceat(prod, sp.mul_starts, axis=0))
        return Jet(self.space, self.c * np.asarray(other, dtype=float))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise SingularEvaluation("division", "division by zero")
        return Jet(self.space, self.c / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        return power(self, p)


# --- constructors ------------------------------------------------------------


def seed(points, order):
    """Coordinate jets ``x_i + t_i`` at ``points`` (shape ``(n,)`` or ``(N, n)``).

    The result has shape ``(n,)`` or ``(n, N)`` and is flagged as a seed, i.e.
    its derivative information is the identity.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[-1]
    sp = jet_space(n, order)
    vals = np.moveaxis(pts, -1, 0)
    c = np.zeros((sp.size,) + vals.shape)
    c[0] = vals
    if order > 0:
        for v in range(n):
            c[1 + v, v] = 1.0
    return Jet(sp, c, seed=True)


def constant(space, value):
    value = np.asarray(value, dtype=float)
    c = np.zeros((space.size,) + value.shape)
    c[0] = value
    return Jet(space, c)


def _as_jet(x, like):
    if isinstance(x, Jet):
        return x
    return constant(like.space, x)


def jstack(jets, axis=0):
    jets = list(jets)
    ref = next((j for j in jets if isinstance(j, Jet)), None)
    if ref is None:
        raise ValueError("jstack needs at least one Jet")
    order = min(j.order for j in jets if isinstance(j, Jet))
    sp = jet_space(ref.n, order)
    shape = np.broadcast_shapes(*[np.shape(j.value) if isinstance(j, Jet) else np.shape(j) for j in jets])
    cs = []
    for j in jets:
        j = _as_jet(j, ref).truncate(order)
        cs.append(np.broadcast_to(j.c, (sp.size,) + shape))
    nd = len(shape) + 1
    return Jet(sp, np.stack(cs, axis=(axis % nd) + 1 if axis >= 0 else axis))


def _einsum_spec(spec):
    lhs, out = spec.split("->")
    ops = lhs.split(",")
    return ops, out


def jeinsum(spec, a, b):
    """Two-operand einsum over the tensor axes; batch axes ride along on ``...``.

    ``spec`` names only leading tensor axes, e.g. ``"ij,jk->ik"``; any
    remaining (batch) axes are matched by broadcasting.
    """
    (sa, sb), out = _einsum_spec(spec)
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = a._match(b)
        sp = a.space
        full = f"Z{sa}...,Z{sb}...->Z{out}..."
        prod = np.einsum(full, a.c[sp.mul_left], b.c[sp.mul_right])
        return Jet(sp, np.add.reduceat(prod, sp.mul_starts, axis=0))
    if isinstance(a, Jet):
        return Jet(a.space, np.einsum(f"Z{sa}...,{sb}...->Z{out}...", a.c, np.asarray(b, float)))
    if isinstance(b, Jet):
        return Jet(b.space, np.einsum(f"{sa}...,Z{sb}...->Z{out}...", np.asarray(a, float), b.c))
    return np.einsum(f"{sa}...,{sb}...->{out}...", a, b)


def compose(F, X):
    """Re-expand ``F`` (computed at seeds placed at ``X.value``) along the jets ``X``.

    Implements the chain rule for arbitrary inner jets: the result equals
    ``sum_a F_a * prod_i (X_i - X_i(0))^{a_i}`` truncated to ``X.order``.
    """
    order = X.order
    if F.order < order:
        raise ValueError("outer jet order too low for composition")
    sp = jet_space(X.n, order)
    batch = X.shape[1:]
    tshape = F.shape[: F.ndim - len(batch)]
    delta = [X[i] - X[i].value for i in range(X.shape[0])]
    mono = {sp.indices[0]: constant(sp, np.ones(batch))}
    total = np.zeros((sp.size,) + F.shape)
    expand = (sp.size,) + (1,) * len(tshape) + tuple(batch)
    for k, a in enumerate(sp.indices):
        if k > 0:
            v = next(i for i, ai in enumerate(a) if ai > 0)
            lower = list(a)
            lower[v] -= 1
            mono[a] = mono[tuple(lower)] * delta[v]
        total = total + F.c[k][None] * mono[a].c.reshape(expand)
    return Jet(sp, total)


# --- univariate function composition -------------------------------------------


def _apply_series(u, coeffs):
    """Evaluate ``sum_m coeffs[m] * (u - u0)^m`` with Horner's scheme."""
    J = u.order
    d = Jet(u.space, u.c.copy())
    d.c[0] = 0.0
    res = constant(u.space, coeffs[J])
    for m in range(J - 1, -1, -1):
        res = res * d
        res.c[0] += coeffs[m]
    return res


def _fact(J, ndim):
    return _expand(np.array([math.factorial(m) for m in range(J + 1)], float), ndim)


def _m(J, ndim):
    return _expand(np.arange(J + 1, dtype=float), ndim)


def _series_exp(u0, J):
    return np.exp(u0)[None] / _fact(J, u0.ndim) * np.ones((J + 1,) + u0.shape)


def _series_sin(u0, J):
    return np.sin(u0[None] + _m(J, u0.ndim) * (np.pi / 2)) / _fact(J, u0.ndim)


def _series_cos(u0, J):
    return np.cos(u0[None] + _m(J, u0.ndim) * (np.pi / 2)) / _fact(J, u0.ndim)


def _series_sinh(u0, J):
    even = (np.arange(J + 1) % 2 == 0).reshape((-1,) + (1,) * u0.ndim)
    return np.where(even, np.sinh(u0)[None], np.cosh(u0)[None]) / _fact(J, u0.ndim)


def _series_cosh(u0, J):
    even = (np.arange(J + 1) % 2 == 0).reshape((-1,) + (1,) * u0.ndim)
    return np.where(even, np.cosh(u0)[None], np.sinh(u0)[None]) / _fact(J, u0.ndim)


def _series_log(u0, J):
    out = np.empty((J + 1,) + u0.shape)
    out[0] = np.log(u0)
    for m in range(1, J + 1):
        out[m] = (-1.0) ** (m + 1) / (m * u0**m)
    return out


def _series_pow(u0, J, p):
    out = np.empty((J + 1,) + u0.shape)
    out[0] = u0**p
    for m in range(1, J + 1):
        out[m] = out[m - 1] * (p - m + 1) / m / u0
    return out


def _univariate(u0, J):
    """A one-variable seed jet ``u0 + t`` used to derive series of composite functions."""
    sp = jet_space(1, J)
    c = np.zeros((sp.size,) + u0.shape)
    c[0] = u0
    if J > 0:
        c[1] = 1.0
    return Jet(sp, c)


def _check(u, bad, fname, why):
    if np.any(bad):
        raise SingularEvaluation(fname, why)


def exp(u):
    return _apply_series(u, _series_exp(u.value, u.order))


def log(u):
    _check(u, u.value <= 0, "log", "logarithm of a non-positive number")
    return _apply_series(u, _series_log(u.value, u.order))


def sin(u):
    return _apply_series(u, _series_sin(u.value, u.order))


def cos(u):
    return _apply_series(u, _series_cos(u.value, u.order))


def sinh(u):
    return _apply_series(u, _series_sinh(u.value, u.order))


def cosh(u):
    return _apply_series(u, _series_cosh(u.value, u.order))


def reciprocal(u):
    _check(u, u.value == 0, "division", "division by zero")
    return _apply_series(u, _series_pow(u.value, u.order, -1.0))


def power(u, p):
    """``u ** p`` for a real constant exponent."""
    p = float(p)
    if p == int(p) and p >= 0:
        k = int(p)
        result = constant(u.space, np.ones(u.shape))
        base = u
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result
    if p == int(p):
        return power(reciprocal(u), -p)
    _check(u, u.value < 0, "power", f"non-integer power {p} of a negative number")
    if u.order > 0:
        _check(u, u.value == 0, "power", f"non-integer power {p} at zero is not differentiable")
    return _apply_series(u, _series_pow(u.value, u.order, p))


def sqrt(u):
    _check(u, u.value < 0, "sqrt", "square root of a negative number")
    if u.order > 0:
        _check(u, u.value == 0, "sqrt", "square root at zero is not differentiable")
    return _apply_series(u, _series_pow(u.value, u.order, 0.5))


def tan(u):
    _check(u, np.cos(u.value) == 0, "tan", "tangent pole")
    t = _univariate(u.value, u.order)
    return _apply_series(u, (sin(t) / cos(t)).c)


def tanh(u):
    t = _univariate(u.value, u.order)
    return _apply_series(u, (sinh(t) / cosh(t)).c)


def atan(u):
    J = u.order
    coeffs = np.empty((J + 1,) + u.shape)
    coeffs[0] = np.arctan(u.value)
    if J > 0:
        t = _univariate(u.value, J - 1)
        w = reciprocal(t * t + 1.0)
        for m in range(1, J + 1):
            coeffs[m] = w.c[m - 1] / m
    return _apply_series(u, coeffs)


def asinh(u):
    return log(u + sqrt(u * u + 1.0))


def atan2(y, x):
    """Angle of ``x + i y`` with derivatives; the branch follows ``np.arctan2`` at the base point."""
    y0, x0 = y.value, x.value
    _check(x, (x0 == 0) & (y0 == 0), "atan2", "angle of the origin")
    num = y * x0 - x * y0
    den = x * x0 + y * y0
    base = np.arctan2(y0, x0)
    return atan(num / den) + base


def _series_cosh_sqrt(u0, J, kmax=40):
    # sum_k (u0 + t)^k / (2k)!  -> coefficient of t^m is sum_k C(k, m) u0^(k-m) / (2k)!
    out = np.zeros((J + 1,) + u0.shape)
    for m in range(J + 1):
        for k in range(m, kmax):
            out[m] += math.comb(k, m) * u0 ** (k - m) / math.factorial(2 * k)
    return out


def _series_sinhc_sqrt(u0, J, kmax=40):
    out = np.zeros((J + 1,) + u0.shape)
    for m in range(J + 1):
        for k in range(m, kmax):
            out[m] += math.comb(k, m) * u0 ** (k - m) / math.factorial(2 * k + 1)
    return out


def _entire_sqrt_function(u, small_series, closed_form):
    u0 = u.value
    _check(u, u0 < 0, "sqrt-entire", "negative argument")
    small = u0 < 1.0
    coeffs = small_series(np.where(small, u0, 0.0), u.order)
    if not np.all(small):
        t = _univariate(np.where(small, 1.0, u0), u.order)
        big = closed_form(t).c
        coeffs = np.where(small[None], coeffs, big)
    return _apply_series(u, coeffs)


def cosh_sqrt(u):
    """``cosh(sqrt(u))`` as an entire function of ``u >= 0``."""
    return _entire_sqrt_function(u, _series_cosh_sqrt, lambda t: cosh(sqrt(t)))


def sinhc_sqrt(u):
    """``sinh(sqrt(u)) / sqrt(u)`` as an entire function of ``u >= 0`` (1 at u=0)."""
    return _entire_sqrt_function(u, _series_sinhc_sqrt, lambda t: sinh(sqrt(t)) / sqrt(t))
