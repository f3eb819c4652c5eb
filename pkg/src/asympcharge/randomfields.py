"""Random quadratic test fields, one independent draw per batch row.

Each field is a polynomial of degree <= 2 in the ambient coordinates ``y``
(the chart itself on flat space, ``sinh r xi`` on hyperbolic space) with a
coefficient array whose last axis indexes draws.  The field must be
evaluated on jets whose first batch axis has the same length, or length 1
coefficients broadcast over any batch.  Covariant components are pulled back
from ``dy``; vectors are the g0-duals of the pulled-back 1-forms, so every
field is smooth on the whole chart domain.
"""

from __future__ import annotations

import numpy as np

from . import jets
from .fields import TensorField


def monomial_count(n):
    return 1 + n + n * (n + 1) // 2


def _monomials(Y):
    n = Y.shape[0]
    one = jets.constant(Y.space, np.ones(Y.shape[1:]))
    out = [one] + [Y[i] for i in range(n)]
    out += [Y[i] * Y[j] for i in range(n) for j in range(i, n)]
    return out


def _contract(coef, mons, batch_ndim):
    """sum_m coef[m, D] mon_m with D aligned to the first batch axis."""
    pad = (1,) * (batch_ndim - 1)
    total = None
    for m, mon in enumerate(mons):
        term = mon * coef[m].reshape(coef[m].shape + pad)
        total = term if total is None else total + term
    return total


def _frame(background, X):
    return None if background.kind == "flat" else background.ambient_frame(X)


def batched_scalar_field(background, coef, label="f(draws)"):
    """``coef`` has shape ``(M, D)``."""

    def fn(X):
        return _contract(coef, _monomials(background.ambient(X)), X.ndim - 1)

    return TensorField(background.n, 0, fn, label=label)


def batched_covector_field(background, coef, label="w(draws)"):
    """``coef`` has shape ``(n, M, D)``: the 1-form ``w_j dy^j`` in chart components."""
    n = background.n

    def fn(X):
        mons = _monomials(background.ambient(X))
        w = jets.jstack([_contract(coef[j], mons, X.ndim - 1) for j in range(n)])
        F = _frame(background, X)
        return w if F is None else jets.jeinsum("aj,j->a", F, w)

    return TensorField(n, 1, fn, label=label)


def batched_vector_field(background, coef, label="zeta(draws)"):
    """g0-dual of :func:`batched_covector_field` (the identity map on flat space)."""
    n = background.n
    cov = batched_covector_field(background, coef)

    def fn(X):
        w = cov(X)
        if background.kind == "flat":
            return w
        g = background.metric(X)
        return jets.jstack([w[a] / g[a, a] for a in range(n)])

    return TensorField(n, 1, fn, vector=True, label=label)


def batched_tensor_field(background, coef, label="e(draws)"):
    """Symmetric 2-tensor; ``coef`` has shape ``(n, n, M, D)`` (symmetrized here)."""
    n = background.n
    coef = 0.5 * (coef + np.swapaxes(coef, 0, 1))

    def fn(X):
        mons = _monomials(background.ambient(X))
        T = jets.jstack([jets.jstack([_contract(coef[j, k], mons, X.ndim - 1) for k in range(n)]) for j in range(n)])
        F = _frame(background, X)
        if F is None:
            return T
        return jets.jeinsum("aj,jb->ab", F, jets.jeinsum("jk,bk->jb", T, F))

    return TensorField(n, 2, fn, symmetry=("symmetric", (0, 1)), label=label)


def monomial_scales(background, r_hi):
    """Per-monomial weights that keep every monomial O(1) for r <= r_hi."""
    n = background.n
    s = max(1.0, np.sinh(r_hi)) if background.kind == "hyperbolic" else max(1.0, r_hi)
    return np.array([1.0] + [1.0 / s] * n + [1.0 / s**2] * (monomial_count(n) - 1 - n))


def random_coefficients(rng, shape, background, r_hi, amplitude):
    """Uniform[-1, 1] coefficients of shape ``shape + (M, D)``, scaled per monomial and per draw."""
    M = monomial_count(background.n)
    amplitude = np.asarray(amplitude, dtype=float)
    D = amplitude.size
    c = rng.uniform(-1.0, 1.0, size=tuple(shape) + (M, D))
    return c * monomial_scales(background, r_hi)[:, None] * amplitude.reshape(-1)
