"""Tensor fields on a single chart, evaluated on coordinate jets.

A field is a callable ``field(X) -> Jet`` where ``X`` holds coordinate jets of
shape ``(n, *batch)``; the result has shape ``(n,)*rank + batch``.  Covariant
tensors (metrics, perturbations, 1-forms) and vector fields share this class;
``vector=True`` marks a contravariant rank-1 field.

Fields built from expressions can be evaluated on *any* coordinate jets, which
makes composition with a map ``x -> Psi(x)`` a plain evaluation.  Fields that
differentiate internally (pullbacks, Lie derivatives) declare ``loss > 0``:
they are computed on fresh seeds ``loss`` orders higher and, if the caller's
jets are not seeds, re-expanded through :func:`jets.compose`.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import jets
from .expr import Expression, parse

__all__ = [
    "TensorField",
    "scalar_field",
    "tensor_field",
    "vector_field",
    "covector_field",
    "constant_field",
    "zero_field",
    "points_of",
]


def points_of(X):
    """Base points of coordinate jets, as an ``(*batch, n)`` array."""
    return np.moveaxis(X.value, 0, -1)


class TensorField:
    def __init__(self, n, rank, fn, *, vector=False, symmetry=None, loss=0, label=""):
        if vector and rank != 1:
            raise ValueError("vector fields have rank 1")
        self.n = n
        self.rank = rank
        self.fn = fn
        self.vector = vector
        self.symmetry = symmetry
        self.loss = loss
        self.label = label

    def __repr__(self):
        kind = "vector" if self.vector else f"rank-{self.rank}"
        return f"TensorField({kind}, n={self.n}{', ' + self.label if self.label else ''})"

    def __call__(self, X):
        if self.loss == 0:
            out = self.fn(X)
        else:
            order = X.order
            pts = points_of(X)
            F = self.fn(jets.seed(pts, order + self.loss)).truncate(order)
            out = F if X.seed else jets.compose(F, X)
        return out

    def at(self, points, order=0):
        """Jets of the components at ``points`` (tensor axes first, batch last)."""
        return self(jets.seed(points, order))

    def values(self, points):
        return self.at(points, 0).value

    def check_symmetry(self, points, tol=1e-12):
        """Spot-check the declared symmetry tag at ``points``."""
        if self.symmetry is None:
            return True
        i, j = self.symmetry[1]
        v = self.values(points)
        w = np.swapaxes(v, i, j)
        sign = 1.0 if self.symmetry[0] == "symmetric" else -1.0
        scale = max(1.0, float(np.max(np.abs(v))))
        return bool(np.max(np.abs(v - sign * w)) <= tol * scale)

    # --- algebra --------------------------------------------------------
    def _compatible(self, other):
        if (self.n, self.rank, self.vector) != (other.n, other.rank, other.vector):
            raise ValueError(f"incompatible fields {self!r} and {other!r}")

    def __add__(self, other):
        self._compatible(other)
        sym = self.symmetry if self.symmetry == other.symmetry else None
        return TensorField(
            self.n,
            self.rank,
            lambda X: self(X) + other(X),
            vector=self.vector,
            symmetry=sym,
            label=f"({self.label}+{other.label})",
        )

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, a):
        """Multiply by a constant or by a scalar field."""
        if isinstance(a, TensorField):
            if a.rank != 0:
                raise ValueError("can only scale by a scalar field")
            return TensorField(
                self.n,
                self.rank,
                lambda X: self(X) * a(X),
                vector=self.vector,
                symmetry=self.symmetry,
                label=f"{a.label}*{self.label}",
            )
        a = float(a)
        return TensorField(
            self.n,
            self.rank,
            lambda X: self(X) * a,
            vector=self.vector,
            symmetry=self.symmetry,
            label=f"{a:g}*{self.label}",
        )

    def __mul__(self, a):
        return self.scale(a)

    __rmul__ = __mul__

    def compose(self, mapping, n_source=None):
        """Components evaluated at ``mapping(X)`` without any Jacobian factors."""
        return TensorField(
            n_source or self.n,
            self.rank,
            lambda X: self(mapping(X)),
            vector=self.vector,
            symmetry=self.symmetry,
            label=f"{self.label}o(map)",
        )


def _to_expression(item, n, params, chart):
    if isinstance(item, Expression):
        return item
    if isinstance(item, (int, float)):
        return parse(repr(float(item)), n)
    return parse(str(item), n, params, chart)


def _evaluate_components(exprs, X):
    """Evaluate a nested ndarray of expressions, sharing duplicates."""
    cache = {}
    flat = []
    for e in exprs.flat:
        key = id(e)
        if key not in cache:
            cache[key] = e.evaluate(X)
        flat.append(cache[key])
    stacked = jets.jstack(flat, axis=0)
    return stacked.reshape(exprs.shape + tuple(X.shape[1:]))


def scalar_field(text, n, params=None, chart="cartesian", label=None):
    e = _to_expression(text, n, params, chart)
    return TensorField(n, 0, e.evaluate, label=label or str(e))


def tensor_field(components, n, params=None, chart="cartesian", symmetric=None, label=""):
    """Covariant field from a nested list of expressions (rank = nesting depth).

    For rank 2 with ``symmetric=True`` (the default when the input is a square
    matrix), the upper triangle is used and mirrored.
    """
    arr = np.empty(np.shape(np.array(components, dtype=object)), dtype=object)
    src = np.array(components, dtype=object)
    if any(s != n for s in src.shape):
        raise ValueError(f"components must have shape {(n,) * src.ndim}, got {src.shape}")
    for idx in itertools.product(range(n), repeat=src.ndim):
        arr[idx] = _to_expression(src[idx], n, params, chart)
    rank = src.ndim
    if symmetric is None:
        symmetric = rank == 2
    if symmetric and rank == 2:
        for i in range(n):
            for j in range(i):
                arr[i, j] = arr[j, i]
    sym = ("symmetric", (0, 1)) if symmetric and rank == 2 else None
    return TensorField(n, rank, lambda X: _evaluate_components(arr, X), symmetry=sym, label=label)


def vector_field(components, n, params=None, chart="cartesian", label=""):
    arr = np.empty(n, dtype=object)
    if len(components) != n:
        raise ValueError(f"vector field needs {n} components")
    for i, c in enumerate(components):
        arr[i] = _to_expression(c, n, params, chart)
    return TensorField(n, 1, lambda X: _evaluate_components(arr, X), vector=True, label=label)


def covector_field(components, n, params=None, chart="cartesian", label=""):
    f = tensor_field(list(components), n, params, chart, symmetric=False, label=label)
    return f


def constant_field(array, vector=False, label="const"):
    array = np.asarray(array, dtype=float)
    n = array.shape[0] if array.ndim else None
    rank = array.ndim

    def fn(X):
        batch = X.shape[1:]
        val = np.broadcast_to(array.reshape(array.shape + (1,) * len(batch)), array.shape + batch)
        return jets.constant(X.space, val)

    return TensorField(n if n is not None else 0, rank, fn, vector=vector, label=label)


def zero_field(n, rank, vector=False):
    def fn(X):
        return jets.constant(X.space, np.zeros((n,) * rank + X.shape[1:]))

    return TensorField(n, rank, fn, vector=vector, label="0")
