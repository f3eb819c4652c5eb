"""Standard data sets: Schwarzschild slices, a Kottler-like hyperbolic perturbation,
and smooth vector fields of prescribed decay."""

from __future__ import annotations

from .backgrounds import flat
from .charge import Perturbation
from .fields import scalar_field, tensor_field, vector_field


def _radius_text(center, n):
    return "(" + "+".join(f"(x{i + 1}-{float(c)!r})^2" for i, c in enumerate(center)) + f")^0.5" if any(center) else "r"


def schwarzschild(m=1.0, center=None, n=3, background=None):
    """Isotropic slice ``(1 + m/(2|x-c|))^4 delta`` as a perturbation of flat space (n = 3)."""
    if n != 3:
        raise ValueError("the isotropic Schwarzschild slice is written for n = 3")
    bg = background or flat(3)
    c = [0.0] * 3 if center is None else [float(v) for v in center]
    R = _radius_text(c, 3)
    phi = scalar_field(f"(1+{float(m)!r}/(2*{R}))^4", 3)
    gdot = bg.metric.scale(phi) - bg.metric
    gdot.symmetry = ("symmetric", (0, 1))
    gdot.label = f"schwarzschild(m={m:g}, c={tuple(c)})"
    return Perturbation(gdot, None, gdot.label)


def kottler_like(m=1.0, dipole=(0.3, 0.2, 0.1)):
    """Polar-chart perturbation of hyperbolic 3-space with only an rr component,

    ``e_rr = 2 m (1 + d.xi) / sinh r / (cosh^2 r - 2 m / sinh r)``;

    it decays like ``exp(-3 r)`` in the background norm.  Its V(0) charge is
    ``16 pi m`` and its V(i) charges are ``16 pi m d_i / 3``.
    """
    d = [float(v) for v in dipole]
    xi = ["cos(x2)", "sin(x2)*cos(x3)", "sin(x2)*sin(x3)"]
    aniso = "(1+" + "+".join(f"{d[i]!r}*{xi[i]}" for i in range(3)) + ")"
    err = f"2*{float(m)!r}*{aniso}/sinh(x1)/(cosh(x1)^2-2*{float(m)!r}/sinh(x1))"
    comps = [[err, "0", "0"], ["0", "0", "0"], ["0", "0", "0"]]
    return Perturbation(tensor_field(comps, 3, chart="polar", label="kottler-like"), None, "kottler-like")


def decaying_zeta(tau, amplitude=0.3, parity="even"):
    """Non-gradient, non-Killing vector field on flat R^3 of size O(r^(1 - tau)).

    ``even``: quadratic polynomial times ``(1+r^2)^(-(tau+1)/2)``;
    ``odd``: cubic polynomial times ``(1+r^2)^(-(tau+2)/2)``.
    """
    a = float(amplitude)
    if parity == "even":
        w = f"(1+x1^2+x2^2+x3^2)^(-{(tau + 1) / 2!r})"
        polys = ["x2*x3", "x1^2", "x1*x2+x3^2"]
    elif parity == "odd":
        w = f"(1+x1^2+x2^2+x3^2)^(-{(tau + 2) / 2!r})"
        polys = ["x2*x3^2", "x1^3", "x1*x2*x3+x3^3"]
    else:
        raise ValueError("parity must be 'even' or 'odd'")
    comps = [f"{a!r}*({p})*{w}" for p in polys]
    return vector_field(comps, 3, label=f"zeta({parity}, tau={tau:g}, a={a:g})")


__all__ = ["schwarzschild", "kottler_like", "decaying_zeta"]
