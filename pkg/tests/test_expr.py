import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asympcharge import jets
from asympcharge.errors import ArityMismatch, DimensionExceeded, ExprSyntaxError, SingularEvaluation, UnknownIdentifier
from asympcharge.expr import BinOp, Const, Var, eval_jet, parse, to_text


def test_simple_tree():
    e = parse("x1 + 2*x2", 3)
    assert isinstance(e.ast, BinOp) and e.ast.op == "+"
    assert isinstance(e.ast.left, Var) and e.ast.left.index == 1
    right = e.ast.right
    assert isinstance(right, BinOp) and right.op == "*"
    assert isinstance(right.left, Const) and right.left.value == 2.0
    assert isinstance(right.right, Var) and right.right.index == 2


def test_radius_sugar_with_parameter():
    e = parse("(1 + m/(2*r))^4", 3, {"m": 1.0})
    J = eval_jet(e, [3.0, 4.0, 0.0], 1)
    r = 5.0
    assert J.value == pytest.approx((1 + 1 / (2 * r)) ** 4, rel=1e-15)
    dphi = 4 * (1 + 1 / (2 * r)) ** 3 * (-1 / (2 * r**2))
    assert J.derivative((1, 0, 0)) == pytest.approx(dphi * 3 / r, rel=1e-14)


def test_dimension_exceeded():
    with pytest.raises(DimensionExceeded):
        parse("x4", 3)


def test_product_jet():
    J = eval_jet(parse("x1*x2", 3), [3.0, 5.0, 0.0], 2)
    assert J.value == 15
    assert J.derivative((1, 0, 0)) == 5 and J.derivative((0, 1, 0)) == 3
    assert J.derivative((1, 1, 0)) == 1
    for a in [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 0, 1), (0, 1, 1)]:
        assert J.derivative(a) == 0


def test_inverse_radius():
    J = eval_jet(parse("1/r", 3), [1.0, 0.0, 0.0], 1)
    assert J.value == 1
    assert J.derivative((1, 0, 0)) == pytest.approx(-1)
    assert J.derivative((0, 1, 0)) == 0 and J.derivative((0, 0, 1)) == 0


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x1 +", 3)
    assert info.value.position == 4


@pytest.mark.parametrize("text, exc", [("foo + 1", UnknownIdentifier), ("sin(x1, x2)", ArityMismatch), ("sin", ArityMismatch), ("", ExprSyntaxError), ("(x1", ExprSyntaxError)])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse(text, 3)


def test_precedence():
    at = np.array([2.0, 3.0, 5.0])
    val = lambda t: float(eval_jet(parse(t, 3), at, 0).value)
    assert val("-x1^2") == -4
    assert val("2^3^2") == 512
    assert val("x3/x2/x1") == pytest.approx(5 / 3 / 2)
    assert val("x3-x2-x1") == 0
    assert val("x1*x2^2") == 18
    assert val("x1**2") == 4


@pytest.mark.parametrize("text, point, why", [("log(x1)", [-1.0, 1, 1], "log"), ("1/r", [0.0, 0, 0], "r"), ("sqrt(x1)", [-2.0, 0, 1], "sqrt"), ("1/x2", [1.0, 0, 1], "div")])
def test_singular(text, point, why):
    with pytest.raises(SingularEvaluation):
        eval_jet(parse(text, 3), point, 1)


# --- independent oracle: exact monomial differentiation ----------------------------


def _poly_text(poly):
    terms = []
    for exps, coef in poly:
        factors = [f"x{i + 1}^{k}" for i, k in enumerate(exps) if k]
        terms.append("*".join([f"({coef})"] + factors))
    return " + ".join(terms) if terms else "0"


def _poly_derivative(poly, alpha, point):
    """d^alpha of sum coef x^exps at point, by exact exponent arithmetic."""
    total = Fraction(0)
    for exps, coef in poly:
        c = Fraction(coef)
        keep = True
        new = []
        for e, a in zip(exps, alpha):
            if a > e:
                keep = False
                break
            c *= math.perm(e, a)
            new.append(e - a)
        if keep:
            term = c
            for x, k in zip(point, new):
                term *= Fraction(x) ** k
            total += term
    return float(total)


monomial = st.tuples(st.tuples(*[st.integers(0, 3)] * 3), st.integers(-5, 5))
small = st.integers(-6, 6).map(lambda k: k / 4)


@settings(max_examples=60, deadline=None)
@given(st.lists(monomial, min_size=1, max_size=6), st.tuples(small, small, small))
def test_polynomial_jets_match_exact_differentiation(poly, point):
    expr = parse(_poly_text(poly), 3)
    J = eval_jet(expr, list(point), 3)
    for alpha in J.space.indices:
        want = _poly_derivative(poly, alpha, point)
        assert J.derivative(alpha) == pytest.approx(want, rel=1e-12, abs=1e-10)


# --- catalog functions against finite differences ----------------------------------

CATALOG = ["sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan"]


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_vs_finite_differences(name):
    text = f"{name}(0.3*x1 + 0.2*x2*x2 + 1.1)"
    e = parse(text, 3)
    p = np.array([0.4, -0.3, 0.7])
    J = eval_jet(e, p, 2)
    f = lambda q: float(eval_jet(e, q, 0).value)
    h = 1e-4
    I = np.eye(3)
    for i in range(3):
        fd = (f(p + h * I[i]) - f(p - h * I[i])) / (2 * h)
        assert J.derivative(tuple(I[i].astype(int))) == pytest.approx(fd, abs=1e-5)
        for j in range(3):
            fd2 = (f(p + h * I[i] + h * I[j]) - f(p + h * I[i] - h * I[j]) - f(p - h * I[i] + h * I[j]) + f(p - h * I[i] - h * I[j])) / (4 * h * h)
            a = tuple((I[i] + I[j]).astype(int))
            assert J.derivative(a) == pytest.approx(fd2, abs=1e-5)


# --- parse / print idempotence ---------------------------------------------------

atoms = st.sampled_from(["x1", "x2", "x3", "r", "2", "0.5", "m"])


def _combine(children):
    binary = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})")
    unary = children.map(lambda c: f"-{c}")
    call = st.tuples(st.sampled_from(CATALOG), children).map(lambda t: f"{t[0]}({t[1]})")
    return binary | unary | call


@settings(max_examples=150, deadline=None)
@given(st.recursive(atoms, _combine, max_leaves=8))
def test_print_parse_idempotent(text):
    params = {"m": 1.5}
    once = parse(text, 3, params)
    printed = to_text(once)
    again = parse(printed, 3, params)
    assert to_text(again) == printed


def test_batch_evaluation_matches_pointwise():
    e = parse("sin(x1)*exp(-x2^2) + x3^3/(1+r^2)", 3)
    pts = np.random.default_rng(3).normal(size=(7, 3))
    Jb = eval_jet(e, pts, 2)
    for k in range(7):
        Jp = eval_jet(e, pts[k], 2)
        np.testing.assert_allclose(Jb.c[:, k], Jp.c, rtol=1e-14, atol=1e-15)


def test_polar_chart_radius_is_first_coordinate():
    e = parse("r*sin(x2)", 3, chart="polar")
    assert float(eval_jet(e, [2.0, math.pi / 2, 0.0], 0).value) == pytest.approx(2.0)
