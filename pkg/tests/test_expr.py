import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contact3.expr import (Add, Const, Cos, Div, DomainError, Exp, Ln, Mul, Neg, ParseError, Pow, Sin, Sqrt,
                           Sub, Symbol, UnknownIdentifierError, Compiled, diff, eval_expr, free_symbols, parse,
                           render, simplify, substitute)

x, y, z = Symbol("x"), Symbol("y"), Symbol("z")
C = Const

# (text, expected tree)
GOLDEN = [
    ("2*x*z - 1", Sub(Mul(Mul(C(2), x), z), C(1))),
    ("ln(z)", Ln(z)),
    ("x", x),
    ("42", C(42)),
    ("3.5", C(3.5)),
    ("1e-3", C(1e-3)),
    ("2.5E+2", C(250)),
    ("x + y + z", Add(Add(x, y), z)),
    ("x - y - z", Sub(Sub(x, y), z)),
    ("x - (y - z)", Sub(x, Sub(y, z))),
    ("x * y / z", Div(Mul(x, y), z)),
    ("x / y / z", Div(Div(x, y), z)),
    ("x / (y / z)", Div(x, Div(y, z))),
    ("x + y * z", Add(x, Mul(y, z))),
    ("(x + y) * z", Mul(Add(x, y), z)),
    ("x^2", Pow(x, 2)),
    ("x^2^3", Pow(x, 8)),
    ("2^3^2", Pow(C(2), 9)),
    ("-x^2", Neg(Pow(x, 2))),
    ("(-x)^2", Pow(Neg(x), 2)),
    ("--x", Neg(Neg(x))),
    ("-x * y", Mul(Neg(x), y)),
    ("x * -y", Mul(x, Neg(y))),
    ("x^-2", Pow(x, -2)),
    ("x^(1+1)", Pow(x, 2)),
    ("z^0.5", Exp(Mul(C(0.5), Ln(z)))),
    ("sqrt(x^2 + 1)", Sqrt(Add(Pow(x, 2), C(1)))),
    ("exp(-z)", Exp(Neg(z))),
    ("sin(x) * cos(y)", Mul(Sin(x), Cos(y))),
    ("ln(ln(z))", Ln(Ln(z))),
    ("  x   +\ty ", Add(x, y)),
    ("2*x*z - (2*z + y)/(2*z)", Sub(Mul(Mul(C(2), x), z), Div(Add(Mul(C(2), z), y), Mul(C(2), z)))),
    ("1 - 1/z^2", Sub(C(1), Div(C(1), Pow(z, 2)))),
]

ERRORS = [
    ("2*", "unexpected end of input", 3),
    ("", "empty expression", 1),
    ("x +* y", "unexpected '*'", 4),
    ("(x + y", "expected ')', found end of input", 7),
    ("x + y)", "unexpected token ')'", 6),
    ("ln x", "expected '(', found 'x'", 4),
    ("x^y", "exponent must be constant", 3),
    ("2 $ 3", None, 3),
    ("sin()", "unexpected ')'", 5),
    ("x y", "unexpected token 'y'", 3),
]


@pytest.mark.parametrize("text,tree", GOLDEN, ids=[g[0] for g in GOLDEN])
def test_golden_parse(text, tree):
    assert parse(text) is tree


@pytest.mark.parametrize("text,message,pos", ERRORS, ids=[e[0] or "<empty>" for e in ERRORS])
def test_golden_errors(text, message, pos):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.position == pos
    if message:
        assert info.value.message == message


def test_unknown_identifier_is_reported_with_position():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("x + w")
    assert info.value.position == 5


def test_custom_coordinates_and_definitions():
    e = parse("a1 + x3", ("x1", "x2", "x3"), {"a1": parse("2*x2", ("x1", "x2", "x3"))})
    assert free_symbols(e) == {"x2", "x3"}
    with pytest.raises(UnknownIdentifierError):
        parse("x", ("x1", "x2", "x3"))


def test_structural_equality_is_identity():
    assert parse("x*y + 1") is parse("x * y + 1")
    assert parse("x*y") is not parse("y*x")


def test_eval_examples():
    assert eval_expr(parse("2*x*z-1"), (1, 0, 2)) == 3
    assert eval_expr(parse("ln(z)"), (0, 0, math.e)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("text,point", [("1/z", (0, 0, 0)), ("ln(z)", (0, 0, -1)), ("sqrt(z)", (0, 0, -1)),
                                        ("ln(z)", (0, 0, 0)), ("x^-1", (0, 1, 1))])
def test_domain_errors(text, point):
    with pytest.raises(DomainError) as info:
        eval_expr(parse(text), point)
    assert info.value.subtree is not None


def test_domain_error_names_offending_points():
    c = Compiled(parse("1/y"), ("x", "y", "z"))
    with pytest.raises(DomainError) as info:
        c(np.array([[0, 1, 0], [0, 0, 0], [0, 2, 0]], dtype=float))
    assert info.value.indices == (1,)
    assert render(info.value.subtree) == "1/y"


def test_diff_examples():
    assert simplify(diff(parse("x^2*y"), "x")) is simplify(parse("2*x*y"))
    d = diff(parse("ln(z)"), "z")
    assert eval_expr(d, (0, 0, 4)) == 0.25
    assert simplify(diff(parse("-2*y + 7"), "x")) is Const(0)


def test_simplify_examples():
    assert simplify(parse("0*x + 1*z")) is z
    assert simplify(parse("2*3")) is Const(6)
    assert simplify(parse("x + y")) is parse("x + y")
    assert simplify(parse("--x")) is x
    assert simplify(parse("x^1")) is x


def test_substitute():
    e = substitute(parse("x*y + z"), {"y": parse("2")})
    assert eval_expr(e, (3, 100, 1)) == 7


# ---------------------------------------------------------------- property tests

_leaves = st.one_of(st.sampled_from([x, y, z]), st.integers(0, 9).map(lambda v: Const(float(v))),
                    st.sampled_from([0.5, 1.25, 3.0, 1e-3]).map(Const))


def _extend(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(Add, children, children),
        st.builds(Sub, children, children),
        st.builds(Mul, children, children),
        st.builds(Div, children, children),
        st.builds(Pow, children, st.integers(-3, 4)),
        st.builds(Sin, children),
        st.builds(Cos, children),
        st.builds(Exp, children),
        st.builds(Ln, children),
        st.builds(Sqrt, children),
    )


trees = st.recursive(_leaves, _extend, max_leaves=24)


def _depth(e):
    kids = [getattr(e, a) for a in ("arg", "left", "right", "base") if isinstance(getattr(e, a, None), type(x).__mro__[1])]
    return 1 + max((_depth(k) for k in kids), default=0)


@settings(max_examples=1000, deadline=None)
@given(trees)
def test_render_parse_round_trip(e):
    if _depth(e) > 8:
        return
    assert parse(render(e)) is e


# smooth trees for numerical properties
_smooth_leaf = st.one_of(st.sampled_from([x, y, z]), st.integers(1, 5).map(lambda v: Const(float(v))))
smooth = st.recursive(_smooth_leaf, lambda c: st.one_of(
    st.builds(Add, c, c), st.builds(Sub, c, c), st.builds(Mul, c, c), st.builds(Sin, c),
    st.builds(Cos, c), st.builds(Pow, c, st.integers(0, 3)), st.builds(Neg, c)), max_leaves=8)
pts = st.tuples(*[st.floats(-1.5, 1.5) for _ in range(3)])


def _val(e, p):
    return eval_expr(e, p)


@settings(max_examples=150, deadline=None)
@given(smooth, smooth, st.floats(-3, 3), st.floats(-3, 3), pts, st.sampled_from("xyz"))
def test_diff_is_linear(f, g, a, b, p, c):
    lhs = _val(diff(Const(abs(a)) * f + Const(abs(b)) * g, c), p)
    rhs = abs(a) * _val(diff(f, c), p) + abs(b) * _val(diff(g, c), p)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs), abs(rhs))


@settings(max_examples=150, deadline=None)
@given(smooth, smooth, pts, st.sampled_from("xyz"))
def test_product_rule(f, g, p, c):
    lhs = _val(diff(f * g, c), p)
    rhs = _val(diff(f, c) * g + f * diff(g, c), p)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=200, deadline=None)
@given(trees, pts)
def test_simplify_preserves_value(e, p):
    try:
        raw = _val(e, p)
    except (DomainError, OverflowError):
        return
    if not math.isfinite(raw) or abs(raw) > 1e8:
        return
    assert abs(_val(simplify(e), p) - raw) < 1e-12 * max(1.0, abs(raw))


@settings(max_examples=150, deadline=None)
@given(smooth, st.sampled_from("xyz"), pts)
def test_diff_matches_central_difference(f, c, p):
    k = "xyz".index(c)
    step = 1e-6
    hi, lo = list(p), list(p)
    hi[k] += step
    lo[k] -= step
    fd = (_val(f, hi) - _val(f, lo)) / (2 * step)
    sym = _val(diff(f, c), p)
    assert abs(fd - sym) <= 1e-5 * max(1.0, abs(sym))


def test_compiled_batches_share_shapes():
    c = Compiled(np.array([[parse("x"), parse("y")], [parse("z"), parse("1")]], dtype=object), ("x", "y", "z"))
    out = c(np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    assert out.shape == (2, 2, 2)
    np.testing.assert_array_equal(out[1], [[4, 5], [6, 1]])
