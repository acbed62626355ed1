"""Expression engine: grammar, printing, evaluation, jets."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algmech import (
    Binary, Constant, DomainError, ParseError, UnboundVariable, Unary,
    UnknownFunction, Variable, evaluate, evaluate_jet2, format_expression,
    parse,
)
from conftest import fd_gradient, fd_hessian

# 30-expression round-trip corpus mixing every operator and function
ROUNDTRIP_CORPUS = [
    "7",
    "x1",
    "x1 + 2*y1^2",
    "-(q1 - q2)/m",
    "a*b + c*d",
    "a/b/c",
    "a - b - c",
    "2^3^2",
    "-x^2",
    "x^-2",
    "sin(x) + cos(x)",
    "tan(u)/(1 + u^2)",
    "exp(-t^2/2)",
    "log(2 + x^2)",
    "sqrt(1 + v^2)",
    "abs(p - q)",
    "1.5e-3*k + 2.25",
    "sin(cos(tan(w)))",
    "(a + b)*(a - b)",
    "x1*y1 - y1*x1",
    "0.5*(I1*y1^2 + I2*y2^2 + I3*y3^2)",
    "exp(sin(y1))",
    "x^0.5",
    "x^y",
    "-(-(z))",
    "((((deep))))",
    "a_1 + _b2*c_3_",
    "1/(1/(1/x))",
    "sqrt(exp(log(9 + s^2)))",
    "abs(-(u*v)) + tan(0.1)",
]

# (expression, 5 evaluation points) for the AD-vs-FD oracle; arguments
# stay inside log/sqrt domains at every listed point
AD_CORPUS = [
    ("x + 2*y^2", ("x", "y"), [(0.3, 0.7), (1.0, -1.0), (-2.0, 0.5), (0.0, 0.0), (3.0, 2.0)]),
    ("x*y", ("x", "y"), [(2.0, 5.0), (-1.0, 3.0), (0.5, 0.5), (-2.0, -3.0), (1.0, 0.0)]),
    ("x/y", ("x", "y"), [(1.0, 2.0), (3.0, -1.5), (-2.0, 0.7), (0.3, 1.1), (5.0, 4.0)]),
    ("x - y + x*y", ("x", "y"), [(0.1, 0.2), (1.0, 1.0), (-0.5, 2.0), (2.0, -2.0), (0.0, 1.0)]),
    ("sin(x)", ("x",), [(0.0,), (0.7,), (-1.2,), (2.5,), (3.1,)]),
    ("cos(x)*sin(y)", ("x", "y"), [(0.3, 0.4), (1.0, -1.0), (-0.7, 0.2), (2.0, 1.0), (0.0, 0.5)]),
    ("tan(x)", ("x",), [(0.0,), (0.5,), (-0.5,), (1.0,), (-1.2,)]),
    ("exp(x)", ("x",), [(0.0,), (1.0,), (-1.0,), (0.5,), (-2.5,)]),
    ("exp(sin(y))", ("y",), [(0.7,), (0.0,), (-0.6,), (1.4,), (2.2,)]),
    ("log(2 + x^2)", ("x",), [(0.0,), (1.0,), (-1.5,), (2.0,), (-0.3,)]),
    ("sqrt(1 + x^2)", ("x",), [(0.0,), (1.0,), (-2.0,), (0.5,), (3.0,)]),
    ("abs(x)", ("x",), [(1.0,), (-1.0,), (2.5,), (-0.3,), (0.8,)]),
    ("x^3", ("x",), [(1.0,), (-2.0,), (0.5,), (-0.7,), (2.0,)]),
    ("x^-2", ("x",), [(1.0,), (2.0,), (-1.5,), (0.7,), (-0.4,)]),
    ("x^2.5", ("x",), [(0.5,), (1.0,), (2.0,), (3.0,), (0.8,)]),
    ("2^x", ("x",), [(0.0,), (1.0,), (-1.0,), (0.5,), (2.0,)]),
    ("x^y", ("x", "y"), [(2.0, 3.0), (1.5, -1.0), (0.5, 0.5), (3.0, 0.2), (2.0, -0.5)]),
    ("sin(x*y) + exp(x - y)", ("x", "y"), [(0.3, 0.5), (1.0, 1.0), (-0.5, 0.2), (0.7, -0.7), (1.2, 0.4)]),
    ("(x + y)/(2 + x^2 + y^2)", ("x", "y"), [(0.0, 0.0), (1.0, -1.0), (2.0, 0.5), (-0.5, -0.5), (0.3, 1.7)]),
    ("sqrt(2 + sin(x)) * log(3 + y^2)", ("x", "y"), [(0.0, 0.0), (1.0, 1.0), (-1.0, 2.0), (2.0, -1.0), (0.5, 0.5)]),
]


class TestParse:
    def test_precedence_example(self):
        e = parse("x1 + 2*y1^2")
        assert e == Binary("+", Variable("x1"),
                           Binary("*", Constant(2.0),
                                  Binary("^", Variable("y1"), Constant(2.0))))

    def test_unary_minus_binds_tighter_than_division(self):
        e = parse("-(q1 - q2)/m")
        assert e == Binary("/",
                           Unary("neg", Binary("-", Variable("q1"),
                                               Variable("q2"))),
                           Variable("m"))

    def test_unary_minus_looser_than_power(self):
        assert parse("-x^2") == Unary("neg", Binary("^", Variable("x"),
                                                    Constant(2.0)))

    def test_power_right_associative(self):
        assert parse("2^3^2") == parse("2^(3^2)")
        # the exponent subtree is non-constant, so the value goes through
        # exp(e*log(b)); 2^(3^2) is 512 up to that path's rounding
        assert evaluate(parse("2^3^2"), {}) == pytest.approx(512.0, rel=1e-12)

    def test_left_associativity(self):
        assert parse("a-b-c") == parse("(a-b)-c")
        assert parse("a/b/c") == parse("(a/b)/c")

    def test_unbalanced_paren_offset(self):
        with pytest.raises(ParseError) as exc:
            parse("sin(")
        assert exc.value.offset == 4

    def test_unknown_function(self):
        with pytest.raises(UnknownFunction) as exc:
            parse("foo(2)")
        assert exc.value.name == "foo"

    def test_identifier_followed_by_paren_required_for_calls(self):
        # bare identifier then '(' with no operator is a syntax error
        with pytest.raises(ParseError):
            parse("x (2)")

    def test_byte_offsets_are_utf8(self):
        with pytest.raises(ParseError) as exc:
            parse("a1 + ω")
        assert exc.value.offset == 5

    def test_expected_token_set_populated(self):
        with pytest.raises(ParseError) as exc:
            parse("1 + ")
        assert exc.value.expected

    def test_whitespace_insignificant(self):
        assert parse(" 1+ 2 *x ") == parse("1+2*x")

    def test_negative_literal_folding(self):
        assert parse("-2") == Constant(-2.0)
        assert parse("-2.5e1") == Constant(-25.0)

    def test_number_literal_forms(self):
        assert parse("1.") == Constant(1.0)
        assert parse(".5") == Constant(0.5)
        assert parse("2E+3") == Constant(2000.0)
        assert parse("1.25e-2") == Constant(0.0125)


class TestFormat:
    def test_integral_constant(self):
        assert format_expression(Constant(7.0)) == "7"

    def test_neg_variable(self):
        assert format_expression(Unary("neg", Variable("a"))) == "(-(a))"

    @pytest.mark.parametrize("text", ROUNDTRIP_CORPUS)
    def test_roundtrip_corpus(self, text):
        e = parse(text)
        assert parse(format_expression(e)) == e

    def test_negative_constant_roundtrip(self):
        e = Binary("*", Constant(-2.0), Variable("x"))
        assert parse(format_expression(e)) == e


_names = st.sampled_from(["x", "y", "z", "q1", "v_2"])
_consts = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
                    allow_infinity=False).map(lambda v: Constant(v))


def _exprs(depth):
    if depth == 0:
        return st.one_of(_consts, _names.map(Variable))
    sub = _exprs(depth - 1)
    unary = st.tuples(st.sampled_from(["sin", "cos", "exp", "abs"]), sub) \
        .map(lambda t: Unary(*t))
    # neg of a literal folds in the parser, so fold it here as well
    neg = sub.map(lambda e: Constant(-e.value) if isinstance(e, Constant)
                  else Unary("neg", e))
    binary = st.tuples(st.sampled_from(["+", "-", "*", "/", "^"]), sub, sub) \
        .map(lambda t: Binary(t[0], t[1], t[2]))
    return st.one_of(sub, unary, neg, binary)


class TestHypothesisRoundTrip:
    @settings(max_examples=200, deadline=None)
    @given(_exprs(3))
    def test_format_parse_identity(self, e):
        assert parse(format_expression(e)) == e


# domain-safe expression/point pairs for value-lane agreement
_safe_exprs = st.sampled_from([
    "x + y", "x*y - y", "sin(x)*cos(y)", "exp(sin(x))", "abs(x - y)^3",
    "(x + 2*y)/(3 + x^2)", "log(2 + y^2)", "sqrt(1 + x^2) - tan(y/2)",
])
_safe_point = st.tuples(
    st.floats(min_value=-3, max_value=3, allow_nan=False),
    st.floats(min_value=-1.4, max_value=1.4, allow_nan=False))


class TestHypothesisValueLane:
    @settings(max_examples=150, deadline=None)
    @given(_safe_exprs, _safe_point)
    def test_jet_value_equals_plain_evaluation(self, text, point):
        # the d = 0 program and the seeded program share opcode semantics;
        # the value lane must agree bit for bit
        e = parse(text)
        env = {"x": point[0], "y": point[1]}
        jet = evaluate_jet2(e, env, ("x", "y"))
        assert jet.value == evaluate(e, env)
        h = jet.hess_matrix()
        assert np.array_equal(h, h.T)


class TestEvaluate:
    def test_arithmetic(self):
        assert evaluate(parse("2*3+1"), {}) == 7.0

    def test_sin_zero(self):
        assert evaluate(parse("sin(x)"), {"x": 0.0}) == 0.0

    def test_log_negative_domain_error(self):
        with pytest.raises(DomainError) as exc:
            evaluate(parse("log(x)"), {"x": -1.0})
        assert exc.value.op == "log"

    def test_sqrt_negative_domain_error(self):
        with pytest.raises(DomainError):
            evaluate(parse("sqrt(x)"), {"x": -4.0})

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariable):
            evaluate(parse("x + y"), {"x": 1.0})

    def test_integer_power_negative_base(self):
        assert evaluate(parse("(-2)^3"), {}) == -8.0
        assert evaluate(parse("x^4"), {"x": -3.0}) == 81.0

    def test_fractional_power_negative_base_domain_error(self):
        with pytest.raises(DomainError):
            evaluate(parse("x^0.5"), {"x": -1.0})

    def test_variable_exponent_is_exp_log(self):
        got = evaluate(parse("b^e"), {"b": 2.0, "e": 0.5})
        assert got == math.exp(0.5 * math.log(2.0))

    def test_division_is_ieee(self):
        assert evaluate(parse("1/x"), {"x": 0.0}) == math.inf

    def test_determinism(self):
        e = parse("sin(x)*exp(y) + x^3/(1 + y^2)")
        env = {"x": 0.37, "y": -1.29}
        assert evaluate(e, env) == evaluate(e, env)


class TestJet2:
    def test_square(self):
        j = evaluate_jet2(parse("y1^2"), {"y1": 3.0}, ("y1",))
        assert (j.value, j.grad, j.hess_upper) == (9.0, (6.0,), (2.0,))

    def test_bilinear(self):
        j = evaluate_jet2(parse("x1*y1"), {"x1": 2.0, "y1": 5.0},
                          ("x1", "y1"))
        assert j.grad == (5.0, 2.0)
        assert j.hess(0, 1) == 1.0 and j.hess(0, 0) == 0.0

    def test_constant_expression_has_zero_derivatives(self):
        j = evaluate_jet2(parse("3.5"), {"x": 1.0}, ("x",))
        assert j.grad == (0.0,) and j.hess_upper == (0.0,)

    def test_unused_seed_gets_zero_gradient(self):
        j = evaluate_jet2(parse("x^2"), {"x": 2.0, "y": 5.0}, ("x", "y"))
        assert j.grad == (4.0, 0.0)

    def test_hessian_symmetry_is_structural(self):
        j = evaluate_jet2(parse("sin(x*y) + x^3*y"), {"x": 0.7, "y": -1.3},
                          ("x", "y"))
        h = j.hess_matrix()
        assert np.array_equal(h, h.T)

    def test_sqrt_jet_at_zero_domain_error(self):
        with pytest.raises(DomainError):
            evaluate_jet2(parse("sqrt(x)"), {"x": 0.0}, ("x",))

    def test_determinism(self):
        e = parse("exp(sin(u)) / (1 + v^2)")
        env = {"u": 0.9, "v": 0.4}
        a = evaluate_jet2(e, env, ("u", "v"))
        b = evaluate_jet2(e, env, ("u", "v"))
        assert a == b

    @pytest.mark.parametrize("text,names,points", AD_CORPUS)
    def test_against_finite_differences(self, text, names, points):
        e = parse(text)
        assert len(points) == 5
        for point in points:
            env = dict(zip(names, point))
            jet = evaluate_jet2(e, env, names)

            def f(vals):
                return evaluate(e, dict(zip(names, vals)))

            grad_fd = fd_gradient(f, point)
            hess_fd = fd_hessian(f, point)
            for ad, fd in zip(jet.grad, grad_fd):
                assert abs(ad - fd) <= 1e-6 * (abs(ad) + 1.0)
            hm = jet.hess_matrix()
            for i in range(len(names)):
                for j in range(len(names)):
                    assert abs(hm[i, j] - hess_fd[i, j]) \
                        <= 1e-6 * (abs(hm[i, j]) + 1.0)

    def test_ad_corpus_size(self):
        assert len(AD_CORPUS) == 20
        assert len(ROUNDTRIP_CORPUS) == 30
