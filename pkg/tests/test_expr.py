import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confrac.errors import EvaluationError
from confrac.expr import (
    FUNCTIONS,
    BinOp,
    Call,
    Const,
    Neg,
    Num,
    ParseError,
    Var,
    evaluate,
    parse,
    to_text,
)

EXAMPLE = "1 + 0.25*sin(s) + x^2"


class TestParse:
    def test_example_tree(self):
        e = parse(EXAMPLE)
        assert e == BinOp("+", BinOp("+", Num(1.0), BinOp("*", Num(0.25), Call("sin", (Var("s"),)))),
                          BinOp("^", Var("x"), Num(2.0)))

    def test_identity(self):
        assert parse("x") == Var("x")

    def test_whitespace_insensitive(self):
        assert parse("  1+0.25 * sin( s )+x ^2 ") == parse(EXAMPLE)

    def test_power_is_right_associative(self):
        assert parse("2^3^2") == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))
        assert evaluate(parse("2^3^2"), 0, 0) == 512.0

    def test_power_binds_tighter_than_unary_minus(self):
        assert parse("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
        assert evaluate(parse("-x^2"), 0, 3) == -9.0

    def test_product_before_sum(self):
        assert evaluate(parse("1+2*3-4/2"), 0, 0) == 5.0
        assert evaluate(parse("(1+2)*3"), 0, 0) == 9.0

    def test_constant_pi(self):
        assert evaluate(parse("pi"), 0, 0) == math.pi

    def test_scientific_literals(self):
        assert evaluate(parse("1.5e-3*2"), 0, 0) == 3e-3

    @pytest.mark.parametrize("text,offset", [
        ("2*", 2),
        ("foo+1", 0),
        ("1 + y", 4),
        ("(1+2", 4),
        ("1 $ 2", 2),
    ])
    def test_error_offsets(self, text, offset):
        with pytest.raises(ParseError) as info:
            parse(text)
        assert info.value.offset == offset

    @pytest.mark.parametrize("text", ["sin(1, 2)", "pow(2)", "sin", "sin()"])
    def test_wrong_arity(self, text):
        with pytest.raises(ParseError):
            parse(text)

    def test_empty(self):
        with pytest.raises(ParseError):
            parse("   ")

    def test_parse_error_is_value_error(self):
        with pytest.raises(ValueError):
            parse(")")


class TestEvaluate:
    def test_example_at_origin(self):
        assert evaluate(parse(EXAMPLE), 0, 0) == 1.0

    def test_power_of_variables(self):
        assert evaluate(parse("s^x"), 4, 0.5) == 2.0

    @pytest.mark.parametrize("s", [0.0, 0.3, 1.0])
    def test_division_by_zero(self, s):
        with pytest.raises(EvaluationError) as info:
            evaluate(parse("1/ (s-s)"), s, 0.0)
        assert info.value.point == (s, 0.0)

    @pytest.mark.parametrize("text", ["log(x)", "log(-1)", "sqrt(x-1)", "(x-1)^0.5", "x^(-1)", "exp(1000)"])
    def test_domain_errors(self, text):
        with pytest.raises(EvaluationError):
            evaluate(parse(text), 0.5, 0.0)

    def test_negative_base_integer_exponent(self):
        assert evaluate(parse("(-2)^3"), 0, 0) == -8.0
        assert evaluate(parse("pow(-2, 2)"), 0, 0) == 4.0

    def test_broadcasts(self):
        s = np.linspace(0, 1, 5)
        out = evaluate(parse("s + 0*x + 1"), s, 2.0)
        assert np.array_equal(out, s + 1)

    def test_error_names_first_bad_point(self):
        s = np.array([0.1, 0.2, 0.3])
        with pytest.raises(EvaluationError) as info:
            evaluate(parse("log(s - 0.15)"), s, 0.0)
        assert info.value.point == (0.1, 0.0)

    def test_matches_hand_coded_example(self):
        rng = np.random.default_rng(20240611)
        s = rng.uniform(0, 1, 1000)
        x = rng.uniform(-10, 10, 1000)
        e = parse(EXAMPLE)
        for si, xi in zip(s, x):
            direct = 1 + 0.25 * math.sin(si) + xi * xi
            assert abs(evaluate(e, si, xi) - direct) <= 1e-15 * max(1.0, abs(direct))

    def test_pure(self):
        e = parse(EXAMPLE)
        assert evaluate(e, 0.3, 0.7) == evaluate(e, 0.3, 0.7)


leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False).map(Num),
    st.sampled_from([Var("s"), Var("x"), Const("pi")]),
)


def _extend(children):
    unary = [name for name, arity in FUNCTIONS.items() if arity == 1]
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(unary), children).map(lambda t: Call(t[0], (t[1],))),
        st.tuples(children, children).map(lambda t: Call("pow", t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=20)


@given(trees)
@settings(max_examples=200)
def test_round_trip(tree):
    assert parse(to_text(tree)) == tree
