import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tvckit as tk
from tvckit.errors import EvalError, ExprSyntaxError
from tvckit.expr import (Bin, Call, Const, Neg, Var, eval_ast, parse_source,
                         simplify, symbolic_partial, to_source, tokenize)

NEG_INF = float("-inf")

SYMS = {"x", "y", "a"}


def ev(src, **env):
    return eval_ast(parse_source(src, set(env) | SYMS), env)


class TestParsing:
    def test_precedence(self):
        assert ev("1 + 2 * 3") == 7.0
        assert ev("2 * 3 ^ 2") == 18.0
        assert ev("-2 ^ 2") == -4.0  # unary minus binds looser than ^
        assert ev("(1 + 2) * 3") == 9.0

    def test_right_assoc_power(self):
        assert ev("2 ^ 3 ^ 2") == 512.0

    def test_functions(self):
        assert ev("ln(exp(2))") == pytest.approx(2.0)
        assert ev("sqrt(abs(0 - 9))") == 3.0

    def test_ln_nonpositive_is_neg_inf(self):
        assert ev("ln(0)") == NEG_INF
        assert ev("ln(0 - 5)") == NEG_INF
        assert ev("exp(ln(0))") == 0.0

    def test_eval_errors(self):
        with pytest.raises(EvalError):
            ev("1 / 0")
        with pytest.raises(EvalError):
            ev("sqrt(0 - 1)")

    def test_unknown_identifier_position(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse_source("x + delta", {"x"})
        assert err.value.pos == 4
        assert "delta" in str(err.value)

    def test_unknown_function(self):
        with pytest.raises(ExprSyntaxError):
            parse_source("sin(x)", {"x"})

    def test_illegal_character(self):
        with pytest.raises(ExprSyntaxError) as err:
            tokenize("x + $y")
        assert err.value.pos == 4

    def test_nonconstant_exponent_rejected(self):
        with pytest.raises(ExprSyntaxError):
            parse_source("x ^ y", {"x", "y"})

    def test_constant_folded_exponent_ok(self):
        assert ev("2 ^ (1 + 1)") == 4.0

    def test_trailing_garbage(self):
        with pytest.raises(ExprSyntaxError):
            parse_source("x + 1 )", {"x"})

    def test_scientific_notation(self):
        assert ev("1e-3 + 2.5E2") == pytest.approx(250.001)


class TestDifferentiation:
    def test_polynomial(self):
        d = symbolic_partial(parse_source("x ^ 3 + 2 * x", {"x"}), "x")
        f = lambda v: eval_ast(d, {"x": v})
        assert f(2.0) == pytest.approx(14.0)

    def test_chain_rule_ln(self):
        d = symbolic_partial(parse_source("ln(x ^ 2)", {"x"}), "x")
        assert eval_ast(d, {"x": 3.0}) == pytest.approx(2.0 / 3.0)

    def test_quotient_rule(self):
        d = symbolic_partial(parse_source("x / (x + 1)", {"x"}), "x")
        assert eval_ast(d, {"x": 1.0}) == pytest.approx(0.25)

    def test_other_variable_is_zero(self):
        d = symbolic_partial(parse_source("x ^ 2", {"x", "y"}), "y")
        assert d == Const(0.0)

    def test_fd_agreement_random(self):
        rng = np.random.default_rng(3)
        src = "x ^ 2 * ln(y) + exp(0 - x) / y + sqrt(x + y)"
        ast = parse_source(src, {"x", "y"})
        dx = symbolic_partial(ast, "x")
        for _ in range(20):
            x, y = rng.uniform(0.5, 3.0, size=2)
            h = 1e-6
            fd = (eval_ast(ast, {"x": x + h, "y": y})
                  - eval_ast(ast, {"x": x - h, "y": y})) / (2 * h)
            assert eval_ast(dx, {"x": x, "y": y}) == pytest.approx(fd, rel=1e-5)


class TestSimplify:
    def test_identities(self):
        assert simplify(Bin("+", Var("x"), Const(0.0))) == Var("x")
        assert simplify(Bin("*", Const(1.0), Var("x"))) == Var("x")
        assert simplify(Bin("*", Const(0.0), Var("x"))) == Const(0.0)
        assert simplify(Bin("^", Var("x"), Const(1.0))) == Var("x")

    def test_folding(self):
        assert simplify(parse_source("2 + 3 * 4", set())) == Const(14.0)


# strategy for random well-formed ASTs over x, y
_leaf = st.one_of(
    st.floats(0.1, 10.0).map(lambda v: Const(round(v, 3))),
    st.sampled_from([Var("x"), Var("y")]),
)


def _ast_strategy():
    return st.recursive(
        _leaf,
        lambda children: st.one_of(
            st.tuples(st.sampled_from("+-*/"), children, children).map(
                lambda t: Bin(t[0], t[1], t[2])),
            children.map(Neg),
            st.tuples(st.sampled_from(["ln", "exp", "abs", "sqrt"]), children).map(
                lambda t: Call(t[0], t[1])),
            st.tuples(children, st.floats(1.0, 3.0)).map(
                lambda t: Bin("^", t[0], Const(float(round(t[1]))))),
        ),
        max_leaves=12,
    )


class TestRoundTrip:
    @given(_ast_strategy())
    @settings(max_examples=150, deadline=None)
    def test_print_parse_same_value(self, ast):
        """Printing then reparsing preserves evaluation everywhere it is finite."""
        src = to_source(ast)
        reparsed = parse_source(src, {"x", "y"})
        env = {"x": 1.7, "y": 0.9}
        try:
            expected = eval_ast(ast, env)
        except EvalError:
            return
        try:
            got = eval_ast(reparsed, env)
        except EvalError:
            pytest.fail(f"reparsed form of {src!r} failed to evaluate")
        if math.isfinite(expected):
            assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)
        else:
            assert got == expected

    @given(_ast_strategy())
    @settings(max_examples=100, deadline=None)
    def test_parse_originated_round_trip_is_structural(self, ast):
        src = to_source(ast)
        once = parse_source(src, {"x", "y"})
        twice = parse_source(to_source(once), {"x", "y"})
        assert once == twice


class TestDslObjectives:
    def test_discrete_quadlin_equivalent(self, quadlin_d):
        dsl = tk.dsl_discrete_objective(
            "(y0 - a)^2 + b * y1 + g * y2", 2,
            {"a": (1.0, 2.0), "b": (0.5, 0.4), "g": (0.25, 0.2)})
        rng = np.random.default_rng(5)
        for _ in range(20):
            win = rng.uniform(-2, 4, size=3)
            w = int(rng.integers(0, 2))
            assert dsl.value(win, 0, w) == pytest.approx(quadlin_d.value(win, 0, w))
            for k in range(3):
                assert tk.partial_slot(dsl, k, win, 0, w)[0] == pytest.approx(
                    tk.partial_slot(quadlin_d, k, win, 0, w)[0])

    def test_time_dependence(self):
        obj = tk.dsl_discrete_objective("t * y0", 0)
        assert obj.value(np.array([2.0]), 3, 0) == 6.0

    def test_scalar_constant_broadcast(self):
        obj = tk.dsl_discrete_objective("c * y0", 0, {"c": 2.0})
        assert obj.value(np.array([3.0]), 0, 1) == 6.0

    def test_continuous_slots(self):
        obj = tk.dsl_continuous_objective("x0 + 2 * x1 + 3 * x2", 2)
        assert obj.value(np.array([1.0, 1.0, 1.0]), 0.0, 0) == 6.0

    def test_gradient_check_passes(self):
        obj = tk.dsl_discrete_objective("ln(y0 + y1) - y2 ^ 2", 2)
        rng = np.random.default_rng(9)
        points = [(rng.uniform(0.5, 2.0, size=3), 0, 0) for _ in range(20)]
        assert tk.gradient_check(obj, points).passed
