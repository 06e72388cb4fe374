"""Arithmetic expression DSL for scenario-defined objectives.

Grammar (EBNF):
    expr  := term (("+"|"-") term)*
    term  := unary (("*"|"/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?
    atom  := number | ident | ident "(" expr ")" | "(" expr ")"

Exponents must fold to constants, which keeps symbolic differentiation closed
over the node set.  ln(x <= 0) evaluates to -inf; -inf is a value, not an error.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import EvalError, ExprSyntaxError, InputError
from .objectives import ContinuousObjective, DiscreteObjective

NEG_INF = float("-inf")

FUNCTIONS = ("ln", "exp", "abs", "sqrt")


# ---------------------------------------------------------------------------
# Tokens

@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | op | lparen | rparen | comma
    lexeme: str
    pos: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*/^])
      | (?P<lparen>\()
      | (?P<rparen>\))
      | (?P<comma>,)
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    """Maximal-munch lexing; rejects any character outside the grammar."""
    out: list[Token] = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ExprSyntaxError(f"illegal character {source[pos]!r}", pos)
        kind = match.lastgroup
        if kind != "ws":
            out.append(Token(kind, match.group(), pos))
        pos = match.end()
    return out


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Const | Var | Neg | Bin | Call


class _Parser:
    def __init__(self, tokens: list[Token], symbols: set[str]):
        self.tokens = tokens
        self.symbols = symbols
        self.i = 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError("unexpected end of expression")
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            pos = tok.pos if tok else None
            got = tok.lexeme if tok else "end of input"
            raise ExprSyntaxError(f"expected {what}, got {got!r}", pos)
        return self.take()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ExprSyntaxError(f"unexpected {tok.lexeme!r}", tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while (tok := self.peek()) and tok.kind == "op" and tok.lexeme in "+-":
            self.take()
            node = Bin(tok.lexeme, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (tok := self.peek()) and tok.kind == "op" and tok.lexeme in "*/":
            self.take()
            node = Bin(tok.lexeme, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok and tok.kind == "op" and tok.lexeme == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok and tok.kind == "op" and tok.lexeme == "^":
            self.take()
            expo = fold_constants(self.unary())
            if not isinstance(expo, Const):
                raise ExprSyntaxError("exponent must fold to a constant", tok.pos)
            return Bin("^", base, expo)
        return base

    def atom(self) -> Node:
        tok = self.take()
        if tok.kind == "number":
            return Const(float(tok.lexeme))
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt and nxt.kind == "lparen":
                if tok.lexeme not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {tok.lexeme!r}", tok.pos)
                self.take()
                arg = self.expr()
                if (t := self.peek()) and t.kind == "comma":
                    raise ExprSyntaxError(f"{tok.lexeme} takes a single argument", t.pos)
                self.expect("rparen", "')'")
                return Call(tok.lexeme, arg)
            if tok.lexeme not in self.symbols:
                raise ExprSyntaxError(f"unknown identifier {tok.lexeme!r}", tok.pos)
            return Var(tok.lexeme)
        if tok.kind == "lparen":
            node = self.expr()
            self.expect("rparen", "')'")
            return node
        raise ExprSyntaxError(f"unexpected {tok.lexeme!r}", tok.pos)


def parse(tokens: list[Token], symbols) -> Node:
    """Recursive-descent parse with the precedence ^ > unary- > */ > +-."""
    return _Parser(list(tokens), set(symbols)).parse()


def parse_source(source: str, symbols) -> Node:
    return parse(tokenize(source), symbols)


# ---------------------------------------------------------------------------
# Evaluation

def eval_ast(node: Node, env: dict[str, float]) -> float:
    """IEEE double evaluation; ln(x <= 0) -> -inf, division by zero and NaN -> error."""
    out = _eval(node, env)
    if math.isnan(out):
        raise EvalError("expression evaluated to NaN")
    return out


def _eval(node: Node, env) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return float(env[node.name])
        except KeyError:
            raise EvalError(f"unbound symbol {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.child, env)
    if isinstance(node, Call):
        arg = _eval(node.arg, env)
        if node.fn == "ln":
            return math.log(arg) if arg > 0.0 else NEG_INF
        if node.fn == "exp":
            return math.exp(arg) if arg != NEG_INF else 0.0
        if node.fn == "abs":
            return abs(arg)
        if node.fn == "sqrt":
            if arg < 0.0:
                raise EvalError(f"sqrt of negative value {arg}")
            return math.sqrt(arg)
        raise EvalError(f"unknown function {node.fn!r}")
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if right == 0.0:
            raise EvalError("division by zero")
        return left / right
    if node.op == "^":
        try:
            return left**right
        except (OverflowError, ZeroDivisionError) as exc:
            raise EvalError(f"power failed: {exc}") from None
    raise EvalError(f"unknown operator {node.op!r}")


# ---------------------------------------------------------------------------
# Symbolic differentiation

def symbolic_partial(node: Node, variable: str) -> Node:
    """d(node)/d(variable), simplified by constant folding and 0/1 identities."""
    return simplify(_diff(node, variable))


def _diff(node: Node, v: str) -> Node:
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == v else 0.0)
    if isinstance(node, Neg):
        return Neg(_diff(node.child, v))
    if isinstance(node, Call):
        darg = _diff(node.arg, v)
        if node.fn == "ln":
            return Bin("/", darg, node.arg)
        if node.fn == "exp":
            return Bin("*", Call("exp", node.arg), darg)
        if node.fn == "sqrt":
            return Bin("/", darg, Bin("*", Const(2.0), Call("sqrt", node.arg)))
        if node.fn == "abs":
            return Bin("*", Bin("/", node.arg, Call("abs", node.arg)), darg)
        raise InputError(f"cannot differentiate function {node.fn!r}")
    dl = _diff(node.left, v)
    dr = _diff(node.right, v)
    if node.op in "+-":
        return Bin(node.op, dl, dr)
    if node.op == "*":
        return Bin("+", Bin("*", dl, node.right), Bin("*", node.left, dr))
    if node.op == "/":
        num = Bin("-", Bin("*", dl, node.right), Bin("*", node.left, dr))
        return Bin("/", num, Bin("^", node.right, Const(2.0)))
    if node.op == "^":
        c = node.right.value  # exponent is Const by construction
        return Bin("*", Bin("*", Const(c), Bin("^", node.left, Const(c - 1.0))), dl)
    raise InputError(f"cannot differentiate operator {node.op!r}")


def fold_constants(node: Node) -> Node:
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        child = fold_constants(node.child)
        if isinstance(child, Const):
            return Const(-child.value)
        return Neg(child)
    if isinstance(node, Call):
        arg = fold_constants(node.arg)
        if isinstance(arg, Const):
            return Const(eval_ast(Call(node.fn, arg), {}))
        return Call(node.fn, arg)
    left = fold_constants(node.left)
    right = fold_constants(node.right)
    if isinstance(left, Const) and isinstance(right, Const):
        return Const(eval_ast(Bin(node.op, left, right), {}))
    return Bin(node.op, left, right)


def _is_const(node: Node, value: float) -> bool:
    return isinstance(node, Const) and node.value == value


def simplify(node: Node) -> Node:
    """Constant folding plus 0/1 identities; no general CAS rewriting."""
    node = fold_constants(node)
    return _simplify(node)


def _simplify(node: Node) -> Node:
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        child = _simplify(node.child)
        if isinstance(child, Const):
            return Const(-child.value)
        return Neg(child)
    if isinstance(node, Call):
        return Call(node.fn, _simplify(node.arg))
    left = _simplify(node.left)
    right = _simplify(node.right)
    op = node.op
    if op == "+":
        if _is_const(left, 0.0):
            return right
        if _is_const(right, 0.0):
            return left
    elif op == "-":
        if _is_const(right, 0.0):
            return left
        if _is_const(left, 0.0):
            return _simplify(Neg(right))
    elif op == "*":
        if _is_const(left, 0.0) or _is_const(right, 0.0):
            return Const(0.0)
        if _is_const(left, 1.0):
            return right
        if _is_const(right, 1.0):
            return left
    elif op == "/":
        if _is_const(left, 0.0) and not _is_const(right, 0.0):
            return Const(0.0)
        if _is_const(right, 1.0):
            return left
    elif op == "^":
        if _is_const(right, 1.0):
            return left
        if _is_const(right, 0.0):
            return Const(1.0)
    out = Bin(op, left, right)
    folded = fold_constants(out)
    return folded


# ---------------------------------------------------------------------------
# Pretty printing (parse . print . parse is structure-preserving)

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_source(node: Node) -> str:
    return _print(node, 0)


def _print(node: Node, parent_prec: int) -> str:
    if isinstance(node, Const):
        value = node.value
        if value < 0:
            text = repr(value)
            return f"({text})" if parent_prec > 0 else text
        return repr(value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({_print(node.arg, 0)})"
    if isinstance(node, Neg):
        prec = _PRECEDENCE["neg"]
        text = f"-{_print(node.child, prec)}"
        return f"({text})" if parent_prec > prec else text
    prec = _PRECEDENCE[node.op]
    # +,-,*,/ are left-associative; ^ is right-associative
    left = _print(node.left, prec if node.op != "^" else prec + 1)
    right = _print(node.right, prec + 1 if node.op != "^" else prec)
    text = f"{left} {node.op} {right}"
    return f"({text})" if parent_prec > prec else text


# ---------------------------------------------------------------------------
# DSL objectives

def _slot_names(order: int, continuous: bool) -> list[str]:
    prefix = "x" if continuous else "y"
    return [f"{prefix}{k}" for k in range(order + 1)]


def _build_objective(source: str, order: int, constants: dict, continuous: bool,
                     name: str = ""):
    """Compile a DSL expression into an objective with symbolic slot-partials.

    constants maps each named per-state constant to its tuple of per-state
    values (a scalar is broadcast to every state).
    """
    slots = _slot_names(order, continuous)
    symbols = set(slots) | {"t"} | set(constants)
    ast = parse_source(source, symbols)
    partial_asts = [symbolic_partial(ast, s) for s in slots]

    const_rows = {}
    for cname, cval in constants.items():
        arr = np.atleast_1d(np.asarray(cval, dtype=float))
        const_rows[cname] = arr

    def env_for(point, t, w):
        env = {s: float(point[k, 0]) for k, s in enumerate(slots)}
        env["t"] = float(t)
        for cname, arr in const_rows.items():
            env[cname] = float(arr[w % len(arr)] if len(arr) > 1 else arr[0])
        return env

    def ev(point, t, w):
        return eval_ast(ast, env_for(point, t, w))

    def make_partial(k):
        past = partial_asts[k]

        def p(point, t, w):
            return eval_ast(past, env_for(point, t, w))

        return p

    cls = ContinuousObjective if continuous else DiscreteObjective
    obj = cls(order=order, eval_fn=ev,
              partial_fns=tuple(make_partial(k) for k in range(order + 1)),
              name=name or f"dsl:{source}")
    return obj, ast, partial_asts


def dsl_discrete_objective(source: str, order: int, constants: dict | None = None,
                           name: str = "") -> DiscreteObjective:
    """Discrete objective from an expression over y0..y{order}, t and named constants."""
    obj, _, _ = _build_objective(source, order, constants or {}, continuous=False, name=name)
    return obj


def dsl_continuous_objective(source: str, order: int, constants: dict | None = None,
                             name: str = "") -> ContinuousObjective:
    """Continuous objective from an expression over jet slots x0..x{order}."""
    obj, _, _ = _build_objective(source, order, constants or {}, continuous=True, name=name)
    return obj
