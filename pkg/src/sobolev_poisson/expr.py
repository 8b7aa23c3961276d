"""Small recursive-descent parser for field expressions.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = ("+" | "-") , unary | power ;
    power   = atom , [ "^" , unary ] ;            (* right associative *)
    atom    = number | name | name , "(" , expr , ")" | "(" , expr , ")" ;
    number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ]
            | "." , digits , [ exponent ] ;

``name`` is either a variable of the domain (``t`` or ``x``, ``y``, ``z``), one
of the constants ``pi`` and ``e``, or a function from ``FUNCTIONS``.  Unary
minus binds looser than ``^`` so ``-x^2`` means ``-(x^2)``.

Trees are immutable and compare by value, which makes the round trip
``parse(to_text(tree)) == tree`` checkable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParseError, UnknownNameError

FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

CONSTANTS = {"pi": np.pi, "e": np.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.variables = frozenset(variables)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownNameError(f"unknown function {val!r}", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in self.variables:
                return Var(val)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                raise ParseError(f"function {val!r} needs an argument", pos)
            raise UnknownNameError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", pos)


def parse(text: str, variables=("t",)) -> Node:
    """Parse ``text`` into an expression tree over ``variables``."""
    if not isinstance(text, str):
        raise ParseError("expression must be a string")
    return _Parser(text, variables).parse()


def to_text(node: Node) -> str:
    """Canonical, fully parenthesised text for ``node``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return set()


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def compile_tree(node: Node):
    """Turn a tree into a closure ``f(env) -> array`` evaluated with numpy.

    ``env`` maps variable names to arrays (or floats) that broadcast together.
    """
    if isinstance(node, Num):
        v = node.value
        return lambda env: v
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda env: v
    if isinstance(node, Var):
        name = node.name
        return lambda env: env[name]
    if isinstance(node, Neg):
        inner = compile_tree(node.operand)
        return lambda env: -inner(env)
    if isinstance(node, BinOp):
        fn = _BINARY[node.op]
        left, right = compile_tree(node.left), compile_tree(node.right)
        if node.op == "^":
            # float power so that negative integer exponents work on int input
            return lambda env: np.float_power(left(env), right(env))
        return lambda env: fn(left(env), right(env))
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func]
        arg = compile_tree(node.arg)
        return lambda env: fn(arg(env))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, env) -> np.ndarray:
    """Evaluate ``node`` with the variable bindings in ``env``."""
    with np.errstate(all="ignore"):
        return np.asarray(compile_tree(node)(env), dtype=float)


def to_sympy(node: Node, symbols: dict):
    """Convert a tree to a sympy expression; ``symbols`` maps names to sympy symbols."""
    import sympy

    if isinstance(node, Num):
        v = node.value
        return sympy.Integer(int(v)) if v.is_integer() else sympy.Float(v)
    if isinstance(node, Const):
        return sympy.pi if node.name == "pi" else sympy.E
    if isinstance(node, Var):
        return symbols[node.name]
    if isinstance(node, Neg):
        return -to_sympy(node.operand, symbols)
    if isinstance(node, BinOp):
        a, b = to_sympy(node.left, symbols), to_sympy(node.right, symbols)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return a**b
    if isinstance(node, Call):
        fn = {"exp": sympy.exp, "sin": sympy.sin, "cos": sympy.cos, "sinh": sympy.sinh,
              "cosh": sympy.cosh, "sqrt": sympy.sqrt, "abs": sympy.Abs}[node.func]
        return fn(to_sympy(node.arg, symbols))
    raise TypeError(f"not an expression node: {node!r}")
