"""Scalar expressions over the coordinates ``u`` and ``v``.

Grammar (precedence climbing, loosest first)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Unary minus binds looser than ``^`` so ``-v^2`` is ``-(v^2)``. There is no
implicit multiplication.

Evaluation is generic over the number type: plain floats, :class:`Jet3` or
:class:`TaylorJet` all flow through the same compiled closure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

from .errors import ExprSyntaxError, UnknownIdentifier
from .jets import FUNCTIONS, Jet3, TaylorJet, float_apply, float_div, float_pow

__all__ = [
    "Expr",
    "Num",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "to_string",
    "variables",
    "compile_expr",
    "evaluate",
    "eval_jet3",
    "VARIABLES",
]

VARIABLES = frozenset({"u", "v"})
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Const, Var, Neg, BinOp, Call]

# -- tokenizer ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(
                f"unexpected character {text[start]!r}", text, _byte_offset(text, start)
            )
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, variables: frozenset[str]):
        self.text = text
        self.variables = variables
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok, cls=ExprSyntaxError):
        return cls(message, self.text, _byte_offset(self.text, tok[2]))

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value or tok[0] != "op":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {what}", tok)

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}", tok)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, val = tok[0], tok[1]
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if val not in FUNCTIONS:
                    raise self.error(f"unknown function {val!r}", tok, UnknownIdentifier)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in CONSTANTS:
                return Const(val)
            if val in self.variables:
                return Var(val)
            if val in FUNCTIONS:
                raise self.error(f"function {val!r} needs an argument", nxt)
            raise self.error(f"unknown identifier {val!r}", tok, UnknownIdentifier)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {val!r}", tok)


def parse(text: str, variables=VARIABLES) -> Expr:
    """Parse ``text`` into an AST.

    Raises :class:`ExprSyntaxError` (with a byte offset) on malformed input
    and :class:`UnknownIdentifier` for names outside ``variables``, the
    constants ``pi``/``e`` and the supported functions.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", text or "", 0)
    return _Parser(text, frozenset(variables)).parse()


# -- printing -------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return 5


def _fmt_num(x: float) -> str:
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def to_string(node: Expr) -> str:
    """Render with the minimum parentheses needed to re-parse identically."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.operand)
        if _prec(node.operand) < _NEG_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _NEG_PREC:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def variables(node: Expr) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, Call):
        return variables(node.arg)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return frozenset()


# -- evaluation ---------------------------------------------------------------

_JETS = (Jet3, TaylorJet)


def _apply(name: str, x):
    if isinstance(x, _JETS):
        return getattr(x, name)()
    return float_apply(name, x)


def _div(a, b):
    if isinstance(b, _JETS):
        return a / b
    return a / b if isinstance(a, _JETS) else float_div(a, b)


def _pow(a, b):
    if isinstance(a, _JETS) or isinstance(b, _JETS):
        return a**b
    return float_pow(a, b)


def compile_expr(node: Expr) -> Callable[[dict], object]:
    """Compile an AST into a closure ``env -> value``.

    ``env`` maps variable names to floats or jets. Constant sub-trees fold to
    floats, so jets only appear where a variable does.
    """
    if isinstance(node, Num):
        val = node.value
        return lambda env: val
    if isinstance(node, Const):
        val = CONSTANTS[node.name]
        return lambda env: val
    if isinstance(node, Var):
        name = node.name
        return lambda env: env[name]
    if isinstance(node, Neg):
        f = compile_expr(node.operand)
        return lambda env: -f(env)
    if isinstance(node, Call):
        f = compile_expr(node.arg)
        fn = node.fn
        return lambda env: _apply(fn, f(env))
    lf, rf = compile_expr(node.left), compile_expr(node.right)
    op = node.op
    if op == "+":
        return lambda env: lf(env) + rf(env)
    if op == "-":
        return lambda env: lf(env) - rf(env)
    if op == "*":
        return lambda env: lf(env) * rf(env)
    if op == "/":
        return lambda env: _div(lf(env), rf(env))
    return lambda env: _pow(lf(env), rf(env))


def evaluate(node: Expr, **env: float) -> float:
    return compile_expr(node)(env)


def eval_jet3(node: Expr, at, wrt: str = "v") -> Jet3:
    """Value and first three derivatives of ``node`` in ``wrt``.

    ``at`` is a single number (the value of ``wrt``) or a ``(u, v)`` pair.
    """
    if isinstance(at, (tuple, list)):
        u, v = at
        env = {"u": float(u), "v": float(v)}
    else:
        env = {wrt: float(at)}
        other = "u" if wrt == "v" else "v"
        if other in variables(node):
            raise ValueError(f"expression depends on {other!r}; pass a (u, v) pair")
    env[wrt] = Jet3.variable(env[wrt])
    out = compile_expr(node)(env)
    if not isinstance(out, Jet3):
        return Jet3(float(out))
    return out
