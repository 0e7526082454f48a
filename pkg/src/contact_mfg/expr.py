"""A small expression language for functions of ``x``.

Grammar (``^`` binds tightest and is right associative, unary minus binds
tighter than ``*`` and ``/``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?
    atom    := NUMBER | "x" | "pi" | FUNC "(" expr ")" | "(" expr ")"

Expressions evaluate on numpy arrays and carry a symbolic derivative.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExpressionError",
    "UnknownIdentifierError",
    "ArityError",
    "UnbalancedParenthesesError",
    "Expression",
    "parse_expression",
]

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}


class ExpressionError(ValueError):
    """Syntax error carrying the 0-based character position."""

    def __init__(self, message, position):
        self.position = position
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name, position):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", position)


class ArityError(ExpressionError):
    def __init__(self, name, got, position):
        self.name = name
        super().__init__(f"function {name!r} takes 1 argument, got {got}", position)


class UnbalancedParenthesesError(ExpressionError):
    pass


# AST nodes -----------------------------------------------------------------


class Expression:
    """Base class of AST nodes."""

    def evaluate(self, x):
        raise NotImplementedError

    def derivative(self) -> "Expression":
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def evaluate(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def derivative(self):
        return Num(0.0)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expression):
    def evaluate(self, x):
        return np.asarray(x, dtype=float) + 0.0

    def derivative(self):
        return Num(1.0)

    def __str__(self):
        return "x"


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def evaluate(self, x):
        return -self.arg.evaluate(x)

    def derivative(self):
        return _neg(self.arg.derivative())

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class Bin(Expression):
    op: str
    left: Expression
    right: Expression

    def evaluate(self, x):
        a, b = self.left.evaluate(x), self.right.evaluate(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)

    def derivative(self):
        f, g = self.left, self.right
        df, dg = f.derivative(), g.derivative()
        if self.op in "+-":
            return _bin(self.op, df, dg)
        if self.op == "*":
            return _bin("+", _bin("*", df, g), _bin("*", f, dg))
        if self.op == "/":
            return _bin("/", _bin("-", _bin("*", df, g), _bin("*", f, dg)), _bin("^", g, Num(2.0)))
        # f^g with constant exponent stays polynomial; otherwise use f^g (g' ln f + g f'/f)
        if _is_const(dg) and dg.value == 0.0:
            return _bin("*", _bin("*", g, _bin("^", f, _bin("-", g, Num(1.0)))), df)
        return _bin(
            "*",
            self,
            _bin("+", _bin("*", dg, Call("log", f)), _bin("/", _bin("*", g, df), f)),
        )

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call(Expression):
    name: str
    arg: Expression

    def evaluate(self, x):
        a = self.arg.evaluate(x)
        if self.name == "log":
            return np.log(a)
        return FUNCTIONS[self.name](a)

    def derivative(self):
        u, du = self.arg, self.arg.derivative()
        if self.name == "sin":
            outer = Call("cos", u)
        elif self.name == "cos":
            outer = _neg(Call("sin", u))
        elif self.name == "exp":
            outer = self
        elif self.name == "log":
            outer = _bin("/", Num(1.0), u)
        else:
            outer = Call("sign", u)
        return _bin("*", outer, du)

    def __str__(self):
        return f"{self.name}({self.arg})"


FUNCTIONS["sign"] = np.sign


def _is_const(e):
    return isinstance(e, Num)


def _neg(e):
    if isinstance(e, Num):
        return Num(-e.value)
    return Neg(e)


def _bin(op, a, b):
    # light constant folding keeps derivative trees small
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(float(Bin(op, a, b).evaluate(0.0)))
    if op == "*":
        if (isinstance(a, Num) and a.value == 0.0) or (isinstance(b, Num) and b.value == 0.0):
            return Num(0.0)
        if isinstance(a, Num) and a.value == 1.0:
            return b
        if isinstance(b, Num) and b.value == 1.0:
            return a
    if op == "+":
        if isinstance(a, Num) and a.value == 0.0:
            return b
        if isinstance(b, Num) and b.value == 0.0:
            return a
    if op == "-" and isinstance(b, Num) and b.value == 0.0:
        return a
    return Bin(op, a, b)


# Parser ----------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text):
    toks, pos = [], 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            break
        num, name, ch = mt.groups()
        start = mt.start(mt.lastindex)
        if num is not None:
            toks.append(_Tok("num", num, start))
        elif name is not None:
            toks.append(_Tok("name", name, start))
        elif ch is not None and not ch.isspace():
            if ch not in "+-*/^(),":
                raise ExpressionError(f"unexpected character {ch!r}", start)
            toks.append(_Tok("op", ch, start))
        pos = mt.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def parse(self):
        if self.cur.kind == "end":
            raise ExpressionError("empty expression", 0)
        e = self.expr()
        t = self.cur
        if t.kind != "end":
            if t.text == ")":
                raise UnbalancedParenthesesError("unmatched ')'", t.pos)
            raise ExpressionError(f"unexpected token {t.text!r}", t.pos)
        return e

    def expr(self):
        e = self.term()
        while self.cur.kind == "op" and self.cur.text in "+-":
            op = self.take().text
            e = Bin(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.cur.kind == "op" and self.cur.text in "*/":
            op = self.take().text
            e = Bin(op, e, self.unary())
        return e

    def unary(self):
        if self.cur.kind == "op" and self.cur.text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        t = self.take()
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "name":
            if t.text == "x":
                return Var()
            if t.text == "pi":
                return Num(math.pi)
            if t.text in ("sin", "cos", "exp", "abs"):
                return self.call(t)
            raise UnknownIdentifierError(t.text, t.pos)
        if t.kind == "op" and t.text == "(":
            e = self.expr()
            close = self.take()
            if close.text != ")":
                raise UnbalancedParenthesesError("missing ')' for '('", t.pos)
            return e
        if t.kind == "end":
            raise ExpressionError("unexpected end of expression", t.pos)
        if t.text == ")":
            raise UnbalancedParenthesesError("unmatched ')'", t.pos)
        raise ExpressionError(f"unexpected token {t.text!r}", t.pos)

    def call(self, name_tok):
        open_ = self.take()
        if open_.text != "(":
            raise ArityError(name_tok.text, 0, name_tok.pos)
        if self.cur.text == ")":
            self.take()
            raise ArityError(name_tok.text, 0, name_tok.pos)
        args = [self.expr()]
        while self.cur.kind == "op" and self.cur.text == ",":
            self.take()
            args.append(self.expr())
        close = self.take()
        if close.text != ")":
            raise UnbalancedParenthesesError("missing ')' for '('", open_.pos)
        if len(args) != 1:
            raise ArityError(name_tok.text, len(args), name_tok.pos)
        return Call(name_tok.text, args[0])


def parse_expression(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises
    ------
    UnknownIdentifierError, ArityError, UnbalancedParenthesesError
        Distinct diagnostics, each carrying the offending position.
    ExpressionError
        Any other syntax error.
    """
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()
