"""Arithmetic expression language for index sequences and matrix elements.

Expressions describe eigenvalue sequences ``lambda(n)``, vector sequences
``v(n)`` and matrix-element rules ``a(m, n)`` over 1-based integer indices.
Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;
    atom    = number | name | name , "(" , expr , { "," , expr } , ")"
            | "(" , expr , ")" ;
    number  = digits , [ "." , [ digits ] ] , [ exponent ]
            | "." , digits , [ exponent ] ;
    exponent = ("e" | "E") , [ "+" | "-" ] , digits ;

So ``^`` binds tighter than unary minus (``-n^2`` is ``-(n^2)``) and is
right-associative; ``+ - * /`` are left-associative.  Functions are
``exp``, ``log``, ``sqrt``, ``abs`` (one argument) and ``pow`` (two).

Evaluation is real-valued IEEE double arithmetic.  Division by zero, log of
a nonpositive number, sqrt of a negative number, a negative base raised to
a non-integer power and overflow in ``exp``/``^`` raise
:class:`EvaluationError` carrying the offending index bindings.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "DslError",
    "LexError",
    "ParseError",
    "UnknownVariableError",
    "EvaluationError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expr",
    "parse",
    "evaluate",
    "evaluate_grid",
    "to_source",
    "variables",
    "FUNCTIONS",
]

MAX_NESTING = 64
MAX_TREE_DEPTH = 256


class DslError(ValueError):
    """Base class for expression errors."""


class LexError(DslError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ParseError(DslError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownVariableError(ParseError):
    def __init__(self, name: str, offset: int, allowed):
        super().__init__(
            f"unknown variable '{name}' (declared: {', '.join(sorted(allowed)) or 'none'})", offset
        )
        self.name = name


class EvaluationError(DslError):
    def __init__(self, message: str, bindings: Mapping[str, float]):
        where = ", ".join(f"{k}={_fmt_index(v)}" for k, v in sorted(bindings.items()))
        super().__init__(f"{message} at ({where})" if where else message)
        self.bindings = dict(bindings)


def _fmt_index(v):
    return str(int(v)) if float(v).is_integer() else repr(v)


# AST -----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


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
    func: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]

FUNCTIONS = {"exp": 1, "log": 1, "sqrt": 1, "abs": 1, "pow": 2}


# Lexer ---------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), _byte_offset(source, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(source, len(source))))
    return tokens


# Parser --------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, allowed: frozenset):
        self.tokens = _tokenize(source)
        self.i = 0
        self.allowed = allowed
        self.depth = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _describe(self, tok: _Token) -> str:
        return "end of input" if tok.kind == "end" else repr(tok.text)

    def expect(self, text: str):
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(f"expected '{text}', found {self._describe(self.tok)}", self.tok.offset)
        self.i += 1

    def enter(self):
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ParseError("expression nested too deeply", self.tok.offset)

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise ParseError("empty expression", self.tok.offset)
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"expected operator or end of input, found {self._describe(self.tok)}", self.tok.offset)
        return node

    def expr(self) -> Expr:
        self.enter()
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        self.depth -= 1
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            self.enter()
            node = Neg(self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            self.enter()
            exponent = self.unary()
            self.depth -= 1
            return BinOp("^", base, exponent)
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(f"literal {tok.text!r} overflows a double", tok.offset)
            return Num(value)
        if tok.kind == "name":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            if tok.text in FUNCTIONS:
                raise ParseError(f"expected '(' after function '{tok.text}', found {self._describe(self.tok)}", self.tok.offset)
            if tok.text not in self.allowed:
                raise UnknownVariableError(tok.text, tok.offset, self.allowed)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"expected number, variable, function or '(', found {self._describe(tok)}", tok.offset)

    def call(self, name: _Token) -> Expr:
        if name.text not in FUNCTIONS:
            raise ParseError(f"unknown function '{name.text}'", name.offset)
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.i += 1
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name.text]
        if len(args) != arity:
            raise ParseError(f"function '{name.text}' takes {arity} argument(s), got {len(args)}", name.offset)
        return Call(name.text, tuple(args))


def parse(source: str, vars=("n",)) -> Expr:
    """Parse ``source`` with variables restricted to ``vars``."""
    if not isinstance(source, str):
        raise TypeError("expression source must be a string")
    allowed = frozenset(vars)
    tree = _Parser(source, allowed).parse()
    if _tree_depth(tree) > MAX_TREE_DEPTH:
        raise ParseError(f"expression deeper than {MAX_TREE_DEPTH} levels", 0)
    return tree


def _children(e: Expr) -> tuple:
    if isinstance(e, Neg):
        return (e.operand,)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, Call):
        return e.args
    return ()


def _tree_depth(e: Expr) -> int:
    deepest = 0
    stack = [(e, 1)]
    while stack:
        node, d = stack.pop()
        deepest = max(deepest, d)
        stack.extend((c, d + 1) for c in _children(node))
    return deepest


def variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    return frozenset().union(*(variables(a) for a in e.args))


# Printer -------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def _wrap(e: Expr, needs: bool) -> str:
    s = to_source(e)
    return f"({s})" if needs else s


def to_source(e: Expr) -> str:
    """Print with the minimal parentheses needed to re-parse to ``e``."""
    if isinstance(e, Num):
        if not math.isfinite(e.value) or e.value < 0:
            raise ValueError(f"literal {e.value!r} has no source form")
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, _prec(e.operand) < _PREC["neg"])
    p = _PREC[e.op]
    if e.op == "^":
        left = _wrap(e.left, _prec(e.left) <= p)
        right = _wrap(e.right, _prec(e.right) < _PREC["neg"])
        return f"{left}^{right}"
    left = _wrap(e.left, _prec(e.left) < p)
    right = _wrap(e.right, _prec(e.right) <= p)
    return f"{left} {e.op} {right}"


# Scalar evaluation ---------------------------------------------------------


def _power(base: float, exponent: float, env) -> float:
    if base < 0 and not float(exponent).is_integer():
        raise EvaluationError("negative base raised to a non-integer power", env)
    if base == 0 and exponent < 0:
        raise EvaluationError("division by zero (zero raised to a negative power)", env)
    try:
        return float(base) ** float(exponent)
    except OverflowError:
        raise EvaluationError("overflow in power", env) from None


def _eval(e: Expr, env: Mapping[str, float]) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0:
                raise EvaluationError("division by zero", env)
            return a / b
        return _power(a, b, env)
    args = [_eval(a, env) for a in e.args]
    x = args[0]
    if e.func == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            raise EvaluationError("overflow in exp", env) from None
    if e.func == "log":
        if x <= 0:
            raise EvaluationError("log of a nonpositive number", env)
        return math.log(x)
    if e.func == "sqrt":
        if x < 0:
            raise EvaluationError("sqrt of a negative number", env)
        return math.sqrt(x)
    if e.func == "abs":
        return abs(x)
    return _power(x, args[1], env)


def evaluate(e: Expr, bindings: Mapping[str, float] | None = None, **kw) -> float:
    """Evaluate ``e`` with integer indices bound as doubles."""
    env = dict(bindings or {})
    env.update(kw)
    missing = variables(e) - env.keys()
    if missing:
        raise EvaluationError(f"unbound variable(s) {', '.join(sorted(missing))}", {})
    env = {k: float(v) for k, v in env.items()}
    return float(_eval(e, env))


# Vectorized evaluation -----------------------------------------------------


class _GridEval:
    """Evaluate over broadcast index arrays with the scalar error semantics."""

    def __init__(self, arrays: Mapping[str, np.ndarray]):
        self.arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
        self.shape = np.broadcast_shapes(*(a.shape for a in self.arrays.values())) if self.arrays else ()

    def fail(self, message: str, mask: np.ndarray):
        mask = np.broadcast_to(mask, self.shape)
        idx = tuple(int(i[0]) for i in np.nonzero(mask))
        env = {k: float(np.broadcast_to(v, self.shape)[idx]) for k, v in self.arrays.items()}
        raise EvaluationError(message, env)

    def power(self, a, b):
        bad = (a < 0) & (b != np.floor(b))
        if np.any(bad):
            self.fail("negative base raised to a non-integer power", bad)
        bad = (a == 0) & (b < 0)
        if np.any(bad):
            self.fail("division by zero (zero raised to a negative power)", bad)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.power(a, b)
        bad = ~np.isfinite(out) & np.isfinite(a) & np.isfinite(b)
        if np.any(bad):
            self.fail("overflow in power", bad)
        return out

    def run(self, e: Expr):
        if isinstance(e, Num):
            return np.float64(e.value)
        if isinstance(e, Var):
            return self.arrays[e.name]
        if isinstance(e, Neg):
            return -self.run(e.operand)
        if isinstance(e, BinOp):
            a = self.run(e.left)
            b = self.run(e.right)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                if np.any(b == 0):
                    self.fail("division by zero", b == 0)
                return a / b
            return self.power(a, b)
        args = [self.run(a) for a in e.args]
        x = args[0]
        if e.func == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(x)
            bad = np.isinf(out) & np.isfinite(x)
            if np.any(bad):
                self.fail("overflow in exp", bad)
            return out
        if e.func == "log":
            if np.any(x <= 0):
                self.fail("log of a nonpositive number", x <= 0)
            return np.log(x)
        if e.func == "sqrt":
            if np.any(x < 0):
                self.fail("sqrt of a negative number", x < 0)
            return np.sqrt(x)
        if e.func == "abs":
            return np.abs(x)
        return self.power(x, args[1])


def evaluate_grid(e: Expr, **arrays) -> np.ndarray:
    """Evaluate ``e`` elementwise over broadcast index arrays.

    >>> import numpy as np
    >>> evaluate_grid(parse("1/(m*n)", {"m", "n"}), m=np.array([[2]]), n=np.array([[4]]))
    array([[0.125]])
    """
    missing = variables(e) - arrays.keys()
    if missing:
        raise EvaluationError(f"unbound variable(s) {', '.join(sorted(missing))}", {})
    ev = _GridEval(arrays)
    out = np.asarray(ev.run(e), dtype=np.float64)
    return np.broadcast_to(out, ev.shape).copy()
