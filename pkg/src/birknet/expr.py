"""Expression mini-language for scalar device characteristics.

Grammar (single variable ``x``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' ['-'] INT)?
    atom   := NUMBER | 'x' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | exp | tanh | ln | sqrt

Trees are evaluated with dual numbers, which yields the value and the
first derivative in one pass.  ``compile_expr`` lowers a tree to a flat
stack program consumed by :mod:`birknet.kernels`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "tanh", "ln", "sqrt")


class ExprSyntaxError(ValueError):
    """Raised for malformed expressions; ``pos`` is a 0-based column."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (column {pos + 1})")
        self.message = message
        self.pos = pos


class DomainError(ArithmeticError):
    """Evaluation left the domain of an operation (ln, sqrt, division)."""

    def __init__(self, message: str, subexpr: "Node | None" = None):
        if subexpr is not None:
            message = f"{message} in '{to_str(subexpr)}'"
        super().__init__(message)
        self.subexpr = subexpr


# --------------------------------------------------------------------------
# tree
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Pow, Call]


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append((kind, match.group(kind), start))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, pos = self.take()
        if kind != "op" or value != op:
            found = value or "end of input"
            raise ExprSyntaxError(f"expected {op!r}, found {found!r}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {value!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.take()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.take()
                node = BinOp(value, node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and value == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.take()
            sign = 1
            kind, value, pos = self.peek()
            if kind == "op" and value == "-":
                self.take()
                sign = -1
                kind, value, pos = self.peek()
            if kind != "num" or not value.isdigit():
                raise ExprSyntaxError("exponent must be an integer literal", pos)
            self.take()
            return Pow(base, sign * int(value))
        return base

    def atom(self) -> Node:
        kind, value, pos = self.take()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value == "x":
                return Var()
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            raise ExprSyntaxError(f"unknown name {value!r}", pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse_expr(text: str) -> Node:
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# printing
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_const(value: float) -> str:
    text = repr(float(value))
    if text in ("inf", "nan", "-inf"):
        raise ValueError(f"cannot print non-finite constant {value}")
    return text


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    if isinstance(node, Const) and node.value < 0:
        return 3
    return 5


def to_str(node: Node) -> str:
    """Canonical text with the minimal parentheses needed to re-parse."""
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Call):
        return f"{node.fn}({to_str(node.arg)})"
    if isinstance(node, Pow):
        base = to_str(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Neg):
        inner = to_str(node.arg)
        if _prec(node.arg) < 3 or isinstance(node.arg, Neg):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = to_str(node.left)
        if _prec(node.left) < p:
            left = f"({left})"
        right = to_str(node.right)
        rp = _prec(node.right)
        if rp < p or (rp == p and node.op in "-/") or rp == 3:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# dual-number evaluation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Dual:
    """value + derivative * eps with eps**2 == 0."""

    val: float
    der: float = 0.0

    def __add__(self, other: "Dual") -> "Dual":
        return Dual(self.val + other.val, self.der + other.der)

    def __sub__(self, other: "Dual") -> "Dual":
        return Dual(self.val - other.val, self.der - other.der)

    def __mul__(self, other: "Dual") -> "Dual":
        return Dual(self.val * other.val, self.val * other.der + self.der * other.val)

    def __truediv__(self, other: "Dual") -> "Dual":
        q = self.val / other.val
        return Dual(q, (self.der - q * other.der) / other.val)

    def __neg__(self) -> "Dual":
        return Dual(-self.val, -self.der)

    def powi(self, n: int) -> "Dual":
        if n == 0:
            return Dual(1.0, 0.0)
        return Dual(self.val**n, n * self.val ** (n - 1) * self.der)


def _eval(node: Node, x: Dual) -> Dual:
    if isinstance(node, Const):
        return Dual(node.value, 0.0)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b.val == 0.0:
            raise DomainError("division by zero", node)
        return a / b
    if isinstance(node, Pow):
        a = _eval(node.base, x)
        if node.exponent < 0 and a.val == 0.0:
            raise DomainError("negative power of zero", node)
        return a.powi(node.exponent)
    if isinstance(node, Call):
        a = _eval(node.arg, x)
        v, d = a.val, a.der
        fn = node.fn
        if fn == "sin":
            return Dual(math.sin(v), math.cos(v) * d)
        if fn == "cos":
            return Dual(math.cos(v), -math.sin(v) * d)
        if fn == "exp":
            e = math.exp(v)
            return Dual(e, e * d)
        if fn == "tanh":
            t = math.tanh(v)
            return Dual(t, (1.0 - t * t) * d)
        if fn == "ln":
            if v <= 0.0:
                raise DomainError("logarithm of non-positive value", node)
            return Dual(math.log(v), d / v)
        if fn == "sqrt":
            if v < 0.0:
                raise DomainError("square root of negative value", node)
            if v == 0.0:
                if d != 0.0:
                    raise DomainError("square root not differentiable at 0", node)
                return Dual(0.0, 0.0)
            s = math.sqrt(v)
            return Dual(s, d / (2.0 * s))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, x: float) -> tuple[float, float]:
    """Return ``(f(x), f'(x))`` by walking the tree with a dual number."""
    try:
        out = _eval(node, Dual(float(x), 1.0))
    except OverflowError as exc:
        raise DomainError(f"overflow: {exc}", node) from None
    return out.val, out.der


# --------------------------------------------------------------------------
# stack programs
# --------------------------------------------------------------------------

# opcodes; _ckernels.pyx and _pykernels.py mirror these numbers
OP_CONST = 0
OP_VAR = 1
OP_NEG = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_POWI = 7
OP_SIN = 8
OP_COS = 9
OP_EXP = 10
OP_TANH = 11
OP_LN = 12
OP_SQRT = 13

MAX_STACK = 64

_BINOPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}
_CALLS = {
    "sin": OP_SIN,
    "cos": OP_COS,
    "exp": OP_EXP,
    "tanh": OP_TANH,
    "ln": OP_LN,
    "sqrt": OP_SQRT,
}


@dataclass(frozen=True)
class Program:
    """Postfix program: ``code`` holds (opcode, argument) pairs."""

    code: np.ndarray  # int32, shape (2 * n_ops,)
    consts: np.ndarray  # float64
    stack_size: int

    @property
    def n_ops(self) -> int:
        return len(self.code) // 2


def compile_expr(node: Node) -> Program:
    code: list[int] = []
    consts: list[float] = []
    depth = 0
    max_depth = 0

    def push(n: int):
        nonlocal depth, max_depth
        depth += n
        max_depth = max(max_depth, depth)

    def emit(node: Node):
        if isinstance(node, Const):
            code.extend((OP_CONST, len(consts)))
            consts.append(float(node.value))
            push(1)
        elif isinstance(node, Var):
            code.extend((OP_VAR, 0))
            push(1)
        elif isinstance(node, Neg):
            emit(node.arg)
            code.extend((OP_NEG, 0))
        elif isinstance(node, BinOp):
            emit(node.left)
            emit(node.right)
            code.extend((_BINOPS[node.op], 0))
            push(-1)
        elif isinstance(node, Pow):
            emit(node.base)
            code.extend((OP_POWI, node.exponent))
        elif isinstance(node, Call):
            emit(node.arg)
            code.extend((_CALLS[node.fn], 0))
        else:
            raise TypeError(f"not an expression node: {node!r}")

    emit(node)
    if max_depth > MAX_STACK:
        raise ExprSyntaxError(f"expression nests deeper than {MAX_STACK}", 0)
    return Program(
        np.asarray(code, dtype=np.int32),
        np.asarray(consts, dtype=np.float64),
        max_depth,
    )


def linear_resistor(value: float) -> Node:
    """R(x) = value * x."""
    return BinOp("*", Const(float(value)), Var())


def linear_capacitor(value: float) -> Node:
    """C(s) = s / value."""
    return BinOp("/", Var(), Const(float(value)))


def constant(value: float) -> Node:
    return Const(float(value))
