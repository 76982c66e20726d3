"""Netlist reader for R/L/C networks.

File format, one item per line::

    .nodes <N>              number of nodes (default: largest index used)
    .ref <node>             reference node (default: N)
    .ic <branch> <value>    capacitor charge [C] or inductor current [A]
    <Name> <from> <to> <model>
    # comment

``<model>`` is either a bare nonzero real (a linear device) or
``expr: <expression>`` giving the characteristic R(i), L(i) or C(q) in the
variable ``x``.  Branches are reordered resistors, inductors, capacitors;
``NetlistDoc.permutation`` maps normalized positions to input positions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Union

from birknet import expr as ex
from birknet import kernels


class NetlistError(ValueError):
    """Parse or validation error with a 1-based source location."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + message)
        self.message = message
        self.line = line
        self.col = col


class Kind(str, Enum):
    RESISTOR = "R"
    INDUCTOR = "L"
    CAPACITOR = "C"


_KIND_ORDER = {Kind.RESISTOR: 0, Kind.INDUCTOR: 1, Kind.CAPACITOR: 2}


@dataclass(frozen=True)
class LinearConst:
    value: float

    def __post_init__(self):
        if self.value == 0 or not math.isfinite(self.value):
            raise ValueError(f"linear device value must be finite and nonzero, got {self.value}")

    def __str__(self) -> str:
        return repr(float(self.value))


@dataclass(frozen=True)
class ExprModel:
    tree: ex.Node

    @classmethod
    def parse(cls, text: str) -> "ExprModel":
        return cls(ex.parse_expr(text))

    @cached_property
    def program(self) -> ex.Program:
        return ex.compile_expr(self.tree)

    def __str__(self) -> str:
        return "expr: " + ex.to_str(self.tree)


DeviceModel = Union[LinearConst, ExprModel]


@dataclass(frozen=True)
class Branch:
    name: str
    kind: Kind
    from_node: int
    to_node: int
    model: DeviceModel

    @property
    def is_linear(self) -> bool:
        return isinstance(self.model, LinearConst)


@dataclass
class NetlistDoc:
    branches: list[Branch]
    node_count: int
    reference_node: int
    initial_conditions: dict[str, float] = field(default_factory=dict)
    permutation: list[int] = field(default_factory=list)

    @property
    def b(self) -> int:
        return len(self.branches)

    def count(self, kind: Kind) -> int:
        return sum(1 for br in self.branches if br.kind is kind)

    @property
    def r(self) -> int:
        return self.count(Kind.RESISTOR)

    @property
    def k(self) -> int:
        return self.count(Kind.INDUCTOR)

    @property
    def p(self) -> int:
        return self.count(Kind.CAPACITOR)

    @property
    def all_linear(self) -> bool:
        return all(br.is_linear for br in self.branches)

    def index(self, name: str) -> int:
        key = name.upper()
        for i, br in enumerate(self.branches):
            if br.name.upper() == key:
                return i
        raise KeyError(name)

    def initial_value(self, i: int) -> float:
        return self.initial_conditions.get(self.branches[i].name, 0.0)


_INT_RE = re.compile(r"[+-]?\d+$")


def _real(token: str, line: int, col: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise NetlistError(f"expected a real number, found {token!r}", line, col) from None
    if not math.isfinite(value):
        raise NetlistError(f"value must be finite, found {token!r}", line, col)
    return value


def _node(token: str, line: int, col: int) -> int:
    if not _INT_RE.match(token):
        raise NetlistError(f"expected a node index, found {token!r}", line, col)
    value = int(token)
    if value < 1:
        raise NetlistError(f"node indices start at 1, found {value}", line, col)
    return value


def _split(text: str) -> list[tuple[str, int]]:
    """Whitespace tokens with 1-based start columns."""
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]


def parse_netlist(text: str) -> NetlistDoc:
    branches: list[tuple[Branch, int]] = []
    seen: dict[str, int] = {}
    ics: list[tuple[str, float, int, int]] = []
    nodes_decl: tuple[int, int, int] | None = None
    ref_decl: tuple[int, int, int] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = _split(line)
        head, head_col = tokens[0]

        if head.startswith("."):
            directive = head.lower()
            args = tokens[1:]
            if directive == ".nodes":
                if len(args) != 1:
                    raise NetlistError(".nodes takes one argument", lineno, head_col)
                nodes_decl = (_node(args[0][0], lineno, args[0][1]), lineno, args[0][1])
            elif directive == ".ref":
                if len(args) != 1:
                    raise NetlistError(".ref takes one argument", lineno, head_col)
                ref_decl = (_node(args[0][0], lineno, args[0][1]), lineno, args[0][1])
            elif directive == ".ic":
                if len(args) != 2:
                    raise NetlistError(".ic takes a branch name and a value", lineno, head_col)
                value = _real(args[1][0], lineno, args[1][1])
                ics.append((args[0][0], value, lineno, args[0][1]))
            else:
                raise NetlistError(f"unknown directive {head!r}", lineno, head_col)
            continue

        letter = head[0].upper()
        if letter not in ("R", "L", "C"):
            raise NetlistError(f"unknown device letter {head[0]!r} in {head!r}", lineno, head_col)
        if not re.match(r"[A-Za-z][A-Za-z0-9_]*$", head):
            raise NetlistError(f"invalid branch name {head!r}", lineno, head_col)
        if head.upper() in seen:
            raise NetlistError(
                f"duplicate branch name {head!r} (first on line {seen[head.upper()]})",
                lineno,
                head_col,
            )
        if len(tokens) < 4:
            raise NetlistError("branch needs: <name> <from> <to> <model>", lineno, head_col)
        from_node = _node(tokens[1][0], lineno, tokens[1][1])
        to_node = _node(tokens[2][0], lineno, tokens[2][1])
        if from_node == to_node:
            raise NetlistError(f"branch {head} is a self-loop on node {from_node}", lineno, tokens[2][1])

        model_col = tokens[3][1]
        model_text = line[model_col - 1 :]
        if model_text.lower().startswith("expr:"):
            body = model_text[5:]
            try:
                model: DeviceModel = ExprModel.parse(body)
            except ex.ExprSyntaxError as exc:
                offset = model_col + 5 + exc.pos
                raise NetlistError(exc.message, lineno, offset) from None
        else:
            if len(tokens) != 4:
                raise NetlistError("unexpected text after device value", lineno, tokens[4][1])
            value = _real(tokens[3][0], lineno, model_col)
            if value == 0.0:
                raise NetlistError("linear device value must be nonzero", lineno, model_col)
            model = LinearConst(value)

        seen[head.upper()] = lineno
        branches.append((Branch(head, Kind(letter), from_node, to_node, model), lineno))

    if not branches:
        raise NetlistError("no branches")

    max_node = max(max(br.from_node, br.to_node) for br, _ in branches)
    if nodes_decl is not None:
        node_count = nodes_decl[0]
        for br, lineno in branches:
            if max(br.from_node, br.to_node) > node_count:
                raise NetlistError(
                    f"branch {br.name} uses a node above .nodes {node_count}", lineno
                )
    else:
        node_count = max_node
    if node_count < 2:
        raise NetlistError("a network needs at least two nodes")

    if ref_decl is not None:
        reference = ref_decl[0]
        if reference > node_count:
            raise NetlistError(
                f"reference node {reference} out of range 1..{node_count}", ref_decl[1], ref_decl[2]
            )
    else:
        reference = node_count

    by_name = {br.name.upper(): br for br, _ in branches}
    initial: dict[str, float] = {}
    for name, value, lineno, col in ics:
        br = by_name.get(name.upper())
        if br is None:
            raise NetlistError(f".ic names unknown branch {name!r}", lineno, col)
        if br.kind is Kind.RESISTOR:
            raise NetlistError(f".ic on resistor {br.name} is not allowed", lineno, col)
        initial[br.name] = value

    order = sorted(range(len(branches)), key=lambda i: _KIND_ORDER[branches[i][0].kind])
    return NetlistDoc(
        branches=[branches[i][0] for i in order],
        node_count=node_count,
        reference_node=reference,
        initial_conditions=initial,
        permutation=order,
    )


def format_netlist(doc: NetlistDoc) -> str:
    """Text that parses back to an equivalent (already normalized) document."""
    lines = [f".nodes {doc.node_count}", f".ref {doc.reference_node}"]
    for br in doc.branches:
        lines.append(f"{br.name} {br.from_node} {br.to_node} {br.model}")
    for name, value in doc.initial_conditions.items():
        lines.append(f".ic {name} {value!r}")
    return "\n".join(lines) + "\n"


def eval_model(model: DeviceModel, x: float) -> tuple[float, float]:
    """Value and derivative of a device model at ``x``.

    A ``LinearConst`` is the constant itself, so it returns ``(c, 0)``; the
    device law that consumes it lives in :func:`characteristic`.
    """
    if isinstance(model, LinearConst):
        return float(model.value), 0.0
    status, f, d = kernels.eval_program(model.program, x)
    if status == kernels.OK:
        return float(f), float(d)
    # the tree walk names the failing subexpression
    f, d = ex.evaluate(model.tree, x)
    if not (math.isfinite(f) and math.isfinite(d)):
        raise ex.DomainError(f"non-finite value at x={x!r}", model.tree)
    raise ex.DomainError(f"evaluation failed at x={x!r}", model.tree)


def characteristic_tree(branch: Branch) -> ex.Node:
    """The device law as a function of current (R, L) or charge (C)."""
    model = branch.model
    if isinstance(model, ExprModel):
        return model.tree
    if branch.kind is Kind.RESISTOR:
        return ex.linear_resistor(model.value)
    if branch.kind is Kind.CAPACITOR:
        return ex.linear_capacitor(model.value)
    return ex.constant(model.value)


def characteristic_program(branch: Branch) -> ex.Program:
    if isinstance(branch.model, ExprModel):
        return branch.model.program
    return ex.compile_expr(characteristic_tree(branch))


def characteristic(branch: Branch, x: float) -> tuple[float, float]:
    """(f(x), f'(x)) of the device law: R(i), L(i) or C(q)."""
    model = branch.model
    if isinstance(model, LinearConst):
        c = float(model.value)
        if branch.kind is Kind.RESISTOR:
            return c * x, c
        if branch.kind is Kind.CAPACITOR:
            return x / c, 1.0 / c
        return c, 0.0
    return eval_model(model, x)
