"""Arithmetic expressions over named variables.

This is the definition language for structure functions and Lagrangians:
a small grammar of constants, variables, unary functions and binary
operators, parsed to an immutable tree.  Evaluation comes in two flavors,
plain IEEE-double evaluation and second-order truncated-Taylor (jet)
evaluation that returns exact gradients and Hessians with respect to a
chosen set of seed variables.

Grammar (versioned, v1)::

    expr    :=  sum
    sum     :=  product (('+' | '-') product)*        # left associative
    product :=  unary (('*' | '/') unary)*            # left associative
    unary   :=  '-' unary | power
    power   :=  atom ('^' unary)?                     # right associative
    atom    :=  NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
    IDENT   :=  [A-Za-z_][A-Za-z0-9_]*
    NUMBER  :=  (\\d+ ('.' \\d*)? | '.' \\d+) ([eE] [+-]? \\d+)?

Unary minus binds tighter than '*' and '/' (so ``-a/b`` is ``(-a)/b``)
but looser than '^' (so ``-a^2`` is ``-(a^2)``).  Function application
requires parentheses.  Whitespace is insignificant.

Power semantics: an integer constant exponent is computed by repeated
multiplication (negative bases work); a non-integer constant exponent
requires a positive base (DomainError otherwise); a non-constant
exponent is evaluated as exp(e*log(b)).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence, Union

from .errors import ParseError, UnboundVariable, UnknownFunction

__all__ = [
    "Expression", "Constant", "Variable", "Unary", "Binary",
    "parse", "format_expression", "evaluate", "evaluate_jet2", "Jet2",
    "variables", "substitute", "UNARY_OPS", "BINARY_OPS",
]

UNARY_OPS = ("neg", "sin", "cos", "tan", "exp", "log", "sqrt", "abs")
BINARY_OPS = ("+", "-", "*", "/", "^")

_FUNCTIONS = frozenset(op for op in UNARY_OPS if op != "neg")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self):
        if not _IDENT_RE.fullmatch(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Expression"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


Expression = Union[Constant, Variable, Unary, Binary]

ZERO = Constant(0.0)
ONE = Constant(1.0)


def is_zero(e: Expression) -> bool:
    """True for the literal constant 0 (used for structural elision)."""
    return isinstance(e, Constant) and e.value == 0.0


# --------------------------------------------------------------------------
# Tokenizer / parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            # skip leading whitespace manually before declaring failure
            stripped = pos
            while stripped < n and text[stripped].isspace():
                stripped += 1
            if stripped >= n:
                break
            raise ParseError(
                f"unexpected character {text[stripped]!r}",
                _byte_offset(text, stripped),
                expected={"number", "identifier", "operator"},
            )
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), _byte_offset(text, m.start(kind))))
        pos = m.end()
    tokens.append(("eof", "", _byte_offset(text, n)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        self.i += 1

    def expect_op(self, op, expected):
        kind, value, off = self.tok
        if kind != "op" or value != op:
            raise ParseError(f"unexpected {value!r}" if kind != "eof" else "unexpected end of input",
                             off, expected=expected)
        self.advance()

    def parse(self) -> Expression:
        e = self.sum()
        kind, value, off = self.tok
        if kind != "eof":
            raise ParseError(f"unexpected {value!r}", off, expected={"end of input", "operator"})
        return e

    def sum(self) -> Expression:
        e = self.product()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.advance()
            e = Binary(op, e, self.product())
        return e

    def product(self) -> Expression:
        e = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self.advance()
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expression:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            operand = self.unary()
            # Fold negated literals so negative constants survive a
            # format/parse round trip as Constant nodes.
            if isinstance(operand, Constant):
                return Constant(-operand.value)
            return Unary("neg", operand)
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, value, off = self.tok
        if kind == "number":
            self.advance()
            return Constant(float(value))
        if kind == "ident":
            self.advance()
            if self.tok[0] == "op" and self.tok[1] == "(":
                if value not in _FUNCTIONS:
                    raise UnknownFunction(value, off)
                self.advance()
                arg = self.sum()
                self.expect_op(")", expected={")"})
                return Unary(value, arg)
            return Variable(value)
        if kind == "op" and value == "(":
            self.advance()
            e = self.sum()
            self.expect_op(")", expected={")"})
            return e
        raise ParseError("unexpected end of input" if kind == "eof" else f"unexpected {value!r}",
                         off, expected={"number", "identifier", "(", "-"})


def parse(text: str) -> Expression:
    """Parse expression text into its unique AST under the v1 grammar."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Canonical printing
# --------------------------------------------------------------------------

def _format_constant(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"constant {value!r} is not representable in the grammar")
    if value == int(value) and abs(value) < 1e16:
        body = str(int(abs(value)))
    else:
        body = repr(abs(value))
    return f"(-{body})" if value < 0 or (value == 0 and str(value)[0] == "-") else body


def format_expression(e: Expression) -> str:
    """Emit fully parenthesized canonical text; parse(format(e)) == e."""
    if isinstance(e, Constant):
        return _format_constant(e.value)
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-({format_expression(e.child)}))"
        return f"{e.op}({format_expression(e.child)})"
    return f"({format_expression(e.left)} {e.op} {format_expression(e.right)})"


# --------------------------------------------------------------------------
# Structural helpers
# --------------------------------------------------------------------------

def variables(e: Expression) -> frozenset:
    """Names of all variables occurring in ``e``."""
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Variable):
            out.add(node.name)
        elif isinstance(node, Unary):
            stack.append(node.child)
        elif isinstance(node, Binary):
            stack.append(node.left)
            stack.append(node.right)
    return frozenset(out)


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions (used to bind parameters and to
    rename user-facing coordinates to canonical ones)."""
    if isinstance(e, Variable):
        return mapping.get(e.name, e)
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.child, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    return e


def bind_parameters(e: Expression, params: Mapping[str, float]) -> Expression:
    """Bind free parameters to constants, once, at load time."""
    if not params:
        return e
    return substitute(e, {k: Constant(float(v)) for k, v in params.items()})


# --------------------------------------------------------------------------
# Evaluation (both flavors run on the compiled tape backend)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Jet2:
    """Second-order truncated Taylor value.

    ``grad[i]`` is the derivative with respect to the i-th seed;
    ``hess_upper`` packs the symmetric Hessian's upper triangle row by
    row, so symmetry holds structurally.
    """

    value: float
    grad: tuple
    hess_upper: tuple

    @property
    def d(self) -> int:
        return len(self.grad)

    def hess(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        d = self.d
        return self.hess_upper[i * d - (i * (i - 1)) // 2 + (j - i)]

    def hess_matrix(self):
        import numpy as np
        d = self.d
        h = np.empty((d, d), dtype=float)
        for i in range(d):
            for j in range(i, d):
                h[i, j] = h[j, i] = self.hess(i, j)
        return h


@lru_cache(maxsize=8192)
def _compiled(e: Expression, var_order: tuple, n_seeds: int):
    from .tape import compile_program
    return compile_program((e,), var_order, n_seeds)


def _run_single(e: Expression, env: Mapping[str, float], seeds: Sequence[str]):
    import numpy as np
    from . import backend

    names = variables(e)
    missing = names - set(env)
    if missing:
        raise UnboundVariable(sorted(missing)[0])
    seeds = tuple(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValueError("seed names must be distinct")
    for s in seeds:
        if s not in env:
            raise UnboundVariable(s)
    var_order = seeds + tuple(sorted(names - set(seeds)))
    prog = _compiled(e, var_order, len(seeds))
    values = np.array([float(env[v]) for v in var_order], dtype=np.float64)
    return prog, backend.run_program(prog, values)


def evaluate(e: Expression, env: Mapping[str, float]) -> float:
    """Plain IEEE-double evaluation of ``e`` in ``env``."""
    _, out = _run_single(e, env, ())
    return float(out[0, 0])


def evaluate_jet2(e: Expression, env: Mapping[str, float], seeds: Sequence[str]) -> Jet2:
    """Value, gradient and Hessian of ``e`` with respect to ``seeds``.

    Derivatives are propagated through truncated-Taylor arithmetic, not
    finite differences, so they are exact up to rounding.
    """
    prog, out = _run_single(e, env, seeds)
    d = prog.n_seeds
    row = out[0]
    return Jet2(float(row[0]),
                tuple(float(v) for v in row[1:1 + d]),
                tuple(float(v) for v in row[1 + d:]))
