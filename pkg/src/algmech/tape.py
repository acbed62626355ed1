"""Compilation of expression trees to flat instruction tapes.

Expressions are linearized post-order into SSA form: instruction ``i``
writes register ``i``, operands name earlier registers.  A program can
hold many expressions at once (they share the variable environment), so
a whole set of structure functions is evaluated with a single backend
call per point.

Each register is a second-order jet: ``[value, grad[0..d-1], upper
triangle of the Hessian packed row by row]`` where ``d = n_seeds`` and
the seeded variables are the first ``n_seeds`` entries of ``var_order``.
With ``n_seeds = 0`` this degenerates to plain scalar evaluation.

The two executors (:mod:`algmech._jetpy` and the compiled
:mod:`algmech._jetc`) implement the identical arithmetic, operation by
operation and term by term, so their outputs agree bit for bit; the
test suite asserts this.  The per-opcode formulas are specified in
``_jetpy`` which serves as the readable reference.

Lowering notes:

* integer-constant powers unroll to left-folded repeated multiplication
  (negative exponents append a reciprocal), so negative bases work;
* non-integer constant exponents become a single POWF instruction
  (positive base required);
* non-constant exponents lower to ``exp(e*log(b))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnboundVariable
from .expr import Binary, Constant, Expression, Unary, Variable

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_SIN = 7
OP_COS = 8
OP_TAN = 9
OP_EXP = 10
OP_LOG = 11
OP_SQRT = 12
OP_ABS = 13
OP_INV = 14
OP_POWF = 15

_UNARY_OPCODE = {
    "neg": OP_NEG, "sin": OP_SIN, "cos": OP_COS, "tan": OP_TAN,
    "exp": OP_EXP, "log": OP_LOG, "sqrt": OP_SQRT, "abs": OP_ABS,
}
_BINARY_OPCODE = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}

_MAX_UNROLLED_EXPONENT = 1024


@dataclass(frozen=True, eq=False)
class Program:
    """Immutable compiled form of one or more expressions."""

    op: np.ndarray
    a: np.ndarray
    b: np.ndarray
    consts: np.ndarray
    out_regs: np.ndarray
    var_order: tuple
    n_seeds: int

    @property
    def n_regs(self) -> int:
        return len(self.op)

    @property
    def n_vars(self) -> int:
        return len(self.var_order)

    @property
    def n_out(self) -> int:
        return len(self.out_regs)

    @property
    def width(self) -> int:
        d = self.n_seeds
        return 1 + d + (d * (d + 1)) // 2


class _Emitter:
    def __init__(self, var_slots):
        self.var_slots = var_slots
        self.op = []
        self.a = []
        self.b = []
        self.consts = []

    def emit(self, op, a=0, b=0) -> int:
        self.op.append(op)
        self.a.append(a)
        self.b.append(b)
        return len(self.op) - 1

    def const_index(self, value: float) -> int:
        self.consts.append(float(value))
        return len(self.consts) - 1

    def lower(self, e: Expression) -> int:
        if isinstance(e, Constant):
            return self.emit(OP_CONST, self.const_index(e.value))
        if isinstance(e, Variable):
            slot = self.var_slots.get(e.name)
            if slot is None:
                raise UnboundVariable(e.name)
            return self.emit(OP_VAR, slot)
        if isinstance(e, Unary):
            child = self.lower(e.child)
            return self.emit(_UNARY_OPCODE[e.op], child)
        if e.op == "^":
            return self._lower_power(e)
        left = self.lower(e.left)
        right = self.lower(e.right)
        return self.emit(_BINARY_OPCODE[e.op], left, right)

    def _lower_power(self, e: Binary) -> int:
        base = self.lower(e.left)
        exp = e.right
        if isinstance(exp, Constant):
            v = exp.value
            if v == int(v) and abs(v) <= _MAX_UNROLLED_EXPONENT:
                n = int(v)
                if n == 0:
                    return self.emit(OP_CONST, self.const_index(1.0))
                acc = base
                for _ in range(abs(n) - 1):
                    acc = self.emit(OP_MUL, acc, base)
                if n < 0:
                    acc = self.emit(OP_INV, acc)
                return acc
            if v == int(v):
                raise ValueError(
                    f"integer exponent magnitude exceeds {_MAX_UNROLLED_EXPONENT}")
            return self.emit(OP_POWF, base, self.const_index(v))
        # non-constant exponent: exp(e * log(b))
        lg = self.emit(OP_LOG, base)
        ex = self.lower(exp)
        prod = self.emit(OP_MUL, ex, lg)
        return self.emit(OP_EXP, prod)


def compile_program(exprs: Sequence[Expression], var_order: Sequence[str],
                    n_seeds: int) -> Program:
    """Compile ``exprs`` over the shared variable layout ``var_order``.

    The first ``n_seeds`` variables are the differentiation seeds.
    """
    var_order = tuple(var_order)
    if not 0 <= n_seeds <= len(var_order):
        raise ValueError("n_seeds out of range")
    em = _Emitter({name: i for i, name in enumerate(var_order)})
    out_regs = [em.lower(e) for e in exprs]
    prog = Program(
        op=np.asarray(em.op, dtype=np.int32),
        a=np.asarray(em.a, dtype=np.int32),
        b=np.asarray(em.b, dtype=np.int32),
        consts=np.asarray(em.consts, dtype=np.float64),
        out_regs=np.asarray(out_regs, dtype=np.int32),
        var_order=var_order,
        n_seeds=int(n_seeds),
    )
    for arr in (prog.op, prog.a, prog.b, prog.consts, prog.out_regs):
        arr.flags.writeable = False
    return prog
