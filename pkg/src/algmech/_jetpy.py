"""Pure-Python tape executor: the reference for jet arithmetic.

Each register holds ``[value, grad[0..d-1], hess upper triangle]``.  The
packed index of Hessian entry (i, j), i <= j, is
``i*d - i*(i-1)//2 + (j - i)``.

The compiled twin (:mod:`algmech._jetc`) replicates these formulas
verbatim - same terms, same association, same libm calls - so both
backends produce bit-identical doubles for every finite result (NaN
payloads are not pinned by IEEE and may differ).  Any change here must
be mirrored there.
"""

import math

import numpy as np

from .errors import DomainError
from . import tape as T


def _div(a, b):
    """IEEE double division: x/0 is a signed infinity, 0/0 is NaN.

    Python's float division raises instead, so the zero-denominator
    branch is spelled out to match the compiled backend.
    """
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0.0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def run_program(prog, values):
    """Execute ``prog`` at ``values`` (aligned with ``prog.var_order``).

    Returns a float64 array of shape (n_out, width).
    """
    d = prog.n_seeds
    nh = (d * (d + 1)) // 2
    width = 1 + d + nh
    op = prog.op.tolist()
    aa = prog.a.tolist()
    bb = prog.b.tolist()
    consts = prog.consts.tolist()
    vals = [float(v) for v in values]
    regs = [None] * prog.n_regs

    for idx in range(prog.n_regs):
        o = op[idx]
        A = aa[idx]
        r = [0.0] * width
        if o == T.OP_CONST:
            r[0] = consts[A]
        elif o == T.OP_VAR:
            r[0] = vals[A]
            if A < d:
                r[1 + A] = 1.0
        elif o == T.OP_ADD or o == T.OP_SUB or o == T.OP_MUL or o == T.OP_DIV:
            x = regs[A]
            y = regs[bb[idx]]
            if o == T.OP_ADD:
                for k in range(width):
                    r[k] = x[k] + y[k]
            elif o == T.OP_SUB:
                for k in range(width):
                    r[k] = x[k] - y[k]
            elif o == T.OP_MUL:
                xv = x[0]
                yv = y[0]
                r[0] = xv * yv
                for i in range(d):
                    r[1 + i] = xv * y[1 + i] + x[1 + i] * yv
                t = 1 + d
                for i in range(d):
                    for j in range(i, d):
                        r[t] = xv * y[t] + x[1 + i] * y[1 + j] \
                            + x[1 + j] * y[1 + i] + x[t] * yv
                        t += 1
            else:  # OP_DIV
                yv = y[0]
                q = _div(x[0], yv)
                r[0] = q
                for i in range(d):
                    r[1 + i] = _div(x[1 + i] - q * y[1 + i], yv)
                t = 1 + d
                for i in range(d):
                    for j in range(i, d):
                        r[t] = _div(x[t] - q * y[t] - r[1 + i] * y[1 + j]
                                    - r[1 + j] * y[1 + i], yv)
                        t += 1
        elif o == T.OP_NEG:
            x = regs[A]
            for k in range(width):
                r[k] = -x[k]
        else:
            x = regs[A]
            v = x[0]
            f1 = 0.0
            f2 = 0.0
            if o == T.OP_SIN:
                s = math.sin(v)
                r[0] = s
                f1 = math.cos(v)
                f2 = -s
            elif o == T.OP_COS:
                c = math.cos(v)
                r[0] = c
                f1 = -math.sin(v)
                f2 = -c
            elif o == T.OP_TAN:
                t0 = math.tan(v)
                w = 1.0 + t0 * t0
                r[0] = t0
                f1 = w
                f2 = 2.0 * t0 * w
            elif o == T.OP_EXP:
                e = math.exp(v)
                r[0] = e
                f1 = e
                f2 = e
            elif o == T.OP_LOG:
                if v <= 0.0:
                    raise DomainError("log", v)
                r[0] = math.log(v)
                f1 = 1.0 / v
                f2 = -(f1 * f1)
            elif o == T.OP_SQRT:
                if v < 0.0 or (v == 0.0 and d > 0):
                    raise DomainError("sqrt", v)
                s = math.sqrt(v)
                r[0] = s
                if d > 0:
                    f1 = 0.5 / s
                    f2 = -0.5 * f1 / v
            elif o == T.OP_ABS:
                r[0] = math.fabs(v)
                f1 = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
                f2 = 0.0
            elif o == T.OP_INV:
                u = _div(1.0, v)
                r[0] = u
                f1 = -(u * u)
                f2 = -2.0 * f1 * u
            elif o == T.OP_POWF:
                if v <= 0.0:
                    raise DomainError("^", v)
                e = consts[bb[idx]]
                p = math.pow(v, e)
                r[0] = p
                f1 = e * (p / v)
                f2 = (e - 1.0) * (f1 / v)
            else:
                raise AssertionError(f"bad opcode {o}")
            for i in range(d):
                r[1 + i] = f1 * x[1 + i]
            t = 1 + d
            for i in range(d):
                for j in range(i, d):
                    r[t] = f1 * x[t] + f2 * x[1 + i] * x[1 + j]
                    t += 1
        regs[idx] = r

    out = np.empty((prog.n_out, width), dtype=np.float64)
    for k, reg in enumerate(prog.out_regs):
        out[k, :] = regs[reg]
    return out
