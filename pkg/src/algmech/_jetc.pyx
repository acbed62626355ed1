# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tape executor.

Twin of :mod:`algmech._jetpy`: the jet arithmetic below copies that
module's formulas term by term (and the extension is built with
-ffp-contract=off), so both backends return bit-identical doubles for
every finite result (NaN payloads may differ).  Keep the two files in
sync.
"""

import numpy as np

from libc.math cimport sin, cos, tan, exp, log, sqrt, fabs, pow

from .errors import DomainError

cdef enum:
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


def run_program(prog, values):
    """Execute ``prog`` at ``values``; returns float64 (n_out, width)."""
    cdef const int[::1] op = prog.op
    cdef const int[::1] aa = prog.a
    cdef const int[::1] bb = prog.b
    cdef const double[::1] consts = prog.consts
    cdef const int[::1] out_regs = prog.out_regs
    cdef int d = prog.n_seeds
    cdef int nh = (d * (d + 1)) // 2
    cdef int width = 1 + d + nh
    cdef int n_regs = op.shape[0]
    cdef int n_out = out_regs.shape[0]

    vals_arr = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] vals = vals_arr

    ws_arr = np.zeros((max(n_regs, 1), width), dtype=np.float64)
    cdef double[:, ::1] ws = ws_arr

    cdef int idx, A, B, i, j, k, t
    cdef int o
    cdef double xv, yv, q, v, f1, f2, s, c, t0, w, e, u, p
    cdef double* r
    cdef double* x
    cdef double* y

    for idx in range(n_regs):
        o = op[idx]
        A = aa[idx]
        r = &ws[idx, 0]
        if o == OP_CONST:
            r[0] = consts[A]
        elif o == OP_VAR:
            r[0] = vals[A]
            if A < d:
                r[1 + A] = 1.0
        elif o == OP_ADD or o == OP_SUB or o == OP_MUL or o == OP_DIV:
            B = bb[idx]
            x = &ws[A, 0]
            y = &ws[B, 0]
            if o == OP_ADD:
                for k in range(width):
                    r[k] = x[k] + y[k]
            elif o == OP_SUB:
                for k in range(width):
                    r[k] = x[k] - y[k]
            elif o == OP_MUL:
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
            else:
                yv = y[0]
                q = x[0] / yv
                r[0] = q
                for i in range(d):
                    r[1 + i] = (x[1 + i] - q * y[1 + i]) / yv
                t = 1 + d
                for i in range(d):
                    for j in range(i, d):
                        r[t] = (x[t] - q * y[t] - r[1 + i] * y[1 + j]
                                - r[1 + j] * y[1 + i]) / yv
                        t += 1
        elif o == OP_NEG:
            x = &ws[A, 0]
            for k in range(width):
                r[k] = -x[k]
        else:
            x = &ws[A, 0]
            v = x[0]
            f1 = 0.0
            f2 = 0.0
            if o == OP_SIN:
                s = sin(v)
                r[0] = s
                f1 = cos(v)
                f2 = -s
            elif o == OP_COS:
                c = cos(v)
                r[0] = c
                f1 = -sin(v)
                f2 = -c
            elif o == OP_TAN:
                t0 = tan(v)
                w = 1.0 + t0 * t0
                r[0] = t0
                f1 = w
                f2 = 2.0 * t0 * w
            elif o == OP_EXP:
                e = exp(v)
                r[0] = e
                f1 = e
                f2 = e
            elif o == OP_LOG:
                if v <= 0.0:
                    raise DomainError("log", v)
                r[0] = log(v)
                f1 = 1.0 / v
                f2 = -(f1 * f1)
            elif o == OP_SQRT:
                if v < 0.0 or (v == 0.0 and d > 0):
                    raise DomainError("sqrt", v)
                s = sqrt(v)
                r[0] = s
                if d > 0:
                    f1 = 0.5 / s
                    f2 = -0.5 * f1 / v
            elif o == OP_ABS:
                r[0] = fabs(v)
                f1 = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
                f2 = 0.0
            elif o == OP_INV:
                u = 1.0 / v
                r[0] = u
                f1 = -(u * u)
                f2 = -2.0 * f1 * u
            elif o == OP_POWF:
                if v <= 0.0:
                    raise DomainError("^", v)
                e = consts[bb[idx]]
                p = pow(v, e)
                r[0] = p
                f1 = e * (p / v)
                f2 = (e - 1.0) * (f1 / v)
            else:
                raise AssertionError("bad opcode %d" % o)
            for i in range(d):
                r[1 + i] = f1 * x[1 + i]
            t = 1 + d
            for i in range(d):
                for j in range(i, d):
                    r[t] = f1 * x[t] + f2 * x[1 + i] * x[1 + j]
                    t += 1

    out_arr = np.empty((n_out, width), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for k in range(n_out):
        i = out_regs[k]
        for j in range(width):
            out[k, j] = ws[i, j]
    return out_arr
