"""Small dense linear algebra: LU with partial pivoting and a 1-norm
condition number.

Implemented on plain Python lists.  The systems solved here are fiber
Hessians of Lagrangians, so the dimension is tiny (rarely above 10) and
a handwritten factorization keeps the arithmetic order fixed, which the
determinism guarantees elsewhere in the package rely on.
"""

import math


def lu_factor(a):
    """Factor a copy of the square matrix ``a`` (list of rows) in place.

    Returns ``(lu, piv, singular)`` where ``lu`` packs L (unit diagonal,
    below) and U (on and above), ``piv`` is the row permutation, and
    ``singular`` flags an exactly zero pivot.
    """
    n = len(a)
    lu = [list(row) for row in a]
    piv = list(range(n))
    singular = False
    for k in range(n):
        p = k
        best = abs(lu[k][k])
        for i in range(k + 1, n):
            v = abs(lu[i][k])
            if v > best:
                best = v
                p = i
        if p != k:
            lu[k], lu[p] = lu[p], lu[k]
            piv[k], piv[p] = piv[p], piv[k]
        pivot = lu[k][k]
        if pivot == 0.0:
            singular = True
            continue
        for i in range(k + 1, n):
            m = lu[i][k] / pivot
            lu[i][k] = m
            if m != 0.0:
                row_i = lu[i]
                row_k = lu[k]
                for j in range(k + 1, n):
                    row_i[j] -= m * row_k[j]
    return lu, piv, singular


def lu_solve(lu, piv, b):
    """Solve ``A x = b`` given the output of :func:`lu_factor`."""
    n = len(lu)
    x = [b[piv[i]] for i in range(n)]
    for i in range(1, n):
        s = x[i]
        row = lu[i]
        for j in range(i):
            s -= row[j] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        row = lu[i]
        for j in range(i + 1, n):
            s -= row[j] * x[j]
        x[i] = s / row[i]
    return x


def norm1(a):
    """Matrix 1-norm (maximum absolute column sum)."""
    n = len(a)
    if n == 0:
        return 0.0
    return max(sum(abs(a[i][j]) for i in range(n)) for j in range(n))


def cond1(a, lu=None, piv=None):
    """1-norm condition number ``||A||_1 * ||A^-1||_1``.

    The inverse norm is computed exactly, column by column, from the LU
    factors; for the small systems handled here that costs a handful of
    triangular solves and stays deterministic.  Returns ``inf`` for an
    exactly singular matrix.
    """
    n = len(a)
    if n == 0:
        return 1.0
    if lu is None:
        lu, piv, singular = lu_factor(a)
        if singular:
            return math.inf
    if any(lu[i][i] == 0.0 for i in range(n)):
        return math.inf
    inv_norm = 0.0
    for j in range(n):
        e = [0.0] * n
        e[j] = 1.0
        col = lu_solve(lu, piv, e)
        s = sum(abs(v) for v in col)
        if s > inv_norm:
            inv_norm = s
    return norm1(a) * inv_norm


def solve(a, b):
    """Solve ``A x = b``; returns ``(x, cond)``.

    ``cond`` is ``inf`` when the factorization hits an exact zero pivot,
    in which case ``x`` is ``None``.
    """
    lu, piv, singular = lu_factor(a)
    if singular:
        return None, math.inf
    cond = cond1(a, lu, piv)
    if math.isinf(cond):
        return None, cond
    return lu_solve(lu, piv, b), cond
