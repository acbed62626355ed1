"""General algebroids (E, epsilon) in local structure functions.

An algebroid over an n-dimensional base with rank m is stored as the
matrices rho (left anchor), sigma (right anchor) and the cube c of
bracket coefficients, all expression-valued functions of the base
coordinates x1..xn.  The structure map sends (x, y, p, pi) to
(x, xi, xdot, xidot) with

    xi_i    = pi_i,
    xdot^b  = sum_k rho^b_k(x) y^k,
    xidot_j = sum_{i,k} c^k_{ij}(x) y^i pi_k + sum_a sigma^a_j(x) p_a,

and corresponds to a 2-contravariant tensor on the dual bundle whose
components (in the fixed coordinate order xi_1..xi_m, x^1..x^n) are

    [xi_i][xi_j] = sum_k c^k_{ij} xi_k,   [xi_i][x^b] = rho^b_i,
    [x^a][xi_j]  = -sigma^a_j,            [x][x]      = 0.

The bracket of sections, the induced Poisson-type bracket of functions,
and the Lie/skew classifier below all use these conventions; the
bracket-tensor correspondence iota([X,Y]) = {iota(X), iota(Y)} is the
cross-check tying them together (asserted by the test suite, not
assumed).

n = 0 is the Lie algebra case: no base coordinates, constant structure
functions, all x-derivative terms vanish.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import backend
from ._structcore import x_names, xi_names
from .errors import AlgmechError, ShapeError
from .expr import (
    Binary, Constant, Expression, Unary, Variable, bind_parameters,
    evaluate_jet2, is_zero, parse, variables,
)
from .rng import SplitMix64
from .tape import compile_program

__all__ = [
    "AlgebroidStructure", "SectionExpr", "ClassifyReport",
    "epsilon_map", "lambda_components", "poisson_bracket", "bracket",
    "classify", "zero_expr_matrix", "zero_expr_cube",
]


# --------------------------------------------------------------------------
# Input coercion
# --------------------------------------------------------------------------

def coerce_expr(v) -> Expression:
    if isinstance(v, (Constant, Variable, Unary, Binary)):
        return v
    if isinstance(v, str):
        return parse(v)
    if isinstance(v, (int, float)):
        return Constant(float(v))
    raise TypeError(f"cannot interpret {v!r} as an expression")


def expr_vector(values, length, what) -> tuple:
    out = tuple(coerce_expr(v) for v in values)
    if len(out) != length:
        raise ShapeError(f"{what}: expected length {length}, got {len(out)}")
    return out


def expr_matrix(values, rows, cols, what) -> tuple:
    vals = list(values)
    if len(vals) != rows:
        raise ShapeError(f"{what}: expected {rows} rows, got {len(vals)}")
    return tuple(expr_vector(row, cols, f"{what} row {i}")
                 for i, row in enumerate(vals))


def expr_cube(values, d0, d1, d2, what) -> tuple:
    vals = list(values)
    if len(vals) != d0:
        raise ShapeError(f"{what}: expected {d0} slices, got {len(vals)}")
    return tuple(expr_matrix(sl, d1, d2, f"{what} slice {k}")
                 for k, sl in enumerate(vals))


def zero_expr_vector(length):
    return tuple(Constant(0.0) for _ in range(length))


def zero_expr_matrix(rows, cols):
    return tuple(zero_expr_vector(cols) for _ in range(rows))


def zero_expr_cube(d0, d1, d2):
    return tuple(zero_expr_matrix(d1, d2) for _ in range(d0))


def _check_base_vars(exprs, n, what):
    allowed = set(x_names(n))
    for e in exprs:
        extra = variables(e) - allowed
        if extra:
            raise ValueError(
                f"{what}: expression uses undeclared variable(s) "
                f"{sorted(extra)} (base coordinates are x1..x{n}, "
                f"free parameters must be bound via params)")


def _normalize_params(params):
    if params is None:
        return ()
    if isinstance(params, tuple):
        params = dict(params)
    return tuple(sorted((str(k), float(v)) for k, v in params.items()))


# --------------------------------------------------------------------------
# Structures and sections
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AlgebroidStructure:
    """Local data of a general algebroid: anchors rho, sigma and cube c.

    ``rho`` and ``sigma`` are n x m, ``c`` is m x m x m indexed
    [k][i][j] for c^k_{ij}.  Entries may be given as expression text,
    numbers, or Expression trees; free parameters are bound to constants
    at construction.  Immutable and hashable afterwards.
    """

    n: int
    m: int
    rho: tuple
    sigma: tuple
    c: tuple
    params: tuple = ()

    def __init__(self, n, m, rho, sigma, c, params=None):
        n = int(n)
        m = int(m)
        if n < 0 or m < 1:
            raise ShapeError("need n >= 0 and m >= 1")
        params = _normalize_params(params)
        bind = dict(params)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)

        def norm(e):
            return bind_parameters(e, bind)

        rho = tuple(tuple(norm(e) for e in row)
                    for row in expr_matrix(rho, n, m, "rho"))
        sigma = tuple(tuple(norm(e) for e in row)
                      for row in expr_matrix(sigma, n, m, "sigma"))
        c = tuple(tuple(tuple(norm(e) for e in row) for row in sl)
                  for sl in expr_cube(c, m, m, m, "c"))
        for block, name in ((rho, "rho"), (sigma, "sigma")):
            _check_base_vars([e for row in block for e in row], n, name)
        _check_base_vars([e for sl in c for row in sl for e in row], n, "c")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "params", params)

    @property
    def phase_dim(self) -> int:
        """Dimension of the dual phase space (xi_1..xi_m, x^1..x^n)."""
        return self.m + self.n


@dataclass(frozen=True)
class SectionExpr:
    """Section X = sum_i f_i(x) e_i given by m component expressions."""

    components: tuple

    def __init__(self, components, m=None):
        comps = tuple(coerce_expr(e) for e in components)
        if m is not None and len(comps) != m:
            raise ShapeError(f"section: expected {m} components, got {len(comps)}")
        object.__setattr__(self, "components", comps)

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)


# --------------------------------------------------------------------------
# Dense entry evaluation (shared by the point maps and the classifier)
# --------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _entry_program(A: AlgebroidStructure):
    exprs = [e for row in A.rho for e in row]
    exprs += [e for row in A.sigma for e in row]
    exprs += [e for sl in A.c for row in sl for e in row]
    return compile_program(exprs, x_names(A.n), 0)


def structure_entries(A: AlgebroidStructure, x):
    """Dense (rho, sigma, c) value arrays at the base point ``x``."""
    out = backend.run_program(_entry_program(A), np.asarray(x, dtype=np.float64))
    flat = out[:, 0]
    nm = A.n * A.m
    rho = flat[:nm].reshape(A.n, A.m)
    sigma = flat[nm:2 * nm].reshape(A.n, A.m)
    c = flat[2 * nm:].reshape(A.m, A.m, A.m)
    return rho, sigma, c


def _as_vec(v, length, what):
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (length,):
        raise ShapeError(f"{what}: expected length {length}, got shape {arr.shape}")
    return arr


# --------------------------------------------------------------------------
# The structure map and its tensor
# --------------------------------------------------------------------------

def epsilon_map(A: AlgebroidStructure, x, y, p, pi):
    """Structure map: (x, y, p, pi) -> (x, xi, xdot, xidot) on T E*."""
    x = _as_vec(x, A.n, "x")
    y = _as_vec(y, A.m, "y")
    p = _as_vec(p, A.n, "p")
    pi = _as_vec(pi, A.m, "pi")
    rho, sigma, c = structure_entries(A, x)
    xdot = rho @ y
    xidot = np.einsum("kij,i,k->j", c, y, pi) + sigma.T @ p
    return x.copy(), pi.copy(), xdot, xidot


def _sum_exprs(terms):
    acc = None
    for t in terms:
        acc = t if acc is None else Binary("+", acc, t)
    return acc if acc is not None else Constant(0.0)


@lru_cache(maxsize=256)
def lambda_entry_exprs(A: AlgebroidStructure) -> tuple:
    """Expression matrix of the induced tensor, coordinate order
    (xi_1..xi_m, x^1..x^n) in both slots."""
    m, n = A.m, A.n
    xi = [Variable(name) for name in xi_names(m)]
    rows = []
    for i in range(m):
        row = [_sum_exprs(Binary("*", A.c[k][i][j], xi[k])
                          for k in range(m) if not is_zero(A.c[k][i][j]))
               for j in range(m)]
        row += [A.rho[b][i] for b in range(n)]
        rows.append(tuple(row))
    for a in range(n):
        row = [Constant(0.0) if is_zero(A.sigma[a][j]) else Unary("neg", A.sigma[a][j])
               for j in range(m)]
        row += [Constant(0.0)] * n
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=256)
def _lambda_value_program(A: AlgebroidStructure):
    entries = [e for row in lambda_entry_exprs(A) for e in row]
    return compile_program(entries, xi_names(A.m) + x_names(A.n), 0)


@lru_cache(maxsize=256)
def _lambda_jet_program(A: AlgebroidStructure):
    entries = [e for row in lambda_entry_exprs(A) for e in row]
    order = xi_names(A.m) + x_names(A.n)
    return compile_program(entries, order, len(order))


def lambda_components(A: AlgebroidStructure, x, xi) -> np.ndarray:
    """Tensor components at (x, xi) as an (n+m) x (n+m) matrix."""
    x = _as_vec(x, A.n, "x")
    xi = _as_vec(xi, A.m, "xi")
    point = np.concatenate([xi, x])
    out = backend.run_program(_lambda_value_program(A), point)
    dim = A.phase_dim
    return out[:, 0].reshape(dim, dim)


def poisson_bracket(A: AlgebroidStructure, f: Expression, g: Expression,
                    x, xi) -> float:
    """{f, g}(x, xi) = sum_{AB} Lambda^{AB} d_A f d_B g.

    f and g are expressions in the phase variables xi1..xim, x1..xn;
    derivatives come from jet evaluation.
    """
    x = _as_vec(x, A.n, "x")
    xi = _as_vec(xi, A.m, "xi")
    lam = lambda_components(A, x, xi)
    seeds = xi_names(A.m) + x_names(A.n)
    env = dict(zip(seeds, np.concatenate([xi, x])))
    df = evaluate_jet2(f, env, seeds).grad
    dg = evaluate_jet2(g, env, seeds).grad
    dim = A.phase_dim
    acc = 0.0
    for a in range(dim):
        if df[a] == 0.0:
            continue
        for b in range(dim):
            acc += lam[a, b] * df[a] * dg[b]
    return float(acc)


# --------------------------------------------------------------------------
# Section bracket
# --------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _section_jet_program(A: AlgebroidStructure, X: SectionExpr, Y: SectionExpr):
    exprs = list(X.components) + list(Y.components)
    return compile_program(exprs, x_names(A.n), A.n)


def bracket(A: AlgebroidStructure, X, Y) -> Callable:
    """Bracket of sections; returns a callable evaluating [X, Y](x).

    Componentwise,

        [X,Y]^k = sum_{ij} c^k_{ij} X^i Y^j
                + sum_{a,i} rho^a_i X^i dY^k/dx^a
                - sum_{a,j} sigma^a_j Y^j dX^k/dx^a .
    """
    X = X if isinstance(X, SectionExpr) else SectionExpr(X)
    Y = Y if isinstance(Y, SectionExpr) else SectionExpr(Y)
    if len(X) != A.m or len(Y) != A.m:
        raise ShapeError(f"sections must have {A.m} components")
    for S in (X, Y):
        _check_base_vars(S.components, A.n, "section")
    prog = _section_jet_program(A, X, Y)
    m, n = A.m, A.n

    def at(x) -> np.ndarray:
        xv = _as_vec(x, n, "x")
        rho, sigma, c = structure_entries(A, xv)
        jets = backend.run_program(prog, xv)
        Xv = jets[:m, 0]
        Yv = jets[m:, 0]
        dX = jets[:m, 1:1 + n]
        dY = jets[m:, 1:1 + n]
        out = np.empty(m)
        for k in range(m):
            s = 0.0
            for i in range(m):
                for j in range(m):
                    s += c[k, i, j] * Xv[i] * Yv[j]
            for a in range(n):
                for i in range(m):
                    s += rho[a, i] * Xv[i] * dY[k, a]
                for j in range(m):
                    s -= sigma[a, j] * Yv[j] * dX[k, a]
            out[k] = s
        return out

    return at


def section_pairing_expr(X: SectionExpr) -> Expression:
    """iota(X) = sum_i X^i(x) xi_i as an expression on the dual."""
    terms = [Binary("*", comp, Variable(name))
             for comp, name in zip(X.components, xi_names(len(X)))
             if not is_zero(comp)]
    return _sum_exprs(terms)


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifyReport:
    """Outcome of the skew / Jacobi verification at sampled points."""

    is_skew: bool
    jacobiator_max: float
    is_lie: bool
    skew_max: float
    witnesses: tuple
    sample_count: int
    seed: int
    tol: float
    hull_based: bool = False

    def as_dict(self) -> dict:
        return {
            "is_skew": self.is_skew,
            "jacobiator_max": self.jacobiator_max,
            "is_lie": self.is_lie,
            "skew_max": self.skew_max,
            "witnesses": [dict(w) for w in self.witnesses],
            "sample_count": self.sample_count,
            "seed": self.seed,
            "tol": self.tol,
            "hull_based": self.hull_based,
        }


def _coordinate_labels(A):
    return list(xi_names(A.m)) + list(x_names(A.n))


@contextmanager
def _sample_context(index, phase):
    """Attach the offending sample to evaluation errors during classify."""
    try:
        yield
    except AlgmechError as exc:
        exc.sample_index = index
        exc.sample_point = tuple(phase)
        raise


def classify(A: AlgebroidStructure, sample_count: int, seed: int,
             tol: float) -> ClassifyReport:
    """Skewness and Jacobi checks at deterministic sample points.

    Samples are uniform in [-1, 1]^(m+n), drawn from SplitMix64(seed)
    in phase-coordinate order (xi first, then x).  ``is_skew`` checks
    sigma == rho and c^k_{ij} + c^k_{ji} == 0 at the sampled base
    points; ``jacobiator_max`` is the largest cyclic-sum residual

        sum_D (L^{DA} d_D L^{BC} + L^{DB} d_D L^{CA} + L^{DC} d_D L^{AB})

    over all samples and index triples (A, B, C).  The structure is
    flagged Lie when it is skew and the residual stays within ``tol``.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    m, n = A.m, A.n
    dim = A.phase_dim
    rng = SplitMix64(seed)
    samples = [rng.vector_pm1(dim) for _ in range(sample_count)]

    skew_max = 0.0
    skew_witness = None
    for s_idx, phase in enumerate(samples):
        xv = np.asarray(phase[m:])
        with _sample_context(s_idx, phase):
            rho, sigma, c = structure_entries(A, xv)
        for a in range(n):
            for j in range(m):
                v = float(abs(sigma[a, j] - rho[a, j]))
                if v > skew_max:
                    skew_max = v
                    skew_witness = (("check", "sigma_vs_rho"),
                                    ("indices", (a + 1, j + 1)),
                                    ("sample", s_idx), ("value", v))
        for k in range(m):
            for i in range(m):
                for j in range(m):
                    v = float(abs(c[k, i, j] + c[k, j, i]))
                    if v > skew_max:
                        skew_max = v
                        skew_witness = (("check", "c_symmetry"),
                                        ("indices", (k + 1, i + 1, j + 1)),
                                        ("sample", s_idx), ("value", v))

    labels = _coordinate_labels(A)
    prog = _lambda_jet_program(A)
    jac_max = 0.0
    jac_witness = None
    for s_idx, phase in enumerate(samples):
        with _sample_context(s_idx, phase):
            jets = backend.run_program(prog, np.asarray(phase))
        lam = jets[:, 0].reshape(dim, dim).tolist()
        dlam = jets[:, 1:1 + dim].reshape(dim, dim, dim).tolist()
        for a in range(dim):
            for b in range(dim):
                for cc in range(dim):
                    s = 0.0
                    for dd in range(dim):
                        s += (lam[dd][a] * dlam[b][cc][dd]
                              + lam[dd][b] * dlam[cc][a][dd]
                              + lam[dd][cc] * dlam[a][b][dd])
                    v = abs(s)
                    if v > jac_max:
                        jac_max = v
                        jac_witness = (("check", "jacobiator"),
                                       ("triple", (labels[a], labels[b], labels[cc])),
                                       ("sample", s_idx), ("value", v))

    is_skew = bool(skew_max <= tol)
    is_lie = bool(is_skew and jac_max <= tol)
    witnesses = tuple(w for w in (skew_witness, jac_witness) if w is not None)
    return ClassifyReport(
        is_skew=is_skew, jacobiator_max=float(jac_max), is_lie=is_lie,
        skew_max=float(skew_max), witnesses=witnesses,
        sample_count=int(sample_count), seed=int(seed), tol=float(tol))
