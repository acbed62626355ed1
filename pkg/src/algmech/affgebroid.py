"""Special affgebroids in local affine coordinates.

A special affgebroid of special rank m over an n-dimensional base keeps
m-1 true fiber coordinates y^1..y^{m-1} (the special direction, index
m, never appears as a runtime coordinate; it only names the structure
functions cm0 and cm).  The structure map sends (x, y, p, xi) to
(x, xi, xdot, xidot) with

    xdot^b  = rho^b_0(x) + sum_k rho^b_k(x) y^k,
    xidot_j = cm0_j + sum_k ck0_kj xi_k + sum_i cm_ij y^i
            + sum_{i,k} ck_kij y^i xi_k + sum_a sigma^a_j(x) p_a,

and corresponds to an affine 2-contravariant tensor whose first slot
ranges over (xi_0, xi_1..xi_{m-1}, x^1..x^n) and second slot over
(xi_1..xi_{m-1}, x^1..x^n):

    [xi_i][xi_j] = cm_ij + sum_k ck_kij xi_k   (i = 0 uses cm0/ck0),
    [xi_i][x^b]  = rho^b_i,   [x^a][xi_j] = -sigma^a_j,   [x][x] = 0.

Affine differentials carry coefficient +1 on the xi_0 slot; the
Hamilton-Lagrange consistency tests exercise that convention.

aff-Poisson / Lie classification goes through the vector hull: the
affgebroid bracket extends to a rank m+1 algebroid (basis order: affine
generator e_0, then e_1..e_{m-1}, then the central special direction),
which is handed to the algebroid classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from . import backend
from ._structcore import _flatten, x_names, xi_names
from .algebroid import (
    AlgebroidStructure, ClassifyReport, SectionExpr, _as_vec,
    _check_base_vars, _normalize_params, _sum_exprs, classify, expr_cube,
    expr_matrix, expr_vector, zero_expr_matrix, zero_expr_vector,
)
from .errors import ShapeError
from .expr import (
    Binary, Constant, Expression, Unary, Variable, bind_parameters, is_zero,
)
from .tape import compile_program

__all__ = [
    "AffgebroidStructure", "cal_e_map", "gamma_components", "aff_bracket",
    "vector_hull", "classify_aff", "sa_pairing", "embed_trivial",
]


@dataclass(frozen=True)
class AffgebroidStructure:
    """Structure functions of a special affgebroid (special rank m).

    Shapes with d = m - 1: rho0 is an n-vector, rho and sigma are n x d,
    cm0 is a d-vector, ck0 and cm are d x d (ck0 indexed [k][j], cm
    indexed [i][j]), ck is d x d x d indexed [k][i][j].
    """

    n: int
    m: int
    rho0: tuple
    rho: tuple
    cm0: tuple
    ck0: tuple
    cm: tuple
    ck: tuple
    sigma: tuple
    params: tuple = ()

    def __init__(self, n, m, rho0, rho, cm0, ck0, cm, ck, sigma, params=None):
        n = int(n)
        m = int(m)
        if n < 0 or m < 1:
            raise ShapeError("need n >= 0 and m >= 1")
        d = m - 1
        params = _normalize_params(params)
        bind = dict(params)

        def norm_v(block, length, what):
            return tuple(bind_parameters(e, bind)
                         for e in expr_vector(block, length, what))

        def norm_m(block, r, c, what):
            return tuple(tuple(bind_parameters(e, bind) for e in row)
                         for row in expr_matrix(block, r, c, what))

        def norm_c(block, what):
            return tuple(tuple(tuple(bind_parameters(e, bind) for e in row)
                               for row in sl)
                         for sl in expr_cube(block, d, d, d, what))

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "rho0", norm_v(rho0, n, "rho0"))
        object.__setattr__(self, "rho", norm_m(rho, n, d, "rho"))
        object.__setattr__(self, "cm0", norm_v(cm0, d, "cm0"))
        object.__setattr__(self, "ck0", norm_m(ck0, d, d, "ck0"))
        object.__setattr__(self, "cm", norm_m(cm, d, d, "cm"))
        object.__setattr__(self, "ck", norm_c(ck, "ck"))
        object.__setattr__(self, "sigma", norm_m(sigma, n, d, "sigma"))
        object.__setattr__(self, "params", params)
        for name in ("rho0", "rho", "cm0", "ck0", "cm", "ck", "sigma"):
            _check_base_vars(_flatten(getattr(self, name)), n, name)

    @property
    def d(self) -> int:
        """Number of true fiber coordinates (m - 1)."""
        return self.m - 1


@lru_cache(maxsize=256)
def _entry_program(S: AffgebroidStructure):
    exprs = []
    for name in ("rho0", "rho", "cm0", "ck0", "cm", "ck", "sigma"):
        exprs.extend(_flatten(getattr(S, name)))
    return compile_program(exprs, x_names(S.n), 0)


def structure_entries(S: AffgebroidStructure, x):
    """Dense value arrays of all structure functions at ``x``."""
    flat = backend.run_program(_entry_program(S), np.asarray(x, dtype=np.float64))[:, 0]
    n, d = S.n, S.d
    sizes = [n, n * d, d, d * d, d * d, d * d * d, n * d]
    parts = []
    pos = 0
    for s in sizes:
        parts.append(flat[pos:pos + s])
        pos += s
    rho0, rho, cm0, ck0, cm, ck, sigma = parts
    return {
        "rho0": rho0,
        "rho": rho.reshape(n, d),
        "cm0": cm0,
        "ck0": ck0.reshape(d, d),
        "cm": cm.reshape(d, d),
        "ck": ck.reshape(d, d, d),
        "sigma": sigma.reshape(n, d),
    }


def cal_e_map(S: AffgebroidStructure, x, y, p, xi):
    """Structure map: (x, y, p, xi) -> (x, xi, xdot, xidot)."""
    d = S.d
    x = _as_vec(x, S.n, "x")
    y = _as_vec(y, d, "y")
    p = _as_vec(p, S.n, "p")
    xi = _as_vec(xi, d, "xi")
    t = structure_entries(S, x)
    xdot = t["rho0"] + t["rho"] @ y
    xidot = (t["cm0"] + t["ck0"].T @ xi + t["cm"].T @ y
             + np.einsum("kij,i,k->j", t["ck"], y, xi) + t["sigma"].T @ p)
    return x.copy(), xi.copy(), xdot, xidot


@lru_cache(maxsize=256)
def gamma_entry_exprs(S: AffgebroidStructure) -> tuple:
    """Expression matrix of the affine tensor.

    First slot (rows): xi_0, xi_1..xi_{m-1}, x^1..x^n; second slot
    (columns): xi_1..xi_{m-1}, x^1..x^n.
    """
    n, d = S.n, S.d
    xi = [Variable(name) for name in xi_names(d)]

    def xixi_entry(const_part, coeffs):
        terms = []
        if not is_zero(const_part):
            terms.append(const_part)
        terms.extend(Binary("*", coeffs[k], xi[k])
                     for k in range(d) if not is_zero(coeffs[k]))
        return _sum_exprs(terms)

    rows = []
    row0 = [xixi_entry(S.cm0[j], tuple(S.ck0[k][j] for k in range(d)))
            for j in range(d)]
    row0 += [S.rho0[b] for b in range(n)]
    rows.append(tuple(row0))
    for i in range(d):
        row = [xixi_entry(S.cm[i][j], tuple(S.ck[k][i][j] for k in range(d)))
               for j in range(d)]
        row += [S.rho[b][i] for b in range(n)]
        rows.append(tuple(row))
    for a in range(n):
        row = [Constant(0.0) if is_zero(S.sigma[a][j]) else Unary("neg", S.sigma[a][j])
               for j in range(d)]
        row += [Constant(0.0)] * n
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=256)
def _gamma_value_program(S: AffgebroidStructure):
    entries = [e for row in gamma_entry_exprs(S) for e in row]
    return compile_program(entries, xi_names(S.d) + x_names(S.n), 0)


def gamma_components(S: AffgebroidStructure, x, xi) -> np.ndarray:
    """Affine tensor components at (x, xi): shape (m+n) x (m-1+n)."""
    x = _as_vec(x, S.n, "x")
    xi = _as_vec(xi, S.d, "xi")
    point = np.concatenate([xi, x])
    out = backend.run_program(_gamma_value_program(S), point)
    return out[:, 0].reshape(S.m + S.n, S.d + S.n)


@lru_cache(maxsize=256)
def _pair_jet_program(S: AffgebroidStructure, a: SectionExpr, Y: SectionExpr):
    exprs = list(a.components) + list(Y.components)
    return compile_program(exprs, x_names(S.n), S.n)


def aff_bracket(S: AffgebroidStructure, a, Y) -> Callable:
    """Affgebroid bracket of an affine section against a linear one.

    ``a`` is an affine section given by components f_1..f_m with the
    implicit f_0 = 1; ``Y`` is a model-bundle section g_1..g_m.  The
    returned callable evaluates the m components

        [a,Y]^k = sum_{i=0..m-1, j=1..m-1} f_i g_j c^k_{ij}
                + sum_a ( sum_{i=0..m-1} rho^a_i f_i dg_k/dx^a
                        - sum_{j=1..m-1} sigma^a_j g_j df_k/dx^a )

    where the k = m row uses cm0/cm.
    """
    a = a if isinstance(a, SectionExpr) else SectionExpr(a)
    Y = Y if isinstance(Y, SectionExpr) else SectionExpr(Y)
    if len(a) != S.m or len(Y) != S.m:
        raise ShapeError(f"affine/linear sections must have {S.m} components")
    for sec in (a, Y):
        _check_base_vars(sec.components, S.n, "section")
    prog = _pair_jet_program(S, a, Y)
    m, n, d = S.m, S.n, S.d

    def at(x) -> np.ndarray:
        xv = _as_vec(x, n, "x")
        t = structure_entries(S, xv)
        jets = backend.run_program(prog, xv)
        fv = jets[:m, 0]
        gv = jets[m:, 0]
        df = jets[:m, 1:1 + n]
        dg = jets[m:, 1:1 + n]
        out = np.empty(m)
        for k in range(m):
            if k < d:
                c0 = t["ck0"][k]          # c^k_{0j}, j = 1..m-1
                cl = t["ck"][k]           # c^k_{ij}
            else:
                c0 = t["cm0"]             # c^m_{0j}
                cl = t["cm"]              # c^m_{ij}
            s = 0.0
            for j in range(d):
                s += c0[j] * gv[j]
                for i in range(d):
                    s += fv[i] * gv[j] * cl[i, j]
            for aa in range(n):
                s += t["rho0"][aa] * dg[k, aa]
                for i in range(d):
                    s += t["rho"][aa, i] * fv[i] * dg[k, aa]
                for j in range(d):
                    s -= t["sigma"][aa, j] * gv[j] * df[k, aa]
            out[k] = s
        return out

    return at


def affine_pairing_expr(sec: SectionExpr) -> Expression:
    """iota^#: the affine function f_m(x) + sum_{i<m} f_i(x) xi_i."""
    comps = sec.components
    d = len(comps) - 1
    terms = [Binary("*", comps[i], Variable(name))
             for i, name in zip(range(d), xi_names(d))
             if not is_zero(comps[i])]
    if not is_zero(comps[d]):
        terms.append(comps[d])
    return _sum_exprs(terms)


def vector_hull(S: AffgebroidStructure) -> AlgebroidStructure:
    """Rank m+1 algebroid on the vector hull.

    Basis slot order: e_0 (the affine generator), e_1..e_{m-1}, and the
    central special direction last.  Brackets with the special direction
    vanish; the bracket data of S fills the [e_0, e_j] and [e_i, e_j]
    entries; all remaining coefficients are zero.  The right anchor
    extends by sigma-hat^a_0 = rho^a_0, forced by restriction of the
    hull bracket to the affgebroid bracket with f_0 = 1.
    """
    n, d = S.n, S.d
    mh = S.m + 1
    zero = Constant(0.0)
    rho_h = tuple(
        (S.rho0[b],) + tuple(S.rho[b][k] for k in range(d)) + (zero,)
        for b in range(n))
    sigma_h = tuple(
        (S.rho0[a],) + tuple(S.sigma[a][j] for j in range(d)) + (zero,)
        for a in range(n))
    c_h = []
    for kh in range(mh):
        sl = []
        for ih in range(mh):
            row = []
            for jh in range(mh):
                e = zero
                if 1 <= jh <= d and ih != mh - 1 and kh != 0:
                    if ih == 0:
                        e = S.ck0[kh - 1][jh - 1] if kh <= d else S.cm0[jh - 1]
                    elif ih <= d:
                        e = (S.ck[kh - 1][ih - 1][jh - 1] if kh <= d
                             else S.cm[ih - 1][jh - 1])
                row.append(e)
            sl.append(tuple(row))
        c_h.append(tuple(sl))
    return AlgebroidStructure(n, mh, rho_h, sigma_h, tuple(c_h))


def classify_aff(S: AffgebroidStructure, sample_count: int, seed: int,
                 tol: float) -> ClassifyReport:
    """aff-Poisson / Lie check, delegated to the vector hull."""
    report = classify(vector_hull(S), sample_count, seed, tol)
    return replace(report, hull_based=True)


def sa_pairing(y, xi) -> float:
    """Special affine pairing of (x, y^1..y^m) with (x, xi_0..xi_{m-1}):

        sum_{i=1}^{m-1} y^i xi_i - y^m - xi_0 .
    """
    y = [float(v) for v in y]
    xi = [float(v) for v in xi]
    if len(y) != len(xi) or not y:
        raise ShapeError("y and xi must both have length m >= 1")
    m = len(y)
    s = 0.0
    for i in range(1, m):
        s += y[i - 1] * xi[i]
    return s - y[m - 1] - xi[0]


def embed_trivial(A: AlgebroidStructure) -> AffgebroidStructure:
    """Trivial affgebroid extension of an algebroid (special rank m+1).

    All affine blocks are literal zeros, so every downstream consumer
    collapses to the algebroid arithmetic; trajectories through the
    embedding agree with algebroid trajectories bit for bit.
    """
    d = A.m
    return AffgebroidStructure(
        n=A.n, m=A.m + 1,
        rho0=zero_expr_vector(A.n),
        rho=A.rho,
        cm0=zero_expr_vector(d),
        ck0=zero_expr_matrix(d, d),
        cm=zero_expr_matrix(d, d),
        ck=A.c,
        sigma=A.sigma,
        params=A.params,
    )
