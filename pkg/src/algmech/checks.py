"""Sampled verification of the bracket-tensor correspondences.

The section bracket and the tensor-induced bracket of fiber-linear
functions are implemented independently; for a correct structure the
identity

    iota([X, Y]) = {iota(X), iota(Y)}        (algebroid case)
    iota#([a, X]) = <Gamma, d iota#_a  x  d iota_X>   (affgebroid case)

holds pointwise.  These helpers draw random polynomial sections and
sample points from a seeded generator and report the largest deviation,
which should sit at rounding level for structures built from polynomial
data.  Used both by the CLI ``verify`` subcommand and the test suite.
"""

from __future__ import annotations

import numpy as np

from ._structcore import x_names
from .affgebroid import (
    AffgebroidStructure, aff_bracket, gamma_components,
)
from .algebroid import (
    AlgebroidStructure, SectionExpr, bracket, poisson_bracket,
    section_pairing_expr,
)
from .expr import Binary, Constant, Variable, evaluate_jet2
from .rng import SplitMix64

__all__ = [
    "random_polynomial_expr", "random_section",
    "random_polynomial_algebroid", "random_polynomial_affgebroid",
    "bracket_tensor_residual", "aff_bracket_tensor_residual",
]


def random_polynomial_expr(rng: SplitMix64, n: int, degree: int = 1):
    """Random polynomial in x1..xn with coefficients in [-1, 1]."""
    e = Constant(rng.uniform_pm1())
    for a in range(n):
        term = Binary("*", Constant(rng.uniform_pm1()), Variable(f"x{a+1}"))
        e = Binary("+", e, term)
    if degree >= 2:
        for a in range(n):
            for b in range(a, n):
                quad = Binary("*", Variable(f"x{a+1}"), Variable(f"x{b+1}"))
                e = Binary("+", e, Binary("*", Constant(rng.uniform_pm1()), quad))
    return e


def random_section(rng: SplitMix64, m: int, n: int, degree: int = 1) -> SectionExpr:
    return SectionExpr([random_polynomial_expr(rng, n, degree) for _ in range(m)])


def random_polynomial_algebroid(n: int, m: int, seed: int,
                                degree: int = 1) -> AlgebroidStructure:
    """Algebroid with random polynomial structure functions.

    Generic: no skewness and no Jacobi identity are imposed, which is
    exactly what the correspondence checks need (they hold for every
    structure, Lie or not).
    """
    rng = SplitMix64(seed)
    rho = [[random_polynomial_expr(rng, n, degree) for _ in range(m)]
           for _ in range(n)]
    sigma = [[random_polynomial_expr(rng, n, degree) for _ in range(m)]
             for _ in range(n)]
    c = [[[random_polynomial_expr(rng, n, degree) for _ in range(m)]
          for _ in range(m)] for _ in range(m)]
    return AlgebroidStructure(n, m, rho, sigma, c)


def random_polynomial_affgebroid(n: int, m: int, seed: int,
                                 degree: int = 1) -> AffgebroidStructure:
    """Affgebroid with random polynomial structure functions (generic;
    includes nonzero affine blocks cm0/ck0, so convention-sensitive
    paths are exercised)."""
    rng = SplitMix64(seed)
    d = m - 1

    def vec(k):
        return [random_polynomial_expr(rng, n, degree) for _ in range(k)]

    def mat(r, c_):
        return [vec(c_) for _ in range(r)]

    return AffgebroidStructure(
        n=n, m=m,
        rho0=vec(n), rho=mat(n, d), cm0=vec(d), ck0=mat(d, d),
        cm=mat(d, d), ck=[mat(d, d) for _ in range(d)], sigma=mat(n, d))


def bracket_tensor_residual(A: AlgebroidStructure, n_pairs: int,
                            n_points: int, seed: int) -> float:
    """max |iota([X,Y]) - {iota(X), iota(Y)}| over random sections/points."""
    rng = SplitMix64(seed)
    worst = 0.0
    for _ in range(n_pairs):
        X = random_section(rng, A.m, A.n)
        Y = random_section(rng, A.m, A.n)
        br = bracket(A, X, Y)
        fx = section_pairing_expr(X)
        fy = section_pairing_expr(Y)
        for _ in range(n_points):
            xi = rng.vector_pm1(A.m)
            x = rng.vector_pm1(A.n)
            lhs = float(np.dot(br(x), xi))
            rhs = poisson_bracket(A, fx, fy, x, xi)
            worst = max(worst, abs(lhs - rhs))
    return worst


def _affine_slot_coeffs(sec, x_env, xi, n, d, affine: bool):
    """Coefficient vector of the (affine) differential of iota#_sec.

    Affine first-slot covectors carry coefficient +1 on the xi_0 slot;
    linear second-slot covectors have no xi_0 slot.
    """
    comps = sec.components
    seeds = x_names(n)
    jets = [evaluate_jet2(c, x_env, seeds) for c in comps]
    vals = [j.value for j in jets]
    coeffs = []
    if affine:
        coeffs.append(1.0)
    coeffs.extend(vals[:d])
    for a in range(n):
        s = 0.0
        for i in range(d):
            s += jets[i].grad[a] * xi[i]
        s += jets[d].grad[a]
        coeffs.append(s)
    return coeffs


def aff_bracket_tensor_residual(S: AffgebroidStructure, n_pairs: int,
                                n_points: int, seed: int) -> float:
    """max |iota#([a,X]) - <Gamma, d iota#_a x d iota_X>| over samples."""
    rng = SplitMix64(seed)
    n, d, m = S.n, S.d, S.m
    worst = 0.0
    for _ in range(n_pairs):
        a_sec = random_section(rng, m, n)
        x_sec = random_section(rng, m, n)
        br = aff_bracket(S, a_sec, x_sec)
        for _ in range(n_points):
            xi = rng.vector_pm1(d)
            x = rng.vector_pm1(n)
            x_env = dict(zip(x_names(n), x))
            gam = gamma_components(S, x, xi)
            left = _affine_slot_coeffs(a_sec, x_env, xi, n, d, affine=True)
            right = _affine_slot_coeffs(x_sec, x_env, xi, n, d, affine=False)
            lhs = float(np.asarray(left) @ gam @ np.asarray(right))
            bk = br(x)
            rhs = float(np.dot(bk[:d], xi)) + float(bk[d])
            worst = max(worst, abs(lhs - rhs))
    return worst
