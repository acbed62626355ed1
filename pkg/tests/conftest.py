"""Shared fixtures: reference structures and finite-difference oracles.

The finite-difference helpers are the independent oracle for the jet
evaluator: central differences with step 1e-5*(|x|+1) for gradients and
1e-4*(|x|+1) for Hessians (second differences lose ~eps/h^2 to rounding,
so the Hessian step is widened to keep the oracle itself below the
comparison tolerance).
"""

import numpy as np
import pytest

from algmech import AlgebroidStructure, AffgebroidStructure


def eps_symbol(i, j, k):
    if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        return 1.0
    if (i, j, k) in ((2, 1, 0), (0, 2, 1), (1, 0, 2)):
        return -1.0
    return 0.0


def make_so3():
    c = [[[eps_symbol(i, j, k) for j in range(3)] for i in range(3)]
         for k in range(3)]
    return AlgebroidStructure(0, 3, [], [], c)


def make_tangent_line():
    return AlgebroidStructure(1, 1, [["1"]], [["1"]], [[["0"]]])


def make_newtonian_structure():
    z = "0"
    spatial = [["0", "0", "0"], ["1", "0", "0"], ["0", "1", "0"],
               ["0", "0", "1"]]
    return AffgebroidStructure(
        n=4, m=4,
        rho0=["1", "0", "0", "0"], rho=spatial,
        cm0=[z] * 3, ck0=[[z] * 3] * 3, cm=[[z] * 3] * 3,
        ck=[[[z] * 3] * 3] * 3, sigma=spatial)


@pytest.fixture(scope="session")
def so3():
    return make_so3()


@pytest.fixture(scope="session")
def tangent_line():
    return make_tangent_line()


@pytest.fixture(scope="session")
def newtonian_structure():
    return make_newtonian_structure()


def fd_gradient(f, point, h_rel=1e-5):
    point = [float(v) for v in point]
    grad = []
    for i, xi in enumerate(point):
        h = h_rel * (abs(xi) + 1.0)
        up = list(point)
        dn = list(point)
        up[i] = xi + h
        dn[i] = xi - h
        grad.append((f(up) - f(dn)) / (2.0 * h))
    return np.array(grad)


def fd_hessian(f, point, h_rel=1e-4):
    point = [float(v) for v in point]
    d = len(point)
    hess = np.empty((d, d))
    steps = [h_rel * (abs(v) + 1.0) for v in point]
    f0 = f(point)
    for i in range(d):
        hi = steps[i]
        up = list(point)
        dn = list(point)
        up[i] += hi
        dn[i] -= hi
        hess[i, i] = (f(up) - 2.0 * f0 + f(dn)) / (hi * hi)
        for j in range(i + 1, d):
            hj = steps[j]
            pp = list(point)
            pm = list(point)
            mp = list(point)
            mm = list(point)
            pp[i] += hi; pp[j] += hj
            pm[i] += hi; pm[j] -= hj
            mp[i] -= hi; mp[j] += hj
            mm[i] -= hi; mm[j] -= hj
            hess[i, j] = hess[j, i] = \
                (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * hi * hj)
    return hess
