"""Euler-Lagrange dynamics on algebroids and affgebroids.

Given a structure and a Lagrangian L(x, y), the dynamics is the implicit
differential equation

    dx^a/dt = anchor applied to (x, y),
    d/dt (dL/dy^j) = momentum right-hand side,

where the right-hand sides are the structure-function contractions of
the respective structure map applied to the differential of L (momenta
slot dL/dy, base-covector slot dL/dx).  ``dynamics_lift`` evaluates that
parametrization directly; ``solve_ydot`` explicitates it by expanding
the time derivative of the momenta and solving the fiber-Hessian system

    [d2L/dydy] ydot = momdot - [d2L/dydx] xdot ,

which is valid exactly where the Lagrangian is regular.  A singular (or
ill-conditioned) Hessian raises SingularHessian rather than guessing:
the implicit dynamics still exists there but is not an explicit ODE.

``integrate`` marches the explicit ODE with a fixed step: classical RK4
(default), or the implicit midpoint rule for symplecticity experiments -
midpoint is symplectic and preserves quadratic invariants (harmonic
energy, rigid-body energy and Casimir) to iteration tolerance at any
stable step size, where RK4 shows secular drift.  Each node carries
diagnostics: the admissibility residual (solutions are automatically
admissible, so this tests plumbing, not mathematics), the
Euler-Lagrange residual from centrally differenced momenta, and
user-selected monitor expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional

import numpy as np

from . import backend, linalg
from ._structcore import kernel_for, x_names, xi_names, y_names
from .affgebroid import AffgebroidStructure
from .affgebroid import structure_entries as aff_entries
from .algebroid import AlgebroidStructure, _as_vec, coerce_expr
from .algebroid import structure_entries as alg_entries
from .errors import SingularHessian
from .expr import Expression, bind_parameters, variables
from .tape import compile_program

__all__ = [
    "Lagrangian", "Trajectory", "legendre", "dynamics_lift", "solve_ydot",
    "integrate", "fiber_dim", "structure_kind", "anchor_value",
    "METHODS", "DEFAULT_HESS_COND_LIMIT",
]

METHODS = ("rk4", "midpoint")
DEFAULT_HESS_COND_LIMIT = 1e12


def structure_kind(structure) -> str:
    if isinstance(structure, AlgebroidStructure):
        return "algebroid"
    if isinstance(structure, AffgebroidStructure):
        return "affgebroid"
    raise TypeError(f"not a structure: {structure!r}")


def fiber_dim(structure) -> int:
    """Velocity dimension: m for algebroids, m - 1 for affgebroids."""
    return structure.m if isinstance(structure, AlgebroidStructure) \
        else structure.m - 1


@dataclass(frozen=True)
class Lagrangian:
    """Lagrangian function of (x1..xn, y1..yd) with a structure-kind tag."""

    expression: Expression
    structure_kind: str
    params: tuple = ()

    def __init__(self, expression, structure_kind, params=None):
        from .algebroid import _normalize_params
        if structure_kind not in ("algebroid", "affgebroid"):
            raise ValueError(f"bad structure_kind {structure_kind!r}")
        params = _normalize_params(params)
        e = bind_parameters(coerce_expr(expression), dict(params))
        object.__setattr__(self, "expression", e)
        object.__setattr__(self, "structure_kind", structure_kind)
        object.__setattr__(self, "params", params)


def lagrangian_for(structure, expression, params=None) -> Lagrangian:
    """Build a Lagrangian tagged for (and validated against) a structure."""
    L = Lagrangian(expression, structure_kind(structure), params)
    _check_lagrangian(structure, L)
    return L


def _check_lagrangian(structure, L: Lagrangian):
    if L.structure_kind != structure_kind(structure):
        raise ValueError(
            f"Lagrangian tagged {L.structure_kind!r} used with a "
            f"{structure_kind(structure)!r} structure")
    allowed = set(x_names(structure.n)) | set(y_names(fiber_dim(structure)))
    extra = variables(L.expression) - allowed
    if extra:
        raise ValueError(f"Lagrangian uses undeclared variable(s) {sorted(extra)}")


# --------------------------------------------------------------------------
# Compiled per-(structure, Lagrangian) evaluation
# --------------------------------------------------------------------------

class _LKernel:
    """Structure kernel plus the compiled full jet of L over (y, x)."""

    def __init__(self, structure, L: Lagrangian):
        _check_lagrangian(structure, L)
        self.structure = structure
        self.n = structure.n
        self.d = fiber_dim(structure)
        self.kernel = kernel_for(structure)
        D = self.d + self.n
        order = y_names(self.d) + x_names(self.n)
        self.prog_full = compile_program([L.expression], order, D)
        # packed upper-triangle offsets for the (y,y) and (y,x) blocks
        def pidx(i, j):
            if i > j:
                i, j = j, i
            return 1 + D + i * D - (i * (i - 1)) // 2 + (j - i)
        self._yy = [[pidx(i, j) for j in range(self.d)] for i in range(self.d)]
        self._yx = [[pidx(i, self.d + a) for a in range(self.n)]
                    for i in range(self.d)]

    def jet(self, x, y):
        """Row [L, dL/dy, dL/dx, packed Hessian] at (x, y)."""
        vals = np.concatenate([np.asarray(y, dtype=np.float64),
                               np.asarray(x, dtype=np.float64)])
        return backend.run_program(self.prog_full, vals)[0]

    def split(self, row):
        d, n = self.d, self.n
        value = float(row[0])
        dLdy = row[1:1 + d].tolist()
        dLdx = row[1 + d:1 + d + n].tolist()
        hyy = [[row[self._yy[i][j]] for j in range(d)] for i in range(d)]
        hyx = [[row[self._yx[i][a]] for a in range(n)] for i in range(d)]
        return value, dLdy, dLdx, hyy, hyx


@lru_cache(maxsize=256)
def _lkernel(structure, L: Lagrangian) -> _LKernel:
    return _LKernel(structure, L)


# --------------------------------------------------------------------------
# Point operations
# --------------------------------------------------------------------------

def legendre(structure, L: Lagrangian, x, y) -> np.ndarray:
    """Legendre map: momenta (dL/dy^1, ..., dL/dy^d) at (x, y)."""
    lk = _lkernel(structure, L)
    x = _as_vec(x, lk.n, "x")
    y = _as_vec(y, lk.d, "y")
    row = lk.jet(x, y)
    return np.array(row[1:1 + lk.d])


def dynamics_lift(structure, L: Lagrangian, x, y):
    """Image of (x, y) under the dynamics parametrization.

    Returns (x, momenta, xdot, momdot): the structure map applied to the
    differential of L, evaluated through the kernel tables.
    """
    lk = _lkernel(structure, L)
    x = _as_vec(x, lk.n, "x")
    y = _as_vec(y, lk.d, "y")
    row = lk.jet(x, y)
    _, dLdy, dLdx, _, _ = lk.split(row)
    tab = lk.kernel.tables(x)
    yl = y.tolist()
    xdot = lk.kernel.xdot(tab, yl)
    momdot = lk.kernel.momdot(tab, yl, dLdy, dLdx)
    return x.copy(), np.array(dLdy), np.array(xdot), np.array(momdot)


def solve_ydot(structure, L: Lagrangian, x, y,
               hess_cond_limit: float = DEFAULT_HESS_COND_LIMIT):
    """Explicitate the dynamics: returns (xdot, ydot, cond).

    cond is the 1-norm condition number of the fiber Hessian; above
    ``hess_cond_limit`` (or at exact singularity) SingularHessian is
    raised.
    """
    lk = _lkernel(structure, L)
    x = _as_vec(x, lk.n, "x")
    y = _as_vec(y, lk.d, "y")
    xdot, ydot, cond = _solve_ydot_fast(lk, x, y, hess_cond_limit)
    return np.array(xdot), np.array(ydot), cond


def _solve_ydot_fast(lk: _LKernel, x, y, hess_cond_limit):
    row = lk.jet(x, y)
    _, dLdy, dLdx, hyy, hyx = lk.split(row)
    tab = lk.kernel.tables(x)
    yl = list(y)
    xdot = lk.kernel.xdot(tab, yl)
    momdot = lk.kernel.momdot(tab, yl, dLdy, dLdx)
    rhs = [momdot[j] - sum(hyx[j][a] * xdot[a] for a in range(lk.n))
           for j in range(lk.d)]
    ydot, cond = linalg.solve(hyy, rhs)
    if ydot is None or cond > hess_cond_limit:
        raise SingularHessian(
            f"fiber Hessian condition {cond:.3e} exceeds {hess_cond_limit:.3e}",
            cond=cond)
    return xdot, ydot, cond


def anchor_value(structure, x, y) -> np.ndarray:
    """Anchor applied to (x, y), assembled independently of the kernel.

    Used by the admissibility diagnostic so that the trajectory check
    does not share the code path it is checking.
    """
    if isinstance(structure, AlgebroidStructure):
        rho, _, _ = alg_entries(structure, x)
        return rho @ np.asarray(y, dtype=np.float64)
    t = aff_entries(structure, x)
    return t["rho0"] + t["rho"] @ np.asarray(y, dtype=np.float64)


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Fixed-step trajectory with per-node diagnostics.

    For Lagrangian runs ``y`` holds velocities and ``momenta`` holds
    dL/dy; for Hamiltonian runs ``y`` holds the recovered velocities
    dH/dxi and ``momenta`` holds xi.  ``admissibility_residual`` is the
    max-norm gap between the stored base velocity and an independent
    anchor evaluation; ``el_residual`` compares centrally differenced
    momenta against the momentum right-hand side (one-sided second-order
    at the endpoints).
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    momenta: np.ndarray
    admissibility_residual: np.ndarray
    el_residual: np.ndarray
    monitors: dict
    method: str
    dt: float
    kind: str

    def __post_init__(self):
        for arr in (self.t, self.x, self.y, self.momenta,
                    self.admissibility_residual, self.el_residual,
                    *self.monitors.values()):
            arr.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return len(self.t)


def _grid(t0, t1, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    steps = int(round((t1 - t0) / dt))
    if steps < 1:
        raise ValueError("grid needs at least one step")
    if steps > 10**8:
        raise ValueError("step count exceeds 1e8")
    return t0 + dt * np.arange(steps + 1), steps


_MIDPOINT_TOL = 1e-13
_MIDPOINT_MAX_ITER = 50


def _midpoint_step(f, s, dt):
    """One implicit-midpoint step: solve m = s + dt/2 f(m) by fixed
    point, then advance s + dt f(m)."""
    m = s + 0.5 * dt * f(s)
    tol = _MIDPOINT_TOL * (1.0 + float(np.max(np.abs(s), initial=0.0)))
    for _ in range(_MIDPOINT_MAX_ITER):
        m_new = s + 0.5 * dt * f(m)
        gap = float(np.max(np.abs(m_new - m), initial=0.0))
        m = m_new
        if gap <= tol:
            return s + dt * f(m)
    raise NewtonDivergence(
        f"implicit midpoint fixed point did not contract below {tol:.1e} "
        f"in {_MIDPOINT_MAX_ITER} iterations (reduce dt)", residual=gap)


def _march(f, s0, dt, steps, method):
    """Fixed-step integration; returns states (steps+1, dim)."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    states = np.empty((steps + 1, len(s0)))
    states[0] = s0
    s = s0
    for k in range(steps):
        try:
            if method == "rk4":
                k1 = f(s)
                k2 = f(s + 0.5 * dt * k1)
                k3 = f(s + 0.5 * dt * k2)
                k4 = f(s + dt * k3)
                s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                s = _midpoint_step(f, s, dt)
        except (SingularHessian, NewtonDivergence) as exc:
            exc.step = k
            raise SingularHessian(f"{exc} (at step {k})", cond=exc.cond,
                                  step=k) from None \
                if isinstance(exc, SingularHessian) else exc
        states[k + 1] = s
    return states


def _el_residual(momenta, momdot, dt):
    """Max-norm EL residual per node: d/dt momenta vs momentum RHS."""
    nn = momenta.shape[0]
    res = np.zeros(nn)
    if momenta.shape[1] == 0 or nn < 3:
        return res
    dm = np.empty_like(momenta)
    dm[1:-1] = (momenta[2:] - momenta[:-2]) / (2.0 * dt)
    dm[0] = (-3.0 * momenta[0] + 4.0 * momenta[1] - momenta[2]) / (2.0 * dt)
    dm[-1] = (3.0 * momenta[-1] - 4.0 * momenta[-2] + momenta[-3]) / (2.0 * dt)
    return np.max(np.abs(dm - momdot), axis=1)


def _monitor_program(monitors, n, d):
    if not monitors:
        return None, ()
    names = tuple(monitors)
    exprs = [coerce_expr(monitors[name]) for name in names]
    order = (("t",) + x_names(n) + y_names(d)
             + tuple(f"p{i+1}" for i in range(d)) + xi_names(d))
    allowed = set(order)
    for name, e in zip(names, exprs):
        extra = variables(e) - allowed
        if extra:
            raise ValueError(
                f"monitor {name!r} uses unknown variable(s) {sorted(extra)}")
    return compile_program(exprs, order, 0), names


def _eval_monitors(prog, t, x, y, p):
    vals = np.concatenate([[t], x, y, p, p])
    return backend.run_program(prog, vals)[:, 0]


def integrate(structure, L: Lagrangian, x0, y0, t0, t1, dt,
              method: str = "rk4",
              monitors: Optional[Mapping[str, object]] = None,
              hess_cond_limit: float = DEFAULT_HESS_COND_LIMIT) -> Trajectory:
    """Integrate the explicitated Euler-Lagrange dynamics.

    Monitors are named expressions in (t, x*, y*, p*/xi*), evaluated at
    every node and returned as arrays alongside the built-in
    diagnostics.
    """
    lk = _lkernel(structure, L)
    n, d = lk.n, lk.d
    x0 = _as_vec(x0, n, "x0")
    y0 = _as_vec(y0, d, "y0")
    t, steps = _grid(t0, t1, dt)
    mon_prog, mon_names = _monitor_program(monitors or {}, n, d)

    def f(s):
        xdot, ydot, _ = _solve_ydot_fast(lk, s[:n], s[n:], hess_cond_limit)
        return np.array(xdot + ydot)

    states = _march(f, np.concatenate([x0, y0]), dt, steps, method)
    xs = states[:, :n]
    ys = states[:, n:]

    nn = steps + 1
    momenta = np.empty((nn, d))
    momdot = np.empty((nn, d))
    adm = np.empty(nn)
    mon_vals = np.empty((nn, len(mon_names)))
    for k in range(nn):
        xk = xs[k]
        yk = ys[k]
        row = lk.jet(xk, yk)
        _, dLdy, dLdx, _, _ = lk.split(row)
        tab = lk.kernel.tables(xk)
        xdot_k = lk.kernel.xdot(tab, yk.tolist())
        momenta[k] = dLdy
        momdot[k] = lk.kernel.momdot(tab, yk.tolist(), dLdy, dLdx)
        gap = np.abs(np.array(xdot_k) - anchor_value(structure, xk, yk))
        adm[k] = float(np.max(gap)) if n else 0.0
        if mon_prog is not None:
            mon_vals[k] = _eval_monitors(mon_prog, t[k], xk, yk, momenta[k])

    return Trajectory(
        t=t, x=xs, y=ys, momenta=momenta,
        admissibility_residual=adm,
        el_residual=_el_residual(momenta, momdot, dt),
        monitors={name: mon_vals[:, i] for i, name in enumerate(mon_names)},
        method=method, dt=float(dt), kind="lagrangian")
