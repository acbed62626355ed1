"""Hamiltonian side: Legendre transform, Hamiltonian vector fields,
integration, and Lagrangian-Hamiltonian equivalence checking.

For a hyperregular Lagrangian the Hamiltonian is

    h(x, xi) = sum_i y*^i xi_i - L(x, y*),   dL/dy(x, y*) = xi,

with y* recovered by a damped Newton iteration on the Legendre map.
Hamiltonian sections come in two flavors: explicit expressions
h(x, xi1..xid), and implicit Newton-backed evaluators that never need a
closed-form inverse (their derivatives follow from the envelope
identity dh/dxi = y*, dh/dx = -dL/dx at y*).

The Hamiltonian vector field is the contraction of the structure tensor
with the differential of h; in the affgebroid case the differential is
affine and carries coefficient +1 on the xi_0 slot, which yields

    xdot^b  = rho^b_0 + sum_i rho^b_i dh/dxi_i,
    xidot_j = cm0_j + sum_k ck0_kj xi_k
            + sum_i (cm_ij + sum_k ck_kij xi_k) dh/dxi_i
            - sum_b sigma^b_j dh/dx^b,

reducing to the algebroid contraction when the affine blocks vanish.
The Legendre image of a Lagrangian solution satisfies these equations
identically; the test suite asserts that residual on every built-in
model (the convention check for the xi_0 coefficient).

For degenerate structures the Hamiltonian is determined only up to a
Casimir function of the tensor (not just up to a constant); this module
always produces the canonical hyperregular representative above and
does not enumerate the alternatives.

Concurrency: explicit sections are immutable; an implicit section owns
a Newton warm-start cache, so share one instance per trajectory only
(``integrate_ham`` clones its argument; clone manually elsewhere).
"""

from __future__ import annotations

from functools import lru_cache
from typing import Mapping, Optional

import numpy as np

from . import backend, linalg
from ._structcore import kernel_for, x_names, xi_names
from .algebroid import _as_vec, coerce_expr
from .errors import NewtonDivergence, ShapeError, SingularHessian
from .expr import Expression, bind_parameters, variables
from .lagrangian import (
    DEFAULT_HESS_COND_LIMIT, Lagrangian, Trajectory, _el_residual, _grid,
    _lkernel, _march, _monitor_program, _eval_monitors, anchor_value,
    fiber_dim, integrate,
)
from .tape import compile_program

__all__ = [
    "HamiltonianSection", "legendre_transform", "ham_vector_field",
    "integrate_ham", "equivalence_check",
    "NEWTON_TOL", "NEWTON_MAX_ITER", "NEWTON_MAX_HALVINGS",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 10


@lru_cache(maxsize=256)
def _explicit_program(expression: Expression, n: int, d: int):
    order = xi_names(d) + x_names(n)
    extra = variables(expression) - set(order)
    if extra:
        raise ValueError(
            f"Hamiltonian uses unknown variable(s) {sorted(extra)}")
    return compile_program([expression], order, d + n)


def _newton_invert(lk, x, xi, y_guess,
                   tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER,
                   hess_cond_limit=DEFAULT_HESS_COND_LIMIT):
    """Solve dL/dy(x, y) = xi by damped Newton; returns (y, jet_row).

    Step halving (up to NEWTON_MAX_HALVINGS) is applied when a full step
    increases the residual max-norm.
    """
    d = lk.d
    y = [float(v) for v in y_guess]

    def residual(row):
        return [row[1 + j] - xi[j] for j in range(d)]

    row = lk.jet(x, y)
    res = residual(row)
    rn = max((abs(v) for v in res), default=0.0)
    for _ in range(max_iter):
        if rn <= tol:
            return y, row
        _, _, _, hyy, _ = lk.split(row)
        delta, cond = linalg.solve(hyy, res)
        if delta is None or cond > hess_cond_limit:
            raise SingularHessian(
                f"singular fiber Hessian in Newton iteration (cond {cond:.3e})",
                cond=cond)
        step = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            y_new = [y[j] - step * delta[j] for j in range(d)]
            row_new = lk.jet(x, y_new)
            res_new = residual(row_new)
            rn_new = max((abs(v) for v in res_new), default=0.0)
            if rn_new < rn or rn_new <= tol:
                break
            step *= 0.5
        y, row, res, rn = y_new, row_new, res_new, rn_new
    if rn <= tol:
        return y, row
    raise NewtonDivergence(
        f"Newton did not reach residual {tol:g} in {max_iter} iterations "
        f"(residual {rn:.3e})", residual=rn)


def legendre_transform(structure, L: Lagrangian, x, xi, y_guess):
    """Invert the Legendre map at (x, xi); returns (h, y_star).

    h = sum_i y*^i xi_i - L(x, y*).  Raises NewtonDivergence if the
    iteration stalls and SingularHessian if the fiber Hessian degenerates
    along the way.
    """
    lk = _lkernel(structure, L)
    x = _as_vec(x, lk.n, "x")
    xi = _as_vec(xi, lk.d, "xi")
    y_guess = _as_vec(y_guess, lk.d, "y_guess")
    y, row = _newton_invert(lk, x, xi.tolist(), y_guess)
    h = 0.0
    for j in range(lk.d):
        h += y[j] * xi[j]
    h -= float(row[0])
    return h, np.array(y)


class HamiltonianSection:
    """Hamiltonian as an explicit expression or a Newton-backed inverse."""

    def __init__(self, *, expression=None, structure=None, lagrangian=None,
                 y_guess=None, params=None):
        if expression is not None:
            self.kind = "explicit"
            from .algebroid import _normalize_params
            params = _normalize_params(params)
            self.expression = bind_parameters(coerce_expr(expression),
                                              dict(params))
            self.structure = None
            self.lagrangian = None
            self._warm = None
        elif structure is not None and lagrangian is not None:
            self.kind = "implicit"
            self.expression = None
            self.structure = structure
            self.lagrangian = lagrangian
            lk = _lkernel(structure, lagrangian)
            if y_guess is None:
                y_guess = [0.0] * lk.d
            self._warm = [float(v) for v in y_guess]
            if len(self._warm) != lk.d:
                raise ShapeError(f"y_guess must have length {lk.d}")
        else:
            raise ValueError("need either expression=... or structure= and lagrangian=")

    @classmethod
    def explicit(cls, expression, params=None) -> "HamiltonianSection":
        return cls(expression=expression, params=params)

    @classmethod
    def implicit(cls, structure, lagrangian, y_guess=None) -> "HamiltonianSection":
        return cls(structure=structure, lagrangian=lagrangian, y_guess=y_guess)

    def clone(self) -> "HamiltonianSection":
        """Independent copy (fresh warm-start state for implicit sections)."""
        if self.kind == "explicit":
            return HamiltonianSection(expression=self.expression)
        return HamiltonianSection(structure=self.structure,
                                  lagrangian=self.lagrangian,
                                  y_guess=self._warm)

    def _bind(self, structure):
        """Pre-resolve evaluation against a structure; returns a callable
        (x, xi) -> (h, dhdxi, dhdx)."""
        n = structure.n
        d = fiber_dim(structure)
        if self.kind == "explicit":
            prog = _explicit_program(self.expression, n, d)

            def ev(x, xi):
                row = backend.run_program(
                    prog, np.concatenate([xi, x]))[0]
                return (float(row[0]), row[1:1 + d].tolist(),
                        row[1 + d:1 + d + n].tolist())
            return ev

        if self.structure is not structure and self.structure != structure:
            raise ValueError("implicit Hamiltonian bound to a different structure")
        lk = _lkernel(self.structure, self.lagrangian)

        def ev(x, xi):
            y, row = _newton_invert(lk, x, list(xi), self._warm)
            self._warm = y
            h = 0.0
            for j in range(d):
                h += y[j] * xi[j]
            h -= float(row[0])
            dhdx = [-row[1 + d + a] for a in range(n)]
            return h, y, dhdx
        return ev

    def value(self, structure, x, xi) -> float:
        x = _as_vec(x, structure.n, "x")
        xi = _as_vec(xi, fiber_dim(structure), "xi")
        return self._bind(structure)(x, xi)[0]


def ham_vector_field(structure, H: HamiltonianSection, x, xi):
    """Contraction of the structure tensor with the differential of H."""
    n = structure.n
    d = fiber_dim(structure)
    x = _as_vec(x, n, "x")
    xi = _as_vec(xi, d, "xi")
    ev = H._bind(structure)
    kernel = kernel_for(structure)
    _, dhdxi, dhdx = ev(x, xi)
    tab = kernel.tables(x)
    xdot = kernel.ham_xdot(tab, dhdxi)
    xidot = kernel.ham_xidot(tab, xi.tolist(), dhdxi, dhdx)
    return np.array(xdot), np.array(xidot)


def integrate_ham(structure, H: HamiltonianSection, x0, xi0, t0, t1, dt,
                  method: str = "rk4",
                  monitors: Optional[Mapping[str, object]] = None) -> Trajectory:
    """Integrate Hamilton's equations for states (x, xi).

    The returned Trajectory stores xi in ``momenta`` and the recovered
    velocities dH/dxi in ``y``; monitors see xi under both the p* and
    xi* names.  The section is cloned up front so concurrent callers can
    share ``H``.
    """
    n = structure.n
    d = fiber_dim(structure)
    x0 = _as_vec(x0, n, "x0")
    xi0 = _as_vec(xi0, d, "xi0")
    t, steps = _grid(t0, t1, dt)
    H = H.clone()
    ev = H._bind(structure)
    kernel = kernel_for(structure)
    mon_prog, mon_names = _monitor_program(monitors or {}, n, d)

    def f(s):
        x = s[:n]
        xi = s[n:]
        _, dhdxi, dhdx = ev(x, xi)
        tab = kernel.tables(x)
        return np.array(kernel.ham_xdot(tab, dhdxi)
                        + kernel.ham_xidot(tab, xi.tolist(), dhdxi, dhdx))

    states = _march(f, np.concatenate([x0, xi0]), dt, steps, method)
    xs = states[:, :n]
    xis = states[:, n:]

    nn = steps + 1
    vel = np.empty((nn, d))
    xidot = np.empty((nn, d))
    adm = np.empty(nn)
    mon_vals = np.empty((nn, len(mon_names)))
    for k in range(nn):
        xk = xs[k]
        xik = xis[k]
        _, dhdxi, dhdx = ev(xk, xik)
        tab = kernel.tables(xk)
        xdot_k = kernel.ham_xdot(tab, dhdxi)
        vel[k] = dhdxi
        xidot[k] = kernel.ham_xidot(tab, xik.tolist(), dhdxi, dhdx)
        gap = np.abs(np.array(xdot_k) - anchor_value(structure, xk, dhdxi))
        adm[k] = float(np.max(gap)) if n else 0.0
        if mon_prog is not None:
            mon_vals[k] = _eval_monitors(mon_prog, t[k], xk, vel[k], xik)

    return Trajectory(
        t=t, x=xs, y=vel, momenta=xis,
        admissibility_residual=adm,
        el_residual=_el_residual(xis, xidot, dt),
        monitors={name: mon_vals[:, i] for i, name in enumerate(mon_names)},
        method=method, dt=float(dt), kind="hamiltonian")


def equivalence_check(structure, L: Lagrangian, x0, y0, t0, t1, dt,
                      method: str = "rk4") -> float:
    """Max deviation between a Lagrangian run and its Hamiltonian shadow.

    The Lagrangian trajectory is mapped through the Legendre map; a
    Hamiltonian trajectory with the implicit (Newton-backed) Hamiltonian
    starts from the mapped initial state; the result is the largest
    max-norm gap over the grid between the two base curves and between
    the Lagrangian momenta and the Hamiltonian xi curve.
    """
    lag = integrate(structure, L, x0, y0, t0, t1, dt, method=method)
    H = HamiltonianSection.implicit(structure, L, y_guess=y0)
    ham = integrate_ham(structure, H, lag.x[0], lag.momenta[0], t0, t1, dt,
                        method=method)
    dev_x = np.max(np.abs(lag.x - ham.x)) if structure.n else 0.0
    dev_p = np.max(np.abs(lag.momenta - ham.momenta)) \
        if fiber_dim(structure) else 0.0
    return float(max(dev_x, dev_p))
