"""Built-in structure/Lagrangian catalog.

Four families cover the verification targets:

* ``tangent_bundle(n, V)``: the classical limit; anchors are the
  identity, the bracket vanishes, L = kinetic - V(x).
* ``so3_rigid_body(I1, I2, I3)``: Lie-algebra case (n = 0) with
  structure constants eps_{ijk}; the dynamics are Euler's rigid-body
  equations, with energy and the squared angular momentum as monitors.
* ``newtonian(mass, phi)``: Newtonian space-time as a special
  affgebroid over x1 = t, (x2, x3, x4) = q; the time anchor is the
  affine part (rho0 = d/dt), space is flat, and phi(t, q) enters the
  Lagrangian as a potential.  An inertial chart is fixed; the Euclidean
  metric is the identity and the mass enters only through L.
* ``time_dependent(n, V)``: the affgebroid of a fibration over time
  with n - 1 spatial coordinates, same pattern as newtonian in
  dimension n.

User-facing potential expressions are written in (t, q1, q2, ...) and
renamed onto the canonical base coordinates at load time; numeric
parameters are bound into the expressions at the same moment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .affgebroid import AffgebroidStructure
from .algebroid import (
    AlgebroidStructure, coerce_expr, zero_expr_cube, zero_expr_matrix,
    zero_expr_vector,
)
from .errors import UnknownModel
from .expr import Constant, Expression, Variable, substitute, variables
from .lagrangian import Lagrangian, lagrangian_for, structure_kind

__all__ = ["ModelSpec", "builtin", "BUILTIN_MODELS"]


@dataclass(frozen=True)
class ModelSpec:
    """A ready-to-run model: structure, default Lagrangian, initial
    state, and suggested monitor expressions."""

    name: str
    parameters: tuple
    structure: object
    lagrangian: Lagrangian
    initial_x: tuple
    initial_y: tuple
    monitors: tuple

    @property
    def kind(self) -> str:
        return structure_kind(self.structure)

    def monitor_map(self) -> dict:
        return dict(self.monitors)


def _merge_params(defaults: Mapping, params: Optional[Mapping], name: str) -> dict:
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in merged:
            raise ValueError(
                f"model {name!r} has no parameter {key!r} "
                f"(accepted: {sorted(merged)})")
        merged[key] = value
    return merged


def _positive(value, what) -> float:
    v = float(value)
    if not v > 0:
        raise ValueError(f"{what} must be positive, got {value!r}")
    return v


def _rename_potential(text, allowed_names, rename, what) -> Expression:
    e = coerce_expr(text)
    extra = variables(e) - set(allowed_names)
    if extra:
        raise ValueError(
            f"{what} may only use {sorted(allowed_names)}; found {sorted(extra)}")
    return substitute(e, rename)


def _kinetic(d, mass=None) -> str:
    quad = " + ".join(f"y{i+1}^2" for i in range(d))
    return f"0.5*({quad})" if mass is None else f"0.5*{mass!r}*({quad})"


def _sub(e_text, minus: Expression) -> Expression:
    from .expr import Binary, parse
    left = parse(e_text)
    if isinstance(minus, Constant) and minus.value == 0.0:
        return left
    return Binary("-", left, minus)


def _add(e_text, plus: Expression) -> Expression:
    from .expr import Binary, parse
    left = parse(e_text)
    if isinstance(plus, Constant) and plus.value == 0.0:
        return left
    return Binary("+", left, plus)


def _tangent_bundle(params) -> ModelSpec:
    n = int(params["n"])
    if n < 1:
        raise ValueError("tangent_bundle needs n >= 1")
    xnames = [f"x{i+1}" for i in range(n)]
    V = _rename_potential(params["V"], xnames, {}, "potential V")
    delta = [[Constant(1.0) if i == j else Constant(0.0) for j in range(n)]
             for i in range(n)]
    structure = AlgebroidStructure(n, n, delta, delta, zero_expr_cube(n, n, n))
    L = lagrangian_for(structure, _sub(_kinetic(n), V))
    monitors = (("energy", _add(_kinetic(n), V)),)
    return ModelSpec("tangent_bundle", tuple(sorted(params.items())),
                     structure, L, (0.0,) * n, (0.0,) * n, monitors)


def _so3_rigid_body(params) -> ModelSpec:
    inertias = {k: _positive(params[k], k) for k in ("I1", "I2", "I3")}

    def eps(i, j, k):
        if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            return 1.0
        if (i, j, k) in ((2, 1, 0), (0, 2, 1), (1, 0, 2)):
            return -1.0
        return 0.0

    c = [[[Constant(eps(i, j, k)) for j in range(3)] for i in range(3)]
         for k in range(3)]
    structure = AlgebroidStructure(0, 3, [], [], c)
    L = lagrangian_for(structure, "0.5*(I1*y1^2 + I2*y2^2 + I3*y3^2)",
                       params=inertias)
    energy = coerce_expr("0.5*(I1*y1^2 + I2*y2^2 + I3*y3^2)")
    casimir = coerce_expr("(I1*y1)^2 + (I2*y2)^2 + (I3*y3)^2")
    bind = {k: Constant(v) for k, v in inertias.items()}
    monitors = (("energy", substitute(energy, bind)),
                ("casimir", substitute(casimir, bind)))
    return ModelSpec("so3_rigid_body", tuple(sorted(params.items())),
                     structure, L, (), (1.0, 0.5, 0.2), monitors)


def _flat_affine_structure(n) -> AffgebroidStructure:
    """Fibration over time: x1 = t, x2..xn spatial, all brackets zero."""
    d = n - 1
    rho0 = [Constant(1.0)] + [Constant(0.0)] * d
    spatial = [[Constant(1.0) if b == k + 1 else Constant(0.0)
                for k in range(d)] for b in range(n)]
    return AffgebroidStructure(
        n=n, m=n, rho0=rho0, rho=spatial,
        cm0=zero_expr_vector(d), ck0=zero_expr_matrix(d, d),
        cm=zero_expr_matrix(d, d), ck=zero_expr_cube(d, d, d),
        sigma=spatial)


def _time_rename(d):
    rename = {"t": Variable("x1")}
    rename.update({f"q{j+1}": Variable(f"x{j+2}") for j in range(d)})
    return rename


def _newtonian(params) -> ModelSpec:
    mass = _positive(params["mass"], "mass")
    rename = _time_rename(3)
    phi = _rename_potential(params["phi"], rename.keys(), rename,
                            "potential phi")
    structure = _flat_affine_structure(4)
    L = lagrangian_for(structure, _sub(_kinetic(3, mass), phi))
    monitors = (("energy", _add(_kinetic(3, mass), phi)),)
    return ModelSpec("newtonian", tuple(sorted(params.items())),
                     structure, L, (0.0,) * 4, (0.0,) * 3, monitors)


def _time_dependent(params) -> ModelSpec:
    n = int(params["n"])
    if n < 2:
        raise ValueError("time_dependent needs n >= 2 (time plus space)")
    d = n - 1
    rename = _time_rename(d)
    V = _rename_potential(params["V"], rename.keys(), rename, "potential V")
    structure = _flat_affine_structure(n)
    L = lagrangian_for(structure, _sub(_kinetic(d), V))
    monitors = (("energy", _add(_kinetic(d), V)),)
    return ModelSpec("time_dependent", tuple(sorted(params.items())),
                     structure, L, (0.0,) * n, (0.0,) * d, monitors)


BUILTIN_MODELS = {
    "tangent_bundle": {
        "build": _tangent_bundle,
        "defaults": {"n": 1, "V": "0"},
        "description": "Tangent bundle of R^n; classical Euler-Lagrange "
                       "dynamics with L = kinetic - V(x1..xn).",
    },
    "so3_rigid_body": {
        "build": _so3_rigid_body,
        "defaults": {"I1": 1.0, "I2": 2.0, "I3": 3.0},
        "description": "Rigid body on the Lie algebra so(3); Euler "
                       "equations with energy and Casimir monitors.",
    },
    "newtonian": {
        "build": _newtonian,
        "defaults": {"mass": 1.0, "phi": "0"},
        "description": "Newtonian space-time affgebroid (x1 = t, "
                       "x2..x4 = q); phi may depend on t, q1..q3.",
    },
    "time_dependent": {
        "build": _time_dependent,
        "defaults": {"n": 2, "V": "0"},
        "description": "Time-dependent mechanics on a fibration over "
                       "time with n-1 spatial coordinates; V(t, q*).",
    },
}


def builtin(name: str, params: Optional[Mapping] = None) -> ModelSpec:
    """Instantiate a built-in model by name with parameter overrides."""
    entry = BUILTIN_MODELS.get(name)
    if entry is None:
        raise UnknownModel(
            f"unknown model {name!r} (available: {sorted(BUILTIN_MODELS)})")
    merged = _merge_params(entry["defaults"], params, name)
    return entry["build"](merged)
