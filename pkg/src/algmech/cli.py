"""Config-driven command-line front end.

Subcommands:

* ``simulate <config>``  - integrate the Euler-Lagrange dynamics and
  write the trajectory (CSV by default, JSON on request).
* ``verify <config>``    - classification, bracket-tensor residuals and
  the Lagrangian/Hamiltonian equivalence deviation, as JSON on stdout.
* ``transform <config>`` - Legendre-transform table (xi, y*, h) over a
  xi segment sweep.
* ``models``             - list the built-in model catalog as JSON.

Exit codes: 0 success, 2 validation error (config, schema, expressions),
3 numerical error (singular Hessian, Newton divergence, domain error),
4 verification failure (a residual above tolerance).  Every error is
also reported as single-line JSON on stderr.

The environment variable ``ALGMECH_SEED`` overrides the verification
seed from the config.

CSV output is locale-independent: '.' decimal separator, 17 significant
digits, LF line endings.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import checks
from .affgebroid import AffgebroidStructure, classify_aff
from .algebroid import AlgebroidStructure, classify
from .errors import (
    AlgmechError, ConfigError, DomainError, NewtonDivergence, ParseError,
    ShapeError, SingularHessian, UnboundVariable, UnknownFunction,
    UnknownModel,
)
from .hamiltonian import equivalence_check, legendre_transform
from .lagrangian import (
    DEFAULT_HESS_COND_LIMIT, fiber_dim, integrate, lagrangian_for,
    structure_kind,
)
from .models import BUILTIN_MODELS, builtin

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4

_VALIDATION_ERRORS = (ConfigError, ParseError, UnknownFunction,
                      UnboundVariable, ShapeError, UnknownModel,
                      ValueError, TypeError, KeyError)
_NUMERICAL_ERRORS = (SingularHessian, NewtonDivergence, DomainError)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _diag(kind: str, detail: str):
    sys.stderr.write(json.dumps({"error": kind, "detail": detail}) + "\n")


def _load_schema() -> dict:
    text = resources.files("algmech").joinpath("config_schema.json").read_text()
    return json.loads(text)


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path!r}: {exc}") from None
    try:
        jsonschema.validate(config, _load_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(
            f"config does not match schema: {exc.message} "
            f"(at {'/'.join(str(p) for p in exc.absolute_path) or '<root>'})"
        ) from None
    return config


def _build_inline(spec: dict):
    params = spec.get("params")
    if spec["kind"] == "algebroid":
        return AlgebroidStructure(spec["n"], spec["m"], spec["rho"],
                                  spec["sigma"], spec["c"], params=params)
    return AffgebroidStructure(
        spec["n"], spec["m"], spec["rho0"], spec["rho"], spec["cm0"],
        spec["ck0"], spec["cm"], spec["ck"], spec["sigma"], params=params)


def build_problem(config: dict):
    """Resolve (structure, lagrangian, monitors) from a config."""
    model_cfg = config["model"]
    if "builtin" in model_cfg:
        spec = builtin(model_cfg["builtin"], model_cfg.get("params"))
        structure = spec.structure
        lagrangian = spec.lagrangian
        monitors = spec.monitor_map()
        name = spec.name
    else:
        structure = _build_inline(model_cfg["inline"])
        lagrangian = None
        monitors = {}
        name = "inline"
    if "lagrangian" in config:
        lagrangian = lagrangian_for(structure, config["lagrangian"])
    out_monitors = config.get("output", {}).get("monitors")
    if out_monitors is not None:
        monitors = dict(out_monitors)
    return name, structure, lagrangian, monitors


def _write_output(config: dict, render):
    """Render to the configured path (binary-exact, LF endings) or stdout."""
    path = config.get("output", {}).get("path")
    buf = io.StringIO()
    render(buf)
    data = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)


def cmd_simulate(config: dict) -> int:
    name, structure, lagrangian, monitors = build_problem(config)
    if lagrangian is None:
        raise ConfigError("simulate requires a lagrangian (inline models "
                          "have no default)")
    sim = config.get("simulation")
    if sim is None:
        raise ConfigError("simulate requires a simulation section")
    initial = sim["initial"]
    traj = integrate(
        structure, lagrangian, initial["x"], initial["y"],
        sim["t0"], sim["t1"], sim["dt"], method=sim.get("method", "rk4"),
        monitors=monitors,
        hess_cond_limit=sim.get("hess_cond_limit", DEFAULT_HESS_COND_LIMIT))

    fmt = config.get("output", {}).get("format", "csv")
    n = structure.n
    d = fiber_dim(structure)
    mon_names = list(traj.monitors)

    if fmt == "csv":
        def render(out):
            header = (["t"] + [f"x{i+1}" for i in range(n)]
                      + [f"y{i+1}" for i in range(d)]
                      + [f"p{i+1}" for i in range(d)]
                      + ["adm_res", "el_res"] + mon_names)
            out.write(",".join(header) + "\n")
            for k in range(traj.n_nodes):
                row = ([traj.t[k]] + list(traj.x[k]) + list(traj.y[k])
                       + list(traj.momenta[k])
                       + [traj.admissibility_residual[k], traj.el_residual[k]]
                       + [traj.monitors[m][k] for m in mon_names])
                out.write(",".join(_fmt(v) for v in row) + "\n")
    else:
        def render(out):
            doc = {
                "model": name,
                "method": traj.method,
                "dt": traj.dt,
                "t": [float(v) for v in traj.t],
                "x": traj.x.tolist(),
                "y": traj.y.tolist(),
                "momenta": traj.momenta.tolist(),
                "adm_res": traj.admissibility_residual.tolist(),
                "el_res": traj.el_residual.tolist(),
                "monitors": {m: traj.monitors[m].tolist() for m in mon_names},
            }
            json.dump(doc, out, indent=1)
            out.write("\n")

    _write_output(config, render)
    return EXIT_OK


def cmd_verify(config: dict) -> int:
    name, structure, lagrangian, _ = build_problem(config)
    vcfg = config.get("verify", {})
    samples = int(vcfg.get("samples", 100))
    seed = int(os.environ.get("ALGMECH_SEED", vcfg.get("seed", 42)))
    tol = float(vcfg.get("tol", 1e-8))
    pairs = int(vcfg.get("section_pairs", 10))
    equiv_tol = float(vcfg.get("equiv_tol", 1e-6))

    if isinstance(structure, AlgebroidStructure):
        report = classify(structure, samples, seed, tol)
        residual = checks.bracket_tensor_residual(structure, pairs, samples, seed)
    else:
        report = classify_aff(structure, samples, seed, tol)
        residual = checks.aff_bracket_tensor_residual(structure, pairs, samples, seed)

    equiv = None
    sim = config.get("simulation")
    if sim is not None and lagrangian is not None:
        initial = sim["initial"]
        equiv = equivalence_check(structure, lagrangian, initial["x"],
                                  initial["y"], sim["t0"], sim["t1"],
                                  sim["dt"], method=sim.get("method", "rk4"))

    passed = bool(report.is_lie and residual <= tol
                  and (equiv is None or equiv <= equiv_tol))
    doc = {
        "model": name,
        "kind": structure_kind(structure),
        "classification": report.as_dict(),
        "bracket_tensor_max_residual": residual,
        "equivalence_max_deviation": equiv,
        "tol": tol,
        "equiv_tol": equiv_tol,
        "passed": passed,
    }
    sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    if not passed:
        _diag("verification", "a residual exceeded tolerance or the "
                              "structure is not Lie")
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_transform(config: dict) -> int:
    name, structure, lagrangian, _ = build_problem(config)
    if lagrangian is None:
        raise ConfigError("transform requires a lagrangian")
    tcfg = config.get("transform")
    if tcfg is None:
        raise ConfigError("transform requires a transform section")
    n = structure.n
    d = fiber_dim(structure)
    x = np.asarray(tcfg.get("x", [0.0] * n), dtype=float)
    start = np.asarray(tcfg["xi_start"], dtype=float)
    stop = np.asarray(tcfg["xi_stop"], dtype=float)
    if start.shape != (d,) or stop.shape != (d,):
        raise ConfigError(f"xi_start/xi_stop must have length {d}")
    count = int(tcfg["count"])
    y_guess = np.asarray(tcfg.get("y_guess", [0.0] * d), dtype=float)

    rows = []
    for k in range(count):
        frac = k / (count - 1) if count > 1 else 0.0
        xi = start + frac * (stop - start)
        h, y_star = legendre_transform(structure, lagrangian, x, xi, y_guess)
        rows.append((xi, y_star, h))
        y_guess = y_star

    def render(out):
        header = ([f"xi{i+1}" for i in range(d)]
                  + [f"ystar{i+1}" for i in range(d)] + ["h"])
        out.write(",".join(header) + "\n")
        for xi, y_star, h in rows:
            vals = list(xi) + list(y_star) + [h]
            out.write(",".join(_fmt(v) for v in vals) + "\n")

    _write_output(config, render)
    return EXIT_OK


def cmd_models() -> int:
    doc = [
        {"name": key, "defaults": entry["defaults"],
         "description": entry["description"]}
        for key, entry in sorted(BUILTIN_MODELS.items())
    ]
    sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="algmech",
        description="Simulation and verification of mechanics on "
                    "algebroids and affgebroids.")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, doc in (("simulate", "integrate a trajectory"),
                     ("verify", "run structural verification"),
                     ("transform", "tabulate the Legendre transform")):
        sp = sub.add_parser(cmd, help=doc)
        sp.add_argument("config", help="path to a JSON config file")
    sub.add_parser("models", help="list built-in models")
    return p


def run(argv) -> int:
    """Entry point returning the process exit code."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        if args.command == "models":
            return cmd_models()
        config = load_config(args.config)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "verify":
            return cmd_verify(config)
        return cmd_transform(config)
    except _NUMERICAL_ERRORS as exc:
        _diag("numerical", str(exc))
        return EXIT_NUMERICAL
    except _VALIDATION_ERRORS as exc:
        _diag("config", str(exc))
        return EXIT_CONFIG
    except AlgmechError as exc:
        _diag("config", str(exc))
        return EXIT_CONFIG


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
