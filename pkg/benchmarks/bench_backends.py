#!/usr/bin/env python3
"""Benchmark: compiled jet-tape executor vs the pure-Python fallback.

Two workloads:

* raw kernel throughput: repeated jet evaluation of a rigid-body and a
  Newtonian Lagrangian (the expressions the integrator hammers), and
* an end-to-end rigid-body trajectory, once per backend, by forcing the
  backend through a subprocess with ALGMECH_BACKEND set.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from algmech.backend import available_backends
from algmech.expr import parse
from algmech.tape import compile_program

KERNELS = {
    "rigid_body_jet (d=3)": (
        "0.5*(1*y1^2 + 2*y2^2 + 3*y3^2)",
        ("y1", "y2", "y3"), 3),
    "newtonian_jet (d=7)": (
        "0.5*(y1^2 + y2^2 + y3^2) - 0.5*(x2^2 + x3^2 + x4^2)",
        ("y1", "y2", "y3", "x1", "x2", "x3", "x4"), 7),
    "classify_entry (d=5)": (
        "(0.3 + x1*x2)*xi1 + sin(x1)*xi2 - x2^2*xi3",
        ("xi1", "xi2", "xi3", "x1", "x2"), 5),
}

TRAJECTORY_SNIPPET = """
import time
import algmech
from algmech import builtin, integrate
spec = builtin("so3_rigid_body", {})
t0 = time.perf_counter()
tr = integrate(spec.structure, spec.lagrangian, [], [1.0, 0.5, 0.2],
               0.0, 10.0, 1e-3, monitors=spec.monitor_map())
elapsed = time.perf_counter() - t0
print(f"{algmech.active_backend()} {elapsed:.3f}")
"""


def bench_kernels(repeats):
    print(f"== kernel throughput ({repeats} evaluations each) ==")
    backends = available_backends()
    for label, (text, order, n_seeds) in KERNELS.items():
        prog = compile_program([parse(text)], order, n_seeds)
        vals = np.linspace(0.1, 0.9, len(order))
        times = {}
        for name, fn in backends.items():
            fn(prog, vals)  # warm up
            start = time.perf_counter()
            for _ in range(repeats):
                fn(prog, vals)
            times[name] = time.perf_counter() - start
        line = f"{label:28s}"
        for name in sorted(times):
            per = times[name] / repeats * 1e6
            line += f"  {name}: {per:9.2f} us/eval"
        if len(times) == 2:
            line += f"  speedup: {times['pure'] / times['compiled']:6.1f}x"
        print(line)


def bench_trajectory():
    print("== rigid-body trajectory, 10000 RK4 steps (subprocess per backend) ==")
    results = {}
    for backend in ("c", "py"):
        env = dict(os.environ, ALGMECH_BACKEND=backend)
        proc = subprocess.run([sys.executable, "-c", TRAJECTORY_SNIPPET],
                              env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"  backend {backend}: unavailable ({proc.stderr.strip()[:80]})")
            continue
        name, elapsed = proc.stdout.split()
        results[name] = float(elapsed)
        print(f"  {name:9s}: {float(elapsed):7.3f} s")
    if len(results) == 2:
        print(f"  speedup  : {results['pure'] / results['compiled']:.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20000)
    args = ap.parse_args()
    names = sorted(available_backends())
    print(f"available backends: {', '.join(names)}")
    bench_kernels(args.repeats)
    bench_trajectory()


if __name__ == "__main__":
    main()
