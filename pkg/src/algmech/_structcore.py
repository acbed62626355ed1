"""Shared evaluation kernel for algebroid and affgebroid structures.

Both structure kinds reduce to one table of coefficient functions with
optional affine blocks (rho0, cm0, ck0, cm).  The dynamics formulas are
written once over that table; for a structure produced by
``embed_trivial`` the affine blocks are all literal zeros, get elided at
kernel-build time, and the arithmetic collapses to exactly the algebroid
path.  That is what makes algebroid trajectories and their trivial
affgebroid embeddings agree bit for bit.

Blocks whose every entry is the literal constant 0 are represented as
``None`` and skipped; sums always run in ascending index order so
results are deterministic.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import backend
from .expr import is_zero, variables
from .tape import compile_program


def x_names(n):
    return tuple(f"x{i + 1}" for i in range(n))


def y_names(d):
    return tuple(f"y{i + 1}" for i in range(d))


def xi_names(d):
    return tuple(f"xi{i + 1}" for i in range(d))


def _flatten(block):
    """Row-major flattening of arbitrarily nested expression tuples."""
    if block is None:
        return []
    out = []

    def rec(b):
        if isinstance(b, tuple):
            for sub in b:
                rec(sub)
        else:
            out.append(b)
    rec(block)
    return out


def _all_zero(block) -> bool:
    return all(is_zero(e) for e in _flatten(block))


class StructureKernel:
    """Compiled structure-function tables plus the contraction loops."""

    def __init__(self, n, d, rho, sigma, ck, rho0=None, cm0=None, ck0=None,
                 cm=None):
        self.n = n
        self.d = d
        blocks = {
            "rho": rho,
            "sigma": sigma,
            "ck": None if ck is None or _all_zero(ck) else ck,
            "rho0": None if rho0 is None or _all_zero(rho0) else rho0,
            "cm0": None if cm0 is None or _all_zero(cm0) else cm0,
            "ck0": None if ck0 is None or _all_zero(ck0) else ck0,
            "cm": None if cm is None or _all_zero(cm) else cm,
        }
        exprs = []
        self._base = {}
        for name in ("rho", "sigma", "ck", "rho0", "cm0", "ck0", "cm"):
            block = blocks[name]
            if block is None:
                self._base[name] = None
                continue
            self._base[name] = len(exprs)
            exprs.extend(_flatten(block))
        self._program = compile_program(exprs, x_names(n), 0)
        self._const_table = None
        if all(len(variables(e)) == 0 for e in exprs):
            self._const_table = self.tables(np.zeros(n))

    # -- table access -----------------------------------------------------

    def tables(self, x):
        """Structure-function values at the base point ``x``."""
        if self._const_table is not None:
            return self._const_table
        out = backend.run_program(self._program, np.asarray(x, dtype=np.float64))
        return out[:, 0].tolist()

    # offsets into the flat table; shapes are fixed per block
    def rho(self, tab, b, k):
        return tab[self._base["rho"] + b * self.d + k]

    def sigma(self, tab, a, j):
        return tab[self._base["sigma"] + a * self.d + j]

    def ck(self, tab, k, i, j):
        d = self.d
        return tab[self._base["ck"] + (k * d + i) * d + j]

    def rho0(self, tab, b):
        return tab[self._base["rho0"] + b]

    def cm0(self, tab, j):
        return tab[self._base["cm0"] + j]

    def ck0(self, tab, k, j):
        return tab[self._base["ck0"] + k * self.d + j]

    def cm(self, tab, i, j):
        return tab[self._base["cm"] + i * self.d + j]

    def has(self, name) -> bool:
        return self._base[name] is not None

    # -- dynamics contractions ---------------------------------------------

    def xdot(self, tab, y):
        """Anchor applied to (x, y): rho0 + rho . y, componentwise."""
        n, d = self.n, self.d
        has_rho0 = self.has("rho0")
        out = [0.0] * n
        for b in range(n):
            s = self.rho0(tab, b) if has_rho0 else 0.0
            for k in range(d):
                s += self.rho(tab, b, k) * y[k]
            out[b] = s
        return out

    def momdot(self, tab, y, dLdy, dLdx):
        """Right-hand side of the momentum equation.

        momdot_j = cm0_j + sum_i cm_ij y^i
                 + sum_k dLdy_k (ck0_kj + sum_i ck_kij y^i)
                 + sum_a sigma_aj dLdx_a
        with absent blocks skipped (the algebroid case keeps only the
        ck and sigma terms).
        """
        n, d = self.n, self.d
        has_cm0 = self.has("cm0")
        has_cm = self.has("cm")
        has_ck0 = self.has("ck0")
        has_ck = self.has("ck")
        out = [0.0] * d
        for j in range(d):
            s = self.cm0(tab, j) if has_cm0 else 0.0
            if has_cm:
                for i in range(d):
                    s += self.cm(tab, i, j) * y[i]
            if has_ck0 or has_ck:
                for k in range(d):
                    inner = self.ck0(tab, k, j) if has_ck0 else 0.0
                    if has_ck:
                        for i in range(d):
                            inner += self.ck(tab, k, i, j) * y[i]
                    s += dLdy[k] * inner
            for a in range(n):
                s += self.sigma(tab, a, j) * dLdx[a]
            out[j] = s
        return out

    def ham_xdot(self, tab, dhdxi):
        """rho0 + rho . (dH/dxi), componentwise."""
        n, d = self.n, self.d
        has_rho0 = self.has("rho0")
        out = [0.0] * n
        for b in range(n):
            s = self.rho0(tab, b) if has_rho0 else 0.0
            for i in range(d):
                s += self.rho(tab, b, i) * dhdxi[i]
            out[b] = s
        return out

    def ham_xidot(self, tab, xi, dhdxi, dhdx):
        """Hamiltonian momentum equation.

        xidot_j = cm0_j + sum_k ck0_kj xi_k
                + sum_i dhdxi_i (cm_ij + sum_k ck_kij xi_k)
                - sum_b sigma_bj dhdx_b
        """
        n, d = self.n, self.d
        has_cm0 = self.has("cm0")
        has_cm = self.has("cm")
        has_ck0 = self.has("ck0")
        has_ck = self.has("ck")
        out = [0.0] * d
        for j in range(d):
            s = self.cm0(tab, j) if has_cm0 else 0.0
            if has_ck0:
                for k in range(d):
                    s += self.ck0(tab, k, j) * xi[k]
            if has_cm or has_ck:
                for i in range(d):
                    inner = self.cm(tab, i, j) if has_cm else 0.0
                    if has_ck:
                        for k in range(d):
                            inner += self.ck(tab, k, i, j) * xi[k]
                    s += dhdxi[i] * inner
            for b in range(n):
                s -= self.sigma(tab, b, j) * dhdx[b]
            out[j] = s
        return out


@lru_cache(maxsize=256)
def kernel_for(structure) -> StructureKernel:
    """Kernel for an (immutable) structure, cached per structure value."""
    from .algebroid import AlgebroidStructure
    from .affgebroid import AffgebroidStructure

    if isinstance(structure, AlgebroidStructure):
        return StructureKernel(structure.n, structure.m, structure.rho,
                               structure.sigma, structure.c)
    if isinstance(structure, AffgebroidStructure):
        return StructureKernel(structure.n, structure.m - 1, structure.rho,
                               structure.sigma, structure.ck,
                               rho0=structure.rho0, cm0=structure.cm0,
                               ck0=structure.ck0, cm=structure.cm)
    raise TypeError(f"not a structure: {structure!r}")
