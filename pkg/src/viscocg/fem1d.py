"""Piecewise-linear finite elements on an interval for A = -d^2/dx^2.

Dirichlet nodes are eliminated: every vector handled by ``FemSystem`` lives on
the free degrees of freedom only; ``FemSystem.full`` re-inserts the zeros.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import ConfigError

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

# 5-point Gauss-Legendre on [0, 1]
_gx, _gw = np.polynomial.legendre.leggauss(5)
GAUSS_X = 0.5 * (_gx + 1.0)
GAUSS_W = 0.5 * _gw


@dataclass(frozen=True)
class Mesh1D:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ConfigError("mesh needs at least 2 elements")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise ConfigError("mesh nodes must be finite and strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, length: float, n_elems: int) -> "Mesh1D":
        return cls(np.linspace(0.0, length, n_elems + 1))

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h(self) -> float:
        return float(self.sizes.max())

    @property
    def n_elems(self) -> int:
        return self.nodes.size - 1

    @property
    def length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])

    def quad_points(self):
        """Physical Gauss points (n_elems, 5) and matching weights."""
        x0 = self.nodes[:-1, None]
        h = self.sizes[:, None]
        return x0 + h * GAUSS_X[None, :], h * GAUSS_W[None, :]


@dataclass(frozen=True)
class BCSpec:
    """Boundary conditions; Neumann sides carry a constant traction g."""

    left: str = DIRICHLET
    right: str = DIRICHLET
    g_left: float = 0.0
    g_right: float = 0.0

    def __post_init__(self):
        for side in (self.left, self.right):
            if side not in (DIRICHLET, NEUMANN):
                raise ConfigError(f"unknown boundary condition {side!r}")
        if self.left == NEUMANN and self.right == NEUMANN:
            raise ConfigError("at least one boundary must be Dirichlet")


@dataclass(frozen=True, eq=False)
class FemSystem:
    mesh: Mesh1D
    bc: BCSpec
    free: np.ndarray
    M: sps.csr_matrix
    S: sps.csr_matrix
    # banded upper storage for scipy.linalg.cholesky_banded
    M_band: np.ndarray = field(repr=False)
    S_band: np.ndarray = field(repr=False)

    @property
    def n_free(self) -> int:
        return self.free.size

    def full(self, v: np.ndarray) -> np.ndarray:
        """Nodal values on all mesh nodes (zeros on Dirichlet nodes)."""
        out = np.zeros(self.mesh.nodes.size)
        out[self.free] = v
        return out

    def index_of_node(self, node: int) -> int:
        """Position of mesh node ``node`` among the free DOFs."""
        hits = np.nonzero(self.free == node)[0]
        if hits.size == 0:
            raise ValueError(f"node {node} is not a free DOF")
        return int(hits[0])

    def evaluate(self, v: np.ndarray, x) -> np.ndarray:
        """Point values of the P1 function with free coefficients ``v``."""
        return np.interp(np.asarray(x, dtype=float), self.mesh.nodes, self.full(v))


def assemble(mesh: Mesh1D, bc: BCSpec) -> FemSystem:
    """Mass and stiffness matrices of P1 hats, restricted to free nodes."""
    n = mesh.nodes.size
    h = mesh.sizes
    m_diag = np.zeros(n)
    m_diag[:-1] += h / 3.0
    m_diag[1:] += h / 3.0
    m_off = h / 6.0
    s_diag = np.zeros(n)
    s_diag[:-1] += 1.0 / h
    s_diag[1:] += 1.0 / h
    s_off = -1.0 / h

    mask = np.ones(n, dtype=bool)
    if bc.left == DIRICHLET:
        mask[0] = False
    if bc.right == DIRICHLET:
        mask[-1] = False
    free = np.nonzero(mask)[0]

    # free nodes are contiguous, so the reduced matrices stay tridiagonal
    lo, hi = free[0], free[-1]
    md, sd = m_diag[lo:hi + 1], s_diag[lo:hi + 1]
    mo, so = m_off[lo:hi], s_off[lo:hi]
    M = sps.diags([mo, md, mo], [-1, 0, 1], format="csr")
    S = sps.diags([so, sd, so], [-1, 0, 1], format="csr")
    M_band = np.vstack([np.concatenate([[0.0], mo]), md])
    S_band = np.vstack([np.concatenate([[0.0], so]), sd])
    free.setflags(write=False)
    return FemSystem(mesh, bc, free, M, S, M_band, S_band)


def _element_loads(mesh: Mesh1D, fvals: np.ndarray, wq: np.ndarray) -> np.ndarray:
    # fvals: (n_elems, 5) samples at Gauss points -> nodal load vector (all nodes)
    left = np.sum(fvals * wq * (1.0 - GAUSS_X), axis=1)
    right = np.sum(fvals * wq * GAUSS_X, axis=1)
    b = np.zeros(mesh.nodes.size)
    b[:-1] += left
    b[1:] += right
    return b


def l2_project(sys: FemSystem, f: Callable) -> np.ndarray:
    """Free coefficients c with (c, phi_i) = (f, phi_i) for all free hats."""
    xq, wq = sys.mesh.quad_points()
    fvals = np.asarray(f(xq), dtype=float) * np.ones_like(xq)
    if not np.all(np.isfinite(fvals)):
        raise ValueError("nonfinite values while projecting")
    b = _element_loads(sys.mesh, fvals, wq)[sys.free]
    return spla.spsolve(sys.M.tocsc(), b)


def ritz_project(sys: FemSystem, f: Callable) -> np.ndarray:
    """Ritz projection for -u''. In 1D, a(v, phi_i) only sees nodal values of v."""
    nodes = sys.mesh.nodes
    vals = np.asarray(f(nodes), dtype=float) * np.ones_like(nodes)
    h = sys.mesh.sizes
    slope = np.diff(vals) / h
    rhs = np.zeros(nodes.size)
    rhs[:-1] -= slope
    rhs[1:] += slope
    # Dirichlet data of f are assumed homogeneous; the solve keeps the free block
    return spla.spsolve(sys.S.tocsc(), rhs[sys.free])


def load_vector(sys: FemSystem, f: Callable | None, t0: float, t1: float) -> np.ndarray:
    """B_i = int_{t0}^{t1} (f, phi_i) dt plus constant Neumann tractions.

    Time integral: 2-point Gauss; space: 5-point Gauss per element.
    """
    k = t1 - t0
    b = np.zeros(sys.mesh.nodes.size)
    if f is not None:
        xq, wq = sys.mesh.quad_points()
        for tau in (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)):
            fvals = np.asarray(f(xq, t0 + tau * k), dtype=float) * np.ones_like(xq)
            b += 0.5 * k * _element_loads(sys.mesh, fvals, wq)
    if sys.bc.left == NEUMANN:
        b[0] += k * sys.bc.g_left
    if sys.bc.right == NEUMANN:
        b[-1] += k * sys.bc.g_right
    if not np.all(np.isfinite(b)):
        raise ValueError("nonfinite load vector")
    return b[sys.free]


def norms(sys: FemSystem, v: np.ndarray) -> dict:
    """Discrete L2 norm sqrt(v^T M v) and energy norm sqrt(v^T S v)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (sys.n_free,):
        raise ValueError(f"expected {sys.n_free} coefficients, got shape {v.shape}")
    return {"l2": float(np.sqrt(v @ (sys.M @ v))), "h1": float(np.sqrt(v @ (sys.S @ v)))}


def error_norms(sys: FemSystem, v: np.ndarray, exact: Callable,
                exact_dx: Callable | None = None) -> dict:
    """L2 and energy-norm distance between a P1 function and an exact function."""
    v = np.asarray(v, dtype=float)
    if v.shape != (sys.n_free,):
        raise ValueError(f"expected {sys.n_free} coefficients, got shape {v.shape}")
    xq, wq = sys.mesh.quad_points()
    vals = sys.full(v)
    vh = vals[:-1, None] * (1.0 - GAUSS_X) + vals[1:, None] * GAUSS_X
    diff = vh - np.asarray(exact(xq), dtype=float)
    out = {"l2": float(np.sqrt(np.sum(wq * diff**2)))}
    if exact_dx is not None:
        dvh = (np.diff(vals) / sys.mesh.sizes)[:, None]
        ddiff = dvh - np.asarray(exact_dx(xq), dtype=float)
        out["h1"] = float(np.sqrt(np.sum(wq * ddiff**2)))
    return out


def p1_difference_norms(coarse: FemSystem, vc: np.ndarray,
                        fine: FemSystem, vf: np.ndarray) -> dict:
    """L2 and energy-norm distance between P1 functions on nested meshes."""
    xq, wq = fine.mesh.quad_points()
    fvals = fine.full(vf)
    vfine = fvals[:-1, None] * (1.0 - GAUSS_X) + fvals[1:, None] * GAUSS_X
    vcoarse = coarse.evaluate(vc, xq)
    dfine = (np.diff(fvals) / fine.mesh.sizes)[:, None]
    cvals = coarse.full(vc)
    cslope = np.diff(cvals) / coarse.mesh.sizes
    mid = 0.5 * (fine.mesh.nodes[:-1] + fine.mesh.nodes[1:])
    elem = np.clip(np.searchsorted(coarse.mesh.nodes, mid) - 1, 0, coarse.mesh.n_elems - 1)
    dcoarse = cslope[elem][:, None]
    return {
        "l2": float(np.sqrt(np.sum(wq * (vfine - vcoarse) ** 2))),
        "h1": float(np.sqrt(np.sum(wq * (dfine - dcoarse) ** 2))),
    }
