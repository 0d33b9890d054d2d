"""Bilinear (Q1) Galerkin discretization of the Robin form on a truncated strip.

On ``(-L, L) x (0, eps)`` the form is

    int |grad u|^2  +  int alpha(x) (u(x, eps)^2 - u(x, 0)^2) dx,

which gives a symmetric pencil ``(K, M)``. The tensor grid lets every
volume term be written as a Kronecker product of 1D matrices; the two
edge terms share one alpha-weighted 1D boundary mass matrix. Nodes are
numbered y-fastest, ``index = i*(ny + 1) + j``.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
from scipy import sparse
from scipy.io import mmwrite

from . import profiles as prof
from .transversal import TransversalParams, transversal_eigenvalues


class Ends(str, Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class StripGrid:
    L: float
    eps: float
    nx: int
    ny: int
    ends: Ends = Ends.NEUMANN

    def __post_init__(self):
        if not (self.L > 0 and self.eps > 0):
            raise ValueError("L and eps must be positive")
        if self.nx < 4 or self.ny < 4:
            raise ValueError("nx and ny must be at least 4")
        object.__setattr__(self, "ends", Ends(self.ends))

    @property
    def hx(self):
        return 2.0 * self.L / self.nx

    @property
    def hy(self):
        return self.eps / self.ny

    @property
    def x(self):
        return -self.L + self.hx * np.arange(self.nx + 1)

    @property
    def y(self):
        return self.hy * np.arange(self.ny + 1)

    @property
    def columns(self):
        """Indices ``i`` of the node columns carrying unknowns."""
        if self.ends is Ends.DIRICHLET:
            return np.arange(1, self.nx)
        return np.arange(self.nx + 1)

    @property
    def shape(self):
        """``(columns, rows)`` of the unknown field."""
        return len(self.columns), self.ny + 1

    @property
    def size(self):
        c, r = self.shape
        return c * r

    @property
    def bandwidth(self):
        return self.ny + 2

    def field(self, v):
        """Reshape an unknown vector into a ``(columns, ny + 1)`` array."""
        return np.asarray(v).reshape(self.shape)

    def sample(self, fn):
        """Nodal interpolant of ``fn(X, Y)`` on the unknown nodes."""
        X, Y = np.meshgrid(self.x[self.columns], self.y, indexing="ij")
        return np.asarray(fn(X, Y), dtype=float).ravel()


@dataclass(frozen=True)
class SymmetricOperatorPencil:
    K: sparse.csr_matrix
    M: sparse.csr_matrix
    grid: StripGrid
    alpha_sup: float
    bandwidth: int
    lumped: bool = False
    profile: prof.CouplingProfile = field(default=None, repr=False)

    @property
    def size(self):
        return self.K.shape[0]


# -- 1D building blocks -------------------------------------------------------

_G3 = np.polynomial.legendre.leggauss(3)


def _tridiag(n, diag, off):
    return sparse.diags([off, diag, off], [-1, 0, 1], shape=(n, n), format="csr")


def stiffness_1d(n, h):
    d = np.full(n + 1, 2.0 / h)
    d[0] = d[-1] = 1.0 / h
    return _tridiag(n + 1, d, np.full(n, -1.0 / h))


def mass_1d(n, h, lumped=False):
    if lumped:
        d = np.full(n + 1, h)
        d[0] = d[-1] = h / 2.0
        return sparse.diags(d, format="csr")
    d = np.full(n + 1, 4.0 * h / 6.0)
    d[0] = d[-1] = 2.0 * h / 6.0
    return _tridiag(n + 1, d, np.full(n, h / 6.0))


def weighted_mass_1d(nodes, weight):
    """``int weight(x) N_a N_b dx`` for hat functions, 3-point Gauss per cell."""
    t, w = _G3
    a, b = nodes[:-1], nodes[1:]
    h = b - a
    xq = 0.5 * (a + b)[:, None] + 0.5 * h[:, None] * t
    wq = 0.5 * h[:, None] * w * np.asarray(weight(xq), dtype=float)
    n0 = 0.5 * (1.0 - t)
    n1 = 0.5 * (1.0 + t)
    b00 = wq @ (n0 * n0)
    b11 = wq @ (n1 * n1)
    b01 = wq @ (n0 * n1)
    n = len(nodes)
    diag = np.zeros(n)
    diag[:-1] += b00
    diag[1:] += b11
    return sparse.diags([b01, diag, b01], [-1, 0, 1], shape=(n, n), format="csr")


def _edge_selector(ny, j):
    return sparse.csr_matrix(([1.0], ([j], [j])), shape=(ny + 1, ny + 1))


# -- operations -------------------------------------------------------------

def assemble(grid, profile, lumped=False):
    """Assemble the pencil ``(K, M)`` for ``profile`` on ``grid``.

    ``lumped`` switches to a diagonal mass matrix; the Galerkin lower
    bound is only guaranteed for the consistent mass.
    """
    Kx = stiffness_1d(grid.nx, grid.hx)
    Mx = mass_1d(grid.nx, grid.hx, lumped)
    Ky = stiffness_1d(grid.ny, grid.hy)
    My = mass_1d(grid.ny, grid.hy, lumped)
    Bx = weighted_mass_1d(grid.x, lambda x: prof.evaluate(profile, x))
    top = _edge_selector(grid.ny, grid.ny)
    bottom = _edge_selector(grid.ny, 0)

    K = (sparse.kron(Kx, My) + sparse.kron(Mx, Ky)
         + sparse.kron(Bx, top) - sparse.kron(Bx, bottom))
    M = sparse.kron(Mx, My)
    K, M = K.tocsr(), M.tocsr()
    if grid.ends is Ends.DIRICHLET:
        keep = (grid.columns[:, None] * (grid.ny + 1) + np.arange(grid.ny + 1)).ravel()
        K = K[keep][:, keep]
        M = M[keep][:, keep]
    K.sort_indices()
    M.sort_indices()
    return SymmetricOperatorPencil(K=K, M=M, grid=grid, alpha_sup=prof.sup_norm(profile),
                                   bandwidth=grid.bandwidth, lumped=lumped, profile=profile)


def separable_reference(grid, alpha0, j_max, k_max):
    """Exact eigenvalues ``mu_j + (k*pi/(2L))**2`` of the truncated constant-coupling strip.

    ``mu_j`` are the transversal levels for ``alpha0`` (Neumann levels when
    ``alpha0 == 0``); ``k`` starts at 0 for Neumann ends and at 1 for
    Dirichlet ends. Returns the sorted ``(j_max+1)*(k_max+1)`` sums.
    """
    if alpha0 == 0:
        mu = [(j * math.pi / grid.eps) ** 2 for j in range(j_max + 1)]
    else:
        mu = transversal_eigenvalues(TransversalParams(alpha0, grid.eps), j_max)
    k0 = 0 if grid.ends is Ends.NEUMANN else 1
    kap = [(k * math.pi / (2.0 * grid.L)) ** 2 for k in range(k0, k0 + k_max + 1)]
    return sorted(m + q for m in mu for q in kap)


def apply(pencil, which, v):
    """``K @ v`` or ``M @ v``."""
    A = {"K": pencil.K, "M": pencil.M}[which]
    v = np.asarray(v, dtype=float)
    if v.shape[0] != A.shape[1]:
        raise ValueError(f"vector length {v.shape[0]} does not match pencil size {A.shape[1]}")
    return A @ v


def rayleigh_quotient(pencil, v):
    v = np.asarray(v, dtype=float)
    return float(v @ (pencil.K @ v)) / float(v @ (pencil.M @ v))


def reflect_y(grid, v):
    """Mirror a nodal vector through ``y = eps/2``."""
    return grid.field(v)[:, ::-1].ravel()


def reflect_x(grid, v):
    return grid.field(v)[::-1, :].ravel()


def to_banded(A, bandwidth):
    """Lower symmetric band storage ``ab[d, j] = A[j + d, j]`` for LAPACK."""
    A = sparse.tril(A, format="coo")
    n = A.shape[0]
    ab = np.zeros((bandwidth + 1, n))
    d = A.row - A.col
    if np.any(d > bandwidth):
        raise ValueError("matrix exceeds declared bandwidth")
    ab[d, A.col] = A.data
    return ab


def dump_matrix_market(pencil, prefix):
    """Write ``<prefix>_K.mtx`` and ``<prefix>_M.mtx``; returns the two paths."""
    paths = []
    for name, A in (("K", pencil.K), ("M", pencil.M)):
        path = f"{prefix}_{name}.mtx"
        mmwrite(path, A, comment=f"robin strip {name}: L={pencil.grid.L} eps={pencil.grid.eps} "
                f"nx={pencil.grid.nx} ny={pencil.grid.ny} ends={pencil.grid.ends.value}",
                field="real", symmetry="symmetric")
        paths.append(path)
    return paths
