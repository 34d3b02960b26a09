"""P1 finite element assembly on fine triangulations.

Stiffness and mass entries are exact per triangle (polynomial integrands);
the load uses the three edge-midpoint quadrature, which is exact for
quadratics.  Matrices are assembled COO-style and returned as CSR over the
full node set; `apply_dirichlet` reduces them to the free (interior) nodes.

Parameters
----------
Per-triangle `weight` arrays multiply the integrand of the corresponding
form; they must be strictly positive.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import FineMesh, triangle_areas

__all__ = [
    "assemble_stiffness",
    "assemble_mass",
    "assemble_load",
    "apply_dirichlet",
    "expand_to_full",
    "solve_elliptic_w0",
]


def _gradients(mesh: FineMesh, triangle_ids: Optional[np.ndarray]):
    tris = mesh.triangles if triangle_ids is None else mesh.triangles[triangle_ids]
    p = mesh.nodes[tris]  # (n_t, 3, 2)
    # b_i = y_j - y_k, c_i = x_k - x_j for (i, j, k) cyclic; grad lambda_i = (b_i, c_i)/(2A)
    x = p[:, :, 0]
    y = p[:, :, 1]
    b = y[:, [1, 2, 0]] - y[:, [2, 0, 1]]
    c = x[:, [2, 0, 1]] - x[:, [1, 2, 0]]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    return tris, b, c, area


def _check_weight(weight, n: int) -> np.ndarray:
    w = np.ones(n) if weight is None else np.asarray(weight, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weight must have one value per triangle ({n}), got shape {w.shape}")
    if np.any(w <= 0.0):
        raise ValueError("weights must be strictly positive")
    return w


def assemble_stiffness(
    mesh: FineMesh, weight=None, triangle_ids: Optional[np.ndarray] = None
) -> sp.csr_matrix:
    """Weighted stiffness matrix over the full node set.

    Restricting `triangle_ids` integrates only over that subset; rows and
    columns of untouched nodes stay empty, so patch matrices can be sliced
    out afterwards and disjoint restrictions sum to the global matrix.
    """
    tris, b, c, area = _gradients(mesh, triangle_ids)
    w = _check_weight(weight, tris.shape[0])
    coef = w / (4.0 * area)  # K_ij = w (b_i b_j + c_i c_j) / (4A)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    kb = b[:, :, None] * b[:, None, :]
    kc = c[:, :, None] * c[:, None, :]
    vals = (coef[:, None, None] * (kb + kc)).ravel()
    A = sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return A.tocsr()


def assemble_mass(
    mesh: FineMesh, weight=None, triangle_ids: Optional[np.ndarray] = None
) -> sp.csr_matrix:
    """Consistent mass matrix; local block is area/12 * (1 + delta_ij)."""
    tris = mesh.triangles if triangle_ids is None else mesh.triangles[triangle_ids]
    area = triangle_areas(mesh) if triangle_ids is None else triangle_areas(mesh)[triangle_ids]
    w = _check_weight(weight, tris.shape[0])
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    vals = ((w * area)[:, None, None] * local).ravel()
    M = sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return M.tocsr()


def assemble_load(mesh: FineMesh, h: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Load vector with the 3-point edge-midpoint rule (degree-2 exact).

    The hat function of vertex i equals 1/2 on the midpoints of its two
    adjacent edges and 0 on the opposite one.
    """
    tris = mesh.triangles
    p = mesh.nodes[tris]
    area = triangle_areas(mesh)
    mids = 0.5 * (p[:, [0, 1, 2]] + p[:, [1, 2, 0]])  # midpoint k is on edge (k, k+1)
    hv = h(mids.reshape(-1, 2)).reshape(-1, 3)
    # Vertex 0 touches edges (0,1) and (2,0) -> midpoints 0 and 2, etc.
    contrib = 0.5 * (hv + hv[:, [2, 0, 1]])
    vals = (area[:, None] / 3.0) * contrib
    load = np.zeros(mesh.n_nodes)
    np.add.at(load, tris.ravel(), vals.ravel())
    return load


def apply_dirichlet(A: sp.csr_matrix, rhs: np.ndarray, boundary_nodes: np.ndarray):
    """Eliminate homogeneous Dirichlet rows/columns.

    Returns the reduced operator, reduced right-hand side, and the array of
    free node ids (reduced index k corresponds to global node free[k]).
    """
    n = A.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[boundary_nodes] = False
    free = np.nonzero(mask)[0]
    if free.size == 0:
        raise ValueError("no interior nodes left after boundary elimination")
    A_red = A[free][:, free].tocsr()
    rhs_red = np.asarray(rhs, dtype=float)[free]
    return A_red, rhs_red, free


def expand_to_full(n_nodes: int, free: np.ndarray, u_free: np.ndarray) -> np.ndarray:
    """Zero-pad an interior vector back to the full node set."""
    u = np.zeros(n_nodes)
    u[free] = u_free
    return u


def solve_elliptic_w0(mesh: FineMesh, perm_values: np.ndarray, h) -> np.ndarray:
    """Solve -div(kappa_q grad w0) = h with zero boundary values.

    Used for initial states and coefficient averaging.  Direct sparse solve
    with iterative refinement; high-contrast coefficients leave a forward
    error the refinement steps remove.  The relative algebraic residual is
    verified below 1e-10.
    """
    A = assemble_stiffness(mesh, weight=perm_values)
    load = assemble_load(mesh, h)
    A_red, rhs, free = apply_dirichlet(A, load, mesh.boundary_nodes)
    lu = spla.splu(A_red.tocsc())
    u = lu.solve(rhs)
    # Normwise backward error: high-contrast coefficients put the attainable
    # residual floor at eps*|A||u|, far above eps*|rhs|.
    norm_a = np.abs(A_red).sum(axis=1).max()
    scale = np.linalg.norm(rhs)
    res = np.linalg.norm(A_red @ u - rhs)
    for _ in range(3):
        if scale == 0 or res <= 1e-13 * (norm_a * np.linalg.norm(u) + scale):
            break
        u += lu.solve(rhs - A_red @ u)
        res = np.linalg.norm(A_red @ u - rhs)
    backward = res / (norm_a * np.linalg.norm(u) + scale) if scale > 0 else 0.0
    if backward > 1e-10:
        raise RuntimeError(f"elliptic solve backward error {backward:.3e} exceeds 1e-10")
    return expand_to_full(mesh.n_nodes, free, u)
