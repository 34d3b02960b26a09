"""Spectral multiscale coarse spaces on vertex patches.

For every coarse vertex patch the construction is: harmonic-extension
snapshots of all patch-boundary delta data, a small generalized eigenvalue
problem between the patch stiffness and a scaled patch mass form, and
partition-of-unity localization of the selected eigenfunctions.  Stacking the
localized functions of all patches gives the coarse-space matrix with one
column per kept eigenfunction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import assemble_mass, assemble_stiffness
from .grid import CoarseGrid, FineMesh, Region
from .model import Nonlinearity, PermeabilityField

logger = logging.getLogger(__name__)

__all__ = [
    "RegionSnapshots",
    "RegionEigenbasis",
    "MultiscaleSpace",
    "partition_of_unity",
    "pou_gradient_factor",
    "region_average_factor",
    "build_snapshots",
    "offline_eigenproblem",
    "assemble_multiscale_basis",
    "build_multiscale_space",
]

SNAPSHOT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class RegionSnapshots:
    """Local snapshot family of one patch.

    One column per patch-boundary fine node that is not on the global
    Dirichlet boundary; each column is the local harmonic extension of the
    unit datum at its node (zero on the rest of the patch boundary).  When a
    source is supplied, one trailing column holds the interior particular
    solution driven by it; harmonic functions alone cannot represent
    source-driven profiles, which otherwise caps the space at an O(H) error
    no matter how many modes are kept.
    """

    region: int
    node_ids: np.ndarray        # patch fine nodes (sorted), local row order
    snapshot_nodes: np.ndarray  # global ids of the delta nodes, column order
    matrix: np.ndarray          # (n_local, n_snapshots [+ 1])
    rank: int


@dataclass(frozen=True)
class RegionEigenbasis:
    """Selected spectral modes of one patch, as fine-node functions."""

    region: int
    node_ids: np.ndarray
    eigenvalues: np.ndarray   # ascending, length m
    coefficients: np.ndarray  # (n_snapshots, m) snapshot coordinates
    functions: np.ndarray     # (n_local, m) fine-node values


@dataclass(frozen=True)
class MultiscaleSpace:
    """Global coarse space: localized spectral modes stacked column-wise."""

    phi: sp.csr_matrix            # (n_nodes, n_columns), Dirichlet rows zero
    column_region: np.ndarray     # owning patch per column
    column_rank: np.ndarray       # eigenvalue rank within the patch
    column_eigenvalue: np.ndarray
    m_off: int
    n_dropped: int                # all-zero columns removed during assembly

    @property
    def n_columns(self) -> int:
        return self.phi.shape[1]


def partition_of_unity(mesh: FineMesh, grid: CoarseGrid) -> sp.csr_matrix:
    """Bilinear coarse hat functions sampled at fine nodes.

    Column i holds the hat of coarse vertex i; the columns sum to one at
    every fine node.
    """
    x = mesh.nodes[:, 0] * grid.nx
    y = mesh.nodes[:, 1] * grid.ny
    cols = []
    rows = []
    vals = []
    for r in grid.regions:
        hat = np.maximum(0.0, 1.0 - np.abs(x - r.cx)) * np.maximum(0.0, 1.0 - np.abs(y - r.cy))
        nz = np.nonzero(hat > 0.0)[0]
        rows.append(nz)
        cols.append(np.full(nz.size, r.coarse_node))
        vals.append(hat[nz])
    chi = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_nodes, grid.n_regions),
    )
    return chi.tocsr()


def pou_gradient_factor(mesh: FineMesh, grid: CoarseGrid, chi: sp.csr_matrix) -> np.ndarray:
    """Per-triangle sum of squared hat gradients, sum_i |grad chi_i|^2.

    The hats are treated as their P1 interpolants, so gradients are constant
    per fine triangle.
    """
    p = mesh.nodes[mesh.triangles]
    x = p[:, :, 0]
    y = p[:, :, 1]
    gb = y[:, [1, 2, 0]] - y[:, [2, 0, 1]]
    gc = x[:, [2, 0, 1]] - x[:, [1, 2, 0]]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    factor = np.zeros(mesh.n_triangles)
    chi_csc = chi.tocsc()
    chi_dense_col = np.zeros(mesh.n_nodes)
    for r in grid.regions:
        lo, hi = chi_csc.indptr[r.coarse_node], chi_csc.indptr[r.coarse_node + 1]
        chi_dense_col[:] = 0.0
        chi_dense_col[chi_csc.indices[lo:hi]] = chi_csc.data[lo:hi]
        tv = chi_dense_col[mesh.triangles[r.triangle_ids]]  # (n_t, 3)
        gx = np.sum(tv * gb[r.triangle_ids], axis=1) / area2[r.triangle_ids]
        gy = np.sum(tv * gc[r.triangle_ids], axis=1) / area2[r.triangle_ids]
        factor[r.triangle_ids] += gx**2 + gy**2
    return factor


def region_average_factor(
    region: Region,
    non: Nonlinearity,
    mu_values: Sequence[float],
    u_ref: np.ndarray,
) -> float:
    """State factor averaged over the patch and the offline parameters.

    The patch-mean of the reference state (the auxiliary linear solution on
    the first pass) is pushed through b and averaged across mu.
    """
    u_bar = float(np.mean(u_ref[region.node_ids]))
    return float(np.mean([non.b(u_bar, mu) for mu in mu_values]))


def build_snapshots(
    mesh: FineMesh,
    region: Region,
    kbar_tri: np.ndarray,
    dirichlet_nodes: np.ndarray,
    source: Optional[np.ndarray] = None,
) -> RegionSnapshots:
    """Harmonic extensions of patch-boundary deltas under the averaged field.

    kbar_tri holds the averaged coefficient on the patch triangles (same
    order as region.triangle_ids).  Unit data on global-Dirichlet nodes would
    be overridden to zero, so those nodes carry no snapshot column.  source,
    if given, holds full-node forcing values; it adds one column solving the
    patch operator against that load with zero perimeter data.
    """
    loc = region.node_ids
    local_of = {g: i for i, g in enumerate(loc)}
    A = assemble_stiffness(mesh, weight=kbar_tri, triangle_ids=region.triangle_ids)
    A_loc = A[loc][:, loc].tocsr()

    perim = region.perimeter_nodes
    snapshot_nodes = np.setdiff1d(perim, dirichlet_nodes)
    inner = np.setdiff1d(loc, perim)
    perim_l = np.array([local_of[g] for g in perim], dtype=np.int64)
    snap_l = np.array([local_of[g] for g in snapshot_nodes], dtype=np.int64)
    inner_l = np.array([local_of[g] for g in inner], dtype=np.int64)

    n_loc = loc.size
    n_snap = snapshot_nodes.size
    mat = np.zeros((n_loc, n_snap))
    mat[snap_l, np.arange(n_snap)] = 1.0

    lu = None
    if inner_l.size:
        A_ii = A_loc[inner_l][:, inner_l].tocsc()
        A_ib = A_loc[inner_l][:, snap_l].toarray()
        try:
            lu = spla.splu(A_ii)
        except RuntimeError as exc:
            raise RuntimeError(f"singular local system on patch {region.coarse_node}") from exc
        mat[inner_l] = lu.solve(-A_ib)

    if source is not None and lu is not None:
        M = assemble_mass(mesh, triangle_ids=region.triangle_ids)
        load = np.asarray(M[loc] @ source).ravel()
        col = np.zeros(n_loc)
        col[inner_l] = lu.solve(load[inner_l])
        nrm = np.linalg.norm(col)
        if nrm > 0.0:
            mat = np.column_stack([mat, col / nrm])

    n_cols = mat.shape[1]
    sv = scipy.linalg.svdvals(mat) if n_cols else np.array([])
    rank = int(np.sum(sv > SNAPSHOT_RANK_TOL * sv[0])) if n_cols else 0
    if rank < n_cols:
        logger.warning(
            "patch %d snapshots rank-deficient: rank %d of %d", region.coarse_node, rank, n_cols
        )
    return RegionSnapshots(
        region=region.coarse_node,
        node_ids=loc,
        snapshot_nodes=snapshot_nodes,
        matrix=mat,
        rank=rank,
    )


def offline_eigenproblem(
    mesh: FineMesh,
    region: Region,
    snapshots: RegionSnapshots,
    kbar_tri: np.ndarray,
    ktilde_tri: np.ndarray,
    m_off: int,
) -> RegionEigenbasis:
    """Smallest spectral modes of the snapshot-restricted patch pencil.

    The pencil pairs the averaged-coefficient stiffness with the mass form
    weighted by the hat-gradient factor; eigenvectors come back orthonormal
    in the latter.  Requests beyond the snapshot count are clipped.
    """
    if m_off < 1:
        raise ValueError(f"m_off must be >= 1, got {m_off}")
    loc = snapshots.node_ids
    A = assemble_stiffness(mesh, weight=kbar_tri, triangle_ids=region.triangle_ids)
    S = assemble_mass(mesh, weight=ktilde_tri, triangle_ids=region.triangle_ids)
    A_loc = A[loc][:, loc].toarray()
    S_loc = S[loc][:, loc].toarray()

    snap = snapshots.matrix
    a_off = snap.T @ A_loc @ snap
    s_off = snap.T @ S_loc @ snap
    a_off = 0.5 * (a_off + a_off.T)
    s_off = 0.5 * (s_off + s_off.T)

    m = min(m_off, snap.shape[1])
    if m < m_off:
        logger.warning(
            "patch %d has only %d snapshots, clipping m_off from %d",
            region.coarse_node, snap.shape[1], m_off,
        )
    try:
        lam, vecs = scipy.linalg.eigh(a_off, s_off)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        shift = 1e-12 * np.trace(s_off)
        logger.warning("patch %d mass pencil singular, shifting diagonal by %.3e",
                       region.coarse_node, shift)
        lam, vecs = scipy.linalg.eigh(a_off, s_off + shift * np.eye(s_off.shape[0]))

    lam = lam[:m]
    vecs = vecs[:, :m]
    funcs = snap @ vecs
    flip = np.sign(funcs[np.argmax(np.abs(funcs), axis=0), np.arange(m)])
    flip[flip == 0.0] = 1.0
    return RegionEigenbasis(
        region=region.coarse_node,
        node_ids=loc,
        eigenvalues=lam,
        coefficients=vecs * flip,
        functions=funcs * flip,
    )


def assemble_multiscale_basis(
    mesh: FineMesh,
    grid: CoarseGrid,
    bases: Sequence[RegionEigenbasis],
    chi: sp.csr_matrix,
) -> MultiscaleSpace:
    """Localize every spectral mode by its patch hat and stack the columns.

    Global-Dirichlet rows are zeroed; columns that vanish entirely are
    dropped (counted in n_dropped).  Remaining columns are scaled to unit
    Euclidean norm, ordered by (patch id, eigenvalue rank).
    """
    is_dirichlet = np.zeros(mesh.n_nodes, dtype=bool)
    is_dirichlet[mesh.boundary_nodes] = True

    rows, cols, vals = [], [], []
    col_region, col_rank, col_eig = [], [], []
    n_cols = 0
    n_dropped = 0
    m_off = 0
    chi_csc = chi.tocsc()
    chi_dense = np.zeros(mesh.n_nodes)
    for basis in bases:
        m_off = max(m_off, basis.eigenvalues.size)
        lo, hi = chi_csc.indptr[basis.region], chi_csc.indptr[basis.region + 1]
        chi_dense[:] = 0.0
        chi_dense[chi_csc.indices[lo:hi]] = chi_csc.data[lo:hi]
        weights = chi_dense[basis.node_ids]
        keep_rows = ~is_dirichlet[basis.node_ids]
        for k in range(basis.eigenvalues.size):
            v = weights * basis.functions[:, k]
            v = np.where(keep_rows, v, 0.0)
            nz = np.nonzero(v)[0]
            if nz.size == 0:
                n_dropped += 1
                continue
            scale = np.linalg.norm(v[nz])
            sign = np.sign(v[nz[np.argmax(np.abs(v[nz]))]])
            rows.append(basis.node_ids[nz])
            cols.append(np.full(nz.size, n_cols))
            vals.append(v[nz] * (sign / scale))
            col_region.append(basis.region)
            col_rank.append(k)
            col_eig.append(basis.eigenvalues[k])
            n_cols += 1
    if n_dropped:
        logger.warning("dropped %d all-zero coarse columns", n_dropped)
    if n_cols == 0:
        raise ValueError("multiscale space is empty")

    phi = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_nodes, n_cols),
    ).tocsr()
    return MultiscaleSpace(
        phi=phi,
        column_region=np.array(col_region, dtype=np.int64),
        column_rank=np.array(col_rank, dtype=np.int64),
        column_eigenvalue=np.array(col_eig),
        m_off=m_off,
        n_dropped=n_dropped,
    )


def build_multiscale_space(
    mesh: FineMesh,
    grid: CoarseGrid,
    perm: PermeabilityField,
    non: Nonlinearity,
    mu_values: Sequence[float],
    u_ref: np.ndarray,
    m_off: int = 3,
    source: Optional[np.ndarray] = None,
) -> MultiscaleSpace:
    """Full offline construction of the coarse space.

    u_ref (full-node vector, typically the auxiliary linear solution) feeds
    the patch-mean state used to average the coefficient across mu.  source,
    if given, enriches every patch with its local particular solution.
    """
    chi = partition_of_unity(mesh, grid)
    factor = pou_gradient_factor(mesh, grid, chi)
    bases = []
    for region in grid.regions:
        beta = region_average_factor(region, non, mu_values, u_ref)
        kbar = perm.values[region.triangle_ids] * beta
        ktilde = kbar * factor[region.triangle_ids]
        snaps = build_snapshots(mesh, region, kbar, mesh.boundary_nodes, source=source)
        bases.append(offline_eigenproblem(mesh, region, snaps, kbar, ktilde, m_off))
    return assemble_multiscale_basis(mesh, grid, bases, chi)
