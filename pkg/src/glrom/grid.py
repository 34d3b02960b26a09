"""Structured triangulations of the unit square and coarse vertex patches.

The fine mesh is a uniform nx-by-ny grid of squares, each split along the
bottom-left to top-right diagonal into two triangles.  Node ids run row-major
from the bottom-left corner.  The coarse grid overlays an Nx-by-Ny grid of
square cells on the same domain; every coarse vertex owns a patch (the union
of coarse cells touching it), which is always an axis-aligned rectangle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FineMesh",
    "CoarseGrid",
    "Region",
    "build_fine_mesh",
    "build_coarse_grid",
    "triangle_areas",
    "triangle_centroids",
    "dump_mesh_csv",
]


@dataclass(frozen=True)
class FineMesh:
    """P1 triangulation of [0,1]^2.

    Attributes
    ----------
    nx, ny : int
        Number of square cells per direction.
    nodes : (n_nodes, 2) float array
        Vertex coordinates, row-major (x fastest).
    triangles : (n_triangles, 3) int array
        Vertex ids per triangle, counterclockwise.
    boundary_nodes : int array
        Sorted ids of nodes on the outer boundary.
    """

    nx: int
    ny: int
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.nonzero(mask)[0]

    def node_id(self, ix, iy):
        return np.asarray(iy) * (self.nx + 1) + np.asarray(ix)


@dataclass(frozen=True)
class Region:
    """Vertex patch of one coarse node: an axis-aligned rectangle of fine cells."""

    coarse_node: int
    cx: int
    cy: int
    bounds: tuple[float, float, float, float]  # x_lo, x_hi, y_lo, y_hi
    node_ids: np.ndarray       # sorted fine node ids covering the patch
    triangle_ids: np.ndarray   # fine triangles inside the patch
    perimeter_nodes: np.ndarray  # fine nodes on the patch boundary

    @property
    def n_nodes(self) -> int:
        return self.node_ids.size


@dataclass(frozen=True)
class CoarseGrid:
    """Coarse overlay grid plus the vertex patches of every coarse node."""

    nx: int
    ny: int
    nodes: np.ndarray           # (n_coarse_nodes, 2) coarse vertex coordinates
    regions: tuple[Region, ...]
    owner: np.ndarray           # fine node id -> owning region (nearest coarse vertex)

    @property
    def n_regions(self) -> int:
        return len(self.regions)


def build_fine_mesh(nx: int, ny: int) -> FineMesh:
    """Triangulate the unit square with nx*ny cells, two triangles each.

    Each cell is split along its bottom-left to top-right diagonal; both
    triangles are oriented counterclockwise.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"mesh needs at least one cell per direction, got {nx}x{ny}")
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny))
    ix = ix.ravel()
    iy = iy.ravel()
    n00 = iy * (nx + 1) + ix
    n10 = n00 + 1
    n01 = n00 + (nx + 1)
    n11 = n01 + 1
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    on_edge = (
        (nodes[:, 0] == 0.0)
        | (nodes[:, 0] == 1.0)
        | (nodes[:, 1] == 0.0)
        | (nodes[:, 1] == 1.0)
    )
    boundary = np.nonzero(on_edge)[0]
    return FineMesh(nx=nx, ny=ny, nodes=nodes, triangles=triangles, boundary_nodes=boundary)


def triangle_areas(mesh: FineMesh) -> np.ndarray:
    p = mesh.nodes[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangle_centroids(mesh: FineMesh) -> np.ndarray:
    return mesh.nodes[mesh.triangles].mean(axis=1)


def _nearest_coarse_index(fine_cells: int, coarse_cells: int, idx: np.ndarray) -> np.ndarray:
    # Round fine index idx/ratio to the nearest coarse vertex, half-ties to the
    # lower vertex so that ties resolve to the smallest coarse node id.
    ratio = fine_cells // coarse_cells
    return (2 * idx + ratio - 1) // (2 * ratio)


def build_coarse_grid(mesh: FineMesh, nx: int, ny: int) -> CoarseGrid:
    """Overlay an nx-by-ny coarse grid and build every vertex patch.

    The fine cell counts must be divisible by the coarse ones so coarse cell
    edges land on fine mesh lines.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"coarse grid needs at least one cell per direction, got {nx}x{ny}")
    if mesh.nx % nx or mesh.ny % ny:
        raise ValueError(
            f"coarse cells must align with fine ones: {mesh.nx}x{mesh.ny} fine vs {nx}x{ny} coarse"
        )
    rx = mesh.nx // nx
    ry = mesh.ny // ny

    cxs = np.linspace(0.0, 1.0, nx + 1)
    cys = np.linspace(0.0, 1.0, ny + 1)
    CX, CY = np.meshgrid(cxs, cys)
    coarse_nodes = np.column_stack([CX.ravel(), CY.ravel()])

    regions = []
    for cy in range(ny + 1):
        for cx in range(nx + 1):
            # Union of coarse cells touching vertex (cx, cy), clipped to the domain.
            ix_lo = max(cx - 1, 0) * rx
            ix_hi = min(cx + 1, nx) * rx
            iy_lo = max(cy - 1, 0) * ry
            iy_hi = min(cy + 1, ny) * ry

            gx = np.arange(ix_lo, ix_hi + 1)
            gy = np.arange(iy_lo, iy_hi + 1)
            GX, GY = np.meshgrid(gx, gy)
            node_ids = mesh.node_id(GX.ravel(), GY.ravel())
            node_ids.sort()

            tx = np.arange(ix_lo, ix_hi)
            ty = np.arange(iy_lo, iy_hi)
            TX, TY = np.meshgrid(tx, ty)
            cells = TY.ravel() * mesh.nx + TX.ravel()
            triangle_ids = np.sort(np.concatenate([2 * cells, 2 * cells + 1]))

            on_perim = (
                (GX.ravel() == ix_lo)
                | (GX.ravel() == ix_hi)
                | (GY.ravel() == iy_lo)
                | (GY.ravel() == iy_hi)
            )
            perimeter = np.sort(mesh.node_id(GX.ravel()[on_perim], GY.ravel()[on_perim]))

            h = 1.0 / mesh.nx
            k = 1.0 / mesh.ny
            regions.append(
                Region(
                    coarse_node=cy * (nx + 1) + cx,
                    cx=cx,
                    cy=cy,
                    bounds=(ix_lo * h, ix_hi * h, iy_lo * k, iy_hi * k),
                    node_ids=node_ids,
                    triangle_ids=triangle_ids,
                    perimeter_nodes=perimeter,
                )
            )

    fine_ix = np.arange(mesh.n_nodes) % (mesh.nx + 1)
    fine_iy = np.arange(mesh.n_nodes) // (mesh.nx + 1)
    own_cx = _nearest_coarse_index(mesh.nx, nx, fine_ix)
    own_cy = _nearest_coarse_index(mesh.ny, ny, fine_iy)
    owner = own_cy * (nx + 1) + own_cx

    return CoarseGrid(nx=nx, ny=ny, nodes=coarse_nodes, regions=tuple(regions), owner=owner)


def dump_mesh_csv(mesh: FineMesh, node_path, triangle_path) -> None:
    """Debug dump of the node and triangle tables; not a stability contract."""
    with open(node_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["node", "x", "y", "on_boundary"])
        on_b = np.zeros(mesh.n_nodes, dtype=int)
        on_b[mesh.boundary_nodes] = 1
        for i, (x, y) in enumerate(mesh.nodes):
            w.writerow([i, repr(float(x)), repr(float(y)), on_b[i]])
    with open(triangle_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["triangle", "v0", "v1", "v2"])
        for t, (a, b, c) in enumerate(mesh.triangles):
            w.writerow([t, a, b, c])
