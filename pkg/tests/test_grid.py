import numpy as np
import pytest

from glrom.grid import (
    build_coarse_grid,
    build_fine_mesh,
    triangle_areas,
    triangle_centroids,
)


def test_counts_2x3():
    mesh = build_fine_mesh(2, 3)
    assert mesh.n_nodes == 3 * 4
    assert mesh.n_triangles == 2 * 2 * 3
    assert mesh.boundary_nodes.size == 10  # perimeter of a 3x4 node grid
    assert mesh.interior_nodes.size == 2


def test_node_ordering_row_major():
    mesh = build_fine_mesh(3, 2)
    # node (ix, iy) sits at (ix/3, iy/2)
    nid = mesh.node_id(2, 1)
    assert np.allclose(mesh.nodes[nid], [2 / 3, 0.5])


def test_triangles_ccw_and_area_sum(mesh10):
    areas = triangle_areas(mesh10)
    assert np.all(areas > 0)  # counterclockwise orientation
    assert abs(areas.sum() - 1.0) < 1e-14
    assert np.allclose(areas, 0.5 / (10 * 10))


def test_centroids_inside_unit_square(mesh10):
    c = triangle_centroids(mesh10)
    assert c.min() > 0 and c.max() < 1


def test_every_node_in_some_triangle(mesh10):
    assert np.array_equal(np.unique(mesh10.triangles), np.arange(mesh10.n_nodes))


def test_mesh_validation():
    with pytest.raises(ValueError):
        build_fine_mesh(0, 5)


def test_coarse_alignment_required(mesh10):
    with pytest.raises(ValueError):
        build_coarse_grid(mesh10, 3, 3)  # 10 not divisible by 3


def test_interior_patch_shape():
    mesh = build_fine_mesh(20, 20)
    grid = build_coarse_grid(mesh, 10, 10)
    assert grid.n_regions == 11 * 11
    # interior coarse vertex (5,5): patch spans 2x2 coarse cells = 4x4 fine cells
    region = grid.regions[5 * 11 + 5]
    assert region.n_nodes == 5 * 5
    assert region.triangle_ids.size == 2 * 4 * 4
    assert region.perimeter_nodes.size == 16
    assert np.allclose(region.bounds, (0.4, 0.6, 0.4, 0.6))


def test_corner_patch_clipped():
    mesh = build_fine_mesh(20, 20)
    grid = build_coarse_grid(mesh, 4, 4)
    corner = grid.regions[0]
    assert corner.bounds == (0.0, 0.25, 0.0, 0.25)
    assert corner.n_nodes == 6 * 6


def test_patch_nodes_cover_mesh():
    mesh = build_fine_mesh(20, 20)
    grid = build_coarse_grid(mesh, 4, 4)
    covered = np.unique(np.concatenate([r.node_ids for r in grid.regions]))
    assert np.array_equal(covered, np.arange(mesh.n_nodes))
    tris = np.concatenate([r.triangle_ids for r in grid.regions])
    # every triangle appears in at least one patch
    assert np.array_equal(np.unique(tris), np.arange(mesh.n_triangles))


def test_ownership_nearest_vertex_with_ties_down():
    mesh = build_fine_mesh(8, 8)
    grid = build_coarse_grid(mesh, 4, 4)  # ratio 2: fine nodes at half-steps tie
    # fine node (1,0) is equidistant from coarse vertices (0,0) and (1,0)
    assert grid.owner[mesh.node_id(1, 0)] == 0
    assert grid.owner[mesh.node_id(3, 0)] == 1
    # unambiguous case
    assert grid.owner[mesh.node_id(4, 4)] == 2 * 5 + 2


def test_owner_is_a_patch_member():
    mesh = build_fine_mesh(20, 20)
    grid = build_coarse_grid(mesh, 5, 5)
    for i in range(mesh.n_nodes):
        region = grid.regions[grid.owner[i]]
        assert i in region.node_ids


def test_owner_partition_sizes():
    mesh = build_fine_mesh(20, 20)
    grid = build_coarse_grid(mesh, 4, 4)
    counts = np.bincount(grid.owner, minlength=grid.n_regions)
    assert counts.sum() == mesh.n_nodes
    assert np.all(counts > 0)
