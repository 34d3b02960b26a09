import numpy as np
import pytest
import scipy.linalg

from glrom.fem import (
    apply_dirichlet,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    expand_to_full,
    solve_elliptic_w0,
)
from glrom.grid import build_coarse_grid, build_fine_mesh
from glrom.model import channel_permeability, source_term


def test_stiffness_1x1_kernel():
    mesh = build_fine_mesh(1, 1)
    A = assemble_stiffness(mesh)
    assert A.shape == (4, 4)
    assert np.allclose(np.asarray(A.sum(axis=1)).ravel(), 0.0, atol=1e-14)


def test_stiffness_energy_of_linear_field(mesh10):
    # u(x,y) = x has |grad u|^2 = 1, so u^T A u = area = 1
    u = mesh10.nodes[:, 0]
    A = assemble_stiffness(mesh10)
    assert abs(u @ (A @ u) - 1.0) < 1e-10


def test_stiffness_row_sums_vanish(mesh20):
    A = assemble_stiffness(mesh20, weight=np.linspace(1, 3, mesh20.n_triangles))
    rs = np.abs(np.asarray(A.sum(axis=1))).max()
    assert rs < 1e-10 * np.abs(A.data).max()


def test_stiffness_weight_scaling(mesh10):
    A1 = assemble_stiffness(mesh10)
    A3 = assemble_stiffness(mesh10, weight=np.full(mesh10.n_triangles, 3.0))
    assert np.allclose(A3.toarray(), 3.0 * A1.toarray(), rtol=1e-14)


def test_assembly_linear_in_weight(mesh10, rng):
    w1 = rng.uniform(0.5, 2.0, mesh10.n_triangles)
    w2 = rng.uniform(0.5, 2.0, mesh10.n_triangles)
    A = assemble_stiffness(mesh10, weight=w1 + w2)
    A12 = assemble_stiffness(mesh10, weight=w1) + assemble_stiffness(mesh10, weight=w2)
    assert abs(A - A12).max() < 1e-12 * np.abs(A.data).max()


def test_stiffness_positive_weight_required(mesh10):
    w = np.ones(mesh10.n_triangles)
    w[3] = 0.0
    with pytest.raises(ValueError):
        assemble_stiffness(mesh10, weight=w)
    with pytest.raises(ValueError):
        assemble_mass(mesh10, weight=w[:-1])


def test_regional_assembly_sums_to_global(mesh20):
    """Disjoint triangle partitions assemble to exactly the global matrix."""
    grid = build_coarse_grid(mesh20, 4, 4)
    w = 1.0 + np.arange(mesh20.n_triangles, dtype=float) / mesh20.n_triangles
    total = None
    for cell in range(16):
        cy, cx = divmod(cell, 4)
        # triangles of one coarse cell: 5x5 fine cells each
        tx = np.arange(cx * 5, cx * 5 + 5)
        ty = np.arange(cy * 5, cy * 5 + 5)
        TX, TY = np.meshgrid(tx, ty)
        cells = TY.ravel() * 20 + TX.ravel()
        tids = np.concatenate([2 * cells, 2 * cells + 1])
        part = assemble_stiffness(mesh20, weight=w[tids], triangle_ids=tids)
        total = part if total is None else total + part
    ref = assemble_stiffness(mesh20, weight=w)
    assert abs(total - ref).max() < 1e-12 * np.abs(ref.data).max()


def test_mass_total_and_quadratic_form():
    mesh = build_fine_mesh(100, 100)
    M = assemble_mass(mesh)
    assert abs(M.sum() - 1.0) < 1e-12
    ones = np.ones(mesh.n_nodes)
    assert abs(ones @ (M @ ones) - 1.0) < 1e-12
    x = mesh.nodes[:, 0]
    assert abs(x @ (M @ x) - 1.0 / 3.0) < 2e-4


def test_load_partition_of_unity(mesh20):
    load = assemble_load(mesh20, lambda p: np.ones(p.shape[0]))
    assert abs(load.sum() - 1.0) < 1e-13
    zero = assemble_load(mesh20, lambda p: np.zeros(p.shape[0]))
    assert np.all(zero == 0.0)


def test_load_sine_source_integral():
    # integral of sin(2 pi x) sin(2 pi y) over the unit square is 0
    mesh = build_fine_mesh(100, 100)
    load = assemble_load(mesh, lambda p: source_term(p, "k2pi"))
    assert abs(load.sum() - 1.0) < 1e-6


def test_load_exact_for_linear_source(mesh10):
    load = assemble_load(mesh10, lambda p: p[:, 0])
    assert abs(load.sum() - 0.5) < 1e-13  # integral of x


def test_dirichlet_reduction_counts():
    mesh = build_fine_mesh(2, 2)
    A = assemble_stiffness(mesh)
    A_red, rhs_red, free = apply_dirichlet(A, np.ones(mesh.n_nodes), mesh.boundary_nodes)
    assert A_red.shape == (1, 1)
    assert free.tolist() == [4]

    tiny = build_fine_mesh(1, 1)
    with pytest.raises(ValueError):
        apply_dirichlet(assemble_stiffness(tiny), np.ones(4), tiny.boundary_nodes)


def test_reduced_stiffness_spd(mesh10):
    A = assemble_stiffness(mesh10)
    A_red, _, _ = apply_dirichlet(A, np.zeros(mesh10.n_nodes), mesh10.boundary_nodes)
    lam = scipy.linalg.eigvalsh(A_red.toarray())
    assert lam[0] > 0


def test_expand_to_full_roundtrip(mesh10, rng):
    free = mesh10.interior_nodes
    u = rng.standard_normal(free.size)
    full = expand_to_full(mesh10.n_nodes, free, u)
    assert np.array_equal(full[free], u)
    assert np.all(full[mesh10.boundary_nodes] == 0.0)


def test_w0_matches_dense_oracle(mesh10):
    perm = np.ones(mesh10.n_triangles)
    w0 = solve_elliptic_w0(mesh10, perm, lambda p: source_term(p, "k2pi"))

    A = assemble_stiffness(mesh10, weight=perm)
    load = assemble_load(mesh10, lambda p: source_term(p, "k2pi"))
    A_red, rhs, free = apply_dirichlet(A, load, mesh10.boundary_nodes)
    oracle = scipy.linalg.lu_solve(scipy.linalg.lu_factor(A_red.toarray()), rhs)
    assert np.max(np.abs(w0[free] - oracle)) < 1e-8
    assert np.all(w0[mesh10.boundary_nodes] == 0.0)


def test_w0_trivial_and_positive(mesh20):
    zero = solve_elliptic_w0(mesh20, np.ones(mesh20.n_triangles), lambda p: np.zeros(p.shape[0]))
    assert np.all(zero == 0.0)
    # discrete maximum principle on uniform coefficient, h = 1
    w0 = solve_elliptic_w0(mesh20, np.ones(mesh20.n_triangles), lambda p: np.ones(p.shape[0]))
    assert w0.min() >= -1e-12


def test_w0_with_contrast_field(mesh20):
    perm = channel_permeability(mesh20, eta=1e6)
    w0 = solve_elliptic_w0(mesh20, perm.values, lambda p: source_term(p, "k2pi"))
    assert np.isfinite(w0).all()
    assert w0.max() > 0
