import numpy as np
import pytest

from glrom.reduction import DeimModel, PodBasis, deim_apply, deim_select, pod


def greedy_oracle(psi):
    """Literal transcription of the interpolation-point greedy."""
    indices = [int(np.argmax(np.abs(psi[:, 0])))]
    for k in range(1, psi.shape[1]):
        P = psi[indices, :k]
        w = np.linalg.solve(P, psi[indices, k])
        r = psi[:, k] - psi[:, :k] @ w
        indices.append(int(np.argmax(np.abs(r))))
    return indices


def test_pod_single_column():
    c = np.array([3.0, 0.0, 4.0])
    basis = pod(c[:, None])
    assert basis.n_modes == 1
    assert abs(basis.eigenvalues[0] - 25.0) < 1e-12
    assert np.allclose(np.abs(basis.modes[:, 0]), np.abs(c) / 5.0)


def test_pod_repeated_column():
    e1 = np.zeros(5)
    e1[0] = 1.0
    basis = pod(np.column_stack([e1, e1]))
    assert basis.n_modes == 1
    assert abs(basis.eigenvalues[0] - 2.0) < 1e-12
    assert np.allclose(np.abs(basis.modes[:, 0]), e1)


def test_pod_matches_svd_oracle(rng):
    for _ in range(20):
        F = rng.standard_normal((6, 4))
        basis = pod(F)
        U, s, _ = np.linalg.svd(F, full_matrices=False)
        assert np.allclose(basis.eigenvalues, s**2, rtol=1e-10)
        for k in range(basis.n_modes):
            dot = abs(basis.modes[:, k] @ U[:, k])
            assert abs(dot - 1.0) < 1e-8  # equal up to sign


def test_pod_orthonormal(rng):
    F = rng.standard_normal((40, 12))
    basis = pod(F)
    G = basis.modes.T @ basis.modes
    assert np.max(np.abs(G - np.eye(basis.n_modes))) < 1e-10


def test_pod_eckart_young(rng):
    """Residual Frobenius norm equals the tail eigenvalue sum."""
    for _ in range(20):
        F = rng.standard_normal((30, 10))
        lam_all = np.sort(np.linalg.eigvalsh(F.T @ F))[::-1]
        for m in (1, 3, 7):
            basis = pod(F, n_modes=m)
            resid = F - basis.modes @ (basis.modes.T @ F)
            tail = lam_all[m:].sum()
            assert abs(np.linalg.norm(resid, "fro") ** 2 - tail) <= 1e-8 * max(tail, 1e-30)


def test_pod_energy_fraction(rng):
    F = np.diag([4.0, 2.0, 1.0, 0.5]) @ rng.standard_normal((4, 4))
    full = pod(F)
    frac = full.eigenvalues[0] / full.eigenvalues.sum()
    basis = pod(F, energy=frac - 1e-12)
    assert basis.n_modes == 1
    assert pod(F, energy=1.0).n_modes == full.n_modes


def test_pod_rejects_zero_matrix():
    with pytest.raises(ValueError):
        pod(np.zeros((5, 3)))


def test_pod_mode_count_clipped(rng, caplog):
    F = rng.standard_normal((8, 3)) @ np.ones((3, 6))  # rank <= 3
    basis = pod(F, n_modes=5)
    assert basis.n_modes <= 3


def test_deim_unit_vector():
    psi = np.zeros((5, 1))
    psi[2, 0] = 1.0
    model = deim_select(psi)
    assert model.indices.tolist() == [2]


def test_deim_identity_columns():
    model = deim_select(np.eye(3))
    assert model.indices.tolist() == [0, 1, 2]


def test_deim_two_column_hand_case():
    psi1 = np.array([1.0, 2.0, 3.0]) / np.sqrt(14.0)
    psi2 = np.array([1.0, 0.0, 0.0])
    psi = np.column_stack([psi1, psi2])
    model = deim_select(psi)
    assert model.indices[0] == 2
    # residual by hand: w = psi2[2]/psi1[2] = 0, r = psi2
    assert model.indices[1] == 0


def test_deim_matches_greedy_oracle(rng):
    for _ in range(20):
        psi = pod(rng.standard_normal((50, 8))).modes
        model = deim_select(psi)
        assert model.indices.tolist() == greedy_oracle(psi)


def test_deim_indices_distinct_and_deterministic(rng):
    psi = pod(rng.standard_normal((30, 6))).modes
    a = deim_select(psi)
    b = deim_select(psi)
    assert len(set(a.indices.tolist())) == a.indices.size
    assert np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.projector, b.projector)


def test_deim_tie_break_smallest_index():
    psi = np.array([[0.5], [0.5], [-0.5]])
    model = deim_select(psi)
    assert model.indices[0] == 0


def test_deim_degenerate_basis_rejected():
    psi = np.zeros((4, 2))
    psi[1, 0] = 1.0  # second column identically zero
    with pytest.raises(ValueError):
        deim_select(psi)


def test_deim_interpolates_exactly(rng):
    psi = pod(rng.standard_normal((50, 8))).modes
    model = deim_select(psi)
    f = rng.standard_normal(50)
    f_tilde = deim_apply(model, f[model.indices])
    scale = np.abs(f[model.indices]).max()
    assert np.max(np.abs(f_tilde[model.indices] - f[model.indices])) < 1e-10 * scale


def test_deim_exact_on_span(rng):
    for _ in range(20):
        F = rng.standard_normal((50, 8))
        model = deim_select(pod(F))
        f = F @ rng.standard_normal(8)  #  in the snapshot span
        f_tilde = deim_apply(model, f[model.indices])
        assert np.linalg.norm(f_tilde - f) < 1e-10 * np.linalg.norm(f)


def test_deim_full_selection_reproduces(rng):
    F = rng.standard_normal((6, 6))
    model = deim_select(pod(F))
    f = rng.standard_normal(6)
    f_tilde = deim_apply(model, f[model.indices])
    assert np.allclose(f_tilde, f, atol=1e-9)


def test_deim_error_bound(rng):
    """|f - f~| <= |(P^T Psi)^-1| * |(I - Psi Psi^T) f|."""
    for _ in range(10):
        psi = pod(rng.standard_normal((40, 5))).modes
        model = deim_select(psi)
        f = rng.standard_normal(40)
        f_tilde = deim_apply(model, f[model.indices])
        ortho = f - psi @ (psi.T @ f)
        bound = np.linalg.norm(np.linalg.inv(psi[model.indices]), 2) * np.linalg.norm(ortho)
        assert np.linalg.norm(f - f_tilde) <= bound * (1 + 1e-10) + 1e-12


def test_deim_accepts_pod_basis(rng):
    F = rng.standard_normal((20, 4))
    basis = pod(F)
    assert isinstance(basis, PodBasis)
    model = deim_select(basis)
    assert isinstance(model, DeimModel)
    assert model.n_points == basis.n_modes
    assert np.isfinite(model.condition)


def test_deim_apply_dimension_check(rng):
    model = deim_select(pod(rng.standard_normal((20, 4))))
    with pytest.raises(ValueError):
        deim_apply(model, np.zeros(3))
