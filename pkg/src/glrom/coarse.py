"""Coarse-space transient solver with patchwise interpolation of the
state coefficient.

The fine state is represented as u = Phi z through the multiscale space.
Nodal values of b(u) are reconstructed per vertex patch from a few sampled
entries (one interpolation model per patch); every fine node takes its value
from the patch of its nearest coarse vertex, ties to the smaller id.  The
same reconstruction feeds the Jacobian diagonal, using db = mu * b.

Offline runs of this solver harvest two snapshot families for the global
stage: the coarse coordinates of every accepted step, and the exact fine
nonlinear term assembled once per accepted step.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .fom import FineSystem, TimeSteppingConfig, Trajectory
from .gmsfem import MultiscaleSpace
from .grid import CoarseGrid
from .model import Nonlinearity
from .newton import newton_solve
from .reduction import DeimModel, deim_select, pod

logger = logging.getLogger(__name__)

__all__ = [
    "LocalDeimSet",
    "CoarseSystem",
    "train_local_deim",
    "build_coarse_system",
    "project_initial",
    "reduced_F",
    "solve_coarse",
]


@dataclass(frozen=True)
class LocalDeimSet:
    """Per-patch interpolation models for the nodal coefficient b(u).

    sample_nodes concatenates every patch's interpolation nodes (global fine
    ids); scatter maps the sampled b-values to the reconstructed coefficient
    on the free nodes, each node served by its owning patch.
    """

    models: Tuple[DeimModel, ...]
    sample_nodes: np.ndarray
    region_offsets: np.ndarray  # models[i] samples sample_nodes[offsets[i]:offsets[i+1]]
    scatter: sp.csr_matrix      # (n_free, n_samples)
    l0: int

    @property
    def n_samples(self) -> int:
        return self.sample_nodes.size


@dataclass(frozen=True)
class CoarseSystem:
    """Galerkin reduction of a fine system onto a multiscale space."""

    fine: FineSystem
    space: MultiscaleSpace
    phi_free: sp.csr_matrix  # free rows of the space matrix
    m_reduced: np.ndarray    # Phi^T M Phi, dense
    h_reduced: np.ndarray    # Phi^T H
    m_cho: tuple             # cached Cholesky of m_reduced
    k_cho: tuple             # cached Cholesky of Phi^T A Phi (linear stiffness)

    @property
    def n_columns(self) -> int:
        return self.phi_free.shape[1]


def build_coarse_system(fine: FineSystem, space: MultiscaleSpace) -> CoarseSystem:
    phi_free = space.phi[fine.free].tocsr()
    m_red = (phi_free.T @ (fine.mass @ phi_free)).toarray()
    m_red = 0.5 * (m_red + m_red.T)
    k_red = (phi_free.T @ (fine.stiffness @ phi_free)).toarray()
    k_red = 0.5 * (k_red + k_red.T)
    h_red = phi_free.T @ fine.load
    cho = scipy.linalg.cho_factor(m_red)
    return CoarseSystem(
        fine=fine,
        space=space,
        phi_free=phi_free,
        m_reduced=m_red,
        h_reduced=h_red,
        m_cho=cho,
        k_cho=scipy.linalg.cho_factor(k_red),
    )


def project_initial(csys: CoarseSystem, u0_full: np.ndarray) -> np.ndarray:
    """Energy (Ritz) least-squares coordinates of a fine state.

    The projection weight is the linear stiffness, not the mass: with
    high-contrast coefficients an L2 fit discards exactly the channel-layer
    content that both the transient and the steady limit hinge on.
    """
    u0 = np.asarray(u0_full, dtype=float)[csys.fine.free]
    rhs = csys.phi_free.T @ (csys.fine.stiffness @ u0)
    return scipy.linalg.cho_solve(csys.k_cho, rhs)


def train_local_deim(
    grid: CoarseGrid,
    fine_trajectories: Sequence[Tuple[np.ndarray, float]],
    non: Nonlinearity,
    l0: int,
    free: np.ndarray,
    n_free_nodes: Optional[int] = None,
) -> LocalDeimSet:
    """Fit one interpolation model per patch from fine training states.

    fine_trajectories pairs full-node state matrices (one column per time
    level) with the parameter they were computed at; every column contributes
    one b-snapshot per patch.
    """
    if l0 < 1:
        raise ValueError(f"l0 must be >= 1, got {l0}")
    n_cols = sum(states.shape[1] for states, _ in fine_trajectories)
    if n_cols < l0:
        raise ValueError(f"need at least {l0} training snapshots, got {n_cols}")

    n_nodes = grid.owner.size
    pos_in_free = np.full(n_nodes, -1, dtype=np.int64)
    pos_in_free[free] = np.arange(free.size)

    models = []
    sample_nodes = []
    offsets = [0]
    rows, cols, vals = [], [], []
    for i, region in enumerate(grid.regions):
        local_states = [
            non.b(states[region.node_ids], mu) for states, mu in fine_trajectories
        ]
        snaps = np.hstack(local_states)
        basis = pod(snaps, n_modes=l0)
        if basis.n_modes < l0:
            logger.warning(
                "patch %d: training rank %d below requested %d points",
                region.coarse_node, basis.n_modes, l0,
            )
        model = deim_select(basis)
        models.append(model)

        owned = np.nonzero(grid.owner == region.coarse_node)[0]
        owned_local = np.searchsorted(region.node_ids, owned)
        owned_free = pos_in_free[owned]
        keep = owned_free >= 0
        block = model.projector[owned_local[keep]]
        rows.append(np.repeat(owned_free[keep], model.n_points))
        cols.append(np.tile(offsets[-1] + np.arange(model.n_points), int(keep.sum())))
        vals.append(block.ravel())

        sample_nodes.append(region.node_ids[model.indices])
        offsets.append(offsets[-1] + model.n_points)

    n_samples = offsets[-1]
    scatter = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(free.size, n_samples),
    ).tocsr()
    return LocalDeimSet(
        models=tuple(models),
        sample_nodes=np.concatenate(sample_nodes),
        region_offsets=np.array(offsets, dtype=np.int64),
        scatter=scatter,
        l0=l0,
    )


def _coefficient(
    csys: CoarseSystem,
    z: np.ndarray,
    u: np.ndarray,
    mu: float,
    non: Nonlinearity,
    localdeim: Optional[LocalDeimSet],
    phi_samples: Optional[sp.csr_matrix],
):
    """Nodal b(u) on the free nodes, interpolated patchwise when enabled."""
    if localdeim is None:
        return non.b(u, mu)
    u_samp = phi_samples @ z
    return localdeim.scatter @ non.b(u_samp, mu)


def reduced_F(
    csys: CoarseSystem,
    z: np.ndarray,
    mu: float,
    non: Nonlinearity,
    localdeim: Optional[LocalDeimSet] = None,
) -> np.ndarray:
    """Galerkin-reduced nonlinear term Phi^T A (b(Phi z) * Phi z)."""
    phi_samples = None
    if localdeim is not None:
        phi_samples = csys.space.phi[localdeim.sample_nodes].tocsr()
    u = csys.phi_free @ z
    bhat = _coefficient(csys, z, u, mu, non, localdeim, phi_samples)
    return csys.phi_free.T @ (csys.fine.stiffness @ (bhat * u))


def solve_coarse(
    csys: CoarseSystem,
    mu: float,
    u0_full: np.ndarray,
    config: TimeSteppingConfig,
    non: Optional[Nonlinearity] = None,
    localdeim: Optional[LocalDeimSet] = None,
    harvest_nonlinear: bool = True,
):
    """March the coarse problem; returns (trajectory, F-snapshots).

    Trajectory states are coarse coordinates.  When harvesting, the exact
    fine nonlinear term is assembled once per accepted step (training data
    for the global interpolation basis); columns align with accepted steps.
    """
    non = non or Nonlinearity()
    fine = csys.fine
    phi_samples = None
    if localdeim is not None:
        phi_samples = csys.space.phi[localdeim.sample_nodes].tocsr()

    def eval_point_factory(z_prev):
        def eval_point(z):
            u = csys.phi_free @ z
            bhat = _coefficient(csys, z, u, mu, non, localdeim, phi_samples)
            f_red = csys.phi_free.T @ (fine.stiffness @ (bhat * u))
            r = z - z_prev + config.dt * scipy.linalg.cho_solve(
                csys.m_cho, f_red - csys.h_reduced
            )
            diag = bhat * (1.0 + mu * u)  # b + u db with db = mu b

            def solve(rhs):
                k = csys.phi_free.T @ (fine.stiffness @ sp.diags(diag) @ csys.phi_free)
                jac = csys.m_reduced + config.dt * k.toarray()
                return scipy.linalg.solve(jac, csys.m_reduced @ rhs)

            return r, solve

        return eval_point

    n_steps = int(round(config.t_final / config.dt))
    z = project_initial(csys, u0_full)
    states = [z.copy()]
    times = [0.0]
    iters = []
    f_snaps = []
    steady = False

    t0 = time.perf_counter()
    for n in range(1, n_steps + 1):
        z_new, k = newton_solve(
            z, eval_point_factory(z), config.newton_tol, config.max_newton, step_index=n
        )
        u_new = csys.phi_free @ z_new
        if non.clamp_active(u_new, mu):
            raise OverflowError(
                f"accepted coarse state at step {n} sits on the exponent clamp ({non.clamp})"
            )
        increment = float(np.linalg.norm(z_new - z)) / config.dt
        z = z_new
        times.append(n * config.dt)
        states.append(z.copy())
        iters.append(k)
        if harvest_nonlinear:
            f_snaps.append(fine.stiffness @ (non.b(u_new, mu) * u_new))
        if config.steady_tol is not None and increment < config.steady_tol:
            steady = True
            break
    wall = time.perf_counter() - t0

    traj = Trajectory(
        times=np.array(times),
        states=np.column_stack(states),
        newton_iterations=np.array(iters, dtype=np.int64),
        wall_time=wall,
        reached_steady=steady,
    )
    f_matrix = np.column_stack(f_snaps) if f_snaps else np.zeros((fine.n_free, 0))
    return traj, f_matrix
