"""Fine-scale reference solver: backward Euler with Newton linearization.

The semidiscrete system is M dU/dt + F(U) = H with F(U) = A (b(U) * U),
where A is the spatially-weighted stiffness matrix and b acts nodewise.
Each implicit step solves R(U) = U - U_prev + dt M^{-1} (F(U) - H) = 0; the
Newton matrix M + dt A diag(b + u db) is factorized sparsely per iterate;
M^{-1} itself is realized through one cached factorization.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, expand_to_full, solve_elliptic_w0
from .grid import FineMesh
from .model import Nonlinearity, ParameterSet, PermeabilityField, source_term
from .newton import newton_solve

__all__ = [
    "TimeSteppingConfig",
    "Trajectory",
    "FineSystem",
    "build_fine_system",
    "initial_state",
    "assemble_F",
    "JacobianOperator",
    "step_newton",
    "solve_fom",
    "trajectory_to_csv",
]


@dataclass(frozen=True)
class TimeSteppingConfig:
    dt: float = 0.05
    t_final: float = 2.0
    newton_tol: float = 1e-8
    max_newton: int = 25
    steady_tol: Optional[float] = 1e-8  # stop when |U_next - U|/dt falls below; None disables

    def __post_init__(self):
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.dt > self.t_final:
            raise ValueError(f"dt {self.dt} exceeds horizon {self.t_final}")


@dataclass
class Trajectory:
    """Accepted states of one transient solve.

    states holds one column per time level including t=0; for the fine solver
    these are full-node vectors, reduced solvers store their coordinate
    vectors.
    """

    times: np.ndarray
    states: np.ndarray
    newton_iterations: np.ndarray
    wall_time: float
    reached_steady: bool

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def final_state(self) -> np.ndarray:
        return self.states[:, -1]


@dataclass(frozen=True)
class FineSystem:
    """Assembled fine-scale operators reduced to the free nodes."""

    mesh: FineMesh
    perm: PermeabilityField
    source: str
    mass: sp.csr_matrix        # free-node consistent mass
    stiffness: sp.csr_matrix   # free-node spatial stiffness (weight kappa_q)
    load: np.ndarray           # free-node source vector
    free: np.ndarray           # free (interior) node ids
    mass_solve: object         # cached factorization of mass

    @property
    def n_free(self) -> int:
        return self.free.size


def build_fine_system(mesh: FineMesh, perm: PermeabilityField, source: str = "k2pi") -> FineSystem:
    A = assemble_stiffness(mesh, weight=perm.values)
    M = assemble_mass(mesh)
    H = assemble_load(mesh, lambda p: source_term(p, source))
    A_red, H_red, free = apply_dirichlet(A, H, mesh.boundary_nodes)
    M_red = M[free][:, free].tocsr()
    mass_solve = spla.factorized(M_red.tocsc())
    return FineSystem(
        mesh=mesh,
        perm=perm,
        source=source,
        mass=M_red,
        stiffness=A_red,
        load=H_red,
        free=free,
        mass_solve=mass_solve,
    )


def initial_state(system: FineSystem, params: ParameterSet) -> np.ndarray:
    """Full-node initial state from the parameter descriptor."""
    mesh = system.mesh
    if params.u0_kind == "zero":
        return np.zeros(mesh.n_nodes)
    if params.u0_kind == "vector":
        u0 = np.asarray(params.u0_vector, dtype=float)
        if u0.shape != (mesh.n_nodes,):
            raise ValueError(f"u0 vector must have {mesh.n_nodes} entries, got {u0.shape}")
        return u0.copy()
    w0 = solve_elliptic_w0(mesh, system.perm.values, lambda p: source_term(p, params.source))
    return params.u0_scale * w0


def assemble_F(system: FineSystem, u: np.ndarray, mu: float, non: Nonlinearity) -> np.ndarray:
    """Nonlinear term A (b(u) * u) on the free nodes."""
    return system.stiffness @ (non.b(u, mu) * u)


class JacobianOperator(spla.LinearOperator):
    """Action of I + dt M^{-1} A diag(b + u db) at a frozen state.

    Exposes matvec for derivative checks; corrections are solved through the
    equivalent sparse system (M + dt A diag(.)) dx = M rhs.
    """

    def __init__(self, system: FineSystem, u: np.ndarray, mu: float, non: Nonlinearity, dt: float):
        n = system.n_free
        super().__init__(dtype=float, shape=(n, n))
        self.system = system
        self.dt = dt
        self.diag = non.b(u, mu) + u * non.db(u, mu)
        self._lu = None

    def _matvec(self, v):
        av = self.system.stiffness @ (self.diag * v)
        return v + self.dt * self.system.mass_solve(av)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve J dx = rhs (rhs in residual units)."""
        if self._lu is None:
            K = self.system.mass + self.dt * (self.system.stiffness @ sp.diags(self.diag))
            self._lu = spla.splu(K.tocsc())
        return self._lu.solve(self.system.mass @ rhs)


def _residual(system: FineSystem, u, u_prev, mu, non, dt):
    f = assemble_F(system, u, mu, non)
    return u - u_prev + dt * system.mass_solve(f - system.load)


def step_newton(
    system: FineSystem,
    u_prev: np.ndarray,
    mu: float,
    non: Nonlinearity,
    config: TimeSteppingConfig,
    step_index: Optional[int] = None,
):
    """One backward-Euler step from u_prev (free-node vector)."""

    def eval_point(u):
        r = _residual(system, u, u_prev, mu, non, config.dt)
        jac = JacobianOperator(system, u, mu, non, config.dt)
        return r, jac.solve

    return newton_solve(u_prev, eval_point, config.newton_tol, config.max_newton, step_index)


def solve_fom(
    system: FineSystem,
    mu: float,
    u0_full: np.ndarray,
    config: TimeSteppingConfig,
    non: Optional[Nonlinearity] = None,
) -> Trajectory:
    """March the fine problem to the horizon or to steady state.

    Returns full-node states; the wall time covers the stepping loop only.
    """
    non = non or Nonlinearity()
    n_steps = int(round(config.t_final / config.dt))
    u = np.asarray(u0_full, dtype=float)[system.free]
    states = [expand_to_full(system.mesh.n_nodes, system.free, u)]
    times = [0.0]
    iters = []
    steady = False

    t0 = time.perf_counter()
    for n in range(1, n_steps + 1):
        u_new, k = step_newton(system, u, mu, non, config, step_index=n)
        if non.clamp_active(u_new, mu):
            raise OverflowError(
                f"accepted state at step {n} sits on the exponent clamp ({non.clamp}); "
                "the coefficient is no longer resolved"
            )
        increment = float(np.linalg.norm(u_new - u)) / config.dt
        u = u_new
        times.append(n * config.dt)
        states.append(expand_to_full(system.mesh.n_nodes, system.free, u))
        iters.append(k)
        if config.steady_tol is not None and increment < config.steady_tol:
            steady = True
            break
    wall = time.perf_counter() - t0

    return Trajectory(
        times=np.array(times),
        states=np.column_stack(states),
        newton_iterations=np.array(iters, dtype=np.int64),
        wall_time=wall,
        reached_steady=steady,
    )


def trajectory_to_csv(traj: Trajectory, path, probe_nodes=()) -> None:
    """Dump time, probe values and the state norm per accepted level."""
    probe_nodes = list(probe_nodes)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["time"] + [f"u_node_{p}" for p in probe_nodes] + ["state_norm", "newton_iterations"])
        for j, t in enumerate(traj.times):
            u = traj.states[:, j]
            its = "" if j == 0 else int(traj.newton_iterations[j - 1])
            w.writerow(
                [f"{t:.10g}"]
                + [f"{u[p]:.16e}" for p in probe_nodes]
                + [f"{np.linalg.norm(u):.16e}", its]
            )
