"""Global reduced model: trajectory modes over the coarse space plus
interpolatory hyper-reduction of the nonlinear term.

Coarse coordinates are compressed as z ~ Psi alpha.  The fine nonlinear term
F(Phi Psi alpha) is reconstructed from a fixed set of fine rows (the
interpolation rows of a basis fitted to offline F-snapshots); the reduced
term is then closure @ row_values with a precomputed closure matrix, so one
Newton iterate touches exactly those rows no matter how large the fine grid
is.  Row gathers are counted to make that cost contract testable.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .coarse import CoarseSystem
from .fem import assemble_load, expand_to_full
from .fom import TimeSteppingConfig, Trajectory
from .model import Nonlinearity, source_term
from .newton import newton_solve
from .reduction import DeimModel, PodBasis, deim_select, pod

__all__ = ["RowEvaluator", "RomSystem", "build_rom", "rom_nonlinear_term", "solve_rom", "downscale"]


@dataclass
class RowEvaluator:
    """Sampled fine rows of the nonlinear term, restricted to reduced inputs.

    For each interpolation row the stiffness row pattern and the matching
    rows of Phi Psi are stored densely, so evaluating the row needs only the
    reduced coordinates.  gather_count increments once per row per call.
    """

    rows: np.ndarray
    row_cols: tuple
    row_vals: tuple
    gathers: tuple
    gather_count: int = 0

    @property
    def n_rows(self) -> int:
        return self.rows.size

    def reset(self) -> None:
        self.gather_count = 0

    def evaluate(self, alpha: np.ndarray, mu: float, non: Nonlinearity):
        """Row values of F(Phi Psi alpha) and the sampled Jacobian block.

        Returns (values, jac_rows) with jac_rows[k] the derivative of row k
        with respect to alpha.
        """
        m = self.n_rows
        values = np.empty(m)
        jac = np.empty((m, alpha.size))
        clamped = False
        for k in range(m):
            u_loc = self.gathers[k] @ alpha
            b = non.b(u_loc, mu)
            a = self.row_vals[k]
            values[k] = a @ (b * u_loc)
            jac[k] = (a * (b * (1.0 + mu * u_loc))) @ self.gathers[k]
            clamped = clamped or non.clamp_active(u_loc, mu)
            self.gather_count += 1
        return values, jac, clamped


@dataclass
class RomSystem:
    """Precomputed online operators of the global reduced model."""

    coarse: CoarseSystem
    z_basis: PodBasis           # modes over coarse coordinates
    nonlinear_deim: DeimModel   # interpolation of fine F-snapshots
    closure: np.ndarray         # Psi^T Phi^T (basis at interpolation rows)^+
    m_hat: np.ndarray
    h_hat: np.ndarray           # reduced load of the offline source
    phipsi: np.ndarray          # (n_free, n_modes) downscaling map
    row_eval: RowEvaluator
    m_cho: tuple
    newton_visits: int = 0

    @property
    def n_modes(self) -> int:
        return self.z_basis.n_modes

    @property
    def n_interpolation_rows(self) -> int:
        return self.row_eval.n_rows


def build_rom(
    csys: CoarseSystem,
    z_snapshots: np.ndarray,
    f_snapshots: np.ndarray,
    n_modes: int,
    n_rows: int,
) -> RomSystem:
    """Compress coarse snapshots and fit the nonlinear interpolation model.

    n_modes caps the trajectory modes, n_rows the interpolation rows; both
    clip to the numerical rank of their snapshot family (with a warning from
    the compression layer).
    """
    z_basis = pod(z_snapshots, n_modes=n_modes)

    f_basis = pod(f_snapshots, n_modes=n_rows)
    deim = deim_select(f_basis)

    psi = z_basis.modes
    phipsi = np.asarray(csys.phi_free @ psi)
    closure = phipsi.T @ deim.projector
    m_hat = psi.T @ csys.m_reduced @ psi
    m_hat = 0.5 * (m_hat + m_hat.T)
    h_hat = psi.T @ csys.h_reduced

    stiff = csys.fine.stiffness
    cols, vals, gathers = [], [], []
    for r in deim.indices:
        row = stiff.getrow(int(r))
        cols.append(row.indices.copy())
        vals.append(row.data.copy())
        gathers.append(phipsi[row.indices])
    row_eval = RowEvaluator(
        rows=deim.indices.copy(), row_cols=tuple(cols), row_vals=tuple(vals), gathers=tuple(gathers)
    )
    return RomSystem(
        coarse=csys,
        z_basis=z_basis,
        nonlinear_deim=deim,
        closure=closure,
        m_hat=m_hat,
        h_hat=h_hat,
        phipsi=phipsi,
        row_eval=row_eval,
        m_cho=scipy.linalg.cho_factor(m_hat),
    )


def rom_nonlinear_term(rom: RomSystem, alpha: np.ndarray, mu: float, non: Nonlinearity) -> np.ndarray:
    """Hyper-reduced nonlinear term closure @ rows(alpha)."""
    values, _, _ = rom.row_eval.evaluate(alpha, mu, non)
    return rom.closure @ values


def _reduced_load(rom: RomSystem, source: Optional[str]) -> np.ndarray:
    if source is None or source == rom.coarse.fine.source:
        return rom.h_hat
    fine = rom.coarse.fine
    load = assemble_load(fine.mesh, lambda p: source_term(p, source))[fine.free]
    return rom.z_basis.modes.T @ (rom.coarse.phi_free.T @ load)


def initial_coefficients(rom: RomSystem, u0_full: np.ndarray) -> np.ndarray:
    """Mass-weighted projection through the coarse space onto the modes."""
    u0 = np.asarray(u0_full, dtype=float)[rom.coarse.fine.free]
    z0 = scipy.linalg.cho_solve(
        rom.coarse.m_cho, rom.coarse.phi_free.T @ (rom.coarse.fine.mass @ u0)
    )
    rhs = rom.z_basis.modes.T @ (rom.coarse.m_reduced @ z0)
    return scipy.linalg.cho_solve(rom.m_cho, rhs)


def solve_rom(
    rom: RomSystem,
    mu: float,
    u0_full: np.ndarray,
    config: TimeSteppingConfig,
    non: Optional[Nonlinearity] = None,
    source: Optional[str] = None,
) -> Trajectory:
    """March the reduced model; states are mode coefficients.

    The wall clock covers the stepping loop only; every Newton iterate costs
    one batch of interpolation-row gathers (shared by residual and
    Jacobian).  The exponent clamp is checked at the sampled entries, the
    only fine values the online phase sees.
    """
    non = non or Nonlinearity()
    h_hat = _reduced_load(rom, source)
    n_steps = int(round(config.t_final / config.dt))

    def eval_point_factory(a_prev):
        def eval_point(alpha):
            rom.newton_visits += 1
            values, jac_rows, clamped = rom.row_eval.evaluate(alpha, mu, non)
            eval_point.clamped = clamped
            f_hat = rom.closure @ values
            r = alpha - a_prev + config.dt * scipy.linalg.cho_solve(rom.m_cho, f_hat - h_hat)

            def solve(rhs):
                jac = rom.m_hat + config.dt * rom.closure @ jac_rows
                return scipy.linalg.solve(jac, rom.m_hat @ rhs)

            return r, solve

        eval_point.clamped = False
        return eval_point

    alpha = initial_coefficients(rom, u0_full)
    states = [alpha.copy()]
    times = [0.0]
    iters = []
    steady = False

    t0 = time.perf_counter()
    for n in range(1, n_steps + 1):
        ev = eval_point_factory(alpha)
        a_new, k = newton_solve(alpha, ev, config.newton_tol, config.max_newton, step_index=n)
        if ev.clamped:
            raise OverflowError(
                f"sampled state at step {n} sits on the exponent clamp ({non.clamp})"
            )
        increment = float(np.linalg.norm(a_new - alpha)) / config.dt
        alpha = a_new
        times.append(n * config.dt)
        states.append(alpha.copy())
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


def downscale(rom: RomSystem, alpha: np.ndarray) -> np.ndarray:
    """Fine full-node representation Phi Psi alpha of reduced coordinates."""
    fine = rom.coarse.fine
    return expand_to_full(fine.mesh.n_nodes, fine.free, rom.phipsi @ alpha)


def reduced_trajectory_to_csv(rom: RomSystem, traj: Trajectory, path, probe_nodes=()) -> None:
    """Dump mode coefficients plus downscaled probe values per time level."""
    probe_nodes = list(probe_nodes)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["time"]
            + [f"alpha_{k}" for k in range(rom.n_modes)]
            + [f"u_node_{p}" for p in probe_nodes]
        )
        for j, t in enumerate(traj.times):
            alpha = traj.states[:, j]
            u = downscale(rom, alpha) if probe_nodes else None
            w.writerow(
                [f"{t:.10g}"]
                + [f"{a:.16e}" for a in alpha]
                + [f"{u[p]:.16e}" for p in probe_nodes]
            )
